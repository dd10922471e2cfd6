//! Mixed search spaces and their discretization.
//!
//! Dimensions are stored in a fixed layout: continuous first, then binary
//! (two candidates), then wider discrete dimensions. A discrete coordinate
//! snaps to the candidate whose threshold interval contains it, where the
//! thresholds are the midpoints between consecutive candidates and each
//! interval is closed on the right.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One coordinate of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub enum VariableSpec {
    Continuous,
    /// Strictly ascending candidate values, at least two.
    Discrete(Vec<f64>),
}

impl VariableSpec {
    pub fn discrete(candidates: Vec<f64>) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::Config(format!(
                "a discrete variable needs at least two candidates, got {}",
                candidates.len()
            )));
        }
        if candidates.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("discrete candidates must be finite".into()));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "discrete candidates must be strictly ascending".into(),
            ));
        }
        Ok(Self::Discrete(candidates))
    }

    /// Consecutive integers `lo..=hi`.
    pub fn int_range(lo: i64, hi: i64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::Config(format!("empty integer range [{lo}, {hi}]")));
        }
        Self::discrete((lo..=hi).map(|v| v as f64).collect())
    }

    pub fn binary() -> Self {
        Self::Discrete(vec![0.0, 1.0])
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self, Self::Continuous)
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Self::Discrete(c) if c.len() == 2)
    }

    pub fn candidates(&self) -> Option<&[f64]> {
        match self {
            Self::Continuous => None,
            Self::Discrete(c) => Some(c),
        }
    }

    fn layout_rank(&self) -> u8 {
        match self {
            Self::Continuous => 0,
            Self::Discrete(c) if c.len() == 2 => 1,
            Self::Discrete(_) => 2,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpecRepr {
    Tagged(TaggedSpec),
    IntRange { int_range: [i64; 2] },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum TaggedSpec {
    Continuous,
    Discrete { candidates: Vec<f64> },
}

impl TryFrom<SpecRepr> for VariableSpec {
    type Error = Error;

    fn try_from(repr: SpecRepr) -> Result<Self> {
        match repr {
            SpecRepr::Tagged(TaggedSpec::Continuous) => Ok(Self::Continuous),
            SpecRepr::Tagged(TaggedSpec::Discrete { candidates }) => Self::discrete(candidates),
            SpecRepr::IntRange { int_range: [lo, hi] } => Self::int_range(lo, hi),
        }
    }
}

impl From<VariableSpec> for SpecRepr {
    fn from(spec: VariableSpec) -> Self {
        match spec {
            VariableSpec::Continuous => SpecRepr::Tagged(TaggedSpec::Continuous),
            VariableSpec::Discrete(candidates) => {
                SpecRepr::Tagged(TaggedSpec::Discrete { candidates })
            }
        }
    }
}

/// Midpoints between consecutive candidates, per discrete dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    per_dim: Vec<Option<Vec<f64>>>,
}

impl Thresholds {
    /// Thresholds of dimension `j`; `None` for continuous dimensions.
    pub fn of(&self, j: usize) -> Option<&[f64]> {
        self.per_dim.get(j).and_then(|t| t.as_deref())
    }
}

/// A validated mixed search space in continuous|binary|integer layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VariableSpec>", into = "Vec<VariableSpec>")]
pub struct SearchSpace {
    specs: Vec<VariableSpec>,
    /// `user_index[k]` is the caller's position of internal dimension `k`.
    user_index: Vec<usize>,
    n_co: usize,
    n_bi: usize,
    thresholds: Thresholds,
}

impl SearchSpace {
    /// Builds a space from specs in any order; they are stably reordered
    /// into the continuous|binary|integer layout.
    pub fn new(specs: Vec<VariableSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("search space needs at least one dimension".into()));
        }
        let mut user_index: Vec<usize> = (0..specs.len()).collect();
        user_index.sort_by_key(|&i| specs[i].layout_rank());
        let ordered: Vec<VariableSpec> = user_index.iter().map(|&i| specs[i].clone()).collect();

        let n_co = ordered.iter().filter(|s| s.is_continuous()).count();
        let n_bi = ordered.iter().filter(|s| s.is_binary()).count();
        let per_dim = ordered
            .iter()
            .map(|s| {
                s.candidates()
                    .map(|c| c.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
            })
            .collect();
        Ok(Self {
            specs: ordered,
            user_index,
            n_co,
            n_bi,
            thresholds: Thresholds { per_dim },
        })
    }

    /// `n_co` continuous dims, `n_bi` binary dims and `n_int` integer dims
    /// with candidates `lo..=hi`.
    pub fn mixed(n_co: usize, n_bi: usize, n_int: usize, int_range: (i64, i64)) -> Result<Self> {
        let mut specs = vec![VariableSpec::Continuous; n_co];
        specs.extend(std::iter::repeat_n(VariableSpec::binary(), n_bi));
        let int_spec = VariableSpec::int_range(int_range.0, int_range.1)?;
        specs.extend(std::iter::repeat_n(int_spec, n_int));
        Self::new(specs)
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.n_co
    }

    pub fn n_binary(&self) -> usize {
        self.n_bi
    }

    pub fn n_integer(&self) -> usize {
        self.specs.len() - self.n_co - self.n_bi
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn spec(&self, j: usize) -> &VariableSpec {
        &self.specs[j]
    }

    pub fn is_discrete(&self, j: usize) -> bool {
        !self.specs[j].is_continuous()
    }

    pub fn is_binary(&self, j: usize) -> bool {
        self.specs[j].is_binary()
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    fn discrete_thresholds(&self, j: usize) -> Result<&[f64]> {
        if j >= self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: j,
            });
        }
        self.thresholds.of(j).ok_or(Error::NotDiscrete(j))
    }

    /// Maps a vector given in the caller's order into the internal layout.
    pub fn from_user_order(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        Ok(self.user_index.iter().map(|&i| v[i]).collect())
    }

    /// Inverse of [`SearchSpace::from_user_order`].
    pub fn to_user_order(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = vec![0.0; v.len()];
        for (k, &i) in self.user_index.iter().enumerate() {
            out[i] = v[k];
        }
        Ok(out)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Discretizes a continuous vector (internal layout).
    pub fn encode(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        Ok(v
            .iter()
            .enumerate()
            .map(|(j, &x)| self.encode_coord(j, x))
            .collect())
    }

    #[inline]
    pub fn encode_coord(&self, j: usize, x: f64) -> f64 {
        match (&self.specs[j], self.thresholds.of(j)) {
            (VariableSpec::Discrete(candidates), Some(thr)) => {
                candidates[thr.partition_point(|&l| l < x)]
            }
            _ => x,
        }
    }

    /// The threshold of dimension `j` closest to `m`; ties go to the lower one.
    pub fn nearest_threshold(&self, j: usize, m: f64) -> Result<f64> {
        let thr = self.discrete_thresholds(j)?;
        let k = thr.partition_point(|&l| l < m);
        Ok(if k == 0 {
            thr[0]
        } else if k == thr.len() || m - thr[k - 1] <= thr[k] - m {
            thr[k - 1]
        } else {
            thr[k]
        })
    }

    /// Adjacent thresholds `(ℓ_low, ℓ_up)` with `ℓ_low < m ≤ ℓ_up`.
    ///
    /// Fails with [`Error::EdgeCase`] when `m ≤ ℓ_first` or `m > ℓ_last`.
    pub fn low_up_thresholds(&self, j: usize, m: f64) -> Result<(f64, f64)> {
        let thr = self.discrete_thresholds(j)?;
        let k = thr.partition_point(|&l| l < m);
        if k == 0 || k == thr.len() {
            return Err(Error::EdgeCase { dim: j, mean: m });
        }
        Ok((thr[k - 1], thr[k]))
    }

    /// True when `m` lies in `(ℓ_first, ℓ_last]` of dimension `j`.
    pub fn is_interior(&self, j: usize, m: f64) -> bool {
        match self.thresholds.of(j) {
            Some(thr) => m > thr[0] && m <= thr[thr.len() - 1],
            None => false,
        }
    }
}

impl TryFrom<Vec<VariableSpec>> for SearchSpace {
    type Error = Error;

    fn try_from(specs: Vec<VariableSpec>) -> Result<Self> {
        Self::new(specs)
    }
}

impl From<SearchSpace> for Vec<VariableSpec> {
    fn from(space: SearchSpace) -> Self {
        let mut out = space.specs.clone();
        for (k, &i) in space.user_index.iter().enumerate() {
            out[i] = space.specs[k].clone();
        }
        out
    }
}
