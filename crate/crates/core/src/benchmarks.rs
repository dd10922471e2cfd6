//! Mixed-integer test functions. Every function takes an already encoded
//! vector in continuous|binary|integer layout and has optimum value 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// Integer dimensions take values in `[-10, 10]`.
pub const INT_RANGE: (i64, i64) = (-10, 10);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkKind {
    SphereOneMax,
    SphereLeadingOnes,
    EllipsoidOneMax,
    EllipsoidLeadingOnes,
    SphereInt,
    EllipsoidInt,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 6] = [
        BenchmarkKind::SphereOneMax,
        BenchmarkKind::SphereLeadingOnes,
        BenchmarkKind::EllipsoidOneMax,
        BenchmarkKind::EllipsoidLeadingOnes,
        BenchmarkKind::SphereInt,
        BenchmarkKind::EllipsoidInt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::SphereOneMax => "sphere-one-max",
            Self::SphereLeadingOnes => "sphere-leading-ones",
            Self::EllipsoidOneMax => "ellipsoid-one-max",
            Self::EllipsoidLeadingOnes => "ellipsoid-leading-ones",
            Self::SphereInt => "sphere-int",
            Self::EllipsoidInt => "ellipsoid-int",
        }
    }

    /// True when the discrete half is binary.
    pub fn has_binary_part(self) -> bool {
        !matches!(self, Self::SphereInt | Self::EllipsoidInt)
    }

    fn is_ellipsoid(self) -> bool {
        matches!(
            self,
            Self::EllipsoidOneMax | Self::EllipsoidLeadingOnes | Self::EllipsoidInt
        )
    }

    fn is_leading_ones(self) -> bool {
        matches!(self, Self::SphereLeadingOnes | Self::EllipsoidLeadingOnes)
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown benchmark function '{s}'")))
    }
}

/// A benchmark instance: function plus dimension split.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub kind: BenchmarkKind,
    pub n_co: usize,
    pub n_bi: usize,
    pub n_int: usize,
    pub int_range: (i64, i64),
}

impl Benchmark {
    /// Half continuous, half binary or integer. `dim` must be even and ≥ 4.
    pub fn make(kind: BenchmarkKind, dim: usize) -> Result<Self> {
        if dim < 4 || !dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "benchmark dimension must be even and at least 4, got {dim}"
            )));
        }
        let half = dim / 2;
        Ok(Self::with_split(kind, half, half))
    }

    /// `n_co` continuous dimensions followed by `n_discrete` binary or integer ones.
    pub fn with_split(kind: BenchmarkKind, n_co: usize, n_discrete: usize) -> Self {
        let (n_bi, n_int) = if kind.has_binary_part() {
            (n_discrete, 0)
        } else {
            (0, n_discrete)
        };
        Self {
            kind,
            n_co,
            n_bi,
            n_int,
            int_range: INT_RANGE,
        }
    }

    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        Self::make(name.parse()?, dim)
    }

    pub fn dim(&self) -> usize {
        self.n_co + self.n_bi + self.n_int
    }

    pub fn optimum_value(&self) -> f64 {
        0.0
    }

    pub fn space(&self) -> Result<SearchSpace> {
        SearchSpace::mixed(self.n_co, self.n_bi, self.n_int, self.int_range)
    }

    /// A minimizer: zeros on continuous and integer dims, ones on binary dims.
    pub fn optimum(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        x[self.n_co..self.n_co + self.n_bi].fill(1.0);
        x
    }

    /// Objective value of an encoded vector.
    pub fn evaluate(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(self.evaluate_unchecked(v))
    }

    fn evaluate_unchecked(&self, v: &[f64]) -> f64 {
        if self.kind.has_binary_part() {
            let (cont, bits) = v.split_at(self.n_co);
            let quad = if self.kind.is_ellipsoid() {
                ellipsoid(cont)
            } else {
                sphere(cont)
            };
            let gain = if self.kind.is_leading_ones() {
                leading_ones(bits)
            } else {
                bits.iter().sum()
            };
            quad + self.n_bi as f64 - gain
        } else if self.kind.is_ellipsoid() {
            ellipsoid(v)
        } else {
            sphere(v)
        }
    }
}

fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `Σ (1000^{(j-1)/(n-1)} x_j)²`; with a single coordinate the coefficient is 1.
fn ellipsoid(x: &[f64]) -> f64 {
    let n = x.len();
    if n == 1 {
        return x[0] * x[0];
    }
    x.iter()
        .enumerate()
        .map(|(j, v)| {
            let c = 1000f64.powf(j as f64 / (n - 1) as f64);
            (c * v).powi(2)
        })
        .sum()
}

/// `Σ_k Π_{l≤k} b_l`
fn leading_ones(bits: &[f64]) -> f64 {
    let mut prod = 1.0;
    let mut sum = 0.0;
    for b in bits {
        prod *= b;
        sum += prod;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_splits_dimensions() {
        let b = Benchmark::make(BenchmarkKind::SphereOneMax, 40).unwrap();
        assert_eq!((b.n_co, b.n_bi, b.n_int), (20, 20, 0));
        let b = Benchmark::make(BenchmarkKind::SphereInt, 20).unwrap();
        assert_eq!((b.n_co, b.n_bi, b.n_int), (10, 0, 10));
        let space = b.space().unwrap();
        assert_eq!(space.spec(10).candidates().unwrap().first(), Some(&-10.0));
        assert_eq!(space.spec(19).candidates().unwrap().last(), Some(&10.0));
        assert!(matches!(Benchmark::by_name("rastrigin", 20), Err(Error::Config(_))));
        assert!(matches!(Benchmark::make(BenchmarkKind::SphereInt, 21), Err(Error::Config(_))));
        assert!(matches!(Benchmark::make(BenchmarkKind::SphereInt, 2), Err(Error::Config(_))));
    }

    #[test]
    fn names_round_trip() {
        for k in BenchmarkKind::ALL {
            assert_eq!(k.name().parse::<BenchmarkKind>().unwrap(), k);
        }
    }

    #[test]
    fn optimum_is_zero_for_all() {
        for k in BenchmarkKind::ALL {
            for n in [4, 20, 40, 60] {
                let b = Benchmark::make(k, n).unwrap();
                assert_eq!(b.evaluate(&b.optimum()).unwrap(), 0.0, "{k} N={n}");
            }
        }
    }

    #[test]
    fn one_max_values() {
        let b = Benchmark::make(BenchmarkKind::SphereOneMax, 40).unwrap();
        assert_eq!(b.evaluate(&vec![0.0; 40]).unwrap(), 20.0);
        assert!(matches!(b.evaluate(&[0.0; 3]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn leading_ones_counts_prefix() {
        let b = Benchmark::with_split(BenchmarkKind::SphereLeadingOnes, 1, 5);
        let v = [0.0, 1.0, 1.0, 0.0, 1.0, 1.0];
        assert_eq!(b.evaluate(&v).unwrap(), 5.0 - 2.0);
        let one_max = Benchmark::with_split(BenchmarkKind::SphereOneMax, 1, 5);
        assert_eq!(one_max.evaluate(&v).unwrap(), 5.0 - 4.0);
    }

    #[test]
    fn one_max_and_leading_ones_agree_on_uniform_blocks() {
        for fill in [0.0, 1.0] {
            let mut v = vec![0.3, -1.2, 2.0];
            v.extend([fill; 3]);
            let a = Benchmark::with_split(BenchmarkKind::EllipsoidOneMax, 3, 3).evaluate(&v).unwrap();
            let b = Benchmark::with_split(BenchmarkKind::EllipsoidLeadingOnes, 3, 3).evaluate(&v).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ellipsoid_coefficients() {
        let b = Benchmark::with_split(BenchmarkKind::EllipsoidInt, 1, 1);
        assert_eq!(b.evaluate(&[1.0, 1.0]).unwrap(), 1_000_001.0);
        let single = Benchmark::with_split(BenchmarkKind::EllipsoidOneMax, 1, 2);
        assert_eq!(single.evaluate(&[3.0, 1.0, 1.0]).unwrap(), 9.0);
    }

    #[test]
    fn non_negative_on_encoded_points() {
        use crate::numerics::Rng;
        let mut rng = Rng::new(12);
        for k in BenchmarkKind::ALL {
            let b = Benchmark::make(k, 10).unwrap();
            let space = b.space().unwrap();
            for _ in 0..200 {
                let raw: Vec<f64> = (0..10).map(|_| rng.uniform(-15.0, 15.0)).collect();
                let v = space.encode(&raw).unwrap();
                assert!(b.evaluate(&v).unwrap() >= 0.0);
            }
        }
    }
}
