//! CMA-ES with Margin.
//!
//! Candidates are evaluated through an affine image `v = m + σ A y` of the
//! CMA-ES sample, with `A` diagonal. After each CMA-ES update the mean and
//! `A` are corrected per discrete dimension so that the probability of
//! sampling a different discrete value never drops below the margin `α`:
//!
//! * binary dimensions, and integer dimensions whose mean lies beyond the
//!   outermost thresholds, pull the mean toward the nearest threshold until
//!   the threshold sits inside the `1 − 2α` marginal interval;
//! * integer dimensions with the mean between two thresholds get new
//!   `m_j` and `A_j` so that both tails beyond the bracketing thresholds
//!   carry at least `α / 2`.
//!
//! The CMA-ES update itself runs on the untransformed samples, unchanged.

use std::sync::Arc;

use crate::cmaes::{CmaParams, CmaState, GenerationRecord};
use crate::error::{Error, Result};
use crate::numerics::{chi2_ppf_1dof, normal_cdf, Rng};
use crate::space::SearchSpace;

/// `α = 1 / (N λ)`.
pub fn default_alpha(dim: usize, lambda: usize) -> f64 {
    1.0 / (dim as f64 * lambda as f64)
}

/// Closed form used for `A_j` in the interior integer correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleUpdate {
    /// Solves both tail conditions exactly: divides by `σ √C_jj`.
    #[default]
    Consistent,
    /// The published closed form without the `σ √C_jj` factor. Only agrees
    /// with [`ScaleUpdate::Consistent`] when `σ² C_jj = 1`.
    AsPrinted,
}

/// Tail probabilities of one interior integer dimension before and after
/// the lower-bound restriction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginProbabilities {
    pub low: f64,
    pub up: f64,
    pub mid: f64,
    /// `max(α/2, low)`
    pub low_clipped: f64,
    /// `max(α/2, up)`
    pub up_clipped: f64,
    pub low_restricted: f64,
    pub up_restricted: f64,
}

/// Clips both tails to at least `α/2` and removes the excess mass
/// proportionally from the parts above `α/2`.
pub fn restrict_probabilities(
    low: f64,
    up: f64,
    mid: f64,
    alpha: f64,
) -> Result<MarginProbabilities> {
    let floor = 0.5 * alpha;
    let low_clipped = low.max(floor);
    let up_clipped = up.max(floor);
    let excess = 1.0 - low_clipped - up_clipped - mid;
    let denom = low_clipped + up_clipped + mid - 3.0 * floor;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "degenerate probability restriction (denominator {denom})"
        )));
    }
    let ratio = excess / denom;
    Ok(MarginProbabilities {
        low,
        up,
        mid,
        low_clipped,
        up_clipped,
        low_restricted: low_clipped + ratio * (low_clipped - floor),
        up_restricted: up_clipped + ratio * (up_clipped - floor),
    })
}

/// A CMA-ES generation together with its affine images.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginRecord {
    pub generation: GenerationRecord,
    /// `m + σ A y_i`
    pub v: Vec<Vec<f64>>,
    /// Encoded `v_i`; these are what the objective sees.
    pub v_bar: Vec<Vec<f64>>,
}

/// CMA-ES state extended with the diagonal affine transform `A` and `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginState {
    pub base: CmaState,
    scale: Vec<f64>,
    alpha: f64,
    space: Arc<SearchSpace>,
    scale_update: ScaleUpdate,
}

impl MarginState {
    /// `α` must lie in `[0, 0.5)`; `α = 0` disables every correction.
    pub fn new(base: CmaState, space: Arc<SearchSpace>, alpha: f64) -> Result<Self> {
        if base.dim() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                actual: base.dim(),
            });
        }
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::Config(format!("margin must lie in [0, 0.5), got {alpha}")));
        }
        Ok(Self {
            scale: vec![1.0; base.dim()],
            base,
            alpha,
            space,
            scale_update: ScaleUpdate::default(),
        })
    }

    pub fn with_scale_update(mut self, rule: ScaleUpdate) -> Self {
        self.scale_update = rule;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Diagonal of `A`.
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Overrides `A_j` of a discrete dimension.
    pub fn set_scale(&mut self, j: usize, value: f64) -> Result<()> {
        if !self.space.is_discrete(j) {
            return Err(Error::NotDiscrete(j));
        }
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain(format!("affine scale must be positive, got {value}")));
        }
        self.scale[j] = value;
        Ok(())
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    /// Coordinate-wise standard deviation of `v`: `σ A_j √C_jj`.
    pub fn coordinate_std(&self, j: usize) -> f64 {
        self.base.sigma * self.scale[j] * self.base.cov().get(j, j).sqrt()
    }

    /// Samples a generation and its affine images.
    pub fn ask(&self, params: &CmaParams, rng: &mut Rng) -> Result<MarginRecord> {
        let generation = self.base.sample_generation(params, rng);
        let sigma = self.base.sigma;
        let v: Vec<Vec<f64>> = generation
            .y
            .iter()
            .map(|y| {
                self.base
                    .mean
                    .iter()
                    .zip(y)
                    .zip(&self.scale)
                    .map(|((m, yj), a)| m + sigma * a * yj)
                    .collect()
            })
            .collect();
        let v_bar = v
            .iter()
            .map(|vi| self.space.encode(vi))
            .collect::<Result<_>>()?;
        Ok(MarginRecord { generation, v, v_bar })
    }

    /// Ranks by `f_values` (objective values of `v_bar`), runs the CMA-ES
    /// update on the untransformed samples, then applies the margin.
    pub fn tell(
        &mut self,
        params: &CmaParams,
        record: &mut MarginRecord,
        f_values: &[f64],
    ) -> Result<()> {
        record.generation.rank(f_values)?;
        self.base.update(params, &mut record.generation)?;
        self.apply_margin()
    }

    /// Corrects every discrete dimension of the current state.
    pub fn apply_margin(&mut self) -> Result<()> {
        if self.alpha == 0.0 {
            return Ok(());
        }
        for j in 0..self.base.dim() {
            if !self.space.is_discrete(j) {
                continue;
            }
            if !self.space.is_binary(j) && self.space.is_interior(j, self.base.mean[j]) {
                self.correct_interior_integer(j)?;
            } else {
                self.correct_toward_threshold(j)?;
            }
        }
        Ok(())
    }

    /// Half-width of the `coverage` interval of the `j`-th marginal of `v`.
    pub fn marginal_ci(&self, j: usize, coverage: f64) -> Result<f64> {
        let var = self.base.sigma.powi(2) * self.scale[j].powi(2) * self.base.cov().get(j, j);
        Ok((chi2_ppf_1dof(coverage)? * var).sqrt())
    }

    /// Moves `m_j` toward its nearest threshold until the threshold lies in
    /// the `1 − 2α` interval. `A_j` is unchanged.
    pub fn correct_toward_threshold(&mut self, j: usize) -> Result<()> {
        let m = self.base.mean[j];
        let thr = self.space.nearest_threshold(j, m)?;
        let ci = self.marginal_ci(j, 1.0 - 2.0 * self.alpha)?;
        let d = m - thr;
        if d.abs() > ci {
            self.base.mean[j] = thr + d.signum() * ci;
        }
        Ok(())
    }

    /// Sets `m_j` and `A_j` so both tails beyond the thresholds bracketing
    /// `m_j` carry the restricted probabilities.
    pub fn correct_interior_integer(&mut self, j: usize) -> Result<MarginProbabilities> {
        let m = self.base.mean[j];
        let (lo, up) = self.space.low_up_thresholds(j, m)?;
        let base_std = self.base.sigma * self.base.cov().get(j, j).sqrt();
        let std = base_std * self.scale[j];

        let p_low = normal_cdf((lo - m) / std);
        let p_up = normal_cdf((m - up) / std);
        let probs = restrict_probabilities(p_low, p_up, 1.0 - p_low - p_up, self.alpha)?;

        let (r_low, r_up) = (probs.low_restricted, probs.up_restricted);
        if !(r_low <= 0.5 && r_up <= 0.5) {
            return Err(Error::NumericalFailure(format!(
                "restricted tail probabilities ({r_low}, {r_up}) exceed one half"
            )));
        }
        let q_low = chi2_ppf_1dof(1.0 - 2.0 * r_low)?.sqrt();
        let q_up = chi2_ppf_1dof(1.0 - 2.0 * r_up)?.sqrt();
        let q_sum = q_low + q_up;
        if !(q_sum > 0.0 && q_sum.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "degenerate interval quantiles in dimension {j}"
            )));
        }

        let new_mean = (lo * q_up + up * q_low) / q_sum;
        let new_scale = match self.scale_update {
            ScaleUpdate::Consistent => (up - lo) / (q_sum * base_std),
            ScaleUpdate::AsPrinted => (up - lo) / q_sum,
        };
        if !(new_scale > 0.0 && new_scale.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "affine scale {new_scale} in dimension {j}"
            )));
        }
        self.base.mean[j] = new_mean;
        self.scale[j] = new_scale;
        Ok(probs)
    }
}
