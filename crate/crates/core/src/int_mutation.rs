//! CMA-ES-IM: the integer-mutation baseline.
//!
//! Coordinates whose standard deviation has fallen below half their
//! granularity receive integer-valued mutations on a few candidates per
//! generation, one candidate is pushed along the previous best's integer
//! offset, and coordinates with a small deviation are masked out of the
//! step-size update.

use crate::cmaes::{csa_step_size, CmaParams, CmaState, GenerationRecord};
use crate::error::{Error, Result};
use crate::numerics::{expected_norm, Rng};
use crate::space::SearchSpace;

/// Diagonal of the granularity matrix `S_int`.
#[derive(Debug, Clone, PartialEq)]
pub struct GranularityMatrix(Vec<f64>);

impl GranularityMatrix {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain("granularities must be finite and non-negative".into()));
        }
        Ok(Self(s))
    }

    /// 1 on discrete dimensions, 0 on continuous ones.
    pub fn for_space(space: &SearchSpace) -> Self {
        Self(
            (0..space.dim())
                .map(|j| if space.is_discrete(j) { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-dimension optional `[lo, hi]` box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds(Vec<Option<(f64, f64)>>);

impl BoxBounds {
    pub fn new(bounds: Vec<Option<(f64, f64)>>) -> Result<Self> {
        for (j, b) in bounds.iter().enumerate() {
            if let Some((lo, hi)) = b {
                if !(lo <= hi) {
                    return Err(Error::Config(format!("empty box [{lo}, {hi}] in dimension {j}")));
                }
            }
        }
        Ok(Self(bounds))
    }

    /// Boxes only on discrete dimensions: `binary` on binary ones,
    /// `integer` on the wider ones.
    pub fn on_discrete(space: &SearchSpace, binary: (f64, f64), integer: (f64, f64)) -> Result<Self> {
        Self::new(
            (0..space.dim())
                .map(|j| {
                    if space.is_binary(j) {
                        Some(binary)
                    } else if space.is_discrete(j) {
                        Some(integer)
                    } else {
                        None
                    }
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, j: usize) -> Option<(f64, f64)> {
        self.0[j]
    }
}

/// Nearest feasible point and the penalty `‖x_feas − x‖² / N`.
pub fn box_penalty(x: &[f64], bounds: &BoxBounds) -> Result<(Vec<f64>, f64)> {
    if x.len() != bounds.dim() {
        return Err(Error::Dimension {
            expected: bounds.dim(),
            actual: x.len(),
        });
    }
    let feasible: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| match bounds.get(j) {
            Some((lo, hi)) => v.clamp(lo, hi),
            None => v,
        })
        .collect();
    let sq: f64 = feasible.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((feasible, sq / x.len() as f64))
}

/// Indices with `2 σ √C_jj < s_j`, in random order.
pub fn build_j(state: &CmaState, s: &GranularityMatrix, rng: &mut Rng) -> Vec<usize> {
    let cov = state.cov();
    let mut j: Vec<usize> = (0..state.dim())
        .filter(|&k| 2.0 * state.sigma * cov.get(k, k).sqrt() < s.0[k])
        .collect();
    if j.len() > 1 {
        rng.shuffle(&mut j);
    }
    j
}

/// Number of candidates that receive an integer mutation.
pub fn lambda_int(j_size: usize, lambda: usize, dim: usize) -> usize {
    let half = lambda / 2;
    if j_size == 0 {
        0
    } else if j_size < dim {
        let cap = half.saturating_sub(1) as f64;
        (lambda as f64 / 10.0 + j_size as f64 + 1.0).min(cap).floor() as usize
    } else {
        half
    }
}

/// Integer mutation vectors for one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct MutationDraw {
    /// Ordered index set `J`.
    pub order: Vec<usize>,
    pub lambda_int: usize,
    /// One-hot part `R′_i`, for `i < lambda_int`.
    pub one_hot: Vec<Vec<i64>>,
    /// Geometric part `R″_i`, for `i < lambda_int`.
    pub geometric: Vec<Vec<i64>>,
    /// Signed mutation `r_int_i` for every candidate.
    pub r_int: Vec<Vec<i64>>,
}

impl MutationDraw {
    pub fn is_empty(&self) -> bool {
        self.r_int.iter().all(|r| r.iter().all(|&v| v == 0))
    }
}

/// State of CMA-ES-IM: the CMA-ES state, the granularities and the best
/// candidate of the previous generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ImState {
    pub base: CmaState,
    pub prev_best_x: Option<Vec<f64>>,
    granularity: GranularityMatrix,
}

impl ImState {
    pub fn new(base: CmaState, granularity: GranularityMatrix) -> Result<Self> {
        if granularity.0.len() != base.dim() {
            return Err(Error::Dimension {
                expected: base.dim(),
                actual: granularity.0.len(),
            });
        }
        Ok(Self {
            base,
            prev_best_x: None,
            granularity,
        })
    }

    pub fn granularity(&self) -> &GranularityMatrix {
        &self.granularity
    }

    /// Draws the mutation vectors. No random numbers are consumed when
    /// `lambda_int` is zero.
    pub fn sample_mutations(
        &self,
        params: &CmaParams,
        order: Vec<usize>,
        lambda_int: usize,
        rng: &mut Rng,
    ) -> Result<MutationDraw> {
        let n = self.base.dim();
        let lambda = params.lambda;
        let mut draw = MutationDraw {
            r_int: vec![vec![0; n]; lambda],
            one_hot: Vec::with_capacity(lambda_int),
            geometric: Vec::with_capacity(lambda_int),
            order,
            lambda_int,
        };
        if lambda_int == 0 {
            return Ok(draw);
        }
        if draw.order.is_empty() || lambda_int > lambda {
            return Err(Error::Domain(format!(
                "cannot mutate {lambda_int} of {lambda} candidates over {} indices",
                draw.order.len()
            )));
        }

        let p = 0.7f64.powf(1.0 / draw.order.len() as f64);
        for i in 0..lambda_int {
            let mut one_hot = vec![0i64; n];
            one_hot[draw.order[i % draw.order.len()]] = 1;
            let mut geo = vec![0i64; n];
            for &j in &draw.order {
                geo[j] = rng.geometric(p)? as i64;
            }
            for &j in &draw.order {
                let magnitude = one_hot[j] + geo[j];
                draw.r_int[i][j] = if rng.coin() { -magnitude } else { magnitude };
            }
            draw.one_hot.push(one_hot);
            draw.geometric.push(geo);
        }

        if let Some(prev) = &self.prev_best_x {
            let last = &mut draw.r_int[lambda - 1];
            for (j, &s) in self.granularity.0.iter().enumerate() {
                if s > 0.0 {
                    let shift = (prev[j] / s).floor() - (self.base.mean[j] / s).floor();
                    let shift = shift as i64;
                    last[j] = if rng.coin() { -shift } else { shift };
                }
            }
        }
        Ok(draw)
    }

    /// Samples a generation and injects integer mutations into `x`; `y` is
    /// left untouched.
    pub fn ask(&self, params: &CmaParams, rng: &mut Rng) -> Result<(GenerationRecord, MutationDraw)> {
        let mut record = self.base.sample_generation(params, rng);
        let order = build_j(&self.base, &self.granularity, rng);
        let count = lambda_int(order.len(), params.lambda, self.base.dim());
        let draw = self.sample_mutations(params, order, count, rng)?;
        inject(&mut record, &draw, &self.granularity);
        Ok((record, draw))
    }

    /// Ranks, updates with the masked step-size rule and remembers the best
    /// candidate for the next generation.
    pub fn tell(
        &mut self,
        params: &CmaParams,
        record: &mut GenerationRecord,
        f_values: &[f64],
    ) -> Result<()> {
        record.rank(f_values)?;
        let mask = sigma_mask(&self.base, params, &self.granularity);
        self.base.update_with_sigma(params, record, |state, p_sigma| {
            masked_sigma_update(state, params, p_sigma, &mask)
        })?;
        let best = record.ranking.as_ref().map(|r| r[0]).unwrap_or(0);
        self.prev_best_x = Some(record.x[best].clone());
        Ok(())
    }
}

/// `x_i += S_int r_int_i`
pub fn inject(record: &mut GenerationRecord, draw: &MutationDraw, s: &GranularityMatrix) {
    for (x, r) in record.x.iter_mut().zip(&draw.r_int) {
        for j in 0..x.len() {
            if r[j] != 0 {
                x[j] += s.0[j] * r[j] as f64;
            }
        }
    }
}

/// `true` where the coordinate stays in the step-size update, i.e. unless
/// `5 σ √C_jj / √c_σ < s_j`.
pub fn sigma_mask(state: &CmaState, params: &CmaParams, s: &GranularityMatrix) -> Vec<bool> {
    let cov = state.cov();
    let root_cs = params.c_sigma.sqrt();
    (0..state.dim())
        .map(|j| !(5.0 * state.sigma * cov.get(j, j).sqrt() / root_cs < s.0[j]))
        .collect()
}

/// Step-size update on the unmasked part of `p_σ`; with every coordinate
/// masked the step-size is kept.
pub fn masked_sigma_update(
    state: &CmaState,
    params: &CmaParams,
    p_sigma_next: &[f64],
    mask: &[bool],
) -> f64 {
    let active = mask.iter().filter(|&&m| m).count();
    if active == 0 {
        return state.sigma;
    }
    let norm = p_sigma_next
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| p * p)
        .sum::<f64>()
        .sqrt();
    let expected = expected_norm(active).expect("active > 0");
    csa_step_size(state.sigma, params, norm, expected)
}
