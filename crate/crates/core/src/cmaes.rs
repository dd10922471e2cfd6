//! Standard CMA-ES: weighted recombination, cumulative step-size
//! adaptation, rank-one and rank-μ covariance updates with negative weights.
//!
//! The state keeps one eigendecomposition of the current covariance. It is
//! refreshed after every update and shared by sampling (`C^{1/2}`), the path
//! update (`C^{-1/2}`) and the termination checks.

use crate::error::{Error, Result};
use crate::numerics::{expected_norm, sym_eig, Rng, SymEigen, SymMatrix};

/// Divisor guard in the negative-weight rescaling.
const NORM_EPS: f64 = 1e-300;

/// Default hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    /// Ranked recombination weights; positive for the first `mu`, non-positive after.
    pub weights: Vec<f64>,
    pub mu_w: f64,
    pub mu_w_neg: f64,
    pub c_m: f64,
    pub c_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub d_sigma: f64,
    /// `E‖N(0, I)‖` for `dim`.
    pub chi_n: f64,
}

impl CmaParams {
    /// Defaults for dimension `dim`, optionally with a custom population size.
    pub fn new(dim: usize, lambda_override: Option<usize>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Domain(format!("CMA-ES needs dimension >= 2, got {dim}")));
        }
        let n = dim as f64;
        let lambda = lambda_override.unwrap_or(4 + (3.0 * n.ln()).floor() as usize);
        if lambda < 2 {
            return Err(Error::Domain(format!("population size must be >= 2, got {lambda}")));
        }
        let mu = lambda / 2;

        let raw: Vec<f64> = (1..=lambda)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let (pos, neg) = raw.split_at(mu);
        let pos_sum: f64 = pos.iter().sum();
        let mu_w = pos_sum * pos_sum / pos.iter().map(|w| w * w).sum::<f64>();
        let neg_sq: f64 = neg.iter().map(|w| w * w).sum();
        let mu_w_neg = if neg_sq > 0.0 {
            neg.iter().sum::<f64>().powi(2) / neg_sq
        } else {
            0.0
        };

        let c_sigma = (mu_w + 2.0) / (n + mu_w + 5.0);
        let c_c = (4.0 + mu_w / n) / (n + 4.0 + 2.0 * mu_w / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_w);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_w - 2.0 + 1.0 / mu_w) / ((n + 2.0).powi(2) + mu_w));
        let d_sigma = 1.0 + c_sigma + 2.0 * (((mu_w - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0);

        let neg_scale = (1.0 + c_1 / c_mu)
            .min(1.0 + 2.0 * mu_w_neg / (mu_w + 2.0))
            .min((1.0 - c_1 - c_mu) / (n * c_mu));
        let neg_abs_sum: f64 = neg.iter().map(|w| w.abs()).sum();
        let weights = raw
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if i < mu {
                    w / pos_sum
                } else if neg_abs_sum > 0.0 {
                    w / neg_abs_sum * neg_scale
                } else {
                    0.0
                }
            })
            .collect();

        Ok(Self {
            dim,
            lambda,
            mu,
            weights,
            mu_w,
            mu_w_neg,
            c_m: 1.0,
            c_sigma,
            c_c,
            c_1,
            c_mu,
            d_sigma,
            chi_n: expected_norm(dim)?,
        })
    }
}

/// Distribution state: mean, step-size, covariance and the two evolution paths.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaState {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub p_sigma: Vec<f64>,
    pub p_c: Vec<f64>,
    /// Completed updates.
    pub t: usize,
    cov: SymMatrix,
    eigen: SymEigen,
    sqrt_cov: SymMatrix,
    inv_sqrt_cov: SymMatrix,
}

impl CmaState {
    /// Fresh state with `C = I` and zero paths.
    pub fn new(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::Dimension { expected: 1, actual: 0 });
        }
        Self::with_covariance(mean, sigma, SymMatrix::identity(n))
    }

    pub fn with_covariance(mean: Vec<f64>, sigma: f64, cov: SymMatrix) -> Result<Self> {
        if cov.dim() != mean.len() {
            return Err(Error::Dimension {
                expected: mean.len(),
                actual: cov.dim(),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("step-size must be positive, got {sigma}")));
        }
        let n = mean.len();
        let eigen = sym_eig(&cov)?;
        Ok(Self {
            sqrt_cov: eigen.sqrt(0.0),
            inv_sqrt_cov: eigen.inv_sqrt(),
            eigen,
            cov,
            mean,
            sigma,
            p_sigma: vec![0.0; n],
            p_c: vec![0.0; n],
            t: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self) -> &SymMatrix {
        &self.cov
    }

    /// Replaces the covariance and refreshes its decomposition.
    pub fn set_covariance(&mut self, cov: SymMatrix) -> Result<()> {
        if cov.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: cov.dim(),
            });
        }
        self.cov = cov;
        self.refresh_decomposition()
    }

    /// Eigendecomposition of the current covariance.
    pub fn eigen(&self) -> &SymEigen {
        &self.eigen
    }

    pub fn sqrt_cov(&self) -> &SymMatrix {
        &self.sqrt_cov
    }

    pub fn inv_sqrt_cov(&self) -> &SymMatrix {
        &self.inv_sqrt_cov
    }

    /// Coordinate-wise standard deviations `σ √C_jj`.
    pub fn coordinate_std(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.sigma * self.cov.get(j, j).sqrt())
            .collect()
    }

    /// Smallest eigenvalue of `σ² C`.
    pub fn min_eigenvalue_scaled(&self) -> f64 {
        self.sigma * self.sigma * self.eigen.min_value()
    }

    pub fn condition_number(&self) -> f64 {
        self.eigen.condition_number()
    }

    fn refresh_decomposition(&mut self) -> Result<()> {
        self.eigen = sym_eig(&self.cov)?;
        self.sqrt_cov = self.eigen.sqrt(0.0);
        self.inv_sqrt_cov = self.eigen.inv_sqrt();
        Ok(())
    }

    /// Draws `λ` candidates `x_i = m + σ C^{1/2} ξ_i`.
    pub fn sample_generation(&self, params: &CmaParams, rng: &mut Rng) -> GenerationRecord {
        let n = self.dim();
        let mut record = GenerationRecord::with_capacity(params.lambda);
        for _ in 0..params.lambda {
            let xi = rng.standard_normal(n);
            let y = self.sqrt_cov.mul_vec(&xi);
            let x = self
                .mean
                .iter()
                .zip(&y)
                .map(|(m, yj)| m + self.sigma * yj)
                .collect();
            record.xi.push(xi);
            record.y.push(y);
            record.x.push(x);
        }
        record
    }

    /// One full update with cumulative step-size adaptation.
    pub fn update(&mut self, params: &CmaParams, record: &mut GenerationRecord) -> Result<()> {
        self.update_with_sigma(params, record, |state, p_sigma| {
            let norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
            csa_step_size(state.sigma, params, norm, params.chi_n)
        })
    }

    /// One full update where the new step-size comes from `next_sigma`,
    /// called with the pre-update state and the updated `p_σ`.
    pub fn update_with_sigma(
        &mut self,
        params: &CmaParams,
        record: &mut GenerationRecord,
        next_sigma: impl FnOnce(&CmaState, &[f64]) -> f64,
    ) -> Result<()> {
        let n = self.dim();
        if params.dim != n {
            return Err(Error::Dimension {
                expected: n,
                actual: params.dim,
            });
        }
        let ranking = record
            .ranking
            .clone()
            .ok_or_else(|| Error::Domain("generation must be ranked before the update".into()))?;
        if ranking.len() != params.lambda || record.y.len() != params.lambda {
            return Err(Error::Dimension {
                expected: params.lambda,
                actual: ranking.len(),
            });
        }
        let w = &params.weights;

        let mut mean = self.mean.clone();
        let mut y_w = vec![0.0; n];
        for (i, &r) in ranking.iter().take(params.mu).enumerate() {
            let coef = params.c_m * w[i];
            for j in 0..n {
                mean[j] += coef * (record.x[r][j] - self.mean[j]);
                y_w[j] += w[i] * record.y[r][j];
            }
        }

        let cs = params.c_sigma;
        let z_w = self.inv_sqrt_cov.mul_vec(&y_w);
        let ps_coef = (cs * (2.0 - cs) * params.mu_w).sqrt();
        let p_sigma: Vec<f64> = self
            .p_sigma
            .iter()
            .zip(&z_w)
            .map(|(p, z)| (1.0 - cs) * p + ps_coef * z)
            .collect();
        let ps_norm = p_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();

        let h_threshold = (1.0 - (1.0 - cs).powi(2 * (self.t as i32 + 1))).sqrt()
            * (1.4 + 2.0 / (n as f64 + 1.0))
            * params.chi_n;
        let h_sigma = ps_norm < h_threshold;
        let h = if h_sigma { 1.0 } else { 0.0 };

        let cc = params.c_c;
        let pc_coef = h * (cc * (2.0 - cc) * params.mu_w).sqrt();
        let p_c: Vec<f64> = self
            .p_c
            .iter()
            .zip(&y_w)
            .map(|(p, y)| (1.0 - cc) * p + pc_coef * y)
            .collect();

        let mut w_circ = Vec::with_capacity(params.lambda);
        for (i, &r) in ranking.iter().enumerate() {
            if w[i] >= 0.0 {
                w_circ.push(w[i]);
            } else {
                let z = self.inv_sqrt_cov.mul_vec(&record.y[r]);
                let sq: f64 = z.iter().map(|v| v * v).sum();
                if sq <= NORM_EPS {
                    return Err(Error::NumericalFailure(
                        "vanishing Mahalanobis norm in negative weight rescaling".into(),
                    ));
                }
                w_circ.push(w[i] * n as f64 / sq);
            }
        }

        let w_sum: f64 = w.iter().sum();
        let decay = 1.0 - params.c_1 - params.c_mu * w_sum
            + (1.0 - h) * params.c_1 * cc * (2.0 - cc);
        let mut cov = self.cov.clone();
        cov.scale(decay);
        cov.add_outer(params.c_1, &p_c);
        for (i, &r) in ranking.iter().enumerate() {
            if w_circ[i] != 0.0 {
                cov.add_outer(params.c_mu * w_circ[i], &record.y[r]);
            }
        }
        cov.symmetrize();

        let sigma = next_sigma(self, &p_sigma);

        if !(sigma.is_finite() && sigma > 0.0)
            || !cov.is_finite()
            || mean.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NumericalFailure(format!(
                "non-finite state after update {} (sigma = {sigma})",
                self.t
            )));
        }

        self.mean = mean;
        self.p_sigma = p_sigma;
        self.p_c = p_c;
        self.cov = cov;
        self.sigma = sigma;
        self.t += 1;
        record.h_sigma = Some(h_sigma);
        record.w_circ = w_circ;
        self.refresh_decomposition()
    }
}

/// `σ · exp((c_σ / d_σ)(‖p_σ‖ / E − 1))`.
pub fn csa_step_size(sigma: f64, params: &CmaParams, p_sigma_norm: f64, expected: f64) -> f64 {
    sigma * ((params.c_sigma / params.d_sigma) * (p_sigma_norm / expected - 1.0)).exp()
}

/// Everything drawn in one generation, plus the ranking and update
/// diagnostics once they exist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GenerationRecord {
    pub xi: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    /// Sample indices in ascending order of objective value.
    pub ranking: Option<Vec<usize>>,
    pub h_sigma: Option<bool>,
    /// Weights after the negative-weight rescaling, in rank order.
    pub w_circ: Vec<f64>,
}

impl GenerationRecord {
    fn with_capacity(lambda: usize) -> Self {
        Self {
            xi: Vec::with_capacity(lambda),
            y: Vec::with_capacity(lambda),
            x: Vec::with_capacity(lambda),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Ranks the samples by `f_values`, stably.
    pub fn rank(&mut self, f_values: &[f64]) -> Result<()> {
        self.ranking = Some(rank(f_values)?);
        Ok(())
    }
}

/// Stable ascending argsort; NaN is rejected.
pub fn rank(f_values: &[f64]) -> Result<Vec<usize>> {
    if let Some(i) = f_values.iter().position(|f| f.is_nan()) {
        return Err(Error::Evaluation(i));
    }
    let mut idx: Vec<usize> = (0..f_values.len()).collect();
    idx.sort_by(|&a, &b| f_values[a].total_cmp(&f_values[b]));
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_sizes_follow_log_rule() {
        let p40 = CmaParams::new(40, None).unwrap();
        assert_eq!((p40.lambda, p40.mu), (15, 7));
        let p20 = CmaParams::new(20, None).unwrap();
        assert_eq!((p20.lambda, p20.mu), (12, 6));
        let p60 = CmaParams::new(60, None).unwrap();
        assert_eq!((p60.lambda, p60.mu), (16, 8));
        assert!(CmaParams::new(1, None).is_err());
    }

    #[test]
    fn parameter_invariants() {
        for n in [2, 3, 5, 10, 20, 40, 60, 100] {
            for lambda in [None, Some(2), Some(3), Some(7), Some(50)] {
                let p = CmaParams::new(n, lambda).unwrap();
                let pos: f64 = p.weights[..p.mu].iter().sum();
                assert!((pos - 1.0).abs() < 1e-12);
                assert!(p.weights[..p.mu].windows(2).all(|w| w[0] >= w[1]));
                assert!(p.weights[p.mu - 1] > 0.0);
                assert!(p.weights[p.mu..].iter().all(|&w| w <= 0.0));
                let pos_mass: f64 = p.weights.iter().map(|w| w.max(0.0)).sum();
                assert!(p.c_1 + p.c_mu * pos_mass <= 1.0 + 1e-15);
                for rate in [p.c_sigma, p.c_c, p.c_1] {
                    assert!(rate > 0.0 && rate <= 1.0);
                }
                assert!(p.c_mu >= 0.0 && p.c_mu <= 1.0);
                assert!(p.d_sigma >= 1.0);
            }
        }
    }

    #[test]
    fn negative_weights_follow_scaled_rule() {
        let p = CmaParams::new(10, None).unwrap();
        let lambda = p.lambda as f64;
        let raw: Vec<f64> = (1..=p.lambda)
            .map(|i| ((lambda + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let neg_abs: f64 = raw[p.mu..].iter().map(|w| w.abs()).sum();
        let scale = (1.0 + p.c_1 / p.c_mu)
            .min(1.0 + 2.0 * p.mu_w_neg / (p.mu_w + 2.0))
            .min((1.0 - p.c_1 - p.c_mu) / (10.0 * p.c_mu));
        for i in p.mu..p.lambda {
            assert!((p.weights[i] - raw[i] / neg_abs * scale).abs() < 1e-15);
        }
    }

    #[test]
    fn rank_is_stable() {
        assert_eq!(rank(&[3.0, 1.0, 2.0]).unwrap(), vec![1, 2, 0]);
        assert_eq!(rank(&[1.0, 1.0]).unwrap(), vec![0, 1]);
        assert_eq!(rank(&[0.0, 1.0, 5.0, 9.0]).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(rank(&[0.0, f64::NAN]), Err(Error::Evaluation(1)));
    }

    #[test]
    fn identity_covariance_samples_are_the_noise() {
        let params = CmaParams::new(3, None).unwrap();
        let state = CmaState::new(vec![0.0; 3], 0.5).unwrap();
        let record = state.sample_generation(&params, &mut Rng::new(1));
        assert_eq!(record.len(), params.lambda);
        for i in 0..record.len() {
            assert_eq!(record.y[i], record.xi[i]);
            for j in 0..3 {
                assert_eq!(record.x[i][j], 0.5 * record.y[i][j]);
            }
        }
    }

    #[test]
    fn empirical_covariance_matches() {
        let params = CmaParams::new(2, Some(1000)).unwrap();
        let state =
            CmaState::with_covariance(vec![0.0; 2], 1.0, SymMatrix::from_diagonal(&[1.0, 4.0]))
                .unwrap();
        let mut rng = Rng::new(5);
        let mut acc = [0.0; 4];
        let mut count = 0.0;
        for _ in 0..100 {
            let r = state.sample_generation(&params, &mut rng);
            for y in &r.y {
                acc[0] += y[0] * y[0];
                acc[1] += y[0] * y[1];
                acc[3] += y[1] * y[1];
                count += 1.0;
            }
        }
        acc[2] = acc[1];
        let target = [1.0, 0.0, 0.0, 4.0];
        for k in 0..4 {
            assert!((acc[k] / count - target[k]).abs() < 0.1);
        }
    }

    #[test]
    fn csa_is_neutral_at_expected_norm() {
        let p = CmaParams::new(8, None).unwrap();
        assert_eq!(csa_step_size(0.7, &p, p.chi_n, p.chi_n), 0.7);
        assert!(csa_step_size(0.7, &p, 2.0 * p.chi_n, p.chi_n) > 0.7);
        assert!(csa_step_size(0.7, &p, 0.5 * p.chi_n, p.chi_n) < 0.7);
    }

    #[test]
    fn single_parent_moves_mean_to_the_best() {
        let params = CmaParams::new(4, Some(3)).unwrap();
        assert_eq!(params.mu, 1);
        assert_eq!(params.weights[0], 1.0);
        let mut state = CmaState::new(vec![1.0, -2.0, 0.5, 3.0], 0.8).unwrap();
        let mut record = state.sample_generation(&params, &mut Rng::new(11));
        let f: Vec<f64> = record.x.iter().map(|x| x.iter().map(|v| v * v).sum()).collect();
        record.rank(&f).unwrap();
        let best = record.x[record.ranking.as_ref().unwrap()[0]].clone();
        state.update(&params, &mut record).unwrap();
        for j in 0..4 {
            assert!((state.mean[j] - best[j]).abs() < 1e-15);
        }
        assert_eq!(state.t, 1);
        assert!(record.h_sigma.is_some());
        assert_eq!(record.w_circ.len(), 3);
    }

    #[test]
    fn update_requires_ranking() {
        let params = CmaParams::new(2, None).unwrap();
        let mut state = CmaState::new(vec![0.0; 2], 1.0).unwrap();
        let mut record = state.sample_generation(&params, &mut Rng::new(0));
        assert!(matches!(state.update(&params, &mut record), Err(Error::Domain(_))));
    }

    #[test]
    fn non_finite_step_size_is_a_numerical_failure() {
        let params = CmaParams::new(2, None).unwrap();
        let mut state = CmaState::new(vec![0.0; 2], 1.0).unwrap();
        let mut record = state.sample_generation(&params, &mut Rng::new(0));
        record.rank(&vec![0.0; params.lambda]).unwrap();
        let before = state.clone();
        let err = state.update_with_sigma(&params, &mut record, |_, _| f64::INFINITY);
        assert!(matches!(err, Err(Error::NumericalFailure(_))));
        assert_eq!(state, before);
    }
}
