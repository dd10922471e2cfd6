//! Numerical primitives shared by the optimizers: a dense symmetric matrix
//! and its eigendecomposition, Gaussian distribution functions, the
//! χ² quantile with one degree of freedom and a seedable random source.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};

use crate::error::{Error, Result};

/// Eigenvalues below this are lifted before taking square roots.
pub const EIGEN_CLAMP: f64 = 1e-30;

const EIGEN_MAX_ITER: usize = 10_000;

/// Dense symmetric matrix stored row-major.
///
/// Every constructor and mutator leaves `get(i, j) == get(j, i)` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_upper_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from rows, averaging the two triangles so the result
    /// is exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Dimension {
                expected: 1,
                actual: 0,
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix { row: i, col: j });
            }
        }
        Ok(Self::from_upper_fn(dim, |i, j| {
            if i == j {
                rows[i][i]
            } else {
                0.5 * (rows[i][j] + rows[j][i])
            }
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c · u uᵀ`
    pub fn add_outer(&mut self, c: f64, u: &[f64]) {
        let n = self.dim;
        for (i, &ui) in u.iter().enumerate().take(n) {
            let ci = c * ui;
            for j in i..n {
                self.data[i * n + j] += ci * u[j];
            }
        }
        self.mirror_upper();
    }

    /// Replaces the matrix by `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    fn mirror_upper(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }
}

/// Eigendecomposition `M = V diag(λ) Vᵀ` with eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Row-major `n × n`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn vector_entry(&self, row: usize, col: usize) -> f64 {
        self.vectors[row * self.dim() + col]
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `λ_max / λ_min`; infinite when the smallest eigenvalue is not positive.
    pub fn condition_number(&self) -> f64 {
        let lo = self.min_value();
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            self.max_value() / lo
        }
    }

    /// `V diag(g(λ)) Vᵀ`.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let v = DMatrix::from_row_slice(n, n, &self.vectors);
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= g(self.values[k]);
        }
        let product = scaled * v.transpose();
        // Column-major storage read as row-major is the transpose.
        let mut out = SymMatrix {
            dim: n,
            data: product.as_slice().to_vec(),
        };
        out.symmetrize();
        out
    }

    /// Symmetric square root with eigenvalues floored at `eigen_floor`.
    pub fn sqrt(&self, eigen_floor: f64) -> SymMatrix {
        self.map_values(|l| clamp_eigen(l.max(eigen_floor)).sqrt())
    }

    /// Symmetric inverse square root.
    pub fn inv_sqrt(&self) -> SymMatrix {
        self.map_values(|l| 1.0 / clamp_eigen(l).sqrt())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_values(|l| l)
    }
}

#[inline]
fn clamp_eigen(l: f64) -> f64 {
    if l < EIGEN_CLAMP {
        EIGEN_CLAMP
    } else {
        l
    }
}

/// Symmetric eigendecomposition (Householder tridiagonalization followed
/// by implicit QL). Eigenvalues ascending, eigenvectors orthonormal.
pub fn sym_eig(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.dim();
    if let Some(idx) = m.data.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix {
            row: idx / n,
            col: idx % n,
        });
    }
    // Row-major and column-major layouts coincide for a symmetric matrix.
    let dense = DMatrix::from_column_slice(n, n, &m.data);
    let eig = SymmetricEigen::try_new(dense, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("symmetric eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + dst] = eig.eigenvectors[(r, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

/// `V diag(max(λ, floor)^{1/2}) Vᵀ`.
pub fn sqrt_sym(m: &SymMatrix, eigen_floor: f64) -> Result<SymMatrix> {
    Ok(sym_eig(m)?.sqrt(eigen_floor))
}

/// Standard normal CDF Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density φ(x).
pub fn normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
///
/// Acklam's rational approximation followed by one Halley step.
pub fn normal_ppf(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs q in (0, 1), got {q}")));
    }
    if q > 0.5 {
        return normal_ppf(1.0 - q).map(|x| -x);
    }

    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if q < P_LOW {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = normal_cdf(x) - q;
    if e == 0.0 {
        return Ok(x);
    }
    let u = e / normal_pdf(x);
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Percentage point of the χ² distribution with one degree of freedom:
/// `normal_ppf((1 + q) / 2)²`, evaluated through the lower tail `(1 − q) / 2`.
pub fn chi2_ppf_1dof(q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!(
            "chi-squared quantile needs q in [0, 1), got {q}"
        )));
    }
    let x = normal_ppf(0.5 * (1.0 - q))?;
    Ok(x * x)
}

/// Approximation of `E‖N(0, I_n)‖`: `√n (1 − 1/(4n) + 1/(21n²))`.
pub fn expected_norm(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("expected norm needs n >= 1".into()));
    }
    let n = n as f64;
    Ok(n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n)))
}

/// Seedable random source.
///
/// Backed by ChaCha8, a counter-based generator whose output stream is
/// specified independently of the platform, so a seed replays bit for bit.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `n` independent standard normal variates.
    pub fn standard_normal(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(&mut self.inner)).collect()
    }

    /// Number of failures before the first success of a Bernoulli(p) trial.
    pub fn geometric(&mut self, p: f64) -> Result<u64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("geometric needs p in (0, 1], got {p}")));
        }
        let dist = Geometric::new(p).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(dist.sample(&mut self.inner))
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.inner.random_bool(0.5)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }
}
