//! Hermitian and positive semidefinite matrix kernel.
//!
//! Every comparison in this module takes its tolerance from a
//! [`ToleranceConfig`]; there are no hidden epsilons apart from the
//! Hermitian-symmetry check, whose bound is fixed by the matrix format.

use nalgebra::{Complex, DMatrix, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative bound for `|a_ij - conj(a_ji)|`, scaled by the largest entry (floor 1).
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Negative eigenvalues down to `-psd_tol * max(1, lambda_max)` are clipped to zero.
    pub psd_tol: f64,
    /// Eigenvalues at or below `rank_cutoff * lambda_max` count as zero.
    pub rank_cutoff: f64,
    /// Relative stopping threshold for iterative limits.
    pub conv_tol: f64,
    pub max_iters: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            psd_tol: 1e-10,
            rank_cutoff: 1e-10,
            conv_tol: 1e-9,
            max_iters: 60,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("psd_tol", self.psd_tol),
            ("rank_cutoff", self.rank_cutoff),
            ("conv_tol", self.conv_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Eigenvalues in nonincreasing order with matching orthonormal eigenvector columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V*` for a scalar function applied to the eigenvalues.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let s = f(lam);
            scaled.column_mut(j).scale_mut(s);
        }
        &scaled * v.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// Number of eigenvalues strictly above `cutoff * lambda_max`.
    pub fn rank(&self, cutoff: f64) -> usize {
        let thr = cutoff * self.lambda_max();
        if self.lambda_max() <= 0.0 {
            return 0;
        }
        self.eigenvalues.iter().filter(|&&l| l > thr).count()
    }
}

/// Square complex matrix equal to its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    m: CMatrix,
}

impl HermitianMatrix {
    /// Validates symmetry and stores the exactly-Hermitian average `(A + A*)/2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        let mut max_abs: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let z = m[(i, j)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { i, j });
                }
                max_abs = max_abs.max(z.norm());
            }
        }
        let bound = HERMITIAN_TOL * max_abs.max(1.0);
        for i in 0..n {
            for j in i..n {
                let diff = (m[(i, j)] - m[(j, i)].conj()).norm();
                if diff > bound {
                    return Err(Error::NotHermitian { i, j, diff });
                }
            }
        }
        Ok(Self { m: hermitize(&m) })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(real_rows_to_matrix(rows)?)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn eigh(&self) -> SpectralDecomp {
        eigh_unchecked(&self.m)
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            m: self.m.map(|z| z * alpha),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            m: hermitize(&(&self.m - &other.m)),
        })
    }
}

/// Spectral decomposition of a Hermitian matrix. Rejects non-Hermitian input,
/// naming the offending entry pair.
pub fn eigh(a: &CMatrix) -> Result<SpectralDecomp> {
    Ok(HermitianMatrix::new(a.clone())?.eigh())
}

pub(crate) fn eigh_unchecked(m: &CMatrix) -> SpectralDecomp {
    let n = m.nrows();
    if n == 0 {
        return SpectralDecomp {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    SpectralDecomp {
        eigenvalues,
        eigenvectors,
    }
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub(crate) fn real_rows_to_matrix(rows: &[Vec<f64>]) -> Result<CMatrix> {
    let n = rows.len();
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Ragged {
                row: r,
                len: row.len(),
                expected: n,
            });
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0)))
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Positive semidefinite matrix with its spectral form cached.
#[derive(Clone, Debug)]
pub struct PsdMatrix {
    herm: HermitianMatrix,
    spectral: SpectralDecomp,
}

impl PsdMatrix {
    /// Accepts eigenvalues down to `-psd_tol * max(1, lambda_max)`; those
    /// slightly negative values are clipped to zero.
    pub fn new(h: HermitianMatrix, cfg: &ToleranceConfig) -> Result<Self> {
        let spectral = h.eigh();
        let bound = cfg.psd_tol * spectral.lambda_max().max(1.0);
        Self::finish(h, spectral, bound, 0.0)
    }

    pub fn from_matrix(m: CMatrix, cfg: &ToleranceConfig) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?, cfg)
    }

    pub fn from_real_rows(rows: &[Vec<f64>], cfg: &ToleranceConfig) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_rows(rows)?, cfg)
    }

    /// Diagonal matrix; entries must be nonnegative.
    pub fn diag(values: &[f64]) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NotPsd {
                min_eig: v,
                bound: 0.0,
            });
        }
        Self::new(HermitianMatrix::diag(values)?, &ToleranceConfig::default())
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n]).expect("identity is PSD")
    }

    pub fn zeros(n: usize) -> Self {
        Self::diag(&vec![0.0; n]).expect("zero is PSD")
    }

    /// Wraps the output of an internal computation that is PSD in exact
    /// arithmetic. `scale` is the magnitude of the inputs the value came
    /// from: eigenvalues within `rank_cutoff * scale` of zero are snapped to
    /// zero, and anything below `-psd_tol * scale` is reported.
    pub(crate) fn from_computed(m: &CMatrix, scale: f64, cfg: &ToleranceConfig) -> Result<Self> {
        let herm = HermitianMatrix { m: hermitize(m) };
        let spectral = herm.eigh();
        let scale = scale.max(spectral.lambda_max()).max(f64::MIN_POSITIVE);
        Self::finish(herm, spectral, cfg.psd_tol * scale, cfg.rank_cutoff * scale)
    }

    fn finish(
        h: HermitianMatrix,
        mut spectral: SpectralDecomp,
        neg_bound: f64,
        snap: f64,
    ) -> Result<Self> {
        let min = spectral.lambda_min();
        if min < -neg_bound {
            return Err(Error::NotPsd {
                min_eig: min,
                bound: neg_bound,
            });
        }
        let mut changed = false;
        for l in spectral.eigenvalues.iter_mut() {
            if *l < 0.0 || (*l != 0.0 && *l <= snap) {
                *l = 0.0;
                changed = true;
            }
        }
        let herm = if changed {
            HermitianMatrix {
                m: hermitize(&spectral.reconstruct()),
            }
        } else {
            h
        };
        Ok(Self { herm, spectral })
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.herm.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn spectral(&self) -> &SpectralDecomp {
        &self.spectral
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectral.eigenvalues
    }

    pub fn lambda_max(&self) -> f64 {
        self.spectral.lambda_max()
    }

    pub fn trace(&self) -> f64 {
        self.spectral.eigenvalues.iter().sum()
    }

    pub fn rank(&self, cfg: &ToleranceConfig) -> usize {
        self.spectral.rank(cfg.rank_cutoff)
    }

    pub fn is_zero(&self) -> bool {
        self.lambda_max() <= 0.0
    }

    /// `alpha * A` for `alpha >= 0`; the spectral form scales along.
    pub fn scale(&self, alpha: f64) -> Self {
        assert!(alpha >= 0.0, "PSD matrices scale by nonnegative factors");
        Self {
            herm: self.herm.scale(alpha),
            spectral: SpectralDecomp {
                eigenvalues: self.spectral.eigenvalues.iter().map(|l| l * alpha).collect(),
                eigenvectors: self.spectral.eigenvectors.clone(),
            },
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        let herm = HermitianMatrix {
            m: hermitize(&(self.matrix() + other.matrix())),
        };
        let spectral = herm.eigh();
        let bound = f64::EPSILON * 64.0 * spectral.lambda_max().max(f64::MIN_POSITIVE);
        Self::finish(herm, spectral, bound, 0.0)
    }
}

/// Square root with the same eigenvectors.
pub fn sqrt_psd(a: &PsdMatrix) -> PsdMatrix {
    let m = a.spectral.map(|l| l.max(0.0).sqrt());
    let spectral = SpectralDecomp {
        eigenvalues: a.spectral.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect(),
        eigenvectors: a.spectral.eigenvectors.clone(),
    };
    PsdMatrix {
        herm: HermitianMatrix { m: hermitize(&m) },
        spectral,
    }
}

/// Moore–Penrose inverse; eigenvalues at or below `rank_cutoff * lambda_max` are dropped.
pub fn pinv_psd(a: &PsdMatrix, cfg: &ToleranceConfig) -> PsdMatrix {
    let thr = cfg.rank_cutoff * a.lambda_max();
    let inv = |l: f64| if l > thr && l > 0.0 { 1.0 / l } else { 0.0 };
    let mut eigenvalues: Vec<f64> = a.spectral.eigenvalues.iter().map(|&l| inv(l)).collect();
    let m = a.spectral.map(inv);
    // inverse reverses the order of the nonzero part
    let n = eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eigenvalues[y].total_cmp(&eigenvalues[x]));
    let v = &a.spectral.eigenvectors;
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    eigenvalues = order.iter().map(|&k| eigenvalues[k]).collect();
    PsdMatrix {
        herm: HermitianMatrix { m: hermitize(&m) },
        spectral: SpectralDecomp {
            eigenvalues,
            eigenvectors,
        },
    }
}

/// Orthogonal projection onto the span of eigenvectors with eigenvalue above
/// `rank_cutoff * lambda_max`.
pub fn range_projection(a: &PsdMatrix, cfg: &ToleranceConfig) -> PsdMatrix {
    let r = a.rank(cfg);
    let n = a.dim();
    let v = &a.spectral.eigenvectors;
    let cols = v.columns(0, r);
    let m = &cols * cols.adjoint();
    let mut eigenvalues = vec![0.0; n];
    eigenvalues[..r].iter_mut().for_each(|l| *l = 1.0);
    PsdMatrix {
        herm: HermitianMatrix { m: hermitize(&m) },
        spectral: SpectralDecomp {
            eigenvalues,
            eigenvectors: v.clone(),
        },
    }
}

/// `A <= B` in the Loewner order: the smallest eigenvalue of `B - A` is at
/// least `-psd_tol * max(1, lambda_max(B))`.
pub fn loewner_leq(a: &PsdMatrix, b: &PsdMatrix, cfg: &ToleranceConfig) -> Result<bool> {
    check_dims(a.dim(), b.dim())?;
    let diff = hermitize(&(b.matrix() - a.matrix()));
    let min = eigh_unchecked(&diff).lambda_min();
    Ok(min >= -cfg.psd_tol * b.lambda_max().max(1.0))
}

pub fn trace(a: &HermitianMatrix) -> f64 {
    a.matrix().trace().re
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(a: &HermitianMatrix) -> f64 {
    a.eigh().eigenvalues.iter().map(|l| l.abs()).sum()
}

/// Largest singular value.
pub fn op_norm(a: &HermitianMatrix) -> f64 {
    let s = a.eigh();
    s.lambda_max().abs().max(s.lambda_min().abs())
}

/// Largest singular value of an arbitrary square matrix.
pub fn op_norm_general(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SVD::new(a.clone(), false, false).singular_values.max()
}

/// Hilbert–Schmidt pairing `<A, B>_2 = trace(B* A)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    check_dims(a.nrows(), b.nrows())?;
    check_dims(a.ncols(), b.ncols())?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| y.conj() * x).sum())
}

/// Trace norm of the Hermitian difference `A - B`.
pub fn trace_distance(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    Ok(trace_norm(&a.hermitian().sub(b.hermitian())?))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.norm()
}
