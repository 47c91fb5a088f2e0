//! Parallel sums `S:T = S (S+T)^† T` and the singularity test they induce.

use crate::error::{Error, Result};
use crate::psd::{
    check_dims, eigh_unchecked, hermitize, pinv_psd, range_projection, CMatrix, PsdMatrix,
    ToleranceConfig, C64,
};

pub fn parallel_sum(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<PsdMatrix> {
    check_dims(s.dim(), t.dim())?;
    let scale = s.lambda_max().max(t.lambda_max());
    if scale <= 0.0 {
        return Ok(PsdMatrix::zeros(s.dim()));
    }
    let sum = s.add(t)?;
    let inv = pinv_psd(&sum, cfg);
    let p = s.matrix() * inv.matrix() * t.matrix();
    PsdMatrix::from_computed(&p, scale, cfg)
}

/// Decides `S ⊥ T` twice: by the trace of the parallel sum and by the
/// dimension of `range S ∩ range T`. The two must agree.
pub fn is_singular_pair(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<bool> {
    let ps = parallel_sum(s, t, cfg)?;
    let by_trace = ps.trace() <= cfg.conv_tol * 1f64.max(s.trace()).max(t.trace());
    let by_range = range_intersection_dim(s, t, cfg) == 0;
    if by_trace != by_range {
        return Err(Error::Consistency(format!(
            "singularity criteria disagree: trace(S:T) = {:e} says {}, range intersection says {}",
            ps.trace(),
            by_trace,
            by_range
        )));
    }
    Ok(by_trace)
}

/// `rank P_S + rank P_T - rank(P_S + P_T)`.
pub fn range_intersection_dim(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> usize {
    let ps = range_projection(s, cfg);
    let pt = range_projection(t, cfg);
    let rs = s.rank(cfg);
    let rt = t.rank(cfg);
    let sum = eigh_unchecked(&hermitize(&(ps.matrix() + pt.matrix())));
    (rs + rt).saturating_sub(sum.rank(cfg.rank_cutoff))
}

/// A nonzero `R` with `R <= S` and `R <= T`, or `None` when the pair is singular.
pub fn nonzero_common_minorant(
    s: &PsdMatrix,
    t: &PsdMatrix,
    cfg: &ToleranceConfig,
) -> Result<Option<PsdMatrix>> {
    if is_singular_pair(s, t, cfg)? {
        Ok(None)
    } else {
        parallel_sum(s, t, cfg).map(Some)
    }
}

/// Evaluates the family `(nT):S` for growing `n` without forming `S + nT`.
///
/// In an eigenbasis of `T` split as range `R` (eigenvalues `Λ`) and kernel
/// `K`, write `S = [[A, B], [B*, C]]`. Then `(nT):S` lives on `R` and equals
///
/// ```text
/// Λ^½ [ (nI):Ã  -  Y Z^† Y* ] Λ^½,   Ã = Λ^-½ A Λ^-½,  B̃ = Λ^-½ B,
/// Y = n (nI + Ã)^-1 B̃,              Z = C - B̃* (nI + Ã)^-1 B̃,
/// ```
///
/// which stays accurate for `n` up to `2^60` because `Ã` is diagonalised once.
pub struct ScaledParallelSum {
    dim: usize,
    s_scale: f64,
    cutoff: f64,
    /// `U_R Λ^½ V`, maps the `Ã` eigenbasis back to the ambient space.
    embed: CMatrix,
    a_eigs: Vec<f64>,
    /// `V* B̃`
    vb: CMatrix,
    c: CMatrix,
}

impl ScaledParallelSum {
    pub fn new(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<Self> {
        check_dims(s.dim(), t.dim())?;
        let dim = s.dim();
        let ts = t.spectral();
        let r = ts.rank(cfg.rank_cutoff);
        let u = &ts.eigenvectors;
        let ur = u.columns(0, r).into_owned();
        let uk = u.columns(r, dim - r).into_owned();
        let s_m = s.matrix();
        let a = ur.adjoint() * s_m * &ur;
        let b = ur.adjoint() * s_m * &uk;
        let c = hermitize(&(uk.adjoint() * s_m * &uk));
        let half_inv: Vec<f64> = ts.eigenvalues[..r].iter().map(|l| l.sqrt().recip()).collect();
        let half: Vec<f64> = ts.eigenvalues[..r].iter().map(|l| l.sqrt()).collect();
        let a_tilde = CMatrix::from_fn(r, r, |i, j| a[(i, j)] * (half_inv[i] * half_inv[j]));
        let b_tilde = CMatrix::from_fn(r, dim - r, |i, j| b[(i, j)] * half_inv[i]);
        let eig = eigh_unchecked(&hermitize(&a_tilde));
        let v = eig.eigenvectors;
        let a_eigs = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
        let vb = v.adjoint() * &b_tilde;
        let mut urh = ur;
        for (j, h) in half.iter().enumerate() {
            urh.column_mut(j).scale_mut(*h);
        }
        let embed = urh * v;
        Ok(Self {
            dim,
            s_scale: s.lambda_max(),
            cutoff: cfg.rank_cutoff * s.lambda_max(),
            embed,
            a_eigs,
            vb,
            c,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `(nT):S` as a raw Hermitian matrix.
    pub fn at(&self, n: f64) -> CMatrix {
        let r = self.a_eigs.len();
        let k = self.c.nrows();
        let mut mid = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            r,
            self.a_eigs.iter().map(|&a| C64::new(harmonic(n, a), 0.0)),
        ));
        if k > 0 && r > 0 {
            let y = CMatrix::from_fn(r, k, |i, j| self.vb[(i, j)] * (n / (n + self.a_eigs[i])));
            let w = CMatrix::from_fn(r, k, |i, j| self.vb[(i, j)] * (1.0 / (n + self.a_eigs[i])));
            let z = hermitize(&(&self.c - self.vb.adjoint() * w));
            let z_pinv = pinv_abs(&z, self.cutoff);
            mid -= &y * z_pinv * y.adjoint();
        }
        hermitize(&(&self.embed * mid * self.embed.adjoint()))
    }

    pub fn at_psd(&self, n: f64, cfg: &ToleranceConfig) -> Result<PsdMatrix> {
        if self.a_eigs.is_empty() || self.s_scale <= 0.0 {
            return Ok(PsdMatrix::zeros(self.dim));
        }
        PsdMatrix::from_computed(&self.at(n), self.s_scale, cfg)
    }
}

/// `n a / (n + a)`, the scalar parallel sum.
fn harmonic(n: f64, a: f64) -> f64 {
    if a <= 0.0 {
        0.0
    } else {
        n * a / (n + a)
    }
}

/// Pseudoinverse of a Hermitian matrix dropping eigenvalues at or below an absolute threshold.
fn pinv_abs(z: &CMatrix, thr: f64) -> CMatrix {
    let eig = eigh_unchecked(z);
    eig.map(|l| if l > thr && l > 0.0 { 1.0 / l } else { 0.0 })
}
