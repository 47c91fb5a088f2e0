//! Seeded random operators for test panels and report spot checks.
//!
//! Eigenvalues are drawn log-uniformly so panels exercise a few decades of
//! conditioning; eigenvectors come from a Haar-ish unitary (QR of a complex
//! Gaussian matrix).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ell1::{L1Sequence, Tail};
use crate::psd::{hermitize, CMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig, C64};

pub type PanelRng = ChaCha8Rng;

pub fn rng(seed: u64) -> PanelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut PanelRng) -> f64 {
    StandardNormal.sample(rng)
}

fn complex_gaussian(rows: usize, cols: usize, rng: &mut PanelRng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_unitary(d: usize, rng: &mut PanelRng) -> CMatrix {
    let qr = complex_gaussian(d, d, rng).qr();
    let (q, r) = qr.unpack();
    // fix the phases so the distribution does not depend on QR conventions
    let mut q = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        if norm > 0.0 {
            let phase = rjj / norm;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

pub fn random_unit_vector(d: usize, rng: &mut PanelRng) -> CMatrix {
    let v = complex_gaussian(d, 1, rng);
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn log_uniform(lo: f64, hi: f64, rng: &mut PanelRng) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

/// `U diag(λ) U*` restricted to the columns `cols` of `u`.
fn from_columns(u: &CMatrix, cols: &[usize], values: &[f64]) -> CMatrix {
    let d = u.nrows();
    let mut m = CMatrix::zeros(d, d);
    for (&c, &l) in cols.iter().zip(values) {
        let v = u.column(c);
        m += v * v.adjoint() * C64::new(l, 0.0);
    }
    hermitize(&m)
}

/// Rank-`rank` PSD matrix with eigenvalues log-uniform in `[lo, hi]`.
pub fn random_psd(d: usize, rank: usize, lo: f64, hi: f64, rng: &mut PanelRng) -> PsdMatrix {
    let u = random_unitary(d, rng);
    let cols: Vec<usize> = (0..rank).collect();
    let values: Vec<f64> = (0..rank).map(|_| log_uniform(lo, hi, rng)).collect();
    PsdMatrix::from_matrix(from_columns(&u, &cols, &values), &ToleranceConfig::default())
        .expect("constructed PSD")
}

/// Gaussian Hermitian matrix with unit-variance entries.
pub fn random_hermitian(d: usize, rng: &mut PanelRng) -> HermitianMatrix {
    HermitianMatrix::new(hermitize(&complex_gaussian(d, d, rng))).expect("hermitized")
}

/// A pair `(S, T)` of dimension in `dims`, each with uniformly random rank.
/// `T` eigenvalues span `[1e-3, 1]`, `S` eigenvalues `[1e-2, 1]`.
pub fn random_pair(dims: std::ops::RangeInclusive<usize>, rng: &mut PanelRng) -> (PsdMatrix, PsdMatrix) {
    let d = rng.random_range(dims);
    let rank_t = rng.random_range(1..=d);
    let rank_s = rng.random_range(1..=d);
    let t = random_psd(d, rank_t, 1e-3, 1.0, rng);
    let s = random_psd(d, rank_s, 1e-2, 1.0, rng);
    (s, t)
}

/// A pair with `range S ∩ range T = {0}` built from disjoint eigenvector sets.
pub fn random_singular_pair(
    dims: std::ops::RangeInclusive<usize>,
    rng: &mut PanelRng,
) -> (PsdMatrix, PsdMatrix) {
    let d = rng.random_range(dims);
    let u = random_unitary(d, rng);
    let rank_s = rng.random_range(1..d);
    let rank_t = rng.random_range(1..=d - rank_s);
    let s_cols: Vec<usize> = (0..rank_s).collect();
    let t_cols: Vec<usize> = (rank_s..rank_s + rank_t).collect();
    let s_vals: Vec<f64> = s_cols.iter().map(|_| log_uniform(1e-2, 1.0, rng)).collect();
    let t_vals: Vec<f64> = t_cols.iter().map(|_| log_uniform(1e-2, 1.0, rng)).collect();
    let cfg = ToleranceConfig::default();
    (
        PsdMatrix::from_matrix(from_columns(&u, &s_cols, &s_vals), &cfg).expect("constructed PSD"),
        PsdMatrix::from_matrix(from_columns(&u, &t_cols, &t_vals), &cfg).expect("constructed PSD"),
    )
}

/// A sequence with a short prefix (some entries zero) and, usually, a
/// geometric tail with ratio in `[r_lo, r_hi]`.
pub fn random_sequence(r_lo: f64, r_hi: f64, rng: &mut PanelRng) -> L1Sequence {
    let len = rng.random_range(0..=6);
    let prefix: Vec<f64> = (0..len)
        .map(|_| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                log_uniform(1e-2, 1.0, rng)
            }
        })
        .collect();
    let tail = rng.random_bool(0.8).then(|| Tail::Geometric {
        a: log_uniform(1e-1, 1.0, rng),
        r: rng.random_range(r_lo..=r_hi),
    });
    L1Sequence::new(prefix, tail).expect("valid by construction")
}
