//! The `T`-absolutely continuous part `[T]S`, computed two independent ways,
//! and the Lebesgue decomposition `S = [T]S + (S - [T]S)` built on it.
//!
//! The iterative route follows the monotone approximants `(2^k T):S`. The
//! closed route is `√S P_M √S` with `M = ker((I - P_T)√S)`. [`decompose`]
//! only returns when both agree.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{is_singular_pair, ScaledParallelSum};
use crate::psd::{
    check_dims, eigh_unchecked, hermitize, loewner_leq, range_projection, sqrt_psd,
    trace_distance, CMatrix, PsdMatrix, ToleranceConfig,
};

/// Allowed trace-norm gap between the two routes, relative to `max(1, ‖S‖₁)`.
pub const ORACLE_AGREEMENT: f64 = 1e-8;
/// Allowed trace-norm defect of `ac + sing - S`, relative to `max(1, ‖S‖₁)`.
pub const ADDITIVITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct IterationStep {
    pub k: u32,
    /// `2^k`
    pub n: f64,
    pub approximant: PsdMatrix,
    pub trace: f64,
    /// Trace norm of the difference to the next approximant.
    pub gap: f64,
    /// Smallest `c` with `S_k <= c T`; `None` when no finite constant exists.
    pub c_bound: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct IterationTrace {
    pub steps: Vec<IterationStep>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn last_gap(&self) -> f64 {
        self.steps.last().map_or(f64::INFINITY, |s| s.gap)
    }
}

/// Limit of `(2^k T):S` for `k = 0, 1, …`, stopping once the trace-norm gap
/// between successive approximants is at most `conv_tol * tr S`. The error
/// decays like `1/n`, so the remaining distance to the limit is about one gap.
/// Every step is checked to be Loewner-monotone and below `S`.
pub fn ac_part_iterative(
    s: &PsdMatrix,
    t: &PsdMatrix,
    cfg: &ToleranceConfig,
) -> Result<(PsdMatrix, IterationTrace)> {
    check_dims(s.dim(), t.dim())?;
    let family = ScaledParallelSum::new(s, t, cfg)?;
    let tol = cfg.conv_tol * s.trace();
    let mut trace = IterationTrace::default();
    let mut current = family.at_psd(1.0, cfg)?;
    for k in 0..cfg.max_iters {
        let n = 2f64.powi(k as i32);
        let next = family.at_psd(2.0 * n, cfg)?;
        if !loewner_leq(&current, &next, cfg)? {
            return Err(Error::Consistency(format!(
                "approximants not monotone between k = {k} and k = {}",
                k + 1
            )));
        }
        if !loewner_leq(&current, s, cfg)? {
            return Err(Error::Consistency(format!("approximant at k = {k} exceeds S")));
        }
        let gap = trace_distance(&next, &current)?;
        let c_bound = is_dominated(&current, t, cfg)?;
        trace.steps.push(IterationStep {
            k: k as u32,
            n,
            trace: current.trace(),
            gap,
            c_bound,
            approximant: current,
        });
        if gap <= tol {
            if !loewner_leq(&next, s, cfg)? {
                return Err(Error::Consistency("limit approximant exceeds S".into()));
            }
            trace.converged = true;
            return Ok((next, trace));
        }
        current = next;
    }
    Err(Error::NoConvergence {
        steps: trace.steps.len(),
        last_gap: trace.last_gap(),
        trace: Box::new(trace),
        last: Box::new(current),
    })
}

/// `√S P_M √S` with `M = ker((I - P_T)√S)`, the kernel read off an SVD.
pub fn ac_part_closed(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<PsdMatrix> {
    check_dims(s.dim(), t.dim())?;
    let n = s.dim();
    if s.is_zero() {
        return Ok(PsdMatrix::zeros(n));
    }
    let root = sqrt_psd(s);
    let p_t = range_projection(t, cfg);
    let q = CMatrix::identity(n, n) - p_t.matrix();
    let x = q * root.matrix();
    let svd = SVD::new(x, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    // singular values of (I-P)√S square to eigenvalues of the compression of S
    let thr = (cfg.rank_cutoff * s.lambda_max()).sqrt();
    let mut p_m = CMatrix::identity(n, n);
    for (i, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > thr {
            let v = v_t.row(i).adjoint();
            p_m -= &v * v.adjoint();
        }
    }
    let ac = root.matrix() * hermitize(&p_m) * root.matrix();
    PsdMatrix::from_computed(&ac, s.lambda_max(), cfg)
}

/// `range S ⊆ range T`, read as: the compression of `S` to `ker T` is below
/// `rank_cutoff * lambda_max(S)`.
pub fn range_contained(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<bool> {
    check_dims(s.dim(), t.dim())?;
    if s.is_zero() {
        return Ok(true);
    }
    let ts = t.spectral();
    let r = ts.rank(cfg.rank_cutoff);
    let uk = ts.eigenvectors.columns(r, s.dim() - r);
    if uk.ncols() == 0 {
        return Ok(true);
    }
    let c = hermitize(&(uk.adjoint() * s.matrix() * uk));
    Ok(eigh_unchecked(&c).lambda_max() <= cfg.rank_cutoff * s.lambda_max())
}

/// Smallest `c` with `S <= c T`, or `None` when `range S ⊄ range T`.
pub fn is_dominated(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<Option<f64>> {
    check_dims(s.dim(), t.dim())?;
    if s.is_zero() {
        return Ok(Some(0.0));
    }
    let ts = t.spectral();
    let r = ts.rank(cfg.rank_cutoff);
    if r == 0 || !range_contained(s, t, cfg)? {
        return Ok(None);
    }
    let ur = ts.eigenvectors.columns(0, r);
    let a = ur.adjoint() * s.matrix() * ur;
    let w: Vec<f64> = ts.eigenvalues[..r].iter().map(|l| l.sqrt().recip()).collect();
    let m = CMatrix::from_fn(r, r, |i, j| a[(i, j)] * (w[i] * w[j]));
    let c = eigh_unchecked(&hermitize(&m)).lambda_max().max(0.0);
    if !loewner_leq(s, &t.scale(c), cfg)? {
        return Err(Error::Consistency(format!(
            "computed domination constant {c:e} does not satisfy S <= cT"
        )));
    }
    Ok(Some(c))
}

#[derive(Clone, Debug)]
pub struct LebesgueDecomposition {
    /// `[T]S`
    pub ac: PsdMatrix,
    /// `S - [T]S`
    pub sing: PsdMatrix,
    pub iteration: IterationTrace,
}

pub fn decompose(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<LebesgueDecomposition> {
    cfg.validate()?;
    check_dims(s.dim(), t.dim())?;
    let (iterative, closed) = std::thread::scope(|scope| {
        let handle = scope.spawn(|| ac_part_iterative(s, t, cfg));
        let closed = ac_part_closed(s, t, cfg);
        (handle.join().expect("iterative worker panicked"), closed)
    });
    let (iterative, iteration) = iterative?;
    let closed = closed?;

    let scale = 1f64.max(s.trace());
    let gap = trace_distance(&iterative, &closed)?;
    let allowed = ORACLE_AGREEMENT * scale;
    if !(gap <= allowed) {
        return Err(Error::OracleDisagreement {
            gap,
            allowed,
            iterative: Box::new(iterative),
            closed: Box::new(closed),
        });
    }

    // the closed form is exact to rounding; the iterate carries the conv_tol residue
    let ac = closed;
    let rest = s.matrix() - ac.matrix();
    let sing = PsdMatrix::from_computed(&rest, s.lambda_max(), cfg)?;

    let defect = trace_distance(&ac.add(&sing)?, s)?;
    if defect > ADDITIVITY_TOL * scale {
        return Err(Error::Consistency(format!("ac + sing differs from S by {defect:e}")));
    }
    if !is_singular_pair(&sing, t, cfg)? {
        return Err(Error::Consistency("singular part is not singular to T".into()));
    }
    if !range_contained(&ac, t, cfg)? {
        return Err(Error::Consistency("range of ac part escapes range T".into()));
    }
    Ok(LebesgueDecomposition { ac, sing, iteration })
}

/// True iff the singular part vanishes. In finite dimensions this is range
/// inclusion, which is checked alongside.
pub fn is_absolutely_continuous(s: &PsdMatrix, t: &PsdMatrix, cfg: &ToleranceConfig) -> Result<bool> {
    let dec = decompose(s, t, cfg)?;
    let by_decomposition = dec.sing.is_zero();
    let by_range = range_contained(s, t, cfg)?;
    if by_decomposition != by_range {
        return Err(Error::Consistency(format!(
            "absolute continuity: singular part says {by_decomposition}, range inclusion says {by_range}"
        )));
    }
    Ok(by_decomposition)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessCertificate {
    pub unique: bool,
    /// Smallest `c` with `ac <= c T` when unique.
    pub c: Option<f64>,
    /// Why uniqueness fails, when it does.
    pub witness: Option<String>,
}

/// Unique precisely when `[T]S <= cT` for a finite `c`.
pub fn uniqueness_certificate(
    s: &PsdMatrix,
    t: &PsdMatrix,
    cfg: &ToleranceConfig,
) -> Result<UniquenessCertificate> {
    let dec = decompose(s, t, cfg)?;
    certify(&dec, t, cfg)
}

pub fn certify(
    dec: &LebesgueDecomposition,
    t: &PsdMatrix,
    cfg: &ToleranceConfig,
) -> Result<UniquenessCertificate> {
    Ok(match is_dominated(&dec.ac, t, cfg)? {
        Some(c) => UniquenessCertificate {
            unique: true,
            c: Some(c),
            witness: None,
        },
        None => UniquenessCertificate {
            unique: false,
            c: None,
            witness: Some("absolutely continuous part is not dominated by T".into()),
        },
    })
}

/// For `R <= S` with `R` absolutely continuous to `T`, returns `R <= [T]S`.
/// A `false` answer means the decomposition is wrong.
pub fn extremality_check(
    r: &PsdMatrix,
    s: &PsdMatrix,
    t: &PsdMatrix,
    cfg: &ToleranceConfig,
) -> Result<bool> {
    check_dims(r.dim(), s.dim())?;
    if !loewner_leq(r, s, cfg)? {
        return Err(Error::Precondition("R <= S does not hold".into()));
    }
    if !range_contained(r, t, cfg)? {
        return Err(Error::Precondition("R is not absolutely continuous with respect to T".into()));
    }
    let dec = decompose(s, t, cfg)?;
    loewner_leq(r, &dec.ac, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn d(v: &[f64]) -> PsdMatrix {
        PsdMatrix::diag(v).unwrap()
    }

    fn rows(r: &[&[f64]]) -> PsdMatrix {
        let v: Vec<Vec<f64>> = r.iter().map(|x| x.to_vec()).collect();
        PsdMatrix::from_real_rows(&v, &cfg()).unwrap()
    }

    fn ones2() -> PsdMatrix {
        rows(&[&[1.0, 1.0], &[1.0, 1.0]])
    }

    fn dist(a: &PsdMatrix, b: &PsdMatrix) -> f64 {
        trace_distance(a, b).unwrap()
    }

    #[test]
    fn iterative_identity_reference() {
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let (ac, tr) = ac_part_iterative(&s, &PsdMatrix::identity(2), &cfg()).unwrap();
        assert!(tr.converged);
        assert!(dist(&ac, &s) < 1e-8);
    }

    #[test]
    fn iterative_singular_pair_is_zero_from_the_start() {
        let (ac, tr) = ac_part_iterative(&ones2(), &d(&[1.0, 0.0]), &cfg()).unwrap();
        assert!(ac.matrix().norm() < 1e-12);
        assert_eq!(tr.steps.len(), 1);
        assert_eq!(tr.steps[0].gap, 0.0);
    }

    #[test]
    fn iterative_support_split() {
        let (ac, tr) = ac_part_iterative(&d(&[1.0, 1.0]), &d(&[1.0, 0.0]), &cfg()).unwrap();
        assert!(dist(&ac, &d(&[1.0, 0.0])) < 1e-8);
        // diag(n/(n+1), 0): traces increase, c_bound = n/(n+1)
        for w in tr.steps.windows(2) {
            assert!(w[0].trace <= w[1].trace);
        }
        let first = &tr.steps[0];
        assert!((first.c_bound.unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn iterative_reports_non_convergence() {
        let c = ToleranceConfig {
            max_iters: 3,
            ..cfg()
        };
        let err = ac_part_iterative(&d(&[1.0, 1.0]), &d(&[1.0, 0.0]), &c).unwrap_err();
        match err {
            Error::NoConvergence { steps, trace, .. } => {
                assert_eq!(steps, 3);
                assert!(!trace.converged);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn closed_form_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        assert!(dist(&ac_part_closed(&s, &PsdMatrix::identity(2), &c).unwrap(), &s) < 1e-14);
        assert!(ac_part_closed(&ones2(), &d(&[1.0, 0.0]), &c).unwrap().matrix().norm() < 1e-14);
        assert!(dist(&ac_part_closed(&d(&[2.0, 3.0]), &d(&[1.0, 0.0]), &c).unwrap(), &d(&[2.0, 0.0])) < 1e-14);
    }

    #[test]
    fn decompose_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let dec = decompose(&s, &PsdMatrix::identity(2), &c).unwrap();
        assert!(dist(&dec.ac, &s) < 1e-12 && dec.sing.is_zero());

        let dec = decompose(&ones2(), &d(&[1.0, 0.0]), &c).unwrap();
        assert!(dec.ac.is_zero());
        assert!(dist(&dec.sing, &ones2()) < 1e-12);

        let dec = decompose(&d(&[1.0, 1.0]), &d(&[1.0, 0.0]), &c).unwrap();
        assert!(dist(&dec.ac, &d(&[1.0, 0.0])) < 1e-12);
        assert!(dist(&dec.sing, &d(&[0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn decompose_degenerate_inputs() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let dec = decompose(&s, &PsdMatrix::zeros(2), &c).unwrap();
        assert!(dec.ac.is_zero());
        assert!(dist(&dec.sing, &s) < 1e-12);
        let dec = decompose(&PsdMatrix::zeros(2), &s, &c).unwrap();
        assert!(dec.ac.is_zero() && dec.sing.is_zero());
        assert!(matches!(
            decompose(&d(&[1.0]), &s, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn domination_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        assert!((is_dominated(&s, &s, &c).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((is_dominated(&d(&[2.0, 0.0]), &d(&[1.0, 0.0]), &c).unwrap().unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(is_dominated(&d(&[1.0, 1.0]), &d(&[1.0, 0.0]), &c).unwrap(), None);
    }

    #[test]
    fn absolute_continuity_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        assert!(is_absolutely_continuous(&s, &PsdMatrix::identity(2), &c).unwrap());
        assert!(!is_absolutely_continuous(&ones2(), &d(&[1.0, 0.0]), &c).unwrap());
        assert!(is_absolutely_continuous(&d(&[1.0, 0.0]), &d(&[2.0, 0.0]), &c).unwrap());
    }

    #[test]
    fn uniqueness_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let cert = uniqueness_certificate(&s, &PsdMatrix::identity(2), &c).unwrap();
        let op = s.lambda_max();
        assert!(cert.unique && (cert.c.unwrap() - op).abs() < 1e-12);
        let cert = uniqueness_certificate(&d(&[1.0, 1.0]), &d(&[1.0, 0.0]), &c).unwrap();
        assert!(cert.unique && (cert.c.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extremality_examples() {
        let c = cfg();
        let s = rows(&[&[2.0, 0.5, 0.0], &[0.5, 1.0, 0.2], &[0.0, 0.2, 0.4]]);
        let t = d(&[1.0, 0.5, 0.0]);
        let ac = decompose(&s, &t, &c).unwrap().ac;
        assert!(extremality_check(&PsdMatrix::zeros(3), &s, &t, &c).unwrap());
        assert!(extremality_check(&ac, &s, &t, &c).unwrap());
        // D = ac/2 is a minorant of ac with range in range T
        let mixed = ac.scale(0.7).add(&ac.scale(0.5 * 0.3)).unwrap();
        assert!(extremality_check(&mixed, &s, &t, &c).unwrap());
        assert!(matches!(
            extremality_check(&s.scale(2.0), &s, &t, &c),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            extremality_check(&d(&[0.0, 0.0, 0.1]), &s, &t, &c),
            Err(Error::Precondition(_))
        ));
    }
}
