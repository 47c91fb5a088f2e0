//! Normal positive functionals `f_T(A) = tr(AT)`, held by their representing operator.
//!
//! Order, singularity and Lebesgue decomposition of functionals are decided
//! on the representing operators; the functional layer adds pointwise checks
//! on random test panels so the correspondence is exercised, not assumed.

use crate::ell1::{self, seq_leq, L1Sequence, RatioCertificate};
use crate::engine::{ac_part_iterative, decompose, range_contained, uniqueness_certificate, IterationTrace, UniquenessCertificate};
use crate::error::{Error, Result};
use crate::panel;
use crate::psd::{check_dims, hermitize, loewner_leq, op_norm, CMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig, C64};

/// Number of random Hermitian test matrices used to spot-check additivity.
pub const ADDITIVITY_PANEL: usize = 50;
pub const ADDITIVITY_REL_TOL: f64 = 1e-9;
const PANEL_SEED: u64 = 0x5eed;

#[derive(Clone, Debug)]
pub enum Rep {
    Matrix(PsdMatrix),
    Sequence(L1Sequence),
}

#[derive(Clone, Debug)]
pub struct NormalFunctional {
    rep: Rep,
    label: Option<String>,
}

impl NormalFunctional {
    pub fn new(rep: Rep, label: Option<String>) -> Self {
        Self { rep, label }
    }

    pub fn from_matrix(t: PsdMatrix) -> Self {
        Self::new(Rep::Matrix(t), None)
    }

    pub fn from_sequence(t: L1Sequence) -> Self {
        Self::new(Rep::Sequence(t), None)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn rep(&self) -> &Rep {
        &self.rep
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn kind(&self) -> &'static str {
        match self.rep {
            Rep::Matrix(_) => "matrix",
            Rep::Sequence(_) => "sequence",
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.rep {
            Rep::Matrix(t) => t.is_zero(),
            Rep::Sequence(t) => t.is_zero(),
        }
    }

    /// The representing operator as an `n x n` matrix; sequences are truncated.
    pub fn rep_matrix(&self, n: usize) -> Result<PsdMatrix> {
        match &self.rep {
            Rep::Matrix(t) => {
                check_dims(n, t.dim())?;
                Ok(t.clone())
            }
            Rep::Sequence(t) => t.truncate_to_matrix(n),
        }
    }

    /// `tr(A T)` for any square `A`. A sequence rep pairs with `A ⊕ 0`.
    pub fn apply(&self, a: &CMatrix) -> Result<C64> {
        let n = a.nrows();
        check_dims(n, a.ncols())?;
        match &self.rep {
            Rep::Matrix(t) => {
                check_dims(n, t.dim())?;
                Ok((a * t.matrix()).trace())
            }
            Rep::Sequence(t) => Ok((0..n).map(|i| a[(i, i)] * t.value(i as u64 + 1)).sum()),
        }
    }

    /// `f(A)` for Hermitian `A`; real because `tr(AT)` is real for Hermitian pairs.
    pub fn evaluate(&self, a: &HermitianMatrix) -> Result<f64> {
        Ok(self.apply(a.matrix())?.re)
    }
}

fn same_kind<'a>(f: &'a NormalFunctional, g: &'a NormalFunctional) -> Result<(&'a Rep, &'a Rep)> {
    match (&f.rep, &g.rep) {
        (Rep::Matrix(a), Rep::Matrix(b)) => {
            check_dims(a.dim(), b.dim())?;
            Ok((&f.rep, &g.rep))
        }
        (Rep::Sequence(_), Rep::Sequence(_)) => Ok((&f.rep, &g.rep)),
        _ => Err(Error::Precondition(format!(
            "functionals of different kinds: {} and {}",
            f.kind(),
            g.kind()
        ))),
    }
}

/// `f <= g`, decided as `T_f <= T_g` on the representing operators.
pub fn functional_leq(f: &NormalFunctional, g: &NormalFunctional, cfg: &ToleranceConfig) -> Result<bool> {
    match same_kind(f, g)? {
        (Rep::Matrix(a), Rep::Matrix(b)) => loewner_leq(a, b, cfg),
        (Rep::Sequence(a), Rep::Sequence(b)) => Ok(seq_leq(a, b)),
        _ => unreachable!(),
    }
}

#[derive(Clone, Debug)]
pub struct FunctionalDecomposition {
    /// `g_r`, absolutely continuous with respect to `f`.
    pub regular: NormalFunctional,
    /// `g_s`, singular with respect to `f`.
    pub singular: NormalFunctional,
    /// Present for matrix reps.
    pub iteration: Option<IterationTrace>,
}

/// `g = g_r + g_s` relative to `f`, via the decomposition of the
/// representing operators. Additivity is re-checked pointwise on a fixed
/// panel of random Hermitian matrices.
pub fn functional_lebesgue(
    g: &NormalFunctional,
    f: &NormalFunctional,
    cfg: &ToleranceConfig,
) -> Result<FunctionalDecomposition> {
    let (regular, singular, iteration, dim) = match same_kind(g, f)? {
        (Rep::Matrix(s), Rep::Matrix(t)) => {
            let dec = decompose(s, t, cfg)?;
            (Rep::Matrix(dec.ac), Rep::Matrix(dec.sing), Some(dec.iteration), s.dim())
        }
        (Rep::Sequence(s), Rep::Sequence(t)) => {
            let (ac, sing) = ell1::diag_decompose(s, t);
            let dim = s.prefix().len().max(t.prefix().len()) + 8;
            (Rep::Sequence(ac), Rep::Sequence(sing), None, dim)
        }
        _ => unreachable!(),
    };
    let out = FunctionalDecomposition {
        regular: NormalFunctional::new(regular, g.label.as_ref().map(|l| format!("{l}_r"))),
        singular: NormalFunctional::new(singular, g.label.as_ref().map(|l| format!("{l}_s"))),
        iteration,
    };
    check_additivity(g, &out, dim)?;
    Ok(out)
}

fn check_additivity(g: &NormalFunctional, dec: &FunctionalDecomposition, dim: usize) -> Result<()> {
    let mut rng = panel::rng(PANEL_SEED);
    let scale = g.rep_matrix(dim)?.trace().max(f64::MIN_POSITIVE);
    for _ in 0..ADDITIVITY_PANEL {
        let a = panel::random_hermitian(dim, &mut rng);
        let whole = g.evaluate(&a)?;
        let parts = dec.regular.evaluate(&a)? + dec.singular.evaluate(&a)?;
        // |f(A)| <= ‖A‖ ‖T‖₁ sets the natural scale of each value
        let allowed = ADDITIVITY_REL_TOL * op_norm(&a) * scale;
        if (whole - parts).abs() > allowed {
            return Err(Error::Consistency(format!(
                "g_r + g_s differs from g by {:e} on a test matrix",
                (whole - parts).abs()
            )));
        }
    }
    Ok(())
}

/// Unique iff `g_r <= c f` for a finite `c`.
pub fn functional_uniqueness(
    g: &NormalFunctional,
    f: &NormalFunctional,
    cfg: &ToleranceConfig,
) -> Result<UniquenessCertificate> {
    match same_kind(g, f)? {
        (Rep::Matrix(s), Rep::Matrix(t)) => uniqueness_certificate(s, t, cfg),
        (Rep::Sequence(s), Rep::Sequence(t)) => {
            let (unique, cert) = ell1::diag_uniqueness(s, t)?;
            Ok(sequence_certificate(unique, &cert))
        }
        _ => unreachable!(),
    }
}

pub(crate) fn sequence_certificate(unique: bool, cert: &RatioCertificate) -> UniquenessCertificate {
    match cert {
        RatioCertificate::Bounded { c, .. } => UniquenessCertificate {
            unique,
            c: Some(*c),
            witness: None,
        },
        RatioCertificate::Unbounded { witnesses } => {
            let w = witnesses.last().expect("unbounded certificates carry witnesses");
            UniquenessCertificate {
                unique,
                c: None,
                witness: Some(format!(
                    "ratio of absolutely continuous part to T reaches {:e} at index {}",
                    w.bound, w.index
                )),
            }
        }
    }
}

/// When `g` is almost dominated by `f`, the increasing sequence of
/// dominated functionals `f_{S_k}` converging to it, each with its
/// domination constant. `None` when `g` has a singular part.
pub fn almost_domination_witness(
    g: &NormalFunctional,
    f: &NormalFunctional,
    cfg: &ToleranceConfig,
) -> Result<Option<Vec<(NormalFunctional, f64)>>> {
    let (Rep::Matrix(s), Rep::Matrix(t)) = same_kind(g, f)? else {
        return Err(Error::Precondition("almost-domination witnesses need matrix reps".into()));
    };
    if !range_contained(s, t, cfg)? {
        return Ok(None);
    }
    let (_, trace) = ac_part_iterative(s, t, cfg)?;
    trace
        .steps
        .into_iter()
        .map(|step| {
            let c = step.c_bound.ok_or_else(|| {
                Error::Consistency(format!("approximant at k = {} is not dominated", step.k))
            })?;
            Ok((NormalFunctional::from_matrix(step.approximant), c))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Lower estimates of `sup { |f(X* A)|² : f(A* A) <= 1 }` along the family
/// `A_k = X P_k / √f(P_k X* X P_k)`, `P_k` the top-`k` eigenprojection of
/// the rep. Ranks where the normaliser vanishes contribute `0`.
pub fn kvn_sup_estimate(
    f: &NormalFunctional,
    x: &HermitianMatrix,
    schedule: &[usize],
    cfg: &ToleranceConfig,
) -> Result<Vec<f64>> {
    if f.is_zero() {
        return Err(Error::Precondition("the zero functional has no normalisable test operators".into()));
    }
    let n = x.dim();
    let t = f.rep_matrix(n)?;
    if let Some(&bad) = schedule.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::Precondition(format!("rank {bad} outside 1..={n}")));
    }
    if schedule.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("rank schedule must be nondecreasing".into()));
    }
    let u = &t.spectral().eigenvectors;
    let xm = x.matrix();
    let xx = xm.adjoint() * xm;
    let floor = cfg.rank_cutoff * t.lambda_max() * op_norm(x).powi(2);
    let mut out: Vec<f64> = Vec::with_capacity(schedule.len());
    for &k in schedule {
        let uk = u.columns(0, k);
        let p = hermitize(&(uk * uk.adjoint()));
        let norm_sq = f.apply(&(&p * &xx * &p))?.re;
        let value = if norm_sq <= floor {
            0.0
        } else {
            let a = xm * &p / C64::new(norm_sq.sqrt(), 0.0);
            f.apply(&(xm.adjoint() * a))?.norm_sqr()
        };
        let prev = out.last().copied().unwrap_or(0.0);
        if value < prev {
            if prev - value > 1e-12 * prev {
                return Err(Error::Consistency(format!(
                    "estimate decreased from {prev:e} to {value:e} at rank {k}"
                )));
            }
            out.push(prev);
        } else {
            out.push(value);
        }
    }
    Ok(out)
}

/// `f(I)` minus the full-rank estimate with `X = I`; zero up to rounding
/// for every matrix functional.
pub fn normality_gap(f: &NormalFunctional, cfg: &ToleranceConfig) -> Result<f64> {
    let Rep::Matrix(t) = &f.rep else {
        return Err(Error::Precondition("normality gap is defined for matrix reps".into()));
    };
    if t.is_zero() {
        return Ok(0.0);
    }
    let n = t.dim();
    let est = kvn_sup_estimate(f, &HermitianMatrix::identity(n), &[n], cfg)?;
    Ok(t.trace() - est[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ell1::Tail;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn fd(v: &[f64]) -> NormalFunctional {
        NormalFunctional::from_matrix(PsdMatrix::diag(v).unwrap())
    }

    fn herm(rows: &[&[f64]]) -> HermitianMatrix {
        HermitianMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let a = herm(&[&[1.0, 2.0, 0.0], &[2.0, -3.0, 1.0], &[0.0, 1.0, 5.0]]);
        assert_eq!(NormalFunctional::from_matrix(PsdMatrix::identity(3)).evaluate(&a).unwrap(), 3.0);
        let swap = herm(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(fd(&[1.0, 2.0]).evaluate(&swap).unwrap(), 0.0);
        // rank-one projection onto (1, 1)/√2 against [[2,1],[1,3]]: <Te,e> = 3.5
        let t = NormalFunctional::from_matrix(PsdMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]], &cfg()).unwrap());
        let p = herm(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!((t.evaluate(&p).unwrap() - 3.5).abs() < 1e-15);
        assert!(fd(&[1.0]).evaluate(&HermitianMatrix::identity(2)).is_err());
    }

    #[test]
    fn sequence_evaluation_pairs_with_diagonal() {
        let f = NormalFunctional::from_sequence(L1Sequence::geometric(1.0, 0.5).unwrap());
        let a = herm(&[&[4.0, 7.0], &[7.0, 8.0]]);
        assert_eq!(f.evaluate(&a).unwrap(), 4.0 * 0.5 + 8.0 * 0.25);
    }

    #[test]
    fn leq_examples() {
        let c = cfg();
        let s = fd(&[1.0, 3.0]);
        assert!(functional_leq(&s, &s, &c).unwrap());
        assert!(functional_leq(&fd(&[1.0, 0.0]), &fd(&[1.0, 1.0]), &c).unwrap());
        assert!(!functional_leq(&fd(&[2.0, 0.0]), &fd(&[1.0, 1.0]), &c).unwrap());
        let seq = NormalFunctional::from_sequence(L1Sequence::geometric(1.0, 0.5).unwrap());
        assert!(functional_leq(&s, &seq, &c).is_err());
    }

    #[test]
    fn lebesgue_examples() {
        let c = cfg();
        let g = NormalFunctional::from_matrix(PsdMatrix::from_real_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]], &c).unwrap());
        let dec = functional_lebesgue(&g, &NormalFunctional::from_matrix(PsdMatrix::identity(2)), &c).unwrap();
        assert!(dec.singular.is_zero());

        let ones = NormalFunctional::from_matrix(PsdMatrix::from_real_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], &c).unwrap());
        let dec = functional_lebesgue(&ones, &fd(&[1.0, 0.0]), &c).unwrap();
        assert!(dec.regular.is_zero());

        let lambda = L1Sequence::geometric(1.0, 0.5).unwrap();
        let (t, s, _) = ell1::theorem_b_instance(&lambda).unwrap();
        let g = NormalFunctional::from_sequence(s);
        let f = NormalFunctional::from_sequence(t);
        let dec = functional_lebesgue(&g, &f, &c).unwrap();
        assert!(dec.singular.is_zero());
        assert!(!functional_uniqueness(&g, &f, &c).unwrap().unique);
    }

    #[test]
    fn uniqueness_on_sequences() {
        let t = L1Sequence::new(vec![1.0], Some(Tail::Geometric { a: 1.0, r: 0.5 })).unwrap();
        let f = NormalFunctional::from_sequence(t);
        let cert = functional_uniqueness(&f, &f, &cfg()).unwrap();
        assert!(cert.unique);
        assert_eq!(cert.c, Some(1.0));
    }

    #[test]
    fn almost_domination_sequence() {
        let c = cfg();
        let g = NormalFunctional::from_matrix(PsdMatrix::from_real_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]], &c).unwrap());
        let f = fd(&[1.0, 0.25]);
        let seq = almost_domination_witness(&g, &f, &c).unwrap().unwrap();
        assert!(!seq.is_empty());
        for w in seq.windows(2) {
            assert!(functional_leq(&w[0].0, &w[1].0, &c).unwrap());
        }
        assert!(almost_domination_witness(&g, &fd(&[1.0, 0.0]), &c).unwrap().is_none());
    }

    #[test]
    fn kvn_examples() {
        let c = cfg();
        let id = NormalFunctional::from_matrix(PsdMatrix::identity(4));
        let est = kvn_sup_estimate(&id, &HermitianMatrix::identity(4), &[4], &c).unwrap();
        assert!((est[0] - 4.0).abs() < 1e-12);

        let zero_x = HermitianMatrix::zeros(4);
        assert_eq!(kvn_sup_estimate(&id, &zero_x, &[1, 2, 3, 4], &c).unwrap(), vec![0.0; 4]);

        let vals: Vec<f64> = (0..5).map(|i| 0.5f64.powi(i)).collect();
        let f = fd(&vals);
        let est = kvn_sup_estimate(&f, &HermitianMatrix::identity(5), &[1, 2, 3, 4, 5], &c).unwrap();
        let mut partial = 0.0;
        for (k, e) in est.iter().enumerate() {
            partial += vals[k];
            assert!((e - partial).abs() < 1e-12);
        }
        assert!(kvn_sup_estimate(&fd(&[0.0, 0.0]), &HermitianMatrix::identity(2), &[1], &c).is_err());
    }

    #[test]
    fn normality_gap_examples() {
        let c = cfg();
        assert!(normality_gap(&NormalFunctional::from_matrix(PsdMatrix::identity(3)), &c).unwrap().abs() < 1e-12);
        assert!(normality_gap(&fd(&[1.0, 0.0]), &c).unwrap().abs() < 1e-12);
    }
}
