//! Diagonal trace-class operators given by summable nonnegative sequences.
//!
//! A sequence is a finite prefix followed by an optional closed-form tail,
//! so infinite rank is representable and every sum, support question and
//! ratio supremum is decided exactly rather than by truncation. Indices
//! are 1-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::PsdMatrix;

/// Tail generating the values at `n = N + m`, `m >= 1`, after a prefix of length `N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Tail {
    /// `a * r^m`
    Geometric { a: f64, r: f64 },
    /// `(a + b m) * r^m`
    AffineGeometric { a: f64, b: f64, r: f64 },
}

impl Tail {
    fn coeffs(&self) -> (f64, f64, f64) {
        match *self {
            Tail::Geometric { a, r } => (a, 0.0, r),
            Tail::AffineGeometric { a, b, r } => (a, b, r),
        }
    }

    fn from_coeffs(a: f64, b: f64, r: f64) -> Tail {
        if b == 0.0 {
            Tail::Geometric { a, r }
        } else {
            Tail::AffineGeometric { a, b, r }
        }
    }

    pub fn ratio(&self) -> f64 {
        self.coeffs().2
    }

    fn validate(&self) -> Result<()> {
        let (a, b, r) = self.coeffs();
        let bad = |m: String| Err(Error::InvalidSequence(m));
        if !(r.is_finite() && r > 0.0 && r < 1.0) {
            return bad(format!("tail ratio r = {r} must lie in (0, 1) for summability"));
        }
        match self {
            Tail::Geometric { .. } if !(a.is_finite() && a > 0.0) => {
                bad(format!("geometric tail needs a > 0, got {a}"))
            }
            Tail::AffineGeometric { .. }
                if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0 && a + b > 0.0) =>
            {
                bad(format!("affine tail needs a, b >= 0 and a + b > 0, got a = {a}, b = {b}"))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, m: u64) -> f64 {
        let (a, b, r) = self.coeffs();
        (a + b * m as f64) * r.powf(m as f64)
    }

    pub fn ln_value(&self, m: u64) -> f64 {
        let (a, b, r) = self.coeffs();
        (a + b * m as f64).ln() + m as f64 * r.ln()
    }

    /// `Σ_{m>=1} (a + b m) r^m = a r/(1-r) + b r/(1-r)^2`
    pub fn sum(&self) -> f64 {
        let (a, b, r) = self.coeffs();
        a * r / (1.0 - r) + b * r / ((1.0 - r) * (1.0 - r))
    }

    /// The same values re-indexed to start `delta` positions later.
    fn shift(&self, delta: u64) -> Tail {
        let (a, b, r) = self.coeffs();
        let d = delta as f64;
        let rd = r.powf(d);
        Tail::from_coeffs(rd * (a + b * d), rd * b, r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct L1Sequence {
    prefix: Vec<f64>,
    tail: Option<Tail>,
}

#[derive(Serialize, Deserialize)]
struct RawSequence {
    prefix: Vec<f64>,
    tail: Option<Tail>,
}

impl TryFrom<RawSequence> for L1Sequence {
    type Error = Error;
    fn try_from(raw: RawSequence) -> Result<Self> {
        L1Sequence::new(raw.prefix, raw.tail)
    }
}

impl From<L1Sequence> for RawSequence {
    fn from(s: L1Sequence) -> Self {
        RawSequence {
            prefix: s.prefix,
            tail: s.tail,
        }
    }
}

impl L1Sequence {
    pub fn new(prefix: Vec<f64>, tail: Option<Tail>) -> Result<Self> {
        if let Some((i, v)) = prefix.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidSequence(format!(
                "entry {} is {v}; values must be finite and nonnegative",
                i + 1
            )));
        }
        if let Some(t) = &tail {
            t.validate()?;
        }
        Ok(Self { prefix, tail })
    }

    /// `a r^n` for `n >= 1`.
    pub fn geometric(a: f64, r: f64) -> Result<Self> {
        Self::new(Vec::new(), Some(Tail::Geometric { a, r }))
    }

    pub fn finite(values: Vec<f64>) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> Option<&Tail> {
        self.tail.as_ref()
    }

    pub fn has_infinite_support(&self) -> bool {
        self.tail.is_some()
    }

    pub fn is_zero(&self) -> bool {
        self.tail.is_none() && self.prefix.iter().all(|&v| v == 0.0)
    }

    pub fn value(&self, n: u64) -> f64 {
        assert!(n >= 1, "sequences are 1-indexed");
        let len = self.prefix.len() as u64;
        if n <= len {
            self.prefix[(n - 1) as usize]
        } else {
            self.tail.map_or(0.0, |t| t.value(n - len))
        }
    }

    /// `ln x_n`, evaluated without underflow deep in the tail.
    pub fn ln_value(&self, n: u64) -> f64 {
        let len = self.prefix.len() as u64;
        if n <= len {
            self.value(n).ln()
        } else {
            self.tail.map_or(f64::NEG_INFINITY, |t| t.ln_value(n - len))
        }
    }

    pub fn sum(&self) -> f64 {
        self.prefix.iter().sum::<f64>() + self.tail.map_or(0.0, |t| t.sum())
    }

    /// Term-by-term summation until the remaining terms are negligible.
    pub fn numeric_sum(&self) -> f64 {
        let mut acc: f64 = self.prefix.iter().sum();
        if let Some(t) = self.tail {
            let (a, b, r) = t.coeffs();
            // terms increase until roughly m = 1/ln(1/r) - a/b
            let peak = if b > 0.0 { (1.0 / -r.ln() - a / b).max(1.0) } else { 1.0 };
            let mut m = 1u64;
            loop {
                let term = t.value(m);
                acc += term;
                if (m as f64) > peak && term <= f64::EPSILON * 1e-3 * acc {
                    break;
                }
                m += 1;
            }
        }
        acc
    }

    /// First `len` values as a vector plus the tail re-based to start after
    /// them. `len` must be at least the prefix length.
    fn expand(&self, len: usize) -> (Vec<f64>, Option<Tail>) {
        debug_assert!(len >= self.prefix.len());
        let values = (1..=len as u64).map(|n| self.value(n)).collect();
        let tail = self.tail.map(|t| t.shift((len - self.prefix.len()) as u64));
        (values, tail)
    }

    pub fn truncate_to_matrix(&self, n: usize) -> Result<PsdMatrix> {
        if n == 0 {
            return Err(Error::Precondition("truncation size must be at least 1".into()));
        }
        let vals: Vec<f64> = (1..=n as u64).map(|i| self.value(i)).collect();
        PsdMatrix::diag(&vals)
    }
}

pub fn truncate_to_matrix(x: &L1Sequence, n: usize) -> Result<PsdMatrix> {
    x.truncate_to_matrix(n)
}

/// Splits `S` into the part supported where `T` is nonzero and the rest.
/// Values are copied, never subtracted, so `ac + sing = S` exactly.
pub fn diag_decompose(s: &L1Sequence, t: &L1Sequence) -> (L1Sequence, L1Sequence) {
    let len = s.prefix.len().max(t.prefix.len());
    let (sv, st) = s.expand(len);
    let (tv, tt) = t.expand(len);
    let mut ac = Vec::with_capacity(len);
    let mut sing = Vec::with_capacity(len);
    for (x, y) in sv.iter().zip(&tv) {
        if *y > 0.0 {
            ac.push(*x);
            sing.push(0.0);
        } else {
            ac.push(0.0);
            sing.push(*x);
        }
    }
    let (ac_tail, sing_tail) = if tt.is_some() { (st, None) } else { (None, st) };
    (
        L1Sequence { prefix: ac, tail: ac_tail },
        L1Sequence {
            prefix: sing,
            tail: sing_tail,
        },
    )
}

/// `μ_n / λ_n` by direct evaluation (in log space). Infinite where `λ_n = 0 < μ_n`.
pub fn ratio_at(s: &L1Sequence, t: &L1Sequence, n: u64) -> f64 {
    let ls = s.ln_value(n);
    if ls == f64::NEG_INFINITY {
        return 0.0;
    }
    let lt = t.ln_value(n);
    if lt == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (ls - lt).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Sup {
    Finite { c: f64, at: Option<u64> },
    Infinite,
}

fn ratio_sup(s: &L1Sequence, t: &L1Sequence) -> Sup {
    let len = s.prefix.len().max(t.prefix.len());
    let (sv, st) = s.expand(len);
    let (tv, tt) = t.expand(len);
    let mut best = 0.0;
    let mut at = None;
    for (i, (x, y)) in sv.iter().zip(&tv).enumerate() {
        if *x > 0.0 {
            if *y == 0.0 {
                return Sup::Infinite;
            }
            let r = x / y;
            if r > best {
                best = r;
                at = Some(i as u64 + 1);
            }
        }
    }
    match (st, tt) {
        (None, _) => {}
        (Some(_), None) => return Sup::Infinite,
        (Some(a), Some(b)) => match tail_sup(&a, &b) {
            None => return Sup::Infinite,
            Some((c, m)) => {
                if c > best {
                    best = c;
                    at = m.map(|m| len as u64 + m);
                }
            }
        },
    }
    Sup::Finite { c: best, at }
}

fn tail_ratio_ln(s: &Tail, t: &Tail, m: u64) -> f64 {
    s.ln_value(m) - t.ln_value(m)
}

/// Supremum over `m >= 1` of `s(m)/t(m)` and where it is attained, or `None` if unbounded.
fn tail_sup(s: &Tail, t: &Tail) -> Option<(f64, Option<u64>)> {
    let (sa, sb, rs) = s.coeffs();
    let (ta, tb, rt) = t.coeffs();
    if rs > rt {
        return None;
    }
    if rs == rt {
        if sb > 0.0 && tb == 0.0 {
            return None;
        }
        let first = tail_ratio_ln(s, t, 1).exp();
        let limit = if tb > 0.0 { sb / tb } else { sa / ta };
        return Some(if first >= limit {
            (first, Some(1))
        } else {
            (limit, None)
        });
    }
    // the ratio decreases from m0 on: R(m+1)/R(m) <= q (1 + sb/(sa + sb m)) <= 1
    let q = rs / rt;
    let m0 = if sb == 0.0 {
        1
    } else {
        (q / (1.0 - q) - sa / sb).ceil().max(1.0) as u64
    };
    let (mut best, mut at) = (f64::NEG_INFINITY, 1);
    for m in 1..=m0 {
        let v = tail_ratio_ln(s, t, m);
        if v > best {
            best = v;
            at = m;
        }
    }
    Some((best.exp(), Some(at)))
}

/// Some index `n` with `μ_n / λ_n >= bound`, if one exists.
pub fn ratio_witness(s: &L1Sequence, t: &L1Sequence, bound: f64) -> Option<u64> {
    let len = s.prefix.len().max(t.prefix.len());
    for n in 1..=len as u64 {
        if ratio_at(s, t, n) >= bound {
            return Some(n);
        }
    }
    let (_, st) = s.expand(len);
    let (_, tt) = t.expand(len);
    let ln_bound = bound.ln();
    match (st, tt) {
        (Some(_), None) => Some(len as u64 + 1),
        (Some(a), Some(b)) => {
            let hits = |m: u64| tail_ratio_ln(&a, &b, m) >= ln_bound;
            let mut hi = 1u64;
            while !hits(hi) {
                if hi >= 1 << 62 {
                    return None;
                }
                hi *= 2;
            }
            let mut lo = hi / 2;
            while lo + 1 < hi {
                let mid = lo + (hi - lo) / 2;
                if hits(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            // the tail formula is re-based, so rounding can put the crossing a
            // step or two later on the sequences themselves
            (len as u64 + hi..len as u64 + hi + 64).find(|&n| ratio_at(s, t, n) >= bound)
        }
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioWitness {
    pub bound: f64,
    pub index: u64,
    /// `None` encodes an infinite ratio (`λ_n = 0`).
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioCertificate {
    /// `sup μ_n/λ_n = c`, attained at `attained_at` when the supremum is a maximum.
    Bounded { c: f64, attained_at: Option<u64> },
    /// Indices where the ratio exceeds `1, 10, 100, …` up to the requested bound.
    Unbounded { witnesses: Vec<RatioWitness> },
}

impl RatioCertificate {
    pub fn bound(&self) -> Option<f64> {
        match self {
            RatioCertificate::Bounded { c, .. } => Some(*c),
            RatioCertificate::Unbounded { .. } => None,
        }
    }

    /// Re-evaluates every witness directly on the sequences.
    pub fn verify(&self, s: &L1Sequence, t: &L1Sequence) -> bool {
        match self {
            RatioCertificate::Bounded { c, attained_at } => {
                attained_at.map_or(true, |n| ((ratio_at(s, t, n) - c) / c.max(f64::MIN_POSITIVE)).abs() < 1e-12)
            }
            RatioCertificate::Unbounded { witnesses } => {
                !witnesses.is_empty() && witnesses.iter().all(|w| ratio_at(s, t, w.index) >= w.bound)
            }
        }
    }
}

pub const DEFAULT_WITNESS_BOUND: f64 = 1e6;

/// Certificate for `sup μ_n/λ_n`, with witnesses at every power of ten up to `max_bound`.
pub fn ratio_certificate(s: &L1Sequence, t: &L1Sequence, max_bound: f64) -> Result<RatioCertificate> {
    match ratio_sup(s, t) {
        Sup::Finite { c, at } => Ok(RatioCertificate::Bounded { c, attained_at: at }),
        Sup::Infinite => {
            let mut witnesses = Vec::new();
            let mut bound = 1.0;
            while bound <= max_bound {
                let index = ratio_witness(s, t, bound).ok_or_else(|| {
                    Error::Consistency(format!("unbounded ratio but no witness for bound {bound:e}"))
                })?;
                let r = ratio_at(s, t, index);
                witnesses.push(RatioWitness {
                    bound,
                    index,
                    ratio: r.is_finite().then_some(r),
                });
                bound *= 10.0;
            }
            Ok(RatioCertificate::Unbounded { witnesses })
        }
    }
}

/// `sup μ_n/λ_n` when finite and `supp S ⊆ supp T`; `None` otherwise.
pub fn diag_is_dominated(s: &L1Sequence, t: &L1Sequence) -> Option<f64> {
    match ratio_sup(s, t) {
        Sup::Finite { c, .. } => Some(c),
        Sup::Infinite => None,
    }
}

/// Unique iff the `T`-supported part of `S` is dominated by `T`.
pub fn diag_uniqueness(s: &L1Sequence, t: &L1Sequence) -> Result<(bool, RatioCertificate)> {
    let (ac, _) = diag_decompose(s, t);
    let cert = ratio_certificate(&ac, t, DEFAULT_WITNESS_BOUND)?;
    Ok((matches!(cert, RatioCertificate::Bounded { .. }), cert))
}

/// `x_n <= y_n` for every `n`.
pub fn seq_leq(x: &L1Sequence, y: &L1Sequence) -> bool {
    match ratio_sup(x, y) {
        Sup::Finite { c, .. } => c <= 1.0 + 1e-12,
        Sup::Infinite => false,
    }
}

/// Builds a summable `μ` with `μ_n / λ_n` unbounded: `μ_n = n λ_n`, whose
/// tail stays in closed form for geometric `λ`. For an affine tail the
/// tail ratio is raised from `r` to `√r` instead, which also outgrows `λ`.
pub fn construct_unbounded_ratio(lambda: &L1Sequence) -> Result<(L1Sequence, RatioCertificate)> {
    let tail = lambda.tail.ok_or_else(|| {
        Error::FiniteRank(
            "an unbounded ratio needs infinite support; finite-rank operators decompose uniquely".into(),
        )
    })?;
    let len = lambda.prefix.len();
    let prefix: Vec<f64> = lambda
        .prefix
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v)
        .collect();
    let mu_tail = match tail {
        Tail::Geometric { a, r } => Tail::from_coeffs(len as f64 * a, a, r),
        Tail::AffineGeometric { a, b, r } => Tail::Geometric { a: a + b, r: r.sqrt() },
    };
    let mu = L1Sequence::new(prefix, Some(mu_tail))?;

    let cert = ratio_certificate(&mu, lambda, DEFAULT_WITNESS_BOUND)?;
    if !matches!(cert, RatioCertificate::Unbounded { .. }) || !cert.verify(&mu, lambda) {
        return Err(Error::Consistency("constructed ratio is not certified unbounded".into()));
    }
    let (closed, numeric) = (mu.sum(), mu.numeric_sum());
    if (closed - numeric).abs() > 1e-12 * closed {
        return Err(Error::Consistency(format!(
            "closed-form sum {closed} disagrees with partial sums {numeric}"
        )));
    }
    Ok((mu, cert))
}

/// A pair `(T, S)` where `S` is `T`-absolutely continuous but not
/// `T`-dominated, so the Lebesgue decomposition of `S` relative to `T` is
/// not unique.
pub fn theorem_b_instance(lambda: &L1Sequence) -> Result<(L1Sequence, L1Sequence, RatioCertificate)> {
    let (mu, cert) = construct_unbounded_ratio(lambda)?;
    let (_, sing) = diag_decompose(&mu, lambda);
    if !sing.is_zero() {
        return Err(Error::Consistency("constructed S has a singular part".into()));
    }
    if diag_is_dominated(&mu, lambda).is_some() {
        return Err(Error::Consistency("constructed S is dominated".into()));
    }
    let (unique, _) = diag_uniqueness(&mu, lambda)?;
    if unique {
        return Err(Error::Consistency("constructed pair decomposes uniquely".into()));
    }
    Ok((lambda.clone(), mu, cert))
}
