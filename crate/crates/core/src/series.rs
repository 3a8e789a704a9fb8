//! Finite-support probability power series and their iterated composition.
//!
//! A [`ProbPoly`] is `p(t) = t^r p_0(t)` with nonnegative rational
//! coefficients summing to 1. Iterates `p^[n]` are tracked as truncated
//! coefficient vectors ([`CoeffState`]) either exactly or in `f64`; the mass
//! dropped by truncation is reported as `tail_mass`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Q};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
pub const MAX_DEFAULT_TRUNCATION: usize = 4096;

/// Coefficient arithmetic shared by the exact and float code paths.
pub trait Scalar:
    Clone + Debug + PartialOrd + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    const EXACT: bool;
    fn from_q(value: &Q) -> Self;
    fn to_f64(&self) -> f64;
    fn mul_add_assign(&mut self, a: &Self, b: &Self);
    fn div_usize(&self, n: usize) -> Self;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_q(value: &Q) -> Self {
        rational::to_f64(value)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    #[inline]
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn div_usize(&self, n: usize) -> Self {
        self / n as f64
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn from_q(value: &Q) -> Self {
        value.clone()
    }

    fn to_f64(&self) -> f64 {
        rational::to_f64(self)
    }

    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }

    fn div_usize(&self, n: usize) -> Self {
        self / Q::from_integer(BigInt::from(n))
    }
}

/// A probability polynomial `p(t) = Σ a_k t^k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbPoly {
    /// Nonzero terms sorted by exponent.
    terms: Vec<(usize, Q)>,
}

impl ProbPoly {
    /// Validates and builds a series from `(exponent, coefficient)` pairs.
    /// Zero coefficients are dropped; repeated exponents are rejected.
    pub fn new(terms: impl IntoIterator<Item = (usize, Q)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, c) in terms {
            if c.is_negative() {
                return Err(Error::InvalidSeries(format!(
                    "coefficient of t^{k} is negative"
                )));
            }
            if map.insert(k, c).is_some() {
                return Err(Error::InvalidSeries(format!("exponent {k} given twice")));
            }
        }
        let terms: Vec<(usize, Q)> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        if terms.is_empty() {
            return Err(Error::InvalidSeries("no nonzero coefficients".into()));
        }
        let total = terms.iter().fold(Q::zero(), |acc, (_, c)| acc + c);
        if !total.is_one() {
            return Err(Error::InvalidSeries(format!(
                "coefficients sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(ProbPoly { terms })
    }

    /// Parses `exponent -> "p/q"` entries.
    pub fn from_map(entries: &BTreeMap<String, String>) -> Result<Self> {
        let terms = entries
            .iter()
            .map(|(k, v)| {
                let k: usize = k
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("exponent {k:?} is not a nonnegative integer")))?;
                Ok((k, rational::parse(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn pure_power(r: usize) -> Self {
        ProbPoly {
            terms: vec![(r, Q::one())],
        }
    }

    pub fn terms(&self) -> &[(usize, Q)] {
        &self.terms
    }

    pub fn is_pure_power(&self) -> bool {
        self.terms.len() == 1
    }

    /// The minimal exponent `r`.
    pub fn shift(&self) -> usize {
        self.terms[0].0
    }

    /// Exponents of `p_0(t) = p(t) / t^r`; the first is always 0.
    pub fn offsets(&self) -> Vec<usize> {
        let r = self.shift();
        self.terms.iter().map(|(k, _)| k - r).collect()
    }

    pub fn degree(&self) -> usize {
        self.terms.last().expect("nonempty").0
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.terms
            .iter()
            .find(|(e, _)| *e == k)
            .map_or_else(Q::zero, |(_, c)| c.clone())
    }

    /// `p(0)`.
    pub fn constant_term(&self) -> Q {
        self.coeff(0)
    }

    /// `p'(1)`, the mean of the offspring law.
    pub fn mean(&self) -> Q {
        self.terms
            .iter()
            .fold(Q::zero(), |acc, (k, c)| acc + c * Q::from_integer(BigInt::from(*k)))
    }

    /// `p(t)` by Horner's rule.
    pub fn eval<T: Scalar>(&self, t: &T) -> T {
        let mut acc = T::zero();
        let mut exp = self.degree();
        for (k, c) in self.terms.iter().rev() {
            while exp > *k {
                acc = acc * t.clone();
                exp -= 1;
            }
            acc = acc + T::from_q(c);
        }
        for _ in 0..exp {
            acc = acc * t.clone();
        }
        acc
    }

    /// `p^{(i)}(t) / i! = Σ_k a_k C(k, i) t^{k-i}`, exact for every `T`.
    pub fn taylor_coeff<T: Scalar>(&self, i: usize, t: &T) -> T {
        let mut acc = T::zero();
        for (k, c) in &self.terms {
            if *k < i {
                continue;
            }
            let weight = c * Q::from_integer(binomial(BigInt::from(*k), BigInt::from(i)));
            let mut term = T::from_q(&weight);
            for _ in 0..k - i {
                term = term * t.clone();
            }
            acc = acc + term;
        }
        acc
    }

    /// `min(deg * 64, 4096)`, never below the degree.
    pub fn default_truncation(&self) -> usize {
        (self.degree() * 64).min(MAX_DEFAULT_TRUNCATION).max(self.degree()).max(1)
    }

    fn ensure_not_pure(&self) -> Result<()> {
        if self.is_pure_power() {
            Err(Error::PurePower(self.shift()))
        } else {
            Ok(())
        }
    }
}

/// Coefficients `a_0 .. a_K` of an iterate `p^[n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffState<T> {
    pub n: usize,
    pub coeffs: Vec<T>,
    pub truncation: usize,
    /// `1 - Σ kept coefficients`.
    pub tail_mass: T,
}

/// Running averages `q^(n)_i = (1/n) Σ_{m<=n} a^[m]_i`, same layout.
pub type CesaroState<T> = CoeffState<T>;

impl<T: Scalar> CoeffState<T> {
    pub fn is_exact(&self) -> bool {
        T::EXACT
    }

    pub fn a0(&self) -> &T {
        &self.coeffs[0]
    }

    /// Largest kept coefficient with index `k >= 1`.
    pub fn sup_positive(&self) -> T {
        self.coeffs[1..]
            .iter()
            .fold(T::zero(), |m, c| if *c > m { c.clone() } else { m })
    }

    /// `[lower, upper]` bounds on `sup_{k>=1} a_k` over all coefficients,
    /// including the ones dropped by truncation.
    pub fn sup_bounds(&self) -> (f64, f64) {
        let kept = self.sup_positive().to_f64();
        let tail = self.tail_mass.to_f64().max(0.0);
        (kept, kept.max(tail))
    }

    fn from_poly(p: &ProbPoly, truncation: usize) -> Self {
        let mut coeffs = vec![T::zero(); truncation + 1];
        for (k, c) in p.terms() {
            if *k <= truncation {
                coeffs[*k] = T::from_q(c);
            }
        }
        let tail_mass = tail_of(&coeffs);
        CoeffState {
            n: 1,
            coeffs,
            truncation,
            tail_mass,
        }
    }
}

fn tail_of<T: Scalar>(coeffs: &[T]) -> T {
    let kept = coeffs.iter().fold(T::zero(), |acc, c| acc + c.clone());
    T::one() - kept
}

/// `a * b` truncated to indices `<= k_max`, skipping zero entries of `a`.
fn truncated_product<T: Scalar>(a: &[T], b: &[T], k_max: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k_max + 1];
    let b_top = b.iter().rposition(|c| !c.is_zero());
    let Some(b_top) = b_top else { return out };
    let b_low = b.iter().position(|c| !c.is_zero()).unwrap_or(0);
    for (i, ai) in a.iter().enumerate().take(k_max + 1) {
        if ai.is_zero() || i + b_low > k_max {
            continue;
        }
        let hi = (k_max - i).min(b_top);
        for j in b_low..=hi {
            out[i + j].mul_add_assign(ai, &b[j]);
        }
    }
    out
}

/// Coefficients of `p(s(t))` up to degree `K`, exact below the truncation.
pub fn compose<T: Scalar>(p: &ProbPoly, state: &CoeffState<T>) -> Result<CoeffState<T>> {
    let k_max = state.truncation;
    if k_max < 1 {
        return Err(Error::InvalidArgument(
            "truncation must keep at least the degree-1 coefficient".into(),
        ));
    }
    if state.coeffs.len() != k_max + 1 {
        return Err(Error::InvalidArgument("state length does not match its truncation".into()));
    }
    // Horner: acc = (..((c_d s + c_{d-1}) s + ..) s + c_0
    let mut acc = vec![T::zero(); k_max + 1];
    let mut exp = p.degree();
    let mut started = false;
    for (k, c) in p.terms().iter().rev() {
        while exp > *k {
            if started {
                acc = truncated_product(&state.coeffs, &acc, k_max);
            }
            exp -= 1;
        }
        acc[0] = acc[0].clone() + T::from_q(c);
        started = true;
    }
    for _ in 0..exp {
        acc = truncated_product(&state.coeffs, &acc, k_max);
    }
    let tail_mass = tail_of(&acc);
    Ok(CoeffState {
        n: state.n + 1,
        coeffs: acc,
        truncation: k_max,
        tail_mass,
    })
}

/// Streams `p^[1], p^[2], ...` truncated at `K`.
pub struct CoeffIter<'a, T> {
    p: &'a ProbPoly,
    next: Option<CoeffState<T>>,
}

impl<'a, T: Scalar> Iterator for CoeffIter<'a, T> {
    type Item = CoeffState<T>;

    fn next(&mut self) -> Option<CoeffState<T>> {
        let current = self.next.take()?;
        self.next = compose(self.p, &current).ok();
        Some(current)
    }
}

pub fn coeff_iter<T: Scalar>(p: &ProbPoly, truncation: usize) -> Result<CoeffIter<'_, T>> {
    p.ensure_not_pure()?;
    if truncation < p.degree() || truncation < 1 {
        return Err(Error::InvalidArgument(format!(
            "truncation {truncation} is below the degree {} of the series",
            p.degree()
        )));
    }
    Ok(CoeffIter {
        p,
        next: Some(CoeffState::from_poly(p, truncation)),
    })
}

/// States for `p^[1] .. p^[n]`.
pub fn iterate_coeffs<T: Scalar>(p: &ProbPoly, n: usize, truncation: usize) -> Result<Vec<CoeffState<T>>> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one iterate is required".into()));
    }
    Ok(coeff_iter(p, truncation)?.take(n).collect())
}

/// `a_k^[n+1]` from the state of `p^[n]` via the Taylor expansion of `p`
/// at `a_0^[n]`:
/// `Σ_i p^{(i)}(a_0)/i! · Σ_{j_1+..+j_i=k, j_s>=1} Π a_{j_s}`.
pub fn recursion_coeffs<T: Scalar>(p: &ProbPoly, state: &CoeffState<T>, k: usize) -> Result<T> {
    if k > state.truncation {
        return Err(Error::InvalidArgument(format!(
            "index {k} beyond truncation {}",
            state.truncation
        )));
    }
    let a0 = state.a0().clone();
    if k == 0 {
        return Ok(p.eval(&a0));
    }
    // sums[i][j]: total over compositions of j into i positive parts
    let mut prev = vec![T::zero(); k + 1];
    prev[0] = T::one();
    let mut total = T::zero();
    for i in 1..=k {
        let mut cur = vec![T::zero(); k + 1];
        for j in i..=k {
            let mut s = T::zero();
            for part in 1..=j - (i - 1) {
                s.mul_add_assign(&state.coeffs[part], &prev[j - part]);
            }
            cur[j] = s;
        }
        if !cur[k].is_zero() {
            total = total + p.taylor_coeff(i, &a0) * cur[k].clone();
        }
        prev = cur;
    }
    Ok(total)
}

/// Limit of `a_0^[n]`, the smallest fixed point of `p` in `[a_0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extinction {
    pub value: f64,
    /// Set when the value is known exactly (0 or 1).
    pub exact: Option<Q>,
    pub iterations: usize,
}

/// Plain iteration `a <- p(a)` from `a_0`.
///
/// When `p(0) = 0` the limit is exactly 0. When `p(0) > 0` and
/// `p'(1) <= 1` the only fixed point in `[a_0, 1]` is 1, returned exactly
/// without iterating. Otherwise iterate until the step drops below `tol`.
pub fn extinction_value(p: &ProbPoly, tol: f64, max_iter: usize) -> Result<Extinction> {
    if tol <= 0.0 || tol.is_nan() {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let a0 = p.constant_term();
    if a0.is_zero() {
        return Ok(Extinction {
            value: 0.0,
            exact: Some(Q::zero()),
            iterations: 0,
        });
    }
    if p.mean() <= Q::one() {
        return Ok(Extinction {
            value: 1.0,
            exact: Some(Q::one()),
            iterations: 0,
        });
    }
    let mut a = rational::to_f64(&a0);
    for it in 1..=max_iter {
        let next = p.eval(&a);
        let delta = (next - a).abs();
        a = next;
        if delta < tol {
            let residual = (p.eval(&a) - a).abs();
            if residual > 10.0 * tol {
                return Err(Error::Inconclusive(format!(
                    "fixed-point residual {residual:e} exceeds {:e}",
                    10.0 * tol
                )));
            }
            return Ok(Extinction {
                value: a,
                exact: None,
                iterations: it,
            });
        }
    }
    Err(Error::Inconclusive(format!(
        "extinction iteration did not settle within {max_iter} steps"
    )))
}

/// Running averages of a sequence of states.
pub fn cesaro_coeffs<T: Scalar>(states: &[CoeffState<T>]) -> Result<Vec<CesaroState<T>>> {
    let first = states.first().ok_or(Error::EmptySet)?;
    let mut sums = vec![T::zero(); first.coeffs.len()];
    let mut tail = T::zero();
    let mut out = Vec::with_capacity(states.len());
    for (idx, s) in states.iter().enumerate() {
        if s.coeffs.len() != sums.len() {
            return Err(Error::InvalidArgument("states have different truncations".into()));
        }
        sums.iter_mut()
            .zip(&s.coeffs)
            .for_each(|(acc, c)| *acc = acc.clone() + c.clone());
        tail = tail + s.tail_mass.clone();
        let m = idx + 1;
        out.push(CoeffState {
            n: s.n,
            coeffs: sums.iter().map(|c| c.div_usize(m)).collect(),
            truncation: s.truncation,
            tail_mass: tail.div_usize(m),
        });
    }
    Ok(out)
}

/// Both sides of the composition-sum inequality for `a_1, a_2, ...`
/// (`a[0]` is `a_1`): returns `(lhs, (1 - a_k) sup a, sup a)` where
/// `lhs = Σ_{j_1+..+j_i=k, j_s>=1} Π a_{j_s}` by full enumeration.
pub fn composition_sum_check(a: &[Q], k: usize, i: usize) -> Result<(Q, Q, Q)> {
    if !(1 <= i && i <= k && k <= 10) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= i <= k <= 10, got i = {i}, k = {k}"
        )));
    }
    if a.iter().any(Signed::is_negative) {
        return Err(Error::InvalidArgument("sequence has a negative entry".into()));
    }
    let total = a.iter().fold(Q::zero(), |acc, v| acc + v);
    if !total.is_one() {
        return Err(Error::InvalidArgument(format!(
            "sequence sums to {}, not 1",
            rational::format(&total)
        )));
    }
    let at = |j: usize| a.get(j - 1).cloned().unwrap_or_else(Q::zero);
    let mut lhs = Q::zero();
    let mut parts = vec![0usize; i];
    enumerate_compositions(k, &mut parts, 0, &mut |parts| {
        lhs += parts.iter().fold(Q::one(), |acc, &j| acc * at(j));
    });
    let sup = a.iter().cloned().fold(Q::zero(), |m, v| if v > m { v } else { m });
    let rhs = (Q::one() - at(k)) * &sup;
    Ok((lhs, rhs, sup))
}

fn enumerate_compositions(remaining: usize, parts: &mut [usize], pos: usize, visit: &mut dyn FnMut(&[usize])) {
    let slots_left = parts.len() - pos;
    if slots_left == 1 {
        parts[pos] = remaining;
        visit(parts);
        return;
    }
    for first in 1..=remaining - (slots_left - 1) {
        parts[pos] = first;
        enumerate_compositions(remaining - first, parts, pos + 1, visit);
    }
}
