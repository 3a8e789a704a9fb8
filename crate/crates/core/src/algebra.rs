//! Exact and floating arithmetic in the group algebra `R[G]`.
//!
//! [`AlgebraElement`] carries exact rational coefficients and is the
//! canonical representation; [`SimplexPoint`] restricts it to probability
//! distributions. [`ApproxElement`] is the float carrier used by long
//! iteration traces.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{ElementSet, FiniteGroup, GroupRef};
use crate::rational::{self, Q};

/// An element `Σ x_g g` of `Q[G]` stored densely.
#[derive(Clone)]
pub struct AlgebraElement {
    group: GroupRef,
    coeffs: Vec<Q>,
}

impl PartialEq for AlgebraElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && FiniteGroup::same_as(&self.group, &other.group)
    }
}

impl Eq for AlgebraElement {}

impl fmt::Debug for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (g, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                map.entry(&self.group.label(g), &rational::format(c));
            }
        }
        map.finish()
    }
}

impl AlgebraElement {
    pub fn new(group: &GroupRef, coeffs: Vec<Q>) -> Result<Self> {
        if coeffs.len() != group.order() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a group of order {}",
                coeffs.len(),
                group.order()
            )));
        }
        Ok(AlgebraElement {
            group: Arc::clone(group),
            coeffs,
        })
    }

    pub fn zero(group: &GroupRef) -> Self {
        AlgebraElement {
            group: Arc::clone(group),
            coeffs: vec![Q::zero(); group.order()],
        }
    }

    pub fn point_mass(group: &GroupRef, g: usize) -> Self {
        let mut x = Self::zero(group);
        x.coeffs[g] = Q::one();
        x
    }

    /// The algebra identity `e = δ_e`.
    pub fn identity(group: &GroupRef) -> Self {
        Self::point_mass(group, group.identity())
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn coeff(&self, g: usize) -> &Q {
        &self.coeffs[g]
    }

    fn check_group(&self, other: &AlgebraElement) -> Result<()> {
        if FiniteGroup::same_as(&self.group, &other.group) {
            Ok(())
        } else {
            Err(Error::GroupMismatch)
        }
    }

    /// Convolution `(xy)_g = Σ_{hk=g} x_h y_k`.
    pub fn multiply(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_group(other)?;
        let mut out = vec![Q::zero(); self.group.order()];
        let right: Vec<(usize, &Q)> = other
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        for (h, xh) in self.coeffs.iter().enumerate() {
            if xh.is_zero() {
                continue;
            }
            let row = self.group.row(h);
            for &(k, yk) in &right {
                out[row[k]] += xh * yk;
            }
        }
        Ok(AlgebraElement {
            group: Arc::clone(&self.group),
            coeffs: out,
        })
    }

    /// `x^k` by square-and-multiply; `x^0 = e`.
    pub fn power(&self, mut k: u64) -> AlgebraElement {
        let mut result = Self::identity(&self.group);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.multiply(&base).expect("same group");
            }
            k >>= 1;
            if k > 0 {
                base = base.multiply(&base).expect("same group");
            }
        }
        result
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_group(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(AlgebraElement {
            group: Arc::clone(&self.group),
            coeffs,
        })
    }

    pub fn sub(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_group(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(AlgebraElement {
            group: Arc::clone(&self.group),
            coeffs,
        })
    }

    pub fn scale(&self, factor: &Q) -> AlgebraElement {
        AlgebraElement {
            group: Arc::clone(&self.group),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `L(x) = Σ x_g`.
    pub fn weight(&self) -> Q {
        self.coeffs.iter().fold(Q::zero(), |acc, c| acc + c)
    }

    pub fn support(&self) -> ElementSet {
        let members = self
            .coeffs
            .iter()
            .enumerate()
            .filter_map(|(g, c)| (!c.is_zero()).then_some(g));
        ElementSet::new(&self.group, members).expect("indices in range")
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative())
    }

    pub fn to_approx(&self) -> ApproxElement {
        let coeffs = self.coeffs.iter().map(rational::to_f64).collect();
        ApproxElement::with_measured_slack(&self.group, coeffs)
    }
}

/// A probability distribution on `G`: nonnegative exact coefficients with
/// total weight exactly 1.
#[derive(Clone, PartialEq, Eq)]
pub struct SimplexPoint(AlgebraElement);

impl fmt::Debug for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl SimplexPoint {
    pub fn new(element: AlgebraElement) -> Result<Self> {
        if let Some((g, c)) = element
            .coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| c.is_negative())
        {
            return Err(Error::NotInSimplex(format!(
                "coefficient {} at {} is negative",
                rational::format(c),
                element.group.label(g)
            )));
        }
        let w = element.weight();
        if !w.is_one() {
            return Err(Error::NotInSimplex(format!(
                "coefficients sum to {}, not 1",
                rational::format(&w)
            )));
        }
        Ok(SimplexPoint(element))
    }

    pub fn from_coeffs(group: &GroupRef, coeffs: Vec<Q>) -> Result<Self> {
        Self::new(AlgebraElement::new(group, coeffs)?)
    }

    /// Builds a point from `label -> "p/q"` entries; unlisted labels are 0.
    pub fn from_label_map(group: &GroupRef, entries: &BTreeMap<String, String>) -> Result<Self> {
        let mut coeffs = vec![Q::zero(); group.order()];
        for (label, value) in entries {
            let g = group
                .index_of(label)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown group label {label:?}")))?;
            coeffs[g] = rational::parse(value)?;
        }
        Self::from_coeffs(group, coeffs)
    }

    pub fn point_mass(group: &GroupRef, g: usize) -> Self {
        SimplexPoint(AlgebraElement::point_mass(group, g))
    }

    pub fn identity(group: &GroupRef) -> Self {
        SimplexPoint(AlgebraElement::identity(group))
    }

    /// Uniform distribution on `h`.
    pub fn uniform_on(h: &ElementSet) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::EmptySet);
        }
        let share = Q::new(BigInt::one(), BigInt::from(h.len()));
        let mut coeffs = vec![Q::zero(); h.group().order()];
        for &g in h.members() {
            coeffs[g] = share.clone();
        }
        Ok(SimplexPoint(AlgebraElement {
            group: Arc::clone(h.group()),
            coeffs,
        }))
    }

    /// Random point with the given support; weights are integers in
    /// `1..=max_weight` normalized to sum 1, so denominators stay small.
    pub fn random_on<R: Rng + ?Sized>(
        support: &ElementSet,
        max_weight: u32,
        rng: &mut R,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySet);
        }
        let weights: Vec<(usize, u32)> = support
            .members()
            .iter()
            .map(|&g| (g, rng.gen_range(1..=max_weight.max(1))))
            .collect();
        let total: u32 = weights.iter().map(|&(_, w)| w).sum();
        let mut coeffs = vec![Q::zero(); support.group().order()];
        for (g, w) in weights {
            coeffs[g] = rational::q(w.into(), total.into());
        }
        Self::from_coeffs(support.group(), coeffs)
    }

    /// Reproducible point with every coefficient positive.
    pub fn random_interior(group: &GroupRef, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_on(&ElementSet::whole(group), 16, &mut rng).expect("nonempty group")
    }

    pub fn as_element(&self) -> &AlgebraElement {
        &self.0
    }

    pub fn into_element(self) -> AlgebraElement {
        self.0
    }

    pub fn group(&self) -> &GroupRef {
        self.0.group()
    }

    pub fn coeffs(&self) -> &[Q] {
        self.0.coeffs()
    }

    pub fn multiply(&self, other: &SimplexPoint) -> Result<SimplexPoint> {
        self.0.multiply(&other.0).map(SimplexPoint)
    }

    pub fn power(&self, k: u64) -> SimplexPoint {
        SimplexPoint(self.0.power(k))
    }

    pub fn support(&self) -> ElementSet {
        self.0.support()
    }

    pub fn to_approx(&self) -> ApproxElement {
        self.0.to_approx()
    }

    /// Convex combination `Σ w_i x_i` with rational weights summing to 1.
    pub fn convex_combination(points: &[(Q, &SimplexPoint)]) -> Result<SimplexPoint> {
        let (_, first) = points.first().ok_or(Error::EmptySet)?;
        let mut acc = AlgebraElement::zero(first.group());
        for (w, x) in points {
            acc = acc.add(&x.0.scale(w))?;
        }
        SimplexPoint::new(acc)
    }
}

/// Float element with an explicit bound on accumulated rounding.
#[derive(Clone, PartialEq)]
pub struct ApproxElement {
    group: GroupRef,
    coeffs: Vec<f64>,
    slack: f64,
}

impl fmt::Debug for ApproxElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ApproxElement")
            .field("coeffs", &self.coeffs)
            .field("slack", &self.slack)
            .finish()
    }
}

impl ApproxElement {
    pub fn new(group: &GroupRef, coeffs: Vec<f64>, slack: f64) -> Result<Self> {
        if coeffs.len() != group.order() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a group of order {}",
                coeffs.len(),
                group.order()
            )));
        }
        Ok(ApproxElement {
            group: Arc::clone(group),
            coeffs,
            slack,
        })
    }

    /// Slack set to the observed deviation of the weight from 1 plus one
    /// rounding unit per coefficient.
    pub fn with_measured_slack(group: &GroupRef, coeffs: Vec<f64>) -> Self {
        let n = coeffs.len() as f64;
        let sum: f64 = coeffs.iter().sum();
        let most_negative = coeffs.iter().fold(0.0_f64, |m, &c| m.max(-c));
        ApproxElement {
            group: Arc::clone(group),
            coeffs,
            slack: (1.0 - sum).abs().max(most_negative) + n * f64::EPSILON,
        }
    }

    pub fn zero(group: &GroupRef) -> Self {
        ApproxElement {
            group: Arc::clone(group),
            coeffs: vec![0.0; group.order()],
            slack: 0.0,
        }
    }

    pub fn point_mass(group: &GroupRef, g: usize) -> Self {
        let mut x = Self::zero(group);
        x.coeffs[g] = 1.0;
        x
    }

    pub fn group(&self) -> &GroupRef {
        &self.group
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }

    pub fn weight(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn multiply(&self, other: &ApproxElement) -> Result<ApproxElement> {
        if !FiniteGroup::same_as(&self.group, &other.group) {
            return Err(Error::GroupMismatch);
        }
        let mut out = vec![0.0; self.group.order()];
        convolve_into(&self.group, &self.coeffs, &other.coeffs, &mut out);
        let n = out.len() as f64;
        let slack = self.slack + other.slack + self.slack * other.slack + n * f64::EPSILON;
        Ok(ApproxElement {
            group: Arc::clone(&self.group),
            coeffs: out,
            slack,
        })
    }

    /// Divides by the current weight so the element is back on the simplex;
    /// the correction is added to the slack.
    pub fn renormalize(&mut self) {
        let sum = self.weight();
        if sum > 0.0 && sum.is_finite() {
            self.coeffs.iter_mut().for_each(|c| *c /= sum);
            self.slack += (1.0 - sum).abs() + self.coeffs.len() as f64 * f64::EPSILON;
        }
    }

    pub fn sup_distance(&self, other: &ApproxElement) -> Result<f64> {
        if !FiniteGroup::same_as(&self.group, &other.group) {
            return Err(Error::GroupMismatch);
        }
        Ok(sup_distance_slices(&self.coeffs, &other.coeffs))
    }

    /// Average of equally weighted elements.
    pub fn mean(items: &[&ApproxElement]) -> Result<ApproxElement> {
        let first = items.first().ok_or(Error::EmptySet)?;
        let mut acc = vec![0.0; first.coeffs.len()];
        let mut slack: f64 = 0.0;
        for x in items {
            if !FiniteGroup::same_as(&x.group, &first.group) {
                return Err(Error::GroupMismatch);
            }
            acc.iter_mut().zip(&x.coeffs).for_each(|(a, c)| *a += c);
            slack = slack.max(x.slack);
        }
        let k = items.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        Ok(ApproxElement {
            group: Arc::clone(&first.group),
            coeffs: acc,
            slack: slack + items.len() as f64 * f64::EPSILON,
        })
    }
}

/// Dense float convolution over the Cayley table; `out` is overwritten.
pub(crate) fn convolve_into(group: &FiniteGroup, x: &[f64], y: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (h, &xh) in x.iter().enumerate() {
        if xh == 0.0 {
            continue;
        }
        let row = group.row(h);
        for (&target, &yk) in row.iter().zip(y) {
            out[target] += xh * yk;
        }
    }
}

pub(crate) fn sup_distance_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Rank of a family of exact vectors by fraction-exact Gaussian elimination.
pub fn exact_rank(vectors: &[Vec<BigRational>]) -> usize {
    let mut rows: Vec<Vec<BigRational>> = vectors.to_vec();
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, pivot);
        let lead = rows[rank][col].clone();
        let pivot_row: Vec<BigRational> = rows[rank].iter().map(|v| v / &lead).collect();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && !row[col].is_zero() {
                let factor = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &factor * p;
                }
            }
        }
        rows[rank] = pivot_row;
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}
