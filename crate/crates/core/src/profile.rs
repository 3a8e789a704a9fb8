//! Dynamical invariants of a simplex point and the accumulation set of its
//! convolution powers.

use std::fmt;

use num_traits::Zero;

use crate::algebra::{sup_distance_slices, AlgebraElement, ApproxElement, SimplexPoint};
use crate::error::{Error, Result};
use crate::group::{generated_subgroup, ElementSet};
use crate::rational::{self, Q};

pub const DEFAULT_BURN_IN: usize = 200;
pub const DEFAULT_HORIZON: usize = 600;
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;
/// Tolerance for matching closed-form points to empirical clusters.
pub const MATCH_TOL: f64 = 1e-8;

/// The invariants of a point `x` of the simplex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicsProfile {
    /// Least `k >= 1` with the identity in `Supp(x^k)`.
    pub return_time: usize,
    /// Least `k >= 1` with `Supp(x^k)` inside `subgroup`.
    pub period: usize,
    /// Subgroup generated by `Supp(x^return_time)`.
    pub subgroup: ElementSet,
    /// Uniform distribution on `subgroup`.
    pub idempotent: SimplexPoint,
}

impl DynamicsProfile {
    pub fn check_invariants(&self) -> Result<()> {
        if !self.return_time.is_multiple_of(self.period) {
            return Err(Error::Internal(format!(
                "period {} does not divide return time {}",
                self.period, self.return_time
            )));
        }
        if !self.subgroup.is_subgroup() {
            return Err(Error::Internal("support subgroup is not closed".into()));
        }
        if SimplexPoint::uniform_on(&self.subgroup)? != self.idempotent {
            return Err(Error::Internal("idempotent is not uniform on the subgroup".into()));
        }
        Ok(())
    }
}

pub fn profile(x: &SimplexPoint) -> Result<DynamicsProfile> {
    let group = x.group();
    let e = group.identity();
    let mut supports = Vec::new();
    let mut power = x.clone();
    let mut return_time = None;
    for k in 1..=group.order() {
        supports.push(power.support());
        if !power.coeffs()[e].is_zero() {
            return_time = Some(k);
            break;
        }
        power = power.multiply(x)?;
    }
    let return_time = return_time.ok_or_else(|| {
        Error::Internal(format!(
            "identity not reached within {} powers",
            group.order()
        ))
    })?;
    let subgroup = generated_subgroup(&supports[return_time - 1])?;
    let period = supports
        .iter()
        .position(|s| s.is_subset(&subgroup))
        .map(|i| i + 1)
        .expect("the last support lies in the subgroup");
    let idempotent = SimplexPoint::uniform_on(&subgroup)?;
    Ok(DynamicsProfile {
        return_time,
        period,
        subgroup,
        idempotent,
    })
}

/// A closed-form accumulation point `base + scalar * slope`.
///
/// Points that depend only on exact data have a zero slope. Points that
/// involve the float extinction value carry it as `scalar`; `scalar_exact`
/// is set when that value is known exactly.
#[derive(Clone, PartialEq)]
pub struct LimitPoint {
    pub base: AlgebraElement,
    pub slope: AlgebraElement,
    pub scalar: f64,
    pub scalar_exact: Option<Q>,
}

impl fmt::Debug for LimitPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_exact() {
            Some(x) => x.fmt(f),
            None => f
                .debug_struct("LimitPoint")
                .field("base", &self.base)
                .field("slope", &self.slope)
                .field("scalar", &self.scalar)
                .finish(),
        }
    }
}

impl LimitPoint {
    pub fn exact(x: SimplexPoint) -> Self {
        let slope = AlgebraElement::zero(x.group());
        LimitPoint {
            base: x.into_element(),
            slope,
            scalar: 0.0,
            scalar_exact: Some(Q::zero()),
        }
    }

    pub fn new(base: AlgebraElement, slope: AlgebraElement, scalar: f64, scalar_exact: Option<Q>) -> Self {
        LimitPoint {
            base,
            slope,
            scalar,
            scalar_exact,
        }
    }

    /// The exact point when the scalar is exact or irrelevant.
    pub fn to_exact(&self) -> Option<SimplexPoint> {
        let slope_is_zero = self.slope.coeffs().iter().all(Zero::is_zero);
        let combined = if slope_is_zero {
            self.base.clone()
        } else {
            let s = self.scalar_exact.as_ref()?;
            self.base.add(&self.slope.scale(s)).ok()?
        };
        SimplexPoint::new(combined).ok()
    }

    pub fn to_approx(&self) -> ApproxElement {
        if let Some(x) = self.to_exact() {
            return x.to_approx();
        }
        let coeffs = self
            .base
            .coeffs()
            .iter()
            .zip(self.slope.coeffs())
            .map(|(b, s)| rational::to_f64(b) + self.scalar * rational::to_f64(s))
            .collect();
        ApproxElement::with_measured_slack(self.base.group(), coeffs)
    }
}

/// Clusters found by the float oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalClusters {
    pub representatives: Vec<ApproxElement>,
    pub sizes: Vec<usize>,
    pub burn_in: usize,
    pub horizon: usize,
    pub merge_tol: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AccumulationSet {
    ClosedForm(Vec<LimitPoint>),
    Empirical(EmpiricalClusters),
}

impl AccumulationSet {
    pub fn len(&self) -> usize {
        match self {
            AccumulationSet::ClosedForm(points) => points.len(),
            AccumulationSet::Empirical(c) => c.representatives.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source(&self) -> &'static str {
        match self {
            AccumulationSet::ClosedForm(_) => "closed_form",
            AccumulationSet::Empirical(_) => "empirical",
        }
    }

    pub fn approx_points(&self) -> Vec<ApproxElement> {
        match self {
            AccumulationSet::ClosedForm(points) => points.iter().map(LimitPoint::to_approx).collect(),
            AccumulationSet::Empirical(c) => c.representatives.clone(),
        }
    }

    /// Exact points, when every point is exact.
    pub fn exact_points(&self) -> Option<Vec<SimplexPoint>> {
        match self {
            AccumulationSet::ClosedForm(points) => points.iter().map(LimitPoint::to_exact).collect(),
            AccumulationSet::Empirical(_) => None,
        }
    }
}

/// The accumulation set `{c_x x^r : 0 <= r < period}` of the powers of `x`.
pub fn limit_set(x: &SimplexPoint) -> Result<AccumulationSet> {
    let prof = profile(x)?;
    limit_set_with(x, &prof)
}

pub fn limit_set_with(x: &SimplexPoint, prof: &DynamicsProfile) -> Result<AccumulationSet> {
    let c = &prof.idempotent;
    if c.multiply(x)? != x.multiply(c)? {
        return Err(Error::Internal("idempotent does not commute with x".into()));
    }
    let mut points = Vec::with_capacity(prof.period);
    let mut current = c.clone();
    for _ in 0..prof.period {
        points.push(LimitPoint::exact(current.clone()));
        current = current.multiply(x)?;
    }
    Ok(AccumulationSet::ClosedForm(points))
}

/// Iterates `x^k` in floating point and clusters the iterates with
/// `burn_in < k <= horizon`.
///
/// Fails with [`Error::Inconclusive`] when the clusters are not yet stable:
/// - some cluster has a single member;
/// - some cluster is not revisited in the last `|G|` iterates, although the
///   period is at most `|G|` so every accumulation point recurs there;
/// - there are more clusters than group elements.
pub fn empirical_limit_set(
    x: &SimplexPoint,
    burn_in: usize,
    horizon: usize,
    merge_tol: f64,
) -> Result<AccumulationSet> {
    if burn_in >= horizon {
        return Err(Error::InvalidArgument(format!(
            "burn-in {burn_in} must be below horizon {horizon}"
        )));
    }
    let group = x.group();
    let step = x.to_approx();
    let mut current = step.clone();
    let mut representatives: Vec<ApproxElement> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    let mut last_hit: Vec<usize> = Vec::new();
    for k in 1..=horizon {
        if k > 1 {
            current = step.multiply(&current)?;
            current.renormalize();
        }
        if k <= burn_in {
            continue;
        }
        let hit = representatives
            .iter()
            .position(|rep| sup_distance_slices(rep.coeffs(), current.coeffs()) <= merge_tol);
        match hit {
            Some(i) => {
                representatives[i] = current.clone();
                sizes[i] += 1;
                last_hit[i] = k;
            }
            None => {
                if representatives.len() == group.order() {
                    return Err(Error::Inconclusive(format!(
                        "more than {} clusters after burn-in {burn_in}",
                        group.order()
                    )));
                }
                representatives.push(current.clone());
                sizes.push(1);
                last_hit.push(k);
            }
        }
    }
    // representatives that drifted together describe one cluster
    let mut i = 0;
    while i < representatives.len() {
        let twin = (i + 1..representatives.len()).find(|&j| {
            sup_distance_slices(representatives[i].coeffs(), representatives[j].coeffs()) <= merge_tol
        });
        match twin {
            Some(j) => {
                let rep = representatives.remove(j);
                sizes[i] += sizes.remove(j);
                last_hit[i] = last_hit[i].max(last_hit.remove(j));
                representatives[i] = rep;
            }
            None => i += 1,
        }
    }
    if last_hit.iter().any(|&k| k + group.order() <= horizon) {
        return Err(Error::Inconclusive(format!(
            "transient cluster not revisited before horizon {horizon}; increase the horizon"
        )));
    }
    if sizes.iter().any(|&s| s < 2) {
        return Err(Error::Inconclusive(format!(
            "singleton cluster with horizon {horizon}; increase the horizon"
        )));
    }
    Ok(AccumulationSet::Empirical(EmpiricalClusters {
        representatives,
        sizes,
        burn_in,
        horizon,
        merge_tol,
    }))
}

/// Outcome of greedy nearest-neighbour matching of two point sets.
#[derive(Clone, Debug, PartialEq)]
pub struct SetMatch {
    pub matched: bool,
    pub cardinality: (usize, usize),
    /// Largest matched distance (infinite when some point found no partner).
    pub max_distance: f64,
}

pub fn match_sets(expected: &[ApproxElement], observed: &[ApproxElement], tol: f64) -> SetMatch {
    let mut used = vec![false; observed.len()];
    let mut max_distance: f64 = 0.0;
    for p in expected {
        let best = observed
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, q)| (i, sup_distance_slices(p.coeffs(), q.coeffs())))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) => {
                used[i] = true;
                max_distance = max_distance.max(d);
            }
            None => max_distance = f64::INFINITY,
        }
    }
    SetMatch {
        matched: expected.len() == observed.len() && max_distance <= tol,
        cardinality: (expected.len(), observed.len()),
        max_distance,
    }
}

/// `x c_x`.
pub fn reduce(x: &SimplexPoint) -> Result<SimplexPoint> {
    let prof = profile(x)?;
    x.multiply(&prof.idempotent)
}

/// Applies [`reduce`] until the return time no longer drops.
///
/// Returns the stable point `y` (with `n_{y c_y} = n_y`) and the number of
/// reductions applied.
pub fn reduce_to_stable(x: &SimplexPoint) -> Result<(SimplexPoint, usize)> {
    let cap = x.group().order();
    let mut y = x.clone();
    let mut prof = profile(&y)?;
    for steps in 0..=cap {
        let z = y.multiply(&prof.idempotent)?;
        let next = profile(&z)?;
        if next.return_time > prof.period || prof.period > prof.return_time {
            return Err(Error::Internal(format!(
                "reduction inequality violated: {} <= {} <= {} fails",
                next.return_time, prof.period, prof.return_time
            )));
        }
        if next.return_time == prof.return_time {
            return Ok((y, steps));
        }
        y = z;
        prof = next;
    }
    Err(Error::Internal(format!("reduction did not stabilize within {cap} steps")))
}
