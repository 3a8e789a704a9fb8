//! Closed-form regularity and ergodicity of a series map on the simplex.
//!
//! A point is first reduced until its return time is stable. The quotient
//! dynamics over `Z_m`, with `m` the period of the stable point, then give
//! the limit of every residue class of coefficients, and the limit on the
//! whole group follows by spreading those scalars over the powers of the
//! stable point.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::algebra::{AlgebraElement, ApproxElement, SimplexPoint};
use crate::error::{Error, Result};
use crate::group::GroupRef;
use crate::modm::{regularity_mod_m_with, residue_cycle, ModMReport, ResidueCycle};
use crate::profile::{profile, reduce_to_stable, AccumulationSet, DynamicsProfile, LimitPoint};
use crate::rational::{self, Q};
use crate::series::{Extinction, ProbPoly, DEFAULT_MAX_ITER, DEFAULT_TOL};

pub const DEFAULT_REGULAR_HORIZON: usize = 500;
pub const DEFAULT_CESARO_HORIZON: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    pub tol: f64,
    pub max_iter: usize,
    pub extinction_iterations: usize,
}

/// Everything known about the long-run behaviour of `p^[n](x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport {
    pub group: GroupRef,
    pub input: SimplexPoint,
    pub series: ProbPoly,
    /// The reduced point the closed forms are built from.
    pub stable_point: SimplexPoint,
    pub profile: DynamicsProfile,
    pub reduction_steps: usize,
    pub cycle: ResidueCycle,
    pub exists: bool,
    pub limit: Option<LimitPoint>,
    /// Subsequential limits; `points[i]` is approached along the iterations
    /// `n` with `cycle.phase_of(n) == Some(i)`.
    pub accumulation: AccumulationSet,
    pub cesaro: LimitPoint,
    pub extinction: Extinction,
    /// `L_r`, the limit of the coefficient mass on exponents `≡ r (mod m)`;
    /// absent when the regular limit does not exist.
    pub scalar_limits: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl LimitReport {
    pub fn period(&self) -> usize {
        self.cycle.period()
    }

    pub fn accumulation_points(&self) -> &[LimitPoint] {
        match &self.accumulation {
            AccumulationSet::ClosedForm(points) => points,
            AccumulationSet::Empirical(_) => unreachable!("closed form by construction"),
        }
    }

    /// Predicted limit of the subsequence containing iteration `n`.
    pub fn point_for_iteration(&self, n: usize) -> Option<&LimitPoint> {
        self.cycle.phase_of(n).map(|i| &self.accumulation_points()[i])
    }
}

/// Lifts a point of `Z_m` to `c_y Σ_r y^r (base_r + a slope_r) + (e - c_y) a`.
fn lift(point: &LimitPoint, y_powers: &[AlgebraElement], c: &SimplexPoint, group: &GroupRef) -> Result<LimitPoint> {
    let mut base = AlgebraElement::zero(group);
    let mut slope = AlgebraElement::identity(group).sub(c.as_element())?;
    for (r, yr) in y_powers.iter().enumerate() {
        let cyr = c.as_element().multiply(yr)?;
        let (b, s) = (&point.base.coeffs()[r], &point.slope.coeffs()[r]);
        if !b.is_zero() {
            base = base.add(&cyr.scale(b))?;
        }
        if !s.is_zero() {
            slope = slope.add(&cyr.scale(s))?;
        }
    }
    Ok(LimitPoint::new(base, slope, point.scalar, point.scalar_exact.clone()))
}

/// Regular limit, accumulation set and Cesàro limit of `p^[n](x)`.
pub fn analyze(p: &ProbPoly, x: &SimplexPoint) -> Result<LimitReport> {
    analyze_with(p, x, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

pub fn analyze_with(p: &ProbPoly, x: &SimplexPoint, tol: f64, max_iter: usize) -> Result<LimitReport> {
    if p.is_pure_power() {
        return Err(Error::PurePower(p.shift()));
    }
    let group = Arc::clone(x.group());
    let (y, steps) = reduce_to_stable(x)?;
    let prof = profile(&y)?;
    let m = prof.period;
    let quotient: ModMReport = regularity_mod_m_with(p, m, tol, max_iter)?;

    let mut y_powers = Vec::with_capacity(m);
    let mut current = AlgebraElement::identity(&group);
    for _ in 0..m {
        y_powers.push(current.clone());
        current = current.multiply(y.as_element())?;
    }
    let c = &prof.idempotent;
    let points = quotient
        .accumulation_points()
        .iter()
        .map(|pt| lift(pt, &y_powers, c, &group))
        .collect::<Result<Vec<_>>>()?;
    let cesaro = lift(&quotient.cesaro, &y_powers, c, &group)?;
    let scalar_limits = quotient
        .limit
        .as_ref()
        .map(|l| l.to_approx().coeffs().to_vec());

    Ok(LimitReport {
        group,
        input: x.clone(),
        series: p.clone(),
        stable_point: y,
        profile: prof,
        reduction_steps: steps,
        cycle: quotient.cycle.clone(),
        exists: quotient.exists,
        limit: quotient.exists.then(|| points[0].clone()),
        accumulation: AccumulationSet::ClosedForm(points),
        cesaro,
        diagnostics: Diagnostics {
            tol,
            max_iter,
            extinction_iterations: quotient.extinction.iterations,
        },
        extinction: quotient.extinction,
        scalar_limits,
    })
}

/// Regular-limit view of [`analyze`].
pub fn regular_limit(p: &ProbPoly, x: &SimplexPoint) -> Result<LimitReport> {
    analyze(p, x)
}

/// Ergodic-limit view of [`analyze`]; the Cesàro limit is always present.
pub fn cesaro_limit(p: &ProbPoly, x: &SimplexPoint) -> Result<LimitReport> {
    analyze(p, x)
}

/// Limits of `x^{r^n}`, the iterates of the pure power `t^r`.
pub fn pure_power_report(r: usize, x: &SimplexPoint) -> Result<LimitReport> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("pure power exponent must be at least 2, got {r}")));
    }
    let group = Arc::clone(x.group());
    let prof = profile(x)?;
    let m = prof.period;
    let cycle = residue_cycle(r, m)?;
    let c = &prof.idempotent;
    let points = cycle
        .residues
        .iter()
        .map(|&s| c.multiply(&x.power(s as u64)))
        .collect::<Result<Vec<_>>>()?;

    let divides = (1..=m).any(|k| (crate::modm::pow_mod(r, k, m) * ((r - 1) % m)).is_multiple_of(m));
    let singleton = cycle.period() == 1;
    if divides != singleton {
        return Err(Error::Internal(format!(
            "divisibility criterion ({divides}) disagrees with cycle length {}",
            cycle.period()
        )));
    }

    let share = Q::new(BigInt::one(), BigInt::from(cycle.period()));
    let weighted: Vec<(Q, &SimplexPoint)> = points.iter().map(|pt| (share.clone(), pt)).collect();
    let cesaro = SimplexPoint::convex_combination(&weighted)?;

    let zero = Extinction {
        value: 0.0,
        exact: Some(Q::zero()),
        iterations: 0,
    };
    let limit = singleton.then(|| LimitPoint::exact(points[0].clone()));
    Ok(LimitReport {
        group,
        input: x.clone(),
        series: ProbPoly::pure_power(r),
        stable_point: x.clone(),
        profile: prof,
        reduction_steps: 0,
        cycle,
        exists: singleton,
        limit,
        accumulation: AccumulationSet::ClosedForm(points.into_iter().map(LimitPoint::exact).collect()),
        cesaro: LimitPoint::exact(cesaro),
        extinction: zero,
        scalar_limits: None,
        diagnostics: Diagnostics {
            tol: 0.0,
            max_iter: 0,
            extinction_iterations: 0,
        },
    })
}

/// Routes pure powers to [`pure_power_report`] and everything else to
/// [`analyze`].
pub fn predict(p: &ProbPoly, x: &SimplexPoint, tol: f64, max_iter: usize) -> Result<LimitReport> {
    if p.is_pure_power() {
        pure_power_report(p.shift(), x)
    } else {
        analyze_with(p, x, tol, max_iter)
    }
}

/// Splits a trace `p^[1](x) ..` by cycle phase and returns, for each phase,
/// the last iterate of that phase.
pub fn phase_tails(trace: &[ApproxElement], cycle: &ResidueCycle) -> Vec<Option<ApproxElement>> {
    let mut last = vec![None; cycle.period()];
    for (idx, y) in trace.iter().enumerate() {
        if let Some(i) = cycle.phase_of(idx + 1) {
            last[i] = Some(y.clone());
        }
    }
    last
}

/// Shortest decimal rendering of a limit point's coefficients.
pub fn describe(point: &LimitPoint) -> Vec<String> {
    match point.to_exact() {
        Some(x) => x.coeffs().iter().map(rational::format).collect(),
        None => point.to_approx().coeffs().iter().map(|c| c.to_string()).collect(),
    }
}
