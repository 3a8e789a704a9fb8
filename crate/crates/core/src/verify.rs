//! Invariant checks with explicit pass / fail / inconclusive outcomes.
//!
//! Each check recomputes a predicted quantity independently (exact
//! enumeration or float iteration) and compares. Numerical budgets that run
//! out produce `Inconclusive`, never `Fail`.

use serde::{Deserialize, Serialize};

use crate::algebra::{exact_rank, ApproxElement, SimplexPoint};
use crate::error::{Error, Result};
use crate::group::{ElementSet, FiniteGroup};
use crate::oracle::{empirical_cesaro_checkpoints, map_iter};
use crate::predictor::{phase_tails, predict, LimitReport};
use crate::profile::{
    empirical_limit_set, limit_set_with, match_sets, profile, DynamicsProfile, DEFAULT_BURN_IN,
    DEFAULT_HORIZON, DEFAULT_MERGE_TOL, MATCH_TOL,
};
use crate::rational::Q;
use crate::series::{
    coeff_iter, composition_sum_check, compose, recursion_coeffs, CoeffState, ProbPoly, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

use num_traits::{One, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, status: Status, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.to_owned(),
            status,
            detail: detail.into(),
        }
    }

    fn from_bool(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(name, if ok { Status::Pass } else { Status::Fail }, detail)
    }

    fn from_error(name: &str, err: Error) -> Self {
        let status = match err {
            Error::Inconclusive(_) => Status::Inconclusive,
            _ => Status::Fail,
        };
        Self::new(name, status, err.to_string())
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Overall status: any failure wins, then any inconclusive result.
pub fn summarize(outcomes: &[CheckOutcome]) -> Status {
    if outcomes.iter().any(|o| o.status == Status::Fail) {
        Status::Fail
    } else if outcomes.iter().any(|o| o.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    }
}

pub fn check_group_axioms(g: &FiniteGroup) -> CheckOutcome {
    match g.validate() {
        Ok(()) => CheckOutcome::new("group_axioms", Status::Pass, format!("order {}", g.order())),
        Err(e) => CheckOutcome::from_error("group_axioms", e),
    }
}

/// Support of sums and products of nonnegative elements.
pub fn check_support_laws(y: &SimplexPoint, z: &SimplexPoint) -> Result<CheckOutcome> {
    let name = "support_laws";
    let (sy, sz) = (y.support(), z.support());
    let sum = y.as_element().add(z.as_element())?;
    if sum.support() != sy.union(&sz)? {
        return Ok(CheckOutcome::new(name, Status::Fail, "support of a sum is not the union"));
    }
    let prod = y.multiply(z)?;
    let sp = prod.support();
    if sp != sy.product_set(&sz)? {
        return Ok(CheckOutcome::new(name, Status::Fail, "support of a product is not the product set"));
    }
    if sp.len() < sy.len().max(sz.len()) {
        return Ok(CheckOutcome::new(name, Status::Fail, "product support smaller than a factor's"));
    }
    let e = y.group().identity();
    if sy.contains(e) && sz.contains(e) && !sy.union(&sz)?.is_subset(&sp) {
        return Ok(CheckOutcome::new(name, Status::Fail, "union not contained in product support"));
    }
    Ok(CheckOutcome::new(name, Status::Pass, format!("|Supp(yz)| = {}", sp.len())))
}

/// `e, x, .., x^{n-1}` are linearly independent, `n` the return time.
pub fn check_power_independence(x: &SimplexPoint, prof: &DynamicsProfile) -> CheckOutcome {
    let n = prof.return_time;
    let vectors: Vec<Vec<Q>> = (0..n).map(|k| x.power(k as u64).coeffs().to_vec()).collect();
    let rank = exact_rank(&vectors);
    CheckOutcome::from_bool("power_independence", rank == n, format!("rank {rank} of {n} powers"))
}

/// `c_x x^a = c_x x^b` exactly iff `a ≡ b (mod period)`, for `a, b < 3 period`.
pub fn check_residue_equivalence(x: &SimplexPoint, prof: &DynamicsProfile) -> Result<CheckOutcome> {
    let m = prof.period;
    let mut shifted = Vec::with_capacity(3 * m);
    let mut current = prof.idempotent.clone();
    for _ in 0..3 * m {
        shifted.push(current.clone());
        current = current.multiply(x)?;
    }
    for a in 0..3 * m {
        for b in 0..3 * m {
            if (shifted[a] == shifted[b]) != (a % m == b % m) {
                return Ok(CheckOutcome::new(
                    "residue_equivalence",
                    Status::Fail,
                    format!("exponents {a} and {b} disagree with period {m}"),
                ));
            }
        }
    }
    Ok(CheckOutcome::new("residue_equivalence", Status::Pass, format!("period {m}")))
}

/// With the identity in the support, the subgroup is the whole group iff
/// some power up to `|G|^2` has full support.
pub fn check_interior_power_criterion(x: &SimplexPoint, prof: &DynamicsProfile) -> Result<CheckOutcome> {
    let name = "interior_power_criterion";
    let g = x.group();
    let base = x.support();
    if !base.contains(g.identity()) {
        return Ok(CheckOutcome::new(name, Status::Pass, "not applicable: identity not in support"));
    }
    let mut supp = base.clone();
    let mut full = supp.len() == g.order();
    for _ in 1..g.order() * g.order() {
        if full {
            break;
        }
        let next = supp.product_set(&base)?;
        if next == supp {
            break;
        }
        supp = next;
        full = supp.len() == g.order();
    }
    let whole = prof.subgroup.len() == g.order();
    Ok(CheckOutcome::from_bool(
        name,
        whole == full,
        format!("subgroup is whole group: {whole}; some power has full support: {full}"),
    ))
}

/// `n_{x c_x} <= m_x <= n_x`, and equality of return times forces
/// `n_x = m_x = m_{x c_x}`.
pub fn check_reduction_inequalities(x: &SimplexPoint, prof: &DynamicsProfile) -> Result<CheckOutcome> {
    let reduced = profile(&x.multiply(&prof.idempotent)?)?;
    let (nr, m, n) = (reduced.return_time, prof.period, prof.return_time);
    let chain = nr <= m && m <= n;
    let equality = nr != n || (n == m && m == reduced.period);
    Ok(CheckOutcome::from_bool(
        "reduction_inequalities",
        chain && equality,
        format!("reduced return time {nr}, period {m}, return time {n}, reduced period {}", reduced.period),
    ))
}

/// The limit set is a single point iff the support lies in the subgroup.
pub fn check_singleton_criterion(x: &SimplexPoint, prof: &DynamicsProfile) -> Result<CheckOutcome> {
    let set = limit_set_with(x, prof)?;
    let inside = x.support().is_subset(&prof.subgroup);
    Ok(CheckOutcome::from_bool(
        "limit_set_singleton_criterion",
        (set.len() == 1) == inside,
        format!("{} limit points; support inside subgroup: {inside}", set.len()),
    ))
}

/// Closed-form limit set against float clusters, escalating the horizon
/// (x4, at most `max_escalations` times) while clusters are unstable.
pub fn check_limit_set_oracle(
    x: &SimplexPoint,
    prof: &DynamicsProfile,
    burn_in: usize,
    horizon: usize,
    merge_tol: f64,
    max_escalations: usize,
) -> Result<CheckOutcome> {
    let name = "limit_set_matches_powers";
    let closed = limit_set_with(x, prof)?;
    let (mut b, mut h) = (burn_in, horizon);
    for _ in 0..=max_escalations {
        match empirical_limit_set(x, b, h, merge_tol) {
            Ok(emp) => {
                let m = match_sets(&closed.approx_points(), &emp.approx_points(), MATCH_TOL);
                return Ok(CheckOutcome::from_bool(
                    name,
                    m.matched,
                    format!(
                        "{} closed-form vs {} empirical points, max distance {:.3e} (horizon {h})",
                        m.cardinality.0, m.cardinality.1, m.max_distance
                    ),
                ));
            }
            Err(Error::Inconclusive(_)) => {
                b *= 4;
                h *= 4;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(CheckOutcome::new(name, Status::Inconclusive, format!("clusters unstable up to horizon {}", h / 4)))
}

/// All point-level checks for `x`.
pub fn point_suite(x: &SimplexPoint) -> Result<Vec<CheckOutcome>> {
    let prof = profile(x)?;
    let profile_ok = match prof.check_invariants() {
        Ok(()) => CheckOutcome::new("profile_invariants", Status::Pass, ""),
        Err(e) => CheckOutcome::from_error("profile_invariants", e),
    };
    let square = x.multiply(x)?;
    Ok(vec![
        check_group_axioms(x.group()),
        profile_ok,
        check_support_laws(x, &square)?,
        check_power_independence(x, &prof),
        check_residue_equivalence(x, &prof)?,
        check_interior_power_criterion(x, &prof)?,
        check_reduction_inequalities(x, &prof)?,
        check_singleton_criterion(x, &prof)?,
        check_limit_set_oracle(x, &prof, DEFAULT_BURN_IN, DEFAULT_HORIZON, DEFAULT_MERGE_TOL, 3)?,
    ])
}

/// `a_0^[n]` is non-decreasing in float arithmetic for `n <= horizon`.
///
/// Float evaluation of a polynomial with nonnegative coefficients is
/// monotone, so no tolerance is needed.
pub fn check_constant_term_monotone(p: &ProbPoly, horizon: usize) -> CheckOutcome {
    let mut prev = crate::rational::to_f64(&p.constant_term());
    for n in 1..horizon {
        let next = p.eval(&prev);
        if next < prev {
            return CheckOutcome::new(
                "constant_term_monotone",
                Status::Fail,
                format!("a_0 decreased at n = {}", n + 1),
            );
        }
        prev = next;
    }
    CheckOutcome::new("constant_term_monotone", Status::Pass, format!("non-decreasing up to n = {horizon}"))
}

/// Outcome of the certified sup-decay scan.
#[derive(Clone, Debug, PartialEq)]
pub struct SupDecay {
    /// Certified increases `lower(n+1) > upper(n)`.
    pub violations: Vec<usize>,
    /// First `n` whose certified upper bound is below `eps`.
    pub below_eps_at: Option<usize>,
    pub final_bounds: (f64, f64),
    pub max_mass_error: f64,
}

/// Scans `sup_{k>=1} a_k^[n]` for `n <= horizon` using kept coefficients as
/// lower bounds and `max(kept, tail)` as upper bounds.
pub fn sup_decay(p: &ProbPoly, horizon: usize, eps: f64, truncation: usize) -> Result<SupDecay> {
    let mut violations = Vec::new();
    let mut below_eps_at = None;
    let mut prev_upper = f64::INFINITY;
    let mut bounds = (0.0, 0.0);
    let mut max_mass_error: f64 = 0.0;
    for state in coeff_iter::<f64>(p, truncation)?.take(horizon) {
        bounds = state.sup_bounds();
        let (lower, upper) = bounds;
        // allow one rounding unit per kept coefficient
        if lower > prev_upper * (1.0 + 1e-12) + 1e-300 {
            violations.push(state.n);
        }
        if below_eps_at.is_none() && upper < eps {
            below_eps_at = Some(state.n);
        }
        let kept: f64 = state.coeffs.iter().sum();
        max_mass_error = max_mass_error.max((kept + state.tail_mass - 1.0).abs());
        prev_upper = upper;
    }
    Ok(SupDecay {
        violations,
        below_eps_at,
        final_bounds: bounds,
        max_mass_error,
    })
}

pub fn check_sup_decay(p: &ProbPoly, horizon: usize, eps: f64, truncation: usize) -> Result<Vec<CheckOutcome>> {
    let scan = sup_decay(p, horizon, eps, truncation)?;
    let mono = CheckOutcome::from_bool(
        "positive_coefficient_sup_non_increasing",
        scan.violations.is_empty(),
        format!("certified increases at {:?}", scan.violations),
    );
    let decay = match scan.below_eps_at {
        Some(n) => CheckOutcome::new("positive_coefficient_sup_vanishes", Status::Pass, format!("below {eps:e} at n = {n}")),
        None => CheckOutcome::new(
            "positive_coefficient_sup_vanishes",
            Status::Inconclusive,
            format!(
                "bounds [{:.3e}, {:.3e}] at n = {horizon}; truncated mass prevents certification",
                scan.final_bounds.0, scan.final_bounds.1
            ),
        ),
    };
    let mass = CheckOutcome::from_bool(
        "mass_conservation",
        scan.max_mass_error <= 1e-12,
        format!("max |kept + tail - 1| = {:.3e}", scan.max_mass_error),
    );
    Ok(vec![mono, decay, mass])
}

/// Exact agreement of the Taylor recursion with composition for `n <= 3`,
/// `k <= 8`.
pub fn check_recursion_equivalence(p: &ProbPoly) -> Result<CheckOutcome> {
    let k_max = 8.max(p.degree());
    let mut state = coeff_iter::<Q>(p, k_max)?.next().expect("first state");
    for n in 1..=3 {
        let next = compose(p, &state)?;
        for k in 0..=8 {
            let via_recursion = recursion_coeffs(p, &state, k)?;
            if via_recursion != next.coeffs[k] {
                return Ok(CheckOutcome::new(
                    "recursion_matches_composition",
                    Status::Fail,
                    format!("coefficient {k} of iterate {} differs", n + 1),
                ));
            }
        }
        state = next;
    }
    Ok(CheckOutcome::new("recursion_matches_composition", Status::Pass, "n <= 3, k <= 8"))
}

/// Composition-sum inequalities on the normalized positive coefficients of
/// the first iterates.
pub fn check_composition_sums(p: &ProbPoly) -> Result<CheckOutcome> {
    let name = "composition_sum_bounds";
    let states: Vec<CoeffState<Q>> = coeff_iter::<Q>(p, 8.max(p.degree()))?.take(2).collect();
    let mut checked = 0;
    for s in &states {
        let rest = Q::one() - s.a0().clone() - s.tail_mass.clone();
        if rest.is_zero() {
            continue;
        }
        let mut seq: Vec<Q> = s.coeffs[1..].iter().map(|c| c / &rest).collect();
        while seq.last().is_some_and(Zero::is_zero) && seq.len() > 1 {
            seq.pop();
        }
        for k in 1..=8 {
            for i in 1..=k {
                let (lhs, rhs, sup) = composition_sum_check(&seq, k, i)?;
                if lhs > sup || (i >= 2 && lhs > rhs) {
                    return Ok(CheckOutcome::new(name, Status::Fail, format!("k = {k}, i = {i}")));
                }
                checked += 1;
            }
        }
    }
    Ok(CheckOutcome::new(name, Status::Pass, format!("{checked} (k, i) pairs")))
}

pub fn series_suite(p: &ProbPoly, truncation: usize) -> Result<Vec<CheckOutcome>> {
    if p.is_pure_power() {
        return Ok(vec![]);
    }
    let mut out = vec![check_constant_term_monotone(p, 2000)];
    out.extend(check_sup_decay(p, 5000, 1e-6, truncation)?);
    out.push(check_recursion_equivalence(p)?);
    out.push(check_composition_sums(p)?);
    Ok(out)
}

fn is_critical(p: &ProbPoly) -> bool {
    !p.constant_term().is_zero() && p.mean().is_one()
}

/// Last iterate against the predicted limit; slow convergence (the error
/// still shrinking at eight times the horizon) is inconclusive.
pub fn check_regular_agreement(report: &LimitReport, horizon: usize, tol: f64) -> Result<CheckOutcome> {
    let name = "regular_limit_matches_iteration";
    let Some(limit) = &report.limit else {
        return Ok(CheckOutcome::new(name, Status::Pass, "not applicable: no regular limit"));
    };
    let target = limit.to_approx();
    let errs = errors_at(report, &target, &[horizon, 8 * horizon])?;
    if errs[0] <= tol {
        return Ok(CheckOutcome::new(name, Status::Pass, format!("error {:.3e} at n = {horizon}", errs[0])));
    }
    let slow = errs[1] < errs[0] && (errs[1] <= tol || is_critical(&report.series));
    Ok(CheckOutcome::new(
        name,
        if slow { Status::Inconclusive } else { Status::Fail },
        format!("error {:.3e} at n = {horizon}, {:.3e} at n = {}", errs[0], errs[1], 8 * horizon),
    ))
}

fn errors_at(report: &LimitReport, target: &ApproxElement, horizons: &[usize]) -> Result<Vec<f64>> {
    let last = *horizons.iter().max().unwrap_or(&1);
    let mut out = Vec::new();
    for (i, y) in map_iter(&report.series, &report.input).take(last).enumerate() {
        if horizons.contains(&(i + 1)) {
            out.push(y.sup_distance(target)?);
        }
    }
    Ok(out)
}

/// Each phase of the trace approaches its predicted accumulation point, and
/// distinct predicted points are at least `1e-3` apart somewhere.
pub fn check_divergent_agreement(report: &LimitReport, horizon: usize, tol: f64) -> Result<CheckOutcome> {
    let name = "accumulation_points_match_subsequences";
    if report.exists {
        return Ok(CheckOutcome::new(name, Status::Pass, "not applicable: regular limit exists"));
    }
    let d = report.period();
    let run = |h: usize| -> Result<f64> {
        let trace: Vec<ApproxElement> = map_iter(&report.series, &report.input).take(h).collect();
        let tails = phase_tails(&trace, &report.cycle);
        let mut worst: f64 = 0.0;
        for (tail, point) in tails.iter().zip(report.accumulation_points()) {
            let tail = tail.as_ref().ok_or_else(|| Error::Inconclusive("horizon shorter than the cycle".into()))?;
            worst = worst.max(tail.sup_distance(&point.to_approx())?);
        }
        Ok(worst)
    };
    let horizon = horizon.max(report.cycle.preperiod + 2 * d);
    let err = run(horizon)?;
    let points: Vec<ApproxElement> = report.accumulation_points().iter().map(|p| p.to_approx()).collect();
    let mut spread: f64 = 0.0;
    for a in &points {
        for b in &points {
            spread = spread.max(a.sup_distance(b)?);
        }
    }
    if spread < 1e-3 {
        return Ok(CheckOutcome::new(name, Status::Fail, format!("predicted points only {spread:.3e} apart")));
    }
    if err <= tol {
        return Ok(CheckOutcome::new(name, Status::Pass, format!("{d} phases, worst error {err:.3e}")));
    }
    let err_long = run(8 * horizon)?;
    let slow = err_long < err && (err_long <= tol || is_critical(&report.series));
    Ok(CheckOutcome::new(
        name,
        if slow { Status::Inconclusive } else { Status::Fail },
        format!("worst phase error {err:.3e} at n = {horizon}, {err_long:.3e} at n = {}", 8 * horizon),
    ))
}

/// Cesàro limit against a window average after burn-in. The window covers
/// whole cycles, so every phase is weighted equally and the averaging lag of
/// the plain running mean drops out.
pub fn check_cesaro_window(report: &LimitReport, burn_in: usize, tol: f64) -> Result<CheckOutcome> {
    let name = "cesaro_limit_matches_window_average";
    let d = report.period();
    let start = burn_in.max(report.cycle.preperiod);
    let len = d * 1000usize.div_ceil(d);
    let group = report.group.clone();
    let mut sums = vec![0.0; group.order()];
    for y in map_iter(&report.series, &report.input).skip(start).take(len) {
        sums.iter_mut().zip(y.coeffs()).for_each(|(s, c)| *s += c);
    }
    let avg = ApproxElement::new(&group, sums.iter().map(|s| s / len as f64).collect(), 0.0)?;
    let err = avg.sup_distance(&report.cesaro.to_approx())?;
    let status = if err <= tol {
        Status::Pass
    } else if is_critical(&report.series) {
        Status::Inconclusive
    } else {
        Status::Fail
    };
    Ok(CheckOutcome::new(name, status, format!("error {err:.3e} over n in ({start}, {}]", start + len)))
}

/// The running mean error shrinks like `1/n`: doubling the horizon must cut
/// it by at least 40% unless it is already at rounding level.
pub fn check_cesaro_decay(report: &LimitReport, horizon: usize) -> Result<CheckOutcome> {
    let avgs = empirical_cesaro_checkpoints(&report.series, &report.input, &[horizon, 2 * horizon])?;
    let target = report.cesaro.to_approx();
    let (e1, e2) = (avgs[0].sup_distance(&target)?, avgs[1].sup_distance(&target)?);
    Ok(CheckOutcome::from_bool(
        "cesaro_running_mean_converges",
        e2 <= 0.6 * e1 || e2 <= 1e-12,
        format!("error {e1:.3e} at n = {horizon}, {e2:.3e} at n = {}", 2 * horizon),
    ))
}

/// The Cesàro limit is unchanged by replacing `x` with `x c_x`.
pub fn check_reduction_soundness(report: &LimitReport) -> Result<CheckOutcome> {
    let reduced = crate::profile::reduce(&report.input)?;
    let other = predict(&report.series, &reduced, report.diagnostics.tol, report.diagnostics.max_iter.max(1))?;
    Ok(CheckOutcome::from_bool(
        "cesaro_limit_invariant_under_reduction",
        other.cesaro == report.cesaro,
        "",
    ))
}

/// Phase tails of `x^{r^n}` against the predicted points of a pure power.
pub fn check_pure_power_oracle(report: &LimitReport) -> Result<CheckOutcome> {
    let name = "pure_power_accumulation_matches_iteration";
    let m = report.profile.period;
    let d = report.period();
    let x = &report.input;
    let mut worst: f64 = 0.0;
    // along phase i the iterates are x^N with N ≡ residues[i] (mod m) and
    // N → ∞; probe with a large exponent in that class
    for (i, point) in report.accumulation_points().iter().enumerate() {
        let n = report.cycle.preperiod + 1 + i + d;
        let residue = report.cycle.term(n);
        let exponent = (residue + m * 400) as u64;
        let y = x.to_approx();
        let mut acc = ApproxElement::point_mass(x.group(), x.group().identity());
        let mut base = y;
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.multiply(&base)?;
                acc.renormalize();
            }
            base = base.multiply(&base)?;
            base.renormalize();
            e >>= 1;
        }
        worst = worst.max(acc.sup_distance(&point.to_approx())?);
    }
    Ok(CheckOutcome::from_bool(name, worst <= 1e-8, format!("{d} points, worst error {worst:.3e}")))
}

/// Full suite for `p` acting on `x`.
pub fn map_suite(p: &ProbPoly, x: &SimplexPoint, regular_horizon: usize, cesaro_horizon: usize) -> Result<Vec<CheckOutcome>> {
    let report = match predict(p, x, DEFAULT_TOL, DEFAULT_MAX_ITER) {
        Ok(r) => r,
        Err(e @ Error::Inconclusive(_)) => return Ok(vec![CheckOutcome::from_error("prediction", e)]),
        Err(e) => return Err(e),
    };
    if p.is_pure_power() {
        return Ok(vec![check_pure_power_oracle(&report)?]);
    }
    Ok(vec![
        check_regular_agreement(&report, regular_horizon, 1e-7)?,
        check_divergent_agreement(&report, regular_horizon, 1e-7)?,
        check_cesaro_window(&report, cesaro_horizon / 2, 1e-7)?,
        check_cesaro_decay(&report, cesaro_horizon)?,
        check_reduction_soundness(&report)?,
    ])
}

/// Uniform sanity check that `set` is the subgroup its own closure gives.
pub fn check_closure_idempotent(set: &ElementSet) -> Result<CheckOutcome> {
    let closed = crate::group::generated_subgroup(set)?;
    Ok(CheckOutcome::from_bool(
        "subgroup_closure_idempotent",
        crate::group::generated_subgroup(&closed)? == closed && set.group().order().is_multiple_of(closed.len()),
        format!("closure of size {}", closed.len()),
    ))
}
