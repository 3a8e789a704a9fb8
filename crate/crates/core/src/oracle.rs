//! Brute-force float iteration of a series map on the simplex.

use crate::algebra::{convolve_into, ApproxElement, SimplexPoint};
use crate::error::{Error, Result};
use crate::rational;
use crate::series::ProbPoly;

/// `p(y) = Σ a_k y^k` by Horner's rule, renormalized onto the simplex.
///
/// The weight of `p(y)` equals `p(weight(y))`, which amplifies rounding when
/// `p'(1) > 1`; renormalizing each application keeps long traces bounded.
/// The correction applied is added to the slack.
pub fn apply_series(p: &ProbPoly, y: &ApproxElement) -> ApproxElement {
    let group = y.group();
    let n = group.order();
    let e = group.identity();
    let mut acc = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut exp = p.degree();
    let mut started = false;
    for (k, c) in p.terms().iter().rev() {
        while exp > *k {
            if started {
                convolve_into(group, y.coeffs(), &acc, &mut scratch);
                std::mem::swap(&mut acc, &mut scratch);
            }
            exp -= 1;
        }
        acc[e] += rational::to_f64(c);
        started = true;
    }
    for _ in 0..exp {
        convolve_into(group, y.coeffs(), &acc, &mut scratch);
        std::mem::swap(&mut acc, &mut scratch);
    }
    let mut out = ApproxElement::new(group, acc, y.slack()).expect("length matches");
    out.renormalize();
    out
}

/// Streams `p^[1](x), p^[2](x), ...` in floating point.
pub struct MapIter<'a> {
    p: &'a ProbPoly,
    current: ApproxElement,
}

impl Iterator for MapIter<'_> {
    type Item = ApproxElement;

    fn next(&mut self) -> Option<ApproxElement> {
        self.current = apply_series(self.p, &self.current);
        Some(self.current.clone())
    }
}

pub fn map_iter<'a>(p: &'a ProbPoly, x: &SimplexPoint) -> MapIter<'a> {
    MapIter {
        p,
        current: x.to_approx(),
    }
}

/// The trace `p^[1](x) .. p^[n](x)`.
pub fn iterate_map(p: &ProbPoly, x: &SimplexPoint, n: usize) -> Result<Vec<ApproxElement>> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one iterate is required".into()));
    }
    Ok(map_iter(p, x).take(n).collect())
}

/// Running average `(1/n) Σ_{i<=n} p^[i](x)`, accumulated without storing
/// the trace.
pub fn empirical_cesaro(p: &ProbPoly, x: &SimplexPoint, n: usize) -> Result<ApproxElement> {
    Ok(empirical_cesaro_checkpoints(p, x, &[n])?.remove(0))
}

/// Running averages at each requested horizon (sorted ascending).
pub fn empirical_cesaro_checkpoints(
    p: &ProbPoly,
    x: &SimplexPoint,
    horizons: &[usize],
) -> Result<Vec<ApproxElement>> {
    let last = *horizons
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no horizons".into()))?;
    if horizons.contains(&0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let group = x.group();
    let mut sums = vec![0.0; group.order()];
    let mut slack: f64 = 0.0;
    let mut out = Vec::with_capacity(horizons.len());
    for (i, y) in map_iter(p, x).take(last).enumerate() {
        sums.iter_mut().zip(y.coeffs()).for_each(|(s, c)| *s += c);
        slack = slack.max(y.slack());
        let k = i + 1;
        if horizons.contains(&k) {
            let coeffs = sums.iter().map(|s| s / k as f64).collect();
            out.push(ApproxElement::new(group, coeffs, slack + k as f64 * f64::EPSILON)?);
        }
    }
    Ok(out)
}
