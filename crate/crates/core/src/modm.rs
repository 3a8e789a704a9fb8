//! Dynamics of `p^[n](t)` in the group algebra of `Z_m`.
//!
//! Working modulo `t^m - 1`, the iterates of `t` live on the simplex of
//! `Z_m`. The shifts `r^n` cycle through residues mod `m`, and the offsets of
//! `p_0` generate a subgroup `G` of `Z_m`; together they decide whether the
//! iterates converge and give every limit in closed form.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::algebra::{AlgebraElement, ApproxElement, SimplexPoint};
use crate::error::{Error, Result};
use crate::group::{ElementSet, FiniteGroup, GroupRef};
use crate::oracle;
use crate::profile::{AccumulationSet, LimitPoint};
use crate::rational::Q;
use crate::series::{extinction_value, Extinction, ProbPoly, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Eventual cycle of `r^n mod m` for `n >= 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueCycle {
    pub modulus: usize,
    pub base: usize,
    /// Number of terms before the cycle starts.
    pub preperiod: usize,
    /// `r^(preperiod + 1 + k d + i) ≡ residues[i] (mod m)`.
    pub residues: Vec<usize>,
}

impl ResidueCycle {
    pub fn period(&self) -> usize {
        self.residues.len()
    }

    /// Index into `residues` for the `n`-th term, once the cycle is entered.
    pub fn phase_of(&self, n: usize) -> Option<usize> {
        (n > self.preperiod).then(|| (n - self.preperiod - 1) % self.period())
    }

    /// `r^n mod m`.
    pub fn term(&self, n: usize) -> usize {
        pow_mod(self.base, n, self.modulus)
    }
}

pub(crate) fn pow_mod(base: usize, exp: usize, modulus: usize) -> usize {
    let m = modulus as u128;
    let mut result = 1 % m;
    let mut b = base as u128 % m;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    result as usize
}

pub fn residue_cycle(r: usize, m: usize) -> Result<ResidueCycle> {
    if m == 0 {
        return Err(Error::InvalidArgument("modulus must be positive".into()));
    }
    let mut first_seen: HashMap<usize, usize> = HashMap::new();
    let mut values = Vec::new();
    let mut v = r % m;
    for n in 1..=m + 1 {
        if let Some(&start) = first_seen.get(&v) {
            return Ok(ResidueCycle {
                modulus: m,
                base: r,
                preperiod: start - 1,
                residues: values[start - 1..].to_vec(),
            });
        }
        first_seen.insert(v, n);
        values.push(v);
        v = v * (r % m) % m;
    }
    Err(Error::Internal(format!("no cycle of {r}^n mod {m} within {} terms", m + 1)))
}

/// Subgroup of `Z_m` generated by the offsets of `p_0`: the multiples of
/// `gcd(q_1, .., q_{l-1}, m)`.
pub fn series_group(p: &ProbPoly, m: usize) -> Result<ElementSet> {
    let group = FiniteGroup::cyclic(m)?;
    series_group_in(p, &group)
}

fn series_group_in(p: &ProbPoly, group: &GroupRef) -> Result<ElementSet> {
    if p.is_pure_power() {
        return Err(Error::PurePower(p.shift()));
    }
    let m = group.order();
    let step = p.offsets().iter().fold(m, |g, &q| g.gcd(&(q % m)));
    ElementSet::new(group, (0..m).step_by(step.max(1)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModMReport {
    pub m: usize,
    pub group: GroupRef,
    pub series_group: ElementSet,
    pub cycle: ResidueCycle,
    pub exists: bool,
    pub limit: Option<LimitPoint>,
    /// The `d` subsequential limits; `points[i]` is approached along the
    /// iterations `n` with `cycle.phase_of(n) == Some(i)`.
    pub accumulation: AccumulationSet,
    pub cesaro: LimitPoint,
    pub extinction: Extinction,
}

impl ModMReport {
    /// Coefficients of the regular limit as floats, when it exists.
    pub fn limit_coeffs(&self) -> Option<Vec<f64>> {
        self.limit.as_ref().map(|l| l.to_approx().coeffs().to_vec())
    }

    pub fn accumulation_points(&self) -> &[LimitPoint] {
        match &self.accumulation {
            AccumulationSet::ClosedForm(points) => points,
            AccumulationSet::Empirical(_) => unreachable!("closed form by construction"),
        }
    }
}

/// `δ_s c_G + (e - c_G) a`.
fn shifted_point(group: &GroupRef, s: usize, c: &SimplexPoint, slope: &AlgebraElement, ext: &Extinction) -> Result<LimitPoint> {
    let base = SimplexPoint::point_mass(group, s).multiply(c)?;
    Ok(LimitPoint::new(base.into_element(), slope.clone(), ext.value, ext.exact.clone()))
}

pub fn regularity_mod_m(p: &ProbPoly, m: usize) -> Result<ModMReport> {
    regularity_mod_m_with(p, m, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

pub fn regularity_mod_m_with(p: &ProbPoly, m: usize, tol: f64, max_iter: usize) -> Result<ModMReport> {
    let group = FiniteGroup::cyclic(m)?;
    let sub = series_group_in(p, &group)?;
    let cycle = residue_cycle(p.shift(), m)?;
    let extinction = extinction_value(p, tol, max_iter)?;
    let c = SimplexPoint::uniform_on(&sub)?;
    let slope = AlgebraElement::identity(&group).sub(c.as_element())?;

    // cosets of one subgroup are equal or disjoint
    let step = sub.members().get(1).copied().unwrap_or(m);
    let exists = cycle.residues.iter().all(|&s| s % step == cycle.residues[0] % step);

    let points = cycle
        .residues
        .iter()
        .map(|&s| shifted_point(&group, s, &c, &slope, &extinction))
        .collect::<Result<Vec<_>>>()?;

    let d = Q::new(BigInt::one(), BigInt::from(cycle.period()));
    let mut mean = AlgebraElement::zero(&group);
    for pt in &points {
        mean = mean.add(&pt.base.scale(&d))?;
    }
    let cesaro = LimitPoint::new(mean, slope, extinction.value, extinction.exact.clone());

    Ok(ModMReport {
        m,
        series_group: sub,
        cycle,
        exists,
        limit: exists.then(|| points[0].clone()),
        accumulation: AccumulationSet::ClosedForm(points),
        cesaro,
        extinction,
        group,
    })
}

/// The ergodic (Cesàro) limit of `p^[n](t)` in `Z_m`.
pub fn cesaro_mod_m(p: &ProbPoly, m: usize) -> Result<LimitPoint> {
    Ok(regularity_mod_m(p, m)?.cesaro)
}

/// Float trace `p(δ_t), p(p(δ_t)), ..` over `Z_m`.
pub fn iterate_mod_m(p: &ProbPoly, m: usize, n: usize) -> Result<Vec<ApproxElement>> {
    let group = FiniteGroup::cyclic(m)?;
    let start = SimplexPoint::point_mass(&group, 1 % m);
    oracle::iterate_map(p, &start, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::generated_subgroup;
    use crate::rational::q;

    fn shifted_series() -> ProbPoly {
        ProbPoly::new([(3, q(1, 2)), (7, q(1, 2))]).unwrap()
    }

    #[test]
    fn residue_cycles_of_small_moduli() {
        let c = residue_cycle(3, 12).unwrap();
        assert_eq!((c.preperiod, c.residues.clone()), (0, vec![3, 9]));
        let c = residue_cycle(3, 10).unwrap();
        assert_eq!((c.preperiod, c.residues.clone()), (0, vec![3, 9, 7, 1]));
        let c = residue_cycle(2, 12).unwrap();
        assert_eq!((c.preperiod, c.residues.clone()), (1, vec![4, 8]));
        assert_eq!(residue_cycle(5, 1).unwrap().residues, vec![0]);
        assert_eq!(residue_cycle(0, 7).unwrap().residues, vec![0]);
    }

    #[test]
    fn residue_cycle_indexing_matches_powers() {
        for m in 1..30 {
            for r in 0..15 {
                let c = residue_cycle(r, m).unwrap();
                for n in 1..4 * m + 4 {
                    if let Some(i) = c.phase_of(n) {
                        assert_eq!(c.residues[i], c.term(n), "r={r} m={m} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn series_groups_of_small_moduli() {
        let p = shifted_series();
        assert_eq!(series_group(&p, 12).unwrap().members(), &[0, 4, 8]);
        assert_eq!(series_group(&p, 10).unwrap().members(), &[0, 2, 4, 6, 8]);
        let full = ProbPoly::new([(0, q(1, 3)), (1, q(2, 3))]).unwrap();
        assert_eq!(series_group(&full, 9).unwrap().len(), 9);
        assert_eq!(series_group(&ProbPoly::pure_power(3), 4), Err(Error::PurePower(3)));
    }

    #[test]
    fn series_group_matches_subgroup_closure() {
        let p = ProbPoly::new([(2, q(1, 4)), (8, q(1, 4)), (11, q(1, 2))]).unwrap();
        for m in 1..=24 {
            let g = FiniteGroup::cyclic(m).unwrap();
            let seeds: Vec<usize> = p.offsets().iter().map(|q| q % m).filter(|&q| q != 0).collect();
            let expected = if seeds.is_empty() {
                ElementSet::new(&g, [0]).unwrap()
            } else {
                generated_subgroup(&ElementSet::new(&g, seeds).unwrap()).unwrap()
            };
            assert_eq!(series_group(&p, m).unwrap().members(), expected.members());
        }
    }

    #[test]
    fn twelve_has_no_limit() {
        let rep = regularity_mod_m(&shifted_series(), 12).unwrap();
        assert!(!rep.exists);
        assert_eq!(rep.accumulation.len(), 2);
        assert!(rep.limit.is_none());
        let cesaro = rep.cesaro.to_exact().unwrap();
        let odd: Vec<Q> = (0..12).map(|k| if k % 2 == 1 { q(1, 6) } else { q(0, 1) }).collect();
        assert_eq!(cesaro.coeffs(), odd.as_slice());
    }

    #[test]
    fn ten_has_uniform_odd_limit() {
        let rep = regularity_mod_m(&shifted_series(), 10).unwrap();
        assert!(rep.exists);
        let limit = rep.limit.unwrap().to_exact().unwrap();
        let odd: Vec<Q> = (0..10).map(|k| if k % 2 == 1 { q(1, 5) } else { q(0, 1) }).collect();
        assert_eq!(limit.coeffs(), odd.as_slice());
        assert_eq!(rep.cesaro.to_exact().unwrap(), limit);
        let trace = iterate_mod_m(&shifted_series(), 10, 300).unwrap();
        assert!(trace.last().unwrap().sup_distance(&limit.to_approx()).unwrap() <= 1e-9);
    }

    #[test]
    fn trivial_modulus() {
        let p = ProbPoly::new([(0, q(1, 2)), (2, q(1, 2))]).unwrap();
        let rep = regularity_mod_m(&p, 1).unwrap();
        assert!(rep.exists);
        assert_eq!(rep.limit.unwrap().to_approx().coeffs(), &[1.0]);
        assert_eq!(cesaro_mod_m(&p, 1).unwrap().to_approx().coeffs(), &[1.0]);
    }

    #[test]
    fn first_iterate_over_z10() {
        let y = &iterate_mod_m(&shifted_series(), 10, 1).unwrap()[0];
        assert_eq!(y.coeffs()[3], 0.5);
        assert_eq!(y.coeffs()[7], 0.5);
    }
}
