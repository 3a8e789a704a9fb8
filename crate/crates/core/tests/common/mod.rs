//! Instance generators and brute-force oracles shared by the integration
//! tests. Oracles here use only the Cayley table and plain loops.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use simplex_dynamics::group::{ElementSet, FiniteGroup, GroupRef};
use simplex_dynamics::series::ProbPoly;
use simplex_dynamics::SimplexPoint;

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `Z_2 .. Z_12`, the Klein four-group, `S_3` and `D_4`.
pub fn test_groups() -> Vec<GroupRef> {
    let mut out: Vec<GroupRef> = (2..=12).map(|n| FiniteGroup::cyclic(n).unwrap()).collect();
    let z2 = FiniteGroup::cyclic(2).unwrap();
    out.push(FiniteGroup::direct_product(&z2, &z2).unwrap());
    out.push(FiniteGroup::symmetric(3).unwrap());
    out.push(FiniteGroup::dihedral(4).unwrap());
    out
}

/// Random point with a random nonempty support of size at most `max_support`.
pub fn random_point<R: Rng>(g: &GroupRef, max_support: usize, rng: &mut R) -> SimplexPoint {
    let mut elems: Vec<usize> = (0..g.order()).collect();
    elems.shuffle(rng);
    let size = rng.gen_range(1..=max_support.min(g.order()).max(1));
    let support = ElementSet::new(g, elems[..size].iter().copied()).unwrap();
    SimplexPoint::random_on(&support, 9, rng).unwrap()
}

/// Random non-pure series of degree at most `max_degree`.
pub fn random_series<R: Rng>(max_degree: usize, rng: &mut R) -> ProbPoly {
    let mut exps: Vec<usize> = (0..=max_degree).collect();
    exps.shuffle(rng);
    let count = rng.gen_range(2..=exps.len().min(5));
    let weights: Vec<i64> = (0..count).map(|_| rng.gen_range(1..=9)).collect();
    let total: i64 = weights.iter().sum();
    ProbPoly::new(exps[..count].iter().zip(&weights).map(|(&k, &w)| (k, q(w, total)))).unwrap()
}

/// Random series whose minimal exponent is at least `min_shift`.
pub fn random_shifted_series<R: Rng>(min_shift: usize, max_degree: usize, rng: &mut R) -> ProbPoly {
    loop {
        let p = random_series(max_degree - min_shift, rng);
        let shift = rng.gen_range(min_shift..=max_degree - p.degree());
        let shifted = ProbPoly::new(p.terms().iter().map(|(k, c)| (k + shift, c.clone()))).unwrap();
        if shifted.shift() >= min_shift {
            return shifted;
        }
    }
}

pub fn is_critical(p: &ProbPoly) -> bool {
    !p.constant_term().is_zero() && p.mean().is_one()
}

/// Naive float convolution straight from the multiplication table.
pub fn convolve(g: &FiniteGroup, x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = g.order();
    let mut out = vec![0.0; n];
    for h in 0..n {
        for k in 0..n {
            out[g.mul(h, k)] += x[h] * y[k];
        }
    }
    out
}

/// `p(y) = Σ a_k y^k` with every power formed by repeated convolution.
pub fn apply_series_naive(g: &FiniteGroup, p: &ProbPoly, y: &[f64]) -> Vec<f64> {
    let n = g.order();
    let mut power = vec![0.0; n];
    power[g.identity()] = 1.0;
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (exp, c) in p.terms() {
        while k < *exp {
            power = convolve(g, &power, y);
            k += 1;
        }
        let c = c.to_f64().unwrap();
        out.iter_mut().zip(&power).for_each(|(o, v)| *o += c * v);
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Float trace `p^[1](x) .. p^[n](x)` computed by the naive oracle.
pub fn naive_trace(p: &ProbPoly, x: &SimplexPoint, n: usize) -> Vec<Vec<f64>> {
    let g = x.group();
    let mut y: Vec<f64> = x.coeffs().iter().map(|c| c.to_f64().unwrap()).collect();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        y = apply_series_naive(g, p, &y);
        out.push(y.clone());
    }
    out
}

pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

pub fn to_floats(x: &SimplexPoint) -> Vec<f64> {
    x.coeffs().iter().map(|c| c.to_f64().unwrap()).collect()
}

/// Exact powers `x^1 .. x^k` by repeated exact convolution.
pub fn exact_powers(x: &SimplexPoint, k: usize) -> Vec<Vec<Q>> {
    let g = x.group();
    let n = g.order();
    let mut out = Vec::with_capacity(k);
    let mut cur: Vec<Q> = x.coeffs().to_vec();
    for _ in 0..k {
        out.push(cur.clone());
        let mut next = vec![Q::zero(); n];
        for h in 0..n {
            if cur[h].is_zero() {
                continue;
            }
            for j in 0..n {
                if !x.coeffs()[j].is_zero() {
                    next[g.mul(h, j)] += &cur[h] * &x.coeffs()[j];
                }
            }
        }
        cur = next;
    }
    out
}

/// Subgroup generated by `seed` as the fixed point of `S -> S ∪ S·S ∪ {e}`.
pub fn closure_fixpoint(g: &FiniteGroup, seed: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.order()];
    inside[g.identity()] = true;
    for &s in seed {
        inside[s] = true;
    }
    loop {
        let members: Vec<usize> = (0..g.order()).filter(|&i| inside[i]).collect();
        let mut grew = false;
        for &a in &members {
            for &b in &members {
                let c = g.mul(a, b);
                if !inside[c] {
                    inside[c] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            return (0..g.order()).filter(|&i| inside[i]).collect();
        }
    }
}

/// `(return time, period, subgroup)` from exact powers and the fixpoint
/// closure.
pub fn profile_oracle(x: &SimplexPoint) -> (usize, usize, Vec<usize>) {
    let g = x.group();
    let powers = exact_powers(x, g.order());
    let supp = |v: &Vec<Q>| -> Vec<usize> { (0..v.len()).filter(|&i| !v[i].is_zero()).collect() };
    let n = (0..powers.len())
        .find(|&k| !powers[k][g.identity()].is_zero())
        .expect("identity reached")
        + 1;
    let sub = closure_fixpoint(g, &supp(&powers[n - 1]));
    let m = (0..n)
        .find(|&k| supp(&powers[k]).iter().all(|e| sub.contains(e)))
        .unwrap()
        + 1;
    (n, m, sub)
}

/// Exact coefficients of `p(p(..p(t)..))` (`n` applications) up to degree
/// `max_degree`; products drop higher powers, which never feed lower ones.
pub fn exact_iterate(p: &ProbPoly, n: usize, max_degree: usize) -> Vec<Q> {
    let base: Vec<Q> = {
        let mut v = vec![Q::zero(); p.degree() + 1];
        for (k, c) in p.terms() {
            v[*k] = c.clone();
        }
        v
    };
    let mul = |a: &[Q], b: &[Q]| -> Vec<Q> {
        let mut out = vec![Q::zero(); (a.len() + b.len() - 1).min(max_degree + 1)];
        for (i, x) in a.iter().enumerate().take(max_degree + 1) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(max_degree + 1 - i) {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut cur = base;
    cur.truncate(max_degree + 1);
    for _ in 1..n {
        // p(cur) = Σ c_k cur^k
        let mut acc = vec![Q::zero()];
        let mut power = vec![Q::one()];
        let mut k = 0;
        for (exp, c) in p.terms() {
            while k < *exp {
                power = mul(&power, &cur);
                k += 1;
            }
            if acc.len() < power.len() {
                acc.resize(power.len(), Q::zero());
            }
            for (a, v) in acc.iter_mut().zip(&power) {
                *a += c * v;
            }
        }
        cur = acc;
    }
    cur
}
