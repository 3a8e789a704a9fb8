mod common;

use common::*;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use simplex_dynamics::group::{generated_subgroup, ElementSet, FiniteGroup};
use simplex_dynamics::modm::{iterate_mod_m, regularity_mod_m, series_group};
use simplex_dynamics::predictor::{analyze, phase_tails, pure_power_report};
use simplex_dynamics::profile::{limit_set, profile, reduce};
use simplex_dynamics::series::{cesaro_coeffs, compose, composition_sum_check, iterate_coeffs, recursion_coeffs};
use simplex_dynamics::verify::{self, Status};
use simplex_dynamics::SimplexPoint;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn group(idx: usize) -> simplex_dynamics::GroupRef {
    let groups = test_groups();
    groups[idx % groups.len()].clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructed_groups_validate(n in 1usize..=9, m in 1usize..=4) {
        let z = FiniteGroup::cyclic(n).unwrap();
        let d = FiniteGroup::dihedral(n).unwrap();
        let s = FiniteGroup::symmetric(m).unwrap();
        let prod = FiniteGroup::direct_product(&z, &s).unwrap();
        for g in [&z, &d, &s, &prod] {
            prop_assert!(g.validate().is_ok());
        }
    }

    #[test]
    fn subgroup_closure_is_idempotent_and_divides(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let h = generated_subgroup(&x.support()).unwrap();
        prop_assert_eq!(generated_subgroup(&h).unwrap(), h.clone());
        prop_assert_eq!(g.order() % h.len(), 0);
        prop_assert_eq!(h.members().to_vec(), closure_fixpoint(&g, x.support().members()));
    }

    #[test]
    fn products_stay_on_the_simplex_and_associate(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let (x, y, z) = (random_point(&g, 4, &mut r), random_point(&g, 4, &mut r), random_point(&g, 4, &mut r));
        let xy = x.multiply(&y).unwrap();
        prop_assert!(xy.as_element().is_nonnegative());
        prop_assert!(xy.as_element().weight().is_one());
        prop_assert_eq!(xy.multiply(&z).unwrap(), x.multiply(&y.multiply(&z).unwrap()).unwrap());
    }

    #[test]
    fn weight_is_multiplicative(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let x = random_point(&g, 5, &mut r).as_element().scale(&q(3, 2));
        let y = random_point(&g, 5, &mut r).as_element().scale(&q(2, 7));
        prop_assert_eq!(x.multiply(&y).unwrap().weight(), x.weight() * y.weight());
    }

    #[test]
    fn support_laws_hold(gi in 0usize..14, seed in any::<u64>(), with_identity in any::<bool>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let mut y = random_point(&g, 4, &mut r);
        let mut z = random_point(&g, 4, &mut r);
        if with_identity {
            let e = SimplexPoint::identity(&g);
            y = SimplexPoint::convex_combination(&[(q(1, 2), &y), (q(1, 2), &e)]).unwrap();
            z = SimplexPoint::convex_combination(&[(q(1, 3), &z), (q(2, 3), &e)]).unwrap();
        }
        let outcome = verify::check_support_laws(&y, &z).unwrap();
        prop_assert_eq!(outcome.status, Status::Pass, "{:?}", outcome);
    }

    #[test]
    fn profile_matches_oracle(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let prof = profile(&x).unwrap();
        let (n, m, sub) = profile_oracle(&x);
        prop_assert_eq!((prof.return_time, prof.period), (n, m));
        prop_assert_eq!(prof.subgroup.members().to_vec(), sub);
        prop_assert!(prof.check_invariants().is_ok());
        prop_assert!(prof.idempotent.multiply(&x).unwrap() == x.multiply(&prof.idempotent).unwrap());
    }

    #[test]
    fn point_level_laws(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let prof = profile(&x).unwrap();
        for outcome in [
            verify::check_power_independence(&x, &prof),
            verify::check_residue_equivalence(&x, &prof).unwrap(),
            verify::check_interior_power_criterion(&x, &prof).unwrap(),
            verify::check_reduction_inequalities(&x, &prof).unwrap(),
            verify::check_singleton_criterion(&x, &prof).unwrap(),
        ] {
            prop_assert_eq!(outcome.status, Status::Pass, "{:?}", outcome);
        }
    }

    #[test]
    fn reduced_point_is_stable(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let (y, _) = simplex_dynamics::profile::reduce_to_stable(&x).unwrap();
        let py = profile(&y).unwrap();
        prop_assert_eq!(profile(&y.multiply(&py.idempotent).unwrap()).unwrap().return_time, py.return_time);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn limit_set_matches_float_clusters(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let prof = profile(&x).unwrap();
        let outcome = verify::check_limit_set_oracle(&x, &prof, 200, 600, 1e-9, 3).unwrap();
        prop_assert_eq!(outcome.status, Status::Pass, "{:?}", outcome);
    }

    #[test]
    fn recursion_equals_composition(seed in any::<u64>()) {
        let p = random_series(5, &mut rng(seed));
        let k_max = 8.max(p.degree());
        let mut state = iterate_coeffs::<Q>(&p, 1, k_max).unwrap().remove(0);
        for n in 1..=3 {
            let next = compose(&p, &state).unwrap();
            let full = exact_iterate(&p, n + 1, 8);
            for k in 0..=8 {
                let expected = full.get(k).cloned().unwrap_or_else(Q::zero);
                prop_assert_eq!(&next.coeffs[k], &expected);
                prop_assert_eq!(recursion_coeffs(&p, &state, k).unwrap(), expected);
            }
            state = next;
        }
    }

    #[test]
    fn exact_mass_is_conserved(seed in any::<u64>()) {
        let p = random_series(4, &mut rng(seed));
        for s in iterate_coeffs::<Q>(&p, 3, 12).unwrap() {
            let kept = s.coeffs.iter().fold(Q::zero(), |a, c| a + c);
            prop_assert!((kept + s.tail_mass.clone()).is_one());
            prop_assert!(s.coeffs.iter().all(|c| *c >= Q::zero()));
        }
    }

    #[test]
    fn constant_term_and_its_average_never_decrease(seed in any::<u64>()) {
        let p = random_series(6, &mut rng(seed));
        let states = iterate_coeffs::<f64>(&p, 300, 64.max(p.degree())).unwrap();
        for w in states.windows(2) {
            prop_assert!(w[1].a0() >= w[0].a0());
            let kept: f64 = w[1].coeffs.iter().sum();
            prop_assert!((kept + w[1].tail_mass - 1.0).abs() <= 1e-12);
        }
        let avg = cesaro_coeffs(&states).unwrap();
        for w in avg.windows(2) {
            prop_assert!(w[1].a0() >= w[0].a0());
        }
    }

    #[test]
    fn composition_sums_are_bounded(seed in any::<u64>(), len in 1usize..10) {
        let mut r = rng(seed);
        let weights: Vec<i64> = (0..len).map(|_| rand::Rng::gen_range(&mut r, 0..=6)).collect();
        let total: i64 = weights.iter().sum::<i64>().max(1);
        let mut a: Vec<Q> = weights.iter().map(|&w| q(w, total)).collect();
        if weights.iter().all(|&w| w == 0) {
            a[0] = Q::one();
        }
        for k in 1..=8 {
            for i in 1..=k {
                let (lhs, rhs, sup) = composition_sum_check(&a, k, i).unwrap();
                prop_assert!(lhs <= sup);
                if i >= 2 {
                    prop_assert!(lhs <= rhs);
                }
            }
        }
    }

    #[test]
    fn coset_criterion_and_oracle(seed in any::<u64>(), m in 1usize..=24) {
        let mut r = rng(seed);
        let p = random_shifted_series(1, 12, &mut r);
        let rep = regularity_mod_m(&p, m).unwrap();
        // pairwise intersection of cosets, by enumeration
        let sub = series_group(&p, m).unwrap();
        let coset = |s: usize| -> Vec<usize> {
            let mut v: Vec<usize> = sub.members().iter().map(|g| (g + s) % m).collect();
            v.sort_unstable();
            v
        };
        let first = coset(rep.cycle.residues[0]);
        let common: Vec<usize> = first.iter().copied()
            .filter(|e| rep.cycle.residues.iter().all(|&s| coset(s).contains(e)))
            .collect();
        prop_assert_eq!(rep.exists, !common.is_empty());

        let seeds: Vec<usize> = p.offsets().iter().map(|q| q % m).filter(|&q| q != 0).collect();
        let zm = FiniteGroup::cyclic(m).unwrap();
        let expected = if seeds.is_empty() { vec![0] } else {
            generated_subgroup(&ElementSet::new(&zm, seeds).unwrap()).unwrap().members().to_vec()
        };
        prop_assert_eq!(sub.members().to_vec(), expected);

        if is_critical(&p) {
            return Ok(());
        }
        let trace = iterate_mod_m(&p, m, 500).unwrap();
        if rep.exists {
            let limit = rep.limit.as_ref().unwrap().to_approx();
            prop_assert!(trace.last().unwrap().sup_distance(&limit).unwrap() <= 1e-8);
        } else {
            let tails = phase_tails(&trace, &rep.cycle);
            for (tail, point) in tails.iter().zip(rep.accumulation_points()) {
                let d = tail.as_ref().unwrap().sup_distance(&point.to_approx()).unwrap();
                prop_assert!(d <= 1e-8, "{}", d);
            }
            let pts: Vec<_> = rep.accumulation_points().iter().map(|p| p.to_approx()).collect();
            let spread = pts.iter().flat_map(|a| pts.iter().map(move |b| a.sup_distance(b).unwrap())).fold(0.0, f64::max);
            prop_assert!(spread >= 1e-3);
        }
    }

    #[test]
    fn predictions_match_naive_iteration(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let x = random_point(&g, 3, &mut r);
        let p = random_series(6, &mut r);
        prop_assume!(!is_critical(&p));
        let rep = analyze(&p, &x).unwrap();
        let total: f64 = rep.scalar_limits.iter().flatten().sum();
        if rep.scalar_limits.is_some() {
            prop_assert!((total - 1.0).abs() <= 1e-10);
        }
        let trace = naive_trace(&p, &x, 500);
        let mut worst: f64 = 0.0;
        for n in 400..=500 {
            if let Some(pt) = rep.point_for_iteration(n) {
                worst = worst.max(sup_dist(&trace[n - 1], pt.to_approx().coeffs()));
            }
        }
        // a rate close to 1 may need a longer run; never accept a growing error
        if worst > 1e-7 {
            let longer = naive_trace(&p, &x, 4000);
            let pt = rep.point_for_iteration(4000).unwrap();
            let late = sup_dist(&longer[3999], pt.to_approx().coeffs());
            prop_assert!(late <= 1e-7, "error {} at 500, {} at 4000", worst, late);
        }
    }

    #[test]
    fn cesaro_limit_survives_reduction(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let x = random_point(&g, 3, &mut r);
        let p = random_series(6, &mut r);
        let a = analyze(&p, &x).unwrap().cesaro;
        let b = analyze(&p, &reduce(&x).unwrap()).unwrap().cesaro;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn point_masses_follow_quotient_dynamics(gi in 0usize..14, seed in any::<u64>()) {
        let g = group(gi);
        let mut r = rng(seed);
        let elem = rand::Rng::gen_range(&mut r, 0..g.order());
        let p = random_series(8, &mut r);
        let ord = g.element_order(elem);
        let rep = analyze(&p, &SimplexPoint::point_mass(&g, elem)).unwrap();
        let quotient = regularity_mod_m(&p, ord).unwrap();
        prop_assert_eq!(rep.exists, quotient.exists);
        for (lifted, base) in rep.accumulation_points().iter().zip(quotient.accumulation_points()) {
            let (lifted, base) = (lifted.to_approx(), base.to_approx());
            for k in 0..ord {
                let diff = (lifted.coeffs()[g.pow(elem, k)] - base.coeffs()[k]).abs();
                prop_assert!(diff <= 1e-15);
            }
        }
    }

    #[test]
    fn pure_power_singleton_matches_divisibility(gi in 0usize..14, seed in any::<u64>(), r in 2usize..=7) {
        let g = group(gi);
        let x = random_point(&g, 3, &mut rng(seed));
        let rep = pure_power_report(r, &x).unwrap();
        let m = rep.profile.period as u128;
        let divides = (1..=m as u32).any(|k| ((r as u128).pow(k) * (r as u128 - 1)).is_multiple_of(m));
        prop_assert_eq!(rep.exists, divides);
        prop_assert_eq!(rep.exists, rep.period() == 1);
        prop_assert_eq!(limit_set(&x).unwrap().len() >= rep.accumulation.len(), true);
    }
}
