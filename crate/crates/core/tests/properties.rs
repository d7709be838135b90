use proptest::prelude::*;

use persuade_core::convex_solver::{solve_lp, solve_qp, LinearProgram, LpOutcome, QuadraticProgram};
use persuade_core::ellipsoid::{feasibility_search, polytope_oracle, EllipsoidConfig, SearchOutcome};
use persuade_core::harness::{generate_instance, Family, InstanceSpec};
use persuade_core::matroid_sep::{exact_sep_oracle, f_lambda_of_set, greedy_sep_oracle, GroundElement, SepQuery};
use persuade_core::model::{
    activated_set, all_signal_profiles, all_type_profiles, is_persuasive, sender_utility, validate_instance,
    Instance, SignalProfile, SignalingScheme, TypeProfile,
};
use persuade_core::persuasion_opt::{exact_offline_solve, RewardVector};

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Coverage), Just(Family::ConcaveCardinality), Just(Family::Table)]
}

fn small_instance() -> impl Strategy<Value = Instance> {
    (family(), 1usize..=3, 1usize..=2, 1usize..=2, any::<u64>()).prop_map(|(family, n, m, d, seed)| {
        generate_instance(&InstanceSpec { family, n, m, d }, seed).unwrap()
    })
}

fn profile_elements(s: &SignalProfile) -> Vec<GroundElement> {
    s.0.iter().enumerate().map(|(receiver, &signal)| GroundElement { receiver, signal }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_is_deterministic_and_valid(family in family(), n in 1usize..=4, m in 1usize..=3, d in 1usize..=3, seed: u64) {
        let spec = InstanceSpec { family, n, m, d };
        let a = generate_instance(&spec, seed).unwrap();
        let b = generate_instance(&spec, seed).unwrap();
        prop_assert_eq!(a.data(), b.data());
        prop_assert!(validate_instance(a.data()).is_ok());
        prop_assert!(a.all_submodular());
    }

    #[test]
    fn activated_set_grows_with_signals(inst in small_instance(), pick: u64) {
        let profiles = all_signal_profiles(&inst);
        let types = all_type_profiles(&inst);
        let k = &types[pick as usize % types.len()];
        let s = &profiles[(pick >> 8) as usize % profiles.len()];
        let full = SignalProfile::full(&inst);
        prop_assert!(activated_set(s, k).is_subset_of(activated_set(&full, k)));
        prop_assert!(activated_set(&SignalProfile::empty(inst.num_receivers()), k).is_empty());
    }

    #[test]
    fn optimal_schemes_are_persuasive_and_mix(inst in small_instance(), l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, beta in 0.0f64..=1.0) {
        let k = all_type_profiles(&inst);
        let a = exact_offline_solve(&inst, &k, &vec![l1; k.len()]).unwrap().scheme;
        let lambda: Vec<f64> = (0..k.len()).map(|i| if i % 2 == 0 { l2 } else { 1.0 - l2 }).collect();
        let b = exact_offline_solve(&inst, &k, &lambda).unwrap().scheme;
        prop_assert!(is_persuasive(&inst, &a, 1e-7));
        prop_assert!(is_persuasive(&inst, &b, 1e-7));
        let mixed = a.mix(&b, beta);
        prop_assert!(is_persuasive(&inst, &mixed, 1e-7));
        for kk in &k {
            let lin = beta * sender_utility(&inst, &a, kk) + (1.0 - beta) * sender_utility(&inst, &b, kk);
            prop_assert!((sender_utility(&inst, &mixed, kk) - lin).abs() < 1e-9);
        }
    }

    #[test]
    fn always_empty_is_worthless(inst in small_instance()) {
        let phi = SignalingScheme::always_empty(&inst);
        prop_assert!(is_persuasive(&inst, &phi, 0.0));
        for k in all_type_profiles(&inst) {
            prop_assert!(sender_utility(&inst, &phi, &k).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_never_beats_exact(inst in small_instance(), seed: u64, scale in 0.1f64..3.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = all_type_profiles(&inst);
        let lambda: Vec<f64> = k.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let weights: Vec<Vec<f64>> = (0..inst.num_receivers())
            .map(|r| (0..1usize << inst.num_types(r)).map(|s| if s == 0 { 0.0 } else { scale * rng.gen_range(-1.0..0.5) }).collect())
            .collect();
        for state in 0..inst.num_states() {
            let q = SepQuery { state, profiles: &k, lambda: &lambda, weights: &weights, eps: 0.0 };
            let exact = exact_sep_oracle(&inst, &q).unwrap();
            let greedy = greedy_sep_oracle(&inst, &q).unwrap();
            prop_assert!(greedy.value <= exact.value + 1e-9);
            let recomputed = f_lambda_of_set(&inst, &q, &profile_elements(&exact.profile))
                + exact.profile.0.iter().enumerate().map(|(r, &s)| weights[r][s as usize]).sum::<f64>();
            prop_assert!((recomputed - exact.value).abs() < 1e-9);
        }
    }

    #[test]
    fn reward_vector_restriction(vals in proptest::collection::vec(0.0f64..2.0, 1..5), keep in 0usize..5) {
        let support: Vec<TypeProfile> = (0..vals.len()).map(|i| TypeProfile(vec![i])).collect();
        let y = RewardVector::new(support.clone(), vals.clone()).unwrap();
        let mut sub: Vec<TypeProfile> = support.iter().take(keep).cloned().collect();
        sub.push(TypeProfile(vec![99]));
        let r = y.restrict_to(&sub);
        for k in &sub {
            prop_assert_eq!(r.get(k), y.get(k));
        }
        prop_assert_eq!(r.get(&TypeProfile(vec![99])), 0.0);
        let z = RewardVector::zeros(support);
        prop_assert!((y.dist_sq(&z) - vals.iter().map(|v| v * v).sum::<f64>()).abs() < 1e-12);
        prop_assert!((y.dist_sq(&z) - z.dist_sq(&y)).abs() < 1e-12);
    }

    #[test]
    fn lp_optimum_is_feasible_and_dominates(
        rows in proptest::collection::vec((proptest::collection::vec(-1.0f64..1.0, 3), 0.1f64..2.0), 1..6),
        c in proptest::collection::vec(-1.0f64..1.0, 3),
        probes in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 8),
    ) {
        let mut lp = LinearProgram::new(3);
        lp.objective = c.clone();
        lp.bounds = vec![(0.0, 1.0); 3];
        for (a, b) in &rows {
            lp.add_le(a.clone(), *b);
        }
        let sol = match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal(s) => s,
            other => return Err(TestCaseError::fail(format!("origin is feasible, got {other:?}"))),
        };
        prop_assert!(lp.max_violation(&sol.x) < 1e-7);
        prop_assert!(sol.le_duals.iter().all(|&y| y >= -1e-9));
        for p in probes.iter().filter(|p| lp.max_violation(p) <= 0.0) {
            prop_assert!(lp.objective_value(p) <= sol.value + 1e-7);
        }
    }

    #[test]
    fn box_projection_clamps(target in proptest::collection::vec(-2.0f64..3.0, 1..5)) {
        let n = target.len();
        let mut lp = LinearProgram::new(n);
        lp.bounds = vec![(0.0, 1.0); n];
        let coords: Vec<usize> = (0..n).collect();
        let sol = solve_qp(&QuadraticProgram::projection(lp, &coords, &target)).unwrap();
        for (x, y) in sol.x.iter().zip(&target) {
            prop_assert!((x - y.clamp(0.0, 1.0)).abs() < 1e-4, "{x} vs clamp({y})");
        }
    }

    #[test]
    fn ellipsoid_finds_points_in_fat_simplex(w in proptest::collection::vec(0.2f64..1.0, 2..4)) {
        // x ≥ 0, Σ w_i x_i ≤ 1 contains a ball of radius well above the tolerance
        let n = w.len();
        let mut rows: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|i| {
                let mut a = vec![0.0; n];
                a[i] = -1.0;
                (a, 0.0)
            })
            .collect();
        rows.push((w.clone(), 1.0));
        let bounds = vec![(-1.0, 6.0); n];
        let out = feasibility_search(&bounds, polytope_oracle(&rows, 0.0), &EllipsoidConfig::default()).unwrap();
        match out {
            SearchOutcome::Feasible { point, cuts, .. } => {
                for (a, b) in &rows {
                    prop_assert!(a.iter().zip(&point).map(|(a, x)| a * x).sum::<f64>() <= b + 1e-12);
                }
                for cut in &cuts {
                    prop_assert!(cut.normal.iter().zip(&point).map(|(a, x)| a * x).sum::<f64>() <= cut.offset + 1e-12);
                }
            }
            SearchOutcome::Infeasible { .. } => prop_assert!(false, "simplex reported empty"),
        }
    }

    #[test]
    fn ellipsoid_rejects_empty_polytope(gap in 0.01f64..1.0) {
        let rows = vec![(vec![1.0, 0.0], 0.0), (vec![-1.0, 0.0], -gap)];
        let out = feasibility_search(&[(-2.0, 2.0), (-2.0, 2.0)], polytope_oracle(&rows, 0.0), &EllipsoidConfig::default()).unwrap();
        prop_assert!(!out.is_feasible());
    }
}
