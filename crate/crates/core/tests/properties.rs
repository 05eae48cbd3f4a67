mod common;

use fairfluid::dynamics::RETAINED;
use fairfluid::{
    audit, fairness_gap, grid_oracle, long_run_profit, make_belief_based, presence_weighted_static,
    sample, simulate, solve_fluid_opt, stability_populations, static_profit, steady_cycle,
    validate_instance, BeliefPolicyParams, Policy, PopulationState,
};
use proptest::prelude::*;
use rand::Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trajectories_stay_nonnegative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 5);
        let init: Vec<f64> = (0..inst.num_types()).map(|_| rng.gen_range(0.0..5.0)).collect();
        let traj = simulate(&inst, &policy, 60, &PopulationState::uniform(&init).unwrap()).unwrap();
        prop_assert!(traj.iter().flat_map(|s| s.masses().iter().flatten()).all(|m| *m >= 0.0));
    }

    #[test]
    fn simulation_settles_on_steady_cycle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 4);
        let Ok(profile) = steady_cycle(&inst, &policy) else { return Ok(()) };
        let tau = policy.period();
        // slowest per-type contraction over one cycle
        let slowest = (0..inst.num_types())
            .map(|i| (0..tau).map(|t| 1.0 - inst.departures().rate(i, policy.payouts(t)[0])).product::<f64>())
            .fold(0.0f64, f64::max);
        prop_assume!(slowest < 0.999);
        let periods = (30.0 * tau as f64 / (1.0 - slowest)).ceil() as usize;
        let periods = periods.div_ceil(tau) * tau;
        let init: Vec<f64> = (0..inst.num_types()).map(|_| rng.gen_range(0.0..10.0)).collect();
        let traj = simulate(&inst, &policy, periods, &PopulationState::uniform(&init).unwrap()).unwrap();
        let last = &traj[periods];
        for i in 0..inst.num_types() {
            let expected = profile.period_masses[0].masses()[i][0];
            prop_assert!(rel_close(last.masses()[i][0], expected, 1e-6), "{} vs {}", last.masses()[i][0], expected);
        }
    }

    #[test]
    fn static_cycle_matches_stability_constraint(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let x = sample::distribution(&mut rng, inst.num_rewards());
        let Ok(n) = stability_populations(&inst, &x) else { return Ok(()) };
        let profile = steady_cycle(&inst, &Policy::Static(x.clone())).unwrap();
        for (i, &expected) in n.iter().enumerate() {
            prop_assert!(rel_close(profile.period_masses[0].masses()[i][0], expected, 1e-12));
        }
        prop_assert!(rel_close(static_profit(&inst, &x).unwrap(), profile.avg_profit, 1e-12));
    }

    #[test]
    fn single_type_average_population_matches_weighted_static(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let rev = sample::revenue(&mut rng, 5.0);
        let inst = sample::single_type_instance(&mut rng, 4, rev);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 6);
        let Ok(profile) = steady_cycle(&inst, &policy) else { return Ok(()) };
        let xbar = presence_weighted_static(&inst, &policy).unwrap();
        let n = stability_populations(&inst, &xbar).unwrap();
        prop_assert!(rel_close(profile.avg_population, n[0], 1e-12));
    }

    #[test]
    fn stability_populations_are_simulation_limits(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 3);
        let x = sample::distribution(&mut rng, inst.num_rewards());
        let Ok(n) = stability_populations(&inst, &x) else { return Ok(()) };
        let slowest = (0..inst.num_types()).map(|i| inst.departures().rate(i, &x)).fold(1.0f64, f64::min);
        prop_assume!(slowest > 1e-3);
        let periods = (40.0 / slowest).ceil() as usize;
        let traj = simulate(&inst, &Policy::Static(x), periods, &PopulationState::empty(inst.num_types(), 1)).unwrap();
        for (i, &expected) in n.iter().enumerate() {
            prop_assert!(rel_close(traj[periods].masses()[i][0], expected, 1e-6));
        }
    }

    #[test]
    fn identical_cohort_payouts_collapse_to_static(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let x = sample::distribution(&mut rng, inst.num_rewards());
        let Ok(expected) = static_profit(&inst, &x) else { return Ok(()) };
        let params = BeliefPolicyParams {
            buildup_periods: 0,
            pool_target: 0.0,
            retained_payout: x.clone(),
            new_payout: x,
        };
        let got = long_run_profit(&inst, &make_belief_based(&inst, &params).unwrap()).unwrap();
        prop_assert!(rel_close(got, expected, 1e-12), "{got} vs {expected}");
    }

    #[test]
    fn exposures_are_distributions(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 6);
        let Ok(profile) = steady_cycle(&inst, &policy) else { return Ok(()) };
        for e in profile.per_type_exposure.iter().flatten() {
            prop_assert!((e.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(e.probs().iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn gap_is_invariant_under_type_permutation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 4);
        let Ok(profile) = steady_cycle(&inst, &policy) else { return Ok(()) };
        let mut raw = inst.to_raw();
        raw.lambdas.reverse();
        raw.departures.reverse();
        let flipped = validate_instance(raw).unwrap();
        let other = steady_cycle(&flipped, &policy).unwrap();
        prop_assert!((fairness_gap(&profile).unwrap() - fairness_gap(&other).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn static_policies_audit_fair(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let x = sample::distribution(&mut rng, inst.num_rewards());
        if let Ok(report) = audit(&inst, &Policy::Static(x), 1e-12) {
            prop_assert!(report.fair);
        }
    }

    #[test]
    fn fair_verdict_is_monotone_in_delta(seed in any::<u64>(), d1 in 0.0..0.5f64, d2 in 0.0..0.5f64) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 3);
        let policy = sample::cyclic_policy(&mut rng, inst.num_rewards(), 4);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        if let (Ok(a), Ok(b)) = (audit(&inst, &policy, lo), audit(&inst, &policy, hi)) {
            prop_assert!(!a.fair || b.fair);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solver_dominates_grid_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = sample::instance(&mut rng, 3, 4);
        let (Ok(solved), Ok((_, grid))) = (solve_fluid_opt(&inst, 0.05, 1e-9), grid_oracle(&inst, 0.05)) else {
            return Ok(());
        };
        prop_assert!(solved.value >= grid);
    }
}

#[test]
fn buildup_simulation_reaches_belief_steady_state() {
    let inst = common::explicit_discrimination_instance(1.0, 1.5, 4.0, 100.0);
    let params = BeliefPolicyParams {
        buildup_periods: 2,
        pool_target: 25.0,
        retained_payout: fairfluid::Distribution::point_mass(3, 1),
        new_payout: fairfluid::Distribution::point_mass(3, 0),
    };
    let policy = make_belief_based(&inst, &params).unwrap();
    let profile = steady_cycle(&inst, &policy).unwrap();
    let traj = simulate(&inst, &policy, 10, &PopulationState::empty(2, 2)).unwrap();
    assert_eq!(traj[10], profile.period_masses[0]);
    assert_eq!(profile.period_masses[0].cohort_mass(RETAINED), 25.0);
}
