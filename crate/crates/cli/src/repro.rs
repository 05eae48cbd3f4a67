//! Reproduction suites for the worked instances.

use fairfluid::{
    exec, grid_oracle, long_run_profit, make_belief_based, make_reward_slashing,
    presence_weighted_static, sample, shift_revenue, solve_fluid_opt, static_profit, steady_cycle,
    BeliefPolicyParams, CycleProfile, Distribution, Exec, Instance, Policy, RevenueFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::instance::{explicit_discrimination, reward_slashing};
use crate::report::{Provenance, Quantity, ReproReport};

pub const REPRO_NAMES: [&str; 4] = ["prop1", "prop2", "pof", "theorem1"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReproParams {
    pub v1: f64,
    pub v2: f64,
    /// Revenue slope; defaults to 4 for prop1/pof and 0.7 for prop2.
    pub alpha: Option<f64>,
    /// Revenue caps D for prop1.
    pub caps: Vec<f64>,
    /// Revenue cap D for pof.
    pub cap: f64,
    pub lambda: f64,
    pub reward: f64,
    /// Optimizer grid; defaults to 0.005 for prop1/pof and 0.01 for prop2.
    pub grid: Option<f64>,
    pub tol: f64,
    pub cases: usize,
    pub seed: u64,
    pub max_period: usize,
}

impl Default for ReproParams {
    fn default() -> Self {
        Self {
            v1: 1.0,
            v2: 1.5,
            alpha: None,
            caps: vec![40.0, 400.0, 4000.0],
            cap: 100.0,
            lambda: 1.0,
            reward: 1.0,
            grid: None,
            tol: fairfluid::policy::DEFAULT_REFINE_TOL,
            cases: 200,
            seed: 1,
            max_period: 6,
        }
    }
}

pub fn run_repro(name: &str, params: &ReproParams) -> Result<ReproReport> {
    match name {
        "prop1" => prop1(params),
        "prop2" => prop2(params),
        "pof" => price_of_fairness(params),
        "theorem1" => theorem1(params),
        _ => Err(CliError::UnknownRepro(name.to_string())),
    }
}

/// Closed-form profits on the explicit-discrimination instance with cap
/// `D`, valid while the cap binds (`α` large against `v2`).
struct Discrimination {
    belief: f64,
    fluid: f64,
}

impl Discrimination {
    fn new(v1: f64, v2: f64, alpha: f64, cap: f64) -> Self {
        Self {
            belief: (alpha - 0.25 * v1) * cap,
            fluid: (alpha - (0.25 * v2).min(0.5 * v1)) * cap,
        }
    }

    fn gap(&self) -> f64 {
        self.belief - self.fluid
    }
}

/// Belief-based policy topping the type-1 pool up to the revenue cap.
fn belief_policy(inst: &Instance, cap: f64) -> Result<Policy> {
    let arrivals: f64 = inst.lambdas().iter().sum();
    Ok(make_belief_based(
        inst,
        &BeliefPolicyParams {
            buildup_periods: 0,
            pool_target: cap - arrivals,
            retained_payout: Distribution::point_mass(3, 1),
            new_payout: Distribution::point_mass(3, 0),
        },
    )?)
}

fn prop1(params: &ReproParams) -> Result<ReproReport> {
    let alpha = params.alpha.unwrap_or(4.0);
    let h = params.grid.unwrap_or(0.005);
    let rows = exec::map(Exec::default(), &params.caps, |&cap| -> Result<_> {
        let inst = explicit_discrimination(params.v1, params.v2, alpha, cap)?;
        let belief = long_run_profit(&inst, &belief_policy(&inst, cap)?)?;
        let fluid = solve_fluid_opt(&inst, h, params.tol)?.value;
        let (_, grid) = grid_oracle(&inst, h)?;
        Ok((cap, belief, fluid, grid))
    });
    let mut report = ReproReport::new("prop1");
    for row in rows {
        let (cap, belief, fluid, grid) = row?;
        let expected = Discrimination::new(params.v1, params.v2, alpha, cap);
        let slack = 0.01 * expected.gap().abs();
        let d = Provenance::Derived;
        report.push(Quantity::within(
            format!("belief_profit_D{cap}"),
            belief,
            expected.belief,
            1e-9 * cap,
            d,
        ));
        report.push(Quantity::within(
            format!("static_optimum_D{cap}"),
            fluid,
            expected.fluid,
            slack,
            d,
        ));
        report.push(Quantity::within(
            format!("grid_oracle_D{cap}"),
            grid,
            expected.fluid,
            slack,
            d,
        ));
        report.push(Quantity::within(
            format!("gap_D{cap}"),
            belief - fluid,
            expected.gap(),
            slack,
            d,
        ));
        report.push(Quantity::within(
            format!("gap_over_D_D{cap}"),
            (belief - fluid) / cap,
            expected.gap() / cap,
            slack / cap,
            d,
        ));
    }
    Ok(report)
}

fn prop2(params: &ReproParams) -> Result<ReproReport> {
    let (lambda, r) = (params.lambda, params.reward);
    let alpha = params.alpha.unwrap_or(0.7);
    let inst = reward_slashing(lambda, r, alpha)?;
    let policy = make_reward_slashing(&inst)?;
    let profile = steady_cycle(&inst, &policy)?;
    let high =
        |i: usize| -> Result<f64> { Ok(fairfluid::exposure_distribution(&profile, i)?.probs()[1]) };
    let mass = |t: usize, i: usize| profile.period_masses[t].type_mass(i);
    let static_opt = solve_fluid_opt(&inst, params.grid.unwrap_or(0.01), params.tol)?.value;

    let (p, d) = (Provenance::Paper, Provenance::Derived);
    let mut report = ReproReport::new("prop2");
    report.push(Quantity::within(
        "exposure_type1_high",
        high(0)?,
        19.0 / 39.0,
        1e-9,
        p,
    ));
    report.push(Quantity::within(
        "exposure_type2_high",
        high(1)?,
        0.4,
        1e-9,
        p,
    ));
    report.push(Quantity::within(
        "fairness_gap",
        fairfluid::fairness_gap(&profile)?,
        34.0 / 195.0,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "mass_type1_pay",
        mass(0, 0),
        1.9 * lambda,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "mass_type1_zero",
        mass(1, 0),
        2.0 * lambda,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "mass_type2_pay",
        mass(0, 1),
        1.0 * lambda,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "mass_type2_zero",
        mass(1, 1),
        1.5 * lambda,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "profit_cyclic",
        profile.avg_profit,
        (3.2 * alpha - 1.45 * r) * lambda,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "profit_static_optimum",
        static_opt,
        2.0 * alpha * lambda,
        1e-9,
        d,
    ));
    Ok(report)
}

fn price_of_fairness(params: &ReproParams) -> Result<ReproReport> {
    let alpha = params.alpha.unwrap_or(4.0);
    let h = params.grid.unwrap_or(0.005);
    let cap = params.cap;
    let inst = explicit_discrimination(params.v1, params.v2, alpha, cap)?;
    let v_star = solve_fluid_opt(&inst, h, params.tol)?.value;
    let shifted = inst.with_revenue(shift_revenue(inst.revenue(), v_star))?;
    let fair = solve_fluid_opt(&shifted, h, params.tol)?.value;
    let belief = long_run_profit(&shifted, &belief_policy(&shifted, cap)?)?;

    let expected = Discrimination::new(params.v1, params.v2, alpha, cap);
    let d = Provenance::Derived;
    let mut report = ReproReport::new("pof");
    report.push(Quantity::within(
        "v_star",
        v_star,
        expected.fluid,
        0.01 * expected.gap().abs(),
        d,
    ));
    report.push(Quantity::within(
        "shifted_static_optimum",
        fair,
        0.0,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "shifted_belief_profit",
        belief,
        expected.gap(),
        0.01 * expected.gap().abs(),
        d,
    ));
    Ok(report)
}

/// Largest gap between a type's average departures over the cycle and its
/// arrival rate.
pub fn flow_imbalance(inst: &Instance, policy: &Policy, profile: &CycleProfile) -> f64 {
    let tau = profile.period() as f64;
    (0..inst.num_types())
        .map(|i| {
            let departures: f64 = profile
                .period_masses
                .iter()
                .enumerate()
                .map(|(t, state)| {
                    policy
                        .payouts(t)
                        .iter()
                        .zip(&state.masses()[i])
                        .map(|(x, m)| m * inst.departures().rate(i, x))
                        .sum::<f64>()
                })
                .sum();
            (departures / tau - inst.lambdas()[i]).abs()
        })
        .fold(0.0, f64::max)
}

struct AveragingCase {
    inst: Instance,
    policy: Policy,
    linear: bool,
}

/// Draws `count` single-type instances with stable cyclic policies.
fn averaging_cases(
    rng: &mut ChaCha8Rng,
    count: usize,
    max_period: usize,
    linear: bool,
) -> Vec<AveragingCase> {
    let mut cases = Vec::with_capacity(count);
    while cases.len() < count {
        let revenue = if linear {
            RevenueFunction::Linear {
                alpha: rng.gen_range(0.5..3.0),
            }
        } else {
            sample::concave_piecewise(rng, 5.0)
        };
        let inst = sample::single_type_instance(rng, 4, revenue);
        let policy = sample::cyclic_policy(rng, inst.num_rewards(), max_period);
        if steady_cycle(&inst, &policy).is_ok() {
            cases.push(AveragingCase {
                inst,
                policy,
                linear,
            });
        }
    }
    cases
}

fn theorem1(params: &ReproParams) -> Result<ReproReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cases = averaging_cases(&mut rng, params.cases, params.max_period.max(1), false);
    cases.extend(averaging_cases(
        &mut rng,
        params.cases,
        params.max_period.max(1),
        true,
    ));
    let rows = exec::map(Exec::default(), &cases, |case| -> Result<_> {
        let profile = steady_cycle(&case.inst, &case.policy)?;
        let averaged = presence_weighted_static(&case.inst, &case.policy)?;
        let diff = static_profit(&case.inst, &averaged)? - profile.avg_profit;
        Ok((
            case.linear,
            diff,
            flow_imbalance(&case.inst, &case.policy, &profile),
        ))
    });
    let mut concave_min = f64::INFINITY;
    let mut linear_max = 0.0f64;
    let mut imbalance = 0.0f64;
    for row in rows {
        let (linear, diff, flow) = row?;
        if linear {
            linear_max = linear_max.max(diff.abs());
        } else {
            concave_min = concave_min.min(diff);
        }
        imbalance = imbalance.max(flow);
    }
    if params.cases == 0 {
        concave_min = 0.0;
    }

    let (p, d) = (Provenance::Paper, Provenance::Derived);
    let mut report = ReproReport::new("theorem1");
    report.push(Quantity::at_least(
        "concave_static_minus_cyclic_min",
        concave_min,
        0.0,
        1e-9,
        p,
    ));
    report.push(Quantity::within(
        "linear_static_minus_cyclic_max_abs",
        linear_max,
        0.0,
        1e-9,
        d,
    ));
    report.push(Quantity::within(
        "flow_imbalance_max",
        imbalance,
        0.0,
        1e-9,
        d,
    ));
    Ok(report)
}
