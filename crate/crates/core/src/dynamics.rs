//! Deterministic population recursion and exact steady cycles.
//!
//! Within a period: new mass `λ_i` arrives, revenue accrues on the total
//! mass present, every present agent is paid according to the period's
//! distribution, and a fraction `ℓ_i(r)` of the type-`i` mass paid `r`
//! departs. A state therefore records the mass present *during* a period.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{expected_payment, Distribution, Instance};

/// Cohort index of arrivals in the current period (cohort-conditioned policies).
pub const NEW: usize = 0;
/// Cohort index of agents that have survived at least one payout.
pub const RETAINED: usize = 1;

/// Pay-everyone warm-up applied by [`simulate`] before a cohort schedule starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Buildup {
    pub periods: usize,
    pub payout: Distribution,
}

/// Periodic schedule that pays arrivals and retained agents differently.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSchedule {
    pub new: Vec<Distribution>,
    pub retained: Vec<Distribution>,
    pub buildup: Option<Buildup>,
    /// Retained mass held at the steady cycle by types whose retained
    /// cohort neither gains nor loses mass over a cycle. Split across
    /// those types in proportion to their arrival rates.
    pub pool_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Static(Distribution),
    Cyclic(Vec<Distribution>),
    CohortConditioned(CohortSchedule),
}

impl Policy {
    pub fn cyclic(schedule: Vec<Distribution>) -> Result<Self> {
        if schedule.is_empty() {
            return Err(Error::InvalidParameter(
                "cycle length must be at least 1".into(),
            ));
        }
        Ok(Self::Cyclic(schedule))
    }

    pub fn cohort(schedule: CohortSchedule) -> Result<Self> {
        if schedule.new.is_empty() || schedule.new.len() != schedule.retained.len() {
            return Err(Error::InvalidParameter(
                "cohort schedules must share a cycle length of at least 1".into(),
            ));
        }
        if !(schedule.pool_target.is_finite() && schedule.pool_target >= 0.0) {
            return Err(Error::InvalidParameter(
                "pool target must be nonnegative".into(),
            ));
        }
        Ok(Self::CohortConditioned(schedule))
    }

    /// Cycle length τ.
    pub fn period(&self) -> usize {
        match self {
            Self::Static(_) => 1,
            Self::Cyclic(s) => s.len(),
            Self::CohortConditioned(s) => s.new.len(),
        }
    }

    /// Number of cohorts tracked in a [`PopulationState`] under this policy.
    pub fn cohorts(&self) -> usize {
        match self {
            Self::CohortConditioned(_) => 2,
            _ => 1,
        }
    }

    pub fn is_cohort_conditioned(&self) -> bool {
        matches!(self, Self::CohortConditioned(_))
    }

    /// Per-cohort payouts in steady-cycle period `t` (taken mod τ).
    pub fn payouts(&self, t: usize) -> Vec<&Distribution> {
        match self {
            Self::Static(x) => vec![x],
            Self::Cyclic(s) => vec![&s[t % s.len()]],
            Self::CohortConditioned(s) => {
                let k = t % s.new.len();
                vec![&s.new[k], &s.retained[k]]
            }
        }
    }

    /// Per-cohort payouts in simulated period `t`, including any buildup.
    fn simulated_payouts(&self, t: usize) -> Vec<&Distribution> {
        if let Self::CohortConditioned(CohortSchedule {
            buildup: Some(b), ..
        }) = self
        {
            if t < b.periods {
                return vec![&b.payout, &b.payout];
            }
            return self.payouts(t - b.periods);
        }
        self.payouts(t)
    }

    fn distributions(&self) -> Vec<&Distribution> {
        match self {
            Self::Static(x) => vec![x],
            Self::Cyclic(s) => s.iter().collect(),
            Self::CohortConditioned(s) => {
                let mut all: Vec<_> = s.new.iter().chain(&s.retained).collect();
                all.extend(s.buildup.as_ref().map(|b| &b.payout));
                all
            }
        }
    }

    pub(crate) fn check(&self, inst: &Instance) -> Result<()> {
        if self.period() == 0 {
            return Err(Error::InvalidParameter(
                "cycle length must be at least 1".into(),
            ));
        }
        self.distributions()
            .into_iter()
            .try_for_each(|x| x.check_len(inst.rewards()))
    }
}

/// Agent mass per type (rows) and cohort (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PopulationState(pub(crate) Vec<Vec<f64>>);

impl PopulationState {
    pub fn new(masses: Vec<Vec<f64>>) -> Result<Self> {
        let cohorts = masses.first().map_or(0, Vec::len);
        if !(1..=2).contains(&cohorts) || masses.iter().any(|row| row.len() != cohorts) {
            return Err(Error::DimensionMismatch(
                "population state needs one or two cohorts per type".into(),
            ));
        }
        if let Some(&m) = masses
            .iter()
            .flatten()
            .find(|m| !(m.is_finite() && **m >= 0.0))
        {
            return Err(Error::NegativeMass(m));
        }
        Ok(Self(masses))
    }

    pub fn empty(num_types: usize, cohorts: usize) -> Self {
        Self(vec![vec![0.0; cohorts]; num_types])
    }

    /// Single-cohort state with the given per-type masses.
    pub fn uniform(masses: &[f64]) -> Result<Self> {
        Self::new(masses.iter().map(|&m| vec![m]).collect())
    }

    pub fn masses(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn num_types(&self) -> usize {
        self.0.len()
    }

    pub fn cohorts(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn type_mass(&self, i: usize) -> f64 {
        self.0[i].iter().sum()
    }

    pub fn cohort_mass(&self, c: usize) -> f64 {
        self.0.iter().map(|row| row[c]).sum()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().flatten().sum()
    }
}

/// One period of the recursion.
///
/// With one cohort, `N_i' = λ_i + N_i (1 − ℓ_i·x)`. With two cohorts,
/// arrivals form the new cohort and survivors of both cohorts form the
/// retained cohort.
pub fn step(
    state: &PopulationState,
    payouts: &[&Distribution],
    inst: &Instance,
) -> Result<PopulationState> {
    if state.num_types() != inst.num_types() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} types, instance has {}",
            state.num_types(),
            inst.num_types()
        )));
    }
    if payouts.len() != state.cohorts() {
        return Err(Error::DimensionMismatch(format!(
            "{} payouts for {} cohorts",
            payouts.len(),
            state.cohorts()
        )));
    }
    for x in payouts {
        x.check_len(inst.rewards())?;
    }
    let ell = inst.departures();
    let next = state
        .masses()
        .iter()
        .zip(inst.lambdas())
        .enumerate()
        .map(|(i, (row, &lambda))| {
            let survivors: f64 = row
                .iter()
                .zip(payouts)
                .map(|(m, x)| m * (1.0 - ell.rate(i, x)))
                .sum();
            match row.len() {
                1 => vec![lambda + survivors],
                _ => vec![lambda, survivors],
            }
        })
        .collect();
    Ok(PopulationState(next))
}

/// Trajectory of `horizon + 1` states starting at `init`.
///
/// Period `t` pays according to the policy's schedule at `t mod τ`; a
/// cohort policy's buildup occupies periods `0..buildup.periods` first.
pub fn simulate(
    inst: &Instance,
    policy: &Policy,
    horizon: usize,
    init: &PopulationState,
) -> Result<Vec<PopulationState>> {
    policy.check(inst)?;
    if init.cohorts() != policy.cohorts() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} cohorts, policy needs {}",
            init.cohorts(),
            policy.cohorts()
        )));
    }
    let mut trajectory = Vec::with_capacity(horizon + 1);
    trajectory.push(init.clone());
    for t in 0..horizon {
        let next = step(&trajectory[t], &policy.simulated_payouts(t), inst)?;
        trajectory.push(next);
    }
    Ok(trajectory)
}

/// One row of the trajectory CSV export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: usize,
    #[serde(rename = "type")]
    pub type_index: usize,
    pub cohort: usize,
    pub mass: f64,
    /// Index of the policy's schedule entry paid in period `t`, or `None`
    /// during a buildup phase.
    pub payout_index: Option<usize>,
}

/// Flattens a trajectory into rows `t, type, cohort, mass, payout_index`.
pub fn trajectory_rows(policy: &Policy, trajectory: &[PopulationState]) -> Vec<TrajectoryRow> {
    let buildup = match policy {
        Policy::CohortConditioned(CohortSchedule {
            buildup: Some(b), ..
        }) => b.periods,
        _ => 0,
    };
    let tau = policy.period();
    let mut rows = Vec::new();
    for (t, state) in trajectory.iter().enumerate() {
        let payout_index = (t >= buildup).then(|| (t - buildup) % tau);
        for (type_index, row) in state.masses().iter().enumerate() {
            for (cohort, &mass) in row.iter().enumerate() {
                rows.push(TrajectoryRow {
                    t,
                    type_index,
                    cohort,
                    mass,
                    payout_index,
                });
            }
        }
    }
    rows
}

/// Steady-cycle populations, exposures and profit of a periodic policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleProfile {
    /// State in each of the τ periods of the cycle.
    pub period_masses: Vec<PopulationState>,
    pub avg_population: f64,
    pub avg_profit: f64,
    /// Presence-weighted payout distribution per type; `None` for types
    /// that are never present.
    pub per_type_exposure: Vec<Option<Distribution>>,
    pub avg_reward_per_type: Vec<Option<f64>>,
}

impl CycleProfile {
    pub fn period(&self) -> usize {
        self.period_masses.len()
    }

    /// Total mass of type `i` summed over the cycle.
    pub fn presence(&self, i: usize) -> f64 {
        self.period_masses.iter().map(|s| s.type_mass(i)).sum()
    }
}

/// Fixed point of the cycle composition of affine maps `N ↦ a_t + s_t N`,
/// returned as the state at each period start. `None` when the composed
/// map is neutral (`Π s_t = 1`).
fn affine_cycle(inflow: &[f64], survival: &[f64]) -> Option<Vec<f64>> {
    // 1 − Π s_t evaluated without cancellation
    let log_prod: f64 = survival.iter().map(|s| (s - 1.0).ln_1p()).sum();
    let contraction = -log_prod.exp_m1();
    if contraction <= 0.0 {
        return None;
    }
    let mut offset = 0.0;
    for (a, s) in inflow.iter().zip(survival) {
        offset = a + s * offset;
    }
    Some(orbit(offset / contraction, inflow, survival))
}

fn orbit(start: f64, inflow: &[f64], survival: &[f64]) -> Vec<f64> {
    let mut masses = Vec::with_capacity(inflow.len());
    let mut n = start;
    for (a, s) in inflow.iter().zip(survival) {
        masses.push(n);
        n = a + s * n;
    }
    masses
}

/// Exact steady cycle of a periodic policy, from closed-form affine fixed
/// points per type.
pub fn steady_cycle(inst: &Instance, policy: &Policy) -> Result<CycleProfile> {
    policy.check(inst)?;
    let tau = policy.period();
    let k = inst.num_types();
    let ell = inst.departures();
    let payouts: Vec<Vec<&Distribution>> = (0..tau).map(|t| policy.payouts(t)).collect();
    let survival = |i: usize, c: usize| -> Vec<f64> {
        payouts.iter().map(|p| 1.0 - ell.rate(i, p[c])).collect()
    };

    // per_type[i][t] = cohort masses of type i in period t
    let mut per_type: Vec<Vec<Vec<f64>>> = Vec::with_capacity(k);
    match policy {
        Policy::CohortConditioned(schedule) => {
            let neutral: Vec<bool> = (0..k)
                .map(|i| affine_cycle(&vec![0.0; tau], &survival(i, RETAINED)).is_none())
                .collect();
            let neutral_arrivals: f64 = (0..k)
                .filter(|&i| neutral[i])
                .map(|i| inst.lambdas()[i])
                .sum();
            for (i, &lambda) in inst.lambdas().iter().enumerate() {
                let inflow: Vec<f64> = survival(i, NEW).iter().map(|s| lambda * s).collect();
                let s_ret = survival(i, RETAINED);
                let retained = match affine_cycle(&inflow, &s_ret) {
                    Some(m) => m,
                    None if inflow.iter().any(|&a| a > 0.0) => {
                        return Err(Error::Unstable { type_index: i })
                    }
                    None => {
                        let seed = if neutral_arrivals > 0.0 {
                            schedule.pool_target * lambda / neutral_arrivals
                        } else {
                            0.0
                        };
                        orbit(seed, &inflow, &s_ret)
                    }
                };
                per_type.push(retained.into_iter().map(|r| vec![lambda, r]).collect());
            }
        }
        _ => {
            for (i, &lambda) in inst.lambdas().iter().enumerate() {
                let s = survival(i, 0);
                let inflow = vec![lambda; tau];
                let masses = match affine_cycle(&inflow, &s) {
                    Some(m) => m,
                    None if lambda > 0.0 => return Err(Error::Unstable { type_index: i }),
                    // no arrivals and no departures: empty-start convention
                    None => vec![0.0; tau],
                };
                per_type.push(masses.into_iter().map(|m| vec![m]).collect());
            }
        }
    }

    let period_masses: Vec<PopulationState> = (0..tau)
        .map(|t| PopulationState(per_type.iter().map(|rows| rows[t].clone()).collect()))
        .collect();

    let rewards = inst.rewards();
    let mut profit = 0.0;
    for (state, pay) in period_masses.iter().zip(&payouts) {
        let cost: f64 = pay
            .iter()
            .enumerate()
            .map(|(c, x)| expected_payment(x, rewards) * state.cohort_mass(c))
            .sum();
        profit += inst.revenue().eval(state.total())? - cost;
    }
    let avg_profit = profit / tau as f64;
    let avg_population = period_masses
        .iter()
        .map(PopulationState::total)
        .sum::<f64>()
        / tau as f64;

    let m = inst.num_rewards();
    let mut per_type_exposure = Vec::with_capacity(k);
    for i in 0..k {
        let mut weighted = vec![0.0; m];
        let mut presence = 0.0;
        for (state, pay) in period_masses.iter().zip(&payouts) {
            for (c, x) in pay.iter().enumerate() {
                let w = state.masses()[i][c];
                presence += w;
                for (acc, p) in weighted.iter_mut().zip(x.probs()) {
                    *acc += w * p;
                }
            }
        }
        per_type_exposure.push((presence > 0.0).then(|| {
            weighted.iter_mut().for_each(|v| *v /= presence);
            Distribution(weighted)
        }));
    }
    let avg_reward_per_type = per_type_exposure
        .iter()
        .map(|e| e.as_ref().map(|x| expected_payment(x, rewards)))
        .collect();

    Ok(CycleProfile {
        period_masses,
        avg_population,
        avg_profit,
        per_type_exposure,
        avg_reward_per_type,
    })
}

/// Long-run average profit per period.
pub fn long_run_profit(inst: &Instance, policy: &Policy) -> Result<f64> {
    steady_cycle(inst, policy).map(|p| p.avg_profit)
}
