//! Deterministic multi-type agent-retention dynamics.
//!
//! A platform pays agents rewards drawn from a per-period distribution;
//! agents of each type leave with a probability that depends on the
//! reward they were paid. This crate evaluates the resulting fluid
//! population dynamics, finds the best static payout distribution,
//! builds the discriminating baseline policies and audits policies for
//! group fairness.

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fairness;
pub mod model;
pub mod policy;
pub mod sample;

pub use dynamics::{
    long_run_profit, simulate, steady_cycle, step, trajectory_rows, Buildup, CohortSchedule,
    CycleProfile, Policy, PopulationState, TrajectoryRow,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use fairness::{audit, exposure_distribution, fairness_gap, participation_filter, AuditReport};
pub use model::{
    eval_revenue, expected_payment, shift_revenue, validate_instance, DepartureMatrix,
    Distribution, Instance, ParticipationSpec, RawInstance, RevenueFunction, RewardSet,
};
pub use policy::{
    grid_oracle, make_belief_based, make_reward_slashing, presence_weighted_static,
    solve_fluid_opt, solve_fluid_opt_with, stability_populations, static_profit,
    BeliefPolicyParams, FluidOptConfig, FluidOptResult,
};
