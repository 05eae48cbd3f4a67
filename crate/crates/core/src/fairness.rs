//! Group-fairness auditing of periodic policies.
//!
//! For a periodic policy at its steady cycle, the presence-weighted
//! average payout over a window converges, uniformly in the window start,
//! to the presence-weighted average over one cycle. The audit therefore
//! compares per-type cycle exposures.

use serde::Serialize;

use crate::dynamics::{steady_cycle, CycleProfile, Policy};
use crate::error::{Error, Result};
use crate::model::{Distribution, Instance, ParticipationSpec};

/// Tolerance for an "exactly fair" verdict.
pub const DEFAULT_DELTA: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    /// Cycle exposure per type; `None` for types that are never present.
    pub exposures: Vec<Option<Distribution>>,
    pub avg_rewards: Vec<Option<f64>>,
    #[serde(rename = "gap")]
    pub max_pairwise_l1: f64,
    pub delta: f64,
    /// False for cohort-conditioned policies, which pay agents present in
    /// the same period from different distributions.
    pub within_period_fair: bool,
    pub fair: bool,
}

/// Presence-weighted payout distribution of type `i` over the steady cycle.
pub fn exposure_distribution(profile: &CycleProfile, i: usize) -> Result<Distribution> {
    profile
        .per_type_exposure
        .get(i)
        .cloned()
        .flatten()
        .ok_or(Error::EmptyPresence {
            type_index: Some(i),
        })
}

/// Largest L1 distance between the exposures of two present types.
pub fn fairness_gap(profile: &CycleProfile) -> Result<f64> {
    let present: Vec<&Distribution> = profile.per_type_exposure.iter().flatten().collect();
    if present.is_empty() {
        return Err(Error::EmptyPresence { type_index: None });
    }
    let mut gap = 0.0f64;
    for (a, x) in present.iter().enumerate() {
        for y in &present[a + 1..] {
            gap = gap.max(x.l1_distance(y));
        }
    }
    Ok(gap)
}

pub fn audit(inst: &Instance, policy: &Policy, delta: f64) -> Result<AuditReport> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must be nonnegative"
        )));
    }
    let profile = steady_cycle(inst, policy)?;
    let gap = fairness_gap(&profile)?;
    let within_period_fair = !policy.is_cohort_conditioned();
    Ok(AuditReport {
        exposures: profile.per_type_exposure,
        avg_rewards: profile.avg_reward_per_type,
        max_pairwise_l1: gap,
        delta,
        within_period_fair,
        fair: within_period_fair && gap <= delta,
    })
}

/// Types whose long-run average reward meets their reservation wage.
/// Types that are never present do not join.
pub fn participation_filter(
    inst: &Instance,
    policy: &Policy,
    spec: &ParticipationSpec,
) -> Result<Vec<usize>> {
    if spec.reservations().len() != inst.num_types() {
        return Err(Error::DimensionMismatch(format!(
            "{} reservation wages for {} types",
            spec.reservations().len(),
            inst.num_types()
        )));
    }
    let profile = steady_cycle(inst, policy)?;
    Ok(profile
        .avg_reward_per_type
        .iter()
        .zip(spec.reservations())
        .enumerate()
        .filter(|(_, (avg, &wage))| avg.is_some_and(|a| a >= wage))
        .map(|(i, _)| i)
        .collect())
}
