//! Policy selection on the command line.
//!
//! Accepted forms:
//! - `fluid`: the FLUID-OPT static optimum
//! - `slashing`: alternate the high and the low reward (two rewards only)
//! - `static:0.75,0,0.25`
//! - `cyclic:1,0;0,1` (one distribution per period)
//! - `belief:POOL:NEW:RETAINED[:BUILDUP]`: cohort policy paying arrivals
//!   reward index `NEW` and the retained pool (target mass `POOL`) reward
//!   index `RETAINED`

use std::str::FromStr;

use fairfluid::{
    make_belief_based, make_reward_slashing, solve_fluid_opt, BeliefPolicyParams, Distribution,
    Instance, Policy,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Fluid,
    Slashing,
    Static(Vec<f64>),
    Cyclic(Vec<Vec<f64>>),
    Belief {
        pool_target: f64,
        new_index: usize,
        retained_index: usize,
        buildup: usize,
    },
}

fn invalid(spec: &str, reason: impl Into<String>) -> CliError {
    CliError::PolicySpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn parse_probs(spec: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| invalid(spec, format!("`{v}`: {e}")))
        })
        .collect()
}

impl FromStr for PolicySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "fluid" => Ok(Self::Fluid),
            "slashing" => Ok(Self::Slashing),
            "static" => Ok(Self::Static(parse_probs(s, rest)?)),
            "cyclic" => Ok(Self::Cyclic(
                rest.split(';')
                    .map(|p| parse_probs(s, p))
                    .collect::<Result<_>>()?,
            )),
            "belief" => {
                let parts: Vec<&str> = rest.split(':').collect();
                if !(3..=4).contains(&parts.len()) {
                    return Err(invalid(s, "expected belief:POOL:NEW:RETAINED[:BUILDUP]"));
                }
                let index = |p: &str| {
                    p.parse::<usize>()
                        .map_err(|e| invalid(s, format!("`{p}`: {e}")))
                };
                Ok(Self::Belief {
                    pool_target: parts[0]
                        .parse()
                        .map_err(|e| invalid(s, format!("`{}`: {e}", parts[0])))?,
                    new_index: index(parts[1])?,
                    retained_index: index(parts[2])?,
                    buildup: parts.get(3).map(|p| index(p)).transpose()?.unwrap_or(0),
                })
            }
            _ => Err(invalid(s, "unknown policy kind")),
        }
    }
}

impl PolicySpec {
    /// Builds the policy for `inst`; `grid` and `tol` configure the
    /// optimizer for [`PolicySpec::Fluid`].
    pub fn build(&self, inst: &Instance, grid: f64, tol: f64) -> Result<Policy> {
        let m = inst.num_rewards();
        let point = |idx: usize| {
            if idx < m {
                Ok(Distribution::point_mass(m, idx))
            } else {
                Err(fairfluid::Error::InvalidParameter(format!(
                    "reward index {idx} out of range for {m} rewards"
                )))
            }
        };
        let policy = match self {
            Self::Fluid => Policy::Static(solve_fluid_opt(inst, grid, tol)?.x_star),
            Self::Slashing => make_reward_slashing(inst)?,
            Self::Static(p) => Policy::Static(Distribution::new(p.clone())?),
            Self::Cyclic(ps) => Policy::cyclic(
                ps.iter()
                    .map(|p| Distribution::new(p.clone()))
                    .collect::<fairfluid::Result<_>>()?,
            )?,
            Self::Belief {
                pool_target,
                new_index,
                retained_index,
                buildup,
            } => make_belief_based(
                inst,
                &BeliefPolicyParams {
                    buildup_periods: *buildup,
                    pool_target: *pool_target,
                    retained_payout: point(*retained_index)?,
                    new_payout: point(*new_index)?,
                },
            )?,
        };
        Ok(policy)
    }
}
