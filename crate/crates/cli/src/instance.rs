//! Instance documents and the bundled worked instances.

use std::fs;
use std::path::Path;

use fairfluid::{validate_instance, Instance, RawInstance, RevenueFunction};

use crate::error::{CliError, Result};

pub const PROP1_JSON: &str = include_str!("../instances/prop1.json");
pub const PROP2_JSON: &str = include_str!("../instances/prop2.json");

/// Reads and validates an instance document.
pub fn parse_instance_file(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: RawInstance = serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(validate_instance(raw)?)
}

pub fn parse_instance_str(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text)?;
    Ok(validate_instance(raw)?)
}

/// Two types with rewards `{0, v1, v2}`: type 1 stays for any positive
/// reward, type 2 only for `v2`. Revenue `α·min{N, D}` with arrivals
/// `D/4` and `D/2`.
pub fn explicit_discrimination(v1: f64, v2: f64, alpha: f64, cap: f64) -> Result<Instance> {
    Ok(validate_instance(RawInstance {
        lambdas: vec![cap / 4.0, cap / 2.0],
        rewards: vec![0.0, v1, v2],
        departures: vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
        revenue: RevenueFunction::CappedLinear { alpha, cap },
    })?)
}

/// Two types with rewards `{0, r}` and arrivals `λ/10` and `λ`; type 1
/// never leaves when paid `r`.
pub fn reward_slashing(lambda: f64, reward: f64, alpha: f64) -> Result<Instance> {
    Ok(validate_instance(RawInstance {
        lambdas: vec![0.1 * lambda, lambda],
        rewards: vec![0.0, reward],
        departures: vec![vec![0.1, 0.0], vec![1.0, 0.5]],
        revenue: RevenueFunction::Linear { alpha },
    })?)
}
