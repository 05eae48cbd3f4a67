//! Model primitives: reward sets, payout distributions, departure
//! probabilities, revenue curves and the validated [`Instance`].
//!
//! Money and agent mass are unit-free reals. Distributions are dense
//! vectors aligned with the reward set by index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Finite, strictly increasing set of nonnegative reward values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RewardSet(Vec<f64>);

impl RewardSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidRewards);
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidRewards);
        }
        for w in values.windows(2) {
            if w[1] == w[0] {
                return Err(Error::DuplicateReward(w[0]));
            }
            if w[1] < w[0] {
                return Err(Error::InvalidRewards);
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rmin(&self) -> f64 {
        self.0[0]
    }

    pub fn rmax(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Probability mass over a reward set, aligned by index.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution(pub(crate) Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidDistribution(format!(
                "entry {p} outside [0, 1]"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self(probs))
    }

    /// All mass on reward index `index`.
    pub fn point_mass(len: usize, index: usize) -> Self {
        assert!(index < len, "point mass index {index} out of range {len}");
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// L1 distance to another distribution of the same length.
    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub(crate) fn check_len(&self, rewards: &RewardSet) -> Result<()> {
        if self.len() != rewards.len() {
            return Err(Error::DimensionMismatch(format!(
                "distribution has {} entries, reward set has {}",
                self.len(),
                rewards.len()
            )));
        }
        Ok(())
    }
}

/// `ell[i][r]`: fraction of type-`i` mass paid reward index `r` that
/// departs at the end of the period.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DepartureMatrix(Vec<Vec<f64>>);

impl DepartureMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "departure row {i} has {} entries, row 0 has {width}",
                    row.len()
                )));
            }
            for (r, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::DepartureOutOfRange {
                        type_index: i,
                        reward_index: r,
                        value,
                    });
                }
            }
        }
        Ok(Self(rows))
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn get(&self, type_index: usize, reward_index: usize) -> f64 {
        self.0[type_index][reward_index]
    }

    /// Expected departure fraction `Σ_r ℓ_i(r) x_r` of a type under `x`.
    pub fn rate(&self, type_index: usize, x: &Distribution) -> f64 {
        self.0[type_index]
            .iter()
            .zip(x.probs())
            .map(|(l, p)| l * p)
            .sum()
    }
}

/// Per-period revenue as a function of the total agent mass present.
///
/// The serialized form is the `revenue` object of the instance document:
/// `{"kind": "linear", "alpha": ..}`, `{"kind": "capped", "alpha": .., "cap": ..}`,
/// `{"kind": "pwl", "breakpoints": [[mass, money], ..]}` or
/// `{"kind": "shifted", "base": {..}, "offset": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RevenueFunction {
    #[serde(rename = "linear")]
    Linear { alpha: f64 },
    #[serde(rename = "capped")]
    CappedLinear { alpha: f64, cap: f64 },
    /// Linear interpolation between breakpoints; the first and last
    /// segments are extended beyond the breakpoint range.
    #[serde(rename = "pwl")]
    PiecewiseLinearConcave { breakpoints: Vec<[f64; 2]> },
    #[serde(rename = "shifted")]
    Shifted {
        base: Box<RevenueFunction>,
        offset: f64,
    },
}

impl RevenueFunction {
    pub fn linear(alpha: f64) -> Result<Self> {
        let rev = Self::Linear { alpha };
        rev.validate()?;
        Ok(rev)
    }

    pub fn capped(alpha: f64, cap: f64) -> Result<Self> {
        let rev = Self::CappedLinear { alpha, cap };
        rev.validate()?;
        Ok(rev)
    }

    pub fn piecewise(breakpoints: Vec<[f64; 2]>) -> Result<Self> {
        let rev = Self::PiecewiseLinearConcave { breakpoints };
        rev.validate()?;
        Ok(rev)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Linear { alpha } => check_alpha(*alpha),
            Self::CappedLinear { alpha, cap } => {
                check_alpha(*alpha)?;
                if !(cap.is_finite() && *cap > 0.0) {
                    return Err(Error::InvalidRevenue(format!(
                        "cap must be positive, got {cap}"
                    )));
                }
                Ok(())
            }
            Self::PiecewiseLinearConcave { breakpoints } => {
                if breakpoints.len() < 2 {
                    return Err(Error::InvalidRevenue(
                        "piecewise revenue needs at least two breakpoints".into(),
                    ));
                }
                if breakpoints.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidRevenue("non-finite breakpoint".into()));
                }
                if breakpoints.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::InvalidRevenue(
                        "breakpoint masses must be strictly increasing".into(),
                    ));
                }
                let slopes: Vec<f64> = breakpoints.windows(2).map(segment_slope).collect();
                match slopes.windows(2).position(|s| s[1] > s[0]) {
                    Some(k) => Err(Error::NonConcaveRevenue(k + 1)),
                    None => Ok(()),
                }
            }
            Self::Shifted { base, offset } => {
                if !offset.is_finite() {
                    return Err(Error::InvalidRevenue(format!(
                        "offset {offset} is not finite"
                    )));
                }
                base.validate()
            }
        }
    }

    /// Revenue collected in a period with total mass `n` present.
    pub fn eval(&self, n: f64) -> Result<f64> {
        if n.is_nan() || n < 0.0 {
            return Err(Error::NegativeMass(n));
        }
        Ok(self.eval_unchecked(n))
    }

    fn eval_unchecked(&self, n: f64) -> f64 {
        match self {
            Self::Linear { alpha } => alpha * n,
            Self::CappedLinear { alpha, cap } => alpha * n.min(*cap),
            Self::PiecewiseLinearConcave { breakpoints } => {
                // index of the segment containing n, clamped to the end segments
                let seg = breakpoints
                    .windows(2)
                    .position(|w| n <= w[1][0])
                    .unwrap_or(breakpoints.len() - 2);
                let [m0, v0] = breakpoints[seg];
                v0 + segment_slope(&breakpoints[seg..seg + 2]) * (n - m0)
            }
            Self::Shifted { base, offset } => base.eval_unchecked(n) - offset,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidRevenue(format!(
            "alpha must be nonnegative, got {alpha}"
        )))
    }
}

fn segment_slope(w: &[[f64; 2]]) -> f64 {
    (w[1][1] - w[0][1]) / (w[1][0] - w[0][0])
}

/// Evaluates `rev` at total mass `n`.
pub fn eval_revenue(rev: &RevenueFunction, n: f64) -> Result<f64> {
    rev.eval(n)
}

/// Revenue curve lowered by a constant `v` everywhere.
pub fn shift_revenue(rev: &RevenueFunction, v: f64) -> RevenueFunction {
    RevenueFunction::Shifted {
        base: Box::new(rev.clone()),
        offset: v,
    }
}

/// Mean reward paid to an agent under `x`.
pub fn expected_payment(x: &Distribution, rewards: &RewardSet) -> f64 {
    x.probs()
        .iter()
        .zip(rewards.values())
        .map(|(p, r)| p * r)
        .sum()
}

/// Unchecked instance data, as read from an instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInstance {
    pub lambdas: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Row per type, column per reward index.
    pub departures: Vec<Vec<f64>>,
    pub revenue: RevenueFunction,
}

/// Validated model primitives. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    lambdas: Vec<f64>,
    rewards: RewardSet,
    departures: DepartureMatrix,
    revenue: RevenueFunction,
}

impl Instance {
    pub fn num_types(&self) -> usize {
        self.lambdas.len()
    }

    pub fn num_rewards(&self) -> usize {
        self.rewards.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rewards(&self) -> &RewardSet {
        &self.rewards
    }

    pub fn departures(&self) -> &DepartureMatrix {
        &self.departures
    }

    pub fn revenue(&self) -> &RevenueFunction {
        &self.revenue
    }

    /// Same primitives with a different revenue curve.
    pub fn with_revenue(&self, revenue: RevenueFunction) -> Result<Self> {
        revenue.validate()?;
        Ok(Self {
            revenue,
            ..self.clone()
        })
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            lambdas: self.lambdas.clone(),
            rewards: self.rewards.values().to_vec(),
            departures: self.departures.rows().to_vec(),
            revenue: self.revenue.clone(),
        }
    }
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        validate_instance(raw)
    }
}

pub fn validate_instance(raw: RawInstance) -> Result<Instance> {
    if raw.lambdas.is_empty() {
        return Err(Error::DimensionMismatch(
            "at least one agent type is required".into(),
        ));
    }
    for (index, &value) in raw.lambdas.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::NegativeArrival { index, value });
        }
    }
    let rewards = RewardSet::new(raw.rewards)?;
    if raw.departures.len() != raw.lambdas.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} departure rows for {} types",
            raw.departures.len(),
            raw.lambdas.len()
        )));
    }
    if let Some(row) = raw.departures.iter().position(|r| r.len() != rewards.len()) {
        return Err(Error::DimensionMismatch(format!(
            "departure row {row} has {} entries for {} rewards",
            raw.departures[row].len(),
            rewards.len()
        )));
    }
    let departures = DepartureMatrix::new(raw.departures)?;
    raw.revenue.validate()?;
    Ok(Instance {
        lambdas: raw.lambdas,
        rewards,
        departures,
        revenue: raw.revenue,
    })
}

/// Per-type reservation wages for the participation filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipationSpec(Vec<f64>);

impl ParticipationSpec {
    pub fn new(reservations: Vec<f64>) -> Result<Self> {
        if let Some(r) = reservations.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "reservation wage {r} must be nonnegative"
            )));
        }
        Ok(Self(reservations))
    }

    pub fn reservations(&self) -> &[f64] {
        &self.0
    }
}
