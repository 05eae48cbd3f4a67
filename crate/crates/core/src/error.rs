use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("arrival rate of type {index} is negative or not finite ({value})")]
    NegativeArrival { index: usize, value: f64 },

    #[error("departure probability for type {type_index}, reward {reward_index} is outside [0, 1] ({value})")]
    DepartureOutOfRange {
        type_index: usize,
        reward_index: usize,
        value: f64,
    },

    #[error("reward value {0} appears more than once")]
    DuplicateReward(f64),

    #[error("reward values must be finite, nonnegative and listed in increasing order")]
    InvalidRewards,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("piecewise-linear revenue is not concave (slope rises after breakpoint {0})")]
    NonConcaveRevenue(usize),

    #[error("invalid revenue function: {0}")]
    InvalidRevenue(String),

    #[error("agent mass must be nonnegative (got {0})")]
    NegativeMass(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("type {type_index} never reaches a steady cycle: its population grows without bound")]
    Unstable { type_index: usize },

    #[error(
        "static policy leaves type {type_index} with zero departure rate and positive arrivals"
    )]
    UnstableStatic { type_index: usize },

    #[error("no stable point on the simplex grid")]
    NoFeasiblePoint,

    #[error("policy needs exactly {expected} rewards, instance has {found}")]
    WrongRewardCount { expected: usize, found: usize },

    /// `type_index` is `None` when no type at all is present.
    #[error("empty presence at the steady cycle (type {type_index:?})")]
    EmptyPresence { type_index: Option<usize> },

    #[error("operation is not defined for {0} policies")]
    UnsupportedPolicy(&'static str),
}
