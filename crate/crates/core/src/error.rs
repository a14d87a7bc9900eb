//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors produced by model construction, evaluation and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("discount factor gamma must lie in [0, 1), got {0}")]
    GammaOutOfRange(f64),

    #[error("confidence level alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),

    #[error("{name} must sum to 1 (within {tol:e}), got {sum}")]
    ProbabilityVectorSum { name: &'static str, sum: f64, tol: f64 },

    #[error("{name}[{index}] = {value} is not a valid probability")]
    ProbabilityEntry { name: &'static str, index: usize, value: f64 },

    #[error("transition row (scenario {scenario}, state {state}, action {action}) sums to {sum}, expected 1 within {tol:e}")]
    TransitionRowSum { scenario: usize, state: usize, action: usize, sum: f64, tol: f64 },

    #[error("transition entry (scenario {scenario}, state {state}, action {action}, next {next}) = {value} is not a valid probability")]
    TransitionEntry { scenario: usize, state: usize, action: usize, next: usize, value: f64 },

    #[error("cost entry (scenario {scenario}, state {state}, action {action}) = {value} must be finite and nonnegative")]
    CostEntry { scenario: usize, state: usize, action: usize, value: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("policy is invalid for the model dimensions: {0}")]
    InvalidPolicy(String),

    #[error("weighted sample is empty")]
    EmptySample,

    #[error("scenario selection is empty")]
    EmptySelection,

    #[error("search space too large: {states} states x {actions} actions gives {size:e} deterministic policies (limit {limit:e})")]
    SearchSpaceTooLarge { states: usize, actions: usize, size: f64, limit: f64 },

    #[error("scenario fixing is infeasible: probability {forced0} forced to zero exceeds 1 - alpha = {budget} (bound inconsistency)")]
    InfeasibleFixing { forced0: f64, budget: f64 },

    #[error("scenario {scenario} is forced both on and off (floor {floor} above cutoff {cutoff}, ceiling {ceiling} below lower bound {lower}); bounds are inconsistent")]
    FixingConflict { scenario: usize, floor: f64, cutoff: f64, ceiling: f64, lower: f64 },

    #[error("incumbent upper bound {incumbent} lies below the lower bound {lower_bound}; it cannot come from a feasible policy")]
    InvalidIncumbent { incumbent: f64, lower_bound: f64 },

    #[error("bounds cache was computed for alpha = {cache_alpha} but the solver was called with alpha = {solver_alpha}")]
    CacheAlphaMismatch { cache_alpha: f64, solver_alpha: f64 },

    #[error("bounds cache dimensions ({cache_states} states, {cache_scenarios} scenarios) do not match the model ({model_states} states, {model_scenarios} scenarios)")]
    CacheDimensionMismatch {
        cache_states: usize,
        cache_scenarios: usize,
        model_states: usize,
        model_scenarios: usize,
    },

    #[error("invalid inventory configuration: {0}")]
    InvalidInventoryConfig(String),

    #[error("degenerate truncation: both demand and supply supports collapse to zero for positive rates (tail_eps too large)")]
    DegenerateTruncation,

    #[error("missing bounds cache: variant requires tightened coefficients")]
    MissingCache,

    #[error("scenario table parse error at line {line}: {message}")]
    ScenarioTable { line: usize, message: String },

    #[error("instance file error: {0}")]
    InstanceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
