//! Solvers for Markov decision processes whose costs and transition
//! probabilities are uncertain over a finite scenario set.
//!
//! The objective is the value-at-risk (alpha-quantile) of the expected
//! total discounted cost with respect to the scenario distribution: find
//! one stationary policy whose cost is covered by the smallest threshold
//! with probability at least alpha. The crate provides
//!
//! - the scenario-indexed model with per-scenario policy evaluation and
//!   optimal value computation ([`mdp`]),
//! - quantile machinery over finite samples ([`quantile`]),
//! - preprocessing bounds, scenario fixing and big-M tightening
//!   ([`preprocess`]),
//! - feasible-solution heuristics including a robust value iteration
//!   ([`heuristics`]),
//! - an exact branch-and-bound solver for deterministic policies with an
//!   enumeration oracle and comparison metrics ([`exact`]),
//! - LP-format model export for external MILP solvers ([`milp`]),
//! - a perishable-inventory instance generator ([`inventory`]), and
//! - a JSON instance file format ([`io`]).
//!
//! All numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the default `f64` instantiation used by the CLI
//! and the file formats.
//!
//! ```
//! use ndarray::{array, Array3};
//! use qmdp_core::{compute_bounds, solve_exact, ScenarioParams, SolveOptions, UncertainMdp};
//!
//! // One state, two actions, two equiprobable scenarios with swapped costs.
//! let trans: Array3<f64> = Array3::from_elem((1, 2, 1), 1.0);
//! let s1 = ScenarioParams { cost: array![[0.0, 2.0]], trans: trans.clone() };
//! let s2 = ScenarioParams { cost: array![[2.0, 0.0]], trans };
//! let mdp = UncertainMdp::new(0.99, vec![1.0], vec![s1, s2], vec![0.5, 0.5])?;
//!
//! let alpha = 0.9;
//! let cache = compute_bounds(&mdp, alpha, 1e-8)?;
//! let result = solve_exact(&mdp, alpha, &cache, &SolveOptions::default())?;
//! assert!((result.value - 200.0).abs() < 1e-6);
//! # Ok::<(), qmdp_core::Error>(())
//! ```

// Indexed loops are the clearest shape for the dense kernels here, and the
// negated comparisons are deliberate: they reject NaN along with the
// out-of-range values.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod heuristics;
pub mod inventory;
pub mod io;
pub mod linalg;
pub mod mdp;
pub mod milp;
pub mod preprocess;
pub mod quantile;
pub mod scalar;

pub use error::{Error, Result};
pub use exact::{brute_force, metrics, solve_exact, SolveOptions, SolveResult, SolveStatus};
pub use heuristics::{initial_solution, mean_value_policy, robust_policy_selection};
pub use mdp::{
    evaluate_policy, expected_cost, optimal_value, Policy, ScenarioParams, Sense, UncertainMdp,
    ValueFunction,
};
pub use milp::{export_model, ModelKind, ModelVariant};
pub use preprocess::{compute_bounds, fix_scenarios, valid_lb_cut, BoundsCache, ZFix};
pub use quantile::{var_alpha, var_of_policy, WeightedSample};
pub use scalar::Scalar;

/// Default `f64` instantiations of the main types.
pub type UncertainMdp64 = mdp::UncertainMdp<f64>;
pub type ScenarioParams64 = mdp::ScenarioParams<f64>;
pub type Policy64 = mdp::Policy<f64>;
pub type ValueFunction64 = mdp::ValueFunction<f64>;
pub type WeightedSample64 = quantile::WeightedSample<f64>;
pub type BoundsCache64 = preprocess::BoundsCache<f64>;
pub type SolveResult64 = exact::SolveResult<f64>;
pub type SolveOptions64 = exact::SolveOptions<f64>;

/// Single-precision aliases for the model types; the numeric contracts of
/// this crate (validation tolerances, solver defaults) are stated for the
/// `f64` instantiation.
pub type UncertainMdp32 = mdp::UncertainMdp<f32>;
pub type Policy32 = mdp::Policy<f32>;
