//! Core data model: scenario-indexed MDPs, policies, and per-scenario
//! policy evaluation / optimal value computation.
//!
//! A model holds one cost tensor and one transition tensor per scenario,
//! together with the scenario distribution. Evaluation solves the fixed
//! point of the policy-induced Bellman operator for a single scenario,
//! either by a direct linear solve or by successive approximation.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::linalg::lu_solve;
use crate::scalar::Scalar;

/// States above this size switch policy evaluation from the dense LU solve
/// to successive approximation.
pub const DIRECT_SOLVE_MAX_STATES: usize = 512;

/// Default evaluation tolerance used by operations that do not take one.
pub const DEFAULT_EVAL_TOL: f64 = 1e-8;

/// Cost and transition tensors of a single scenario.
///
/// `cost` is indexed `(state, action)`, `trans` is indexed
/// `(state, action, next_state)`. Invariants (nonnegative finite costs,
/// stochastic transition rows) are enforced by [`UncertainMdp::new`], which
/// is the only way these tensors enter a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioParams<T> {
    pub cost: Array2<T>,
    pub trans: Array3<T>,
}

/// An MDP whose parameters are uncertain over a finite scenario set.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainMdp<T> {
    gamma: T,
    q: Vec<T>,
    scenarios: Vec<ScenarioParams<T>>,
    probs: Vec<T>,
}

impl<T: Scalar> UncertainMdp<T> {
    /// Build a model, validating every invariant. Violations are hard errors.
    ///
    /// Checks: `0 <= gamma < 1`; `q` and `probs` are probability vectors
    /// summing to 1 within the scalar's validation tolerance (`probs`
    /// entries strictly positive); all scenarios share the dimensions of the
    /// first; every cost entry finite and nonnegative; every transition row
    /// stochastic.
    pub fn new(
        gamma: T,
        q: Vec<T>,
        scenarios: Vec<ScenarioParams<T>>,
        probs: Vec<T>,
    ) -> Result<Self> {
        let tol = T::prob_tol();
        let tol_f = tol.to_f64().unwrap_or(1e-9);

        if !(gamma >= T::zero() && gamma < T::one()) {
            return Err(Error::GammaOutOfRange(gamma.to_f64().unwrap_or(f64::NAN)));
        }
        if scenarios.is_empty() {
            return Err(Error::DimensionMismatch("model needs at least one scenario".into()));
        }
        let n_states = scenarios[0].cost.nrows();
        let n_actions = scenarios[0].cost.ncols();
        if n_states == 0 || n_actions == 0 {
            return Err(Error::DimensionMismatch(
                "model needs at least one state and one action".into(),
            ));
        }
        if q.len() != n_states {
            return Err(Error::DimensionMismatch(format!(
                "q has length {} but the model has {} states",
                q.len(),
                n_states
            )));
        }
        if probs.len() != scenarios.len() {
            return Err(Error::DimensionMismatch(format!(
                "probs has length {} but there are {} scenarios",
                probs.len(),
                scenarios.len()
            )));
        }

        check_prob_vector("q", &q, tol, false)?;
        check_prob_vector("probs", &probs, tol, true)?;

        for (s, scn) in scenarios.iter().enumerate() {
            if scn.cost.dim() != (n_states, n_actions) {
                return Err(Error::DimensionMismatch(format!(
                    "scenario {s} cost tensor is {:?}, expected ({n_states}, {n_actions})",
                    scn.cost.dim()
                )));
            }
            if scn.trans.dim() != (n_states, n_actions, n_states) {
                return Err(Error::DimensionMismatch(format!(
                    "scenario {s} transition tensor is {:?}, expected ({n_states}, {n_actions}, {n_states})",
                    scn.trans.dim()
                )));
            }
            for i in 0..n_states {
                for a in 0..n_actions {
                    let c = scn.cost[(i, a)];
                    if !c.is_finite() || c < T::zero() {
                        return Err(Error::CostEntry {
                            scenario: s,
                            state: i,
                            action: a,
                            value: c.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    let mut sum = T::zero();
                    for j in 0..n_states {
                        let p = scn.trans[(i, a, j)];
                        if !p.is_finite() || p < T::zero() || p > T::one() + tol {
                            return Err(Error::TransitionEntry {
                                scenario: s,
                                state: i,
                                action: a,
                                next: j,
                                value: p.to_f64().unwrap_or(f64::NAN),
                            });
                        }
                        sum = sum + p;
                    }
                    if (sum - T::one()).abs() > tol {
                        return Err(Error::TransitionRowSum {
                            scenario: s,
                            state: i,
                            action: a,
                            sum: sum.to_f64().unwrap_or(f64::NAN),
                            tol: tol_f,
                        });
                    }
                }
            }
        }

        Ok(Self { gamma, q, scenarios, probs })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn scenarios(&self) -> &[ScenarioParams<T>] {
        &self.scenarios
    }

    pub fn scenario(&self, s: usize) -> &ScenarioParams<T> {
        &self.scenarios[s]
    }

    pub fn n_states(&self) -> usize {
        self.scenarios[0].cost.nrows()
    }

    pub fn n_actions(&self) -> usize {
        self.scenarios[0].cost.ncols()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }
}

fn check_prob_vector<T: Scalar>(
    name: &'static str,
    v: &[T],
    tol: T,
    strictly_positive: bool,
) -> Result<()> {
    let mut sum = T::zero();
    for (i, &p) in v.iter().enumerate() {
        let bad = !p.is_finite()
            || p < T::zero()
            || p > T::one() + tol
            || (strictly_positive && p <= T::zero());
        if bad {
            return Err(Error::ProbabilityEntry {
                name,
                index: i,
                value: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        sum = sum + p;
    }
    if (sum - T::one()).abs() > tol {
        return Err(Error::ProbabilityVectorSum {
            name,
            sum: sum.to_f64().unwrap_or(f64::NAN),
            tol: tol.to_f64().unwrap_or(1e-9),
        });
    }
    Ok(())
}

/// A stationary policy: either a deterministic state-to-action map or a
/// randomized state-by-action probability matrix.
///
/// A deterministic policy is semantically the unit-row randomized policy;
/// evaluation treats them identically (and exactly so, since multiplying by
/// the unit row is exact in floating point).
#[derive(Debug, Clone, PartialEq)]
pub enum Policy<T> {
    Deterministic(Vec<usize>),
    Randomized(Array2<T>),
}

impl<T: Scalar> Policy<T> {
    pub fn deterministic(actions: Vec<usize>) -> Self {
        Policy::Deterministic(actions)
    }

    /// Build a randomized policy, validating that every row is a
    /// probability distribution over actions.
    pub fn randomized(weights: Array2<T>) -> Result<Self> {
        let tol = T::prob_tol();
        for (i, row) in weights.rows().into_iter().enumerate() {
            let mut sum = T::zero();
            for (a, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < T::zero() || w > T::one() + tol {
                    return Err(Error::InvalidPolicy(format!(
                        "weight ({i}, {a}) = {w} is not a probability"
                    )));
                }
                sum = sum + w;
            }
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidPolicy(format!(
                    "weights for state {i} sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Policy::Randomized(weights))
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Policy::Deterministic(_))
    }

    pub fn as_deterministic(&self) -> Option<&[usize]> {
        match self {
            Policy::Deterministic(actions) => Some(actions),
            Policy::Randomized(_) => None,
        }
    }

    /// The unit-row randomized encoding of this policy.
    pub fn to_randomized(&self, n_actions: usize) -> Array2<T> {
        match self {
            Policy::Deterministic(actions) => {
                let mut w = Array2::zeros((actions.len(), n_actions));
                for (i, &a) in actions.iter().enumerate() {
                    w[(i, a)] = T::one();
                }
                w
            }
            Policy::Randomized(w) => w.clone(),
        }
    }

    /// Check this policy against the model dimensions.
    pub fn validate_for(&self, mdp: &UncertainMdp<T>) -> Result<()> {
        match self {
            Policy::Deterministic(actions) => {
                if actions.len() != mdp.n_states() {
                    return Err(Error::InvalidPolicy(format!(
                        "policy covers {} states, model has {}",
                        actions.len(),
                        mdp.n_states()
                    )));
                }
                for (i, &a) in actions.iter().enumerate() {
                    if a >= mdp.n_actions() {
                        return Err(Error::InvalidPolicy(format!(
                            "state {i} assigned action {a}, model has {} actions",
                            mdp.n_actions()
                        )));
                    }
                }
                Ok(())
            }
            Policy::Randomized(w) => {
                if w.dim() != (mdp.n_states(), mdp.n_actions()) {
                    return Err(Error::InvalidPolicy(format!(
                        "weight matrix is {:?}, model is ({}, {})",
                        w.dim(),
                        mdp.n_states(),
                        mdp.n_actions()
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Expected discounted cost-to-go per state for a fixed policy and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T> {
    values: Vec<T>,
}

impl<T: Scalar> ValueFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Aggregate under a state distribution: `sum_i q_i v_i`.
    pub fn weighted(&self, q: &[T]) -> T {
        self.values.iter().zip(q).map(|(&v, &w)| v * w).sum()
    }
}

/// Which optimum [`optimal_value`] computes per state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Policy-induced immediate cost vector `c_pi` for one scenario.
pub(crate) fn policy_cost<T: Scalar>(scn: &ScenarioParams<T>, pol: &Policy<T>) -> Vec<T> {
    let n_states = scn.cost.nrows();
    match pol {
        Policy::Deterministic(actions) => {
            (0..n_states).map(|i| scn.cost[(i, actions[i])]).collect()
        }
        Policy::Randomized(w) => (0..n_states)
            .map(|i| {
                (0..scn.cost.ncols())
                    .map(|a| w[(i, a)] * scn.cost[(i, a)])
                    .sum()
            })
            .collect(),
    }
}

/// Policy-induced transition matrix `P_pi` for one scenario.
pub(crate) fn policy_trans<T: Scalar>(scn: &ScenarioParams<T>, pol: &Policy<T>) -> Array2<T> {
    let n_states = scn.trans.dim().0;
    let n_actions = scn.trans.dim().1;
    let mut p = Array2::zeros((n_states, n_states));
    match pol {
        Policy::Deterministic(actions) => {
            for i in 0..n_states {
                for j in 0..n_states {
                    p[(i, j)] = scn.trans[(i, actions[i], j)];
                }
            }
        }
        Policy::Randomized(w) => {
            for i in 0..n_states {
                for j in 0..n_states {
                    let mut acc = T::zero();
                    for a in 0..n_actions {
                        acc = acc + w[(i, a)] * scn.trans[(i, a, j)];
                    }
                    p[(i, j)] = acc;
                }
            }
        }
    }
    p
}

/// Fixed point of the policy-induced Bellman operator for scenario `s`.
///
/// Uses the direct linear solve of `(I - gamma P_pi) v = c_pi` up to
/// [`DIRECT_SOLVE_MAX_STATES`] states and successive approximation beyond.
/// Either way the result satisfies `||v - (c_pi + gamma P_pi v)||_inf <= tol`.
pub fn evaluate_policy<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    pol: &Policy<T>,
    tol: T,
) -> Result<ValueFunction<T>> {
    if !(tol > T::zero()) {
        return Err(Error::NonFinite("tolerance must be positive".into()));
    }
    if mdp.n_states() <= DIRECT_SOLVE_MAX_STATES {
        evaluate_policy_direct(mdp, s, pol)
    } else {
        evaluate_policy_iterative(mdp, s, pol, tol)
    }
}

/// Policy evaluation by dense LU solve of `(I - gamma P_pi) v = c_pi`.
pub fn evaluate_policy_direct<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    pol: &Policy<T>,
) -> Result<ValueFunction<T>> {
    pol.validate_for(mdp)?;
    check_scenario_index(mdp, s)?;
    let scn = mdp.scenario(s);
    let c = policy_cost(scn, pol);
    let p = policy_trans(scn, pol);
    let n = mdp.n_states();
    let gamma = mdp.gamma();

    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { T::one() } else { T::zero() };
            a[(i, j)] = d - gamma * p[(i, j)];
        }
    }
    let v = lu_solve(a, c)?;
    Ok(ValueFunction::new(v))
}

/// Policy evaluation by successive approximation, stopped when the sup-norm
/// step drops below `tol * (1 - gamma) / gamma`.
pub fn evaluate_policy_iterative<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    pol: &Policy<T>,
    tol: T,
) -> Result<ValueFunction<T>> {
    pol.validate_for(mdp)?;
    check_scenario_index(mdp, s)?;
    if !(tol > T::zero()) {
        return Err(Error::NonFinite("tolerance must be positive".into()));
    }
    let scn = mdp.scenario(s);
    let c = policy_cost(scn, pol);
    let p = policy_trans(scn, pol);
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let threshold = stop_threshold(tol, gamma);

    let mut v = vec![T::zero(); n];
    loop {
        let mut next = c.clone();
        let mut delta = T::zero();
        for i in 0..n {
            let mut acc = T::zero();
            for j in 0..n {
                acc = acc + p[(i, j)] * v[j];
            }
            next[i] = next[i] + gamma * acc;
            let step = (next[i] - v[i]).abs();
            if step > delta {
                delta = step;
            }
            if !next[i].is_finite() {
                return Err(Error::NonFinite(format!("value iterate at state {i}")));
            }
        }
        v = next;
        if delta < threshold {
            return Ok(ValueFunction::new(v));
        }
    }
}

/// `tol * (1 - gamma) / gamma`, the sup-norm step below which the iterate is
/// within `tol` of the fixed point. Infinite for `gamma = 0` (one sweep is
/// exact).
pub(crate) fn stop_threshold<T: Scalar>(tol: T, gamma: T) -> T {
    if gamma == T::zero() {
        T::infinity()
    } else {
        tol * (T::one() - gamma) / gamma
    }
}

/// `q . v` for a fixed policy under scenario `s`: the expected total
/// discounted cost of the induced Markov chain.
pub fn expected_cost<T: Scalar>(mdp: &UncertainMdp<T>, s: usize, pol: &Policy<T>) -> Result<T> {
    let v = evaluate_policy(mdp, s, pol, T::of(DEFAULT_EVAL_TOL))?;
    Ok(v.weighted(mdp.q()))
}

/// Sup-norm Bellman residual `||v - (c_pi + gamma P_pi v)||_inf` of a value
/// function under a fixed policy and scenario.
pub fn bellman_residual<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    pol: &Policy<T>,
    v: &ValueFunction<T>,
) -> Result<T> {
    pol.validate_for(mdp)?;
    check_scenario_index(mdp, s)?;
    let scn = mdp.scenario(s);
    let c = policy_cost(scn, pol);
    let p = policy_trans(scn, pol);
    let gamma = mdp.gamma();
    let n = mdp.n_states();
    let mut worst = T::zero();
    for i in 0..n {
        let mut acc = T::zero();
        for j in 0..n {
            acc = acc + p[(i, j)] * v.values()[j];
        }
        let r = (v.values()[i] - (c[i] + gamma * acc)).abs();
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// Optimal (min or max over actions) value function of a single scenario,
/// by value iteration, with the greedy deterministic policy.
///
/// Ties in the greedy extraction are broken by the smallest action index.
/// The min sense iterates upward from zero and the max sense downward from
/// `max cost / (1 - gamma)`, so the aggregate `q . v` is a one-sided bound
/// on the true optimum in the safe direction even before full convergence.
pub fn optimal_value<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    sense: Sense,
    tol: T,
) -> Result<(ValueFunction<T>, Policy<T>)> {
    check_scenario_index(mdp, s)?;
    if !(tol > T::zero()) {
        return Err(Error::NonFinite("tolerance must be positive".into()));
    }
    let scn = mdp.scenario(s);
    let n = mdp.n_states();
    let n_actions = mdp.n_actions();
    let gamma = mdp.gamma();
    let threshold = stop_threshold(tol, gamma);

    let mut v = match sense {
        Sense::Min => vec![T::zero(); n],
        Sense::Max => {
            let mut cmax = T::zero();
            for &c in scn.cost.iter() {
                if c > cmax {
                    cmax = c;
                }
            }
            let start = if gamma == T::zero() { cmax } else { cmax / (T::one() - gamma) };
            vec![start; n]
        }
    };

    loop {
        let mut next = vec![T::zero(); n];
        let mut delta = T::zero();
        for i in 0..n {
            let mut best = T::nan();
            for a in 0..n_actions {
                let mut acc = T::zero();
                for j in 0..n {
                    acc = acc + scn.trans[(i, a, j)] * v[j];
                }
                let q_ia = scn.cost[(i, a)] + gamma * acc;
                let better = match sense {
                    Sense::Min => !(best <= q_ia),
                    Sense::Max => !(best >= q_ia),
                };
                if a == 0 || better {
                    best = q_ia;
                }
            }
            if !best.is_finite() {
                return Err(Error::NonFinite(format!("optimal value iterate at state {i}")));
            }
            next[i] = best;
            let step = (next[i] - v[i]).abs();
            if step > delta {
                delta = step;
            }
        }
        v = next;
        if delta < threshold {
            break;
        }
    }

    // Greedy extraction against the converged values, smallest index wins ties.
    let mut actions = vec![0usize; n];
    for i in 0..n {
        let mut best = T::nan();
        let mut best_a = 0usize;
        for a in 0..n_actions {
            let mut acc = T::zero();
            for j in 0..n {
                acc = acc + scn.trans[(i, a, j)] * v[j];
            }
            let q_ia = scn.cost[(i, a)] + gamma * acc;
            let better = match sense {
                Sense::Min => q_ia < best,
                Sense::Max => q_ia > best,
            };
            if a == 0 || better {
                best = q_ia;
                best_a = a;
            }
        }
        actions[i] = best_a;
    }

    Ok((ValueFunction::new(v), Policy::deterministic(actions)))
}

fn check_scenario_index<T: Scalar>(mdp: &UncertainMdp<T>, s: usize) -> Result<()> {
    if s >= mdp.n_scenarios() {
        return Err(Error::DimensionMismatch(format!(
            "scenario index {s} out of range (model has {})",
            mdp.n_scenarios()
        )));
    }
    Ok(())
}
