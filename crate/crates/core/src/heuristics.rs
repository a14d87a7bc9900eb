//! Feasible-solution generators: the mean-value policy and the two-phase
//! scenario-selection / robust-policy-selection heuristic.
//!
//! The two-phase heuristic first picks a maximal scenario subset whose
//! relaxed floors sit below the quantile of the floor vector, then solves a
//! rectangular relaxation of the robust problem restricted to that subset
//! with a min-max value iteration. The result is always a deterministic
//! policy, hence feasible for the deterministic-policy problem, and its
//! quantile value is a valid incumbent for the exact solver.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::mdp::{
    optimal_value, stop_threshold, Policy, ScenarioParams, Sense, UncertainMdp, ValueFunction,
};
use crate::preprocess::BoundsCache;
use crate::quantile::{check_alpha, var_alpha, var_of_policy, WeightedSample};
use crate::scalar::Scalar;

/// Default stopping tolerance of the robust value iteration.
pub const DEFAULT_ROBUST_EPS: f64 = 1e-6;

/// A scenario indicator vector together with its covered probability.
///
/// Invariant: the covered probability reaches `alpha`, and dropping any
/// single selected scenario would fall below it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSelection<T> {
    pub z: Vec<bool>,
    pub selected_prob: T,
}

impl<T> ScenarioSelection<T> {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter_map(|(s, &on)| if on { Some(s) } else { None })
            .collect()
    }
}

/// Optimal policy of the single MDP built from probability-weighted average
/// parameters.
///
/// Averaged transition rows are renormalized (the drift is pure rounding,
/// well within the validation tolerance) and the averaged model is solved
/// with a min-sense value iteration.
pub fn mean_value_policy<T: Scalar>(mdp: &UncertainMdp<T>, tol: T) -> Result<Policy<T>> {
    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let mut cost = Array2::zeros((n_states, n_actions));
    let mut trans = Array3::zeros((n_states, n_actions, n_states));

    for (s, scn) in mdp.scenarios().iter().enumerate() {
        let p = mdp.probs()[s];
        for i in 0..n_states {
            for a in 0..n_actions {
                cost[(i, a)] = cost[(i, a)] + p * scn.cost[(i, a)];
                for j in 0..n_states {
                    trans[(i, a, j)] = trans[(i, a, j)] + p * scn.trans[(i, a, j)];
                }
            }
        }
    }
    for i in 0..n_states {
        for a in 0..n_actions {
            let mut sum = T::zero();
            for j in 0..n_states {
                sum = sum + trans[(i, a, j)];
            }
            for j in 0..n_states {
                trans[(i, a, j)] = trans[(i, a, j)] / sum;
            }
        }
    }

    let mean = UncertainMdp::new(
        mdp.gamma(),
        mdp.q().to_vec(),
        vec![ScenarioParams { cost, trans }],
        vec![T::one()],
    )?;
    let (_, policy) = optimal_value(&mean, 0, Sense::Min, tol)?;
    Ok(policy)
}

/// One application of the robust Bellman operator over the selected
/// scenarios: `v'_i = min_a max_{s in S} (c_i^s(a) + gamma sum_j P^s(a) v_j)`.
///
/// Returns the updated values and the per-state minimizing action (smallest
/// index on ties). Exposed so callers can check residuals and contraction.
pub fn robust_bellman_apply<T: Scalar>(
    mdp: &UncertainMdp<T>,
    selected: &[usize],
    v: &[T],
) -> Result<(Vec<T>, Vec<usize>)> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let gamma = mdp.gamma();
    let mut next = vec![T::zero(); n_states];
    let mut actions = vec![0usize; n_states];

    for i in 0..n_states {
        let mut best = T::infinity();
        let mut best_a = 0usize;
        for a in 0..n_actions {
            let mut worst = T::neg_infinity();
            for &s in selected {
                let scn = mdp.scenario(s);
                let mut acc = T::zero();
                for j in 0..n_states {
                    acc = acc + scn.trans[(i, a, j)] * v[j];
                }
                let val = scn.cost[(i, a)] + gamma * acc;
                if val > worst {
                    worst = val;
                }
            }
            if worst < best {
                best = worst;
                best_a = a;
            }
        }
        next[i] = best;
        actions[i] = best_a;
    }
    Ok((next, actions))
}

/// Robust value iteration over the scenarios selected by `z`.
///
/// Iterates the rectangular min-max operator from a positive start (the
/// per-state worst immediate cost over selected scenarios and actions,
/// divided by `1 - gamma`) until the sup-norm step drops below
/// `(1 - gamma) eps / gamma`, then returns the greedy deterministic policy
/// of the final application and the last iterate.
pub fn robust_policy_selection<T: Scalar>(
    mdp: &UncertainMdp<T>,
    z: &[bool],
    eps: T,
) -> Result<(Policy<T>, ValueFunction<T>)> {
    if z.len() != mdp.n_scenarios() {
        return Err(Error::DimensionMismatch(format!(
            "indicator vector covers {} scenarios, model has {}",
            z.len(),
            mdp.n_scenarios()
        )));
    }
    if !(eps > T::zero()) {
        return Err(Error::NonFinite("eps must be positive".into()));
    }
    let selected: Vec<usize> = (0..z.len()).filter(|&s| z[s]).collect();
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }

    let n_states = mdp.n_states();
    let gamma = mdp.gamma();
    let horizon = if gamma == T::zero() { T::one() } else { T::one() / (T::one() - gamma) };
    let mut v = vec![T::zero(); n_states];
    for i in 0..n_states {
        let mut cmax = T::zero();
        for &s in &selected {
            let scn = mdp.scenario(s);
            for a in 0..mdp.n_actions() {
                if scn.cost[(i, a)] > cmax {
                    cmax = scn.cost[(i, a)];
                }
            }
        }
        v[i] = cmax * horizon;
    }

    let threshold = stop_threshold(eps, gamma);
    loop {
        let (next, actions) = robust_bellman_apply(mdp, &selected, &v)?;
        let mut delta = T::zero();
        for i in 0..n_states {
            let step = (next[i] - v[i]).abs();
            if step > delta {
                delta = step;
            }
            if !next[i].is_finite() {
                return Err(Error::NonFinite(format!("robust iterate at state {i}")));
            }
        }
        v = next;
        if delta < threshold {
            return Ok((Policy::deterministic(actions), ValueFunction::new(v)));
        }
    }
}

/// Scenario-selection phase: a maximal subset of scenarios whose relaxed
/// floors lie at or below the quantile of the floor vector.
///
/// Starts from the quantile's covering prefix (ascending floors, ties by
/// scenario index). If the prefix carries slack, redundant members are
/// dropped (largest probability first, ties by index) until removing any
/// selected scenario would fall below `alpha` -- the maximality condition.
pub fn select_scenarios<T: Scalar>(
    cache: &BoundsCache<T>,
    probs: &[T],
    alpha: T,
) -> Result<ScenarioSelection<T>> {
    check_alpha(alpha)?;
    let sample = WeightedSample::new(cache.b_under.clone(), probs.to_vec(), alpha)?;
    let result = var_alpha(&sample)?;
    let mut members: Vec<usize> = result.satisfied_set();
    let mut covered: T = members.iter().map(|&s| probs[s]).sum();

    loop {
        // Drop the redundant member with the largest probability (ties by
        // the larger scenario index) until every member is needed.
        let mut drop: Option<usize> = None;
        let mut drop_p = T::neg_infinity();
        for (pos, &s) in members.iter().enumerate() {
            if covered - probs[s] >= alpha && probs[s] >= drop_p {
                drop_p = probs[s];
                drop = Some(pos);
            }
        }
        match drop {
            Some(pos) => {
                covered = covered - probs[members[pos]];
                members.remove(pos);
            }
            None => break,
        }
    }

    let mut z = vec![false; probs.len()];
    for &s in &members {
        z[s] = true;
    }
    Ok(ScenarioSelection { z, selected_prob: covered })
}

/// Two-phase heuristic: scenario selection from the cached floors, then
/// robust policy selection over the chosen subset.
///
/// The returned value is the policy's true quantile, recomputed over all
/// scenarios, so it is always a feasible upper bound on the optimum.
pub fn initial_solution<T: Scalar>(
    mdp: &UncertainMdp<T>,
    cache: &BoundsCache<T>,
    alpha: T,
    eps: T,
) -> Result<(Policy<T>, T, ScenarioSelection<T>)> {
    let sel = select_scenarios(cache, mdp.probs(), alpha)?;
    let (policy, _) = robust_policy_selection(mdp, &sel.z, eps)?;
    let (value, _) = var_of_policy(mdp, &policy, alpha)?;
    Ok((policy, value, sel))
}

/// Single-swap hill climbing on the scenario indicator vector -- an
/// optional refinement of [`initial_solution`], off unless called.
///
/// Each step trades one selected scenario for one unselected scenario
/// (keeping the cover feasible), re-runs the robust policy selection, and
/// keeps the swap if the true quantile value improves.
pub fn local_search_selection<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    eps: T,
    start: (Policy<T>, T, ScenarioSelection<T>),
) -> Result<(Policy<T>, T, ScenarioSelection<T>)> {
    let (mut policy, mut value, mut sel) = start;
    loop {
        let mut improved = false;
        let selected = sel.selected_indices();
        let unselected: Vec<usize> =
            (0..mdp.n_scenarios()).filter(|s| !sel.z[*s]).collect();
        'swap: for &out in &selected {
            for &inn in &unselected {
                let new_prob = sel.selected_prob - mdp.probs()[out] + mdp.probs()[inn];
                if new_prob < alpha {
                    continue;
                }
                let mut z = sel.z.clone();
                z[out] = false;
                z[inn] = true;
                let (cand_policy, _) = robust_policy_selection(mdp, &z, eps)?;
                let (cand_value, _) = var_of_policy(mdp, &cand_policy, alpha)?;
                if cand_value < value {
                    policy = cand_policy;
                    value = cand_value;
                    sel = ScenarioSelection { z, selected_prob: new_prob };
                    improved = true;
                    break 'swap;
                }
            }
        }
        if !improved {
            return Ok((policy, value, sel));
        }
    }
}
