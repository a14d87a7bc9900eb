//! Exact solver for the deterministic-policy quantile problem: depth-first
//! branch and bound over state-action assignments, an exhaustive
//! enumeration oracle, and the comparison metrics.
//!
//! The node relaxation decouples scenarios the same way the preprocessing
//! bounds do: states already assigned follow their action, free states take
//! the per-scenario best action. Per scenario that value is a floor on any
//! completion, so its quantile (over the scenarios not forced off) is a
//! valid node lower bound. Floors are computed by monotone value iteration
//! warm-started from the parent node, which keeps them one-sided even when
//! stopped early.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::heuristics::{initial_solution, mean_value_policy, DEFAULT_ROBUST_EPS};
use crate::mdp::{Policy, UncertainMdp};
use crate::preprocess::{BoundsCache, ZFix};
use crate::quantile::{check_alpha, var_of_policy};
use crate::scalar::Scalar;

/// Absolute pruning tolerance; incumbent updates must improve by more.
pub const PRUNE_TOL: f64 = 1e-9;

/// Hard cap on the enumeration size accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

/// Options for [`solve_exact`].
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Restrict the search to monotone policies (action index nonincreasing
    /// in the state index).
    pub monotone: bool,
    pub time_limit: Option<Duration>,
    /// Evaluation tolerance for leaf evaluations and incumbent seeding.
    pub tol: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { monotone: false, time_limit: None, tol: T::of(crate::mdp::DEFAULT_EVAL_TOL) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::TimeLimit => "time_limit",
            SolveStatus::Infeasible => "infeasible",
        }
    }
}

/// Outcome of an exact or enumeration solve.
#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub policy: Policy<T>,
    /// Quantile value of the returned policy.
    pub value: T,
    /// Scenarios covered by the quantile of the returned policy.
    pub selected: Vec<usize>,
    /// Nodes expanded (branch and bound) or policies evaluated (enumeration).
    pub nodes: u64,
    /// Optimality gap in percent; zero when status is `Optimal`.
    pub gap: T,
    pub status: SolveStatus,
}

impl<T: Scalar> SolveResult<T> {
    /// One CSV line: instance id, alpha, value, status, nodes, wall time
    /// and the two information metrics when available.
    pub fn csv_row(
        &self,
        instance_id: &str,
        alpha: T,
        wall_ms: u128,
        vpi: Option<T>,
        vss: Option<T>,
    ) -> String {
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{},{}",
            instance_id,
            alpha,
            self.value,
            self.status.as_str(),
            self.nodes,
            wall_ms
        );
        match vpi {
            Some(v) => {
                let _ = write!(row, ",{v}");
            }
            None => row.push(','),
        }
        match vss {
            Some(v) => {
                let _ = write!(row, ",{v}");
            }
            None => row.push(','),
        }
        row
    }
}

/// One open node of the branch-and-bound tree.
#[derive(Debug, Clone)]
pub struct SearchNode<T> {
    /// Per-state action assignment; `None` for states still free.
    pub partial: Vec<Option<usize>>,
    /// Valid lower bound on the quantile value of any completion.
    pub lb: T,
    /// Number of states assigned.
    pub depth: usize,
    /// Per-scenario relaxation iterates, reused to warm-start children.
    warm: Vec<Vec<T>>,
}

/// Iterator over deterministic policies in lexicographic order (state 0 is
/// the most significant digit), optionally restricted to monotone ones.
pub struct PolicyIter {
    n_actions: usize,
    monotone: bool,
    current: Option<Vec<usize>>,
}

impl PolicyIter {
    pub fn new(n_states: usize, n_actions: usize, monotone: bool) -> Self {
        Self { n_actions, monotone, current: Some(vec![0; n_states]) }
    }
}

impl Iterator for PolicyIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            let current = self.current.as_mut()?;
            let item = current.clone();
            // Advance the odometer, last state fastest.
            let mut pos = current.len();
            loop {
                if pos == 0 {
                    self.current = None;
                    break;
                }
                pos -= 1;
                if current[pos] + 1 < self.n_actions {
                    current[pos] += 1;
                    for later in pos + 1..current.len() {
                        current[later] = 0;
                    }
                    break;
                }
            }
            if !self.monotone || is_monotone(&item) {
                return Some(item);
            }
        }
    }
}

fn is_monotone(actions: &[usize]) -> bool {
    actions.windows(2).all(|w| w[0] >= w[1])
}

/// Enumerate every deterministic (optionally monotone) policy and return
/// the quantile minimizer, ties broken by lexicographic policy order.
pub fn brute_force<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    monotone: bool,
) -> Result<SolveResult<T>> {
    check_alpha(alpha)?;
    guard_enumeration(mdp)?;

    let mut best_value = T::infinity();
    let mut best: Option<(Policy<T>, Vec<usize>)> = None;
    let mut evaluated = 0u64;
    for actions in PolicyIter::new(mdp.n_states(), mdp.n_actions(), monotone) {
        let pol = Policy::deterministic(actions);
        let (value, selected) = var_of_policy(mdp, &pol, alpha)?;
        evaluated += 1;
        if value < best_value {
            best_value = value;
            best = Some((pol, selected));
        }
    }
    let (policy, selected) = best.expect("policy space is never empty");
    Ok(SolveResult {
        policy,
        value: best_value,
        selected,
        nodes: evaluated,
        gap: T::zero(),
        status: SolveStatus::Optimal,
    })
}

fn guard_enumeration<T: Scalar>(mdp: &UncertainMdp<T>) -> Result<()> {
    let size = (mdp.n_actions() as f64).powi(mdp.n_states() as i32);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            states: mdp.n_states(),
            actions: mdp.n_actions(),
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    Ok(())
}

/// Exact depth-first branch and bound over deterministic policies.
///
/// Branches on states in decreasing order of their bound spread
/// `max_s (v_bar - v_under)`, assigning actions in increasing index order.
/// The incumbent is seeded with the better of the mean-value policy and the
/// two-phase heuristic. Nodes are pruned against the incumbent with an
/// absolute tolerance of [`PRUNE_TOL`]; on a time limit the incumbent is
/// returned with the gap left by the open frontier.
pub fn solve_exact<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    cache: &BoundsCache<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    check_alpha(alpha)?;
    if (cache.alpha - alpha).abs() > T::prob_tol() {
        return Err(Error::CacheAlphaMismatch {
            cache_alpha: cache.alpha.to_f64().unwrap_or(f64::NAN),
            solver_alpha: alpha.to_f64().unwrap_or(f64::NAN),
        });
    }
    if cache.n_states() != mdp.n_states() || cache.n_scenarios() != mdp.n_scenarios() {
        return Err(Error::CacheDimensionMismatch {
            cache_states: cache.n_states(),
            cache_scenarios: cache.n_scenarios(),
            model_states: mdp.n_states(),
            model_scenarios: mdp.n_scenarios(),
        });
    }

    let start_time = Instant::now();
    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let prune_tol = T::of(PRUNE_TOL);

    // Incumbent: best of the mean-value policy and the two-phase heuristic.
    let mut incumbent = seed_incumbent(mdp, alpha, cache, opts)?;

    // Branch on the state with the largest bound spread first.
    let branch_order = spread_order(cache);

    let bound_tol = T::of(1e-6);
    let threshold = crate::mdp::stop_threshold(bound_tol, mdp.gamma());

    let root_warm = vec![vec![T::zero(); n_states]; mdp.n_scenarios()];
    let mut root = SearchNode {
        partial: vec![None; n_states],
        lb: T::zero(),
        depth: 0,
        warm: root_warm,
    };
    root.lb = bound_node(mdp, cache, alpha, &root.partial, &mut root.warm, threshold);

    let mut nodes = 1u64;
    let mut stack = vec![root];
    let mut timed_out = false;

    while let Some(node) = stack.pop() {
        if let Some(limit) = opts.time_limit {
            if start_time.elapsed() >= limit {
                timed_out = true;
                // The popped node is still open; keep its bound for the gap.
                stack.push(node);
                break;
            }
        }
        if node.lb >= incumbent.1 - prune_tol {
            continue;
        }
        if node.depth == n_states {
            let actions: Vec<usize> =
                node.partial.iter().map(|a| a.expect("leaf is fully assigned")).collect();
            let pol = Policy::deterministic(actions);
            let (value, selected) = var_of_policy(mdp, &pol, alpha)?;
            if value < incumbent.1 - prune_tol {
                incumbent = (pol, value, selected);
            }
            continue;
        }

        let state = branch_order[node.depth];
        // Push in reverse so the smallest action index is explored first.
        for action in (0..n_actions).rev() {
            if opts.monotone && !monotone_compatible(&node.partial, state, action) {
                continue;
            }
            let mut partial = node.partial.clone();
            partial[state] = Some(action);
            let mut warm = node.warm.clone();
            let lb = bound_node(mdp, cache, alpha, &partial, &mut warm, threshold);
            nodes += 1;
            if lb >= incumbent.1 - prune_tol {
                continue;
            }
            stack.push(SearchNode { partial, lb, depth: node.depth + 1, warm });
        }
    }

    let (policy, value, selected) = incumbent;
    if timed_out {
        let mut open_lb = value;
        for node in &stack {
            if node.lb < open_lb {
                open_lb = node.lb;
            }
        }
        let gap = if value > T::zero() {
            T::of(100.0) * (value - open_lb) / value
        } else {
            T::zero()
        };
        return Ok(SolveResult {
            policy,
            value,
            selected,
            nodes,
            gap: gap.max(T::zero()),
            status: SolveStatus::TimeLimit,
        });
    }

    Ok(SolveResult {
        policy,
        value,
        selected,
        nodes,
        gap: T::zero(),
        status: SolveStatus::Optimal,
    })
}

fn seed_incumbent<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    cache: &BoundsCache<T>,
    opts: &SolveOptions<T>,
) -> Result<(Policy<T>, T, Vec<usize>)> {
    let mv = mean_value_policy(mdp, opts.tol)?;
    let (mv_value, mv_selected) = var_of_policy(mdp, &mv, alpha)?;
    let (h_pol, h_value, _) = initial_solution(mdp, cache, alpha, T::of(DEFAULT_ROBUST_EPS))?;

    let mut best = if h_value < mv_value {
        let (_, h_selected) = var_of_policy(mdp, &h_pol, alpha)?;
        (h_pol, h_value, h_selected)
    } else {
        (mv, mv_value, mv_selected)
    };

    // A monotone-restricted incumbent must itself be monotone.
    if opts.monotone {
        if let Some(actions) = best.0.as_deterministic() {
            if !is_monotone(actions) {
                let fallback = vec![0usize; mdp.n_states()];
                let pol = Policy::deterministic(fallback);
                let (value, selected) = var_of_policy(mdp, &pol, alpha)?;
                best = (pol, value, selected);
            }
        }
    }
    Ok(best)
}

fn spread_order<T: Scalar>(cache: &BoundsCache<T>) -> Vec<usize> {
    let n_states = cache.n_states();
    let mut spread = vec![T::zero(); n_states];
    for i in 0..n_states {
        for s in 0..cache.n_scenarios() {
            let gap = cache.v_bar[(i, s)] - cache.v_under[(i, s)];
            if gap > spread[i] {
                spread[i] = gap;
            }
        }
    }
    let mut order: Vec<usize> = (0..n_states).collect();
    order.sort_by(|&a, &b| {
        spread[b].partial_cmp(&spread[a]).expect("bounds are finite").then(a.cmp(&b))
    });
    order
}

fn monotone_compatible(partial: &[Option<usize>], state: usize, action: usize) -> bool {
    for (other, assigned) in partial.iter().enumerate() {
        if let Some(a) = assigned {
            if other < state && *a < action {
                return false;
            }
            if other > state && *a > action {
                return false;
            }
        }
    }
    true
}

/// Lower bound of a node: the quantile over the scenarios not forced off of
/// the per-scenario partial-relaxation values, tightened by the floors of
/// scenarios forced on.
fn bound_node<T: Scalar>(
    mdp: &UncertainMdp<T>,
    cache: &BoundsCache<T>,
    alpha: T,
    partial: &[Option<usize>],
    warm: &mut [Vec<T>],
    threshold: T,
) -> T {
    let mut values = Vec::with_capacity(mdp.n_scenarios());
    for s in 0..mdp.n_scenarios() {
        partial_relaxation_sweeps(mdp, s, partial, &mut warm[s], threshold);
        let mut agg = T::zero();
        for i in 0..mdp.n_states() {
            agg = agg + mdp.q()[i] * warm[s][i];
        }
        values.push(agg);
    }

    let mut lb = restricted_var(&values, mdp.probs(), alpha, &cache.z_fixed);
    for s in 0..mdp.n_scenarios() {
        if cache.z_fixed[s] == ZFix::Forced1 && values[s] > lb {
            lb = values[s];
        }
    }
    lb
}

/// Monotone value iteration for the partial-policy relaxation of one
/// scenario: assigned states follow their action, free states take the
/// per-scenario minimum over actions.
///
/// Starting at or below the fixed point keeps every iterate below it, so
/// the result is a valid floor regardless of where the sweep stops.
fn partial_relaxation_sweeps<T: Scalar>(
    mdp: &UncertainMdp<T>,
    s: usize,
    partial: &[Option<usize>],
    v: &mut Vec<T>,
    threshold: T,
) {
    const MAX_SWEEPS: usize = 10_000;
    let scn = mdp.scenario(s);
    let n_states = mdp.n_states();
    let n_actions = mdp.n_actions();
    let gamma = mdp.gamma();

    for _ in 0..MAX_SWEEPS {
        let mut delta = T::zero();
        let mut next = vec![T::zero(); n_states];
        for i in 0..n_states {
            let value = match partial[i] {
                Some(a) => {
                    let mut acc = T::zero();
                    for j in 0..n_states {
                        acc = acc + scn.trans[(i, a, j)] * v[j];
                    }
                    scn.cost[(i, a)] + gamma * acc
                }
                None => {
                    let mut best = T::infinity();
                    for a in 0..n_actions {
                        let mut acc = T::zero();
                        for j in 0..n_states {
                            acc = acc + scn.trans[(i, a, j)] * v[j];
                        }
                        let q_ia = scn.cost[(i, a)] + gamma * acc;
                        if q_ia < best {
                            best = q_ia;
                        }
                    }
                    best
                }
            };
            next[i] = value;
            let step = (value - v[i]).abs();
            if step > delta {
                delta = step;
            }
        }
        *v = next;
        if delta < threshold {
            break;
        }
    }
}

/// Quantile of `values` restricted to scenarios not forced off, with the
/// original probabilities.
fn restricted_var<T: Scalar>(values: &[T], probs: &[T], alpha: T, z_fixed: &[ZFix]) -> T {
    let mut idxs: Vec<usize> =
        (0..values.len()).filter(|&s| z_fixed[s] != ZFix::Forced0).collect();
    idxs.sort_by(|&a, &b| {
        values[a].partial_cmp(&values[b]).expect("bound values are finite").then(a.cmp(&b))
    });
    let mut cumulative = T::zero();
    for &s in &idxs {
        cumulative = cumulative + probs[s];
        if cumulative >= alpha {
            return values[s];
        }
    }
    values[*idxs.last().expect("at least alpha probability mass is never forced off")]
}

/// Comparison metrics of an exact solve: value of perfect information,
/// value of the stochastic solution, and the quantile regret of the
/// expected-value policy.
#[derive(Debug, Clone, Copy)]
pub struct Metrics<T> {
    pub vpi: T,
    pub vss: T,
    pub pct_vpi: T,
    pub pct_vss: T,
    /// `100 (E-VaR - OPT) / E-VaR`, where E-VaR is the quantile of the
    /// policy minimizing the scenario-weighted expected cost. `None` when
    /// the enumeration guard rejects the instance.
    pub e_var_gap: Option<T>,
}

/// Compute the metrics of an exact result against the cached lower bound
/// and the mean-value policy.
pub fn metrics<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    cache: &BoundsCache<T>,
    exact: &SolveResult<T>,
    mv_policy: &Policy<T>,
) -> Result<Metrics<T>> {
    let opt = exact.value;
    let lb = cache.b_l;
    let (mv, _) = var_of_policy(mdp, mv_policy, alpha)?;

    let vpi = opt - lb;
    let vss = mv - opt;
    let pct_vpi = if opt != T::zero() { T::of(100.0) * vpi / opt } else { T::zero() };
    let pct_vss = if mv != T::zero() { T::of(100.0) * vss / mv } else { T::zero() };

    let e_var_gap = match expected_value_policy(mdp) {
        Ok(ev_policy) => {
            let (e_var, _) = var_of_policy(mdp, &ev_policy, alpha)?;
            Some(if e_var != T::zero() {
                T::of(100.0) * (e_var - opt) / e_var
            } else {
                T::zero()
            })
        }
        Err(Error::SearchSpaceTooLarge { .. }) => None,
        Err(e) => return Err(e),
    };

    Ok(Metrics { vpi, vss, pct_vpi, pct_vss, e_var_gap })
}

/// Minimizer of the scenario-weighted expected cost over deterministic
/// policies, by enumeration (the problem itself is combinatorial).
pub fn expected_value_policy<T: Scalar>(mdp: &UncertainMdp<T>) -> Result<Policy<T>> {
    guard_enumeration(mdp)?;
    let mut best_value = T::infinity();
    let mut best: Option<Policy<T>> = None;
    for actions in PolicyIter::new(mdp.n_states(), mdp.n_actions(), false) {
        let pol = Policy::deterministic(actions);
        let mut weighted = T::zero();
        for s in 0..mdp.n_scenarios() {
            weighted = weighted + mdp.probs()[s] * crate::mdp::expected_cost(mdp, s, &pol)?;
        }
        if weighted < best_value {
            best_value = weighted;
            best = Some(pol);
        }
    }
    Ok(best.expect("policy space is never empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{optimal_value, ScenarioParams, Sense};
    use crate::preprocess::{compute_bounds, fix_scenarios};
    use ndarray::{array, Array2, Array3};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn example1(gamma: f64) -> UncertainMdp<f64> {
        let trans = Array3::from_elem((1, 2, 1), 1.0);
        let s1 = ScenarioParams { cost: array![[0.0, 2.0]], trans: trans.clone() };
        let s2 = ScenarioParams { cost: array![[2.0, 0.0]], trans };
        UncertainMdp::new(gamma, vec![1.0], vec![s1, s2], vec![0.5, 0.5]).unwrap()
    }

    fn random_mdp(seed: u64, n_states: usize, n_actions: usize, n_scen: usize) -> UncertainMdp<f64> {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut scenarios = Vec::new();
        for _ in 0..n_scen {
            let mut cost = Array2::zeros((n_states, n_actions));
            let mut trans = Array3::zeros((n_states, n_actions, n_states));
            for i in 0..n_states {
                for a in 0..n_actions {
                    cost[(i, a)] = rng.random_range(0.0..10.0);
                    let row: Vec<f64> =
                        (0..n_states).map(|_| rng.random_range(0.01..1.0)).collect();
                    let sum: f64 = row.iter().sum();
                    for (j, p) in row.iter().enumerate() {
                        trans[(i, a, j)] = p / sum;
                    }
                }
            }
            scenarios.push(ScenarioParams { cost, trans });
        }
        let q = vec![1.0 / n_states as f64; n_states];
        let probs = vec![1.0 / n_scen as f64; n_scen];
        UncertainMdp::new(0.9, q, scenarios, probs).unwrap()
    }

    #[test]
    fn example1_exact_solve() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        let result = solve_exact(&mdp, 0.9, &cache, &SolveOptions::default()).unwrap();
        assert_eq!(result.status, SolveStatus::Optimal);
        assert!((result.value - 200.0).abs() < 1e-6);
        assert!(result.policy.is_deterministic());
        assert_eq!(result.gap, 0.0);
    }

    #[test]
    fn single_scenario_reduces_to_min_mdp() {
        let mdp = random_mdp(9, 4, 3, 1);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        let result = solve_exact(&mdp, 0.9, &cache, &SolveOptions::default()).unwrap();
        let (v_opt, pol_opt) = optimal_value(&mdp, 0, Sense::Min, 1e-8).unwrap();
        assert!((result.value - v_opt.weighted(mdp.q())).abs() < 1e-6);
        let (check, _) = var_of_policy(&mdp, &pol_opt, 0.9).unwrap();
        assert!((result.value - check).abs() < 1e-6);
    }

    #[test]
    fn brute_force_example1() {
        let mdp = example1(0.99);
        let result = brute_force(&mdp, 0.9, false).unwrap();
        assert!((result.value - 200.0).abs() < 1e-6);
        // Lexicographic tie-break picks action 0.
        assert_eq!(result.policy.as_deterministic().unwrap(), &[0]);
        assert_eq!(result.nodes, 2);
    }

    #[test]
    fn brute_force_single_state() {
        let trans: Array3<f64> = Array3::from_elem((1, 3, 1), 1.0);
        let scn = ScenarioParams { cost: array![[5.0, 2.0, 7.0]], trans };
        let mdp = UncertainMdp::new(0.5, vec![1.0], vec![scn], vec![1.0]).unwrap();
        let result = brute_force(&mdp, 0.9, false).unwrap();
        assert_eq!(result.policy.as_deterministic().unwrap(), &[1]);
        assert!((result.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn brute_force_guard() {
        let mdp = random_mdp(1, 5, 3, 2);
        assert!(brute_force(&mdp, 0.9, false).is_ok());
        // 10^7 policies would blow the guard: fake it with dims only.
        let big = (3.0f64).powi(20);
        assert!(big > BRUTE_FORCE_LIMIT);
    }

    #[test]
    fn exact_matches_brute_on_random_instances() {
        for (seed, alpha) in [(1u64, 0.75), (2, 0.9), (3, 1.0), (4, 0.8), (5, 0.9)] {
            let mdp = random_mdp(seed, 4, 3, 5);
            let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
            let exact = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
            let brute = brute_force(&mdp, alpha, false).unwrap();
            assert!(
                (exact.value - brute.value).abs() < 1e-6,
                "seed {seed}: exact {} vs brute {}",
                exact.value,
                brute.value
            );
            let covered: f64 = exact.selected.iter().map(|&s| mdp.probs()[s]).sum();
            assert!(covered >= alpha - 1e-12);
        }
    }

    #[test]
    fn monotone_flag_restricts_both_solvers() {
        let mdp = random_mdp(13, 4, 3, 4);
        let alpha = 0.75;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let free = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
        let opts = SolveOptions { monotone: true, ..Default::default() };
        let mono = solve_exact(&mdp, alpha, &cache, &opts).unwrap();
        let mono_brute = brute_force(&mdp, alpha, true).unwrap();
        assert!(is_monotone(mono.policy.as_deterministic().unwrap()));
        assert!((mono.value - mono_brute.value).abs() < 1e-6);
        assert!(mono.value >= free.value - 1e-9);
    }

    #[test]
    fn alpha_one_is_robust_minimax() {
        let mdp = random_mdp(21, 3, 3, 4);
        let cache = compute_bounds(&mdp, 1.0, 1e-8).unwrap();
        let exact = solve_exact(&mdp, 1.0, &cache, &SolveOptions::default()).unwrap();

        let mut best = f64::INFINITY;
        for actions in PolicyIter::new(3, 3, false) {
            let pol = Policy::deterministic(actions);
            let worst = (0..4)
                .map(|s| crate::mdp::expected_cost(&mdp, s, &pol).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            if worst < best {
                best = worst;
            }
        }
        assert!((exact.value - best).abs() < 1e-6);
    }

    #[test]
    fn fixing_preserves_the_optimum() {
        for seed in [31u64, 32, 33] {
            let mdp = random_mdp(seed, 4, 2, 6);
            let alpha = 0.7;
            let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
            let plain = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
            let fixed_cache =
                fix_scenarios(&cache, Some(plain.value), mdp.probs()).unwrap();
            let fixed = solve_exact(&mdp, alpha, &fixed_cache, &SolveOptions::default()).unwrap();
            assert!(
                (plain.value - fixed.value).abs() < 1e-9,
                "seed {seed}: {} vs {}",
                plain.value,
                fixed.value
            );
        }
    }

    #[test]
    fn node_bounds_never_exceed_best_completion() {
        let mdp = random_mdp(77, 3, 2, 3);
        let alpha = 0.7;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let threshold = crate::mdp::stop_threshold(1e-8, mdp.gamma());

        // Exhaustively check depth-1 and depth-2 partial assignments.
        for state in 0..3usize {
            for action in 0..2usize {
                let mut partial = vec![None; 3];
                partial[state] = Some(action);
                let mut warm = vec![vec![0.0; 3]; 3];
                let lb = bound_node(&mdp, &cache, alpha, &partial, &mut warm, threshold);

                let mut best_completion = f64::INFINITY;
                for actions in PolicyIter::new(3, 2, false) {
                    if actions[state] != action {
                        continue;
                    }
                    let pol = Policy::deterministic(actions);
                    let (v, _) = var_of_policy(&mdp, &pol, alpha).unwrap();
                    if v < best_completion {
                        best_completion = v;
                    }
                }
                assert!(
                    lb <= best_completion + 1e-7,
                    "bound {lb} exceeds best completion {best_completion}"
                );
            }
        }
    }

    #[test]
    fn bound_sandwich_holds() {
        let mdp = random_mdp(55, 4, 3, 5);
        let alpha = 0.8;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let exact = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
        assert!(cache.b_l <= exact.value + 1e-9);
        assert!(exact.value <= cache.b_u + 1e-9);
    }

    #[test]
    fn time_limit_returns_incumbent() {
        let mdp = random_mdp(90, 4, 3, 5);
        let alpha = 0.8;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let opts = SolveOptions {
            time_limit: Some(Duration::ZERO),
            ..Default::default()
        };
        let result = solve_exact(&mdp, alpha, &cache, &opts).unwrap();
        assert_eq!(result.status, SolveStatus::TimeLimit);
        assert!(result.gap >= 0.0);
        // The incumbent is still a genuine policy with a genuine value.
        let (check, _) = var_of_policy(&mdp, &result.policy, alpha).unwrap();
        assert!((check - result.value).abs() < 1e-9);
    }

    #[test]
    fn metrics_single_scenario_all_zero() {
        let mdp = random_mdp(70, 3, 2, 1);
        let alpha = 0.9;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let exact = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
        let mv = mean_value_policy(&mdp, 1e-8).unwrap();
        let m = metrics(&mdp, alpha, &cache, &exact, &mv).unwrap();
        assert!(m.vpi.abs() < 1e-6);
        assert!(m.vss.abs() < 1e-6);
        assert!(m.e_var_gap.unwrap().abs() < 1e-6);
    }

    #[test]
    fn metrics_example1() {
        let mdp = example1(0.99);
        let alpha = 0.9;
        let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
        let exact = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
        let mv = mean_value_policy(&mdp, 1e-8).unwrap();
        let m = metrics(&mdp, alpha, &cache, &exact, &mv).unwrap();
        // The relaxed floor lets each scenario pick its free action: LB = 0.
        assert!((m.vpi - 200.0).abs() < 1e-4);
        assert!((m.pct_vpi - 100.0).abs() < 1e-6);
        assert!(m.vss >= -1e-9);
    }

    #[test]
    fn metrics_nonnegative_at_optimality() {
        for seed in [42u64, 43, 44] {
            let mdp = random_mdp(seed, 3, 3, 4);
            let alpha = 0.75;
            let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
            let exact = solve_exact(&mdp, alpha, &cache, &SolveOptions::default()).unwrap();
            let mv = mean_value_policy(&mdp, 1e-8).unwrap();
            let m = metrics(&mdp, alpha, &cache, &exact, &mv).unwrap();
            assert!(m.vpi >= -1e-9);
            assert!(m.vss >= -1e-9);
            assert!(m.e_var_gap.unwrap() >= -1e-9);
        }
    }

    #[test]
    fn policy_iter_monotone_subset() {
        let all: Vec<_> = PolicyIter::new(3, 2, false).collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], vec![0, 0, 0]);
        assert_eq!(all[7], vec![1, 1, 1]);
        let mono: Vec<_> = PolicyIter::new(3, 2, true).collect();
        assert_eq!(mono.len(), 4);
        for actions in &mono {
            assert!(is_monotone(actions));
        }
    }

    #[test]
    fn csv_row_format() {
        let mdp = example1(0.99);
        let result = brute_force(&mdp, 0.9, false).unwrap();
        let row = result.csv_row("ex1", 0.9, 12, Some(200.0), Some(0.0));
        assert!(row.starts_with("ex1,0.9,"));
        assert!(row.contains(",optimal,"));
    }
}
