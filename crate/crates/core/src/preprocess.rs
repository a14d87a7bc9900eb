//! Preprocessing: per-scenario value bounds, quantile bounds on the optimal
//! objective, scenario fixing, and tightened big-M coefficients.
//!
//! Relaxing the requirement that one policy serves all scenarios decouples
//! the scenarios: solving each one to optimality in both senses yields
//! per-scenario envelopes `b_under[s] <= C(pi, s) <= b_bar[s]` valid for
//! every policy. Quantiles of those envelopes bound the optimal objective
//! from both sides, fix scenario indicators, and give the big-M terms and
//! McCormick bounds consumed by the exact solver and the model export.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::mdp::{optimal_value, Sense, UncertainMdp};
use crate::quantile::{check_alpha, var_alpha, WeightedSample};
use crate::scalar::Scalar;

/// Fixing status of a scenario indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZFix {
    /// The scenario can never be covered by the quantile (its floor exceeds
    /// the upper bound); its indicator is fixed to 0.
    Forced0,
    /// The scenario is always covered (its ceiling is below the lower
    /// bound); its indicator is fixed to 1.
    Forced1,
    Free,
}

/// Everything the bounding pass produces, shared read-only afterwards.
#[derive(Debug, Clone)]
pub struct BoundsCache<T> {
    /// Per-scenario maximum relaxed value (`q . v` of the max-sense solve).
    pub b_bar: Vec<T>,
    /// Per-scenario minimum relaxed value (`q . v` of the min-sense solve).
    pub b_under: Vec<T>,
    /// Per-state upper value bounds, indexed `(state, scenario)`.
    pub v_bar: Array2<T>,
    /// Per-state lower value bounds, indexed `(state, scenario)`.
    pub v_under: Array2<T>,
    /// Quantile of `b_under`: lower bound on the optimal objective.
    pub b_l: T,
    /// Quantile of `b_bar`: upper bound on the optimal objective.
    pub b_u: T,
    /// Indicator fixing per scenario.
    pub z_fixed: Vec<ZFix>,
    /// `b_u - b_l`, the tightened big-M of the quantile linking constraint.
    pub big_m_global: T,
    /// `v_bar - v_under` per `(state, scenario)`, the tightened Bellman big-M.
    pub big_m_state: Array2<T>,
    /// Confidence level the cache was computed for.
    pub alpha: T,
}

impl<T: Scalar> BoundsCache<T> {
    pub fn n_scenarios(&self) -> usize {
        self.b_bar.len()
    }

    pub fn n_states(&self) -> usize {
        self.v_bar.nrows()
    }

    /// Re-derive the quantile bounds and big-M for a new confidence level,
    /// reusing the per-scenario solves. Fixing status is reset to `Free`.
    pub fn with_alpha(&self, probs: &[T], alpha: T) -> Result<BoundsCache<T>> {
        check_alpha(alpha)?;
        let b_u = var_alpha(&WeightedSample::new(self.b_bar.clone(), probs.to_vec(), alpha)?)?.value;
        let b_l =
            var_alpha(&WeightedSample::new(self.b_under.clone(), probs.to_vec(), alpha)?)?.value;
        Ok(BoundsCache {
            b_bar: self.b_bar.clone(),
            b_under: self.b_under.clone(),
            v_bar: self.v_bar.clone(),
            v_under: self.v_under.clone(),
            b_l,
            b_u,
            z_fixed: vec![ZFix::Free; self.n_scenarios()],
            big_m_global: b_u - b_l,
            big_m_state: self.big_m_state.clone(),
            alpha,
        })
    }

    /// CSV dump of the per-scenario bounds and fixing status.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,b_under,b_bar,fixed\n");
        for s in 0..self.n_scenarios() {
            let status = match self.z_fixed[s] {
                ZFix::Forced0 => "forced0",
                ZFix::Forced1 => "forced1",
                ZFix::Free => "free",
            };
            let _ = writeln!(out, "{},{},{},{}", s, self.b_under[s], self.b_bar[s], status);
        }
        out
    }
}

/// Solve both relaxed problems per scenario and assemble the cache.
///
/// For each scenario the max-sense value iteration yields `b_bar[s]` and the
/// per-state ceilings, the min-sense one `b_under[s]` and the floors. The
/// alpha-quantiles of those vectors give `b_u` and `b_l`; big-M terms follow
/// as `b_u - b_l` and `v_bar - v_under`. Indicators all start `Free`; apply
/// [`fix_scenarios`] to use the bounds for elimination.
pub fn compute_bounds<T: Scalar>(
    mdp: &UncertainMdp<T>,
    alpha: T,
    tol: T,
) -> Result<BoundsCache<T>> {
    check_alpha(alpha)?;
    let n_states = mdp.n_states();
    let n_scenarios = mdp.n_scenarios();

    let mut b_bar = Vec::with_capacity(n_scenarios);
    let mut b_under = Vec::with_capacity(n_scenarios);
    let mut v_bar = Array2::zeros((n_states, n_scenarios));
    let mut v_under = Array2::zeros((n_states, n_scenarios));

    for s in 0..n_scenarios {
        let (v_max, _) = optimal_value(mdp, s, Sense::Max, tol)?;
        let (v_min, _) = optimal_value(mdp, s, Sense::Min, tol)?;
        b_bar.push(v_max.weighted(mdp.q()));
        b_under.push(v_min.weighted(mdp.q()));
        for i in 0..n_states {
            v_bar[(i, s)] = v_max.values()[i];
            v_under[(i, s)] = v_min.values()[i];
        }
    }

    let b_u = var_alpha(&WeightedSample::new(b_bar.clone(), mdp.probs().to_vec(), alpha)?)?.value;
    let b_l = var_alpha(&WeightedSample::new(b_under.clone(), mdp.probs().to_vec(), alpha)?)?.value;

    let mut big_m_state = Array2::zeros((n_states, n_scenarios));
    for i in 0..n_states {
        for s in 0..n_scenarios {
            big_m_state[(i, s)] = v_bar[(i, s)] - v_under[(i, s)];
        }
    }

    Ok(BoundsCache {
        b_bar,
        b_under,
        v_bar,
        v_under,
        b_l,
        b_u,
        z_fixed: vec![ZFix::Free; n_scenarios],
        big_m_global: b_u - b_l,
        big_m_state,
        alpha,
    })
}

/// Fix scenario indicators using the bounds and an optional incumbent.
///
/// A scenario whose floor exceeds `min(b_u, incumbent_ub)` can never satisfy
/// the quantile constraint at the optimum and is forced to 0; one whose
/// ceiling is below `b_l` is always satisfied and is forced to 1. Forcing
/// more than `1 - alpha` probability to 0 would make the chance constraint
/// infeasible, which signals inconsistent bounds and is reported as an
/// error rather than silently clamped.
pub fn fix_scenarios<T: Scalar>(
    cache: &BoundsCache<T>,
    incumbent_ub: Option<T>,
    probs: &[T],
) -> Result<BoundsCache<T>> {
    let mut out = cache.clone();
    let cutoff = match incumbent_ub {
        Some(ub) => if ub < cache.b_u { ub } else { cache.b_u },
        None => cache.b_u,
    };

    let mut forced0_mass = T::zero();
    for s in 0..cache.n_scenarios() {
        let off = cache.b_under[s] > cutoff;
        let on = cache.b_bar[s] < cache.b_l;
        if off && on {
            return Err(Error::FixingConflict {
                scenario: s,
                floor: cache.b_under[s].to_f64().unwrap_or(f64::NAN),
                cutoff: cutoff.to_f64().unwrap_or(f64::NAN),
                ceiling: cache.b_bar[s].to_f64().unwrap_or(f64::NAN),
                lower: cache.b_l.to_f64().unwrap_or(f64::NAN),
            });
        }
        out.z_fixed[s] = if off {
            forced0_mass = forced0_mass + probs[s];
            ZFix::Forced0
        } else if on {
            ZFix::Forced1
        } else {
            ZFix::Free
        };
    }

    let budget = T::one() - cache.alpha;
    if forced0_mass > budget + T::prob_tol() {
        return Err(Error::InfeasibleFixing {
            forced0: forced0_mass.to_f64().unwrap_or(f64::NAN),
            budget: budget.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(out)
}

/// The valid inequality `y >= b_under[s] * z_s`: any solution selecting
/// scenario `s` pays at least its relaxed floor.
pub fn valid_lb_cut<T: Scalar>(cache: &BoundsCache<T>, s: usize) -> T {
    cache.b_under[s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{expected_cost, Policy, ScenarioParams};
    use ndarray::{array, Array3};
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
    fn example1_bounds() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        for s in 0..2 {
            assert!(cache.b_under[s].abs() < 1e-6);
            assert!((cache.b_bar[s] - 200.0).abs() < 1e-4);
        }
        assert!(cache.b_l.abs() < 1e-6);
        assert!((cache.b_u - 200.0).abs() < 1e-4);
        assert!((cache.big_m_global - 200.0).abs() < 1e-4);
    }

    #[test]
    fn single_scenario_collapses_quantile() {
        let trans: Array3<f64> = Array3::from_elem((1, 2, 1), 1.0);
        let scn = ScenarioParams { cost: array![[3.0, 5.0]], trans };
        let mdp = UncertainMdp::new(0.5, vec![1.0], vec![scn], vec![1.0]).unwrap();
        let cache = compute_bounds(&mdp, 0.9, 1e-9).unwrap();
        // Min picks cost 3: 3/(1-0.5) = 6. Max: 5/(1-0.5) = 10.
        assert!((cache.b_l - 6.0).abs() < 1e-7);
        assert!((cache.b_l - cache.b_under[0]).abs() < 1e-12);
        for i in 0..1 {
            let m = cache.big_m_state[(i, 0)];
            assert!((m - (cache.v_bar[(i, 0)] - cache.v_under[(i, 0)])).abs() == 0.0);
        }
    }

    #[test]
    fn random_instance_bounds_envelope_every_policy() {
        let mdp = random_mdp(99, 5, 2, 3);
        let cache = compute_bounds(&mdp, 0.8, 1e-9).unwrap();
        // Enumerate all 2^5 deterministic policies against the envelopes.
        for code in 0..32usize {
            let actions: Vec<usize> = (0..5).map(|i| (code >> i) & 1).collect();
            let pol = Policy::deterministic(actions);
            for s in 0..3 {
                let c = expected_cost(&mdp, s, &pol).unwrap();
                assert!(cache.b_under[s] <= c + 1e-7);
                assert!(c <= cache.b_bar[s] + 1e-7);
            }
        }
    }

    #[test]
    fn bounds_are_one_sided_safe() {
        // Envelope invariants hold exactly, not just within tolerance,
        // because the two value iterations start on safe sides.
        let mdp = random_mdp(7, 4, 3, 4);
        let cache = compute_bounds(&mdp, 0.75, 1e-8).unwrap();
        assert!(cache.b_l <= cache.b_u);
        for s in 0..4 {
            assert!(cache.b_under[s] <= cache.b_bar[s]);
            for i in 0..4 {
                assert!(cache.v_under[(i, s)] <= cache.v_bar[(i, s)]);
                assert!(cache.big_m_state[(i, s)] >= 0.0);
            }
        }
        assert!(cache.big_m_global >= 0.0);
    }

    #[test]
    fn fixing_thresholds() {
        let mdp = example1(0.99);
        let mut cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();

        // Doctored floors: scenario 1 floor above b_u forces it off.
        cache.b_under = vec![0.0, 300.0];
        cache.alpha = 0.5;
        let fixed = fix_scenarios(&cache, None, mdp.probs()).unwrap();
        assert_eq!(fixed.z_fixed, vec![ZFix::Free, ZFix::Forced0]);

        // Doctored ceilings: scenario 0 ceiling below b_l forces it on.
        let mut cache2 = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        cache2.b_bar = vec![50.0, 400.0];
        cache2.b_l = 60.0;
        let fixed2 = fix_scenarios(&cache2, None, mdp.probs()).unwrap();
        assert_eq!(fixed2.z_fixed[0], ZFix::Forced1);
    }

    #[test]
    fn example1_scenarios_stay_free() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        let fixed = fix_scenarios(&cache, None, mdp.probs()).unwrap();
        assert_eq!(fixed.z_fixed, vec![ZFix::Free, ZFix::Free]);
    }

    #[test]
    fn overfixing_is_an_error() {
        let mdp = example1(0.99);
        let mut cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        cache.b_under = vec![300.0, 300.0];
        assert!(matches!(
            fix_scenarios(&cache, None, mdp.probs()).unwrap_err(),
            Error::InfeasibleFixing { .. }
        ));
    }

    #[test]
    fn incumbent_tightens_cutoff() {
        let mdp = random_mdp(3, 3, 2, 4);
        let cache = compute_bounds(&mdp, 0.75, 1e-8).unwrap();
        // An incumbent below some scenario floor forces that scenario off.
        let mut floors: Vec<f64> = cache.b_under.clone();
        floors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let incumbent = (floors[2] + floors[3]) / 2.0;
        let fixed = fix_scenarios(&cache, Some(incumbent), mdp.probs()).unwrap();
        let n_forced0 = fixed.z_fixed.iter().filter(|z| **z == ZFix::Forced0).count();
        assert_eq!(n_forced0, cache.b_under.iter().filter(|&&b| b > incumbent).count());
    }

    #[test]
    fn conflicting_fix_is_an_error() {
        let mdp = example1(0.99);
        let mut cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        // Doctored inconsistency: floor above the cutoff and ceiling below
        // the lower bound at once.
        cache.b_under[0] = 500.0;
        cache.b_bar[0] = 10.0;
        cache.b_l = 50.0;
        cache.b_u = 400.0;
        cache.alpha = 0.4;
        assert!(matches!(
            fix_scenarios(&cache, None, mdp.probs()).unwrap_err(),
            Error::FixingConflict { scenario: 0, .. }
        ));
    }

    #[test]
    fn forced1_floors_never_exceed_the_optimum() {
        use crate::exact::brute_force;
        for seed in [201u64, 202, 203, 204] {
            let mdp = random_mdp(seed, 3, 2, 5);
            let alpha = 0.6;
            let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
            let fixed = fix_scenarios(&cache, None, mdp.probs()).unwrap();
            let opt = brute_force(&mdp, alpha, false).unwrap().value;
            for s in 0..5 {
                if fixed.z_fixed[s] == ZFix::Forced1 {
                    assert!(valid_lb_cut(&fixed, s) <= opt + 1e-9);
                }
            }
        }
    }

    #[test]
    fn lb_cut_is_the_scenario_floor() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        assert!(valid_lb_cut(&cache, 0).abs() < 1e-6);
        assert_eq!(valid_lb_cut(&cache, 1), cache.b_under[1]);
    }

    #[test]
    fn global_m_covers_scenarios_below_the_quantile_ceiling() {
        // For any policy with its natural (y, z) and any excluded scenario
        // whose relaxed ceiling stays at or below b_u, the linking row is
        // slack under M = b_u - b_l: C(pi, s) <= b_bar[s] <= b_u and
        // y >= b_l. Scenarios with b_bar[s] > b_u sit beyond the quantile
        // cut and are not covered by the global M.
        use crate::exact::PolicyIter;
        use crate::quantile::var_of_policy;
        for seed in [11u64, 12, 13, 14, 15] {
            for alpha in [0.75, 0.9] {
                let mdp = random_mdp(seed, 3, 2, 6);
                let cache = compute_bounds(&mdp, alpha, 1e-8).unwrap();
                let m = cache.big_m_global;
                for actions in PolicyIter::new(3, 2, false) {
                    let pol = Policy::deterministic(actions);
                    let (y, selected) = var_of_policy(&mdp, &pol, alpha).unwrap();
                    let y = y.max(cache.b_l);
                    for s in 0..6 {
                        if selected.contains(&s) || cache.b_bar[s] > cache.b_u {
                            continue;
                        }
                        let c = expected_cost(&mdp, s, &pol).unwrap();
                        assert!(
                            c <= y + m + 1e-9,
                            "seed {seed} scenario {s}: cost {c} exceeds y {y} + M {m}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn csv_dump_shape() {
        let mdp = example1(0.99);
        let cache = compute_bounds(&mdp, 0.9, 1e-8).unwrap();
        let csv = cache.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "scenario,b_under,b_bar,fixed");
        assert!(lines[1].starts_with("0,") && lines[1].ends_with(",free"));
    }
}
