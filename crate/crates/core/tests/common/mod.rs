//! Shared fixtures for the integration suites.

use ndarray::{array, Array2, Array3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use qmdp_core::mdp::{ScenarioParams, UncertainMdp};

/// The running single-state example: two actions, two equiprobable
/// scenarios with swapped costs (0, 2) / (2, 0), self-looping transitions.
pub fn example1(gamma: f64) -> UncertainMdp<f64> {
    let trans = Array3::from_elem((1, 2, 1), 1.0);
    let s1 = ScenarioParams { cost: array![[0.0, 2.0]], trans: trans.clone() };
    let s2 = ScenarioParams { cost: array![[2.0, 0.0]], trans };
    UncertainMdp::new(gamma, vec![1.0], vec![s1, s2], vec![0.5, 0.5]).unwrap()
}

/// Random dense instance: uniform costs in [0, 10), random stochastic rows,
/// uniform initial distribution, equiprobable scenarios.
pub fn random_mdp(
    seed: u64,
    n_states: usize,
    n_actions: usize,
    n_scenarios: usize,
    gamma: f64,
) -> UncertainMdp<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut scenarios = Vec::with_capacity(n_scenarios);
    for _ in 0..n_scenarios {
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
    let probs = vec![1.0 / n_scenarios as f64; n_scenarios];
    UncertainMdp::new(gamma, q, scenarios, probs).unwrap()
}
