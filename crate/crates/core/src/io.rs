//! Instance file format: a JSON document with `gamma`, `q`, `probs` and
//! per-scenario `cost` / `trans` tensors as nested arrays.
//!
//! Serialization goes through `f64` and prints the shortest representation
//! that parses back to the identical bits, so save/load round-trips are
//! exact for any value this crate produces.

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{ScenarioParams, UncertainMdp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    /// Cost matrix indexed `[state][action]`.
    cost: Vec<Vec<f64>>,
    /// Transition tensor indexed `[state][action][next_state]`.
    trans: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    gamma: f64,
    q: Vec<f64>,
    probs: Vec<f64>,
    scenarios: Vec<ScenarioFile>,
}

fn to_file<T: Scalar>(mdp: &UncertainMdp<T>, name: Option<&str>) -> InstanceFile {
    let f = |x: T| x.to_f64().expect("scalar converts to f64");
    InstanceFile {
        name: name.map(str::to_owned),
        gamma: f(mdp.gamma()),
        q: mdp.q().iter().map(|&x| f(x)).collect(),
        probs: mdp.probs().iter().map(|&x| f(x)).collect(),
        scenarios: mdp
            .scenarios()
            .iter()
            .map(|scn| ScenarioFile {
                cost: (0..mdp.n_states())
                    .map(|i| (0..mdp.n_actions()).map(|a| f(scn.cost[(i, a)])).collect())
                    .collect(),
                trans: (0..mdp.n_states())
                    .map(|i| {
                        (0..mdp.n_actions())
                            .map(|a| {
                                (0..mdp.n_states()).map(|j| f(scn.trans[(i, a, j)])).collect()
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn from_file<T: Scalar>(file: &InstanceFile) -> Result<UncertainMdp<T>> {
    let n_scen = file.scenarios.len();
    if n_scen == 0 {
        return Err(Error::InstanceFormat("instance has no scenarios".into()));
    }
    let n_states = file.scenarios[0].cost.len();
    let n_actions = file.scenarios[0].cost.first().map_or(0, Vec::len);

    let mut scenarios = Vec::with_capacity(n_scen);
    for (s, scn) in file.scenarios.iter().enumerate() {
        let mut cost = Array2::zeros((n_states, n_actions));
        let mut trans = Array3::zeros((n_states, n_actions, n_states));
        if scn.cost.len() != n_states || scn.trans.len() != n_states {
            return Err(Error::InstanceFormat(format!(
                "scenario {s}: expected {n_states} state rows"
            )));
        }
        for (i, row) in scn.cost.iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::InstanceFormat(format!(
                    "scenario {s}, state {i}: expected {n_actions} cost entries"
                )));
            }
            for (a, &c) in row.iter().enumerate() {
                cost[(i, a)] = T::of(c);
            }
        }
        for (i, mat) in scn.trans.iter().enumerate() {
            if mat.len() != n_actions {
                return Err(Error::InstanceFormat(format!(
                    "scenario {s}, state {i}: expected {n_actions} transition rows"
                )));
            }
            for (a, row) in mat.iter().enumerate() {
                if row.len() != n_states {
                    return Err(Error::InstanceFormat(format!(
                        "scenario {s}, state {i}, action {a}: expected {n_states} probabilities"
                    )));
                }
                for (j, &p) in row.iter().enumerate() {
                    trans[(i, a, j)] = T::of(p);
                }
            }
        }
        scenarios.push(ScenarioParams { cost, trans });
    }

    UncertainMdp::new(
        T::of(file.gamma),
        file.q.iter().map(|&x| T::of(x)).collect(),
        scenarios,
        file.probs.iter().map(|&x| T::of(x)).collect(),
    )
}

/// Serialize an instance to pretty-printed JSON.
pub fn instance_to_json<T: Scalar>(mdp: &UncertainMdp<T>, name: Option<&str>) -> String {
    serde_json::to_string_pretty(&to_file(mdp, name)).expect("instance serializes") + "\n"
}

/// Parse an instance from JSON, validating every model invariant.
/// Returns the model and the optional embedded name.
pub fn instance_from_json<T: Scalar>(text: &str) -> Result<(UncertainMdp<T>, Option<String>)> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| Error::InstanceFormat(e.to_string()))?;
    let mdp = from_file(&file)?;
    Ok((mdp, file.name))
}

pub fn save_instance<T: Scalar>(
    mdp: &UncertainMdp<T>,
    name: Option<&str>,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, instance_to_json(mdp, name))?;
    Ok(())
}

pub fn load_instance<T: Scalar>(path: &Path) -> Result<(UncertainMdp<T>, Option<String>)> {
    let text = std::fs::read_to_string(path)?;
    instance_from_json(&text)
}

/// Full diagnostic scan of an instance document: collects every invariant
/// violation (naming the offending scenario, state and action) instead of
/// stopping at the first, plus summary statistics.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub name: Option<String>,
    pub n_states: usize,
    pub n_actions: usize,
    pub n_scenarios: usize,
    pub gamma: f64,
    /// Smallest and largest transition row sum seen anywhere.
    pub row_sum_min: f64,
    pub row_sum_max: f64,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Validate an instance document. Schema-level problems (malformed JSON,
/// ragged arrays) come back as `Err` with parser line context; invariant
/// violations are collected in the report.
pub fn validate_instance_json(text: &str) -> Result<ValidationReport> {
    let file: InstanceFile = serde_json::from_str(text)
        .map_err(|e| Error::InstanceFormat(e.to_string()))?;

    let tol = 1e-9;
    let mut errors = Vec::new();
    let n_scenarios = file.scenarios.len();
    let n_states = file.scenarios.first().map_or(0, |s| s.cost.len());
    let n_actions =
        file.scenarios.first().and_then(|s| s.cost.first()).map_or(0, Vec::len);

    if n_scenarios == 0 {
        errors.push("instance has no scenarios".to_string());
    }
    if !(file.gamma >= 0.0 && file.gamma < 1.0) {
        errors.push(format!("gamma {} outside [0, 1)", file.gamma));
    }
    if file.q.len() != n_states {
        errors.push(format!("q has {} entries, expected {}", file.q.len(), n_states));
    }
    let q_sum: f64 = file.q.iter().sum();
    if (q_sum - 1.0).abs() > tol {
        errors.push(format!("q sums to {q_sum}, expected 1"));
    }
    if file.q.iter().any(|&p| !(0.0..=1.0 + tol).contains(&p)) {
        errors.push("q has entries outside [0, 1]".to_string());
    }
    if file.probs.len() != n_scenarios {
        errors.push(format!(
            "probs has {} entries, expected {}",
            file.probs.len(),
            n_scenarios
        ));
    }
    let p_sum: f64 = file.probs.iter().sum();
    if (p_sum - 1.0).abs() > tol {
        errors.push(format!("probs sums to {p_sum}, expected 1"));
    }
    if file.probs.iter().any(|&p| p <= 0.0) {
        errors.push("probs entries must be strictly positive".to_string());
    }

    let mut row_sum_min = f64::INFINITY;
    let mut row_sum_max = f64::NEG_INFINITY;
    for (s, scn) in file.scenarios.iter().enumerate() {
        if scn.cost.len() != n_states || scn.trans.len() != n_states {
            errors.push(format!("scenario {s} has inconsistent state dimension"));
            continue;
        }
        for (i, row) in scn.cost.iter().enumerate() {
            if row.len() != n_actions {
                errors.push(format!("scenario {s}, state {i}: ragged cost row"));
                continue;
            }
            for (a, &c) in row.iter().enumerate() {
                if !c.is_finite() || c < 0.0 {
                    errors.push(format!(
                        "cost (scenario {s}, state {i}, action {a}) = {c} invalid"
                    ));
                }
            }
        }
        for (i, mat) in scn.trans.iter().enumerate() {
            if mat.len() != n_actions {
                errors.push(format!("scenario {s}, state {i}: ragged transition block"));
                continue;
            }
            for (a, row) in mat.iter().enumerate() {
                if row.len() != n_states {
                    errors.push(format!(
                        "transition row (scenario {s}, state {i}, action {a}) has {} entries, expected {n_states}",
                        row.len()
                    ));
                    continue;
                }
                let sum: f64 = row.iter().sum();
                row_sum_min = row_sum_min.min(sum);
                row_sum_max = row_sum_max.max(sum);
                if (sum - 1.0).abs() > tol {
                    errors.push(format!(
                        "transition row (scenario {s}, state {i}, action {a}) sums to {sum}"
                    ));
                }
                for (j, &p) in row.iter().enumerate() {
                    if !p.is_finite() || p < 0.0 {
                        errors.push(format!(
                            "transition (scenario {s}, state {i}, action {a}, next {j}) = {p} invalid"
                        ));
                    }
                }
            }
        }
    }

    Ok(ValidationReport {
        name: file.name,
        n_states,
        n_actions,
        n_scenarios,
        gamma: file.gamma,
        row_sum_min,
        row_sum_max,
        errors,
    })
}
