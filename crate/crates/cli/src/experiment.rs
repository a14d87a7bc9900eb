//! Batch experiment runner: a TOML spec drives replications over
//! alpha levels and methods, producing one CSV row per run plus mean/max
//! aggregation rows per (alpha, method) group.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use qmdp_core::exact::{brute_force, solve_exact, SolveOptions, SolveStatus};
use qmdp_core::heuristics::{initial_solution, mean_value_policy, DEFAULT_ROBUST_EPS};
use qmdp_core::inventory::{generate_instance, InventoryConfig};
use qmdp_core::io::load_instance;
use qmdp_core::mdp::DEFAULT_EVAL_TOL;
use qmdp_core::milp::{export_model, model_file_name};
use qmdp_core::preprocess::compute_bounds;
use qmdp_core::quantile::var_of_policy;
use qmdp_core::{BoundsCache64, UncertainMdp64};

use crate::parse_variant;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub instance: InstanceSource,
    pub alphas: Vec<f64>,
    pub methods: Vec<String>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Per-run wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub out: Option<PathBuf>,
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File { path: PathBuf },
    Generator(InventoryConfig),
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("experiment needs at least one method");
        }
        for m in &self.methods {
            parse_method(m)?;
        }
        if self.alphas.is_empty() {
            bail!("experiment needs at least one alpha");
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= 1.0) {
                bail!("alpha {a} outside (0, 1]");
            }
        }
        if self.replications == 0 {
            bail!("replications must be at least 1");
        }
        Ok(())
    }
}

enum Method {
    Exact { monotone: bool },
    Brute,
    MeanValue,
    TwoPhase,
    Bounds,
    Export(String),
}

fn parse_method(name: &str) -> Result<Method> {
    if let Some(variant) = name.strip_prefix("export:") {
        parse_variant(variant)?;
        return Ok(Method::Export(variant.to_string()));
    }
    Ok(match name {
        "exact" => Method::Exact { monotone: false },
        "exact_monotone" => Method::Exact { monotone: true },
        "brute" => Method::Brute,
        "mv" => Method::MeanValue,
        "alg1" => Method::TwoPhase,
        "bounds" => Method::Bounds,
        other => bail!(
            "unknown method `{other}` (expected exact, exact_monotone, brute, mv, alg1, bounds or export:<variant>)"
        ),
    })
}

struct Row {
    instance: String,
    n_scenarios: usize,
    n_states: usize,
    n_actions: usize,
    alpha: f64,
    method: String,
    value: Option<f64>,
    pct_vpi: Option<f64>,
    pct_vss: Option<f64>,
    nodes: Option<u64>,
    wall_ms: u128,
    status: String,
}

impl Row {
    fn to_csv(&self) -> String {
        let opt_f = |x: Option<f64>| x.map(|v| format!("{v}")).unwrap_or_default();
        let opt_pct = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            self.n_scenarios,
            self.n_states,
            self.n_actions,
            self.alpha,
            self.method,
            opt_f(self.value),
            opt_pct(self.pct_vpi),
            opt_pct(self.pct_vss),
            self.nodes.map(|n| n.to_string()).unwrap_or_default(),
            self.wall_ms,
            self.status
        )
    }
}

const CSV_HEADER: &str =
    "instance,scenarios,states,actions,alpha,method,value,pct_vpi,pct_vss,nodes,wall_ms,status";

pub struct RunOutcome {
    pub csv: String,
    pub had_errors: bool,
}

/// Run the whole grid: replication x alpha x method. Per-run failures and
/// time limits become status rows, not crashes.
pub fn run(spec: &ExperimentSpec, export_dir: &Path) -> Result<RunOutcome> {
    spec.validate()?;
    let mut rows: Vec<Row> = Vec::new();
    let mut had_errors = false;

    for rep in 0..spec.replications {
        let (mdp, id) = build_instance(spec, rep)?;
        // One preprocessing pass per instance; alphas reuse it.
        let base_cache = compute_bounds(&mdp, spec.alphas[0], DEFAULT_EVAL_TOL)?;
        let mv_policy = mean_value_policy(&mdp, DEFAULT_EVAL_TOL)?;

        for &alpha in &spec.alphas {
            let cache = base_cache.with_alpha(mdp.probs(), alpha)?;
            let (mv_value, _) = var_of_policy(&mdp, &mv_policy, alpha)?;

            for method_name in &spec.methods {
                let method = parse_method(method_name)?;
                let started = Instant::now();
                let outcome =
                    dispatch(&mdp, alpha, &cache, mv_value, &method, &id, spec, export_dir);
                let wall_ms = started.elapsed().as_millis();
                let row = match outcome {
                    Ok((value, nodes, status)) => Row {
                        instance: id.clone(),
                        n_scenarios: mdp.n_scenarios(),
                        n_states: mdp.n_states(),
                        n_actions: mdp.n_actions(),
                        alpha,
                        method: method_name.clone(),
                        value,
                        pct_vpi: value.map(|v| pct(v - cache.b_l, v)),
                        pct_vss: value.map(|v| pct(mv_value - v, mv_value)),
                        nodes,
                        wall_ms,
                        status,
                    },
                    Err(e) => {
                        had_errors = true;
                        eprintln!("run {id} alpha={alpha} method={method_name} failed: {e:#}");
                        Row {
                            instance: id.clone(),
                            n_scenarios: mdp.n_scenarios(),
                            n_states: mdp.n_states(),
                            n_actions: mdp.n_actions(),
                            alpha,
                            method: method_name.clone(),
                            value: None,
                            pct_vpi: None,
                            pct_vss: None,
                            nodes: None,
                            wall_ms,
                            status: "error".to_string(),
                        }
                    }
                };
                rows.push(row);
            }
        }
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    append_aggregates(&mut csv, spec, &rows);

    Ok(RunOutcome { csv, had_errors })
}

fn pct(diff: f64, denom: f64) -> f64 {
    if denom != 0.0 {
        100.0 * diff / denom
    } else {
        0.0
    }
}

fn build_instance(spec: &ExperimentSpec, rep: usize) -> Result<(UncertainMdp64, String)> {
    match &spec.instance {
        InstanceSource::File { path } => {
            let (mdp, name) = load_instance::<f64>(path)
                .with_context(|| format!("loading {}", path.display()))?;
            let stem = name.unwrap_or_else(|| crate::instance_stem(path));
            let id = if spec.replications > 1 {
                format!("{stem}-r{rep}")
            } else {
                stem
            };
            Ok((mdp, id))
        }
        InstanceSource::Generator(cfg) => {
            let mut cfg = cfg.clone();
            cfg.rng_seed = spec.seed.wrapping_add(rep as u64);
            let mdp = generate_instance::<f64>(&cfg)?;
            let id = format!(
                "inv-s{}h{}a{}-seed{}",
                mdp.n_scenarios(),
                mdp.n_states(),
                mdp.n_actions(),
                cfg.rng_seed
            );
            Ok((mdp, id))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn dispatch(
    mdp: &UncertainMdp64,
    alpha: f64,
    cache: &BoundsCache64,
    mv_value: f64,
    method: &Method,
    id: &str,
    spec: &ExperimentSpec,
    export_dir: &Path,
) -> Result<(Option<f64>, Option<u64>, String)> {
    match method {
        Method::Exact { monotone } => {
            let opts = SolveOptions {
                monotone: *monotone,
                time_limit: spec.time_limit.map(Duration::from_secs_f64),
                tol: DEFAULT_EVAL_TOL,
            };
            let result = solve_exact(mdp, alpha, cache, &opts)?;
            let status = match result.status {
                SolveStatus::TimeLimit => "time_limit".to_string(),
                s => s.as_str().to_string(),
            };
            Ok((Some(result.value), Some(result.nodes), status))
        }
        Method::Brute => {
            let result = brute_force(mdp, alpha, false)?;
            Ok((Some(result.value), Some(result.nodes), "optimal".to_string()))
        }
        Method::MeanValue => Ok((Some(mv_value), None, "heuristic".to_string())),
        Method::TwoPhase => {
            let (_, value, _) = initial_solution(mdp, cache, alpha, DEFAULT_ROBUST_EPS)?;
            Ok((Some(value), None, "heuristic".to_string()))
        }
        Method::Bounds => Ok((Some(cache.b_l), None, "bounds".to_string())),
        Method::Export(variant_name) => {
            let variant = parse_variant(variant_name)?;
            let cache_ref = variant.uses_cache.then_some(cache);
            std::fs::create_dir_all(export_dir)?;
            let path = export_dir.join(model_file_name(id, &variant, alpha));
            export_model(mdp, alpha, variant, cache_ref, &path)?;
            Ok((None, None, "exported".to_string()))
        }
    }
}

/// Mean and max rows per (alpha, method) over replications, mirroring the
/// usual table footers. Only rows carrying a value enter the statistics.
fn append_aggregates(csv: &mut String, spec: &ExperimentSpec, rows: &[Row]) {
    if spec.replications <= 1 {
        return;
    }
    for &alpha in &spec.alphas {
        for method in &spec.methods {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.alpha == alpha && &r.method == method && r.value.is_some())
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&Row) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let max = |f: &dyn Fn(&Row) -> f64| {
                group.iter().map(|r| f(r)).fold(f64::NEG_INFINITY, f64::max)
            };
            let value = |r: &Row| r.value.unwrap_or(f64::NAN);
            let vpi = |r: &Row| r.pct_vpi.unwrap_or(0.0);
            let vss = |r: &Row| r.pct_vss.unwrap_or(0.0);
            let nodes = |r: &Row| r.nodes.unwrap_or(0) as f64;
            let wall = |r: &Row| r.wall_ms as f64;
            let dims = group[0];
            for (label, stat) in
                [("mean", &mean as &dyn Fn(&dyn Fn(&Row) -> f64) -> f64), ("max", &max)]
            {
                let _ = writeln!(
                    csv,
                    "{label},{},{},{},{alpha},{method},{},{:.6},{:.6},{},{},aggregate",
                    dims.n_scenarios,
                    dims.n_states,
                    dims.n_actions,
                    stat(&value),
                    stat(&vpi),
                    stat(&vss),
                    stat(&nodes),
                    stat(&wall),
                );
            }
        }
    }
}

pub fn cmd_experiment(spec_path: PathBuf, out_override: Option<PathBuf>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&spec_path)
        .with_context(|| format!("reading experiment spec {}", spec_path.display()))?;
    let spec: ExperimentSpec =
        toml::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;

    let out = out_override.or_else(|| spec.out.clone());
    let export_dir = out
        .as_deref()
        .and_then(Path::parent)
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let outcome = run(&spec, &export_dir)?;
    match &out {
        Some(path) => {
            std::fs::write(path, &outcome.csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", outcome.csv),
    }
    if outcome.had_errors {
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
