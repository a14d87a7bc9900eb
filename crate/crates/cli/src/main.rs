//! Command-line front end: instance generation, solving, bounding,
//! heuristics, model export and batch experiments with CSV reporting.

mod experiment;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qmdp_core::exact::{brute_force, metrics, solve_exact, SolveOptions};
use qmdp_core::heuristics::{
    initial_solution, local_search_selection, mean_value_policy, DEFAULT_ROBUST_EPS,
};
use qmdp_core::inventory::{
    generate_instance, instance_from_scenarios, parse_scenario_table, InventoryConfig,
};
use qmdp_core::io::{load_instance, save_instance, validate_instance_json};
use qmdp_core::mdp::DEFAULT_EVAL_TOL;
use qmdp_core::milp::{export_model, model_file_name, ModelKind, ModelVariant};
use qmdp_core::preprocess::{compute_bounds, fix_scenarios};
use qmdp_core::quantile::var_of_policy;
use qmdp_core::{BoundsCache64, UncertainMdp64};

#[derive(Parser)]
#[command(
    name = "qmdp",
    version,
    about = "Scenario-based MDP solver minimizing the value-at-risk of expected discounted cost"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a perishable-inventory instance file
    Generate(GenerateArgs),
    /// Solve an instance exactly over deterministic policies
    Solve(SolveArgs),
    /// Compute and dump the preprocessing bounds
    Bounds(BoundsArgs),
    /// Run the feasible-solution heuristics
    Heuristic(HeuristicArgs),
    /// Export a solver-ready LP model file
    Export(ExportArgs),
    /// Run a batch experiment from a TOML spec and report CSV
    Experiment(ExperimentArgs),
    /// Check an instance file against every model invariant
    Validate(ValidateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator configuration (TOML); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario table CSV (scenario,demand_rate,supply_rate,shelf_life in
    /// batch units) instead of random sampling
    #[arg(long)]
    scenario_table: Option<PathBuf>,
    /// Override the configured RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured discount factor
    #[arg(long)]
    gamma: Option<f64>,
    /// Override the configured number of scenarios
    #[arg(long)]
    scenarios: Option<usize>,
    /// Output instance file (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (JSON)
    instance: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Restrict the search to monotone policies
    #[arg(long)]
    monotone: bool,
    /// Wall-clock limit in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    /// Use exhaustive enumeration instead of branch and bound
    #[arg(long)]
    brute: bool,
    /// Skip the scenario-elimination pass
    #[arg(long)]
    no_fix: bool,
    /// Append one CSV result row to this file (header added when new)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Write the per-scenario bounds CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HeuristicArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Robust value iteration tolerance
    #[arg(long, default_value_t = DEFAULT_ROBUST_EPS)]
    eps: f64,
    /// Improve the scenario selection by single-swap hill climbing
    #[arg(long)]
    local_search: bool,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
    /// Model variant: det-bigm, det-mc, rand-mc-relax or mono-bigm
    #[arg(long, default_value = "det-bigm")]
    variant: String,
    /// Emit naive coefficients (big-M of 1e6) instead of tightened bounds
    #[arg(long)]
    basic: bool,
    /// Directory for the generated .lp file
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment spec (TOML)
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
    /// Confidence level for the bound summary
    #[arg(long, default_value_t = 0.9)]
    alpha: f64,
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bounds(args) => cmd_bounds(args),
        Command::Heuristic(args) => cmd_heuristic(args),
        Command::Export(args) => cmd_export(args),
        Command::Experiment(args) => experiment::cmd_experiment(args.spec, args.out),
        Command::Validate(args) => cmd_validate(args),
    }
}

fn load_generator_config(path: Option<&Path>) -> Result<InventoryConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading generator config {}", p.display()))?;
            let cfg: InventoryConfig =
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            Ok(cfg)
        }
        None => Ok(InventoryConfig::default()),
    }
}

fn instance_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string())
}

fn load_model(path: &Path) -> Result<(UncertainMdp64, String)> {
    let (mdp, name) = load_instance::<f64>(path)
        .with_context(|| format!("loading instance {}", path.display()))?;
    Ok((mdp, name.unwrap_or_else(|| instance_stem(path))))
}

fn cmd_generate(args: GenerateArgs) -> Result<ExitCode> {
    let mut cfg = load_generator_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if let Some(gamma) = args.gamma {
        cfg.gamma = gamma;
    }
    if let Some(n) = args.scenarios {
        cfg.n_scenarios = n;
    }

    let mdp: UncertainMdp64 = match &args.scenario_table {
        Some(table_path) => {
            let text = std::fs::read_to_string(table_path)
                .with_context(|| format!("reading scenario table {}", table_path.display()))?;
            let scenarios = parse_scenario_table(&text, cfg.tail_eps)?;
            instance_from_scenarios(&cfg, &scenarios)?
        }
        None => generate_instance(&cfg)?,
    };

    let name = instance_stem(&args.out);
    save_instance(&mdp, Some(&name), &args.out)?;
    println!(
        "wrote {} ({} scenarios, {} states, {} actions, gamma {})",
        args.out.display(),
        mdp.n_scenarios(),
        mdp.n_states(),
        mdp.n_actions(),
        mdp.gamma()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let (mdp, name) = load_model(&args.instance)?;
    let alpha = args.alpha;
    let started = Instant::now();

    let cache = compute_bounds(&mdp, alpha, DEFAULT_EVAL_TOL)?;
    println!(
        "instance: {name} (|S|={}, |H|={}, |A|={}), alpha={alpha}, gamma={}",
        mdp.n_scenarios(),
        mdp.n_states(),
        mdp.n_actions(),
        mdp.gamma()
    );
    println!("bounds: b_l={} b_u={} M={}", cache.b_l, cache.b_u, cache.big_m_global);

    let result = if args.brute {
        brute_force(&mdp, alpha, args.monotone)?
    } else {
        let opts = SolveOptions {
            monotone: args.monotone,
            time_limit: args.time_limit.map(Duration::from_secs_f64),
            tol: DEFAULT_EVAL_TOL,
        };
        let cache = if args.no_fix {
            cache.clone()
        } else {
            // Monotone incumbent first, then eliminate scenarios with it.
            let mono = solve_exact(&mdp, alpha, &cache, &SolveOptions {
                monotone: true,
                ..opts.clone()
            })?;
            println!("monotone incumbent: {}", mono.value);
            fix_scenarios(&cache, Some(mono.value), mdp.probs())?
        };
        solve_exact(&mdp, alpha, &cache, &opts)?
    };

    let wall = started.elapsed();
    println!(
        "result: value={} status={} nodes={} gap={}%",
        result.value,
        result.status.as_str(),
        result.nodes,
        result.gap
    );
    if let Some(actions) = result.policy.as_deterministic() {
        println!("policy: {actions:?}");
    }
    println!("selected scenarios: {:?}", result.selected);

    let mv = mean_value_policy(&mdp, DEFAULT_EVAL_TOL)?;
    let m = metrics(&mdp, alpha, &cache, &result, &mv)?;
    match m.e_var_gap {
        Some(gap) => println!(
            "metrics: vpi={} ({:.4}%) vss={} ({:.4}%) e_var_gap={:.4}%",
            m.vpi, m.pct_vpi, m.vss, m.pct_vss, gap
        ),
        None => println!(
            "metrics: vpi={} ({:.4}%) vss={} ({:.4}%) e_var_gap=n/a",
            m.vpi, m.pct_vpi, m.vss, m.pct_vss
        ),
    }
    println!("wall: {} ms", wall.as_millis());

    if let Some(out) = &args.out {
        let row = result.csv_row(&name, alpha, wall.as_millis(), Some(m.vpi), Some(m.vss));
        let header = "instance,alpha,value,status,nodes,wall_ms,vpi,vss\n";
        let mut text = if out.exists() {
            std::fs::read_to_string(out)?
        } else {
            header.to_string()
        };
        text.push_str(&row);
        text.push('\n');
        std::fs::write(out, text)?;
        println!("appended result row to {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bounds(args: BoundsArgs) -> Result<ExitCode> {
    let (mdp, name) = load_model(&args.instance)?;
    let cache = compute_bounds(&mdp, args.alpha, DEFAULT_EVAL_TOL)?;
    let csv = cache.to_csv();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    eprintln!(
        "{name}: b_l={} b_u={} M={} (alpha={})",
        cache.b_l, cache.b_u, cache.big_m_global, args.alpha
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_heuristic(args: HeuristicArgs) -> Result<ExitCode> {
    let (mdp, name) = load_model(&args.instance)?;
    let alpha = args.alpha;
    let cache = compute_bounds(&mdp, alpha, DEFAULT_EVAL_TOL)?;

    let mv = mean_value_policy(&mdp, DEFAULT_EVAL_TOL)?;
    let (mv_value, _) = var_of_policy(&mdp, &mv, alpha)?;
    println!("{name}: mean-value policy value={mv_value}");
    if let Some(actions) = mv.as_deterministic() {
        println!("  policy: {actions:?}");
    }

    let mut solution = initial_solution(&mdp, &cache, alpha, args.eps)?;
    if args.local_search {
        solution = local_search_selection(&mdp, alpha, args.eps, solution)?;
    }
    let (pol, value, sel) = solution;
    println!(
        "{name}: two-phase heuristic value={value} (selected {:?}, prob {})",
        sel.selected_indices(),
        sel.selected_prob
    );
    if let Some(actions) = pol.as_deterministic() {
        println!("  policy: {actions:?}");
    }
    Ok(ExitCode::SUCCESS)
}

pub(crate) fn parse_variant(s: &str) -> Result<ModelVariant> {
    let (base, uses_cache) = match s.strip_suffix("-basic") {
        Some(base) => (base, false),
        None => (s, true),
    };
    let kind = match base {
        "det-bigm" => ModelKind::DeterministicBigM,
        "det-mc" => ModelKind::DeterministicMcCormick,
        "rand-mc-relax" => ModelKind::RandomizedMcCormickRelax,
        "mono-bigm" => ModelKind::MonotoneBigM,
        other => bail!(
            "unknown model variant `{other}` (expected det-bigm, det-mc, rand-mc-relax or mono-bigm, optionally with -basic)"
        ),
    };
    Ok(ModelVariant { kind, uses_cache })
}

fn cmd_export(args: ExportArgs) -> Result<ExitCode> {
    let (mdp, name) = load_model(&args.instance)?;
    let mut variant = parse_variant(&args.variant)?;
    if args.basic {
        variant.uses_cache = false;
    }
    let cache = if variant.uses_cache {
        Some(compute_bounds(&mdp, args.alpha, DEFAULT_EVAL_TOL)?)
    } else {
        None
    };
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join(model_file_name(&name, &variant, args.alpha));
    export_model(&mdp, args.alpha, variant, cache.as_ref(), &path)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: ValidateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let report = validate_instance_json(&text)?;
    if !report.is_ok() {
        for err in &report.errors {
            eprintln!("invalid: {err}");
        }
        return Ok(ExitCode::from(1));
    }
    println!(
        "OK: {} scenarios, {} states, {} actions, gamma {}",
        report.n_scenarios, report.n_states, report.n_actions, report.gamma
    );
    println!(
        "transition row sums within [{}, {}]",
        report.row_sum_min, report.row_sum_max
    );

    let (mdp, _) = load_model(&args.instance)?;
    let cache: BoundsCache64 = compute_bounds(&mdp, args.alpha, DEFAULT_EVAL_TOL)?;
    println!(
        "bound summary (alpha={}): b_l={} b_u={}",
        args.alpha, cache.b_l, cache.b_u
    );
    print!("{}", cache.to_csv());
    Ok(ExitCode::SUCCESS)
}
