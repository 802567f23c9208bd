use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kepcg::cg::{solve_kep, CgConfig, CgTrace};
use kepcg::color_coding::{
    build_arrangement, solve_color_coding, ArrangementConfig, ColoringPlan, ColoringStrategy,
};
use kepcg::graph::PricingGraph;
use kepcg::harness::{extract, run_bench, worker_count, BenchReport, BenchSpec};
use kepcg::instance::{
    generate, load_instance, save_instance, save_solution, solution_to_json, CompatibilityInstance,
    GeneratorParams, SolveStatus, WeightMode,
};
use kepcg::ng::{solve_ng_dssr, DssrMode, NgConfig, NgConstruction, DEFAULT_LAMBDA};
use kepcg::pricing::{
    cost_sign, estimate_duals, load_empplc_with_duals, save_empplc_with_duals, solve_exact,
    solve_local_search, EmpplcInstance, EmpplcSolution, ExactConfig, LocalSearchConfig,
};
use kepcg::KepError;

const EXIT_VALIDATION: u8 = 3;
const EXIT_TIME_LIMIT: u8 = 4;

/// Kidney exchange clearing by column generation.
#[derive(Parser)]
#[command(name = "kepcg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Generate(GenerateArgs),
    /// Solve an instance and write the solution (and optionally the trace).
    Solve(SolveArgs),
    /// Run one chain-pricing algorithm on a pricing-instance file.
    Price(PriceArgs),
    /// Solve an instance and dump the pricing problems of the first, middle
    /// and last iterations.
    Extract(ExtractArgs),
    /// Run the benchmark matrix and write a report.
    Bench(BenchArgs),
    /// Render a bench report as a text table or CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Unit,
    Uniform,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 50)]
    pairs: usize,
    /// Altruists as a fraction of the number of pairs.
    #[arg(long, default_value_t = 0.04)]
    altruists: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    l: usize,
    #[arg(long, value_enum, default_value_t = Weights::Unit)]
    weights: Weights,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dssr {
    None,
    Limited,
    Predefined,
}

impl From<Dssr> for DssrMode {
    fn from(d: Dssr) -> Self {
        match d {
            Dssr::None => DssrMode::None,
            Dssr::Limited => DssrMode::Limited,
            Dssr::Predefined => DssrMode::Predefined,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NgSetsKind {
    Uniform,
    Dual,
}

impl From<NgSetsKind> for NgConstruction {
    fn from(k: NgSetsKind) -> Self {
        match k {
            NgSetsKind::Uniform => NgConstruction::UniformRandom,
            NgSetsKind::Dual => NgConstruction::DualGuidedNeighborhood,
        }
    }
}

#[derive(Args, Clone)]
struct CgArgs {
    /// Override the cycle limit K.
    #[arg(long)]
    k: Option<usize>,
    /// Override the chain limit L.
    #[arg(long)]
    l: Option<usize>,
    /// Total time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add only the priced chain, not its prefixes.
    #[arg(long)]
    no_subpaths: bool,
    /// Color-coding budget per iteration in seconds.
    #[arg(long, default_value_t = 1.0)]
    cc_seconds: f64,
    /// Cap on color-coding trials per iteration.
    #[arg(long)]
    cc_trials: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: usize,
    /// Number of colors (default L + 1).
    #[arg(long)]
    colors: Option<usize>,
    #[arg(long, value_enum, default_value_t = Dssr::Limited)]
    dssr: Dssr,
    /// Bound color coding and the arrangement search by counts instead of
    /// time, so results do not depend on machine speed.
    #[arg(long)]
    deterministic: bool,
}

impl CgArgs {
    fn instance(&self, path: &Path) -> Result<CompatibilityInstance> {
        let inst = load_instance(path)?;
        if self.k.is_some() || self.l.is_some() {
            let k = self.k.unwrap_or(inst.max_cycle());
            let l = self.l.unwrap_or(inst.max_chain());
            return Ok(inst.with_limits(k, l)?);
        }
        Ok(inst)
    }

    fn config(&self) -> Result<CgConfig> {
        let mut cfg = if self.deterministic {
            CgConfig::deterministic(self.seed)
        } else {
            CgConfig {
                cc_time_limit: Some(secs(self.cc_seconds, "--cc-seconds")?),
                ..CgConfig::default()
            }
        };
        cfg.seed = self.seed;
        cfg.arrangement.seed = self.seed;
        if let Some(t) = self.time_limit {
            cfg.total_time_limit = Some(secs(t, "--time-limit")?);
        }
        if self.cc_trials.is_some() {
            cfg.cc_trial_cap = self.cc_trials;
        }
        cfg.subpath_expansion = !self.no_subpaths;
        cfg.colors = self.colors;
        cfg.ng.lambda = self.lambda;
        cfg.ng.mode = self.dssr.into();
        cfg.ng.seed = self.seed;
        Ok(cfg)
    }
}

fn secs(v: f64, flag: &str) -> Result<Duration> {
    if !(v.is_finite() && v > 0.0) {
        return Err(KepError::Parameter(format!("{flag} must be a positive number of seconds")).into());
    }
    Ok(Duration::from_secs_f64(v))
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    cg: CgArgs,
    /// Solution file (default: print to stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the iteration trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Oracle,
    Ls,
    Cc,
    Ng,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Perm,
    Uniform,
}

#[derive(Args)]
struct PriceArgs {
    /// Pricing-instance file.
    file: PathBuf,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Colors for color coding (default L + 1).
    #[arg(long)]
    colors: Option<usize>,
    #[arg(long, default_value_t = 0.99)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time limit in seconds (color coding and local search).
    #[arg(long, default_value_t = 1.0)]
    time_limit: f64,
    /// Cap on color-coding trials.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum, default_value_t = Strategy::Perm)]
    strategy: Strategy,
    #[arg(long, value_enum, default_value_t = Dssr::Limited)]
    dssr: Dssr,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: usize,
    #[arg(long, value_enum, default_value_t = NgSetsKind::Dual)]
    ng_sets: NgSetsKind,
    /// Also run the exact oracle and report the comparison.
    #[arg(long)]
    compare_oracle: bool,
    /// Node budget of the exact oracle.
    #[arg(long, default_value_t = 50_000_000)]
    node_budget: u64,
    /// Write hop distances and extended neighborhoods as JSON.
    #[arg(long)]
    dump_prep: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    instance: PathBuf,
    #[command(flatten)]
    cg: CgArgs,
    /// Directory receiving `<stem>_<first|middle|last>.json`.
    #[arg(long)]
    out_dir: PathBuf,
}

fn parse_list<T: std::str::FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list entry `{x}`")))
        .collect()
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated pair counts.
    #[arg(long, default_value = "50,100", value_parser = parse_list::<usize>)]
    pairs: std::vec::Vec<usize>,
    /// Comma-separated chain limits.
    #[arg(long, default_value = "4,7,13", value_parser = parse_list::<usize>)]
    l: std::vec::Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, default_value = "1,2,3,4,5", value_parser = parse_list::<u64>)]
    seeds: std::vec::Vec<u64>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.04)]
    altruists: f64,
    /// Use the time-based color-coding budget instead of trial caps.
    #[arg(long)]
    time_based: bool,
    /// Zero all runtimes so reruns are byte-identical.
    #[arg(long)]
    no_timings: bool,
    /// Report file (JSON).
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the CSV rendering here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    report: PathBuf,
    /// Emit CSV instead of the text table.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    no_timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<KepError>() {
                Some(
                    KepError::Validation(_)
                    | KepError::Parse { .. }
                    | KepError::Parameter(_)
                    | KepError::Unsupported(_),
                ) => ExitCode::from(EXIT_VALIDATION),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Price(a) => cmd_price(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let params = GeneratorParams {
        num_pairs: a.pairs,
        altruist_fraction: a.altruists,
        seed: a.seed,
        max_cycle: a.k,
        max_chain: a.l,
        weights: match a.weights {
            Weights::Unit => WeightMode::Unit,
            Weights::Uniform => WeightMode::Uniform,
        },
        ..GeneratorParams::default()
    };
    let inst = generate(&params)?;
    save_instance(&inst, &a.output)?;
    eprintln!(
        "wrote {}: {} pairs, {} altruists, {} arcs",
        a.output.display(),
        inst.num_pairs(),
        inst.num_altruists(),
        inst.arcs().len()
    );
    Ok(ExitCode::SUCCESS)
}

fn trace_json(trace: &CgTrace) -> String {
    serde_json::to_string_pretty(trace).expect("serializable")
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let inst = a.cg.instance(&a.instance)?;
    let cfg = a.cg.config()?;
    let (sol, trace) = solve_kep(&inst, &cfg)?;
    match &a.output {
        Some(p) => save_solution(&sol, p)?,
        None => println!("{}", solution_to_json(&sol)),
    }
    if let Some(p) = &a.trace {
        fs::write(p, trace_json(&trace)).with_context(|| format!("writing {}", p.display()))?;
    }
    eprintln!(
        "objective {} upper bound {:.6} gap {:.6} status {} ({} iterations, {} ng calls)",
        sol.objective,
        sol.upper_bound,
        sol.gap,
        sol.status,
        trace.iterations.len(),
        trace.ng_calls
    );
    Ok(if sol.status == SolveStatus::TimeLimit {
        ExitCode::from(EXIT_TIME_LIMIT)
    } else {
        ExitCode::SUCCESS
    })
}

fn solution_json(s: &EmpplcSolution) -> Value {
    json!({
        "path": s.path,
        "cost": s.cost,
        "sign": cost_sign(s.cost),
        "proven_optimal": s.is_proven_optimal,
        "kind": format!("{:?}", s.kind),
    })
}

fn prep_json(g: &PricingGraph) -> Value {
    let n = g.num_vertices();
    let hop = g.hop();
    let dist: Vec<Vec<Option<u32>>> = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| hop.is_finite(i, j).then(|| hop.get(i, j)))
                .collect()
        })
        .collect();
    json!({
        "source": g.source(),
        "alive": g.alive_vertices().collect::<Vec<_>>(),
        "hop_dist": dist,
        "gamma": (0..n).map(|i| g.gamma(i).to_vec()).collect::<Vec<_>>(),
        "gamma_pred": (0..n).map(|i| g.gamma_pred(i).to_vec()).collect::<Vec<_>>(),
    })
}

fn cmd_price(a: PriceArgs) -> Result<ExitCode> {
    let (graph, duals) = load_empplc_with_duals(&a.file)?;
    let graph = kepcg::graph::preprocess(&graph);
    if let Some(p) = &a.dump_prep {
        fs::write(p, serde_json::to_string_pretty(&prep_json(&graph))?)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let duals = duals.unwrap_or_else(|| estimate_duals(&graph));
    let time_limit = secs(a.time_limit, "--time-limit")?;
    let inst = EmpplcInstance::new(graph);
    let mut out = match a.algo {
        Algo::Oracle => {
            let s = solve_exact(&inst, &ExactConfig {
                node_budget: a.node_budget,
                bound_pruning: true,
            })?;
            json!({"algo": "oracle", "class": "OPT", "best": solution_json(&s)})
        }
        Algo::Ls => {
            let cfg = LocalSearchConfig {
                time_limit,
                seed: a.seed,
                ..LocalSearchConfig::default()
            };
            let o = solve_local_search(&inst, &cfg);
            json!({
                "algo": "ls",
                "first_negative": o.first_negative.as_ref().map(solution_json),
                "best": solution_json(&o.best),
                "restarts": o.restarts,
                "classes": {"LF": o.first_negative.as_ref().map(|s| s.cost), "LM": o.best.cost},
            })
        }
        Algo::Cc => {
            let colors = a.colors.unwrap_or(inst.max_len() + 1);
            let strategy = match a.strategy {
                Strategy::Perm => ColoringStrategy::PermInterval,
                Strategy::Uniform => ColoringStrategy::UniformRandom,
            };
            let mut plan = ColoringPlan::new(strategy, colors, a.seed);
            plan.rho = a.rho;
            plan.trial_budget = a.trials;
            let arr = build_arrangement(&inst.graph, &ArrangementConfig {
                seed: a.seed,
                ..ArrangementConfig::default()
            });
            let o = solve_color_coding(&inst, &plan, &arr, Some(time_limit))?;
            json!({
                "algo": "cc",
                "first_negative": o.first_negative.as_ref().map(solution_json),
                "best": solution_json(&o.best),
                "trials": o.trials_run,
                "proven_optimal": o.proven_optimal,
                "delta_max": arr.delta_max(),
                "classes": {"CF": o.first_negative.as_ref().map(|s| s.cost), "CM": o.best.cost},
            })
        }
        Algo::Ng => {
            let cfg = NgConfig {
                mode: a.dssr.into(),
                lambda: a.lambda,
                construction: a.ng_sets.into(),
                seed: a.seed,
                ..NgConfig::default()
            };
            let o = solve_ng_dssr(&inst.graph, &duals, &cfg)?;
            json!({
                "algo": "ng",
                "class": "NGM",
                "best": solution_json(&o.solution),
                "elementary": o.elementary,
                "dssr_iterations": o.iterations,
                "bounds": o.bounds,
            })
        }
    };
    if a.compare_oracle && !matches!(a.algo, Algo::Oracle) {
        let opt = solve_exact(&inst, &ExactConfig {
            node_budget: a.node_budget,
            bound_pruning: true,
        })?;
        let best = out["best"]["cost"].as_f64().unwrap_or(0.0);
        out["oracle"] = solution_json(&opt);
        out["same_sign"] = json!((best < -kepcg::pricing::NEGATIVE_TOL) == opt.is_negative());
        out["gap_to_oracle"] = json!(best - opt.cost);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_extract(a: ExtractArgs) -> Result<ExitCode> {
    let inst = a.cg.instance(&a.instance)?;
    let cfg = a.cg.config()?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let (items, sol, _) = extract(&inst, &cfg)?;
    let stem = a
        .instance
        .file_stem()
        .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
    for it in &items {
        let path = a.out_dir.join(format!("{stem}_{}.json", it.label));
        save_empplc_with_duals(&it.graph, Some(&it.duals), &path)?;
        println!("{} iteration {} -> {}", it.label, it.iteration, path.display());
    }
    Ok(if sol.status == SolveStatus::TimeLimit {
        ExitCode::from(EXIT_TIME_LIMIT)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let spec = BenchSpec {
        pairs: a.pairs,
        chain_limits: a.l,
        seeds: a.seeds,
        max_cycle: a.k,
        altruist_fraction: a.altruists,
    };
    let cfg = if a.time_based {
        CgConfig::default()
    } else {
        CgConfig::deterministic(0)
    };
    let mut report = run_bench(&spec, &cfg, worker_count())?;
    if a.no_timings {
        report = report.without_timings();
    }
    fs::write(&a.output, report.to_json())
        .with_context(|| format!("writing {}", a.output.display()))?;
    if let Some(p) = &a.csv {
        fs::write(p, report.render_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{}", report.render_text());
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(a: ReportArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let mut report = BenchReport::from_json(&text)?;
    if a.no_timings {
        report = report.without_timings();
    }
    if a.csv {
        print!("{}", report.render_csv());
    } else {
        print!("{}", report.render_text());
    }
    Ok(ExitCode::SUCCESS)
}
