use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wsn_bench::config::{self, apply_key, keys_help, ConfigFile, GRID_KEYS};
use wsn_bench::experiment::{run_configs, run_experiment, ExperimentGrid};
use wsn_bench::output::{emit_csv, emit_plot_data};
use wsn_bench::summary::{parse_runs_csv, summarize, summarize_rows, ComparisonSummary};

/// Clustered wireless sensor network simulator (LEACH, SEP, gateway-managed).
#[derive(Debug, Parser)]
#[command(name = "wsnsim", version, after_long_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation and write runs.csv and series.csv.
    Simulate(SimulateArgs),
    /// Run a grid of protocols × node counts × seeds.
    Experiment(ExperimentArgs),
    /// Recompute per-cell lifetime statistics from a runs.csv.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat key = value config file (see `wsnsim help simulate` for keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of high-energy nodes [default: 4].
    #[arg(long)]
    gateways: Option<usize>,
    /// Maximum rounds per run [default: 1000].
    #[arg(long)]
    rounds: Option<u32>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Suppress progress and summary output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
#[command(after_long_help = keys_help())]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// LEACH, SEP or GATEWAY [default: LEACH].
    #[arg(long)]
    protocol: Option<String>,
    /// Number of normal sensors [default: 100].
    #[arg(long)]
    nodes: Option<String>,
    /// Random seed [default: 0].
    #[arg(long)]
    seed: Option<String>,
}

#[derive(Debug, Args)]
#[command(after_long_help = keys_help())]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated protocols [default: LEACH,SEP,GATEWAY].
    #[arg(long)]
    protocol: Option<String>,
    /// Comma-separated node counts [default: 50,100,200,300,400,500].
    #[arg(long)]
    nodes: Option<String>,
    /// Seeds as `a..b`, `a..=b` or `a,b,c` [default: 0..=29].
    #[arg(long)]
    seeds: Option<String>,
    /// Run a single seed; shorthand for `--seeds N`.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
    /// Use exactly the base gateway count at every node count instead of
    /// scaling it as max(g, round(g·n/100)).
    #[arg(long)]
    pin_gateways: bool,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    /// Path to a runs.csv written by `simulate` or `experiment`.
    runs_csv: PathBuf,
    /// Where to write summary.csv.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    quiet: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn load(common: &Common) -> Result<ConfigFile, Failure> {
    let mut file = match &common.config {
        Some(path) => config::load_config(path)?,
        None => ConfigFile::default(),
    };
    if let Some(g) = common.gateways {
        apply_key(&mut file, "n_gateways", &g.to_string(), None)?;
    }
    if let Some(r) = common.rounds {
        apply_key(&mut file, "max_rounds", &r.to_string(), None)?;
    }
    Ok(file)
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("writing {}: {e}", path.display()))
}

fn print_summary(summary: &ComparisonSummary) {
    println!("protocol  n_nodes  runs  mean_fnd  mean_hnd  mean_lnd");
    let show = |m: Option<f64>| m.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"));
    for ((p, n), cell) in &summary.per_cell {
        println!(
            "{:<9} {:>7} {:>5} {:>9} {:>9} {:>9}",
            p.as_str(),
            n,
            cell.runs,
            show(cell.fnd.mean()),
            show(cell.hnd.mean()),
            show(cell.lnd.mean())
        );
    }
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let mut file = load(&args.common)?;
    if file.has_grid_keys() {
        return Err(Failure::Usage(format!(
            "grid keys ({}) are only valid for `experiment`",
            GRID_KEYS.join(", ")
        )));
    }
    for (key, value) in [
        ("protocol", &args.protocol),
        ("n_nodes", &args.nodes),
        ("seed", &args.seed),
    ] {
        if let Some(v) = value {
            apply_key(&mut file, key, v, None)?;
        }
    }
    config::validate(&file.sim)?;
    let records = run_configs(std::slice::from_ref(&file.sim), 1, false)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let out = &args.common.out_dir;
    emit_csv(&records, out).map_err(io_failure(out))?;
    if !args.common.quiet {
        let r = &records[0].result;
        let show = |v: Option<u32>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
        println!(
            "{} n_nodes={} seed={} rounds={} fnd={} hnd={} lnd={} spent={} J ({:?})",
            file.sim.protocol,
            file.sim.n_nodes,
            file.sim.seed,
            r.rounds_executed(),
            show(r.lifetime.fnd),
            show(r.lifetime.hnd),
            show(r.lifetime.lnd),
            r.total_energy_spent(),
            r.termination,
        );
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let mut file = load(&args.common)?;
    for (key, value) in [
        ("protocols", &args.protocol),
        ("node_counts", &args.nodes),
        ("seeds", &args.seeds),
        ("seeds", &args.seed),
    ] {
        if let Some(v) = value {
            apply_key(&mut file, key, v, None)?;
        }
    }
    if args.pin_gateways {
        file.pin_gateways = Some(true);
    }
    config::validate(&file.sim)?;
    let grid = ExperimentGrid::from_config(&file);
    for cfg in grid.expand() {
        config::validate(&cfg)?;
    }
    if !args.common.quiet {
        eprintln!(
            "running {} simulations on {} threads",
            grid.len(),
            args.parallelism.max(1)
        );
    }
    let records = run_experiment(&grid, args.parallelism, !args.common.quiet)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let out = &args.common.out_dir;
    emit_csv(&records, out).map_err(io_failure(out))?;
    emit_plot_data(&records, out).map_err(io_failure(out))?;
    let summary = summarize(&records).map_err(|e| Failure::Runtime(e.to_string()))?;
    let summary_path = out.join("summary.csv");
    std::fs::write(&summary_path, summary.to_csv()).map_err(io_failure(&summary_path))?;
    if !args.common.quiet {
        print_summary(&summary);
        eprintln!("wrote results to {}", out.display());
    }
    Ok(())
}

fn summarize_cmd(args: SummarizeArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.runs_csv)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", args.runs_csv.display())))?;
    let rows = parse_runs_csv(&text).map_err(|e| Failure::Usage(e.to_string()))?;
    let summary = summarize_rows(&rows).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::create_dir_all(&args.out_dir).map_err(io_failure(&args.out_dir))?;
    let path = args.out_dir.join("summary.csv");
    std::fs::write(&path, summary.to_csv()).map_err(io_failure(&path))?;
    if !args.quiet {
        print_summary(&summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Experiment(a) => experiment(a),
        Command::Summarize(a) => summarize_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
