use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eqc_transfer::agent::{self, Hyperparams};
use eqc_transfer::ansatz::{AnsatzKind, Checkpoint};
use eqc_transfer::bound::{self, BoundInputs};
use eqc_transfer::harness::{self, fmt_g, BoundMode, ExperimentConfig};
use eqc_transfer::tsp::{self, Generator};
use eqc_transfer::Error;

mod report;
mod svg;

use report::{Figure, ReportSpec};

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Configuration or IO problem: exit 1.
    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    /// Inputs that violate an invariant: exit 2.
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn from_lib(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Config(_) | Error::Missing(_) => CliError::io(e.to_string()),
            _ => CliError::invalid(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "eqct", version, about = "Equivariant quantum-circuit Q-learning for TSP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one instance and print it as JSON.
    Gen {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "random_uniform")]
        generator: Generator,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one policy and write its checkpoint.
    Train(TrainArgs),
    /// Run (or list) the experiment grid.
    Grid(GridArgs),
    /// Evaluate the transfer bound, or the overlay for a results store.
    Bound(BoundArgs),
    /// Emit SVG figures and a Markdown summary from a results file.
    Report {
        #[arg(long, default_value = "results/results.csv")]
        results: PathBuf,
        #[arg(long, default_value = "report")]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',',
              default_values_t = [Figure::TransferPanels, Figure::BoundOverlay, Figure::LearningCurves])]
        figures: Vec<Figure>,
        #[arg(long)]
        bounds: Option<PathBuf>,
        #[arg(long, default_value = "fitted")]
        mode: BoundMode,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "eqc")]
    ansatz: AnsatzKind,
    #[arg(long, default_value_t = 1)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value = "random_uniform")]
    generator: Generator,
    /// Take `[hyperparams]` from this config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Continue from this checkpoint instead of a fresh initialisation.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, default_value = "checkpoint.json")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    dry_run: bool,
    #[arg(long, value_delimiter = ',')]
    ansatz: Option<Vec<AnsatzKind>>,
    #[arg(long, value_delimiter = ',')]
    sources: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    episodes_scratch: Option<usize>,
    #[arg(long)]
    episodes_finetune: Option<usize>,
    #[arg(long)]
    eval_instances: Option<usize>,
    #[arg(long)]
    generator: Option<Generator>,
    #[arg(long)]
    no_scratch_at_target: bool,
}

#[derive(Args)]
struct BoundArgs {
    /// Compute the overlay for this results directory instead of one bound.
    #[arg(long)]
    store: Option<PathBuf>,
    /// Grid config for `--store`; defaults to the last one the store ran.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "fitted")]
    mode: BoundMode,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    theta_l1: f64,
    #[arg(long, default_value_t = 0.0)]
    theta_max: f64,
    #[arg(long, default_value_t = 1.0)]
    a_norm: f64,
    #[arg(long, default_value_t = 2.0)]
    l_u: f64,
    #[arg(long, default_value_t = 0.0)]
    c_prime: f64,
    #[arg(long, default_value_t = 1000)]
    m_episodes: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Fitted parametric coefficient; required in fitted mode.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    p_hat: f64,
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, CliError> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| CliError::io(e.to_string())),
        None => Ok(ExperimentConfig::default()),
    }
}

/// The most recent grid config recorded in a store's manifest.
fn latest_config(dir: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let store = harness::ResultStore::open(dir).map_err(CliError::from_lib)?;
    let toml = store
        .manifest()
        .configs
        .last()
        .ok_or_else(|| CliError::io(format!("{}: no grid has run here", dir.display())))?;
    ExperimentConfig::from_toml(toml).map_err(|e| CliError::io(e.to_string()))
}

fn cmd_gen(k: usize, generator: Generator, seed: u64, out: Option<PathBuf>) -> Result<(), CliError> {
    let inst = tsp::gen_instance(k, generator, seed).map_err(CliError::from_lib)?;
    let json = inst.to_json().map_err(CliError::from_lib)?;
    match out {
        Some(p) => std::fs::write(&p, json).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let base = match &a.config {
        Some(p) => load_config(Some(p))?.hyperparams,
        None => Hyperparams::default(),
    };
    let hp = Hyperparams {
        episodes: a.episodes.unwrap_or(base.episodes),
        ..base
    };
    let (params, records) = match &a.from {
        Some(p) => {
            let start = Checkpoint::load(p).map_err(CliError::from_lib)?.params().map_err(CliError::from_lib)?;
            agent::train_from(start, a.generator, a.k, &hp, a.seed)
        }
        None => agent::train(a.generator, a.k, &hp, a.ansatz, a.layers, a.seed),
    }
    .map_err(CliError::from_lib)?;
    Checkpoint::new(&params, &hp, a.seed, Some(a.generator))
        .save(&a.out)
        .map_err(CliError::from_lib)?;
    let window = records.len().min(100);
    let mean = |rs: &[agent::EpisodeRecord]| {
        rs.iter().map(|r| r.normalized_perf).sum::<f64>() / rs.len().max(1) as f64
    };
    println!(
        "trained {} on k={} for {} episodes: first-{window} mean perf {}, last-{window} {}",
        params.kind,
        a.k,
        records.len(),
        fmt_g(mean(&records[..window])),
        fmt_g(mean(&records[records.len() - window..]))
    );
    println!("checkpoint written to {}", a.out.display());
    Ok(())
}

fn cmd_grid(a: GridArgs) -> Result<(), CliError> {
    let mut cfg = load_config(a.config.as_ref())?;
    if let Some(v) = a.ansatz {
        cfg.ansatz = v;
    }
    if let Some(v) = a.sources {
        cfg.sources = v;
    }
    if let Some(v) = a.targets {
        cfg.targets = v;
    }
    if let Some(v) = a.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = a.episodes_scratch {
        cfg.episodes_scratch = v;
    }
    if let Some(v) = a.episodes_finetune {
        cfg.episodes_finetune = v;
    }
    if let Some(v) = a.eval_instances {
        cfg.eval_instances = v;
    }
    if let Some(v) = a.generator {
        cfg.generator = v;
    }
    if a.no_scratch_at_target {
        cfg.scratch_at_target = false;
    }
    cfg.validate().map_err(|e| CliError::io(e.to_string()))?;
    if a.dry_run {
        let jobs = harness::enumerate_jobs(&cfg);
        for j in &jobs {
            println!("{}", j.key());
        }
        let rows: usize = jobs.iter().map(|j| j.row_ids(&cfg).len()).sum();
        println!("{} jobs, {rows} rows", jobs.len());
        return Ok(());
    }
    let out = harness::run_grid(&cfg, &a.out).map_err(CliError::from_lib)?;
    println!(
        "{} new rows, {} jobs already complete, {} failures; results in {}",
        out.new_rows,
        out.skipped_jobs,
        out.failures.len(),
        a.out.join("results.csv").display()
    );
    for f in &out.failures {
        eprintln!("failed: {} ({})", f.job, f.error);
    }
    Ok(())
}

fn cmd_bound(a: BoundArgs) -> Result<(), CliError> {
    if let Some(dir) = &a.store {
        let cfg = match &a.config {
            Some(p) => load_config(Some(p))?,
            None => latest_config(dir)?,
        };
        let rows = harness::run_bound_overlay(&cfg, dir).map_err(CliError::from_lib)?;
        let cells: Vec<_> = rows.iter().filter(|r| r.seed.is_none() && r.mode == a.mode).collect();
        let above = cells.iter().filter(|r| r.empirical_above_bound).count();
        println!(
            "{above}/{} ({}) cells with empirical performance at or above the bound; wrote {}",
            cells.len(),
            a.mode,
            dir.join("bounds.csv").display()
        );
        return Ok(());
    }
    let alpha_n = match a.mode {
        BoundMode::Fitted => Some(a.alpha.ok_or_else(|| CliError::io("fitted mode needs --alpha"))?),
        BoundMode::Firstprinciples => None,
    };
    let inputs = BoundInputs {
        n: a.n,
        m: a.m,
        theta_l1: a.theta_l1,
        theta_max: a.theta_max,
        a_norm: a.a_norm,
        l_u: a.l_u,
        c_prime: a.c_prime,
        m_episodes: a.m_episodes,
        delta: a.delta,
        alpha_n,
    };
    let r = bound::transfer_lower_bound(a.p_hat, &inputs).map_err(|e| CliError::io(e.to_string()))?;
    println!("t_tet = {}", r.t_tet);
    println!("gen_error = {}", fmt_g(r.gen_error));
    println!("d_param = {}", fmt_g(r.d_param));
    println!("d_struct = {}", fmt_g(r.d_struct));
    println!("d_total = {}", fmt_g(r.d_total));
    println!("lower_bound = {}", fmt_g(r.lower_bound));
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { k, generator, seed, out } => cmd_gen(k, generator, seed, out),
        Command::Train(a) => cmd_train(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Report {
            results,
            out,
            figures,
            bounds,
            mode,
        } => {
            let spec = ReportSpec {
                results,
                out_dir: out,
                figures,
                bounds,
                bound_mode: mode,
            };
            let done = report::run_report(&spec)?;
            for f in &done.files {
                println!("wrote {}", f.display());
            }
            for s in &done.skipped {
                eprintln!("skipped: {s}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
