//! `addbo`: structure recovery, sequential and batch BO runs, and regret
//! summaries on synthetic additive functions.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
//! objective failure, 4 I/O error. Logging is controlled by `ADDBO_LOG`.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use addbo::batch::{run_batch_bo, Combiner, Explorer};
use addbo::experiment::{
    compare_runs, generate_synthetic, load_run, persist_run, recovery_experiment, write_comparison_csv,
    write_recovery_tables, write_trace_csv, RunRecord, Variant,
};
use addbo::{Error, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "addbo", version, about = "Additive-GP Bayesian optimization experiments")]
struct Cli {
    /// TOML file with experiment settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for running independent trials or seeds.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Learn decompositions of random synthetic functions and tabulate recovery.
    Recover(RecoverArgs),
    /// Sequential additive GP-UCB on synthetic functions.
    Sequential(SequentialArgs),
    /// Batch BO on synthetic functions.
    Batch(BatchArgs),
    /// Median and IQR of regret per method across run files.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Base seed; repetition k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    /// Input dimensions (comma separated).
    #[arg(long = "D", value_delimiter = ',')]
    d: Option<Vec<usize>>,
    /// Observation counts (comma separated).
    #[arg(long = "N", value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Input dimension of the synthetic objective.
    #[arg(long = "D")]
    d: Option<usize>,
    /// Rounds.
    #[arg(long = "T")]
    t: Option<usize>,
    /// Initial random observations.
    #[arg(long = "Ninit")]
    n_init: Option<usize>,
    /// Relearn period in rounds.
    #[arg(long = "Ncyc")]
    n_cyc: Option<usize>,
    /// Decomposition policy: gibbs, known, np, fp, pl1, pl2, gibbs-l.
    #[arg(long)]
    variant: Option<Variant>,
    /// Independent repetitions.
    #[arg(long)]
    runs: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SequentialArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Batch size.
    #[arg(long = "B")]
    b: Option<usize>,
    /// dpp, pe or rand.
    #[arg(long)]
    explorer: Option<Explorer>,
    /// random or quality (not with --explorer rand).
    #[arg(long)]
    combiner: Option<Combiner>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Run files written by `sequential` or `batch`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Config(_) => 2,
        Error::Numerical { .. } | Error::Objective(_) => 3,
        Error::Io(_) | Error::Json(_) | Error::Schema { .. } => 4,
    }
}

fn apply_common(cfg: &mut ExperimentConfig, c: &Common) {
    if let Some(s) = c.seed {
        cfg.run.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
}

fn apply_run(cfg: &mut ExperimentConfig, a: &RunArgs) {
    apply_common(cfg, &a.common);
    if let Some(d) = a.d {
        cfg.objective.dim = d;
    }
    if let Some(t) = a.t {
        cfg.run.rounds = t;
    }
    if let Some(n) = a.n_init {
        cfg.run.n_init = n;
    }
    if let Some(n) = a.n_cyc {
        cfg.run.n_cyc = n;
    }
    if let Some(v) = a.variant {
        cfg.run.variant = v;
    }
    if let Some(r) = a.runs {
        cfg.runs = r;
    }
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("addbo-out"))
}

/// Run `f` for every seed, on `jobs` threads when parallelism is compiled in.
fn for_each_seed<F>(seeds: &[u64], jobs: Option<usize>, f: F) -> Vec<Result<RunRecord>>
where
    F: Fn(u64) -> Result<RunRecord> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || seeds.par_iter().map(|&s| f(s)).collect();
        match jobs {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(run),
                Err(e) => {
                    log::warn!("could not start {n} workers ({e}); using the global pool");
                    run()
                }
            },
            None => run(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        if jobs.is_some_and(|n| n > 1) {
            log::warn!("built without parallel support; --jobs is ignored");
        }
        seeds.iter().map(|&s| f(s)).collect()
    }
}

fn save_runs(results: Vec<Result<RunRecord>>, dir: &Path) -> Result<()> {
    let mut first_failure = None;
    for r in results {
        let record = r?;
        let seed = record.config["run"]["seed"].as_u64().unwrap_or(0);
        let stem = format!("{}_seed{seed}", record.method);
        persist_run(&record, &dir.join(format!("{stem}.json")))?;
        write_trace_csv(&record, &dir.join(format!("{stem}.csv")))?;
        let final_regret = record.trace.final_simple().map_or("n/a".to_string(), |v| format!("{v:.6}"));
        println!("{stem}: {} rounds, simple regret {final_regret}", record.trace.len());
        if record.truncated && first_failure.is_none() {
            first_failure = record.error.clone();
        }
    }
    match first_failure {
        Some(msg) => Err(Error::Objective(msg)),
        None => Ok(()),
    }
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.runs() as u64).map(|k| cfg.run.seed + k).collect()
}

fn cmd_recover(mut cfg: ExperimentConfig, a: &RecoverArgs, jobs: Option<usize>) -> Result<()> {
    apply_common(&mut cfg, &a.common);
    if let Some(d) = &a.d {
        cfg.recover.dims = d.clone();
    }
    if let Some(n) = &a.n {
        cfg.recover.sizes = n.clone();
    }
    if let Some(t) = a.trials {
        cfg.recover.trials = t;
    }
    cfg.validate()?;
    if cfg.recover.dims.iter().any(|&d| d < 2) || cfg.recover.sizes.contains(&0) {
        return Err(Error::Config("recovery needs D >= 2 and N >= 1".into()));
    }
    let cells: Vec<(usize, usize)> =
        cfg.recover.dims.iter().flat_map(|&d| cfg.recover.sizes.iter().map(move |&n| (d, n))).collect();
    let work = |&(d, n): &(usize, usize)| {
        log::info!("recovery D={d} N={n}");
        recovery_experiment(d, n, cfg.recover.trials, &cfg.gibbs, &cfg.kernel, cfg.run.seed)
    };
    #[cfg(feature = "parallel")]
    let summaries: Vec<Result<_>> = {
        use rayon::prelude::*;
        match jobs.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
            Some(Ok(pool)) => pool.install(|| cells.par_iter().map(work).collect()),
            _ => cells.par_iter().map(work).collect(),
        }
    };
    #[cfg(not(feature = "parallel"))]
    let summaries: Vec<Result<_>> = {
        let _ = jobs;
        cells.iter().map(work).collect()
    };
    let summaries = summaries.into_iter().collect::<Result<Vec<_>>>()?;
    let dir = out_dir(&cfg);
    write_recovery_tables(&summaries, &dir)?;
    for s in &summaries {
        println!(
            "D={} N={}: together {}, separated {}, rand index {}",
            s.d,
            s.n,
            s.together.cell(),
            s.separated.cell(),
            s.rand_index.cell()
        );
    }
    println!("tables written to {}", dir.display());
    Ok(())
}

fn cmd_sequential(mut cfg: ExperimentConfig, a: &SequentialArgs, jobs: Option<usize>) -> Result<()> {
    apply_run(&mut cfg, &a.run);
    cfg.validate()?;
    let domain = cfg.domain();
    let beta = cfg.beta();
    let results = for_each_seed(&seeds(&cfg), jobs, |seed| {
        let f = generate_synthetic(cfg.objective.dim, seed, &cfg.kernel, cfg.objective.features)?;
        let run = addbo::experiment::RunConfig { seed, ..cfg.run.clone() };
        addbo::experiment::run_sequential_bo(&f, &domain, &run, &cfg.gibbs, &cfg.kernel, &beta)
    });
    save_runs(results, &out_dir(&cfg))
}

fn cmd_batch(mut cfg: ExperimentConfig, a: &BatchArgs, jobs: Option<usize>) -> Result<()> {
    apply_run(&mut cfg, &a.run);
    if let Some(b) = a.b {
        cfg.batch.batch_size = b;
    }
    if let Some(e) = a.explorer {
        cfg.batch.explorer = e;
    }
    if let Some(c) = a.combiner {
        if cfg.batch.explorer == Explorer::Rand {
            return Err(Error::Config("--combiner has no effect with --explorer rand".into()));
        }
        cfg.batch.combiner = c;
    }
    cfg.validate()?;
    cfg.batch.validate()?;
    let domain = cfg.domain();
    let beta = cfg.beta();
    let results = for_each_seed(&seeds(&cfg), jobs, |seed| {
        let f = generate_synthetic(cfg.objective.dim, seed, &cfg.kernel, cfg.objective.features)?;
        let run = addbo::experiment::RunConfig { seed, ..cfg.run.clone() };
        run_batch_bo(&f, &domain, &cfg.batch, &run, &cfg.gibbs, &cfg.kernel, &beta)
    });
    save_runs(results, &out_dir(&cfg))
}

fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let records = a.runs.iter().map(|p| load_run(p)).collect::<Result<Vec<_>>>()?;
    let rows = compare_runs(&records)?;
    match &a.out {
        Some(path) => {
            write_comparison_csv(&rows, path)?;
            println!("{} rows written to {}", rows.len(), path.display());
        }
        None => {
            println!("method,t,runs,median_simple,iqr_simple,median_avg_cumulative,iqr_avg_cumulative");
            for r in rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.method, r.t, r.runs, r.median_simple, r.iqr_simple, r.median_avg_cumulative, r.iqr_avg_cumulative
                );
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Recover(a) => cmd_recover(cfg, a, cli.jobs),
        Command::Sequential(a) => cmd_sequential(cfg, a, cli.jobs),
        Command::Batch(a) => cmd_batch(cfg, a, cli.jobs),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ADDBO_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
