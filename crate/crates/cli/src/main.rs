use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dusvgd_core::config::{ExperimentConfig, KvFile, Variant};
use dusvgd_core::experiment::{self, read_particles, write_history, Report};
use dusvgd_core::selftest;

#[derive(Parser, Debug)]
#[command(name = "dusvgd", version, about = "SVGD with trainable step-size schedules")]
struct Cli {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 1 gives bitwise reproducible runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a DUSVGD or C-DUSVGD schedule and save it.
    Train {
        /// Overrides `variant`.
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Run an experiment and write its curves.
    Run {
        /// Overrides `variant`.
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Evaluate saved particles on the held-out split.
    Eval {
        /// Particle file; defaults to `<out>/particles.csv`.
        #[arg(long)]
        particles: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<dusvgd_core::Error> for Failure {
    fn from(e: dusvgd_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(cli: &Cli, variant: Option<Variant>) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Usage("--config <path> is required".into()))?;
    if !path.is_file() {
        return Err(Failure::Usage(format!("config file not found: {}", path.display())));
    }
    let mut cfg = ExperimentConfig::read(path)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(v) = variant {
        cfg.variant = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn cmd_train(cli: &Cli, variant: Option<Variant>) -> Result<(), Failure> {
    let cfg = load_config(cli, variant)?;
    let start = Instant::now();
    let prepared = experiment::prepare(&cfg)?;
    let training = experiment::train(&cfg, &prepared, cfg.variant)?;
    create_out(&cli.out)?;
    let path = cli.out.join("schedule.cfg");
    training.schedule.save(&path)?;
    write_history(&training.history, cli.out.join("train_history.csv"))?;
    println!("{}", training.schedule.to_kv());
    eprintln!("trained {} in {:.1}s, saved {}", cfg.variant, start.elapsed().as_secs_f64(), path.display());
    Ok(())
}

fn cmd_run(cli: &Cli, variant: Option<Variant>) -> Result<(), Failure> {
    let cfg = load_config(cli, variant)?;
    let start = Instant::now();
    let report: Report = experiment::run_experiment(&cfg)?;
    report.write(&cli.out)?;
    print!("{}", report.summary());
    eprintln!("finished in {:.1}s, results in {}", start.elapsed().as_secs_f64(), cli.out.display());
    match report.curve.errors.len() {
        0 => Ok(()),
        n => Err(Failure::Runtime(format!("{n} of {} trials failed", cfg.run.trials))),
    }
}

fn cmd_eval(cli: &Cli, particles: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(cli, None)?;
    let path = particles.map_or_else(|| cli.out.join("particles.csv"), Path::to_path_buf);
    let sets = read_particles(&path)?;
    let (metric, values) = experiment::evaluate_particles(&cfg, &sets)?;
    let mut kv = KvFile::new();
    kv.set("metric", &metric);
    kv.set("trials", values.len());
    for (t, v) in values.iter().enumerate() {
        kv.set(format!("trial.{t}"), v);
    }
    if !values.is_empty() {
        kv.set("mean", values.iter().sum::<f64>() / values.len() as f64);
    }
    print!("{kv}");
    Ok(())
}

fn cmd_selftest() -> Result<(), Failure> {
    let results = selftest::run_all();
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    for r in &results {
        match &r.outcome {
            Ok(()) => println!("ok   {}", r.name),
            Err(msg) => println!("FAIL {}: {msg}", r.name),
        }
    }
    println!("{} checks, {failed} failed", results.len());
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{failed} selftest checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Train { variant } => cmd_train(&cli, *variant),
        Command::Run { variant } => cmd_run(&cli, *variant),
        Command::Eval { particles } => cmd_eval(&cli, particles.as_deref()),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
