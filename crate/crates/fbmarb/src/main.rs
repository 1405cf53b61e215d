use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fbmarb::config::{ConfigError, ExperimentConfig, ExperimentKind};
use fbmarb::experiments::{run_experiment, ExperimentError};
use fbmarb::report::write_outputs;
use fbmarb::simulate::{simulate_paths, write_paths, Method, SimulateOptions};
use fbmarb::validate::{run_smoke_suite, SmokeOptions};
use fbmarb_core::{HurstParam, TimeGrid};

const EXIT_CONFIG: u8 = 2;
const EXIT_VERDICT: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "fbmarb", version, about = "Fractional Brownian market simulations and experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FBMARB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write sample paths as `t,value` CSV files.
    Simulate {
        #[arg(long)]
        h: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// History length of the driver (default: truncation rule).
        #[arg(long)]
        l: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value = "paths")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Mvn)]
        method: Method,
    },
    /// Run an experiment from a TOML config file.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long, env = "FBMARB_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Run the fast invariant suite.
    Validate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Scales the normalizing constant of the coupled generator.
        #[arg(long, hide = true, default_value_t = 1.0)]
        fault_coefficient_scale: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { h, n, t, l, seed, count, out, method } => simulate(h, n, t, l, seed, count, out, method),
        Command::Experiment { kind, config, out } => experiment(kind, config, out, cli.threads),
        Command::Validate { seed, fault_coefficient_scale } => {
            validate(SmokeOptions { coefficient_scale: fault_coefficient_scale, seed }, cli.threads)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(h: f64, n: usize, t: f64, l: Option<f64>, seed: u64, count: usize, out: PathBuf, method: Method) -> ExitCode {
    let opts = (|| {
        Ok::<_, fbmarb_core::Error>(SimulateOptions {
            hurst: HurstParam::new(h)?,
            grid: TimeGrid::new(t, n)?,
            history: l,
            seed,
            count,
            method,
        })
    })();
    let opts = match opts {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let paths = match simulate_paths(&opts) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match write_paths(&paths, &out) {
        Ok(files) => {
            println!("wrote {} path(s) to {}", files.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", out.display());
            ExitCode::from(EXIT_IO)
        }
    }
}

fn experiment(kind: ExperimentKind, config: PathBuf, out: Option<PathBuf>, threads: Option<usize>) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(kind, &text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(dir) = out {
        cfg.output = dir;
    }
    let report = match run_experiment(&cfg, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                ExperimentError::Config(ConfigError::Parse(_) | ConfigError::Invalid(_)) => EXIT_CONFIG,
                ExperimentError::Measurability { .. } => EXIT_CONFIG,
                ExperimentError::Core(_) => EXIT_NUMERICAL,
                ExperimentError::Threads(_) => EXIT_IO,
            });
        }
    };
    for t in &report.tables {
        let failed = t.rows.iter().filter(|r| !matches!(r.verdict, fbmarb::report::Verdict::Pass | fbmarb::report::Verdict::Info)).count();
        println!("{:<48} {:>4} rows  {:>3} failing", t.name, t.rows.len(), failed);
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.rule, c.detail);
    }
    for x in &report.excluded {
        println!("excluded {x}");
    }
    match write_outputs(&report, &cfg.output) {
        Ok(m) => println!("{} files in {} ({:?})", m.files.len() + 1, cfg.output.display(), report.outcome),
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", cfg.output.display());
            return ExitCode::from(EXIT_IO);
        }
    }
    ExitCode::from(report.outcome.exit_code() as u8)
}

fn validate(opts: SmokeOptions, threads: Option<usize>) -> ExitCode {
    // the suite is sequential; the thread budget only needs to be valid
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_IO);
    }
    let checks = run_smoke_suite(&opts);
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERDICT)
    }
}
