//! `pnmimo`: sweeps, figure presets and lemma checks from the command line.
//!
//! Exit codes: 0 success, 1 I/O failure or failed lemma checks, 2 invalid
//! configuration, 3 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pnmimo_core::config::ConfigFile;
use pnmimo_core::lemmas::{run_suite, write_records_csv, SuiteConfig, SuiteReport, EXACT_TOLERANCE};
use pnmimo_core::output::{emit_results, write_results, Format};
use pnmimo_core::presets::{list_presets, preset};
use pnmimo_core::sweep::{run_config, RunOptions};
use pnmimo_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "pnmimo", version, about = "Massive-MIMO downlink precoding under oscillator phase noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every [[sweep]] section of a config file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a built-in preset, or list them.
    Preset {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the lemma convergence suite.
    Lemmas {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        /// CSV of median error per lemma and size.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config file without running it.
    ValidateConfig { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json-lines"])]
    format: String,
    /// Record per-point wall time.
    #[arg(long)]
    timing: bool,
    /// Force the Monte-Carlo estimator on.
    #[arg(long, conflicts_with = "analytical_only")]
    empirical: bool,
    /// Skip the Monte-Carlo estimator.
    #[arg(long)]
    analytical_only: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            realizations: self.realizations,
            parallelism: self.parallelism,
            empirical: match (self.empirical, self.analytical_only) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            },
            timing: self.timing,
        }
    }
}

fn run(args: &RunArgs, config: &ConfigFile) -> Result<(), Error> {
    let format: Format = args.format.parse()?;
    let rows = run_config(config, &args.options())?;
    match &args.out {
        Some(path) => emit_results(&rows, format, path),
        None => {
            let stdout = std::io::stdout();
            write_results(&rows, format, stdout.lock(), &PathBuf::from("<stdout>"))
        }
    }
}

fn print_lemma_report(report: &SuiteReport) {
    let mark = |ok: bool| if ok { "ok  " } else { "FAIL" };
    println!(
        "{} inversion identity     max deviation {:.3e} (tolerance {EXACT_TOLERANCE:e})",
        mark(report.inversion_max_deviation <= EXACT_TOLERANCE),
        report.inversion_max_deviation
    );
    println!(
        "{} resolvent identity     max deviation {:.3e} (tolerance {EXACT_TOLERANCE:e})",
        mark(report.resolvent_max_deviation <= EXACT_TOLERANCE),
        report.resolvent_max_deviation
    );
    println!("{} rank-1 bound            violations {}", mark(report.rank1_violations == 0), report.rank1_violations);
    for r in &report.records {
        let w = SuiteReport::window_for(&r.name);
        println!(
            "{} {:<22} slope {:+.3} in [{}, {}]",
            mark(r.slope_within(w)),
            r.name,
            r.slope,
            w.0,
            w.1
        );
    }
    for (i, d) in report.quadratic_deviations[..3].iter().enumerate() {
        println!("{} quadratic identity {}   median deviation {d:.4} (tolerance 0.05)", mark(*d <= 0.05), i + 1);
    }
}

fn lemmas(seed: u64, parallelism: usize, out: Option<&PathBuf>) -> Result<bool, Error> {
    if parallelism == 0 {
        return Err(Error::config("parallelism", "must be at least 1"));
    }
    let pool = rayon_pool(parallelism)?;
    let report = pool.install(|| run_suite(&SuiteConfig { seed, ..SuiteConfig::default() }))?;
    print_lemma_report(&report);
    if let Some(path) = out {
        write_records_csv(&report.records, path)?;
    }
    Ok(report.passed())
}

fn rayon_pool(n: usize) -> Result<rayon::ThreadPool, Error> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
}

fn execute(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Sweep { config, run: args } => {
            run(&args, &ConfigFile::load(&config)?)?;
            Ok(true)
        }
        Command::Preset { list: true, .. } => {
            let mut out = std::io::stdout().lock();
            for p in list_presets() {
                let names = std::iter::once(p.name).chain(p.aliases.iter().copied()).collect::<Vec<_>>().join(", ");
                let _ = writeln!(
                    out,
                    "{names}\n    {}\n    rate: {}, snr: {}",
                    p.description,
                    p.rate.label(),
                    p.snr_convention.label()
                );
            }
            Ok(true)
        }
        Command::Preset { name, run: args, .. } => {
            let p = preset(name.as_deref().unwrap_or_default())?;
            run(&args, &p.config()?)?;
            Ok(true)
        }
        Command::Lemmas { seed, parallelism, out } => lemmas(seed, parallelism, out.as_ref()),
        Command::ValidateConfig { config } => {
            let cfg = ConfigFile::load(&config)?;
            cfg.validate()?;
            let points: usize = cfg.sweeps.iter().map(|s| s.values.len()).sum();
            println!("{}: ok ({} sweeps, {points} points)", config.display(), cfg.sweeps.len());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Numerical => 3,
                ErrorClass::Io => 1,
            })
        }
    }
}
