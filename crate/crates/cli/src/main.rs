use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pqlearn_core::harness::{builtin, emit_plot, run_scenario, verify, Scenario, TrialReport, ALL_CRITERIA, BUILTIN_NAMES};
use pqlearn_core::par::Parallelism;
use pqlearn_core::slicedice::Mode;

#[derive(Parser)]
#[command(name = "pqlearn", version, about = "PQ-learning trials, sweeps, plots and the acceptance suite")]
struct Cli {
    /// Run trials one after another instead of across threads.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario's trials and write a JSON report.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Write the per-trial table as CSV next to the report.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario once per accuracy and write the reports as a JSON array.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon_grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a planar report as SVG.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance suite.
    Verify {
        #[arg(long, env = "PQLEARN_SEED", default_value_t = 42)]
        seed: u64,
        /// Subset of criteria to run, e.g. `1,2,11`.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A scenario plus command-line overrides of its fields.
#[derive(Args)]
struct ScenarioArgs {
    /// A built-in name or a path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, env = "PQLEARN_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Sampling,
}

impl ScenarioArgs {
    fn load(&self) -> Result<Scenario> {
        let mut s = match builtin(&self.scenario) {
            Some(s) => s,
            None if Path::new(&self.scenario).exists() => {
                let text = fs::read_to_string(&self.scenario).with_context(|| format!("reading {}", self.scenario))?;
                Scenario::from_json(&text)?
            }
            None => bail!("unknown scenario {:?}; built-ins are {}", self.scenario, BUILTIN_NAMES.join(", ")),
        };
        if let Some(d) = self.delta {
            s.delta = d;
        }
        if let Some(t) = self.trials {
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(m) = self.mode {
            s.mode = match m {
                ModeArg::Exact => Mode::Exact,
                ModeArg::Sampling => Mode::Sampling,
            };
        }
        Ok(s)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn summary(r: &TrialReport) {
    let a = &r.aggregate;
    eprintln!(
        "{} ε = {}: {}/{} trials succeeded, {} timed out, {} errors, contract {}",
        r.scenario.name,
        r.scenario.epsilon,
        a.successes,
        a.trials,
        a.timeouts,
        a.errors,
        if a.contract_met { "met" } else { "NOT met" }
    );
}

fn execute(cli: Cli) -> Result<bool> {
    let parallelism = if cli.sequential { Parallelism::Sequential } else { Parallelism::Parallel };
    match cli.command {
        Command::Run { scenario, epsilon, csv, out } => {
            let mut s = scenario.load()?;
            if let Some(e) = epsilon {
                s.epsilon = e;
            }
            let report = run_scenario(&s, parallelism)?;
            summary(&report);
            emit(out.as_deref(), &report.to_json(true))?;
            if let Some(path) = csv {
                let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(file)?;
            }
            Ok(report.aggregate.contract_met)
        }
        Command::Sweep { scenario, epsilon_grid, out } => {
            let base = scenario.load()?;
            let mut reports = Vec::with_capacity(epsilon_grid.len());
            for e in epsilon_grid {
                let mut s = base.clone();
                s.epsilon = e;
                let r = run_scenario(&s, parallelism)?;
                summary(&r);
                reports.push(r);
            }
            emit(out.as_deref(), &serde_json::to_string_pretty(&reports)?)?;
            Ok(reports.iter().all(|r| r.aggregate.contract_met))
        }
        Command::Plot { report, out } => {
            let text = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let svg = emit_plot(&TrialReport::from_json(&text)?)?;
            fs::write(&out, svg).with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
        Command::Verify { seed, criteria, out } => {
            let ids = if criteria.is_empty() { ALL_CRITERIA.to_vec() } else { criteria };
            if let Some(bad) = ids.iter().find(|&&i| !ALL_CRITERIA.contains(&i)) {
                bail!("no criterion {bad}; criteria are 1 to {}", ALL_CRITERIA.len());
            }
            let report = verify(seed, &ids, parallelism);
            for c in &report.criteria {
                eprintln!("{} {:>2} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
            }
            emit(out.as_deref(), &report.to_json(true))?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
