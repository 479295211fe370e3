//! Configuration-driven experiment runner.
//!
//! Each subcommand reads an [`ExperimentConfig`] (JSON, every field
//! optional), applies command-line overrides, and writes a CSV plus a JSON
//! report that embeds the effective config. Randomness flows from the
//! single `seed` through [`derive_seed`](crate::distributions::derive_seed)
//! with a fixed label per task, so a report can be regenerated from its
//! embedded config.

mod checks;
mod config;
mod run;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use checks::{call_identity_scale, growth_ratio, run_checks, stock_distributions, CheckOutcome};
pub use config::{
    CheckName, ExperimentConfig, Fault, FunctionSpec, OracleChoice, Task, FAULT_OFFSET, SCHEMA_VERSION,
};
pub use run::{
    concentration_cells, expand_rows, order_fits, run, summarize, ConcentrationCell, ConcentrationSummary,
    ExpandRow, RunOutcome, SeriesFit,
};

use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "zerobias", version, about = "Zero-bias expansions of E[h(W)] with exact oracles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expansion ledger, error budget and oracle comparison over the n-grid.
    Expand(CommonArgs),
    /// Identity suite; exits with status 1 when any check fails.
    Verify(VerifyArgs),
    /// Exact probabilities against the concentration bounds.
    Concentration(CommonArgs),
    /// Convergence-order fits of the expansion errors.
    OrderFit(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; omitted fields take their defaults.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated family sizes.
    #[arg(long = "n-grid", value_name = "LIST", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,
    #[arg(long, value_name = "A")]
    pub alpha: Option<f64>,
    /// Suppress the table on standard output.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Restrict to these check groups (repeatable).
    #[arg(long = "check", value_enum)]
    pub checks: Vec<CheckName>,
    /// Inject a fault, as a negative control.
    #[arg(long, value_enum)]
    pub fault: Option<Fault>,
}

impl CommonArgs {
    /// Loads the config (or the defaults) and applies the flags.
    pub fn resolve(&self, task: Task) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let mut cfg = ExperimentConfig::default();
                if task == Task::Concentration {
                    cfg.n_grid = vec![16, 256];
                }
                cfg
            }
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(g) = &self.n_grid {
            cfg.n_grid = g.clone();
        }
        if let Some(n) = self.order {
            cfg.order = n;
        }
        if let Some(a) = self.alpha {
            match task {
                Task::Concentration => cfg.alpha_grid = vec![a],
                _ => cfg.alpha = Some(a),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Command {
    pub fn task(&self) -> Task {
        match self {
            Command::Expand(_) => Task::Expand,
            Command::Verify(_) => Task::Verify,
            Command::Concentration(_) => Task::Concentration,
            Command::OrderFit(_) => Task::OrderFit,
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Expand(c) | Command::Concentration(c) | Command::OrderFit(c) => c,
            Command::Verify(v) => &v.common,
        }
    }

    /// The effective config for this invocation.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = self.common().resolve(self.task())?;
        if let Command::Verify(v) = self {
            if !v.checks.is_empty() {
                cfg.checks = v.checks.clone();
            }
            if v.fault.is_some() {
                cfg.fault = v.fault;
            }
        }
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs, and maps the outcome to an
/// exit status: 0 on success, 1 when a check fails, 2 on errors.
pub fn main_entry<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let quiet = cli.command.common().quiet;
    let outcome = cli.command.config().and_then(|cfg| run(cli.command.task(), &cfg));
    match outcome {
        Ok(o) => {
            if !quiet {
                print!("{}", o.table);
                for f in &o.files {
                    println!("wrote {}", f.display());
                }
            }
            if o.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
