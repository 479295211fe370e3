use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admissible::AdmissibleFunction;
use crate::distributions::{iid_family, CouplingMode, DistributionSpec, MeanZeroDistribution};
use crate::error::{Error, Result};
use crate::numerics::Quadrature;

/// Version of the config, report and CSV layouts.
pub const SCHEMA_VERSION: u32 = 1;

/// The four experiment kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Expand,
    Verify,
    Concentration,
    OrderFit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Expand => "expand",
            Task::Verify => "verify",
            Task::Concentration => "concentration",
            Task::OrderFit => "order-fit",
        }
    }
}

/// A test function from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `1{x ≤ k}`.
    Indicator { k: f64 },
    /// `(x − k)_+`.
    Call { k: f64 },
    /// `Σ coeffs[i] x^i`; `order` overrides the default regularity order.
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
    },
    Cos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<usize>,
    },
    /// `e^{−x²/2}`, classified at the given order.
    ExpBounded { order: usize },
}

impl FunctionSpec {
    /// Builds the catalog function, optionally reclassified to `(alpha, p)`.
    pub fn build(&self, alpha: Option<f64>, p: Option<f64>) -> Result<AdmissibleFunction> {
        let h = match self {
            FunctionSpec::Indicator { k } => AdmissibleFunction::indicator(*k),
            FunctionSpec::Call { k } => AdmissibleFunction::call(*k),
            FunctionSpec::Polynomial { coeffs, order: None } => AdmissibleFunction::polynomial(coeffs),
            FunctionSpec::Polynomial { coeffs, order: Some(n) } => {
                AdmissibleFunction::polynomial_with_order(coeffs, *n, 1.0, 0.0)?
            }
            FunctionSpec::Cos { order: None } => AdmissibleFunction::cos(),
            FunctionSpec::Cos { order: Some(n) } => AdmissibleFunction::cos_with_order(*n)?,
            FunctionSpec::ExpBounded { order } => AdmissibleFunction::exp_bounded(*order)?,
        };
        if alpha.is_none() && p.is_none() {
            return Ok(h);
        }
        h.reclassified(alpha.unwrap_or(h.alpha()), p.unwrap_or(h.p()))
    }
}

/// Which oracle supplies `E[h(W)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    Exact,
    MonteCarlo,
    None,
}

/// Named groups of the identity suite run by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    ZeroBias,
    Moments,
    ReverseTaylor,
    Stein,
    CallIdentity,
    Lambda,
    Coupling,
    Ledger,
}

impl CheckName {
    pub const ALL: [CheckName; 8] = [
        CheckName::ZeroBias,
        CheckName::Moments,
        CheckName::ReverseTaylor,
        CheckName::Stein,
        CheckName::CallIdentity,
        CheckName::Lambda,
        CheckName::Coupling,
        CheckName::Ledger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckName::ZeroBias => "zero-bias",
            CheckName::Moments => "moments",
            CheckName::ReverseTaylor => "reverse-taylor",
            CheckName::Stein => "stein",
            CheckName::CallIdentity => "call-identity",
            CheckName::Lambda => "lambda",
            CheckName::Coupling => "coupling",
            CheckName::Ledger => "ledger",
        }
    }
}

/// Deliberate faults for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Shifts every value of `f_h` by `1e-3` in the Stein checks.
    SteinPerturbation,
}

/// Size of the injected Stein fault.
pub const FAULT_OFFSET: f64 = 1e-3;

/// Everything a run needs; written back into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// When present, must match the subcommand being run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Task>,
    /// Base law `Z`; the family for size `n` is `n` copies of `Z/√n`.
    pub distribution: DistributionSpec,
    /// Explicit summands, used instead of the `Z/√n` family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summands: Option<Vec<DistributionSpec>>,
    /// Declared moment limit applied to every summand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_limit: Option<f64>,
    pub function: FunctionSpec,
    pub order: usize,
    /// Hölder exponent of the top derivative; defaults to the function's own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Polynomial growth exponent; defaults to the function's own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub n_grid: Vec<usize>,
    pub oracle: OracleChoice,
    pub seed: u64,
    pub mc_samples: usize,
    /// Atom-pair cap for exact enumeration.
    pub cap: usize,
    pub quadrature: Quadrature,
    pub budget: bool,
    pub out: PathBuf,
    /// Checks run by `verify`; empty means all.
    pub checks: Vec<CheckName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<Fault>,
    pub coupling: CouplingMode,
    /// Hölder exponents swept by `concentration`.
    pub alpha_grid: Vec<f64>,
    /// Points per axis of the concentration `(a, b)` grid.
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            subcommand: None,
            distribution: DistributionSpec::TwoPoint { p: 0.2 },
            summands: None,
            moment_limit: None,
            function: FunctionSpec::Call { k: 0.1 },
            order: 1,
            alpha: None,
            p: None,
            n_grid: vec![16, 32, 64, 128, 256, 512, 1024],
            oracle: OracleChoice::Exact,
            seed: 0,
            mc_samples: 200_000,
            cap: crate::oracle::DEFAULT_CAP,
            quadrature: Quadrature::default(),
            budget: true,
            out: PathBuf::from("out"),
            checks: Vec::new(),
            fault: None,
            coupling: CouplingMode::Independent,
            alpha_grid: vec![0.5, 1.0],
            grid_points: 20,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config; messages carry the line and column of the problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be a non-empty list of positive sizes".into());
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return bad(format!("alpha must lie in (0, 1], got {a}"));
            }
        }
        if let Some(p) = self.p {
            if !(p >= 0.0 && p.is_finite()) {
                return bad(format!("p must be non-negative, got {p}"));
            }
        }
        if self.oracle == OracleChoice::MonteCarlo && self.mc_samples < 1000 {
            return bad(format!("mc_samples must be at least 1000, got {}", self.mc_samples));
        }
        if self.grid_points < 2 {
            return bad("grid_points must be at least 2".into());
        }
        if self.alpha_grid.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return bad("alpha_grid entries must lie in (0, 1]".into());
        }
        if matches!(self.summands.as_deref(), Some([])) {
            return bad("summands must not be empty".into());
        }
        Ok(())
    }

    /// The configured test function with any `(alpha, p)` override.
    pub fn function(&self) -> Result<AdmissibleFunction> {
        self.function.build(self.alpha, self.p)
    }

    fn limited(&self, d: MeanZeroDistribution) -> MeanZeroDistribution {
        match self.moment_limit {
            Some(l) => d.with_moment_limit(l),
            None => d,
        }
    }

    pub fn base(&self) -> Result<MeanZeroDistribution> {
        Ok(self.limited(MeanZeroDistribution::from_spec(&self.distribution)?))
    }

    /// Families to run, labelled by size: the explicit summands once, or
    /// `Z/√n` for every `n` of the grid.
    pub fn families(&self) -> Result<Vec<(usize, Vec<MeanZeroDistribution>)>> {
        if let Some(specs) = &self.summands {
            let fam = specs
                .iter()
                .map(|s| Ok(self.limited(MeanZeroDistribution::from_spec(s)?)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(vec![(fam.len(), fam)]);
        }
        let base = self.base()?;
        self.n_grid
            .iter()
            .map(|&n| Ok((n, iid_family(&base, n)?)))
            .collect()
    }
}
