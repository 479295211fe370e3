//! Ground truth for `E[h(W)]`: exact convolution of discrete summands,
//! Monte Carlo with standard errors, and log-log order fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admissible::{AdmissibleFunction, Differentiable};
use crate::distributions::{
    derive_seed, iid_family, rng_from_seed, total_variance, CouplingMode, CouplingSampler, Law, MeanZeroDistribution,
};
use crate::error::{domain, Error, Result};
use crate::expansion::Expander;
use crate::numerics::CompensatedSum;

/// Default cap on atom pairs formed in one convolution step.
pub const DEFAULT_CAP: usize = 10_000_000;

/// Errors below this are treated as zero by [`order_fit`].
pub const FIT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
    pub std_error: f64,
    /// Support size for enumeration, sample count for Monte Carlo.
    pub count: usize,
}

fn canonical_order(summands: &[MeanZeroDistribution]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..summands.len()).collect();
    idx.sort_by(|&a, &b| {
        let (la, lb) = (summands[a].law().atoms(), summands[b].law().atoms());
        la.len().cmp(&lb.len()).then_with(|| {
            la.iter()
                .zip(lb)
                .map(|(x, y)| x.x.total_cmp(&y.x).then(x.w.total_cmp(&y.w)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    idx
}

/// Exact law of `W` by iterated convolution in a canonical summand order,
/// so the result does not depend on how the summands were listed.
pub fn exact_law(summands: &[MeanZeroDistribution], cap: usize) -> Result<Law> {
    if summands.is_empty() {
        return Err(domain("at least one summand is required"));
    }
    if let Some(i) = summands.iter().position(|d| !d.is_discrete()) {
        return Err(Error::Unsupported(format!(
            "summand {i} is not finite-discrete; use the Monte Carlo oracle"
        )));
    }
    let scale: f64 = summands
        .iter()
        .map(|d| {
            let (lo, hi) = d.support();
            lo.abs().max(hi.abs())
        })
        .sum();
    let tol = 1e-12 * scale;
    let order = canonical_order(summands);
    let mut law = Law::discrete([crate::distributions::Atom { x: 0.0, w: 1.0 }]);
    for &i in &order {
        let pairs = law.atoms().len() * summands[i].law().atoms().len();
        if pairs > cap {
            return Err(Error::Capacity(format!(
                "convolution step needs {pairs} atom pairs, above the cap {cap}; use the Monte Carlo oracle"
            )));
        }
        law = law.convolve_discrete(summands[i].law(), tol)?;
    }
    Ok(law)
}

/// `E[h(L)]` for a discrete law.
pub fn expectation_under(h: &AdmissibleFunction, law: &Law) -> Result<f64> {
    if !law.is_discrete() {
        return Err(Error::Unsupported("expected a discrete law".into()));
    }
    let mut acc = CompensatedSum::new();
    for a in law.atoms() {
        acc.add(a.w * h.value(a.x));
    }
    Ok(acc.value())
}

/// Exact `E[h(W)]`.
pub fn exact_expectation(h: &AdmissibleFunction, summands: &[MeanZeroDistribution], cap: usize) -> Result<OracleResult> {
    let law = exact_law(summands, cap)?;
    Ok(OracleResult {
        value: expectation_under(h, &law)?,
        method: OracleMethod::ExactEnumeration,
        std_error: 0.0,
        count: law.atoms().len(),
    })
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Monte Carlo `E[h(W)]`; `count` must be at least 1000.
pub fn mc_expectation(
    h: &AdmissibleFunction,
    summands: &[MeanZeroDistribution],
    count: usize,
    seed: u64,
) -> Result<OracleResult> {
    if count < 1000 {
        return Err(domain(format!("Monte Carlo needs at least 1000 samples, got {count}")));
    }
    let sampler = CouplingSampler::new(summands, CouplingMode::Independent)?;
    let mut rng = rng_from_seed(seed);
    let mut acc = Welford::default();
    for _ in 0..count {
        acc.push(h.value(sampler.draw_sum(&mut rng)));
    }
    Ok(OracleResult {
        value: acc.mean,
        method: OracleMethod::MonteCarlo,
        std_error: acc.std_error(),
        count,
    })
}

/// `E[W f(W)] − σ_W² E[f'(W*)]` from coupled draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub residual: f64,
    pub std_error: f64,
    pub count: usize,
    pub mode: CouplingMode,
}

pub fn zero_bias_identity_mc(
    summands: &[MeanZeroDistribution],
    f: &Differentiable,
    count: usize,
    seed: u64,
    mode: CouplingMode,
) -> Result<IdentityResidual> {
    if count < 2 {
        return Err(domain("Monte Carlo needs at least 2 samples"));
    }
    f.derivative(1, 0.0)?;
    let var = total_variance(summands);
    let sampler = CouplingSampler::new(summands, mode)?;
    let mut rng = rng_from_seed(seed);
    let mut acc = Welford::default();
    for _ in 0..count {
        let d = sampler.draw(&mut rng);
        let fp = f.derivative(1, d.w_star)?;
        acc.push(d.w * f.value(d.w) - var * fp);
    }
    Ok(IdentityResidual {
        residual: acc.mean,
        std_error: acc.std_error(),
        count,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub n: usize,
    pub error: f64,
    /// Below [`FIT_FLOOR`] and left out of the regression.
    pub excluded: bool,
}

/// Least-squares fit of `log|error| = intercept + slope·log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub points: Vec<FitPoint>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    /// 95% normal-approximation interval for the slope.
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
    pub max_abs_residual: f64,
    pub excluded_any: bool,
}

pub fn order_fit(ns: &[usize], errors: &[f64]) -> Result<OrderFit> {
    if ns.len() != errors.len() {
        return Err(domain("n and error series differ in length"));
    }
    if ns.len() < 4 {
        return Err(domain(format!("an order fit needs at least 4 points, got {}", ns.len())));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) || ns[0] == 0 {
        return Err(domain("n must be positive and strictly increasing"));
    }
    let points: Vec<FitPoint> = ns
        .iter()
        .zip(errors)
        .map(|(&n, &e)| FitPoint {
            n,
            error: e.abs(),
            excluded: !(e.abs() >= FIT_FLOOR),
        })
        .collect();
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| !p.excluded)
        .map(|p| ((p.n as f64).ln(), p.error.ln()))
        .collect();
    if used.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "{} of {} errors lie below {FIT_FLOOR:e}",
            points.len() - used.len(),
            points.len()
        )));
    }
    let m = used.len() as f64;
    let mx = used.iter().map(|p| p.0).sum::<f64>() / m;
    let my = used.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = used.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = used.iter().map(|p| p.1 - intercept - slope * p.0).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let slope_std_error = if used.len() > 2 {
        (sse / (m - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(OrderFit {
        slope,
        intercept,
        slope_std_error,
        slope_ci: (slope - 1.96 * slope_std_error, slope + 1.96 * slope_std_error),
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        max_abs_residual: residuals.iter().fold(0.0, |a, r| a.max(r.abs())),
        excluded_any: points.iter().any(|p| p.excluded),
        points,
    })
}

/// One row of an order experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub n: usize,
    pub c_values: Vec<f64>,
    pub oracle: OracleResult,
    /// `|oracle − C_k|` for each `k ≤ N`.
    pub errors: Vec<f64>,
    pub budget: Option<f64>,
}

/// Settings of an order experiment on the family `Z/√n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderExperiment {
    pub order: usize,
    pub n_grid: Vec<usize>,
    /// Monte Carlo sample count; `None` selects exact enumeration.
    pub mc_samples: Option<usize>,
    pub seed: u64,
    pub cap: usize,
    pub with_budget: bool,
}

/// Runs every `n` of the grid concurrently; seeds are derived per `n`.
pub fn order_experiment(
    base: &MeanZeroDistribution,
    h: &AdmissibleFunction,
    exp: &OrderExperiment,
) -> Result<Vec<OrderRow>> {
    exp.n_grid
        .par_iter()
        .map(|&n| {
            let family = iid_family(base, n)?;
            let mut expander = Expander::new(&family, exp.order)?;
            let ledger = expander.expand(h, exp.order)?;
            let budget = if exp.with_budget {
                Some(expander.error_budget(h, exp.order)?.total)
            } else {
                None
            };
            let oracle = match exp.mc_samples {
                None => exact_expectation(h, &family, exp.cap)?,
                Some(count) => mc_expectation(h, &family, count, derive_seed(exp.seed, "order-fit", n as u64))?,
            };
            let errors = ledger.c_values.iter().map(|c| (oracle.value - c).abs()).collect();
            Ok(OrderRow {
                n,
                c_values: ledger.c_values,
                oracle,
                errors,
                budget,
            })
        })
        .collect()
}
