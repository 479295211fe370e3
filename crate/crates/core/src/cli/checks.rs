use serde::{Deserialize, Serialize};

use super::config::{CheckName, ExperimentConfig, Fault, FAULT_OFFSET};
use crate::admissible::{lambda_iterate, lambda_iterate_formula, AdmissibleFunction, Differentiable};
use crate::bounds::reverse_taylor_remainder;
use crate::distributions::{derive_seed, DistributionSpec, MeanZeroDistribution};
use crate::error::Result;
use crate::expansion::Expander;
use crate::numerics::{linspace, Quadrature};
use crate::oracle::zero_bias_identity_mc;
use crate::stein::{call_correction_identity, gaussian_expectation, lambda_identity_check, ModifiedSteinSolution, SteinSolution};

/// One line of the verify report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub group: CheckName,
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(group: CheckName, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            group,
            name: name.into(),
            measured,
            tolerance,
            // NaN fails.
            passed: measured <= tolerance,
        }
    }
}

/// The stock laws the identity checks run over.
pub fn stock_distributions() -> Result<Vec<(String, MeanZeroDistribution)>> {
    let specs = [
        DistributionSpec::TwoPoint { p: 0.2 },
        DistributionSpec::TwoPoint { p: 0.5 },
        DistributionSpec::UniformSymmetric { half_width: 1.0 },
        DistributionSpec::FiniteDiscrete {
            atoms: vec![(-1.0, 0.3), (-0.25, 0.2), (0.5, 0.3), (1.0, 0.2)],
        },
        DistributionSpec::Scaled {
            base: Box::new(DistributionSpec::TwoPoint { p: 0.3 }),
            factor: 2.5,
        },
    ];
    specs
        .iter()
        .map(|s| Ok((label(s), MeanZeroDistribution::from_spec(s)?)))
        .collect()
}

fn label(spec: &DistributionSpec) -> String {
    match spec {
        DistributionSpec::TwoPoint { p } => format!("two-point({p})"),
        DistributionSpec::UniformSymmetric { half_width } => format!("uniform({half_width})"),
        DistributionSpec::FiniteDiscrete { atoms } => format!("discrete[{}]", atoms.len()),
        DistributionSpec::Scaled { base, factor } => format!("{factor}*{}", label(base)),
    }
}

/// Runs the selected groups (all when `cfg.checks` is empty).
pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let mut groups = if cfg.checks.is_empty() {
        CheckName::ALL.to_vec()
    } else {
        cfg.checks.clone()
    };
    groups.sort();
    groups.dedup();
    let mut out = Vec::new();
    for g in groups {
        out.extend(match g {
            CheckName::ZeroBias => zero_bias()?,
            CheckName::Moments => moments()?,
            CheckName::ReverseTaylor => reverse_taylor()?,
            CheckName::Stein => stein(cfg.fault)?,
            CheckName::CallIdentity => call_identity()?,
            CheckName::Lambda => lambda()?,
            CheckName::Coupling => coupling(cfg)?,
            CheckName::Ledger => ledger(cfg)?,
        });
    }
    Ok(out)
}

/// `E[X f(X)] = σ² E[f'(X*)]` for `f = x^d`, both sides integrated
/// against the respective laws.
fn zero_bias() -> Result<Vec<CheckOutcome>> {
    let quad = Quadrature::default();
    let mut out = Vec::new();
    for (name, d) in stock_distributions()? {
        let zb = d.zero_bias()?;
        for deg in 1..=6usize {
            let lhs = d.law().expect(|x| x * x.powi(deg as i32), &quad, &[])?;
            let rhs = d.variance() * zb.law().expect(|x| deg as f64 * x.powi(deg as i32 - 1), &quad, &[])?;
            out.push(CheckOutcome::new(
                CheckName::ZeroBias,
                format!("{name} x^{deg}"),
                (lhs - rhs).abs(),
                1e-9,
            ));
        }
    }
    Ok(out)
}

/// `E[(X*)^k] = E[X^{k+2}] / (σ²(k+1))`, left side from the density.
fn moments() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (name, d) in stock_distributions()? {
        let zb = d.zero_bias()?;
        for k in 0..=6usize {
            let direct = zb.moment_by_density(k)?;
            let formula = d.moment(k + 2) / (d.variance() * (k + 1) as f64);
            out.push(CheckOutcome::new(
                CheckName::Moments,
                format!("{name} k={k}"),
                (direct - formula).abs(),
                1e-10,
            ));
        }
    }
    Ok(out)
}

fn reverse_taylor() -> Result<Vec<CheckOutcome>> {
    let x = MeanZeroDistribution::finite_discrete(&[(-0.7, 0.3), (0.16, 0.5), (0.65, 0.2)])?;
    let y = MeanZeroDistribution::finite_discrete(&[(-0.2, 0.6), (0.3, 0.4)])?;
    let mut functions: Vec<(String, AdmissibleFunction)> = (0..=6)
        .map(|d| (format!("x^{d}"), AdmissibleFunction::monomial(d)))
        .collect();
    functions.push(("cos".into(), AdmissibleFunction::cos_with_order(5)?));
    let mut out = Vec::new();
    for (name, f) in &functions {
        for order in 0..=4usize.min(f.order()) {
            let r = reverse_taylor_remainder(f, x.law(), y.law(), order)?;
            out.push(CheckOutcome::new(
                CheckName::ReverseTaylor,
                format!("{name} N={order} reassembly"),
                r.residual.abs(),
                1e-12,
            ));
            if f.polynomial_degree().is_some_and(|d| d <= order) {
                out.push(CheckOutcome::new(
                    CheckName::ReverseTaylor,
                    format!("{name} N={order} remainder vanishes"),
                    r.epsilon.abs(),
                    1e-13,
                ));
            }
        }
    }
    Ok(out)
}

fn stein(fault: Option<Fault>) -> Result<Vec<CheckOutcome>> {
    let offset = match fault {
        Some(Fault::SteinPerturbation) => FAULT_OFFSET,
        None => 0.0,
    };
    let cases = [
        ("x", AdmissibleFunction::monomial(1)),
        ("x^2", AdmissibleFunction::monomial(2)),
        ("call(0)", AdmissibleFunction::call(0.0)),
        ("indicator(0)", AdmissibleFunction::indicator(0.0)),
    ];
    let mut out = Vec::new();
    for (name, h) in cases {
        let s = SteinSolution::solve(&h, 1.0)?.with_perturbation(offset);
        let report = s.residual_check(256)?;
        out.push(CheckOutcome::new(
            CheckName::Stein,
            format!("{name} residual"),
            report.max_scaled,
            1e-7,
        ));
    }
    let grid = linspace(-6.0, 6.0, 25);
    let one = SteinSolution::solve(&AdmissibleFunction::monomial(1), 1.0)?.with_perturbation(offset);
    let sq = SteinSolution::solve(&AdmissibleFunction::monomial(2), 1.0)?.with_perturbation(offset);
    let mut gap_one = 0.0f64;
    let mut gap_sq = 0.0f64;
    for &x in &grid {
        gap_one = gap_one.max((one.value(x)? - 1.0).abs());
        gap_sq = gap_sq.max((sq.value(x)? - x).abs());
    }
    out.push(CheckOutcome::new(CheckName::Stein, "f for x is 1", gap_one, 1e-9));
    out.push(CheckOutcome::new(CheckName::Stein, "f for x^2 is x", gap_sq, 1e-9));
    Ok(out)
}

/// `Φ_σ(|x²/(3σ²) − 1|·|x|·h)/σ²`, the size of the right-hand side before
/// cancellation; it normalises the gap where the identity's value is 0.
pub fn call_identity_scale(h: &AdmissibleFunction, sigma: f64) -> Result<f64> {
    let v = sigma * sigma;
    let weight = |x: f64| (x * x / (3.0 * v) - 1.0).abs() * x.abs() * h.value(x).abs();
    Ok(gaussian_expectation(weight, sigma, &h.jump_locations(), &Quadrature::default())? / v)
}

fn call_identity() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for sigma in [0.5, 1.0, 2.0] {
        for k in [-0.5, 0.0, 0.3] {
            let h = AdmissibleFunction::call(k);
            let (lhs, rhs) = call_correction_identity(&h, sigma)?;
            let rel = (lhs - rhs).abs() / call_identity_scale(&h, sigma)?.max(rhs.abs());
            out.push(CheckOutcome::new(
                CheckName::CallIdentity,
                format!("sigma={sigma} k={k}"),
                rel,
                1e-6,
            ));
        }
    }
    Ok(out)
}

/// Largest `|f̃(x)|·x^{1−l}` on `[1, 50]` for `h = |x|^l`.
pub fn growth_ratio(l: f64, sigma: f64) -> Result<f64> {
    let f = ModifiedSteinSolution::solve(&Differentiable::abs_power(l), sigma)?;
    let mut worst = 0.0f64;
    for x in linspace(1.0, 50.0, 50) {
        worst = worst.max(f.value(x)?.abs() * x.powf(1.0 - l));
    }
    Ok(worst)
}

fn lambda() -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let grid = linspace(1.0, 6.0, 11);
    for d in 2..=4 {
        let dev = lambda_identity_check(&Differentiable::monomial(d), 1.0, &grid)?;
        out.push(CheckOutcome::new(
            CheckName::Lambda,
            format!("derivative identity x^{d}"),
            dev,
            1e-5,
        ));
    }
    let h = Differentiable::polynomial(&[0.3, -1.0, 0.5, 0.2, -0.1, 0.05]);
    for n in 0..=4 {
        let iterated = lambda_iterate(&h, n)?;
        let mut worst = 0.0f64;
        for x in [-3.0, -1.5, 1.0, 2.2, 4.0] {
            let closed = lambda_iterate_formula(&h, n, x)?;
            let scale = 1.0 + closed.abs();
            worst = worst.max((closed - iterated.value(x)).abs() / scale);
        }
        out.push(CheckOutcome::new(
            CheckName::Lambda,
            format!("iterate closed form N={n}"),
            worst,
            1e-9,
        ));
    }
    for l in [0.0, 1.0, 2.0] {
        // Linear growth of the ratio would signal the wrong power.
        out.push(CheckOutcome::new(
            CheckName::Lambda,
            format!("growth |x|^{l}"),
            growth_ratio(l, 1.0)?,
            2.0,
        ));
    }
    Ok(out)
}

/// `E[W f(W)] = σ_W² E[f'(W*)]` on a mixed family by sampling the coupling.
fn coupling(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let mut family = vec![MeanZeroDistribution::two_point(0.2)?.scaled(0.5)?; 3];
    family.push(MeanZeroDistribution::uniform_symmetric(0.8)?);
    family.push(MeanZeroDistribution::finite_discrete(&[(-0.4, 0.5), (0.4, 0.5)])?);
    let f = Differentiable::monomial(3);
    let r = zero_bias_identity_mc(&family, &f, 200_000, derive_seed(cfg.seed, "verify-coupling", 0), cfg.coupling)?;
    Ok(vec![CheckOutcome::new(
        CheckName::Coupling,
        format!("x^3 {:?}", cfg.coupling).to_lowercase(),
        r.residual.abs() / r.std_error,
        5.0,
    )])
}

/// The ledger terms of the configured expansion add up to its value.
fn ledger(cfg: &ExperimentConfig) -> Result<Vec<CheckOutcome>> {
    let h = cfg.function()?;
    let (n, family) = cfg.families()?.swap_remove(0);
    let order = cfg.order.min(h.order());
    let ledger = Expander::new(&family, order)?.expand(&h, order)?;
    let scale = 1.0 + ledger.terms.iter().map(|t| t.contribution.abs()).fold(ledger.c_values[0].abs(), f64::max);
    Ok(vec![CheckOutcome::new(
        CheckName::Ledger,
        format!("{} N={order} n={n}", ledger.function),
        ledger.reassembly_gap() / scale,
        1e-12,
    )])
}
