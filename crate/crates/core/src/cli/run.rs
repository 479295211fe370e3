use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::checks::{run_checks, CheckOutcome};
use super::config::{ExperimentConfig, OracleChoice, Task, SCHEMA_VERSION};
use crate::bounds::{
    concentration_leave_one_out_constants, concentration_w_constants, zero_bias_distance_bound,
    zero_bias_distance_probability, ConcentrationConstants,
};
use crate::distributions::{derive_seed, total_variance, Law};
use crate::error::{Error, Result};
use crate::expansion::{ErrorBudget, ExpansionLedger, Expander};
use crate::numerics::linspace;
use crate::oracle::{exact_expectation, exact_law, mc_expectation, order_fit, OracleResult, OrderFit};
use crate::stein::SolveOptions;

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// `false` when a verify check or a domination check failed.
    pub passed: bool,
    /// Human-readable summary.
    pub table: String,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema_version: u32,
    subcommand: &'static str,
    config: &'a ExperimentConfig,
    results: T,
}

fn write_report<T: Serialize>(cfg: &ExperimentConfig, task: Task, results: T) -> Result<PathBuf> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        subcommand: task.name(),
        config: cfg,
        results,
    };
    let path = cfg.out.join(format!("{}_report.json", task.name().replace('-', "_")));
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x:e}")
}

/// Runs one subcommand and writes its artifacts under `cfg.out`.
pub fn run(task: Task, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    if let Some(declared) = cfg.subcommand {
        if declared != task {
            return Err(Error::Config(format!(
                "config declares subcommand `{}` but `{}` was requested",
                declared.name(),
                task.name()
            )));
        }
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::Io(format!("{}: {e}", cfg.out.display())))?;
    match task {
        Task::Expand => expand(cfg),
        Task::Verify => verify(cfg),
        Task::Concentration => concentration(cfg),
        Task::OrderFit => order_fit_run(cfg),
    }
}

/// One family size of an expand run.
#[derive(Debug, Clone, Serialize)]
pub struct ExpandRow {
    pub n: usize,
    pub ledger: ExpansionLedger,
    pub budget: Option<ErrorBudget>,
    pub oracle: Option<OracleResult>,
    /// `|oracle − C_k|` for each `k ≤ N`.
    pub errors: Vec<f64>,
}

/// Expansion, budget and oracle for every family of the config.
pub fn expand_rows(cfg: &ExperimentConfig) -> Result<Vec<ExpandRow>> {
    let h = cfg.function()?;
    let order = cfg.order;
    let options = SolveOptions {
        quadrature: cfg.quadrature,
        ..SolveOptions::default()
    };
    cfg.families()?
        .into_par_iter()
        .map(|(n, family)| {
            let mut expander = Expander::with_options(&family, order, options)?;
            let ledger = expander.expand(&h, order)?;
            let budget = if cfg.budget {
                Some(expander.error_budget(&h, order)?)
            } else {
                None
            };
            let oracle = match cfg.oracle {
                OracleChoice::Exact => Some(exact_expectation(&h, &family, cfg.cap)?),
                OracleChoice::MonteCarlo => Some(mc_expectation(
                    &h,
                    &family,
                    cfg.mc_samples,
                    derive_seed(cfg.seed, "expand-oracle", n as u64),
                )?),
                OracleChoice::None => None,
            };
            let errors = match &oracle {
                Some(o) => ledger.c_values.iter().map(|c| (o.value - c).abs()).collect(),
                None => Vec::new(),
            };
            Ok(ExpandRow {
                n,
                ledger,
                budget,
                oracle,
                errors,
            })
        })
        .collect()
}

fn expand(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let rows = expand_rows(cfg)?;
    let order = cfg.order;
    let mut header = vec!["n".to_string()];
    header.extend((0..=order).map(|k| format!("c_{k}")));
    header.push("oracle".into());
    header.push("oracle_std_error".into());
    header.extend((0..=order).map(|k| format!("error_{k}")));
    header.push("budget".into());
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![r.n.to_string()];
            line.extend(r.ledger.c_values.iter().map(|&c| num(c)));
            line.push(opt(r.oracle.map(|o| o.value)));
            line.push(opt(r.oracle.map(|o| o.std_error)));
            line.extend((0..=order).map(|k| opt(r.errors.get(k).copied())));
            line.push(opt(r.budget.as_ref().map(|b| b.total)));
            line
        })
        .collect();
    let csv_path = cfg.out.join("expand.csv");
    write_csv(&csv_path, &header, &csv_rows)?;
    let report = write_report(cfg, Task::Expand, &rows)?;

    let mut table = String::new();
    let _ = writeln!(table, "{} with N = {order}", rows[0].ledger.function);
    let _ = write!(table, "{:>6}", "n");
    for k in 0..=order {
        let _ = write!(table, " {:>14}", format!("C_{k}"));
    }
    let _ = writeln!(table, " {:>14} {:>11} {:>11}", "oracle", "error", "budget");
    for r in &rows {
        let _ = write!(table, "{:>6}", r.n);
        for c in &r.ledger.c_values {
            let _ = write!(table, " {c:>14.10}");
        }
        let oracle = r.oracle.map(|o| format!("{:.10}", o.value)).unwrap_or_else(|| "-".into());
        let err = r.errors.last().map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
        let budget = r.budget.as_ref().map(|b| format!("{:.3e}", b.total)).unwrap_or_else(|| "-".into());
        let _ = writeln!(table, " {oracle:>14} {err:>11} {budget:>11}");
    }
    Ok(RunOutcome {
        passed: true,
        table,
        files: vec![csv_path, report],
    })
}

fn verify(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let outcomes = run_checks(cfg)?;
    let passed = outcomes.iter().all(|o| o.passed);
    let header: Vec<String> = ["group", "check", "measured", "tolerance", "passed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![
                o.group.name().to_string(),
                o.name.clone(),
                num(o.measured),
                num(o.tolerance),
                o.passed.to_string(),
            ]
        })
        .collect();
    let csv_path = cfg.out.join("verify.csv");
    write_csv(&csv_path, &header, &rows)?;
    #[derive(Serialize)]
    struct VerifyResults<'a> {
        passed: bool,
        checks: &'a [CheckOutcome],
    }
    let report = write_report(
        cfg,
        Task::Verify,
        VerifyResults {
            passed,
            checks: &outcomes,
        },
    )?;
    let mut table = String::new();
    for o in &outcomes {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(
            table,
            "{mark} {:<15} {:<36} {:>10.3e} <= {:.0e}",
            o.group.name(),
            o.name,
            o.measured,
            o.tolerance
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(table, "{} checks, {failed} failed", outcomes.len());
    Ok(RunOutcome {
        passed,
        table,
        files: vec![csv_path, report],
    })
}

/// One cell of a concentration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationCell {
    pub n: usize,
    pub alpha: f64,
    /// `w`, `leave-one-out` or `distance`.
    pub kind: &'static str,
    pub a: f64,
    /// Upper end for intervals; unused (equal to `a`) for the distance rows.
    pub b: f64,
    pub exact: f64,
    pub bound: f64,
    pub violation: bool,
}

/// Per `(n, α, kind)` totals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationSummary {
    pub n: usize,
    pub alpha: f64,
    pub kind: &'static str,
    pub cells: usize,
    pub violations: usize,
    /// Largest `exact / bound`.
    pub max_ratio: f64,
}

fn exceeds(exact: f64, bound: f64) -> bool {
    // NaN counts as a violation.
    !(exact <= bound * (1.0 + 1e-12) + 1e-15)
}

fn interval_cells(
    n: usize,
    alpha: f64,
    kind: &'static str,
    law: &Law,
    constants: &ConcentrationConstants,
    axis: &[f64],
) -> Result<Vec<ConcentrationCell>> {
    let mut out = Vec::new();
    for &a in axis {
        for &b in axis {
            if b < a {
                continue;
            }
            let exact = law.prob_between(a, b);
            let bound = constants.bound(a, b)?;
            out.push(ConcentrationCell {
                n,
                alpha,
                kind,
                a,
                b,
                exact,
                bound,
                violation: exceeds(exact, bound),
            });
        }
    }
    Ok(out)
}

/// Exact probabilities against the concentration and distance bounds over
/// the `(n, α)` grid.
pub fn concentration_cells(cfg: &ExperimentConfig) -> Result<Vec<ConcentrationCell>> {
    let families = cfg.families()?;
    let jobs: Vec<(usize, f64, usize)> = families
        .iter()
        .enumerate()
        .flat_map(|(fi, (n, _))| cfg.alpha_grid.iter().map(move |&a| (fi, a, *n)))
        .collect();
    let chunks: Vec<Vec<ConcentrationCell>> = jobs
        .par_iter()
        .map(|&(fi, alpha, n)| {
            let family = &families[fi].1;
            let sigma = total_variance(family).sqrt();
            let axis = linspace(-3.0 * sigma, 3.0 * sigma, cfg.grid_points);
            let mut cells = Vec::new();
            let w = exact_law(family, cfg.cap)?;
            let cw = concentration_w_constants(family, alpha)?;
            cells.extend(interval_cells(n, alpha, "w", &w, &cw, &axis)?);
            if family.len() > 1 {
                let rest = exact_law(&family[1..], cfg.cap)?;
                let cl = concentration_leave_one_out_constants(family, 0, alpha)?;
                cells.extend(interval_cells(n, alpha, "leave-one-out", &rest, &cl, &axis)?);
            }
            let x = &family[0];
            let spread = x.support().1 - x.support().0;
            for eps in linspace(spread / cfg.grid_points as f64, spread, cfg.grid_points) {
                let exact = zero_bias_distance_probability(x, eps)?;
                let bound = zero_bias_distance_bound(x, eps, alpha)?;
                cells.push(ConcentrationCell {
                    n,
                    alpha,
                    kind: "distance",
                    a: eps,
                    b: eps,
                    exact,
                    bound,
                    violation: exceeds(exact, bound),
                });
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn summarize(cells: &[ConcentrationCell]) -> Vec<ConcentrationSummary> {
    let mut out: Vec<ConcentrationSummary> = Vec::new();
    for c in cells {
        let ratio = if c.bound > 0.0 { c.exact / c.bound } else { 0.0 };
        match out
            .iter_mut()
            .find(|s| s.n == c.n && s.alpha == c.alpha && s.kind == c.kind)
        {
            Some(s) => {
                s.cells += 1;
                s.violations += c.violation as usize;
                s.max_ratio = s.max_ratio.max(ratio);
            }
            None => out.push(ConcentrationSummary {
                n: c.n,
                alpha: c.alpha,
                kind: c.kind,
                cells: 1,
                violations: c.violation as usize,
                max_ratio: ratio,
            }),
        }
    }
    out
}

fn concentration(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let cells = concentration_cells(cfg)?;
    let summary = summarize(&cells);
    let header: Vec<String> = ["n", "alpha", "kind", "a", "b", "exact", "bound", "violations"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.n.to_string(),
                num(c.alpha),
                c.kind.to_string(),
                num(c.a),
                num(c.b),
                num(c.exact),
                num(c.bound),
                (c.violation as usize).to_string(),
            ]
        })
        .collect();
    let cells_path = cfg.out.join("concentration.csv");
    write_csv(&cells_path, &header, &rows)?;
    let sum_header: Vec<String> = ["n", "alpha", "kind", "cells", "violations", "max_ratio"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let sum_rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.n.to_string(),
                num(s.alpha),
                s.kind.to_string(),
                s.cells.to_string(),
                s.violations.to_string(),
                num(s.max_ratio),
            ]
        })
        .collect();
    let summary_path = cfg.out.join("concentration_summary.csv");
    write_csv(&summary_path, &sum_header, &sum_rows)?;
    let report = write_report(cfg, Task::Concentration, &summary)?;
    let mut table = String::new();
    let _ = writeln!(
        table,
        "{:>6} {:>6} {:<14} {:>6} {:>10} {:>10}",
        "n", "alpha", "kind", "cells", "violations", "max ratio"
    );
    for s in &summary {
        let _ = writeln!(
            table,
            "{:>6} {:>6} {:<14} {:>6} {:>10} {:>10.4}",
            s.n, s.alpha, s.kind, s.cells, s.violations, s.max_ratio
        );
    }
    Ok(RunOutcome {
        passed: summary.iter().all(|s| s.violations == 0),
        table,
        files: vec![cells_path, summary_path, report],
    })
}

/// A power-law fit of one error series, or why none was possible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesFit {
    /// `error_k` or `correction`.
    pub series: String,
    pub fit: Option<OrderFit>,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

fn fit_series(series: String, ns: &[usize], values: &[f64]) -> Result<SeriesFit> {
    match order_fit(ns, values) {
        Ok(fit) => Ok(SeriesFit {
            series,
            fit: Some(fit),
            degenerate: false,
            reason: None,
        }),
        Err(Error::DegenerateFit(reason)) => Ok(SeriesFit {
            series,
            fit: None,
            degenerate: true,
            reason: Some(reason),
        }),
        Err(e) => Err(e),
    }
}

/// Fits for every `error_k` series and for the last correction
/// `|C_N − C_{N−1}|`.
pub fn order_fits(rows: &[ExpandRow]) -> Result<Vec<SeriesFit>> {
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let order = rows[0].ledger.order;
    let mut fits = Vec::new();
    if rows.iter().all(|r| r.errors.len() == order + 1) {
        for k in 0..=order {
            let e: Vec<f64> = rows.iter().map(|r| r.errors[k]).collect();
            fits.push(fit_series(format!("error_{k}"), &ns, &e)?);
        }
    }
    if order >= 1 {
        let d: Vec<f64> = rows
            .iter()
            .map(|r| (r.ledger.c_values[order] - r.ledger.c_values[order - 1]).abs())
            .collect();
        fits.push(fit_series("correction".into(), &ns, &d)?);
    }
    Ok(fits)
}

fn order_fit_run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    if cfg.summands.is_some() {
        return Err(Error::Config(
            "order-fit sweeps the Z/√n family; remove `summands`".into(),
        ));
    }
    if cfg.n_grid.len() < 4 {
        return Err(Error::Config("order-fit needs at least four grid sizes".into()));
    }
    let rows = expand_rows(cfg)?;
    let fits = order_fits(&rows)?;
    let order = cfg.order;
    let mut header = vec!["n".to_string()];
    header.extend((0..=order).map(|k| format!("c_{k}")));
    header.push("oracle".into());
    header.extend((0..=order).map(|k| format!("error_{k}")));
    header.push("budget".into());
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![r.n.to_string()];
            line.extend(r.ledger.c_values.iter().map(|&c| num(c)));
            line.push(r.oracle.map(|o| num(o.value)).unwrap_or_default());
            line.extend((0..=order).map(|k| r.errors.get(k).map(|&e| num(e)).unwrap_or_default()));
            line.push(r.budget.as_ref().map(|b| num(b.total)).unwrap_or_default());
            line
        })
        .collect();
    let series_path = cfg.out.join("order_series.csv");
    write_csv(&series_path, &header, &csv_rows)?;
    let fit_header: Vec<String> = ["series", "slope", "ci_low", "ci_high", "r_squared", "degenerate"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fit_rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| match &f.fit {
            Some(fit) => vec![
                f.series.clone(),
                num(fit.slope),
                num(fit.slope_ci.0),
                num(fit.slope_ci.1),
                num(fit.r_squared),
                "false".into(),
            ],
            None => vec![
                f.series.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "true".into(),
            ],
        })
        .collect();
    let fit_path = cfg.out.join("order_fit.csv");
    write_csv(&fit_path, &fit_header, &fit_rows)?;
    #[derive(Serialize)]
    struct FitResults<'a> {
        rows: &'a [ExpandRow],
        fits: &'a [SeriesFit],
    }
    let report = write_report(
        cfg,
        Task::OrderFit,
        FitResults {
            rows: &rows,
            fits: &fits,
        },
    )?;
    let mut table = String::new();
    for f in &fits {
        match &f.fit {
            Some(fit) => {
                let _ = writeln!(
                    table,
                    "{:<11} slope {:>8.4}  95% CI [{:.4}, {:.4}]  R² {:.4}",
                    f.series, fit.slope, fit.slope_ci.0, fit.slope_ci.1, fit.r_squared
                );
            }
            None => {
                let _ = writeln!(
                    table,
                    "{:<11} degenerate: {}",
                    f.series,
                    f.reason.as_deref().unwrap_or("")
                );
            }
        }
    }
    Ok(RunOutcome {
        passed: true,
        table,
        files: vec![series_path, fit_path, report],
    })
}
