//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! with its measured worst case, then asserts.

mod common;

use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use zerobias::admissible::{lambda_iterate, lambda_iterate_formula, AdmissibleFunction, Differentiable};
use zerobias::bounds::{
    concentration_leave_one_out_constants, concentration_w_constants, remainder_bound, reverse_remainder_bound,
    reverse_taylor_remainder, taylor_remainder, zero_bias_distance_bound, TopRegularity,
};
use zerobias::cli::growth_ratio;
use zerobias::distributions::{iid_family, MeanZeroDistribution};
use zerobias::numerics::{linspace, Quadrature};
use zerobias::oracle::{order_experiment, OrderExperiment, DEFAULT_CAP};
use zerobias::stein::{
    call_correction_identity, lambda_identity_check, normal_expectation, ModifiedSteinSolution, SteinSolution,
};

/// Collects failures and the worst measured value of a criterion.
struct Tally {
    id: u32,
    title: &'static str,
    limit: Duration,
    start: Instant,
    failures: Vec<String>,
    worst: f64,
    checked: usize,
}

impl Tally {
    fn new(id: u32, title: &'static str, limit_secs: u64) -> Self {
        Self {
            id,
            title,
            limit: Duration::from_secs(limit_secs),
            start: Instant::now(),
            failures: Vec::new(),
            worst: 0.0,
            checked: 0,
        }
    }

    /// Records `measured ≤ tol`; NaN fails.
    fn le(&mut self, what: impl Fn() -> String, measured: f64, tol: f64) {
        self.checked += 1;
        let ratio = measured / tol;
        if ratio > self.worst || ratio.is_nan() {
            self.worst = ratio;
        }
        if !(measured <= tol) {
            self.failures.push(format!("{}: {measured:e} > {tol:e}", what()));
        }
    }

    fn require(&mut self, what: impl Into<String>, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn finish(self) {
        let elapsed = self.start.elapsed();
        let mut failures = self.failures;
        if elapsed > self.limit {
            failures.push(format!("runtime {:.2} s over {:?}", elapsed.as_secs_f64(), self.limit));
        }
        let detail = if failures.is_empty() {
            format!("{} checks, worst at {:.3} of tolerance", self.checked, self.worst)
        } else {
            format!("{} of {} checks failed; first: {}", failures.len(), self.checked, failures[0])
        };
        report(self.id, self.title, failures.is_empty(), &detail, elapsed);
        assert!(failures.is_empty(), "criterion {} failed:\n{}", self.id, failures.join("\n"));
    }
}

/// A stock law as the library sees it plus its raw moments from the test side.
struct Stock {
    name: &'static str,
    dist: MeanZeroDistribution,
    moment: Box<dyn Fn(usize) -> f64>,
}

fn discrete_moments(atoms: Atoms) -> Box<dyn Fn(usize) -> f64> {
    Box::new(move |k| atoms.iter().map(|&(x, w)| w * x.powi(k as i32)).sum())
}

fn stock() -> Vec<Stock> {
    let two = |p: f64, c: f64| vec![(c * (1.0 - p), p), (-c * p, 1.0 - p)];
    let four = vec![(-1.0, 0.3), (-0.25, 0.2), (0.5, 0.3), (1.0, 0.2)];
    vec![
        Stock {
            name: "two-point(0.2)",
            dist: MeanZeroDistribution::two_point(0.2).unwrap(),
            moment: discrete_moments(two(0.2, 1.0)),
        },
        Stock {
            name: "two-point(0.5)",
            dist: MeanZeroDistribution::two_point(0.5).unwrap(),
            moment: discrete_moments(two(0.5, 1.0)),
        },
        Stock {
            name: "uniform(1.3)",
            dist: MeanZeroDistribution::uniform_symmetric(1.3).unwrap(),
            moment: Box::new(|k| if k % 2 == 1 { 0.0 } else { 1.3f64.powi(k as i32) / (k as f64 + 1.0) }),
        },
        Stock {
            name: "discrete[4]",
            dist: MeanZeroDistribution::finite_discrete(&four).unwrap(),
            moment: discrete_moments(four.clone()),
        },
        Stock {
            name: "2.5*two-point(0.3)",
            dist: MeanZeroDistribution::two_point(0.3).unwrap().scaled(2.5).unwrap(),
            moment: discrete_moments(two(0.3, 2.5)),
        },
    ]
}

#[test]
fn criterion_01_zero_bias_identity() {
    let mut t = Tally::new(1, "zero-bias identity on 5 laws x 6 polynomials", 5);
    let polys: [&[f64]; 6] = [
        &[0.0, 1.0],
        &[0.5, 0.0, 1.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[1.0, -2.0, 0.0, 0.5, 1.0],
        &[0.0, 0.0, 3.0, 0.0, 0.0, -1.0],
        &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
    ];
    let quad = Quadrature::default();
    for s in stock() {
        let star = s.dist.zero_bias().unwrap();
        let var = (s.moment)(2);
        for c in polys {
            // E[X f(X)] from the raw moments.
            let lhs: f64 = c.iter().enumerate().map(|(j, a)| a * (s.moment)(j + 1)).sum();
            let df = poly_derivative(c, 1);
            let rhs = var * star.law().expect(|x| poly_eval(&df, x), &quad, &[]).unwrap();
            t.le(|| format!("{} {c:?}", s.name), (lhs - rhs).abs(), 1e-9);
        }
    }
    t.finish();
}

#[test]
fn criterion_02_zero_bias_moments() {
    let mut t = Tally::new(2, "zero-bias moments E[(X*)^k] for k <= 6", 1);
    for s in stock() {
        let star = s.dist.zero_bias().unwrap();
        let var = (s.moment)(2);
        for k in 0..=6 {
            let expected = (s.moment)(k + 2) / (var * (k + 1) as f64);
            let by_density = star.moment_by_density(k).unwrap();
            t.le(|| format!("{} k={k} density", s.name), (by_density - expected).abs(), 1e-10);
            t.le(|| format!("{} k={k} table", s.name), (star.moment(k) - expected).abs(), 1e-10);
        }
    }
    t.finish();
}

#[test]
fn criterion_03_reverse_taylor() {
    let mut t = Tally::new(3, "reverse Taylor reassembly and exact vanishing", 10);
    let pairs: Vec<(Atoms, Atoms)> = vec![
        (
            vec![(-0.7, 0.3), (0.16, 0.5), (0.65, 0.2)],
            vec![(-0.2, 0.6), (0.3, 0.4)],
        ),
        (
            vec![(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)],
            vec![(-0.45, 0.4), (0.1, 0.3), (0.5, 0.3)],
        ),
    ];
    // (name, library function, derivative evaluator, polynomial degree)
    type Eval = Arc<dyn Fn(usize, f64) -> f64>;
    let mut cases: Vec<(String, AdmissibleFunction, Eval, Option<usize>)> = Vec::new();
    let polys: Vec<Vec<f64>> = vec![
        vec![2.0],
        vec![1.0, -1.0],
        vec![0.0, 0.5, 1.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![1.0, 0.0, -1.0, 0.0, 0.25],
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.3],
        vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    for c in polys {
        let deg = c.len() - 1;
        let cc = c.clone();
        cases.push((
            format!("poly{c:?}"),
            AdmissibleFunction::polynomial_with_order(&c, deg.max(4), 1.0, 0.0).unwrap(),
            Arc::new(move |s, x| poly_eval(&poly_derivative(&cc, s), x)),
            Some(deg),
        ));
    }
    cases.push((
        "cos".into(),
        AdmissibleFunction::cos_with_order(4).unwrap(),
        Arc::new(|s, x: f64| match s % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        }),
        None,
    ));
    for (x_atoms, y_atoms) in &pairs {
        let x = MeanZeroDistribution::finite_discrete(x_atoms).unwrap();
        let y = MeanZeroDistribution::finite_discrete(y_atoms).unwrap();
        let mut fact = 1.0;
        let m: Vec<f64> = (0..=4i32)
            .map(|q| {
                if q > 0 {
                    fact *= q as f64;
                }
                expect(y_atoms, |v| v.powi(q)) / fact
            })
            .collect();
        for (name, f, eval, degree) in &cases {
            for order in 0..=4 {
                let w = reciprocal_series(&m, order);
                let lhs = expect(x_atoms, |v| eval(0, v));
                let expansion: f64 = (0..=order)
                    .map(|s| w[s] * expect_pair(x_atoms, y_atoms, |v| eval(s, v)))
                    .sum();
                let r = reverse_taylor_remainder(f, x.law(), y.law(), order).unwrap();
                t.le(|| format!("{name} N={order} residual"), r.residual.abs(), 1e-12);
                t.le(|| format!("{name} N={order} lhs"), (r.lhs - lhs).abs(), 1e-12);
                t.le(|| format!("{name} N={order} expansion"), (r.expansion - expansion).abs(), 1e-12);
                t.le(|| format!("{name} N={order} remainder"), (r.epsilon - (lhs - expansion)).abs(), 1e-12);
                if degree.is_some_and(|d| d <= order) {
                    t.le(|| format!("{name} N={order} vanishing"), r.epsilon.abs(), 1e-13);
                }
            }
        }
    }
    t.finish();
}

#[test]
fn criterion_04_stein_solver() {
    let mut t = Tally::new(4, "Stein residual on 256 points and closed forms", 10);
    for sigma in [1.0, 0.7] {
        for h in [
            AdmissibleFunction::monomial(1),
            AdmissibleFunction::monomial(2),
            AdmissibleFunction::call(0.0),
            AdmissibleFunction::indicator(0.0),
        ] {
            let s = SteinSolution::solve(&h, sigma).unwrap();
            let r = s.residual_check(256).unwrap();
            t.require(format!("{} σ={sigma} checked {} points", h.label(), r.checked), r.checked >= 250);
            t.le(|| format!("{} σ={sigma} residual", h.label()), r.max_scaled, 1e-7);
        }
    }
    let one = SteinSolution::solve(&AdmissibleFunction::monomial(1), 1.0).unwrap();
    let sq = SteinSolution::solve(&AdmissibleFunction::monomial(2), 1.0).unwrap();
    let ind = SteinSolution::solve(&AdmissibleFunction::indicator(0.0), 1.0).unwrap();
    for x in linspace(-8.0, 8.0, 161) {
        t.le(|| format!("f_x({x})"), (one.value(x).unwrap() - 1.0).abs(), 1e-9);
        t.le(|| format!("f_x2({x})"), (sq.value(x).unwrap() - x).abs(), 1e-9);
    }
    // f for 1{x ≤ 0} at σ = 1: −Φ(x)/(2φ(x)) left of 0, −(1 − Φ(x))/(2φ(x)) right of it.
    for x in linspace(-4.0, 4.0, 81) {
        let tail = if x <= 0.0 { normal_cdf(x) } else { normal_cdf(-x) };
        let expected = -tail / (2.0 * normal_pdf(x));
        let got = ind.value(x).unwrap();
        t.le(|| format!("f_indicator({x})"), (got - expected).abs() / (1.0 + expected.abs()), 1e-9);
    }
    t.finish();
}

#[test]
fn criterion_05_call_identity() {
    let mut t = Tally::new(5, "call-function second-derivative identity", 10);
    for sigma in [0.5, 1.0, 2.0] {
        let v = sigma * sigma;
        for k in [-0.5, 0.0, 0.3] {
            let (lhs, rhs) = call_correction_identity(&AdmissibleFunction::call(k), sigma).unwrap();
            // Φ((x²/(3σ²) − 1)·x·(x − k)_+)/σ² from upper partial moments.
            let m = upper_partial_moments(k, sigma, 4);
            let closed = ((m[4] - k * m[3]) / (3.0 * v) - (m[2] - k * m[1])) / v;
            // Magnitude of the terms that cancel, for the k where `closed` is 0.
            let scale = ((m[4] + k.abs() * m[3].abs()) / (3.0 * v) + m[2] + k.abs() * m[1]) / v;
            let denom = closed.abs().max(scale);
            t.le(|| format!("σ={sigma} k={k} lhs"), (lhs - closed).abs() / denom, 1e-6);
            t.le(|| format!("σ={sigma} k={k} rhs"), (rhs - closed).abs() / denom, 1e-6);
        }
    }
    t.finish();
}

#[test]
fn criterion_06_concentration() {
    let mut t = Tally::new(6, "concentration bounds dominate exact probabilities", 30);
    let p = 0.2;
    let dominated = |exact: f64, bound: f64| exact <= bound * (1.0 + 1e-12) + 1e-15;
    for n in [16usize, 256] {
        let z = MeanZeroDistribution::two_point(p).unwrap();
        let family = iid_family(&z, n).unwrap();
        let w = binomial_sum(n, n, p);
        let rest = binomial_sum(n - 1, n, p);
        let sigma = 0.4;
        let axis = linspace(-3.0 * sigma, 3.0 * sigma, 20);
        let (hi, lo) = ((1.0 - p) / (n as f64).sqrt(), -p / (n as f64).sqrt());
        for alpha in [0.5, 1.0] {
            let cw = concentration_w_constants(&family, alpha).unwrap();
            let cl = concentration_leave_one_out_constants(&family, 0, alpha).unwrap();
            for &a in &axis {
                for &b in &axis {
                    if b < a {
                        continue;
                    }
                    let (ew, bw) = (prob_between(&w, a, b), cw.bound(a, b).unwrap());
                    t.require(format!("W n={n} α={alpha} [{a},{b}]: {ew} > {bw}"), dominated(ew, bw));
                    let (el, bl) = (prob_between(&rest, a, b), cl.bound(a, b).unwrap());
                    t.require(format!("W^(i) n={n} α={alpha} [{a},{b}]: {el} > {bl}"), dominated(el, bl));
                }
            }
            // X is two-point on {lo, hi}; its zero-bias law is uniform on [lo, hi].
            for eps in linspace((hi - lo) / 20.0, hi - lo, 20) {
                let inside = |c: f64| ((c + eps).min(hi) - (c - eps).max(lo)).max(0.0) / (hi - lo);
                let exact = p * (1.0 - inside(hi)) + (1.0 - p) * (1.0 - inside(lo));
                let bound = zero_bias_distance_bound(&family[0], eps, alpha).unwrap();
                t.require(format!("distance n={n} α={alpha} ε={eps}: {exact} > {bound}"), dominated(exact, bound));
            }
        }
    }
    t.finish();
}

type Eval = Box<dyn Fn(usize, f64) -> f64>;

/// Test-side evaluators for the remainder catalog: `(s, x) ↦ h^(s)(x)`
/// with derivatives of jumps taken as zero and the left-closed convention
/// at the jump itself.
fn catalog_eval(name: &str, k: f64, coeffs: &[f64]) -> Eval {
    match name {
        "indicator" => Box::new(move |s, x| if s == 0 && x <= k { 1.0 } else { 0.0 }),
        "call" => Box::new(move |s, x| match s {
            0 => (x - k).max(0.0),
            1 if x > k => 1.0,
            _ => 0.0,
        }),
        _ => {
            let c = coeffs.to_vec();
            Box::new(move |s, x| poly_eval(&poly_derivative(&c, s), x))
        }
    }
}

#[test]
fn criterion_07_remainder_bounds() {
    let mut t = Tally::new(7, "Taylor remainder bounds dominate exact remainders", 30);
    let mut catalog: Vec<(AdmissibleFunction, Eval)> = Vec::new();
    for k in [-0.33, 0.0, 0.27] {
        catalog.push((AdmissibleFunction::indicator(k), catalog_eval("indicator", k, &[])));
        catalog.push((AdmissibleFunction::call(k), catalog_eval("call", k, &[])));
    }
    let polys: [(&[f64], f64); 4] = [
        (&[0.0, 0.0, 1.0], 0.0),
        (&[0.0, 0.0, 0.0, 1.0], 0.0),
        (&[0.0, -1.0, 0.0, 0.5], 1.0),
        (&[1.0, 0.0, 0.0, 0.0, -0.2], 0.0),
    ];
    for (c, p) in polys {
        let order = c.len() - 2;
        catalog.push((
            AdmissibleFunction::polynomial_with_order(c, order, 1.0, p).unwrap(),
            catalog_eval("poly", 0.0, c),
        ));
    }
    for (prob, n) in [(0.2, 4usize), (0.2, 16), (0.5, 16), (0.2, 64)] {
        let z = MeanZeroDistribution::two_point(prob).unwrap();
        let family = iid_family(&z, n).unwrap();
        let x_atoms = binomial_sum(n - 1, n, prob);
        let y_atoms = binomial_sum(1, n, prob);
        let y_law = family[0].law().clone();
        let star = family[0].zero_bias().unwrap();
        let mut fact = 1.0;
        let m: Vec<f64> = (0..=6i32)
            .map(|q| {
                if q > 0 {
                    fact *= q as f64;
                }
                expect(&y_atoms, |v| v.powi(q)) / fact
            })
            .collect();
        let x_law = zerobias::oracle::exact_law(&family[1..], DEFAULT_CAP).unwrap();
        for (h, eval) in &catalog {
            let order = h.order();
            let top = TopRegularity::exact(h).unwrap();
            let conc = concentration_leave_one_out_constants(&family, 0, h.alpha()).unwrap();
            let x_abs_p = expect(&x_atoms, |v| v.abs().powf(h.p()));
            for k in 0..=order {
                let mut exact = expect_pair(&x_atoms, &y_atoms, |v| eval(k, v));
                for (j, mj) in m.iter().enumerate().take(order - k + 1) {
                    exact -= mj * expect(&x_atoms, |v| eval(k + j, v));
                }
                let lib = taylor_remainder(h, &x_law, &y_law, order, k).unwrap().value;
                t.le(|| format!("{} n={n} k={k} δ oracle", h.label()), (lib - exact).abs(), 1e-12);
                let bound = remainder_bound(&top, x_abs_p, &conc, &y_law, order, k).unwrap().total();
                t.le(|| format!("{} n={n} k={k} δ with X_i", h.label()), exact.abs(), bound * (1.0 + 1e-12) + 1e-15);
                let with_star = taylor_remainder(h, &x_law, star.law(), order, k).unwrap().value;
                let bound_star = remainder_bound(&top, x_abs_p, &conc, &star, order, k).unwrap().total();
                t.le(
                    || format!("{} n={n} k={k} δ with X_i*", h.label()),
                    with_star.abs(),
                    bound_star * (1.0 + 1e-12) + 1e-15,
                );
            }
            let w = reciprocal_series(&m, order);
            let eps = expect(&x_atoms, |v| eval(0, v))
                - (0..=order)
                    .map(|s| w[s] * expect_pair(&x_atoms, &y_atoms, |v| eval(s, v)))
                    .sum::<f64>();
            let lib = reverse_taylor_remainder(h, &x_law, &y_law, order).unwrap().epsilon;
            t.le(|| format!("{} n={n} ε oracle", h.label()), (lib - eps).abs(), 1e-12);
            let bound = reverse_remainder_bound(&top, x_abs_p, &conc, &y_law, order).unwrap();
            t.le(|| format!("{} n={n} ε", h.label()), eps.abs(), bound * (1.0 + 1e-12) + 1e-15);
        }
    }
    t.finish();
}

const GRID: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

#[test]
fn criterion_08_order_reproduction() {
    let mut t = Tally::new(8, "convergence orders of C_0 and C_1 for a call", 120);
    let exp = OrderExperiment {
        order: 1,
        n_grid: GRID.to_vec(),
        mc_samples: None,
        seed: 0,
        cap: DEFAULT_CAP,
        with_budget: false,
    };
    let z = MeanZeroDistribution::two_point(0.2).unwrap();
    let rows = order_experiment(&z, &AdmissibleFunction::call(0.1), &exp).unwrap();
    let mut e0 = Vec::new();
    let mut e1 = Vec::new();
    for r in &rows {
        let exact = expect(&binomial_sum(r.n, r.n, 0.2), |w| (w - 0.1).max(0.0));
        t.le(|| format!("oracle n={}", r.n), (r.oracle.value - exact).abs(), 1e-12);
        e0.push((exact - r.c_values[0]).abs());
        e1.push((exact - r.c_values[1]).abs());
        if r.n >= 64 {
            t.require(format!("n={}: C_1 error {} ≥ C_0 error {}", r.n, e1.last().unwrap(), e0.last().unwrap()), e1.last() < e0.last());
        }
    }
    let s0 = log_log_slope(&GRID, &e0);
    let s1 = log_log_slope(&GRID, &e1);
    t.require(format!("C_0 slope {s0:.4} outside [-0.65, -0.35]"), (-0.65..=-0.35).contains(&s0));
    t.require(format!("C_1 slope {s1:.4} outside [-1.2, -0.8]"), (-1.2..=-0.8).contains(&s1));
    t.finish();
}

#[test]
fn criterion_09_berry_esseen_indicator() {
    let mut t = Tally::new(9, "indicator error within C/sqrt(n), C frozen at n=16", 60);
    let mut c = None;
    for n in GRID {
        let sigma_w = 0.4;
        let family = iid_family(&MeanZeroDistribution::two_point(0.2).unwrap(), n).unwrap();
        let lib_sigma = zerobias::distributions::total_variance(&family).sqrt();
        t.le(|| format!("σ_W n={n}"), (lib_sigma - sigma_w).abs(), 1e-14);
        let gauss = normal_expectation(&AdmissibleFunction::indicator(0.0), lib_sigma).unwrap();
        t.le(|| "Φ(I_0)".into(), (gauss - 0.5).abs(), 1e-14);
        let exact = prob_between(&binomial_sum(n, n, 0.2), f64::NEG_INFINITY, 0.0);
        let err = (exact - gauss).abs();
        let c = *c.get_or_insert(err * (n as f64).sqrt());
        t.le(|| format!("n={n} error"), err, c / (n as f64).sqrt());
    }
    t.finish();
}

#[test]
fn criterion_10_one_sided_solution() {
    let mut t = Tally::new(10, "one-sided Stein solution identities", 10);
    let grid = linspace(1.0, 6.0, 26);
    for d in 2..=4 {
        let h = Differentiable::monomial(d);
        t.le(|| format!("x^{d} derivative identity"), lambda_identity_check(&h, 1.0, &grid).unwrap(), 1e-5);
        // Reference values of the solution by Simpson's rule on the
        // expectation form.
        let f = ModifiedSteinSolution::solve(&h, 1.0).unwrap();
        for x in [1.0, 2.5, 6.0] {
            let reference = simpson(|z| (x + z).powi(d as i32) * (-x * z - 0.5 * z * z).exp(), 0.0, 40.0, 40_000);
            let got = f.value(x).unwrap();
            t.le(|| format!("x^{d} value at {x}"), (got - reference).abs() / reference.abs(), 1e-9);
        }
    }
    // Λ(x^d) = (d − 1) x^{d−2}, so Λ^N maps Σ a_d x^d termwise.
    let coeffs = [0.3, -1.0, 0.5, 0.2, -0.1, 0.05, 0.01];
    let h = Differentiable::polynomial(&coeffs);
    for n in 0..=4usize {
        let iterated = lambda_iterate(&h, n).unwrap();
        for x in [-3.0f64, -1.0, 1.0, 1.7, 4.0] {
            let mut reference = 0.0;
            for (d, a) in coeffs.iter().enumerate() {
                let factor: f64 = (0..n).map(|i| d as f64 - 1.0 - 2.0 * i as f64).product();
                reference += a * factor * x.powi(d as i32 - 2 * n as i32);
            }
            let closed = lambda_iterate_formula(&h, n, x).unwrap();
            let scale = 1.0 + reference.abs();
            t.le(|| format!("Λ^{n} closed at {x}"), (closed - reference).abs() / scale, 1e-9);
            t.le(|| format!("Λ^{n} iterated at {x}"), (iterated.value(x) - reference).abs() / scale, 1e-9);
        }
    }
    for l in [0.0, 1.0, 2.0] {
        let f = ModifiedSteinSolution::solve(&Differentiable::abs_power(l), 1.0).unwrap();
        let ratio = |x: f64| f.value(x).unwrap().abs() * x.powf(1.0 - l);
        // Bounded and settling: the ratio approaches 1 as x grows.
        t.le(|| format!("|x|^{l} sup ratio"), growth_ratio(l, 1.0).unwrap(), 2.0);
        t.le(|| format!("|x|^{l} ratio at 50"), (ratio(50.0) - 1.0).abs(), 0.05);
    }
    t.finish();
}

fn run_bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_zerobias"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn criterion_11_determinism() {
    let mut t = Tally::new(11, "repeated CLI runs give byte-identical CSV", 120);
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mc.json");
    std::fs::write(
        &config,
        r#"{"oracle": "monte-carlo", "mc_samples": 20000, "function": {"name": "call", "k": 0.1}}"#,
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    let runs: [(&str, &[&str], &[&str]); 4] = [
        ("expand", &["--config", cfg, "--n-grid", "16,64,256"], &["expand.csv"]),
        ("verify", &[], &["verify.csv"]),
        ("concentration", &[], &["concentration.csv", "concentration_summary.csv"]),
        ("order-fit", &["--n-grid", "16,32,64,128"], &["order_series.csv", "order_fit.csv"]),
    ];
    for (sub, extra, files) in runs {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{sub}-{rep}"));
            let mut args = vec![sub, "--seed", "42", "--quiet", "--out", out.to_str().unwrap()];
            args.extend_from_slice(extra);
            let status = run_bin(&args);
            t.require(
                format!("{sub} exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)),
                status.status.success(),
            );
            outputs.push(out);
        }
        for f in files {
            let a = std::fs::read(outputs[0].join(f)).unwrap_or_default();
            let b = std::fs::read(outputs[1].join(f)).unwrap_or_default();
            t.require(format!("{sub}: {f} differs between runs"), !a.is_empty() && a == b);
        }
    }
    // A different seed changes the Monte Carlo column, so the seed is live.
    let other = dir.path().join("expand-other");
    run_bin(&["expand", "--config", cfg, "--n-grid", "16,64,256", "--seed", "43", "--quiet", "--out", other.to_str().unwrap()]);
    let a = std::fs::read(dir.path().join("expand-0/expand.csv")).unwrap_or_default();
    let b = std::fs::read(other.join("expand.csv")).unwrap_or_default();
    t.require("seed 43 reproduced seed 42", a != b);
    t.finish();
}
