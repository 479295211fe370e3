//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's numerics.

#![allow(dead_code)]

use std::io::Write;
use std::time::Duration;

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

/// Atoms `(location, weight)`.
pub type Atoms = Vec<(f64, f64)>;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Bin(n, p) probabilities by log-gamma.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let ln_n = ln_gamma(n as f64 + 1.0);
    (0..=n)
        .map(|s| {
            let k = s as f64;
            (ln_n - ln_gamma(k + 1.0) - ln_gamma((n - s) as f64 + 1.0) + k * p.ln() + (n - s) as f64 * (1.0 - p).ln())
                .exp()
        })
        .collect()
}

/// Law of `m` copies of `Z/√n` with `Z` two-point: `1 − p` w.p. `p`, `−p` otherwise.
pub fn binomial_sum(m: usize, n: usize, p: f64) -> Atoms {
    let scale = 1.0 / (n as f64).sqrt();
    binomial_pmf(m, p)
        .into_iter()
        .enumerate()
        .map(|(s, w)| ((s as f64 - m as f64 * p) * scale, w))
        .collect()
}

pub fn expect(atoms: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    atoms.iter().map(|&(x, w)| w * f(x)).sum()
}

pub fn prob_between(atoms: &[(f64, f64)], a: f64, b: f64) -> f64 {
    atoms.iter().filter(|(x, _)| *x >= a && *x <= b).map(|(_, w)| w).sum()
}

/// `E f(X + Y)` by double enumeration.
pub fn expect_pair(x: &[(f64, f64)], y: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    let mut s = 0.0;
    for &(a, wa) in x {
        for &(b, wb) in y {
            s += wa * wb * f(a + b);
        }
    }
    s
}

/// Ascending coefficients of the `d`-th derivative.
pub fn poly_derivative(c: &[f64], d: usize) -> Vec<f64> {
    let mut c = c.to_vec();
    for _ in 0..d {
        if c.len() <= 1 {
            return vec![0.0];
        }
        c = c.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect();
    }
    c
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// Coefficients of `1/M(t)` up to `t^order`, where `M(t) = Σ m_q t^q` and `m_0 = 1`.
pub fn reciprocal_series(m: &[f64], order: usize) -> Vec<f64> {
    let mut w = vec![0.0; order + 1];
    w[0] = 1.0;
    for s in 1..=order {
        let mut acc = 0.0;
        for q in 1..=s {
            acc += m.get(q).copied().unwrap_or(0.0) * w[s - q];
        }
        w[s] = -acc;
    }
    w
}

/// `E[Z^j; Z > a]` for `Z ~ N(0, σ²)`, `j = 0..=jmax`.
pub fn upper_partial_moments(a: f64, sigma: f64, jmax: usize) -> Vec<f64> {
    let v = sigma * sigma;
    let dens = normal_pdf(a / sigma) / sigma;
    let mut m = vec![0.0; jmax + 1];
    m[0] = 1.0 - normal_cdf(a / sigma);
    if jmax >= 1 {
        m[1] = v * dens;
    }
    for j in 2..=jmax {
        m[j] = v * a.powi(j as i32 - 1) * dens + (j - 1) as f64 * v * m[j - 2];
    }
    m
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Least-squares slope of `ln y` on `ln n`.
pub fn log_log_slope(ns: &[usize], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ls.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Writes one result line straight to the process's stderr, so it shows up
/// even when the test harness captures output.
pub fn report(id: u32, title: &str, passed: bool, detail: &str, elapsed: Duration) {
    let mark = if passed { "PASS" } else { "FAIL" };
    let line = format!(
        "[acceptance] criterion {id:>2} {mark}  {title} ({detail}; {:.2} s)\n",
        elapsed.as_secs_f64()
    );
    let mut err = std::io::stderr().lock();
    let _ = err.write_all(line.as_bytes());
    let _ = err.flush();
}
