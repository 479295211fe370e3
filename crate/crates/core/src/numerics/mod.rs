//! Numerical building blocks shared by every other module: compensated
//! summation, special functions, polynomials, Gauss–Legendre quadrature and
//! piecewise Chebyshev interpolation.

mod interp;
mod poly;
mod quadrature;

pub use interp::PiecewiseChebyshev;
pub use poly::Poly;
pub use quadrature::{gauss_legendre, Quadrature};

use std::f64::consts::{PI, SQRT_2};

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Density of N(0, σ²).
pub fn normal_pdf(x: f64, sigma: f64) -> f64 {
    let z = x / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Distribution function of N(0, σ²).
pub fn normal_cdf(x: f64, sigma: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / (sigma * SQRT_2))
}

/// Upper tail P(N(0, σ²) > x), accurate far in the tail.
pub fn normal_sf(x: f64, sigma: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / (sigma * SQRT_2))
}

pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// (2k−1)!! with the convention (−1)!! = 1.
pub fn double_factorial_odd(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * (2 * j - 1) as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Probabilists' Hermite polynomial He_n evaluated at `x`.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// |x|^β with the convention 0^0 = 1.
pub fn abs_pow(x: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        1.0
    } else {
        x.abs().powf(beta)
    }
}

/// Evenly spaced grid with `n ≥ 2` points on [a, b].
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn normal_cdf_symmetry_and_tail() {
        assert!((normal_cdf(0.0, 2.0) - 0.5).abs() < 1e-16);
        let x = 1.3;
        assert!((normal_cdf(x, 1.0) + normal_cdf(-x, 1.0) - 1.0).abs() < 1e-15);
        assert!(normal_sf(10.0, 1.0) > 0.0 && normal_sf(10.0, 1.0) < 1e-22);
    }

    #[test]
    fn hermite_matches_explicit_forms() {
        let x = 0.7;
        assert!((hermite_he(2, x) - (x * x - 1.0)).abs() < 1e-15);
        assert!((hermite_he(3, x) - (x.powi(3) - 3.0 * x)).abs() < 1e-15);
        assert!((hermite_he(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn combinatorial_helpers() {
        assert_eq!(binomial(6, 2), 15.0);
        assert_eq!(double_factorial_odd(0), 1.0);
        assert_eq!(double_factorial_odd(3), 15.0);
        assert_eq!(factorial(5), 120.0);
        assert_eq!(abs_pow(0.0, 0.0), 1.0);
    }
}
