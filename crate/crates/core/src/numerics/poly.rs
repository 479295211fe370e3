use serde::{Deserialize, Serialize};

use super::binomial;

/// Dense real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Poly(coeffs);
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    pub fn monomial(degree: usize, c: f64) -> Self {
        let mut v = vec![0.0; degree + 1];
        v[degree] = c;
        Poly::new(v)
    }

    fn trim(&mut self) {
        while self.0.len() > 1 && self.0.last() == Some(&0.0) {
            self.0.pop();
        }
        if self.0.is_empty() {
            self.0.push(0.0);
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        if self.is_zero() {
            0
        } else {
            self.0.len() - 1
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// m-th derivative evaluated at x.
    pub fn eval_derivative(&self, m: usize, x: f64) -> f64 {
        self.0
            .iter()
            .enumerate()
            .skip(m)
            .rev()
            .fold(0.0, |acc, (k, &c)| {
                let falling = (k - m + 1..=k).fold(1.0, |a, j| a * j as f64);
                acc * x + c * falling
            })
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly {
        let mut v = vec![0.0];
        v.extend(self.0.iter().enumerate().map(|(k, &c)| c / (k + 1) as f64));
        Poly::new(v)
    }

    /// ∫_a^b p(x) dx.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let q = self.antiderivative();
        q.eval(b) - q.eval(a)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly::new(
            (0..n)
                .map(|k| self.0.get(k).unwrap_or(&0.0) + other.0.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Poly {
        Poly::new(self.0.iter().map(|&a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut v = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }

    /// x ↦ p(x) · x
    pub fn times_x(&self) -> Poly {
        let mut v = vec![0.0];
        v.extend_from_slice(&self.0);
        Poly::new(v)
    }

    /// u ↦ p(u + shift)
    pub fn shifted(&self, shift: f64) -> Poly {
        let n = self.0.len();
        let mut out = vec![0.0; n];
        for (k, &c) in self.0.iter().enumerate() {
            for (j, slot) in out.iter_mut().enumerate().take(k + 1) {
                *slot += c * binomial(k, j) * shift.powi((k - j) as i32);
            }
        }
        Poly::new(out)
    }

    /// y ↦ p(y / c)
    pub fn rescaled(&self, c: f64) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .map(|(k, &a)| a / c.powi(k as i32))
                .collect(),
        )
    }
}
