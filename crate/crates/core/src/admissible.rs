//! Test functions `h` with an `N`-th derivative split into a continuous part
//! and finitely many jumps, the growth-weighted Hölder norm, and the `Λ`
//! operator used by the modified Stein solution.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{abs_pow, binomial, double_factorial_odd, factorial, hermite_he, Poly};

/// `(m, x) ↦ h^(m)(x)`.
pub type Derivatives = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

/// A jump of the top derivative: `size` is the right limit minus the left
/// limit at `location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub location: f64,
    pub size: f64,
}

/// Where a function came from; used for reporting and for the cases where
/// norms are known in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum FunctionKind {
    Indicator { k: f64 },
    Call { k: f64 },
    Polynomial { coeffs: Vec<f64> },
    Cos,
    ExpBounded,
    Smooth { label: String },
    /// `f_g^(level)` for the Stein solution of another function.
    SteinDerivative { source: String, level: usize, sigma: f64 },
}

/// A member of the space of functions whose `order`-th derivative is a
/// continuous part of finite `‖·‖_{α,p}` norm plus finitely many jumps.
///
/// Evaluation at a jump location returns the left limit, so that the
/// discontinuous part reads `Σ (−size_j)·1{x ≤ K_j}`.
#[derive(Clone)]
pub struct AdmissibleFunction {
    id: u64,
    label: String,
    kind: FunctionKind,
    order: usize,
    alpha: f64,
    p: f64,
    eval: Derivatives,
    jumps: Vec<Jump>,
    exact_norm: Option<f64>,
    polynomial_degree: Option<usize>,
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFunction")
            .field("id", &self.id)
            .field("label", &self.label)
            .field("order", &self.order)
            .field("alpha", &self.alpha)
            .field("p", &self.p)
            .field("jumps", &self.jumps)
            .field("exact_norm", &self.exact_norm)
            .finish()
    }
}

fn check_alpha_p(alpha: f64, p: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(domain(format!("α must lie in (0, 1], got {alpha}")));
    }
    if !(p >= 0.0 && p.is_finite()) {
        return Err(domain(format!("p must be a finite non-negative number, got {p}")));
    }
    Ok(())
}

impl AdmissibleFunction {
    /// Low-level constructor. Jump locations must be strictly increasing.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        label: impl Into<String>,
        kind: FunctionKind,
        order: usize,
        alpha: f64,
        p: f64,
        eval: Derivatives,
        jumps: Vec<Jump>,
        exact_norm: Option<f64>,
    ) -> Result<Self> {
        check_alpha_p(alpha, p)?;
        if jumps.windows(2).any(|w| w[1].location <= w[0].location) {
            return Err(Error::Validation("jump locations must be strictly increasing".into()));
        }
        if jumps.iter().any(|j| !j.location.is_finite() || !j.size.is_finite()) {
            return Err(Error::Validation("jump locations and sizes must be finite".into()));
        }
        Ok(Self {
            id: fresh_id(),
            label: label.into(),
            kind,
            order,
            alpha,
            p,
            eval,
            jumps,
            exact_norm,
            polynomial_degree: None,
        })
    }

    /// `1{x ≤ k}`: order 0, one jump of size −1, zero continuous part.
    pub fn indicator(k: f64) -> Self {
        let eval: Derivatives = Arc::new(move |m, x| if m == 0 && x <= k { 1.0 } else { 0.0 });
        Self::from_parts(
            format!("indicator({k})"),
            FunctionKind::Indicator { k },
            0,
            1.0,
            0.0,
            eval,
            vec![Jump { location: k, size: -1.0 }],
            Some(0.0),
        )
        .expect("indicator parameters are valid")
    }

    /// `(x − k)_+`: order 1, `h' = 1{x > k}` with one jump of size +1.
    pub fn call(k: f64) -> Self {
        let eval: Derivatives = Arc::new(move |m, x| match m {
            0 => (x - k).max(0.0),
            1 if x > k => 1.0,
            _ => 0.0,
        });
        Self::from_parts(
            format!("call({k})"),
            FunctionKind::Call { k },
            1,
            1.0,
            0.0,
            eval,
            vec![Jump { location: k, size: 1.0 }],
            Some(0.0),
        )
        .expect("call parameters are valid")
    }

    /// Polynomial with ascending coefficients, classified with order equal
    /// to its degree.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let poly = Poly::new(coeffs.to_vec());
        let degree = poly.degree();
        Self::polynomial_with_order(coeffs, degree, 1.0, 0.0).expect("default classification is valid")
    }

    /// Polynomial classified with an explicit `(order, α, p)`.
    pub fn polynomial_with_order(coeffs: &[f64], order: usize, alpha: f64, p: f64) -> Result<Self> {
        let poly = Poly::new(coeffs.to_vec());
        let degree = poly.degree();
        // ‖a·x + b‖ with α = 1 is |a|/3 for p = 0 (0^0 = 1) and |a| for p > 0.
        let exact_norm = if order >= degree {
            Some(0.0)
        } else if order + 1 == degree && alpha == 1.0 {
            let slope = poly.eval_derivative(order + 1, 0.0).abs();
            Some(if p == 0.0 { slope / 3.0 } else { slope })
        } else {
            None
        };
        let eval: Derivatives = Arc::new(move |m, x| poly.eval_derivative(m, x));
        let mut h = Self::from_parts(
            format!("poly{coeffs:?}"),
            FunctionKind::Polynomial {
                coeffs: coeffs.to_vec(),
            },
            order,
            alpha,
            p,
            eval,
            Vec::new(),
            exact_norm,
        )?;
        h.polynomial_degree = Some(degree);
        Ok(h)
    }

    /// `x^d`.
    pub fn monomial(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        Self::polynomial(&c)
    }

    /// `cos x` classified in order 3 with α = 1, p = 0.
    pub fn cos() -> Self {
        Self::cos_with_order(3).expect("cos classification is valid")
    }

    pub fn cos_with_order(order: usize) -> Result<Self> {
        let eval: Derivatives = Arc::new(|m, x| match m % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        });
        // sup |sin x − sin y| / (3|x − y|) = 1/3, same for cos.
        Self::from_parts("cos", FunctionKind::Cos, order, 1.0, 0.0, eval, Vec::new(), Some(1.0 / 3.0))
    }

    /// Gaussian bump `exp(−x²/2)`, bounded with bounded derivatives of every
    /// order.
    pub fn exp_bounded(order: usize) -> Result<Self> {
        let eval: Derivatives = Arc::new(|m, x| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * hermite_he(m, x) * (-0.5 * x * x).exp()
        });
        Self::from_parts("exp-bounded", FunctionKind::ExpBounded, order, 1.0, 0.0, eval, Vec::new(), None)
    }

    /// User-supplied smooth function with `order + 1` derivative evaluators
    /// (index 0 is `h`). The evaluators are checked against central finite
    /// differences.
    pub fn smooth(
        label: impl Into<String>,
        derivs: Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        order: usize,
        alpha: f64,
        p: f64,
    ) -> Result<Self> {
        if derivs.len() != order + 1 {
            return Err(Error::Validation(format!(
                "order {order} needs {} derivative evaluators, got {}",
                order + 1,
                derivs.len()
            )));
        }
        let label = label.into();
        let eval: Derivatives = Arc::new(move |m, x| derivs.get(m).map_or(f64::NAN, |d| d(x)));
        let h = Self::from_parts(
            label.clone(),
            FunctionKind::Smooth { label },
            order,
            alpha,
            p,
            eval,
            Vec::new(),
            None,
        )?;
        h.validate()?;
        Ok(h)
    }

    /// Checks that each `h^(k)`, `k < N`, differentiates to `h^(k+1)` on 64
    /// quasi-random points of [−5, 5] at least 1e-3 away from every jump.
    pub fn validate(&self) -> Result<()> {
        const GOLDEN: f64 = 0.618_033_988_749_894_8;
        let step = 1e-3;
        let mut checked = 0;
        let mut t = 0.5;
        while checked < 64 {
            t = (t + GOLDEN).fract();
            let x = -5.0 + 10.0 * t;
            if self.jumps.iter().any(|j| (j.location - x).abs() < 1e-3 + 2.0 * step) {
                continue;
            }
            checked += 1;
            for k in 0..self.order {
                let f = |y: f64| (self.eval)(k, y);
                let fd = (8.0 * (f(x + step) - f(x - step)) - (f(x + 2.0 * step) - f(x - 2.0 * step)))
                    / (12.0 * step);
                let d = (self.eval)(k + 1, x);
                if !((fd - d).abs() <= 1e-5 * (1.0 + d.abs())) {
                    return Err(Error::Validation(format!(
                        "{}: derivative {} at x = {x} is {d}, finite difference gives {fd}",
                        self.label,
                        k + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn jump_locations(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.location).collect()
    }

    /// V(h_d^(N)) = Σ |size_j|.
    pub fn total_variation(&self) -> f64 {
        self.jumps.iter().map(|j| j.size.abs()).sum()
    }

    /// `‖h_c^(N)‖_{α,p}` when known in closed form.
    pub fn exact_norm(&self) -> Option<f64> {
        self.exact_norm
    }

    /// Degree when the function is a polynomial.
    pub fn polynomial_degree(&self) -> Option<usize> {
        self.polynomial_degree
    }

    /// Marks the function as a polynomial of at most the given degree.
    pub(crate) fn with_polynomial_degree(mut self, degree: Option<usize>) -> Self {
        self.polynomial_degree = degree;
        self
    }

    /// Returns a copy with a different `(α, p)` classification. A closed-form
    /// norm is recomputed for the catalog kinds that have one.
    pub fn reclassified(&self, alpha: f64, p: f64) -> Result<Self> {
        check_alpha_p(alpha, p)?;
        match &self.kind {
            FunctionKind::Polynomial { coeffs } => Self::polynomial_with_order(coeffs, self.order, alpha, p),
            _ => {
                let mut out = self.clone();
                out.alpha = alpha;
                out.p = p;
                out.id = fresh_id();
                out.exact_norm = match &self.kind {
                    FunctionKind::Indicator { .. } | FunctionKind::Call { .. } => Some(0.0),
                    FunctionKind::Cos if alpha == 1.0 => Some(if p == 0.0 { 1.0 / 3.0 } else { 1.0 }),
                    _ => None,
                };
                Ok(out)
            }
        }
    }

    /// h(x).
    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(0, x)
    }

    /// h^(m)(x) for m ≤ N.
    pub fn derivative(&self, m: usize, x: f64) -> Result<f64> {
        if m > self.order {
            return Err(Error::Order {
                requested: m,
                available: self.order,
            });
        }
        Ok((self.eval)(m, x))
    }

    /// h^(m)(x) without the order check; beyond `N` the value is whatever
    /// the evaluator provides (zero for the catalog jump functions).
    pub fn derivative_unchecked(&self, m: usize, x: f64) -> f64 {
        (self.eval)(m, x)
    }

    /// Continuous part of the top derivative: `h^(N) + Σ size_j·1{x ≤ K_j}`.
    pub fn continuous_top(&self, x: f64) -> f64 {
        let d: f64 = self
            .jumps
            .iter()
            .filter(|j| x <= j.location)
            .map(|j| j.size)
            .sum();
        (self.eval)(self.order, x) + d
    }

    /// Continuous part of `h` itself when `N = 0`; `h` when `N ≥ 1`.
    pub fn continuous_value(&self, x: f64) -> f64 {
        if self.order == 0 {
            self.continuous_top(x)
        } else {
            self.value(x)
        }
    }

    pub fn evaluator(&self) -> Derivatives {
        self.eval.clone()
    }

    /// `h'` as a member of the space of order `N − 1` with the same jumps.
    pub fn derivative_function(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Order {
                requested: 1,
                available: 0,
            });
        }
        let base = self.eval.clone();
        let eval: Derivatives = Arc::new(move |m, x| base(m + 1, x));
        let mut out = Self::from_parts(
            format!("d/dx {}", self.label),
            self.kind.clone(),
            self.order - 1,
            self.alpha,
            self.p,
            eval,
            self.jumps.clone(),
            self.exact_norm,
        )?;
        out.polynomial_degree = self.polynomial_degree.map(|d| d.saturating_sub(1));
        Ok(out)
    }

    /// Grid lower bound of `‖h_c^(N)‖_{α,p}` on `[lo, hi]`.
    pub fn norm_estimate(&self, lo: f64, hi: f64, grid: usize) -> Result<f64> {
        let f = |x: f64| self.continuous_top(x);
        norm_estimate(f, self.alpha, self.p, lo, hi, grid)
    }
}

/// Supremum of `|f(x) − f(y)| / (|x − y|^α (1 + |x|^p + |y|^p))` over all
/// pairs of a uniform grid of `[lo, hi]`, with `0^0 = 1`.
pub fn norm_estimate<F: Fn(f64) -> f64>(f: F, alpha: f64, p: f64, lo: f64, hi: f64, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(domain("norm estimate needs at least 2 grid points"));
    }
    if !(hi > lo) {
        return Err(domain(format!("empty interval [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = crate::numerics::linspace(lo, hi, grid);
    let values: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let weights: Vec<f64> = xs.iter().map(|&x| abs_pow(x, p)).collect();
    let mut best = 0.0f64;
    for i in 0..grid {
        for j in i + 1..grid {
            let num = (values[i] - values[j]).abs();
            if num == 0.0 {
                continue;
            }
            let den = (xs[j] - xs[i]).powf(alpha) * (1.0 + weights[i] + weights[j]);
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// Function on ℝ∖(−1, 1) with derivatives to some order.
#[derive(Clone)]
pub struct Differentiable {
    eval: Derivatives,
    max_order: usize,
}

impl fmt::Debug for Differentiable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Differentiable").field("max_order", &self.max_order).finish()
    }
}

impl Differentiable {
    pub fn new(eval: Derivatives, max_order: usize) -> Self {
        Self { eval, max_order }
    }

    /// `a_0 + a_1 x + …` with derivatives of every order.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let poly = Poly::new(coeffs.to_vec());
        Self::new(Arc::new(move |m, x| poly.eval_derivative(m, x)), usize::MAX)
    }

    pub fn monomial(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        Self::polynomial(&c)
    }

    /// `|x|^l`, smooth away from the origin.
    pub fn abs_power(l: f64) -> Self {
        Self::new(
            Arc::new(move |m, x| {
                // d^m/dx^m |x|^l = l(l−1)…(l−m+1) |x|^{l−m} sgn(x)^m
                let falling: f64 = (0..m).map(|i| l - i as f64).product();
                let sgn = if x < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
                falling * x.abs().powf(l - m as f64) * sgn
            }),
            usize::MAX,
        )
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(0, x)
    }

    pub fn derivative(&self, m: usize, x: f64) -> Result<f64> {
        if m > self.max_order {
            return Err(Error::Order {
                requested: m,
                available: self.max_order,
            });
        }
        Ok((self.eval)(m, x))
    }

    pub fn evaluator(&self) -> Derivatives {
        self.eval.clone()
    }

    /// a·self + b·other.
    pub fn linear_combination(&self, a: f64, other: &Differentiable, b: f64) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        Self::new(
            Arc::new(move |m, x| a * f(m, x) + b * g(m, x)),
            self.max_order.min(other.max_order),
        )
    }
}

/// `Λ(h)(x) = (h(x)/x)' = h'(x)/x − h(x)/x²` on ℝ∖(−1, 1).
#[derive(Debug, Clone)]
pub struct LambdaImage {
    base: Differentiable,
}

/// Builds `Λ(h)`; needs `h'`.
pub fn lambda_apply(h: &Differentiable) -> Result<LambdaImage> {
    if h.max_order < 1 {
        return Err(Error::Order {
            requested: 1,
            available: h.max_order,
        });
    }
    Ok(LambdaImage { base: h.clone() })
}

fn outside_unit(x: f64) -> Result<()> {
    if x.abs() < 1.0 {
        Err(domain(format!("Λ is defined on |x| ≥ 1, got x = {x}")))
    } else {
        Ok(())
    }
}

impl LambdaImage {
    pub fn base(&self) -> &Differentiable {
        &self.base
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.derivative(0, x)
    }

    /// `Λ(h)^(m) = (h/x)^(m+1) = Σ_j C(m+1, j) h^(j) · (−1)^r r! / x^{r+1}`,
    /// `r = m + 1 − j`.
    pub fn derivative(&self, m: usize, x: f64) -> Result<f64> {
        outside_unit(x)?;
        Ok(lambda_derivative(&self.base.eval, m, x))
    }

    /// The image as a differentiable function, ready for another `Λ`.
    pub fn to_differentiable(&self) -> Differentiable {
        let base = self.base.eval.clone();
        Differentiable::new(
            Arc::new(move |m, x| lambda_derivative(&base, m, x)),
            self.base.max_order.saturating_sub(1),
        )
    }
}

fn lambda_derivative(base: &Derivatives, m: usize, x: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..=m + 1 {
        let r = m + 1 - j;
        let sign = if r.is_multiple_of(2) { 1.0 } else { -1.0 };
        s += binomial(m + 1, j) * base(j, x) * sign * factorial(r) / x.powi(r as i32 + 1);
    }
    s
}

/// `Λ^N(h)(x) = Σ_{k=0}^{N} (−1)^k (2k−1)!! C(N+k, 2k) h^(N−k)(x) / x^{N+k}`.
pub fn lambda_iterate_formula(h: &Differentiable, n: usize, x: f64) -> Result<f64> {
    outside_unit(x)?;
    let mut s = 0.0;
    for k in 0..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * double_factorial_odd(k) * binomial(n + k, 2 * k) * h.derivative(n - k, x)?
            / x.powi((n + k) as i32);
    }
    Ok(s)
}

/// `Λ^N(h)` by applying [`lambda_apply`] `N` times.
pub fn lambda_iterate(h: &Differentiable, n: usize) -> Result<Differentiable> {
    let mut cur = h.clone();
    for _ in 0..n {
        cur = lambda_apply(&cur)?.to_differentiable();
    }
    Ok(cur)
}
