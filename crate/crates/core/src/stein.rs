//! Solutions of Stein's equation `x f(x) − σ² f'(x) = h(x) − Φ_σ(h)`, their
//! derivatives, the modified one-sided solution on ℝ∖(−1, 1), and Gaussian
//! expectations of admissible functions.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::admissible::{
    lambda_iterate, AdmissibleFunction, Derivatives, Differentiable, FunctionKind, Jump,
};
use crate::error::{domain, Error, Result};
use crate::numerics::{
    binomial, double_factorial_odd, normal_cdf, normal_pdf, CompensatedSum, PiecewiseChebyshev,
    Poly, Quadrature,
};

/// Gaussian integrals are truncated to `±WINDOW·σ`.
pub const WINDOW: f64 = 12.0;

/// Φ_σ(f) for a plain evaluator, with quadrature panels split at `breaks`.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(
    f: F,
    sigma: f64,
    breaks: &[f64],
    quad: &Quadrature,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(domain(format!("σ must be positive, got {sigma}")));
    }
    let (lo, hi) = (-WINDOW * sigma, WINDOW * sigma);
    let mut edges = breaks.to_vec();
    edges.push(0.0);
    quad.integrate_with_breaks(|x| f(x) * normal_pdf(x, sigma), lo, hi, &edges)
}

/// Φ_σ(h): quadrature of the continuous part, plus exact normal-CDF terms
/// for the jumps when `h` itself is discontinuous.
pub fn normal_expectation(h: &AdmissibleFunction, sigma: f64) -> Result<f64> {
    normal_expectation_with(h, sigma, &Quadrature::default())
}

pub fn normal_expectation_with(h: &AdmissibleFunction, sigma: f64, quad: &Quadrature) -> Result<f64> {
    let breaks = h.jump_locations();
    if h.order() == 0 && !h.jumps().is_empty() {
        let continuous = gaussian_expectation(|x| h.continuous_top(x), sigma, &breaks, quad)?;
        // h = h_c − Σ size_j·1{x ≤ K_j}
        let jumps: f64 = h
            .jumps()
            .iter()
            .map(|j| j.size * normal_cdf(j.location, sigma))
            .sum();
        Ok(continuous - jumps)
    } else {
        gaussian_expectation(|x| h.value(x), sigma, &breaks, quad)
    }
}

/// Controls how a [`SteinSolution`] is evaluated and cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub quadrature: Quadrature,
    /// The interpolation cache covers `±cache_sigmas·σ`; zero disables it.
    pub cache_sigmas: f64,
    /// Largest cache panel, in units of σ.
    pub panel_sigmas: f64,
    /// Relative interpolation tolerance.
    pub interp_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::default(),
            cache_sigmas: 20.0,
            panel_sigmas: 0.5,
            interp_tol: 1e-13,
        }
    }
}

/// `f_h` for a fixed target variance.
///
/// Each derivative `f^(m)`, `m ≤ N + 1`, comes from its own integral
/// representation against the exact derivatives of `h`, and gets its own
/// interpolation cache. Deriving higher derivatives from cached values via
/// the recurrence `f^(m+1) = (x f^(m) + m f^(m−1) − h^(m))/σ²` would amplify
/// the cache error by roughly `|x|/σ²` per step.
#[derive(Debug, Clone)]
pub struct SteinSolution {
    source: AdmissibleFunction,
    sigma: f64,
    variance: f64,
    mean: f64,
    options: SolveOptions,
    caches: Vec<PiecewiseChebyshev>,
    perturbation: f64,
}

impl SteinSolution {
    pub fn solve(h: &AdmissibleFunction, sigma: f64) -> Result<Self> {
        Self::solve_with(h, sigma, SolveOptions::default())
    }

    pub fn solve_with(h: &AdmissibleFunction, sigma: f64, options: SolveOptions) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("σ must be positive, got {sigma}")));
        }
        let mean = normal_expectation_with(h, sigma, &options.quadrature)?;
        let mut s = Self {
            source: h.clone(),
            sigma,
            variance: sigma * sigma,
            mean,
            options,
            caches: Vec::new(),
            perturbation: 0.0,
        };
        if options.cache_sigmas > 0.0 {
            let half = options.cache_sigmas * sigma;
            let mut edges = vec![-half, 0.0, half];
            edges.extend(h.jump_locations().into_iter().filter(|k| k.abs() < half));
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            let caches = (0..=s.max_order())
                .map(|m| {
                    PiecewiseChebyshev::build(
                        |x| s.direct_derivative(m, x),
                        &edges,
                        options.panel_sigmas * sigma,
                        options.interp_tol,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            s.caches = caches;
        }
        Ok(s)
    }

    /// Test hook: adds a constant offset to every value of `f_h`, which
    /// breaks Stein's equation by `x·offset`.
    pub fn with_perturbation(mut self, offset: f64) -> Self {
        self.perturbation = offset;
        self
    }

    pub fn source(&self) -> &AdmissibleFunction {
        &self.source
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Φ_σ(h).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Highest derivative order available, `N + 1`.
    pub fn max_order(&self) -> usize {
        self.source.order() + 1
    }

    /// f_h(x) from the tail-stable expectation form, without the cache.
    pub fn direct(&self, x: f64) -> Result<f64> {
        self.direct_derivative(0, x)
    }

    /// `f^(m)(x)` without the cache, for `m ≤ N + 1`.
    ///
    /// For `x ≥ 0`, `f(x) = (1/σ²)∫_0^∞ H(x+z) K dz` with `H = h − Φ_σ(h)` and
    /// `K = e^{−xz/σ² − z²/(2σ²)}`; since `∂_x K = −(z/σ²) K`,
    /// `f^(m)(x) = (1/σ²)∫ Σ_j C(m,j) H^(j)(x+z) (−z/σ²)^{m−j} K dz`, where the
    /// jumps of `h^(N)` add point masses when `j = N + 1`. For `x < 0` the
    /// mirrored left integral carries a minus sign and `+u/σ²` factors.
    pub fn direct_derivative(&self, m: usize, x: f64) -> Result<f64> {
        if m > self.max_order() {
            return Err(Error::Order {
                requested: m,
                available: self.max_order(),
            });
        }
        let v = self.variance;
        let reach = -x.abs() + (x * x + 120.0 * v).sqrt();
        let h = &self.source;
        let mean = self.mean;
        let weights: Vec<f64> = (0..=m).map(|j| binomial(m, j)).collect();
        let forward = x >= 0.0;
        let integrand = |t: f64| {
            let (y, factor, kernel) = if forward {
                (x + t, -t / v, (-(x * t) / v - t * t / (2.0 * v)).exp())
            } else {
                (x - t, t / v, ((x * t) / v - t * t / (2.0 * v)).exp())
            };
            let mut acc = 0.0;
            let mut power = 1.0;
            // j runs downwards so that (factor)^{m−j} builds up incrementally.
            for j in (0..=m).rev() {
                let hj = if j == 0 { h.value(y) - mean } else { h.derivative_unchecked(j, y) };
                acc += weights[j] * hj * power;
                power *= factor;
            }
            acc * kernel
        };
        let breaks: Vec<f64> = h
            .jump_locations()
            .into_iter()
            .map(|k| if forward { k - x } else { x - k })
            .filter(|&t| t > 0.0)
            .collect();
        let integral = self
            .options
            .quadrature
            .integrate_with_breaks(integrand, 0.0, reach, &breaks)?;
        // Point masses of H^(N+1) = Σ size·δ_K, using left limits at x = K.
        let mut atoms = 0.0;
        if m == self.max_order() {
            for j in h.jumps() {
                if forward && j.location >= x {
                    let t = j.location - x;
                    atoms += j.size * (-(x * t) / v - t * t / (2.0 * v)).exp();
                } else if !forward && j.location < x {
                    let t = x - j.location;
                    atoms += j.size * ((x * t) / v - t * t / (2.0 * v)).exp();
                }
            }
        }
        let sign = if forward { 1.0 } else { -1.0 };
        Ok(sign * (integral + atoms) / v)
    }

    fn cached(&self, m: usize, x: f64) -> Result<f64> {
        match self.caches.get(m) {
            Some(c) if c.contains(x) => Ok(c.eval(x)),
            _ => self.direct_derivative(m, x),
        }
    }

    /// f_h(x), from the cache when `x` is inside it.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.cached(0, x)? + self.perturbation)
    }

    /// `[f, f', …, f^(m)]` at `x`.
    pub fn derivatives_upto(&self, m: usize, x: f64) -> Result<Vec<f64>> {
        (0..=m).map(|k| self.derivative(k, x)).collect()
    }

    /// f_h^(m)(x) for `m ≤ N + 1`; `m = N + 2` gives the derivative of
    /// `f^(N+1)` away from its jumps, through the recurrence.
    pub fn derivative(&self, m: usize, x: f64) -> Result<f64> {
        let top = self.max_order();
        if m == 0 {
            return self.value(x);
        }
        if m <= top {
            return self.cached(m, x);
        }
        if m == top + 1 {
            let n = top as f64;
            let f_top = self.cached(top, x)?;
            let f_below = self.cached(top - 1, x)?;
            return Ok((x * f_top + n * f_below - self.source.derivative_unchecked(top, x)) / self.variance);
        }
        Err(Error::Order {
            requested: m,
            available: top + 1,
        })
    }

    /// Jumps of `f^(N+1)`: one per jump of `h^(N)`, of size `−size/σ²`.
    pub fn top_jumps(&self) -> Vec<Jump> {
        self.source
            .jumps()
            .iter()
            .map(|j| Jump {
                location: j.location,
                size: -j.size / self.variance,
            })
            .collect()
    }

    /// `f_h^(l)` as an admissible function of order `N + 1 − l` carrying the
    /// propagated jumps.
    pub fn nested_admissible(self: &Arc<Self>, l: usize) -> Result<AdmissibleFunction> {
        let top = self.max_order();
        if l == 0 || l > top {
            return Err(Error::Order {
                requested: l,
                available: top,
            });
        }
        let s = Arc::clone(self);
        let eval: Derivatives = Arc::new(move |m, x| s.derivative(l + m, x).unwrap_or(f64::NAN));
        AdmissibleFunction::from_parts(
            format!("f^({l})[{}]", self.source.label()),
            FunctionKind::SteinDerivative {
                source: self.source.label().to_string(),
                level: l,
                sigma: self.sigma,
            },
            top - l,
            self.source.alpha(),
            self.source.p(),
            eval,
            self.top_jumps(),
            None,
        )
        // f_h of a degree-d polynomial is a polynomial of degree d − 1.
        .map(|f| {
            let degree = self.source.polynomial_degree().map(|d| d.saturating_sub(1 + l));
            f.with_polynomial_degree(degree)
        })
    }

    /// `x f(x) − σ² f'(x) − (h(x) − Φ_σ(h))` with `f'` from a five-point
    /// central difference of the values; `None` when the stencil would
    /// touch a jump of `h`'s derivatives.
    pub fn stein_residual(&self, x: f64) -> Result<Option<f64>> {
        let step = 1e-3 * self.sigma;
        if self
            .source
            .jumps()
            .iter()
            .any(|j| (j.location - x).abs() <= 2.5 * step)
        {
            return Ok(None);
        }
        let f = |y: f64| self.value(y);
        let fd = (8.0 * (f(x + step)? - f(x - step)?) - (f(x + 2.0 * step)? - f(x - 2.0 * step)?))
            / (12.0 * step);
        Ok(Some(x * f(x)? - self.variance * fd - (self.source.value(x) - self.mean)))
    }

    /// Worst scaled residual `|r(x)| / (1 + |x|^{p+α+1})` over `points`
    /// equally spaced points of `[−8σ, 8σ]`.
    pub fn residual_check(&self, points: usize) -> Result<ResidualReport> {
        let growth = self.source.p() + self.source.alpha() + 1.0;
        let mut report = ResidualReport::default();
        for x in crate::numerics::linspace(-8.0 * self.sigma, 8.0 * self.sigma, points) {
            if let Some(r) = self.stein_residual(x)? {
                let scaled = r.abs() / (1.0 + x.abs().powf(growth));
                report.checked += 1;
                if scaled > report.max_scaled {
                    report.max_scaled = scaled;
                    report.worst_x = x;
                }
            }
        }
        Ok(report)
    }
}

/// Result of a residual sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_scaled: f64,
    pub worst_x: f64,
    pub checked: usize,
}

/// Φ_σ(f_h^(l)) by quadrature of the recurrence-derived derivative.
pub fn normal_expectation_of_derivative(s: &Arc<SteinSolution>, l: usize) -> Result<f64> {
    if l == 0 {
        let f = |x: f64| s.value(x).unwrap_or(f64::NAN);
        return gaussian_expectation(f, s.sigma(), &s.source().jump_locations(), &Quadrature::default());
    }
    normal_expectation(&s.nested_admissible(l)?, s.sigma())
}

/// Φ_σ(f_h^(l)) reduced to a Gaussian integral against `h` alone.
///
/// Each step trades a derivative for a polynomial weight,
/// `Φ(P g') = Φ((xP/σ² − P') g)`, until `Φ(R f_h)` remains; then Stein's
/// equation gives `Φ(R f_h) = Φ(Q (h − Φ(h))) / σ²` with `Q' = R`.
pub fn reduced_normal_expectation(h: &AdmissibleFunction, sigma: f64, l: usize) -> Result<f64> {
    let v = sigma * sigma;
    let mut weight = Poly::constant(1.0);
    for _ in 0..l {
        weight = weight.times_x().scale(1.0 / v).add(&weight.derivative().scale(-1.0));
    }
    let q = weight.antiderivative();
    let quad = Quadrature::default();
    let mean = normal_expectation_with(h, sigma, &quad)?;
    let breaks = h.jump_locations();
    let integral = gaussian_expectation(|x| q.eval(x) * (h.value(x) - mean), sigma, &breaks, &quad)?;
    Ok(integral / v)
}

/// Both sides of `σ²·Φ_σ(f_h'') = Φ_σ((x²/(3σ²) − 1)·x·h) / σ²`.
pub fn call_correction_identity(h: &AdmissibleFunction, sigma: f64) -> Result<(f64, f64)> {
    let s = Arc::new(SteinSolution::solve(h, sigma)?);
    let v = sigma * sigma;
    let lhs = v * normal_expectation_of_derivative(&s, 2)?;
    let rhs = gaussian_expectation(
        |x| (x * x / (3.0 * v) - 1.0) * x * h.value(x),
        sigma,
        &h.jump_locations(),
        &Quadrature::default(),
    )? / v;
    Ok((lhs, rhs))
}

/// `|Φ_σ(f') − Φ_σ(x·f)/σ²|` for a smooth `f`.
pub fn gaussian_integration_by_parts_gap(f: &Differentiable, sigma: f64) -> Result<f64> {
    let quad = Quadrature::default();
    let lhs = gaussian_expectation(|x| f.derivative(1, x).unwrap_or(f64::NAN), sigma, &[], &quad)?;
    let rhs = gaussian_expectation(|x| x * f.value(x), sigma, &[], &quad)? / (sigma * sigma);
    Ok((lhs - rhs).abs())
}

/// `f̃_h`, the solution of `x f̃(x) − σ² f̃'(x) = h(x)` on ℝ∖(−1, 1) given by
/// one-sided integrals: from the right for `x ≥ 1` and, with a minus sign,
/// from the left for `x ≤ −1`.
#[derive(Debug, Clone)]
pub struct ModifiedSteinSolution {
    source: Differentiable,
    sigma: f64,
    quad: Quadrature,
}

impl ModifiedSteinSolution {
    pub fn solve(h: &Differentiable, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("σ must be positive, got {sigma}")));
        }
        Ok(Self {
            source: h.clone(),
            sigma,
            quad: Quadrature::default(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn source(&self) -> &Differentiable {
        &self.source
    }

    /// f̃_h(x) for |x| ≥ 1, by the expectation form
    /// `±(1/σ²)∫_0^∞ h(x ± z) e^{∓xz/σ² − z²/(2σ²)} dz`.
    pub fn value(&self, x: f64) -> Result<f64> {
        if x.abs() < 1.0 {
            return Err(domain(format!("the modified solution is defined on |x| ≥ 1, got {x}")));
        }
        let v = self.sigma * self.sigma;
        let reach = -x.abs() + (x * x + 120.0 * v).sqrt();
        let h = &self.source;
        let (sign, dir) = if x > 0.0 { (1.0, 1.0) } else { (-1.0, -1.0) };
        let integral = self.quad.integrate(
            |z| h.value(x + dir * z) * (-(x.abs() * z) / v - z * z / (2.0 * v)).exp(),
            0.0,
            reach,
        )?;
        Ok(sign * integral / v)
    }

    /// f̃_h'(x) by a five-point difference: central, or pointing away from
    /// the origin when the central stencil would enter (−1, 1).
    pub fn derivative_fd(&self, x: f64) -> Result<f64> {
        let step = 1e-3;
        let f = |y: f64| self.value(y);
        if x.abs() - 2.0 * step >= 1.0 {
            return Ok((8.0 * (f(x + step)? - f(x - step)?) - (f(x + 2.0 * step)? - f(x - 2.0 * step)?)) / (12.0 * step));
        }
        let h = step * x.signum();
        let g = |k: f64| f(x + k * h);
        Ok((-25.0 * g(0.0)? + 48.0 * g(1.0)? - 36.0 * g(2.0)? + 16.0 * g(3.0)? - 3.0 * g(4.0)?) / (12.0 * h))
    }

    /// f̃_h''(x) by a five-point central difference.
    pub fn second_derivative_fd(&self, x: f64) -> Result<f64> {
        let step = 1e-2;
        let f = |y: f64| self.value(y);
        Ok((-f(x + 2.0 * step)? + 16.0 * f(x + step)? - 30.0 * f(x)? + 16.0 * f(x - step)?
            - f(x - 2.0 * step)?)
            / (12.0 * step * step))
    }

    /// `x f̃(x) − σ² f̃'(x) − h(x)`.
    pub fn residual(&self, x: f64) -> Result<f64> {
        Ok(x * self.value(x)? - self.sigma * self.sigma * self.derivative_fd(x)? - self.source.value(x))
    }
}

/// `max_x |f̃_h'(x) − x·f̃_{Λ(h)}(x)|` over `grid`.
pub fn lambda_identity_check(h: &Differentiable, sigma: f64, grid: &[f64]) -> Result<f64> {
    let fh = ModifiedSteinSolution::solve(h, sigma)?;
    let fl = ModifiedSteinSolution::solve(&lambda_iterate(h, 1)?, sigma)?;
    let mut worst = 0.0f64;
    for &x in grid {
        let lhs = fh.derivative_fd(x)?;
        let rhs = x * fl.value(x)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `Σ_{k ≤ N/2} C(N, 2k) (2k−1)!! x^{N−2k} f̃_{Λ^{N−k}(h)}(x)`, the N-th
/// derivative of `f̃_h` expressed through iterated `Λ`.
pub fn modified_higher_derivative(h: &Differentiable, sigma: f64, n: usize, x: f64) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for k in 0..=n / 2 {
        let image = lambda_iterate(h, n - k)?;
        let f = ModifiedSteinSolution::solve(&image, sigma)?.value(x)?;
        acc.add(binomial(n, 2 * k) * double_factorial_odd(k) * x.powi((n - 2 * k) as i32) * f);
    }
    Ok(acc.value())
}
