//! Concentration inequalities for `W` and `W^(i)`, the zero-bias distance
//! bound, and Taylor / reverse-Taylor remainders with their upper bounds.

use serde::{Deserialize, Serialize};

use crate::admissible::AdmissibleFunction;
use crate::distributions::{
    derive_seed, rng_from_seed, total_variance, Law, LawSampler, MeanZeroDistribution,
    ZeroBiasDistribution,
};
use crate::error::{domain, Error, Result};
use crate::expansion::{compositions_up_to, Composition};
use crate::numerics::{abs_pow, factorial, gamma, CompensatedSum, Quadrature};

/// Largest number of atom pairs enumerated exactly.
pub const ENUMERATION_CAP: usize = 10_000_000;

/// `P(a ≤ X ≤ b) ≤ c (b − a)^α + r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationConstants {
    pub alpha: f64,
    pub c: f64,
    pub r: f64,
}

impl ConcentrationConstants {
    pub fn bound(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(domain(format!("interval [{a}, {b}] is empty")));
        }
        Ok(self.c * abs_pow(b - a, self.alpha) + self.r)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(domain(format!("α must lie in (0, 1], got {alpha}")))
    }
}

/// Σ_i E|X_i^s|^{α+2}, Σ_i σ_i⁴ and σ_W².
fn sum_statistics(summands: &[MeanZeroDistribution], alpha: f64) -> Result<(f64, f64, f64)> {
    if summands.is_empty() {
        return Err(domain("at least one summand is required"));
    }
    let mut sym = CompensatedSum::new();
    let mut fourth = CompensatedSum::new();
    let mut cache: Vec<(&MeanZeroDistribution, f64)> = Vec::new();
    for (i, d) in summands.iter().enumerate() {
        d.require_moments(alpha + 2.0, i)?;
        let value = match cache.iter().find(|(e, _)| *e == d) {
            Some(&(_, v)) => v,
            None => {
                let v = d.symmetrized_abs_moment(alpha)?;
                cache.push((d, v));
                v
            }
        };
        sym.add(value);
        fourth.add(d.variance() * d.variance());
    }
    Ok((sym.value(), fourth.value(), total_variance(summands)))
}

/// Constants of `P(a ≤ W ≤ b) ≤ 2((b−a)/(2σ_W))^α + (2/(α+1)) Σ E|X_i^s/σ_W|^{α+2}
/// + (Σσ_i⁴)^{1/2} / (2σ_W²)`.
pub fn concentration_w_constants(summands: &[MeanZeroDistribution], alpha: f64) -> Result<ConcentrationConstants> {
    check_alpha(alpha)?;
    let (sym, fourth, var) = sum_statistics(summands, alpha)?;
    let sigma = var.sqrt();
    Ok(ConcentrationConstants {
        alpha,
        c: 2.0 / (2.0 * sigma).powf(alpha),
        r: 2.0 / (alpha + 1.0) * sym / sigma.powf(alpha + 2.0) + fourth.sqrt() / (2.0 * var),
    })
}

pub fn concentration_w(summands: &[MeanZeroDistribution], a: f64, b: f64, alpha: f64) -> Result<f64> {
    concentration_w_constants(summands, alpha)?.bound(a, b)
}

/// Constants of the leave-one-out bound for `W^(i) = W − X_i`: the
/// constants for `W` doubled, plus `4(2σ_i/σ_W)^α`.
pub fn concentration_leave_one_out_constants(
    summands: &[MeanZeroDistribution],
    i: usize,
    alpha: f64,
) -> Result<ConcentrationConstants> {
    check_alpha(alpha)?;
    if i >= summands.len() {
        return Err(Error::Index {
            index: i,
            len: summands.len(),
        });
    }
    let (sym, fourth, var) = sum_statistics(summands, alpha)?;
    let sigma = var.sqrt();
    Ok(ConcentrationConstants {
        alpha,
        c: 4.0 / (2.0 * sigma).powf(alpha),
        r: 4.0 / (alpha + 1.0) * sym / sigma.powf(alpha + 2.0)
            + fourth.sqrt() / var
            + 4.0 * (2.0 * summands[i].sigma() / sigma).powf(alpha),
    })
}

pub fn concentration_leave_one_out(
    summands: &[MeanZeroDistribution],
    i: usize,
    a: f64,
    b: f64,
    alpha: f64,
) -> Result<f64> {
    concentration_leave_one_out_constants(summands, i, alpha)?.bound(a, b)
}

/// `P(|X − X*| > ε) ≤ E|X^s|^{α+2} / (2 ε^α (α+1) σ²)` for independent `X`, `X*`.
pub fn zero_bias_distance_bound(dist: &MeanZeroDistribution, eps: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(eps > 0.0) {
        return Err(domain(format!("ε must be positive, got {eps}")));
    }
    let sym = dist.symmetrized_abs_moment(alpha)?;
    Ok(sym / (2.0 * eps.powf(alpha) * (alpha + 1.0) * dist.variance()))
}

/// Exact `P(|X − X*| > ε)` for independent `X` and `X*` when `X` is discrete.
pub fn zero_bias_distance_probability(dist: &MeanZeroDistribution, eps: f64) -> Result<f64> {
    if !dist.is_discrete() {
        return Err(Error::Unsupported("exact distance probability needs a discrete law".into()));
    }
    let zb = dist.zero_bias()?;
    let mut s = CompensatedSum::new();
    for a in dist.law().atoms() {
        // P(|a − X*| ≤ ε) = P(a − ε ≤ X* ≤ a + ε); X* has no atoms.
        s.add(a.w * (1.0 - zb.law().prob_between(a.x - eps, a.x + eps)));
    }
    Ok(s.value())
}

/// Anything with absolute moments, possibly with a declared limit.
pub trait AbsMoments {
    fn abs_moment(&self, beta: f64) -> f64;
    fn moment_limit(&self) -> Option<f64> {
        None
    }
    /// m_{|Y|}^(β) = E|Y|^β / Γ(β + 1).
    fn abs_normalized(&self, beta: f64) -> f64 {
        self.abs_moment(beta) / gamma(beta + 1.0)
    }
}

impl AbsMoments for Law {
    fn abs_moment(&self, beta: f64) -> f64 {
        Law::abs_moment(self, beta)
    }
}

impl AbsMoments for MeanZeroDistribution {
    fn abs_moment(&self, beta: f64) -> f64 {
        MeanZeroDistribution::abs_moment(self, beta)
    }
    fn moment_limit(&self) -> Option<f64> {
        MeanZeroDistribution::moment_limit(self)
    }
}

impl AbsMoments for ZeroBiasDistribution {
    fn abs_moment(&self, beta: f64) -> f64 {
        ZeroBiasDistribution::abs_moment(self, beta)
    }
}

/// The two-part upper bound on `|δ_{N−k}(g^(k), X, Y)|`, with every
/// intermediate constant kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderBound {
    pub order: usize,
    pub k: usize,
    pub alpha: f64,
    pub p: f64,
    pub c: f64,
    pub r: f64,
    pub u: f64,
    pub v: f64,
    pub variation: f64,
    pub norm: f64,
    pub jump_part: f64,
    pub continuous_part: f64,
}

impl RemainderBound {
    pub fn total(&self) -> f64 {
        self.jump_part + self.continuous_part
    }
}

/// Regularity data of the top derivative `g^(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopRegularity {
    pub alpha: f64,
    pub p: f64,
    /// V(g_d^(N)).
    pub variation: f64,
    /// ‖g_c^(N)‖_{α,p}.
    pub norm: f64,
}

impl TopRegularity {
    /// Regularity of an admissible function whose norm is known exactly.
    pub fn exact(g: &AdmissibleFunction) -> Result<Self> {
        let norm = g.exact_norm().ok_or_else(|| {
            Error::Unsupported(format!("no closed-form norm for {}; supply an estimate", g.label()))
        })?;
        Ok(Self {
            alpha: g.alpha(),
            p: g.p(),
            variation: g.total_variation(),
            norm,
        })
    }
}

/// `V(c m^(N−k+α) + r m^(N−k)) + ‖g_c‖(u m^(N−k+α) + v m^(N−k+α+p))` with
/// `m = m_{|Y|}`, `u = (1 + (1+2^p) E|X|^p) Γ(α+1)`, `v = 2^p Γ(α+p+1)`.
pub fn remainder_bound<Y: AbsMoments + ?Sized>(
    top: &TopRegularity,
    x_abs_p: f64,
    conc: &ConcentrationConstants,
    y: &Y,
    order: usize,
    k: usize,
) -> Result<RemainderBound> {
    if k > order {
        return Err(Error::Order {
            requested: k,
            available: order,
        });
    }
    let (alpha, p) = (top.alpha, top.p);
    let s = (order - k) as f64;
    let needed = s + alpha + p;
    if let Some(limit) = y.moment_limit() {
        if needed > limit + 1e-12 {
            return Err(Error::Moments {
                summand: 0,
                required: needed,
                available: limit,
            });
        }
    }
    let u = (1.0 + (1.0 + 2f64.powf(p)) * x_abs_p) * gamma(alpha + 1.0);
    let v = 2f64.powf(p) * gamma(alpha + p + 1.0);
    let m_a = y.abs_normalized(s + alpha);
    let m_0 = y.abs_normalized(s);
    let m_ap = y.abs_normalized(s + alpha + p);
    Ok(RemainderBound {
        order,
        k,
        alpha,
        p,
        c: conc.c,
        r: conc.r,
        u,
        v,
        variation: top.variation,
        norm: top.norm,
        jump_part: top.variation * (conc.c * m_a + conc.r * m_0),
        continuous_part: if top.norm == 0.0 { 0.0 } else { top.norm * (u * m_a + v * m_ap) },
    })
}

/// `Σ_{d≥0} Σ_{|J|≤N} m_{|Y|}^(J) · bound(δ_{N−|J|}(g^(|J|), X, Y))`.
pub fn reverse_remainder_bound<Y: AbsMoments + ?Sized>(
    top: &TopRegularity,
    x_abs_p: f64,
    conc: &ConcentrationConstants,
    y: &Y,
    order: usize,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    acc.add(remainder_bound(top, x_abs_p, conc, y, order, 0)?.total());
    for j in compositions_up_to(order) {
        let weight: f64 = j.parts().iter().map(|&q| y.abs_normalized(q as f64)).product();
        acc.add(weight * remainder_bound(top, x_abs_p, conc, y, order, j.size())?.total());
    }
    Ok(acc.value())
}

/// A remainder computed exactly or by Monte Carlo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderValue {
    pub value: f64,
    pub std_error: f64,
    pub exact: bool,
}

/// E[g(X + Y)] for independent laws, one of which must be discrete.
pub fn expect_sum<F: Fn(f64) -> f64>(g: F, x: &Law, y: &Law, breaks: &[f64]) -> Result<f64> {
    let quad = Quadrature::default();
    let (discrete, other) = if x.is_discrete() {
        (x, y)
    } else if y.is_discrete() {
        (y, x)
    } else {
        return Err(Error::Unsupported(
            "exact expectation of X + Y needs one discrete law; use the Monte Carlo variant".into(),
        ));
    };
    let pairs = discrete.atoms().len() * other.atoms().len().max(1);
    if other.is_discrete() && pairs > ENUMERATION_CAP {
        return Err(Error::Capacity(format!(
            "{pairs} atom pairs exceed the enumeration cap {ENUMERATION_CAP}; use the Monte Carlo variant"
        )));
    }
    let mut acc = CompensatedSum::new();
    for a in discrete.atoms() {
        let shifted: Vec<f64> = breaks.iter().map(|k| k - a.x).collect();
        acc.add(a.w * other.expect(|t| g(a.x + t), &quad, &shifted)?);
    }
    Ok(acc.value())
}

fn normalized_moment(law: &Law, j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        law.moment(j) / factorial(j)
    }
}

/// `δ_{N−k}(f^(k), X, Y) = E f^(k)(X+Y) − Σ_{j ≤ N−k} m_Y^(j) E f^(k+j)(X)`,
/// exact when one of the laws is discrete.
pub fn taylor_remainder(f: &AdmissibleFunction, x: &Law, y: &Law, order: usize, k: usize) -> Result<RemainderValue> {
    if k > order {
        return Err(Error::Order {
            requested: k,
            available: order,
        });
    }
    if order > f.order() {
        return Err(Error::Order {
            requested: order,
            available: f.order(),
        });
    }
    let quad = Quadrature::default();
    let breaks = f.jump_locations();
    let mut acc = CompensatedSum::new();
    acc.add(expect_sum(|t| f.derivative_unchecked(k, t), x, y, &breaks)?);
    for j in 0..=order - k {
        let ex = x.expect(|t| f.derivative_unchecked(k + j, t), &quad, &breaks)?;
        acc.add(-normalized_moment(y, j) * ex);
    }
    Ok(RemainderValue {
        value: acc.value(),
        std_error: 0.0,
        exact: true,
    })
}

/// Monte Carlo `δ_{N−k}` with independent streams for `X` and `Y`.
pub fn taylor_remainder_mc(
    f: &AdmissibleFunction,
    x: &Law,
    y: &Law,
    order: usize,
    k: usize,
    count: usize,
    seed_x: u64,
    seed_y: u64,
) -> Result<RemainderValue> {
    if seed_x == seed_y {
        return Err(Error::Contract(
            "X and Y must be drawn from independent streams; got the same seed".into(),
        ));
    }
    if k > order || order > f.order() {
        return Err(Error::Order {
            requested: order.max(k),
            available: f.order(),
        });
    }
    if count < 2 {
        return Err(domain("Monte Carlo needs at least 2 samples"));
    }
    let (sx, sy) = (LawSampler::new(x), LawSampler::new(y));
    let (mut rx, mut ry) = (rng_from_seed(seed_x), rng_from_seed(seed_y));
    let weights: Vec<f64> = (0..=order - k).map(|j| normalized_moment(y, j)).collect();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for n in 1..=count {
        let (a, b) = (sx.sample(&mut rx), sy.sample(&mut ry));
        let mut v = f.derivative_unchecked(k, a + b);
        for (j, w) in weights.iter().enumerate() {
            v -= w * f.derivative_unchecked(k + j, a);
        }
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (count - 1) as f64;
    Ok(RemainderValue {
        value: mean,
        std_error: (var / count as f64).sqrt(),
        exact: false,
    })
}

/// ε_N together with both sides of the reverse Taylor reassembly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverseTaylor {
    pub epsilon: f64,
    /// E f(X).
    pub lhs: f64,
    /// Σ_{d≥0} (−1)^d Σ_{|J|≤N} m_Y^(J) E f^(|J|)(X+Y).
    pub expansion: f64,
    /// `lhs − expansion − epsilon`.
    pub residual: f64,
}

/// Signed weight `Σ_{d ≥ 0} (−1)^d Σ_{|J| = s} m_Y^(J)` for each `s ≤ N`.
pub fn reverse_weights(m: impl Fn(usize) -> f64, order: usize) -> Vec<f64> {
    let mut w = vec![0.0; order + 1];
    w[0] = 1.0;
    for j in compositions_up_to(order) {
        let sign = if j.len() % 2 == 0 { 1.0 } else { -1.0 };
        w[j.size()] += sign * j.parts().iter().map(|&q| m(q)).product::<f64>();
    }
    w
}

/// `ε_N(f, X, Y) = −Σ_{d≥0} (−1)^d Σ_{|J|≤N} m_Y^(J) δ_{N−|J|}(f^(|J|), X, Y)`,
/// with the reassembly `E f(X) = Σ (−1)^d m_Y^(J) E f^(|J|)(X+Y) + ε_N` evaluated
/// on independent sums.
pub fn reverse_taylor_remainder(f: &AdmissibleFunction, x: &Law, y: &Law, order: usize) -> Result<ReverseTaylor> {
    let weights = reverse_weights(|q| normalized_moment(y, q), order);
    let breaks = f.jump_locations();
    let quad = Quadrature::default();
    let mut eps = CompensatedSum::new();
    let mut expansion = CompensatedSum::new();
    for (s, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let delta = taylor_remainder(f, x, y, order, s)?.value;
        eps.add(-w * delta);
        expansion.add(w * expect_sum(|t| f.derivative_unchecked(s, t), x, y, &breaks)?);
    }
    let lhs = x.expect(|t| f.value(t), &quad, &breaks)?;
    let (epsilon, expansion) = (eps.value(), expansion.value());
    Ok(ReverseTaylor {
        epsilon,
        lhs,
        expansion,
        residual: lhs - expansion - epsilon,
    })
}

/// Seeds for a remainder experiment, split from one root.
pub fn remainder_seeds(root: u64, label: &str) -> (u64, u64) {
    (derive_seed(root, label, 0), derive_seed(root, label, 1))
}

/// Re-exported for callers that enumerate compositions alongside bounds.
pub fn composition_abs_weight<Y: AbsMoments + ?Sized>(y: &Y, j: &Composition) -> f64 {
    j.parts().iter().map(|&q| y.abs_normalized(q as f64)).product()
}
