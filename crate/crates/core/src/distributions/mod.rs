//! Summand laws: exact moments, symmetrizations, zero-bias companions and
//! seeded samplers.

mod law;
mod sampling;

pub use law::{Atom, Law, Piece};
pub use sampling::{
    derive_seed, rng_from_seed, sample_coupling, sample_distribution, sample_zero_bias,
    CouplingDraw, CouplingMode, CouplingSampler, LawSampler,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{factorial, gamma, CompensatedSum, Poly, Quadrature};

/// Default number of raw moments kept in a [`MomentTable`].
pub const K_MAX: usize = 12;

/// Declarative description of a summand law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// Value `1 − p` with probability `p`, value `−p` otherwise.
    TwoPoint { p: f64 },
    /// Uniform on `[−half_width, half_width]`.
    UniformSymmetric { half_width: f64 },
    /// Atoms as `(location, weight)` pairs.
    FiniteDiscrete { atoms: Vec<(f64, f64)> },
    Scaled {
        base: Box<DistributionSpec>,
        factor: f64,
    },
}

impl DistributionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DistributionSpec::TwoPoint { .. } => "two-point",
            DistributionSpec::UniformSymmetric { .. } => "uniform-symmetric",
            DistributionSpec::FiniteDiscrete { .. } => "finite-discrete",
            DistributionSpec::Scaled { .. } => "scaled",
        }
    }
}

/// A mean-zero law with finite variance and bounded support.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanZeroDistribution {
    spec: DistributionSpec,
    law: Law,
    variance: f64,
    moment_limit: Option<f64>,
}

impl MeanZeroDistribution {
    pub fn two_point(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(domain(format!("two-point parameter must lie in (0, 1), got {p}")));
        }
        let q = 1.0 - p;
        let law = Law::discrete([Atom { x: q, w: p }, Atom { x: -p, w: q }]);
        Ok(Self::assemble(DistributionSpec::TwoPoint { p }, law))
    }

    pub fn uniform_symmetric(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(domain(format!("half width must be positive, got {half_width}")));
        }
        let law = Law::continuous(vec![Piece {
            lo: -half_width,
            hi: half_width,
            density: Poly::constant(0.5 / half_width),
        }]);
        Ok(Self::assemble(DistributionSpec::UniformSymmetric { half_width }, law))
    }

    pub fn finite_discrete(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(domain("finite-discrete law needs at least one atom"));
        }
        if let Some(&(x, w)) = atoms.iter().find(|(x, w)| !(*w > 0.0) || !x.is_finite() || !w.is_finite()) {
            return Err(domain(format!("atom ({x}, {w}) must have finite location and positive weight")));
        }
        let total: f64 = atoms.iter().map(|a| a.1).collect::<CompensatedSum>().value();
        if (total - 1.0).abs() > 1e-12 {
            return Err(domain(format!("atom weights sum to {total}, expected 1")));
        }
        let scale = atoms.iter().map(|a| a.0.abs()).fold(0.0, f64::max);
        let mean: f64 = atoms.iter().map(|a| a.0 * a.1).collect::<CompensatedSum>().value();
        if mean.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(domain(format!("atoms have mean {mean:e}, expected 0")));
        }
        let law = Law::discrete(atoms.iter().map(|&(x, w)| Atom { x, w }));
        let dist = Self::assemble(
            DistributionSpec::FiniteDiscrete {
                atoms: atoms.to_vec(),
            },
            law,
        );
        if !(dist.variance > 0.0) {
            return Err(domain("finite-discrete law has zero variance"));
        }
        Ok(dist)
    }

    /// Law of `factor · self`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let law = self.law.scaled(factor)?;
        let spec = DistributionSpec::Scaled {
            base: Box::new(self.spec.clone()),
            factor,
        };
        let mut out = Self::assemble(spec, law);
        out.moment_limit = self.moment_limit;
        Ok(out)
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::TwoPoint { p } => Self::two_point(*p),
            DistributionSpec::UniformSymmetric { half_width } => Self::uniform_symmetric(*half_width),
            DistributionSpec::FiniteDiscrete { atoms } => Self::finite_discrete(atoms),
            DistributionSpec::Scaled { base, factor } => Self::from_spec(base)?.scaled(*factor),
        }
    }

    fn assemble(spec: DistributionSpec, law: Law) -> Self {
        let variance = law.moment(2);
        Self {
            spec,
            law,
            variance,
            moment_limit: None,
        }
    }

    /// Declares that only absolute moments of order ≤ `limit` may be used.
    /// Bounded laws have all moments; the limit lets a configuration model
    /// a summand whose higher moments are not to be relied upon.
    pub fn with_moment_limit(mut self, limit: f64) -> Self {
        self.moment_limit = Some(limit);
        self
    }

    pub fn moment_limit(&self) -> Option<f64> {
        self.moment_limit
    }

    /// Fails with [`Error::Moments`] when `order` exceeds the declared limit.
    pub fn require_moments(&self, order: f64, summand: usize) -> Result<()> {
        match self.moment_limit {
            Some(limit) if order > limit + 1e-12 => Err(Error::Moments {
                summand,
                required: order,
                available: limit,
            }),
            _ => Ok(()),
        }
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn kind(&self) -> &'static str {
        self.spec.kind()
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn support(&self) -> (f64, f64) {
        self.law.support()
    }

    pub fn is_discrete(&self) -> bool {
        self.law.is_discrete()
    }

    /// E[X^k].
    pub fn moment(&self, k: usize) -> f64 {
        match k {
            0 => 1.0,
            1 => 0.0,
            _ => self.law.moment(k),
        }
    }

    /// m^(k) = E[X^k] / k!.
    pub fn normalized_moment(&self, k: usize) -> f64 {
        self.moment(k) / factorial(k)
    }

    /// E|X|^β.
    pub fn abs_moment(&self, beta: f64) -> f64 {
        self.law.abs_moment(beta)
    }

    /// m_{|X|}^(β) = E|X|^β / Γ(β + 1).
    pub fn abs_normalized_moment(&self, beta: f64) -> f64 {
        self.abs_moment(beta) / gamma(beta + 1.0)
    }

    /// True when the law is invariant under x ↦ −x.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.sigma();
        (3..=K_MAX)
            .step_by(2)
            .all(|k| self.moment(k).abs() <= 1e-13 * scale.powi(k as i32))
    }

    pub fn zero_bias(&self) -> Result<ZeroBiasDistribution> {
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::Unsupported(format!(
                "zero-bias construction needs bounded support, {} law is unbounded",
                self.kind()
            )));
        }
        Ok(ZeroBiasDistribution {
            parent_moments: (0..=K_MAX + 2).map(|k| self.moment(k)).collect(),
            variance: self.variance,
            law: self.law.zero_bias(self.variance),
        })
    }

    /// E[(X*)^k] = E[X^{k+2}] / (σ²(k + 1)), from the parent's moments.
    pub fn zero_bias_moment(&self, k: usize) -> f64 {
        self.moment(k + 2) / (self.variance * (k + 1) as f64)
    }

    /// m_{X*}^(k) = E[(X*)^k] / k!.
    pub fn zero_bias_normalized_moment(&self, k: usize) -> f64 {
        self.zero_bias_moment(k) / factorial(k)
    }

    /// E|X − X̃|^{α+2} for an independent copy X̃.
    pub fn symmetrized_abs_moment(&self, alpha: f64) -> Result<f64> {
        self.symmetrized_abs_power(alpha + 2.0)
    }

    /// E|X − X̃|^γ. Atoms of the copy are enumerated; pieces of the copy are
    /// integrated against the closed-form E|X − s|^γ.
    pub fn symmetrized_abs_power(&self, gamma_exp: f64) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        for a in self.law.atoms() {
            acc.add(a.w * self.law.shifted_abs_moment(a.x, gamma_exp));
        }
        if !self.law.pieces().is_empty() {
            let quad = Quadrature::default();
            let breaks = self.law.breakpoints();
            for p in self.law.pieces() {
                let v = quad.integrate_with_breaks(
                    |s| p.density.eval(s) * self.law.shifted_abs_moment(s, gamma_exp),
                    p.lo,
                    p.hi,
                    &breaks,
                )?;
                acc.add(v);
            }
        }
        Ok(acc.value())
    }

    pub fn moment_table(&self) -> MomentTable {
        MomentTable::new(self, K_MAX)
    }
}

/// `n` independent copies of `base / √n`.
pub fn iid_family(base: &MeanZeroDistribution, n: usize) -> Result<Vec<MeanZeroDistribution>> {
    if n == 0 {
        return Err(domain("family size must be at least 1"));
    }
    let scaled = base.scaled(1.0 / (n as f64).sqrt())?;
    Ok(vec![scaled; n])
}

/// Total variance σ_W² of a list of independent summands.
pub fn total_variance(summands: &[MeanZeroDistribution]) -> f64 {
    summands.iter().map(|d| d.variance()).collect::<CompensatedSum>().value()
}

/// Raw, normalized, absolute and symmetrized moments of one summand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    /// E[X^k] for k = 0..=k_max.
    pub raw: Vec<f64>,
    /// m^(k) = E[X^k] / k!.
    pub normalized: Vec<f64>,
    /// m_{|X|}^(k) = E|X|^k / Γ(k + 1) at integer orders.
    pub abs_normalized: Vec<f64>,
    /// (α, E|X^s|^{α+2}) for α ∈ {0.5, 1}.
    pub symmetrized: Vec<(f64, f64)>,
}

impl MomentTable {
    pub fn new(dist: &MeanZeroDistribution, k_max: usize) -> Self {
        let raw: Vec<f64> = (0..=k_max).map(|k| dist.moment(k)).collect();
        let normalized = raw.iter().enumerate().map(|(k, m)| m / factorial(k)).collect();
        let abs_normalized = (0..=k_max).map(|k| dist.abs_normalized_moment(k as f64)).collect();
        let symmetrized = [0.5, 1.0]
            .iter()
            .filter_map(|&a| dist.symmetrized_abs_moment(a).ok().map(|v| (a, v)))
            .collect();
        Self {
            raw,
            normalized,
            abs_normalized,
            symmetrized,
        }
    }
}

/// The zero-bias companion X* of a mean-zero law.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroBiasDistribution {
    parent_moments: Vec<f64>,
    variance: f64,
    law: Law,
}

impl ZeroBiasDistribution {
    pub fn law(&self) -> &Law {
        &self.law
    }

    /// p*(x) = E[X·1{X > x}] / σ².
    pub fn density(&self, x: f64) -> f64 {
        self.law
            .pieces()
            .iter()
            .find(|p| p.lo <= x && x < p.hi)
            .map_or(0.0, |p| p.density.eval(x))
    }

    pub fn support(&self) -> (f64, f64) {
        self.law.support()
    }

    /// E[(X*)^k] from the parent moment identity.
    pub fn moment(&self, k: usize) -> f64 {
        match self.parent_moments.get(k + 2) {
            Some(m) => m / (self.variance * (k + 1) as f64),
            None => self.law.moment(k),
        }
    }

    /// E[(X*)^k] by integrating the density.
    pub fn moment_by_density(&self, k: usize) -> Result<f64> {
        self.law
            .expect(|x| x.powi(k as i32), &Quadrature::default(), &[])
    }

    /// E|X*|^β.
    pub fn abs_moment(&self, beta: f64) -> f64 {
        self.law.abs_moment(beta)
    }

    pub fn sampler(&self) -> LawSampler {
        LawSampler::new(&self.law)
    }
}
