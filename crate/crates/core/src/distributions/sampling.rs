use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Law, MeanZeroDistribution};
use crate::error::{domain, Result};
use crate::numerics::Poly;

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a named task: `splitmix64(root ^ splitmix64(fnv1a(label) ^ index))`.
///
/// The derivation depends only on `(root, label, index)`, never on thread
/// scheduling, so parallel sweeps reproduce bit-for-bit.
pub fn derive_seed(root: u64, label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(root ^ splitmix64(h ^ index))
}

#[derive(Debug, Clone)]
enum Component {
    Atom(f64),
    Piece { lo: f64, hi: f64, cdf: Poly, mass: f64 },
}

/// Inverse-CDF sampler over a [`Law`].
#[derive(Debug, Clone)]
pub struct LawSampler {
    cumulative: Vec<f64>,
    components: Vec<Component>,
}

impl LawSampler {
    pub fn new(law: &Law) -> Self {
        let mut items: Vec<(f64, f64, Component)> = Vec::new();
        for a in law.atoms() {
            items.push((a.x, a.w, Component::Atom(a.x)));
        }
        for p in law.pieces() {
            let anti = p.density.antiderivative();
            let cdf = anti.add(&Poly::constant(-anti.eval(p.lo)));
            let mass = p.mass();
            items.push((
                p.lo,
                mass,
                Component::Piece {
                    lo: p.lo,
                    hi: p.hi,
                    cdf,
                    mass,
                },
            ));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = items.iter().map(|i| i.1).sum();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(items.len());
        let mut components = Vec::with_capacity(items.len());
        for (_, w, c) in items {
            acc += w / total;
            cumulative.push(acc);
            components.push(c);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            cumulative,
            components,
        }
    }

    /// Generalised inverse distribution function at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let idx = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.components.len() - 1);
        let below = if idx == 0 { 0.0 } else { self.cumulative[idx - 1] };
        match &self.components[idx] {
            Component::Atom(x) => *x,
            Component::Piece { lo, hi, cdf, mass } => {
                let width = self.cumulative[idx] - below;
                let frac = if width > 0.0 { ((u - below) / width).clamp(0.0, 1.0) } else { 0.5 };
                let target = frac * mass;
                invert_monotone(cdf, target, *lo, *hi)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Solves cdf(x) = target on [lo, hi] for a non-decreasing polynomial cdf.
fn invert_monotone(cdf: &Poly, target: f64, lo: f64, hi: f64) -> f64 {
    let density = cdf.derivative();
    let (mut a, mut b) = (lo, hi);
    let mut x = lo + (hi - lo) * 0.5;
    for _ in 0..200 {
        let fx = cdf.eval(x) - target;
        if fx == 0.0 || (b - a) < 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            return x;
        }
        if fx > 0.0 {
            b = x;
        } else {
            a = x;
        }
        let d = density.eval(x);
        let newton = if d > 0.0 { x - fx / d } else { f64::NAN };
        x = if newton.is_finite() && newton >= a && newton <= b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    x
}

/// How the zero-bias draw of the selected summand relates to the summand
/// itself. Both choices keep `X_I*` independent of `W^(I)`, which is all
/// the coupling `W* = W^(I) + X_I*` needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// `X_I*` drawn independently of `X_I`.
    Independent,
    /// `X_I*` and `X_I` share one uniform through their quantile functions.
    Comonotone,
}

/// One draw of the zero-bias coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingDraw {
    pub w: f64,
    pub w_star: f64,
    pub index: usize,
}

/// Samples from a summand law.
pub fn sample_distribution(dist: &MeanZeroDistribution, seed: u64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let sampler = LawSampler::new(dist.law());
    let mut rng = rng_from_seed(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

/// Samples from the zero-bias companion of a summand law.
pub fn sample_zero_bias(dist: &MeanZeroDistribution, seed: u64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let zb = dist.zero_bias()?;
    let sampler = LawSampler::new(zb.law());
    let mut rng = rng_from_seed(seed);
    Ok((0..count).map(|_| sampler.sample(&mut rng)).collect())
}

/// Reusable sampler for `W = ΣX_i` and the coupled `W*`.
#[derive(Debug, Clone)]
pub struct CouplingSampler {
    summands: Vec<LawSampler>,
    zero_bias: Vec<LawSampler>,
    index_cdf: Vec<f64>,
    mode: CouplingMode,
}

impl CouplingSampler {
    pub fn new(summands: &[MeanZeroDistribution], mode: CouplingMode) -> Result<Self> {
        if summands.is_empty() {
            return Err(domain("coupling requires at least one summand"));
        }
        let total: f64 = summands.iter().map(|d| d.variance()).sum();
        let mut acc = 0.0;
        let mut index_cdf: Vec<f64> = summands
            .iter()
            .map(|d| {
                acc += d.variance() / total;
                acc
            })
            .collect();
        *index_cdf.last_mut().unwrap() = 1.0;
        Ok(Self {
            summands: summands.iter().map(|d| LawSampler::new(d.law())).collect(),
            zero_bias: summands
                .iter()
                .map(|d| d.zero_bias().map(|z| LawSampler::new(z.law())))
                .collect::<Result<_>>()?,
            index_cdf,
            mode,
        })
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    /// W alone.
    pub fn draw_sum<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.summands.iter().map(|s| s.sample(rng)).sum()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> CouplingDraw {
        let pick: f64 = rng.random();
        let index = self
            .index_cdf
            .partition_point(|&c| c <= pick)
            .min(self.summands.len() - 1);
        let mut w = 0.0;
        let mut rest = 0.0;
        let mut star = 0.0;
        for (i, s) in self.summands.iter().enumerate() {
            if i == index {
                let u: f64 = rng.random();
                let x = s.quantile(u);
                w += x;
                star = match self.mode {
                    CouplingMode::Independent => self.zero_bias[i].sample(rng),
                    CouplingMode::Comonotone => self.zero_bias[i].quantile(u),
                };
            } else {
                let x = s.sample(rng);
                w += x;
                rest += x;
            }
        }
        CouplingDraw {
            w,
            w_star: rest + star,
            index,
        }
    }
}

/// Draws `(W, W*)` pairs from the zero-bias coupling.
pub fn sample_coupling(
    summands: &[MeanZeroDistribution],
    mode: CouplingMode,
    seed: u64,
    count: usize,
) -> Result<Vec<CouplingDraw>> {
    if count == 0 {
        return Err(domain("sample count must be at least 1"));
    }
    let sampler = CouplingSampler::new(summands, mode)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}
