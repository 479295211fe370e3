use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{abs_pow, compensated_sum, CompensatedSum, Poly, Quadrature};

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// A polynomial density on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub density: Poly,
}

impl Piece {
    pub fn mass(&self) -> f64 {
        self.density.integrate(self.lo, self.hi)
    }

    /// ∫ x^k p(x) dx over the piece.
    fn moment(&self, k: usize) -> f64 {
        let mut q = self.density.clone();
        for _ in 0..k {
            q = q.times_x();
        }
        q.integrate(self.lo, self.hi)
    }

    /// ∫ |x − s|^β p(x) dx over the piece, in closed form.
    fn shifted_abs_moment(&self, s: f64, beta: f64) -> f64 {
        // u = x − s, density in u is p(u + s) on [lo − s, hi − s].
        let q = self.density.shifted(s);
        abs_power_integral(&q, self.lo - s, self.hi - s, beta)
    }

    /// ∫_{a}^{b} p over the intersection with the piece.
    fn mass_between(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.lo);
        let hi = b.min(self.hi);
        if hi <= lo {
            0.0
        } else {
            self.density.integrate(lo, hi)
        }
    }
}

/// ∫_a^b |u|^β q(u) du for a polynomial `q`.
fn abs_power_integral(q: &Poly, a: f64, b: f64, beta: f64) -> f64 {
    let pos = |lo: f64, hi: f64, poly: &Poly| -> f64 {
        // lo, hi ≥ 0
        poly.coeffs()
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let e = beta + j as f64 + 1.0;
                c * (hi.powf(e) - lo.powf(e)) / e
            })
            .sum()
    };
    let mut total = 0.0;
    if b > 0.0 {
        total += pos(a.max(0.0), b, q);
    }
    if a < 0.0 {
        // u = −v on the negative half
        let reflected = q.rescaled(-1.0);
        total += pos((-b).max(0.0), -a, &reflected);
    }
    total
}

/// A finite mixture of atoms and polynomial-density pieces.
///
/// Every law the toolkit manipulates (summands, their zero-bias companions,
/// sums by convolution) fits this shape, so moments and expectations are
/// available in closed form or by panel quadrature that respects the pieces.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Law {
    atoms: Vec<Atom>,
    pieces: Vec<Piece>,
}

impl Law {
    /// Discrete law; atoms are sorted and coincident locations merged.
    pub fn discrete(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.x == a.x => last.w += a.w,
                _ => merged.push(a),
            }
        }
        Self {
            atoms: merged,
            pieces: Vec::new(),
        }
    }

    pub fn continuous(mut pieces: Vec<Piece>) -> Self {
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Self {
            atoms: Vec::new(),
            pieces,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_discrete(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .map(|a| a.w)
                .chain(self.pieces.iter().map(Piece::mass)),
        )
    }

    pub fn support(&self) -> (f64, f64) {
        let lo = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().map(|p| p.lo))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().map(|p| p.hi))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Locations where the law is not smooth: atoms and piece ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.x)
            .chain(self.pieces.iter().flat_map(|p| [p.lo, p.hi]))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// E[X^k], exact.
    pub fn moment(&self, k: usize) -> f64 {
        let mut s = CompensatedSum::new();
        for a in &self.atoms {
            s.add(a.w * a.x.powi(k as i32));
        }
        for p in &self.pieces {
            s.add(p.moment(k));
        }
        s.value()
    }

    /// E[|X|^β], exact.
    pub fn abs_moment(&self, beta: f64) -> f64 {
        self.shifted_abs_moment(0.0, beta)
    }

    /// E[|X − s|^β], exact.
    pub fn shifted_abs_moment(&self, s: f64, beta: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            acc.add(a.w * abs_pow(a.x - s, beta));
        }
        for p in &self.pieces {
            acc.add(p.shifted_abs_moment(s, beta));
        }
        acc.value()
    }

    /// P(a ≤ X ≤ b), exact.
    pub fn prob_between(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return 0.0;
        }
        let mut s = CompensatedSum::new();
        for atom in &self.atoms {
            if atom.x >= a && atom.x <= b {
                s.add(atom.w);
            }
        }
        for p in &self.pieces {
            s.add(p.mass_between(a, b));
        }
        s.value()
    }

    /// E[f(X)]: exact enumeration over atoms plus panel quadrature over the
    /// pieces, split at `breaks` (singular points of `f`).
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F, quad: &Quadrature, breaks: &[f64]) -> Result<f64> {
        let mut s = CompensatedSum::new();
        for a in &self.atoms {
            s.add(a.w * f(a.x));
        }
        for p in &self.pieces {
            let v = quad.integrate_with_breaks(|x| p.density.eval(x) * f(x), p.lo, p.hi, breaks)?;
            s.add(v);
        }
        Ok(s.value())
    }

    /// Law of c·X.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if c == 0.0 || !c.is_finite() {
            return Err(domain(format!("scale factor must be finite and non-zero, got {c}")));
        }
        let atoms = self.atoms.iter().map(|a| Atom { x: c * a.x, w: a.w });
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let (lo, hi) = if c > 0.0 {
                    (c * p.lo, c * p.hi)
                } else {
                    (c * p.hi, c * p.lo)
                };
                Piece {
                    lo,
                    hi,
                    density: p.density.rescaled(c).scale(1.0 / c.abs()),
                }
            })
            .collect::<Vec<_>>();
        let mut law = Law::discrete(atoms);
        law.pieces = pieces;
        law.pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Ok(law)
    }

    /// Law with density x ↦ E[X·1{X > x}] / σ², i.e. the zero-bias law when
    /// X has mean zero and variance σ². Exact: the result is piecewise
    /// polynomial between consecutive breakpoints.
    pub fn zero_bias(&self, variance: f64) -> Self {
        let cuts = self.breakpoints();
        let mut pieces = Vec::new();
        for seg in cuts.windows(2) {
            let (s0, s1) = (seg[0], seg[1]);
            let mut constant = CompensatedSum::new();
            let mut poly = Poly::constant(0.0);
            for a in &self.atoms {
                if a.x >= s1 {
                    constant.add(a.w * a.x);
                }
            }
            for p in &self.pieces {
                let tp = p.density.times_x();
                if p.lo >= s1 {
                    constant.add(tp.integrate(p.lo, p.hi));
                } else if p.lo <= s0 && p.hi >= s1 {
                    // ∫_x^{hi} t p(t) dt = Q(hi) − Q(x)
                    let q = tp.antiderivative();
                    constant.add(q.eval(p.hi));
                    poly = poly.add(&q.scale(-1.0));
                }
            }
            let density = poly
                .add(&Poly::constant(constant.value()))
                .scale(1.0 / variance);
            pieces.push(Piece {
                lo: s0,
                hi: s1,
                density,
            });
        }
        Law::continuous(pieces)
    }

    /// Exact law of X + Y for two discrete laws; locations closer than
    /// `merge_tol` are merged, keeping the lower representative.
    pub fn convolve_discrete(&self, other: &Law, merge_tol: f64) -> Result<Law> {
        if !self.is_discrete() || !other.is_discrete() {
            return Err(crate::Error::Unsupported(
                "exact convolution requires discrete laws".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.atoms.len() * other.atoms.len());
        for a in &self.atoms {
            for b in &other.atoms {
                out.push(Atom {
                    x: a.x + b.x,
                    w: a.w * b.w,
                });
            }
        }
        out.sort_by(|a, b| a.x.total_cmp(&b.x));
        Ok(Law {
            atoms: merge_close(out, merge_tol),
            pieces: Vec::new(),
        })
    }
}

/// Merges sorted atoms whose locations lie within `tol` of the group's first
/// location.
pub(crate) fn merge_close(sorted: Vec<Atom>, tol: f64) -> Vec<Atom> {
    let mut merged: Vec<(Atom, CompensatedSum)> = Vec::with_capacity(sorted.len());
    for a in sorted {
        match merged.last_mut() {
            Some((head, acc)) if a.x - head.x <= tol => acc.add(a.w),
            _ => {
                let mut acc = CompensatedSum::new();
                acc.add(a.w);
                merged.push((a, acc));
            }
        }
    }
    merged
        .into_iter()
        .map(|(a, acc)| Atom {
            x: a.x,
            w: acc.value(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(a: f64) -> Law {
        Law::continuous(vec![Piece {
            lo: -a,
            hi: a,
            density: Poly::constant(0.5 / a),
        }])
    }

    #[test]
    fn uniform_moments_closed_form() {
        let u = uniform(2.0);
        assert!((u.moment(2) - 4.0 / 3.0).abs() < 1e-15);
        assert!(u.moment(3).abs() < 1e-15);
        // E|U|^β = a^β / (β + 1)
        assert!((u.abs_moment(0.5) - 2f64.powf(0.5) / 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_bias_of_uniform_is_parabolic() {
        let a = 1.5;
        let zb = uniform(a).zero_bias(a * a / 3.0);
        assert!((zb.total_mass() - 1.0).abs() < 1e-14);
        for &x in &[-1.2, 0.0, 0.4] {
            let expected = 3.0 * (a * a - x * x) / (4.0 * a.powi(3));
            let p = zb.pieces().iter().find(|p| p.lo <= x && x <= p.hi).unwrap();
            assert!((p.density.eval(x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn scaling_negates_and_stretches() {
        let law = Law::discrete([Atom { x: -1.0, w: 0.25 }, Atom { x: 3.0, w: 0.75 }]);
        let s = law.scaled(-0.5).unwrap();
        assert_eq!(s.atoms()[0], Atom { x: -1.5, w: 0.75 });
        assert!((s.moment(3) - (-0.125) * law.moment(3)).abs() < 1e-14);
        assert!(law.scaled(0.0).is_err());
    }

    #[test]
    fn prob_between_is_closed_on_both_ends() {
        let law = Law::discrete([Atom { x: 0.0, w: 0.5 }, Atom { x: 1.0, w: 0.5 }]);
        assert_eq!(law.prob_between(0.0, 1.0), 1.0);
        assert_eq!(law.prob_between(0.5, 0.5), 0.0);
    }
}
