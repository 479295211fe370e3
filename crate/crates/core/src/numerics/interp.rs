use std::f64::consts::PI;

use crate::error::Result;

const NODES: usize = 20;

#[derive(Debug, Clone)]
struct Panel {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

/// Piecewise barycentric Chebyshev interpolant.
///
/// Panels never straddle the supplied edges, so a function that is smooth
/// between its singular points is reproduced to near machine precision.
#[derive(Debug, Clone)]
pub struct PiecewiseChebyshev {
    panels: Vec<Panel>,
}

fn cheb_nodes() -> (Vec<f64>, Vec<f64>) {
    let nodes = (0..NODES)
        .map(|j| ((2 * j + 1) as f64 * PI / (2 * NODES) as f64).cos())
        .collect();
    let weights = (0..NODES)
        .map(|j| {
            let s = ((2 * j + 1) as f64 * PI / (2 * NODES) as f64).sin();
            if j % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect();
    (nodes, weights)
}

fn barycentric(nodes: &[f64], weights: &[f64], values: &[f64], t: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &wj), &fj) in nodes.iter().zip(weights).zip(values) {
        let d = t - xj;
        if d == 0.0 {
            return fj;
        }
        let c = wj / d;
        num += c * fj;
        den += c;
    }
    num / den
}

impl PiecewiseChebyshev {
    /// Interpolates `f` on `[edges[0], edges[last]]`. Panels are at most
    /// `max_width` wide and are bisected until two off-node probes agree with
    /// `f` to `tol · max(1, |f|)`.
    pub fn build<F>(f: F, edges: &[f64], max_width: f64, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let (nodes, weights) = cheb_nodes_cached();
        let mut queue = Vec::new();
        for w in edges.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
            for k in 0..pieces {
                let lo = a + (b - a) * k as f64 / pieces as f64;
                let hi = if k + 1 == pieces {
                    b
                } else {
                    a + (b - a) * (k + 1) as f64 / pieces as f64
                };
                queue.push((lo, hi));
            }
        }
        queue.reverse();

        // Noisy inputs never meet the tolerance; stop bisecting after five levels.
        let min_half = max_width / 64.0;
        let mut panels = Vec::new();
        while let Some((lo, hi)) = queue.pop() {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            let values = nodes
                .iter()
                .map(|&t| f(c + h * t))
                .collect::<Result<Vec<f64>>>()?;
            let mut worst = 0.0f64;
            for &t in &[0.3137, -0.7219] {
                let exact = f(c + h * t)?;
                let approx = barycentric(nodes, weights, &values, t);
                worst = worst.max((exact - approx).abs() / exact.abs().max(1.0));
            }
            if worst > tol && h > min_half {
                // Bisect; push right first so panels stay ordered.
                queue.push((c, hi));
                queue.push((lo, c));
            } else {
                panels.push(Panel { lo, hi, values });
            }
        }
        Ok(Self { panels })
    }

    pub fn domain(&self) -> (f64, f64) {
        (
            self.panels.first().map_or(0.0, |p| p.lo),
            self.panels.last().map_or(0.0, |p| p.hi),
        )
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x >= lo && x <= hi
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Value at `x`; callers must stay inside [`domain`](Self::domain).
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self
            .panels
            .partition_point(|p| p.hi < x)
            .min(self.panels.len() - 1);
        let p = &self.panels[idx];
        let (nodes, weights) = cheb_nodes_cached();
        let t = (2.0 * x - p.lo - p.hi) / (p.hi - p.lo);
        barycentric(nodes, weights, &p.values, t)
    }
}

fn cheb_nodes_cached() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static CACHE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (n, w) = CACHE.get_or_init(cheb_nodes);
    (n, w)
}
