//! The recursive correction terms `C_N(h)` and the matching bound on the
//! remainder `e_N(h) = E[h(W)] − C_N(h)`.
//!
//! `C_N(h) = Φ_{σ_W}(h) + Σ_i σ_i² Σ_{|J|≤N} (−1)^{d−1} m_i^(J°) (m_i*^(J†) − m_i^(J†))
//! · C_{N−|J|}(f_h^(|J|+1))`. The nested argument depends on `J` only through
//! `|J|`, so every level collapses to at most `N` distinct sub-problems.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::admissible::{norm_estimate, AdmissibleFunction};
use crate::bounds::{
    concentration_leave_one_out_constants, remainder_bound, reverse_remainder_bound, ConcentrationConstants,
    TopRegularity,
};
use crate::distributions::{total_variance, MeanZeroDistribution, ZeroBiasDistribution};
use crate::error::{domain, Error, Result};
use crate::numerics::{binomial, CompensatedSum};
use crate::stein::{
    normal_expectation_of_derivative, normal_expectation_with, reduced_normal_expectation, SolveOptions,
    SteinSolution,
};

/// An ordered tuple of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(domain("a composition needs at least one part, all positive"));
        }
        Ok(Self(parts))
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    /// Number of parts `d`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|J|`.
    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    /// The last part `J†`.
    pub fn last(&self) -> usize {
        *self.0.last().expect("compositions are non-empty")
    }

    /// All parts but the last, `J°` (possibly empty).
    pub fn prefix(&self) -> &[usize] {
        &self.0[..self.0.len() - 1]
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "({})", inner.join(","))
    }
}

/// Every composition of `1..=n`, ordered by size and then lexicographically.
pub fn compositions_up_to(n: usize) -> Vec<Composition> {
    fn fill(rest: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(current.clone());
            return;
        }
        for first in 1..=rest {
            current.push(first);
            fill(rest - first, current, out);
            current.pop();
        }
    }
    let mut all = Vec::with_capacity((1usize << n).saturating_sub(1));
    for size in 1..=n {
        let mut of_size = Vec::new();
        fill(size, &mut Vec::new(), &mut of_size);
        of_size.sort();
        all.extend(of_size.into_iter().map(Composition));
    }
    all
}

/// One `(i, J)` entry of the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerTerm {
    pub summand: usize,
    pub composition: Composition,
    /// `σ_i² (−1)^{d−1} m_i^(J°)(m_i*^(J†) − m_i^(J†))`.
    pub coefficient: f64,
    /// Label of `f_h^(|J|+1)`.
    pub nested: String,
    /// `C_{N−|J|}(f_h^(|J|+1))`.
    pub nested_value: f64,
    pub contribution: f64,
}

/// One evaluation of `C_n(g)` during the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub depth: usize,
    pub function: String,
    pub order: usize,
    pub value: f64,
    pub memo_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionLedger {
    pub function: String,
    pub order: usize,
    pub sigma_w: f64,
    /// `C_0(h), …, C_N(h)`.
    pub c_values: Vec<f64>,
    pub terms: Vec<LedgerTerm>,
    pub trace: Vec<TraceEntry>,
    /// `C_0 + Σ contributions`, accumulated from the ledger itself.
    pub reassembled: f64,
}

impl ExpansionLedger {
    /// `C_N(h)`.
    pub fn value(&self) -> f64 {
        self.c_values[self.order]
    }

    pub fn reassembly_gap(&self) -> f64 {
        (self.reassembled - self.value()).abs()
    }
}

/// Norm and variation of one top derivative used by the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub function: String,
    pub order: usize,
    pub variation: f64,
    pub norm: f64,
    /// True when the norm is a grid lower bound rather than exact.
    pub heuristic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub order: usize,
    pub alpha: f64,
    pub p: f64,
    /// Σ_i σ_i² Σ_J |coefficient| · bound(e_{N−|J|}).
    pub recursive: f64,
    /// Σ_i σ_i² Σ_k bound(ε_{N−k}) · |m_i*^(k)|.
    pub epsilon: f64,
    /// Σ_i σ_i² bound(δ_N).
    pub delta: f64,
    pub total: f64,
    pub heuristic: bool,
    pub norms: Vec<NormRecord>,
    /// Leave-one-out constants, one per distinct summand law.
    pub concentration: Vec<ConcentrationConstants>,
}

#[derive(Debug, Clone)]
struct Group {
    dist: MeanZeroDistribution,
    zero_bias: ZeroBiasDistribution,
    members: Vec<usize>,
    /// m^(k) for k ≤ order.
    m: Vec<f64>,
    /// m*^(k) for k ≤ order.
    m_star: Vec<f64>,
}

impl Group {
    /// `(−1)^{d−1} m^(J°)(m*^(J†) − m^(J†))`, without the variance factor.
    fn coefficient(&self, j: &Composition) -> f64 {
        let sign = if j.len() % 2 == 1 { 1.0 } else { -1.0 };
        let prefix: f64 = j.prefix().iter().map(|&q| self.m[q]).product();
        sign * prefix * (self.m_star[j.last()] - self.m[j.last()])
    }
}

/// Memoised evaluator of `C_n` and of the remainder budget for one family
/// of summands. The memo tables live as long as the value.
pub struct Expander {
    summands: Vec<MeanZeroDistribution>,
    groups: Vec<Group>,
    sigma_w: f64,
    max_order: usize,
    options: SolveOptions,
    /// `Σ_i σ_i² Σ_{|J|=s} coefficient` for `s = 0..=max_order` (entry 0 unused).
    level_weights: Vec<f64>,
    solutions: HashMap<u64, Arc<SteinSolution>>,
    nested: HashMap<(u64, usize), AdmissibleFunction>,
    levels: HashMap<u64, usize>,
    c_memo: HashMap<(u64, usize), f64>,
    budget_memo: HashMap<(u64, usize), f64>,
    trace: Vec<TraceEntry>,
    norms: Vec<NormRecord>,
    depth: usize,
}

impl Expander {
    /// Prepares moment tables for expansions up to `max_order`.
    pub fn new(summands: &[MeanZeroDistribution], max_order: usize) -> Result<Self> {
        Self::with_options(summands, max_order, SolveOptions::default())
    }

    pub fn with_options(summands: &[MeanZeroDistribution], max_order: usize, options: SolveOptions) -> Result<Self> {
        if summands.is_empty() {
            return Err(domain("at least one summand is required"));
        }
        if max_order + 2 > crate::distributions::K_MAX {
            return Err(Error::Order {
                requested: max_order,
                available: crate::distributions::K_MAX - 2,
            });
        }
        let mut groups: Vec<Group> = Vec::new();
        for (i, d) in summands.iter().enumerate() {
            if let Some(g) = groups.iter_mut().find(|g| g.dist == *d) {
                g.members.push(i);
                continue;
            }
            groups.push(Group {
                zero_bias: d.zero_bias()?,
                m: (0..=max_order).map(|k| d.normalized_moment(k)).collect(),
                m_star: (0..=max_order).map(|k| d.zero_bias_normalized_moment(k)).collect(),
                dist: d.clone(),
                members: vec![i],
            });
        }
        let mut level_weights = vec![0.0; max_order + 1];
        let compositions = compositions_up_to(max_order);
        for (s, w) in level_weights.iter_mut().enumerate().skip(1) {
            let mut acc = CompensatedSum::new();
            for g in &groups {
                let per: f64 = compositions
                    .iter()
                    .filter(|j| j.size() == s)
                    .map(|j| g.coefficient(j))
                    .sum();
                acc.add(g.members.len() as f64 * g.dist.variance() * per);
            }
            *w = acc.value();
        }
        Ok(Self {
            summands: summands.to_vec(),
            groups,
            sigma_w: total_variance(summands).sqrt(),
            max_order,
            options,
            level_weights,
            solutions: HashMap::new(),
            nested: HashMap::new(),
            levels: HashMap::new(),
            c_memo: HashMap::new(),
            budget_memo: HashMap::new(),
            trace: Vec::new(),
            norms: Vec::new(),
            depth: 0,
        })
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }

    pub fn summands(&self) -> &[MeanZeroDistribution] {
        &self.summands
    }

    fn check_order(&self, h: &AdmissibleFunction, order: usize) -> Result<()> {
        if order > self.max_order {
            return Err(Error::Order {
                requested: order,
                available: self.max_order,
            });
        }
        if h.order() < order {
            return Err(Error::Order {
                requested: order,
                available: h.order(),
            });
        }
        Ok(())
    }

    fn require_moments(&self, order: f64) -> Result<()> {
        for g in &self.groups {
            g.dist.require_moments(order, g.members[0])?;
        }
        Ok(())
    }

    /// Options for a function `level` nestings below the top. Solving at one
    /// level integrates the parent slightly beyond the child's cache, so
    /// caches widen towards the top; each level also inherits the parent's
    /// interpolation error amplified by the derivative recurrence, so
    /// tolerances loosen with depth.
    fn level_options(&self, g: &AdmissibleFunction) -> SolveOptions {
        let level = self.levels.get(&g.id()).copied().unwrap_or(0);
        let mut options = self.options;
        if options.cache_sigmas > 0.0 {
            options.cache_sigmas = 12.0 + 4.0 * (self.max_order + 1).saturating_sub(level) as f64;
        }
        let widen = 100f64.powi(level as i32);
        options.interp_tol *= widen;
        options.quadrature.rel_tol *= widen;
        options.quadrature.abs_tol *= widen;
        options
    }

    /// The Stein solution of `g` at `σ_W`, solved once per function.
    pub fn solution(&mut self, g: &AdmissibleFunction) -> Result<Arc<SteinSolution>> {
        if let Some(s) = self.solutions.get(&g.id()) {
            return Ok(Arc::clone(s));
        }
        let options = self.level_options(g);
        let s = Arc::new(SteinSolution::solve_with(g, self.sigma_w, options)?);
        self.solutions.insert(g.id(), Arc::clone(&s));
        Ok(s)
    }

    /// `f_g^(l)`, built once per `(g, l)` so that memo keys stay stable.
    pub fn nested(&mut self, g: &AdmissibleFunction, l: usize) -> Result<AdmissibleFunction> {
        if let Some(f) = self.nested.get(&(g.id(), l)) {
            return Ok(f.clone());
        }
        let f = self.solution(g)?.nested_admissible(l)?;
        let level = self.levels.get(&g.id()).copied().unwrap_or(0);
        self.levels.insert(f.id(), level + 1);
        self.nested.insert((g.id(), l), f.clone());
        Ok(f)
    }

    /// `C_n(g)`.
    pub fn c_value(&mut self, g: &AdmissibleFunction, n: usize) -> Result<f64> {
        self.check_order(g, n)?;
        if let Some(&v) = self.c_memo.get(&(g.id(), n)) {
            self.trace.push(TraceEntry {
                depth: self.depth,
                function: g.label().to_string(),
                order: n,
                value: v,
                memo_hit: true,
            });
            return Ok(v);
        }
        let base = match self.c_memo.get(&(g.id(), 0)) {
            Some(&v) => v,
            None => match self.solutions.get(&g.id()) {
                Some(s) => s.mean(),
                None => normal_expectation_with(g, self.sigma_w, &self.level_options(g).quadrature)?,
            },
        };
        let mut acc = CompensatedSum::new();
        acc.add(base);
        self.depth += 1;
        for s in 1..=n {
            let nested = self.nested(g, s + 1)?;
            let inner = self.c_value(&nested, n - s)?;
            acc.add(self.level_weights[s] * inner);
        }
        self.depth -= 1;
        let v = acc.value();
        self.c_memo.insert((g.id(), n), v);
        self.trace.push(TraceEntry {
            depth: self.depth,
            function: g.label().to_string(),
            order: n,
            value: v,
            memo_hit: false,
        });
        Ok(v)
    }

    /// `C_0(h), …, C_N(h)` with the full `(i, J)` ledger for `C_N`.
    pub fn expand(&mut self, h: &AdmissibleFunction, order: usize) -> Result<ExpansionLedger> {
        self.check_order(h, order)?;
        self.require_moments(order as f64 + (h.alpha() + h.p()).max(2.0))?;
        self.trace.clear();
        let mut c_values = Vec::with_capacity(order + 1);
        for n in 0..=order {
            c_values.push(self.c_value(h, n)?);
        }
        let mut terms = Vec::new();
        let mut acc = CompensatedSum::new();
        acc.add(c_values[0]);
        let compositions = compositions_up_to(order);
        let mut nested_values = Vec::with_capacity(order + 1);
        nested_values.push((String::new(), 0.0));
        for s in 1..=order {
            let nested = self.nested(h, s + 1)?;
            let v = self.c_value(&nested, order - s)?;
            nested_values.push((nested.label().to_string(), v));
        }
        for (i, d) in self.summands.iter().enumerate() {
            let group = self
                .groups
                .iter()
                .find(|g| g.members.binary_search(&i).is_ok())
                .expect("every summand belongs to a group");
            for j in &compositions {
                let coefficient = d.variance() * group.coefficient(j);
                let (label, nested_value) = &nested_values[j.size()];
                let contribution = coefficient * nested_value;
                acc.add(contribution);
                terms.push(LedgerTerm {
                    summand: i,
                    composition: j.clone(),
                    coefficient,
                    nested: label.clone(),
                    nested_value: *nested_value,
                    contribution,
                });
            }
        }
        Ok(ExpansionLedger {
            function: h.label().to_string(),
            order,
            sigma_w: self.sigma_w,
            c_values,
            terms,
            trace: std::mem::take(&mut self.trace),
            reassembled: acc.value(),
        })
    }

    /// Regularity of the continuous and jump parts of `f_g^(n+1)`.
    fn top_regularity(&mut self, g: &AdmissibleFunction, n: usize) -> Result<TopRegularity> {
        let sol = self.solution(g)?;
        let at_top = n == g.order();
        let jumps = if at_top { sol.top_jumps() } else { Vec::new() };
        let variation = jumps.iter().map(|j| j.size.abs()).sum::<f64>() + 0.0;
        let vanishes = g.polynomial_degree().is_some_and(|d| d <= n);
        let norm = if vanishes {
            0.0
        } else {
            let half = 8.0 * self.sigma_w;
            let f = |x: f64| {
                let jump_part: f64 = jumps.iter().filter(|j| x <= j.location).map(|j| j.size).sum();
                sol.derivative(n + 1, x).unwrap_or(f64::NAN) + jump_part
            };
            norm_estimate(f, g.alpha(), g.p(), -half, half, 161)?
        };
        self.norms.push(NormRecord {
            function: format!("f^({})[{}]", n + 1, g.label()),
            order: n,
            variation,
            norm,
            heuristic: !vanishes,
        });
        Ok(TopRegularity {
            alpha: g.alpha(),
            p: g.p(),
            variation,
            norm,
        })
    }

    /// Lyapunov bound on `E|W^(i)|^p` from an exact even moment of `W^(i)`.
    fn leave_one_out_abs_moment(&self, group: usize, p: f64) -> f64 {
        if p == 0.0 {
            return 1.0;
        }
        let m = ((p / 2.0).ceil() as usize).max(1);
        let top = 2 * m;
        let raw = |d: &MeanZeroDistribution| -> Vec<f64> { (0..=top).map(|k| d.moment(k)).collect() };
        let mut total = vec![0.0; top + 1];
        total[0] = 1.0;
        for g in &self.groups {
            let x = raw(&g.dist);
            for _ in 0..g.members.len() {
                total = (0..=top)
                    .map(|k| (0..=k).map(|j| binomial(k, j) * total[j] * x[k - j]).sum())
                    .collect();
            }
        }
        // Remove one copy: M_W(k) = Σ_j C(k,j) M_{W^(i)}(j) M_X(k−j).
        let x = raw(&self.groups[group].dist);
        let mut rest = vec![0.0; top + 1];
        for k in 0..=top {
            let known: f64 = (0..k).map(|j| binomial(k, j) * rest[j] * x[k - j]).sum();
            rest[k] = total[k] - known;
        }
        rest[top].max(0.0).powf(p / top as f64)
    }

    /// Upper bound on `|e_n(g)|`, assembled with absolute values.
    fn budget_value(&mut self, g: &AdmissibleFunction, n: usize) -> Result<(f64, [f64; 3])> {
        if let Some(&v) = self.budget_memo.get(&(g.id(), n)) {
            return Ok((v, [0.0; 3]));
        }
        let top = self.top_regularity(g, n)?;
        let compositions = compositions_up_to(n);
        let mut parts = [CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new()];
        for gi in 0..self.groups.len() {
            let conc = concentration_leave_one_out_constants(&self.summands, self.groups[gi].members[0], g.alpha())?;
            let x_abs_p = self.leave_one_out_abs_moment(gi, g.p());
            let weight = self.groups[gi].members.len() as f64 * self.groups[gi].dist.variance();
            for j in &compositions {
                let coefficient = self.groups[gi].coefficient(j).abs();
                if coefficient == 0.0 {
                    continue;
                }
                let nested = self.nested(g, j.size() + 1)?;
                let (inner, _) = self.budget_value(&nested, n - j.size())?;
                parts[0].add(weight * coefficient * inner);
            }
            let group = &self.groups[gi];
            for k in 0..=n {
                let eps = reverse_remainder_bound(&top, x_abs_p, &conc, &group.dist, n - k)?;
                parts[1].add(weight * eps * group.m_star[k].abs());
            }
            let delta = remainder_bound(&top, x_abs_p, &conc, &group.zero_bias, n, 0)?;
            parts[2].add(weight * delta.total());
        }
        let parts = [parts[0].value(), parts[1].value(), parts[2].value()];
        let total = parts.iter().sum();
        self.budget_memo.insert((g.id(), n), total);
        Ok((total, parts))
    }

    /// Upper bound on `|E[h(W)] − C_N(h)|`.
    pub fn error_budget(&mut self, h: &AdmissibleFunction, order: usize) -> Result<ErrorBudget> {
        self.check_order(h, order)?;
        self.require_moments(order as f64 + 2.0 + h.alpha() + h.p())?;
        self.norms.clear();
        self.budget_memo.clear();
        let (total, [recursive, epsilon, delta]) = self.budget_value(h, order)?;
        let concentration = self
            .groups
            .iter()
            .map(|g| concentration_leave_one_out_constants(&self.summands, g.members[0], h.alpha()))
            .collect::<Result<Vec<_>>>()?;
        let norms = std::mem::take(&mut self.norms);
        Ok(ErrorBudget {
            order,
            alpha: h.alpha(),
            p: h.p(),
            recursive,
            epsilon,
            delta,
            total,
            heuristic: norms.iter().any(|r| r.heuristic && r.norm > 0.0),
            norms,
            concentration,
        })
    }
}

/// `C_0(h), …, C_N(h)` and the ledger for `C_N(h)`.
pub fn expand(h: &AdmissibleFunction, summands: &[MeanZeroDistribution], order: usize) -> Result<ExpansionLedger> {
    Expander::new(summands, order)?.expand(h, order)
}

/// Upper bound on `|e_N(h)|`.
pub fn error_budget(h: &AdmissibleFunction, summands: &[MeanZeroDistribution], order: usize) -> Result<ErrorBudget> {
    Expander::new(summands, order)?.error_budget(h, order)
}

/// `Φ_σ(f_h^(l))` by derivative-order reduction, checked against direct
/// quadrature of the derivative evaluator.
pub fn normal_expectation_reduced(s: &Arc<SteinSolution>, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(domain("the reduction needs at least one derivative"));
    }
    let reduced = reduced_normal_expectation(s.source(), s.sigma(), l)?;
    let direct = normal_expectation_of_derivative(s, l)?;
    let gap = (reduced - direct).abs();
    if gap > 1e-5 * reduced.abs().max(direct.abs()) + 1e-11 {
        return Err(Error::Numerical(format!(
            "Φ(f^({l})) disagrees: reduced {reduced:e}, direct {direct:e}"
        )));
    }
    Ok(reduced)
}
