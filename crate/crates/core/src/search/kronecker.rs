//! Sequences `λ_ℓ` along which `ℓ·sin(√λ_ℓ L_e) → γ_e` and
//! `cos(√λ_ℓ L_e) → 1` for every edge, and the limit of the rescaled
//! Dirichlet-to-Neumann matrix along them.

use nalgebra::DMatrix;
use serde::Serialize;

use super::lattice::{hit_phases, Budget, Miss, PhaseWindow};
use super::{finite, SearchError};
use crate::dtn::assemble_full;
use crate::graph::{MetricGraph, SimpleGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Gamma {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Gamma {
    /// `γ_{e,ℓ}`: the target itself, or `±√ℓ` for infinite targets.
    pub fn at(self, ell: u64) -> f64 {
        match self {
            Gamma::Finite(g) => g,
            Gamma::PlusInfinity => (ell as f64).sqrt(),
            Gamma::MinusInfinity => -(ell as f64).sqrt(),
        }
    }

    /// `1/γ` with `1/±∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            Gamma::Finite(g) => 1.0 / g,
            _ => 0.0,
        }
    }
}

/// Per-edge targets, aligned with the edge order of the graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetSpec {
    pub gamma: Vec<Gamma>,
    /// Side of zero for `γ_e = 0`: `sin(√λ L_e)` is kept `≥ 0` when true.
    pub zero_positive: Vec<bool>,
}

impl TargetSpec {
    pub fn uniform(edges: usize, gamma: Gamma) -> Self {
        TargetSpec {
            gamma: vec![gamma; edges],
            zero_positive: vec![true; edges],
        }
    }

    pub fn new(gamma: Vec<Gamma>) -> Self {
        let n = gamma.len();
        TargetSpec { gamma, zero_positive: vec![true; n] }
    }

    /// First index at which every `γ_{e,ℓ}/ℓ` lies in `[−1, 1]`.
    pub fn first_index(&self) -> u64 {
        let largest = self
            .gamma
            .iter()
            .map(|g| match g {
                Gamma::Finite(x) => x.abs(),
                _ => 1.0,
            })
            .fold(1.0, f64::max);
        largest.ceil().max(1.0) as u64
    }

    /// The phase window for edge `e` at index `ℓ`: within chord distance
    /// `1/ℓ²` of the target point on the unit circle, with `cos > 0` and
    /// `sin` on the side of `γ`.
    pub fn window(&self, e: usize, ell: u64) -> PhaseWindow {
        let l = ell as f64;
        let s = (self.gamma[e].at(ell) / l).clamp(-1.0, 1.0);
        let center = s.asin();
        let width = 2.0 * (0.5 / (l * l)).asin();
        let edge = std::f64::consts::FRAC_PI_2 * (1.0 - 1e-12);
        let mut lo = (center - width).max(-edge);
        let mut hi = (center + width).min(edge);
        let positive = if s == 0.0 { self.zero_positive[e] } else { s > 0.0 };
        if positive {
            lo = lo.max(0.0);
        } else {
            hi = hi.min(0.0);
        }
        PhaseWindow::from_bounds(lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeResidual {
    /// `|ℓ·sin(√λ L_e) − γ_{e,ℓ}|`
    pub sin: f64,
    /// `|cos(√λ L_e) − 1|`
    pub cos: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KroneckerElement {
    pub ell: u64,
    pub lambda: f64,
    pub residuals: Vec<EdgeResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KroneckerSequence {
    pub elements: Vec<KroneckerElement>,
    pub budget_used: u64,
    pub warnings: Vec<String>,
}

impl KroneckerSequence {
    pub fn lambdas(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.lambda).collect()
    }
}

/// Integer relations `q·L_i = p·L_j` with `q ≤ 10⁶`, found from continued
/// fractions of the pairwise ratios.
pub fn integer_relations(lengths: &[f64]) -> Vec<(usize, usize, i64, i64)> {
    let mut out = Vec::new();
    for i in 0..lengths.len() {
        for j in i + 1..lengths.len() {
            let x = lengths[i] / lengths[j];
            if let Some((p, q)) = rational_approximation(x, 1_000_000, 64.0 * f64::EPSILON * x) {
                out.push((i, j, q, p));
            }
        }
    }
    out
}

/// Best rational `p/q` with `q ≤ max_den` and `|x − p/q| ≤ tol`, if any.
pub(crate) fn rational_approximation(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let f = rest - a as f64;
        if f == 0.0 {
            break;
        }
        rest = 1.0 / f;
    }
    None
}

/// Incremental construction of a Kronecker sequence.
#[derive(Debug, Clone)]
pub struct KroneckerSearch {
    lengths: Vec<f64>,
    spec: TargetSpec,
    budget: Budget,
    mu: f64,
    ell: u64,
    pub warnings: Vec<String>,
}

impl KroneckerSearch {
    pub fn new(
        lengths: &[f64],
        spec: &TargetSpec,
        budget: u64,
        lambda_floor: f64,
        assert_independent: bool,
    ) -> Result<Self, SearchError> {
        if lengths.is_empty() || lengths.len() != spec.gamma.len() {
            return Err(SearchError::InvalidArgument(format!(
                "{} lengths but {} targets",
                lengths.len(),
                spec.gamma.len()
            )));
        }
        if lengths.len() > 1 && !assert_independent {
            return Err(SearchError::IndependenceNotAsserted);
        }
        let warnings = integer_relations(lengths)
            .into_iter()
            .map(|(i, j, q, p)| format!("lengths {i} and {j} satisfy {q}*L{i} = {p}*L{j} numerically"))
            .collect();
        Ok(KroneckerSearch {
            lengths: lengths.to_vec(),
            spec: spec.clone(),
            budget: Budget::new(budget),
            mu: lambda_floor.max(0.0).sqrt(),
            ell: spec.first_index() - 1,
            warnings,
        })
    }

    pub fn budget_used(&self) -> u64 {
        self.budget.used
    }

    pub fn budget(&mut self) -> &mut Budget {
        &mut self.budget
    }

    pub fn next_element(&mut self) -> Result<KroneckerElement, SearchError> {
        let ell = self.ell + 1;
        let windows: Vec<PhaseWindow> = (0..self.lengths.len()).map(|e| self.spec.window(e, ell)).collect();
        let floor = self.mu * (1.0 + 1e-12) + 1e-12;
        match hit_phases(&self.lengths, &windows, floor, &mut self.budget) {
            Ok(hit) => {
                self.ell = ell;
                self.mu = hit.mu;
                let lambda = hit.mu * hit.mu;
                let root = lambda.sqrt();
                let residuals = self
                    .lengths
                    .iter()
                    .zip(&self.spec.gamma)
                    .map(|(l, g)| {
                        let (s, c) = (root * l).sin_cos();
                        EdgeResidual {
                            sin: (ell as f64 * s - g.at(ell)).abs(),
                            cos: (c - 1.0).abs(),
                        }
                    })
                    .collect();
                Ok(KroneckerElement { ell, lambda, residuals })
            }
            Err(Miss::Budget { best_violation }) => Err(SearchError::BudgetExhausted {
                used: self.budget.used,
                best_violation: finite(best_violation),
            }),
            Err(Miss::Precision { best_violation }) => Err(SearchError::PrecisionLimit {
                ell,
                best_violation: finite(best_violation),
            }),
        }
    }
}

/// First `count` elements of a Kronecker sequence for the given targets.
pub fn kronecker_sequence(
    lengths: &[f64],
    spec: &TargetSpec,
    count: usize,
    budget: u64,
    assert_independent: bool,
) -> Result<KroneckerSequence, SearchError> {
    if count == 0 {
        return Err(SearchError::InvalidArgument("count must be at least 1".into()));
    }
    let mut search = KroneckerSearch::new(lengths, spec, budget, 0.0, assert_independent)?;
    let mut elements = Vec::with_capacity(count);
    for _ in 0..count {
        elements.push(search.next_element()?);
    }
    Ok(KroneckerSequence {
        elements,
        budget_used: search.budget_used(),
        warnings: search.warnings,
    })
}

/// `Q_kj = −1/γ_kj` on edges and `Q_kk = −Σ_j Q_kj`. The targets follow the
/// (sorted) edge order of `g`.
pub fn limit_matrix_q(g: &SimpleGraph, spec: &TargetSpec) -> Result<DMatrix<f64>, SearchError> {
    if spec.gamma.len() != g.edges().len() {
        return Err(SearchError::InvalidArgument(format!(
            "{} edges but {} targets",
            g.edges().len(),
            spec.gamma.len()
        )));
    }
    if spec.gamma.contains(&Gamma::Finite(0.0)) {
        return Err(SearchError::InvalidArgument("limit matrix needs non-zero targets".into()));
    }
    let n = g.order();
    let mut q = DMatrix::zeros(n, n);
    for (&(a, b), gamma) in g.edges().iter().zip(&spec.gamma) {
        let x = -gamma.reciprocal();
        q[(a, b)] = x;
        q[(b, a)] = x;
    }
    for k in 0..n {
        let off: f64 = (0..n).filter(|&j| j != k).map(|j| q[(k, j)]).sum();
        q[(k, k)] = -off;
    }
    Ok(q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    /// `‖D_{λ_ℓ,V}/(ℓ√λ_ℓ) − Q‖_max` per element; `None` where assembly failed.
    pub errors: Vec<Option<f64>>,
    pub initial_error: f64,
    pub final_error: f64,
    pub skipped: usize,
}

impl LimitReport {
    pub fn improved(&self) -> bool {
        self.final_error < self.initial_error
    }
}

pub fn verify_limit(
    g: &MetricGraph,
    spec: &TargetSpec,
    seq: &KroneckerSequence,
) -> Result<LimitReport, SearchError> {
    let q = limit_matrix_q(&g.skeleton(), spec)?;
    let errors: Vec<Option<f64>> = seq
        .elements
        .iter()
        .map(|el| {
            assemble_full(g, el.lambda)
                .ok()
                .map(|d| (d.entries / (el.ell as f64 * el.lambda.sqrt()) - &q).amax())
        })
        .collect();
    let present: Vec<f64> = errors.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(SearchError::InvalidArgument("no element of the sequence could be assembled".into()));
    }
    Ok(LimitReport {
        initial_error: present[0],
        final_error: *present.last().unwrap(),
        skipped: errors.len() - present.len(),
        errors,
    })
}
