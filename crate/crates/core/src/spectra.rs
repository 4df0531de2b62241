//! Spectra of the graph Laplacian with Dirichlet conditions on a vertex set.
//!
//! With Dirichlet conditions at every vertex the edges decouple and the
//! spectrum is known in closed form. For the mixed problem (Dirichlet on the
//! outer vertices, Kirchhoff on the inner ones) a piecewise-linear finite
//! element discretisation is used instead.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::dtn::EdgeCoefficients;
use crate::graph::MetricGraph;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("mesh too coarse: estimated error {estimate:e} on lambda_1 = {lambda1} exceeds 1%")]
    ResolutionTooLow { estimate: f64, lambda1: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("mass matrix is not positive definite")]
    Factorization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    ClosedForm,
    Discretized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumList {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub kind: SpectrumKind,
    pub resolution: Option<usize>,
}

impl SpectrumList {
    pub fn first(&self) -> Option<f64> {
        self.values.first().copied()
    }
}

/// `σ(−Δ_V) ∩ (0, lambda_max]`, i.e. every `(πk/L_e)²` up to the bound.
pub fn dirichlet_spectrum_full(g: &MetricGraph, lambda_max: f64) -> SpectrumList {
    let mut all = Vec::new();
    for e in g.edges() {
        let mut k = 1u64;
        loop {
            let value = (PI * k as f64 / e.length).powi(2);
            if value > lambda_max {
                break;
            }
            all.push(value);
            k += 1;
        }
    }
    all.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut multiplicities = Vec::new();
    for v in all {
        match values.last() {
            Some(&last) if (v - last).abs() <= 1e-12 * v => {
                *multiplicities.last_mut().unwrap() += 1;
            }
            _ => {
                values.push(v);
                multiplicities.push(1);
            }
        }
    }
    SpectrumList {
        values,
        multiplicities,
        kind: SpectrumKind::ClosedForm,
        resolution: None,
    }
}

/// Smallest closed-form Dirichlet eigenvalue, `min_e (π/L_e)²`.
pub fn lambda1_full(g: &MetricGraph) -> f64 {
    g.edges()
        .iter()
        .map(|e| (PI / e.length).powi(2))
        .fold(f64::INFINITY, f64::min)
}

/// Number of elements on an edge. Always even so the coarse mesh used for
/// the error estimate nests inside the fine one.
fn elements_on(length: f64, resolution: usize) -> usize {
    2 * ((resolution as f64 * length / 2.0).ceil() as usize).max(1)
}

fn fem_eigenvalues(g: &MetricGraph, elements: &[usize]) -> Result<Vec<f64>, SpectrumError> {
    let m = g.outer_count();
    let inner = g.inner_count();
    let interior: usize = elements.iter().map(|n| n - 1).sum();
    let dofs = inner + interior;
    let mut k = DMatrix::<f64>::zeros(dofs, dofs);
    let mut mass = DMatrix::<f64>::zeros(dofs, dofs);
    let vertex_dof = |v: usize| if v < m { None } else { Some(v - m) };

    let mut next = inner;
    for (e, &n) in g.edges().iter().zip(elements) {
        let h = e.length / n as f64;
        let node = |i: usize| -> Option<usize> {
            if i == 0 {
                vertex_dof(e.u)
            } else if i == n {
                vertex_dof(e.v)
            } else {
                Some(next + i - 1)
            }
        };
        for i in 0..n {
            let ends = [node(i), node(i + 1)];
            for (a, da) in ends.iter().enumerate() {
                for (b, db) in ends.iter().enumerate() {
                    if let (Some(p), Some(q)) = (da, db) {
                        let same = a == b;
                        k[(*p, *q)] += if same { 1.0 / h } else { -1.0 / h };
                        mass[(*p, *q)] += if same { h / 3.0 } else { h / 6.0 };
                    }
                }
            }
        }
        next += n - 1;
    }

    // K x = λ M x with M = L Lᵀ becomes (L⁻¹ K L⁻ᵀ) y = λ y.
    let chol = mass.cholesky().ok_or(SpectrumError::Factorization)?;
    let l = chol.l();
    let left = l
        .solve_lower_triangular(&k)
        .ok_or(SpectrumError::Factorization)?;
    let a = l
        .solve_lower_triangular(&left.transpose())
        .ok_or(SpectrumError::Factorization)?;
    let a = (&a + a.transpose()) * 0.5;
    let mut values: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Lowest `count` eigenvalues of `−Δ_V∂` by P1 finite elements with a
/// consistent mass matrix. `resolution` is elements per unit length.
pub fn kirchhoff_spectrum(
    g: &MetricGraph,
    count: usize,
    resolution: usize,
) -> Result<SpectrumList, SpectrumError> {
    if count == 0 {
        return Err(SpectrumError::InvalidArgument("count must be at least 1".into()));
    }
    if resolution < 8 {
        return Err(SpectrumError::InvalidArgument(format!(
            "resolution {resolution} is below 8 elements per unit length"
        )));
    }
    let fine: Vec<usize> = g.edges().iter().map(|e| elements_on(e.length, resolution)).collect();
    let coarse: Vec<usize> = fine.iter().map(|n| n / 2).collect();
    let values = fem_eigenvalues(g, &fine)?;
    let lambda1 = values[0];
    if coarse.iter().all(|&n| n >= 1) {
        let coarse_values = fem_eigenvalues(g, &coarse)?;
        let estimate = (coarse_values[0] - lambda1).abs() / 3.0;
        if estimate > 0.01 * lambda1 {
            return Err(SpectrumError::ResolutionTooLow { estimate, lambda1 });
        }
    }
    let values: Vec<f64> = values.into_iter().take(count).collect();
    Ok(SpectrumList {
        multiplicities: vec![1; values.len()],
        values,
        kind: SpectrumKind::Discretized,
        resolution: Some(resolution),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PoleKind {
    /// `(πk/L_e)²` for an edge.
    Edge { edge: usize, k: u64 },
    /// The inner block of `D_{λ,V}` loses rank.
    Inner { multiplicity: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleEstimate {
    pub lambda: f64,
    #[serde(flatten)]
    pub kind: PoleKind,
}

fn bisect_width(x: f64) -> f64 {
    1e-10 * x.abs().max(1.0)
}

/// Inner block of `D_{λ,V}` assembled from the edges that touch inner vertices.
fn inner_block(g: &MetricGraph, lambda: f64) -> DMatrix<f64> {
    let m = g.outer_count();
    let k = g.inner_count();
    let mut c = DMatrix::zeros(k, k);
    for e in g.edges() {
        if e.v < m {
            continue;
        }
        let coef = EdgeCoefficients::evaluate(lambda, e.length);
        if e.u >= m {
            c[(e.u - m, e.u - m)] += coef.alpha;
            c[(e.u - m, e.v - m)] = -coef.beta;
            c[(e.v - m, e.u - m)] = -coef.beta;
        }
        c[(e.v - m, e.v - m)] += coef.alpha;
    }
    c
}

fn negative_count(g: &MetricGraph, lambda: f64) -> usize {
    let c = inner_block(g, lambda);
    SymmetricEigen::new(c)
        .eigenvalues
        .iter()
        .filter(|&&x| x < 0.0)
        .count()
}

/// Poles of `λ ↦ D_{λ,V∂}` in `(lo, hi)`.
///
/// Edge poles `(πk/L_e)²` are bracketed in closed form and refined by
/// bisection on `sin(√λ L_e)`. Between consecutive poles of the edges that
/// touch inner vertices, the inner block of `D_{λ,V}` is analytic and
/// strictly decreasing in λ, so its count of negative eigenvalues jumps
/// exactly where the block becomes singular; those jumps are bisected.
pub fn pole_scan(g: &MetricGraph, lo: f64, hi: f64, samples: usize) -> Vec<PoleEstimate> {
    let mut poles = Vec::new();
    if !(lo < hi) || samples < 2 {
        return poles;
    }
    let m = g.outer_count();
    let mut breaks = Vec::new();
    for (i, e) in g.edges().iter().enumerate() {
        let k_lo = if lo <= 0.0 { 1 } else { (lo.sqrt() * e.length / PI).floor() as u64 + 1 };
        let mut k = k_lo.max(1);
        loop {
            let exact = (PI * k as f64 / e.length).powi(2);
            if exact >= hi {
                break;
            }
            if exact > lo {
                let phase = |x: f64| (x.sqrt() * e.length).sin();
                let (mut a, mut b) = (
                    (PI * (k as f64 - 0.5) / e.length).powi(2),
                    (PI * (k as f64 + 0.5) / e.length).powi(2),
                );
                let fa = phase(a);
                while b - a > bisect_width(exact) {
                    let mid = 0.5 * (a + b);
                    if phase(mid).signum() == fa.signum() {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let lambda = 0.5 * (a + b);
                poles.push(PoleEstimate {
                    lambda,
                    kind: PoleKind::Edge { edge: i, k },
                });
                if e.v >= m {
                    breaks.push(lambda);
                }
            }
            k += 1;
        }
    }

    if g.inner_count() > 0 {
        breaks.sort_by(f64::total_cmp);
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied());
        cuts.push(hi);
        let step = (hi - lo) / (samples - 1) as f64;
        for w in cuts.windows(2) {
            let pad = |x: f64| 1e-9 * x.abs().max(1.0);
            let (a, b) = (w[0] + pad(w[0]), w[1] - pad(w[1]));
            if !(a < b) {
                continue;
            }
            let mut grid = vec![a];
            let first = ((a - lo) / step).floor() as usize + 1;
            let mut i = first;
            while lo + i as f64 * step < b {
                grid.push(lo + i as f64 * step);
                i += 1;
            }
            grid.push(b);
            let counts: Vec<usize> = grid.iter().map(|&x| negative_count(g, x)).collect();
            for i in 1..grid.len() {
                locate_jumps(g, grid[i - 1], counts[i - 1], grid[i], counts[i], &mut poles);
            }
        }
    }
    poles.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    poles
}

fn locate_jumps(g: &MetricGraph, a: f64, na: usize, b: f64, nb: usize, out: &mut Vec<PoleEstimate>) {
    if nb <= na {
        return;
    }
    if b - a <= bisect_width(b) {
        out.push(PoleEstimate {
            lambda: 0.5 * (a + b),
            kind: PoleKind::Inner { multiplicity: nb - na },
        });
        return;
    }
    let mid = 0.5 * (a + b);
    let nm = negative_count(g, mid);
    locate_jumps(g, a, na, mid, nm, out);
    locate_jumps(g, mid, nm, b, nb, out);
}
