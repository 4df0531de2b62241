//! Dirichlet-to-Neumann matrices.
//!
//! On an edge of length `L` the λ-harmonic function with boundary values
//! `x_u, x_v` has outward derivatives `α x_u − β x_v` at `u`, with
//! `α = √λ cot(√λ L)` and `β = √λ / sin(√λ L)`. Summing over edges gives the
//! all-Dirichlet matrix `D_{λ,V}`; eliminating the inner vertices by a Schur
//! complement gives `D_{λ,V∂}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::graph::{adjacency_pattern, reduced_graph, MetricGraph};

/// Relative tolerance on `sin(√λ L)` below which λ counts as a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;
/// Below this `|λ|` the coefficients come from their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-8;
/// Condition number of an inner block above which it counts as singular.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Relative size of an entry outside the reduced-graph pattern that is still
/// accepted as zero.
pub const PATTERN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtnError {
    #[error("lambda = {lambda} is a Dirichlet eigenvalue of an edge of length {length}{}", edge.map(|e| format!(" (edge {e})")).unwrap_or_default())]
    AtPole {
        lambda: f64,
        length: f64,
        edge: Option<usize>,
    },
    #[error("inner block is numerically singular at lambda = {lambda} (condition {condition:e})")]
    InnerBlockSingular { lambda: f64, condition: f64 },
    #[error("entry ({row}, {col}) = {value:e} lies outside the reduced-graph pattern")]
    PatternViolation { row: usize, col: usize, value: f64 },
    #[error("pole at lambda = {lambda} is not isolated: another pole at {other}")]
    PoleCluster { lambda: f64, other: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub at_pole: bool,
}

impl EdgeCoefficients {
    /// Evaluates α and β without failing at poles; `at_pole` reports them.
    pub fn evaluate(lambda: f64, length: f64) -> Self {
        if lambda.abs() < SERIES_THRESHOLD {
            // x·cot x and x/sin x as series in z = x² = λL².
            let z = lambda * length * length;
            let alpha = (1.0 - z / 3.0 - z * z / 45.0 - 2.0 * z * z * z / 945.0) / length;
            let beta = (1.0 + z / 6.0 + 7.0 * z * z / 360.0 + 31.0 * z * z * z / 15120.0) / length;
            return EdgeCoefficients { alpha, beta, at_pole: false };
        }
        if lambda < 0.0 {
            let k = (-lambda).sqrt();
            let x = k * length;
            let beta = (k / x.sinh()).max(f64::MIN_POSITIVE);
            return EdgeCoefficients {
                alpha: k / x.tanh(),
                beta,
                at_pole: false,
            };
        }
        let k = lambda.sqrt();
        let x = k * length;
        let (s, c) = x.sin_cos();
        EdgeCoefficients {
            alpha: k * c / s,
            beta: k / s,
            at_pole: s.abs() < POLE_TOLERANCE * x.max(1.0),
        }
    }

    /// Coefficients divided by `√λ`, written in terms of the phase `θ = √λ L`.
    pub fn from_phase(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        EdgeCoefficients {
            alpha: c / s,
            beta: 1.0 / s,
            at_pole: s.abs() < POLE_TOLERANCE * theta.abs().max(1.0),
        }
    }
}

pub fn edge_alpha_beta(lambda: f64, length: f64) -> Result<EdgeCoefficients, DtnError> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(DtnError::InvalidArgument(format!("edge length {length} is not positive")));
    }
    let c = EdgeCoefficients::evaluate(lambda, length);
    if c.at_pole {
        return Err(DtnError::AtPole { lambda, length, edge: None });
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Direct,
    Schur { outer: usize, inner: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtnMatrix {
    pub lambda: f64,
    pub entries: DMatrix<f64>,
    pub provenance: Provenance,
}

impl DtnMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }
}

fn assemble_with<F>(g: &MetricGraph, coefficients: F) -> Result<DMatrix<f64>, DtnError>
where
    F: Fn(usize, f64) -> Result<EdgeCoefficients, DtnError>,
{
    let n = g.vertex_count();
    let mut d = DMatrix::zeros(n, n);
    for (i, e) in g.edges().iter().enumerate() {
        let c = coefficients(i, e.length)?;
        d[(e.u, e.u)] += c.alpha;
        d[(e.v, e.v)] += c.alpha;
        d[(e.u, e.v)] = -c.beta;
        d[(e.v, e.u)] = -c.beta;
    }
    Ok(d)
}

/// `D_{λ,V}`: every vertex carries Dirichlet data.
pub fn assemble_full(g: &MetricGraph, lambda: f64) -> Result<DtnMatrix, DtnError> {
    let entries = assemble_with(g, |edge, length| {
        edge_alpha_beta(lambda, length).map_err(|err| match err {
            DtnError::AtPole { lambda, length, .. } => DtnError::AtPole {
                lambda,
                length,
                edge: Some(edge),
            },
            other => other,
        })
    })?;
    Ok(DtnMatrix {
        lambda,
        entries,
        provenance: Provenance::Direct,
    })
}

/// Eliminates every index from `m` on. Inner blocks that are decoupled in
/// the matrix are eliminated separately, so outer pairs that share no inner
/// block receive no contribution at all.
pub fn schur_reduce(full: &DtnMatrix, m: usize) -> Result<DtnMatrix, DtnError> {
    let n = full.dim();
    if m == 0 || m > n {
        return Err(DtnError::InvalidArgument(format!(
            "outer block size {m} must lie in 1..={n}"
        )));
    }
    let entries = schur_complement(&full.entries, m, full.lambda)?;
    Ok(DtnMatrix {
        lambda: full.lambda,
        entries,
        provenance: if m == n {
            full.provenance
        } else {
            Provenance::Schur { outer: m, inner: n - m }
        },
    })
}

fn inner_blocks(d: &DMatrix<f64>, m: usize) -> Vec<Vec<usize>> {
    let n = d.nrows();
    let mut label = vec![usize::MAX; n];
    let mut blocks = Vec::new();
    for s in m..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        label[s] = id;
        let mut members = vec![s];
        let mut next = 0;
        while next < members.len() {
            let x = members[next];
            next += 1;
            for y in m..n {
                if label[y] == usize::MAX && d[(x, y)] != 0.0 {
                    label[y] = id;
                    members.push(y);
                }
            }
        }
        members.sort_unstable();
        blocks.push(members);
    }
    blocks
}

fn schur_complement(d: &DMatrix<f64>, m: usize, lambda: f64) -> Result<DMatrix<f64>, DtnError> {
    let mut out = d.view((0, 0), (m, m)).into_owned();
    for block in inner_blocks(d, m) {
        let k = block.len();
        let c = DMatrix::from_fn(k, k, |i, j| d[(block[i], block[j])]);
        let eig = SymmetricEigen::new(c);
        let (lo, hi) = eig
            .eigenvalues
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &mu| (lo.min(mu.abs()), hi.max(mu.abs())));
        // Cancellation inside a row can make the whole block small, so the
        // row sizes also count as scale.
        let rows_scale = block
            .iter()
            .map(|&r| d.row(r).iter().map(|x| x.abs()).sum::<f64>())
            .fold(hi, f64::max);
        let condition = if lo > 0.0 { rows_scale / lo } else { f64::INFINITY };
        if !(condition <= CONDITION_LIMIT) {
            return Err(DtnError::InnerBlockSingular { lambda, condition });
        }
        let rows: Vec<usize> = (0..m)
            .filter(|&r| block.iter().any(|&c| d[(r, c)] != 0.0))
            .collect();
        // W = D_{rows,block} V, so D_AB D_BB^{-1} D_BA = W diag(1/μ) Wᵀ.
        let w = DMatrix::from_fn(rows.len(), k, |a, q| {
            block
                .iter()
                .enumerate()
                .map(|(i, &c)| d[(rows[a], c)] * eig.eigenvectors[(i, q)])
                .sum::<f64>()
        });
        for a in 0..rows.len() {
            for b in 0..=a {
                let s: f64 = (0..k)
                    .map(|q| w[(a, q)] * w[(b, q)] / eig.eigenvalues[q])
                    .sum();
                out[(rows[a], rows[b])] -= s;
                if a != b {
                    out[(rows[b], rows[a])] -= s;
                }
            }
        }
    }
    Ok(out)
}

/// `D_{λ,V∂}`, checked against the zero pattern of the reduced graph.
pub fn assemble_outer(g: &MetricGraph, lambda: f64) -> Result<DtnMatrix, DtnError> {
    let full = assemble_full(g, lambda)?;
    let reduced = schur_reduce(&full, g.outer_count())?;
    check_pattern(g, &reduced.entries)?;
    Ok(reduced)
}

fn check_pattern(g: &MetricGraph, d: &DMatrix<f64>) -> Result<(), DtnError> {
    let pattern = adjacency_pattern(&reduced_graph(g));
    let bound = PATTERN_TOLERANCE * d.amax();
    for row in 0..d.nrows() {
        for col in 0..d.ncols() {
            if row != col && !pattern.contains(row, col) && d[(row, col)].abs() > bound {
                return Err(DtnError::PatternViolation {
                    row,
                    col,
                    value: d[(row, col)],
                });
            }
        }
        for col in 0..row {
            if d[(row, col)] != d[(col, row)] {
                return Err(DtnError::InvalidArgument(format!(
                    "assembled matrix is not symmetric at ({row}, {col})"
                )));
            }
        }
    }
    Ok(())
}

/// `D_{λ,V∂}/√λ` as a function of the edge phases `θ_e = √λ L_e` alone.
/// For λ > 0 the classification of `D_{λ,V∂}` depends only on these phases.
pub fn assemble_outer_from_phases(g: &MetricGraph, phases: &[f64]) -> Result<DMatrix<f64>, DtnError> {
    if phases.len() != g.edges().len() {
        return Err(DtnError::InvalidArgument(format!(
            "expected {} phases, got {}",
            g.edges().len(),
            phases.len()
        )));
    }
    let full = assemble_with(g, |edge, length| {
        let c = EdgeCoefficients::from_phase(phases[edge]);
        if c.at_pole {
            Err(DtnError::AtPole {
                lambda: f64::NAN,
                length,
                edge: Some(edge),
            })
        } else {
            Ok(c)
        }
    })?;
    schur_complement(&full, g.outer_count(), f64::NAN)
}

/// Residue of `β_e` at `λ* = (πk/L_e)²`, estimated from symmetric samples
/// `h·β(λ*±h)` and Richardson extrapolation in `h²`.
pub fn pole_residue_probe(g: &MetricGraph, k: u32, edge: usize) -> Result<f64, DtnError> {
    if g.inner_count() != 0 {
        return Err(DtnError::InvalidArgument(
            "residue probe needs every vertex to be outer".into(),
        ));
    }
    let length = g
        .edges()
        .get(edge)
        .ok_or_else(|| DtnError::InvalidArgument(format!("no edge {edge}")))?
        .length;
    if k == 0 {
        return Err(DtnError::InvalidArgument("pole index must be at least 1".into()));
    }
    let star = (PI * k as f64 / length).powi(2);

    let mut h0 = 1e-3 * star;
    for (i, e) in g.edges().iter().enumerate() {
        let j_mid = (star.sqrt() * e.length / PI).round().max(1.0) as i64;
        for j in (j_mid - 1).max(1)..=j_mid + 1 {
            if i == edge && j == k as i64 {
                continue;
            }
            let other = (PI * j as f64 / e.length).powi(2);
            let gap = (other - star).abs();
            if gap < 4.0 * h0 {
                h0 = gap / 4.0;
            }
            if gap <= 1e-8 * star {
                return Err(DtnError::PoleCluster { lambda: star, other });
            }
        }
    }

    const LEVELS: usize = 6;
    let sample = |h: f64| {
        let f = |h: f64| h * EdgeCoefficients::evaluate(star + h, length).beta;
        0.5 * (f(h) + f(-h))
    };
    let mut table = vec![vec![0.0; LEVELS]; LEVELS];
    for i in 0..LEVELS {
        table[i][0] = sample(h0 / 2f64.powi(i as i32));
        for j in 1..=i {
            let factor = 4f64.powi(j as i32);
            table[i][j] = table[i][j - 1] + (table[i][j - 1] - table[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    Ok(table[LEVELS - 1][LEVELS - 1])
}
