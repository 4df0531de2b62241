//! Witnesses `λ > λ̂` for each positivity class that the edge-length
//! arithmetic guarantees to recur.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kronecker::{Gamma, KroneckerSearch, TargetSpec};
use super::lattice::{hit_phases, wrap, Budget, Miss, PhaseWindow};
use super::{finite, SearchError};
use crate::dtn::{assemble_outer, assemble_outer_from_phases};
use crate::graph::{graph_laplacian, reduced_graph, EdgeKind, MetricGraph};
use crate::positivity::{classify, ClassifierConfig, Verdict};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Candidate evaluations allowed in total.
    pub budget: u64,
    pub assert_independent: bool,
    pub classifier: ClassifierConfig,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 10_000_000,
            assert_independent: false,
            classifier: ClassifierConfig::default(),
            seed: 0x51a7_e5ee,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Found {
    pub lambda: f64,
    pub verdict: Verdict,
    /// Index of the Kronecker element that produced the witness, if any.
    pub ell: Option<u64>,
    /// Per edge, the distance of `√λ L_e` from its target phase modulo `2π`.
    pub residuals: Vec<f64>,
    pub budget_used: u64,
    pub strategy: &'static str,
}

fn verdict_at(g: &MetricGraph, lambda: f64, cfg: &ClassifierConfig) -> Option<Verdict> {
    let d = assemble_outer(g, lambda).ok()?;
    classify(&d.entries, cfg).ok().map(|c| c.verdict)
}

fn verdict_at_phases(g: &MetricGraph, phases: &[f64], cfg: &ClassifierConfig) -> Option<Verdict> {
    let d = assemble_outer_from_phases(g, phases).ok()?;
    classify(&d, cfg).ok().map(|c| c.verdict)
}

fn phase_residuals(lengths: &[f64], lambda: f64, targets: &[f64]) -> Vec<f64> {
    let root = lambda.sqrt();
    lengths
        .iter()
        .zip(targets)
        .map(|(l, t)| wrap(root * l - t).abs())
        .collect()
}

fn check_independence(g: &MetricGraph, opts: &SearchOptions) -> Result<(), SearchError> {
    if g.edges().len() > 1 && !opts.assert_independent {
        Err(SearchError::IndependenceNotAsserted)
    } else {
        Ok(())
    }
}

/// Walks a Kronecker sequence with uniform target `gamma` until an element
/// above `lambda_hat` classifies as `wanted`.
fn along_sequence(
    g: &MetricGraph,
    lambda_hat: f64,
    gamma: Gamma,
    wanted: Verdict,
    opts: &SearchOptions,
) -> Result<Found, SearchError> {
    let lengths = g.lengths();
    let spec = TargetSpec::uniform(lengths.len(), gamma);
    let mut search = KroneckerSearch::new(&lengths, &spec, opts.budget, lambda_hat.max(0.0), opts.assert_independent)?;
    loop {
        let el = search.next_element()?;
        if !search.budget().spend(1) {
            return Err(SearchError::BudgetExhausted {
                used: search.budget_used(),
                best_violation: None,
            });
        }
        if el.lambda <= lambda_hat {
            continue;
        }
        if verdict_at(g, el.lambda, &opts.classifier) == Some(wanted) {
            let targets: Vec<f64> = (0..lengths.len()).map(|e| spec.window(e, el.ell).center).collect();
            return Ok(Found {
                lambda: el.lambda,
                verdict: wanted,
                ell: Some(el.ell),
                residuals: phase_residuals(&lengths, el.lambda, &targets),
                budget_used: search.budget_used(),
                strategy: "kronecker",
            });
        }
    }
}

/// A `λ > λ̂` whose semigroup is strongly positive, found along the
/// sequence with every `ℓ·sin(√λ L_e) → 1`.
pub fn find_strongly_positive_above(g: &MetricGraph, lambda_hat: f64, opts: &SearchOptions) -> Result<Found, SearchError> {
    check_independence(g, opts)?;
    along_sequence(g, lambda_hat, Gamma::Finite(1.0), Verdict::StronglyPositive, opts)
}

/// A `λ > λ̂` whose semigroup is not eventually positive, found along the
/// sequence with every `ℓ·sin(√λ L_e) → −1`.
pub fn find_not_eventually_positive_above(
    g: &MetricGraph,
    lambda_hat: f64,
    opts: &SearchOptions,
) -> Result<Found, SearchError> {
    if g.outer_count() < 2 {
        return Err(SearchError::Precondition(
            "at least two outer vertices are needed; in dimension one every semigroup is strongly positive".into(),
        ));
    }
    check_independence(g, opts)?;
    along_sequence(g, lambda_hat, Gamma::Finite(-1.0), Verdict::NotEventuallyPositive, opts)
}

/// Largest radius (from 0.2 down, halving) such that random perturbations
/// of every phase by at most that much keep the verdict eventual.
fn robustness_radius(
    g: &MetricGraph,
    phases: &[f64],
    cfg: &ClassifierConfig,
    rng: &mut ChaCha8Rng,
    budget: &mut Budget,
) -> Option<f64> {
    const TRIALS: usize = 24;
    let mut rho = 0.2;
    while rho >= 1e-6 {
        let mut ok = true;
        for _ in 0..TRIALS {
            if !budget.spend(1) {
                return None;
            }
            let p: Vec<f64> = phases.iter().map(|t| t + rho * rng.gen_range(-1.0..=1.0)).collect();
            if verdict_at_phases(g, &p, cfg) != Some(Verdict::EventuallyStronglyPositive) {
                ok = false;
                break;
            }
        }
        if ok {
            return Some(rho);
        }
        rho *= 0.5;
    }
    None
}

/// Turns an eventual phase point into an actual `λ > λ̂` by hitting every
/// phase to within half the robustness radius.
fn realize(
    g: &MetricGraph,
    lambda_hat: f64,
    phases: &[f64],
    rho: f64,
    opts: &SearchOptions,
    budget: &mut Budget,
) -> Result<Option<f64>, SearchError> {
    let lengths = g.lengths();
    let windows: Vec<PhaseWindow> = phases
        .iter()
        .map(|&t| PhaseWindow { center: wrap(t), half_width: 0.5 * rho })
        .collect();
    let mut floor = lambda_hat.max(0.0).sqrt();
    for _ in 0..8 {
        match hit_phases(&lengths, &windows, floor * (1.0 + 1e-12) + 1e-12, budget) {
            Ok(hit) => {
                let lambda = hit.mu * hit.mu;
                if verdict_at(g, lambda, &opts.classifier) == Some(Verdict::EventuallyStronglyPositive) {
                    return Ok(Some(lambda));
                }
                floor = hit.mu;
            }
            Err(Miss::Budget { best_violation }) => {
                return Err(SearchError::BudgetExhausted { used: budget.used, best_violation: finite(best_violation) })
            }
            Err(Miss::Precision { .. }) => return Ok(None),
        }
    }
    Ok(None)
}

/// `[B(−C)⁻¹Bᵀ]` for the outer/inner blocks of the graph Laplacian of the
/// skeleton, together with the outer block itself.
fn laplacian_schur_parts(g: &MetricGraph) -> (DMatrix<f64>, DMatrix<f64>) {
    let lap = graph_laplacian(&g.skeleton());
    let m = g.outer_count();
    let n = g.vertex_count();
    let a = lap.view((0, 0), (m, m)).into_owned();
    if m == n {
        return (a, DMatrix::zeros(m, m));
    }
    let b = lap.view((0, m), (m, n - m)).into_owned();
    let neg_c = -lap.view((m, m), (n - m, n - m)).into_owned();
    let solved = neg_c
        .cholesky()
        .expect("inner block of a connected graph Laplacian is definite")
        .solve(&b.transpose());
    (a, &b * solved)
}

/// Follows the perturbed limit with one negative cycle entry: targets
/// `γ = 1` except `γ_rs = −1/(ε + x_rs)` on a direct cycle edge `(r, s)`,
/// where `x_rs` is the inner contribution to `(r, s)`.
fn perturbed_limit_strategy(
    g: &MetricGraph,
    lambda_hat: f64,
    opts: &SearchOptions,
    budget: &mut Budget,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Found>, SearchError> {
    let reduced = reduced_graph(g);
    let Some((r, s)) = reduced.skeleton().cycle_edges().into_iter().find(|&(a, b)| {
        matches!(reduced.kind(a, b), Some(EdgeKind::Direct | EdgeKind::Both)) && g.edge_index(a, b).is_some()
    }) else {
        return Ok(None);
    };
    let rs_edge = g.edge_index(r, s).expect("direct edge");
    let (a, through) = laplacian_schur_parts(g);
    let x = through[(r, s)];
    let limit = &a + &through;
    let m = limit.nrows();
    let m0 = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && !(i == r && j == s) && !(i == s && j == r))
        .map(|(i, j)| limit[(i, j)])
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !m0.is_finite() {
        return Ok(None);
    }
    let lengths = g.lengths();
    for step in 2..8 {
        let eps = m0 * 0.5f64.powi(step);
        let mut gamma = vec![Gamma::Finite(1.0); lengths.len()];
        gamma[rs_edge] = Gamma::Finite(-1.0 / (eps + x));
        let spec = TargetSpec::new(gamma);
        let mut ell = spec.first_index().max(2);
        while ell <= 1 << 14 {
            if !budget.spend(1) {
                return Err(SearchError::BudgetExhausted { used: budget.used, best_violation: None });
            }
            let phases: Vec<f64> = spec.gamma.iter().map(|gm| (gm.at(ell) / ell as f64).asin()).collect();
            if verdict_at_phases(g, &phases, &opts.classifier) == Some(Verdict::EventuallyStronglyPositive) {
                if let Some(rho) = robustness_radius(g, &phases, &opts.classifier, rng, budget) {
                    if let Some(lambda) = realize(g, lambda_hat, &phases, rho, opts, budget)? {
                        return Ok(Some(Found {
                            lambda,
                            verdict: Verdict::EventuallyStronglyPositive,
                            ell: Some(ell),
                            residuals: phase_residuals(&lengths, lambda, &phases),
                            budget_used: budget.used,
                            strategy: "perturbed-limit",
                        }));
                    }
                }
            }
            ell = ell * 3 / 2 + 1;
        }
    }
    Ok(None)
}

/// Random search of the phase torus for a robust eventual point. Used when
/// every cycle of the reduced graph runs through inner vertices only.
fn phase_space_strategy(
    g: &MetricGraph,
    lambda_hat: f64,
    opts: &SearchOptions,
    budget: &mut Budget,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Found>, SearchError> {
    const SAMPLES: usize = 200_000;
    const CANDIDATES: usize = 16;
    let lengths = g.lengths();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut candidates = 0;
    for _ in 0..SAMPLES {
        if !budget.spend(1) {
            break;
        }
        let phases: Vec<f64> = (0..lengths.len()).map(|_| rng.gen_range(-PI..PI)).collect();
        if verdict_at_phases(g, &phases, &opts.classifier) != Some(Verdict::EventuallyStronglyPositive) {
            continue;
        }
        if let Some(rho) = robustness_radius(g, &phases, &opts.classifier, rng, budget) {
            if best.as_ref().is_none_or(|(b, _)| rho > *b) {
                best = Some((rho, phases));
            }
            candidates += 1;
            if candidates >= CANDIDATES {
                break;
            }
        }
    }
    let Some((rho, phases)) = best else {
        if budget.exhausted() {
            return Err(SearchError::BudgetExhausted { used: budget.used, best_violation: None });
        }
        return Ok(None);
    };
    Ok(realize(g, lambda_hat, &phases, rho, opts, budget)?.map(|lambda| Found {
        lambda,
        verdict: Verdict::EventuallyStronglyPositive,
        ell: None,
        residuals: phase_residuals(&lengths, lambda, &phases),
        budget_used: budget.used,
        strategy: "phase-space",
    }))
}

/// A `λ > λ̂` whose semigroup is eventually strongly positive but not
/// positive. Needs a cycle in the reduced graph.
pub fn find_eventual_not_positive_above(
    g: &MetricGraph,
    lambda_hat: f64,
    opts: &SearchOptions,
) -> Result<Found, SearchError> {
    if !reduced_graph(g).has_cycle() {
        return Err(SearchError::NoCycle);
    }
    check_independence(g, opts)?;
    let mut budget = Budget::new(opts.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    if let Some(found) = perturbed_limit_strategy(g, lambda_hat, opts, &mut budget, &mut rng)? {
        return Ok(found);
    }
    if let Some(found) = phase_space_strategy(g, lambda_hat, opts, &mut budget, &mut rng)? {
        return Ok(found);
    }
    Err(SearchError::BudgetExhausted { used: budget.used, best_violation: None })
}
