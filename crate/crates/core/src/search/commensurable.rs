//! Commensurable edge lengths: `L_e = n_e·L` for integers `n_e`. Then
//! `D_{λ,V∂}/√λ` is periodic in `√λ` with period `2π/L`, and every
//! `λ = (√μ + 2πp/L)²` with `0 < μ < λ₁(−Δ_V∂)` is strongly positive.

use std::f64::consts::PI;

use serde::Serialize;

use super::kronecker::rational_approximation;
use super::SearchError;
use crate::dtn::assemble_outer;
use crate::graph::MetricGraph;
use crate::positivity::{classify, ClassifierConfig, Verdict};
use crate::spectra::{kirchhoff_spectrum, SpectrumError};

/// Largest denominator tried when matching length ratios to rationals.
const MAX_DENOMINATOR: i64 = 1000;
const RATIO_TOLERANCE: f64 = 1e-9;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// The largest `L` of which every length is an integer multiple, with the
/// multiples.
pub fn commensurable_base(lengths: &[f64]) -> Result<(f64, Vec<i64>), SearchError> {
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    if lengths.is_empty() || !(shortest > 0.0) {
        return Err(SearchError::InvalidArgument("lengths must be positive".into()));
    }
    let mut fractions = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let ratio = l / shortest;
        let (p, q) = rational_approximation(ratio, MAX_DENOMINATOR, RATIO_TOLERANCE * ratio)
            .ok_or(SearchError::NotCommensurable)?;
        fractions.push((p, q));
    }
    let mut denominator = 1i64;
    for &(_, q) in &fractions {
        denominator = denominator / gcd(denominator, q) * q;
    }
    let multiples: Vec<i64> = fractions.iter().map(|&(p, q)| p * (denominator / q)).collect();
    let common = multiples.iter().fold(0, |acc, &n| gcd(acc, n));
    let multiples: Vec<i64> = multiples.iter().map(|n| n / common).collect();
    Ok((common as f64 * shortest / denominator as f64, multiples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMember {
    pub p: u64,
    pub lambda: f64,
    pub verdict: Option<Verdict>,
    /// `max|D_λ/√λ − D_μ/√μ| / max|D_μ/√μ|`
    pub scaling_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommensurableFamily {
    pub base: f64,
    pub multiples: Vec<i64>,
    pub lambda1: f64,
    pub mu: f64,
    pub members: Vec<FamilyMember>,
}

fn first_eigenvalue(g: &MetricGraph) -> Result<f64, SearchError> {
    if g.inner_count() == 0 {
        let longest = g.lengths().into_iter().fold(0.0, f64::max);
        return Ok((PI / longest).powi(2));
    }
    let mut last = None;
    for resolution in [32, 64, 128, 256] {
        match kirchhoff_spectrum(g, 1, resolution) {
            Ok(s) => return Ok(s.values[0]),
            Err(err @ SpectrumError::ResolutionTooLow { .. }) => last = Some(err),
            Err(err) => return Err(err.into()),
        }
    }
    Err(last.expect("at least one resolution tried").into())
}

pub fn commensurable_family(
    g: &MetricGraph,
    mu: f64,
    p_list: &[u64],
    cfg: &ClassifierConfig,
) -> Result<CommensurableFamily, SearchError> {
    let (base, multiples) = commensurable_base(&g.lengths())?;
    let lambda1 = first_eigenvalue(g)?;
    if !(mu > 0.0 && mu < lambda1) {
        return Err(SearchError::MuOutOfRange { mu, lambda1 });
    }
    let reference = assemble_outer(g, mu)?.entries / mu.sqrt();
    let norm = reference.amax();
    let members = p_list
        .iter()
        .map(|&p| {
            let lambda = (mu.sqrt() + 2.0 * PI * p as f64 / base).powi(2);
            let d = assemble_outer(g, lambda)?;
            let scaling_error = (&d.entries / lambda.sqrt() - &reference).amax() / norm;
            let verdict = classify(&d.entries, cfg).ok().map(|c| c.verdict);
            Ok(FamilyMember { p, lambda, verdict, scaling_error })
        })
        .collect::<Result<Vec<_>, SearchError>>()?;
    Ok(CommensurableFamily {
        base,
        multiples,
        lambda1,
        mu,
        members,
    })
}
