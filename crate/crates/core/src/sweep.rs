//! Uniform λ sweeps and their band summaries.

use std::fmt::Write as _;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dtn::{assemble_outer, DtnError};
use crate::graph::MetricGraph;
use crate::positivity::{classify, ClassifierConfig, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("sweep needs lo < hi and at least two steps (got lo = {lo}, hi = {hi}, steps = {steps})")]
    InvalidRange { lo: f64, hi: f64, steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleClass {
    Strong,
    Positive,
    Eventual,
    None,
    Marginal,
    Pole,
}

impl SampleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleClass::Strong => "strong",
            SampleClass::Positive => "positive",
            SampleClass::Eventual => "eventual",
            SampleClass::None => "none",
            SampleClass::Marginal => "marginal",
            SampleClass::Pole => "pole",
        }
    }
}

impl From<Verdict> for SampleClass {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::StronglyPositive => SampleClass::Strong,
            Verdict::Positive => SampleClass::Positive,
            Verdict::EventuallyStronglyPositive => SampleClass::Eventual,
            Verdict::NotEventuallyPositive => SampleClass::None,
            Verdict::AtPole => SampleClass::Pole,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub lambda: f64,
    /// Ascending eigenvalues of `D_{λ,V∂}`; empty at poles.
    pub eigenvalues: Vec<f64>,
    pub class: SampleClass,
    pub near_pole: bool,
}

/// Classifies a single λ.
pub fn sample(g: &MetricGraph, lambda: f64, cfg: &ClassifierConfig) -> SweepRecord {
    let d = match assemble_outer(g, lambda) {
        Ok(d) => d,
        Err(DtnError::AtPole { .. } | DtnError::InnerBlockSingular { .. } | DtnError::PoleCluster { .. }) => {
            return SweepRecord {
                lambda,
                eigenvalues: Vec::new(),
                class: SampleClass::Pole,
                near_pole: true,
            }
        }
        Err(_) => {
            return SweepRecord {
                lambda,
                eigenvalues: Vec::new(),
                class: SampleClass::Marginal,
                near_pole: false,
            }
        }
    };
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(d.entries.clone()).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let class = match classify(&d.entries, cfg) {
        Ok(c) => c.verdict.into(),
        Err(_) => SampleClass::Marginal,
    };
    SweepRecord {
        lambda,
        eigenvalues,
        class,
        near_pole: false,
    }
}

/// `steps` equally spaced samples from `lo` to `hi` inclusive, in grid order.
pub fn sweep(
    g: &MetricGraph,
    lo: f64,
    hi: f64,
    steps: usize,
    cfg: &ClassifierConfig,
) -> Result<Vec<SweepRecord>, SweepError> {
    if !(lo < hi) || steps < 2 || !lo.is_finite() || !hi.is_finite() {
        return Err(SweepError::InvalidRange { lo, hi, steps });
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .into_par_iter()
        .map(|i| {
            let lambda = if i + 1 == steps { hi } else { lo + i as f64 * h };
            sample(g, lambda, cfg)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub from: f64,
    pub to: f64,
    pub class: SampleClass,
    pub samples: usize,
}

/// Runs of equal classification. Pole and marginal samples belong to no
/// band and end the current one.
pub fn report(records: &[SweepRecord]) -> Vec<Band> {
    let mut bands: Vec<Band> = Vec::new();
    let mut open = false;
    for r in records {
        if r.near_pole || matches!(r.class, SampleClass::Pole | SampleClass::Marginal) {
            open = false;
            continue;
        }
        match bands.last_mut() {
            Some(b) if open && b.class == r.class => {
                b.to = r.lambda;
                b.samples += 1;
            }
            _ => {
                bands.push(Band {
                    from: r.lambda,
                    to: r.lambda,
                    class: r.class,
                    samples: 1,
                });
                open = true;
            }
        }
    }
    bands
}

/// CSV with header `lambda,eig_1,…,eig_m,class,near_pole` and 17
/// significant digits. Missing eigenvalues are left empty.
pub fn to_csv(records: &[SweepRecord], dim: usize) -> String {
    let mut out = String::from("lambda");
    for i in 1..=dim {
        write!(out, ",eig_{i}").unwrap();
    }
    out.push_str(",class,near_pole\n");
    for r in records {
        write!(out, "{:.16e}", r.lambda).unwrap();
        for i in 0..dim {
            match r.eigenvalues.get(i) {
                Some(x) => write!(out, ",{x:.16e}").unwrap(),
                None => out.push(','),
            }
        }
        writeln!(out, ",{},{}", r.class.as_str(), r.near_pole).unwrap();
    }
    out
}
