//! Searches for spectral parameters with a prescribed positivity class.

mod commensurable;
mod find;
mod kronecker;
pub mod lattice;

use thiserror::Error;

use crate::dtn::DtnError;
use crate::spectra::SpectrumError;

pub use commensurable::{commensurable_base, commensurable_family, CommensurableFamily, FamilyMember};
pub use find::{
    find_eventual_not_positive_above, find_not_eventually_positive_above, find_strongly_positive_above, Found,
    SearchOptions,
};
pub use kronecker::{
    integer_relations, kronecker_sequence, limit_matrix_q, verify_limit, EdgeResidual, Gamma, KroneckerElement,
    KroneckerSearch, KroneckerSequence, LimitReport, TargetSpec,
};

/// `None` for the infinite placeholder left when nothing was evaluated.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn violation_note(v: Option<f64>) -> String {
    v.map(|v| format!(" (best window violation {v:e})")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    /// `best_violation` is the smallest window violation seen, when the
    /// search had windows and evaluated at least one candidate.
    #[error("budget exhausted after {used} candidates{}", violation_note(*best_violation))]
    BudgetExhausted { used: u64, best_violation: Option<f64> },
    #[error("phase windows at index {ell} are below double precision resolution{}", violation_note(*best_violation))]
    PrecisionLimit { ell: u64, best_violation: Option<f64> },
    #[error("rational independence of the edge lengths was not asserted")]
    IndependenceNotAsserted,
    #[error("the reduced graph has no cycle")]
    NoCycle,
    #[error("edge lengths are not commensurable")]
    NotCommensurable,
    #[error("mu = {mu} is outside (0, {lambda1})")]
    MuOutOfRange { mu: f64, lambda1: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Dtn(#[from] DtnError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}
