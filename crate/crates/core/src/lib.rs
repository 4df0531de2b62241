//! Dirichlet-to-Neumann matrices of quantum graphs and the positivity of
//! the semigroups `e^{−tD}` they generate.
//!
//! A [`MetricGraph`] carries edge lengths and a split of its vertices into
//! outer (Dirichlet) and inner (Kirchhoff) ones. [`assemble_outer`] builds
//! `D_{λ,V∂}` for real λ, [`classify`] decides the positivity class of the
//! semigroup, and the [`search`] module looks for λ realising each class.

pub mod catalog;
pub mod dtn;
pub mod expm;
pub mod graph;
pub mod positivity;
pub mod search;
pub mod spectra;
pub mod sweep;

pub use dtn::{assemble_full, assemble_outer, edge_alpha_beta, schur_reduce, DtnError, DtnMatrix};
pub use graph::{graph_laplacian, reduced_graph, GraphError, MetricGraph, ReducedGraph, SimpleGraph};
pub use positivity::{classify, expm_oracle, ClassifierConfig, ClassifyError, SemigroupClass, Verdict};
pub use search::SearchError;
pub use spectra::{dirichlet_spectrum_full, kirchhoff_spectrum, pole_scan, SpectrumError, SpectrumList};
pub use sweep::{report, sweep, Band, SampleClass, SweepRecord};
