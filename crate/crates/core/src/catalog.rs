//! Built-in example graphs.
//!
//! Irrational lengths are square roots of distinct square-free integers,
//! hence linearly independent over the rationals.

use thiserror::Error;

use crate::graph::{EdgeDescription, GraphDescription, GraphError, Label, MetricGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown scenario {0:?}; known: {known}", known = NAMES.join(", "))]
    Unknown(String),
    #[error("bad scenario parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub const NAMES: &[&str] = &[
    "interval",
    "path-3",
    "evpos-counterexample",
    "lasso-4",
    "lasso-4-full",
    "star-5+center",
    "figure-1",
];

fn build(vertices: &[&str], edges: &[(&str, &str, &str)], outer: &[&str]) -> Result<MetricGraph, CatalogError> {
    let raw = GraphDescription {
        vertices: vertices.iter().map(|&v| Label::from(v)).collect(),
        edges: edges
            .iter()
            .map(|&(u, v, expr)| EdgeDescription {
                u: u.into(),
                v: v.into(),
                length: None,
                length_expr: Some(expr.into()),
            })
            .collect(),
        outer: outer.iter().map(|&v| Label::from(v)).collect(),
    };
    Ok(MetricGraph::validate(&raw)?)
}

/// Looks up a scenario. `interval` accepts a length suffix, `interval:2.5`.
pub fn scenario(name: &str) -> Result<MetricGraph, CatalogError> {
    let (base, param) = match name.split_once(':') {
        Some((b, p)) => (b, Some(p)),
        None => (name, None),
    };
    if param.is_some() && base != "interval" {
        return Err(CatalogError::Parameter(format!("{base} takes no parameter")));
    }
    let lasso = [("v1", "v4", "1"), ("v2", "v4", "sqrt(3)"), ("v3", "v4", "sqrt(5)"), ("v2", "v3", "sqrt(7)")];
    match base {
        "interval" => {
            let length = param.unwrap_or("1");
            build(&["v1", "v2"], &[("v1", "v2", length)], &["v1", "v2"])
        }
        "path-3" => build(
            &["v1", "v2", "v3"],
            &[("v1", "v2", "1"), ("v2", "v3", "sqrt(17)")],
            &["v1", "v2"],
        ),
        "evpos-counterexample" => build(
            &["v1", "v2", "v3", "v4", "v5"],
            &[
                ("v1", "v2", "1"),
                ("v2", "v3", "sqrt(2)"),
                ("v1", "v4", "sqrt(3)"),
                ("v2", "v4", "sqrt(5)"),
                ("v4", "v5", "sqrt(7)"),
            ],
            &["v1", "v2", "v3"],
        ),
        "lasso-4" => build(&["v1", "v2", "v3", "v4"], &lasso, &["v1", "v2", "v3"]),
        "lasso-4-full" => build(&["v1", "v2", "v3", "v4"], &lasso, &["v1", "v2", "v3", "v4"]),
        "star-5+center" => build(
            &["v1", "v2", "v3", "v4", "v5", "v6"],
            &[
                ("v1", "v6", "1"),
                ("v2", "v6", "sqrt(2)"),
                ("v3", "v6", "sqrt(3)"),
                ("v4", "v6", "sqrt(5)"),
                ("v5", "v6", "sqrt(7)"),
            ],
            &["v1", "v2", "v3", "v4", "v5"],
        ),
        "figure-1" => build(
            &["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8", "v9", "v10", "v11", "v12"],
            &[
                ("v1", "v2", "sqrt(2)"),
                ("v1", "v8", "sqrt(3)"),
                ("v2", "v8", "sqrt(5)"),
                ("v8", "v9", "sqrt(7)"),
                ("v9", "v10", "sqrt(11)"),
                ("v9", "v3", "sqrt(13)"),
                ("v3", "v4", "sqrt(17)"),
                ("v4", "v5", "sqrt(19)"),
                ("v5", "v11", "sqrt(23)"),
                ("v11", "v12", "sqrt(29)"),
                ("v4", "v11", "sqrt(31)"),
                ("v12", "v6", "sqrt(37)"),
                ("v6", "v7", "sqrt(41)"),
            ],
            &["v1", "v2", "v3", "v4", "v5", "v6", "v7"],
        ),
        _ => Err(CatalogError::Unknown(name.into())),
    }
}
