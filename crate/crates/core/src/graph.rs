//! Metric graphs with an outer/inner vertex split.
//!
//! A [`MetricGraph`] is validated once from a [`GraphDescription`] and stored
//! in canonical order: outer vertices first, then inner vertices, and within
//! each group the connected components of the induced subgraph occupy
//! consecutive indices. Matrices built from the graph therefore have the
//! outer/inner block structure by position.
//!
//! The reduced graph joins two outer vertices when they share an edge or
//! when both touch the same connected component of the inner subgraph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph is not simple: {0}")]
    NotSimple(String),
    #[error("graph is disconnected: vertex {unreachable} cannot be reached from {root}")]
    Disconnected { root: String, unreachable: String },
    #[error("edge {u}-{v} has non-positive or non-finite length {length}")]
    NonPositiveLength { u: String, v: String, length: f64 },
    #[error("outer vertex set is empty")]
    EmptyOuterSet,
    #[error("graph has no vertices")]
    NoVertices,
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("vertex {0} is listed twice")]
    DuplicateVertex(String),
    #[error("edge {u}-{v}: {reason}")]
    BadLength { u: String, v: String, reason: String },
}

/// Vertex label as it appears in a graph file. Numbers are accepted and
/// turned into their decimal spelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Name(String),
    Number(i64),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Name(s) => f.write_str(s),
            Label::Number(n) => write!(f, "{n}"),
        }
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Name(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDescription {
    pub u: Label,
    pub v: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_expr: Option<String>,
}

/// Unvalidated graph as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDescription {
    pub vertices: Vec<Label>,
    pub edges: Vec<EdgeDescription>,
    pub outer: Vec<Label>,
}

impl GraphDescription {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// A length of the form `a*sqrt(p)` with rational `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthExpr {
    pub num: i64,
    pub den: i64,
    pub radicand: u64,
}

impl LengthExpr {
    pub fn value(&self) -> f64 {
        (self.num as f64 * (self.radicand as f64).sqrt()) / self.den as f64
    }

    /// Parses `a*sqrt(p)`, `sqrt(p)`, `a` or `a*sqrt(p)` with `a = n/d` or a
    /// terminating decimal.
    pub fn parse(text: &str) -> Result<Self, String> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err("empty length expression".into());
        }
        let (coef, radicand) = match s.find("sqrt(") {
            Some(pos) => {
                let inner = s[pos + 5..]
                    .strip_suffix(')')
                    .ok_or_else(|| format!("unbalanced parenthesis in {text:?}"))?;
                let p: u64 = inner
                    .parse()
                    .map_err(|_| format!("radicand {inner:?} is not a positive integer"))?;
                if p == 0 {
                    return Err("radicand must be positive".into());
                }
                let head = &s[..pos];
                let coef = if head.is_empty() {
                    "1"
                } else {
                    head.strip_suffix('*')
                        .ok_or_else(|| format!("expected '*' before sqrt in {text:?}"))?
                };
                (coef, p)
            }
            None => (s.as_str(), 1),
        };
        let (num, den) = parse_rational(coef)?;
        if num <= 0 {
            return Err(format!("coefficient in {text:?} must be positive"));
        }
        Ok(LengthExpr { num, den, radicand })
    }
}

fn parse_rational(s: &str) -> Result<(i64, i64), String> {
    let bad = || format!("coefficient {s:?} is not a rational number");
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        if d <= 0 {
            return Err(bad());
        }
        return Ok((n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let int_part: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        return Ok((int_part * den + frac_part, den));
    }
    Ok((s.parse().map_err(|_| bad())?, 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

/// Validated, canonically ordered metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    exprs: Vec<Option<LengthExpr>>,
    n_outer: usize,
    outer_components: Vec<std::ops::Range<usize>>,
    inner_components: Vec<std::ops::Range<usize>>,
}

impl MetricGraph {
    pub fn validate(raw: &GraphDescription) -> Result<Self, GraphError> {
        validate(raw)
    }

    /// Convenience constructor from string labels.
    pub fn from_parts(
        vertices: &[&str],
        edges: &[(&str, &str, f64)],
        outer: &[&str],
    ) -> Result<Self, GraphError> {
        let raw = GraphDescription {
            vertices: vertices.iter().map(|&v| v.into()).collect(),
            edges: edges
                .iter()
                .map(|&(u, v, l)| EdgeDescription {
                    u: u.into(),
                    v: v.into(),
                    length: Some(l),
                    length_expr: None,
                })
                .collect(),
            outer: outer.iter().map(|&v| v.into()).collect(),
        };
        validate(&raw)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn outer_count(&self) -> usize {
        self.n_outer
    }

    pub fn inner_count(&self) -> usize {
        self.labels.len() - self.n_outer
    }

    pub fn is_outer(&self, v: usize) -> bool {
        v < self.n_outer
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Edges with `u < v` in canonical indices, sorted.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.length).collect()
    }

    pub fn length_exprs(&self) -> &[Option<LengthExpr>] {
        &self.exprs
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges.iter().position(|e| e.u == u && e.v == v)
    }

    pub fn outer_components(&self) -> &[std::ops::Range<usize>] {
        &self.outer_components
    }

    pub fn inner_components(&self) -> &[std::ops::Range<usize>] {
        &self.inner_components
    }

    pub fn skeleton(&self) -> SimpleGraph {
        SimpleGraph::new(
            self.vertex_count(),
            self.edges.iter().map(|e| (e.u, e.v)).collect(),
        )
    }

    pub fn description(&self) -> GraphDescription {
        GraphDescription {
            vertices: self.labels.iter().map(|l| Label::Name(l.clone())).collect(),
            edges: self
                .edges
                .iter()
                .zip(&self.exprs)
                .map(|(e, x)| EdgeDescription {
                    u: Label::Name(self.labels[e.u].clone()),
                    v: Label::Name(self.labels[e.v].clone()),
                    length: Some(e.length),
                    length_expr: x.map(|x| format_expr(&x)),
                })
                .collect(),
            outer: self.labels[..self.n_outer]
                .iter()
                .map(|l| Label::Name(l.clone()))
                .collect(),
        }
    }

    /// Same vertices and edges with a different outer set.
    pub fn with_outer(&self, outer: &[&str]) -> Result<Self, GraphError> {
        let mut raw = self.description();
        raw.outer = outer.iter().map(|&v| v.into()).collect();
        validate(&raw)
    }
}

fn format_expr(x: &LengthExpr) -> String {
    let coef = if x.den == 1 {
        format!("{}", x.num)
    } else {
        format!("{}/{}", x.num, x.den)
    };
    if x.radicand == 1 {
        coef
    } else {
        format!("{coef}*sqrt({})", x.radicand)
    }
}

fn validate(raw: &GraphDescription) -> Result<MetricGraph, GraphError> {
    if raw.vertices.is_empty() {
        return Err(GraphError::NoVertices);
    }
    let names: Vec<String> = raw.vertices.iter().map(|l| l.to_string()).collect();
    let mut index = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        if index.insert(name.clone(), i).is_some() {
            return Err(GraphError::DuplicateVertex(name.clone()));
        }
    }
    let lookup = |l: &Label| {
        let s = l.to_string();
        index.get(&s).copied().ok_or(GraphError::UnknownVertex(s))
    };

    let n = names.len();
    let mut seen = BTreeSet::new();
    let mut input_edges = Vec::with_capacity(raw.edges.len());
    for e in &raw.edges {
        let (a, b) = (lookup(&e.u)?, lookup(&e.v)?);
        if a == b {
            return Err(GraphError::NotSimple(format!("loop at vertex {}", names[a])));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(GraphError::NotSimple(format!(
                "parallel edges between {} and {}",
                names[a], names[b]
            )));
        }
        let (length, expr) = edge_length(e, &names[a], &names[b])?;
        if !(length.is_finite() && length > 0.0) {
            return Err(GraphError::NonPositiveLength {
                u: names[a].clone(),
                v: names[b].clone(),
                length,
            });
        }
        input_edges.push((a, b, length, expr));
    }

    let mut is_outer = vec![false; n];
    for l in &raw.outer {
        let i = lookup(l)?;
        if is_outer[i] {
            return Err(GraphError::DuplicateVertex(names[i].clone()));
        }
        is_outer[i] = true;
    }
    if !is_outer.iter().any(|&o| o) {
        return Err(GraphError::EmptyOuterSet);
    }

    let pairs: Vec<(usize, usize)> = input_edges.iter().map(|&(a, b, _, _)| (a, b)).collect();
    let whole = SimpleGraph::new(n, pairs.clone());
    let comp = whole.component_labels();
    if let Some(v) = (0..n).find(|&v| comp[v] != comp[0]) {
        return Err(GraphError::Disconnected {
            root: names[0].clone(),
            unreachable: names[v].clone(),
        });
    }

    // Components of the induced subgraphs, each ordered by smallest input index.
    let induced = |side: bool| -> Vec<Vec<usize>> {
        let keep: Vec<usize> = (0..n).filter(|&v| is_outer[v] == side).collect();
        let local: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let sub = SimpleGraph::new(
            keep.len(),
            pairs
                .iter()
                .filter_map(|&(a, b)| Some((*local.get(&a)?, *local.get(&b)?)))
                .collect(),
        );
        sub.components()
            .into_iter()
            .map(|c| c.into_iter().map(|i| keep[i]).collect())
            .collect()
    };
    let outer_groups = induced(true);
    let inner_groups = induced(false);

    let mut order = Vec::with_capacity(n);
    let ranges = |groups: &[Vec<usize>], order: &mut Vec<usize>| {
        groups
            .iter()
            .map(|g| {
                let start = order.len();
                order.extend(g);
                start..order.len()
            })
            .collect::<Vec<_>>()
    };
    let outer_components = ranges(&outer_groups, &mut order);
    let inner_components = ranges(&inner_groups, &mut order);
    let mut position = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }

    let mut edges: Vec<(Edge, Option<LengthExpr>)> = input_edges
        .iter()
        .map(|&(a, b, length, expr)| {
            let (u, v) = (position[a].min(position[b]), position[a].max(position[b]));
            (Edge { u, v, length }, expr)
        })
        .collect();
    edges.sort_by_key(|(e, _)| (e.u, e.v));

    Ok(MetricGraph {
        labels: order.iter().map(|&i| names[i].clone()).collect(),
        exprs: edges.iter().map(|(_, x)| *x).collect(),
        edges: edges.into_iter().map(|(e, _)| e).collect(),
        n_outer: outer_components.last().map_or(0, |r| r.end),
        outer_components,
        inner_components,
    })
}

fn edge_length(
    e: &EdgeDescription,
    u: &str,
    v: &str,
) -> Result<(f64, Option<LengthExpr>), GraphError> {
    let bad = |reason: String| GraphError::BadLength {
        u: u.to_string(),
        v: v.to_string(),
        reason,
    };
    match (&e.length_expr, e.length) {
        (Some(text), literal) => {
            let expr = LengthExpr::parse(text).map_err(bad)?;
            let value = expr.value();
            if let Some(l) = literal {
                if (l - value).abs() > 1e-9 * value.abs().max(1.0) {
                    return Err(bad(format!(
                        "length {l} disagrees with length_expr {text:?} = {value}"
                    )));
                }
            }
            Ok((value, Some(expr)))
        }
        (None, Some(l)) => Ok((l, None)),
        (None, None) => Err(bad("missing length".into())),
    }
}

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    /// Edges are normalised to `u < v`, sorted and deduplicated.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut edges: Vec<(usize, usize)> = edges
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        SimpleGraph { n, edges }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    pub fn without_edge(&self, a: usize, b: usize) -> SimpleGraph {
        let key = (a.min(b), a.max(b));
        SimpleGraph {
            n: self.n,
            edges: self.edges.iter().copied().filter(|&e| e != key).collect(),
        }
    }

    fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Component id per vertex, ids assigned in order of smallest member.
    pub fn component_labels(&self) -> Vec<usize> {
        let adj = self.neighbours();
        let mut label = vec![usize::MAX; self.n];
        let mut next = 0;
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if label[y] == usize::MAX {
                        label[y] = next;
                        queue.push_back(y);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Connected components, each sorted ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let label = self.component_labels();
        let count = label.iter().map(|&l| l + 1).max().unwrap_or(0);
        let mut out = vec![Vec::new(); count];
        for (v, &l) in label.iter().enumerate() {
            out[l].push(v);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.component_labels().iter().all(|&l| l == 0)
    }

    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() + 1 == self.n.max(1)
    }

    /// True when some edge lies on a cycle. Works for disconnected graphs too.
    pub fn has_cycle(&self) -> bool {
        self.edges.len() + self.components().len() > self.n
    }

    /// Edges lying on at least one cycle (the non-bridges).
    pub fn cycle_edges(&self) -> Vec<(usize, usize)> {
        let base = self.components().len();
        self.edges
            .iter()
            .copied()
            .filter(|&(a, b)| self.without_edge(a, b).components().len() == base)
            .collect()
    }
}

/// How two outer vertices are joined in the reduced graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    Direct,
    ThroughInner,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducedEdge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
}

/// Connectivity of the outer vertices, with indices `0..m` matching the
/// outer block of the source graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedGraph {
    labels: Vec<String>,
    edges: Vec<ReducedEdge>,
}

impl ReducedGraph {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[ReducedEdge] {
        &self.edges
    }

    pub fn kind(&self, a: usize, b: usize) -> Option<EdgeKind> {
        let (u, v) = (a.min(b), a.max(b));
        self.edges.iter().find(|e| e.u == u && e.v == v).map(|e| e.kind)
    }

    pub fn skeleton(&self) -> SimpleGraph {
        SimpleGraph::new(
            self.vertex_count(),
            self.edges.iter().map(|e| (e.u, e.v)).collect(),
        )
    }

    pub fn is_tree(&self) -> bool {
        self.skeleton().is_tree()
    }

    pub fn has_cycle(&self) -> bool {
        self.skeleton().has_cycle()
    }

    pub fn is_connected(&self) -> bool {
        self.skeleton().is_connected()
    }

    /// The reduced graph as a metric graph with unit lengths and every
    /// vertex outer.
    pub fn to_metric_graph(&self) -> Result<MetricGraph, GraphError> {
        let raw = GraphDescription {
            vertices: self.labels.iter().map(|l| Label::Name(l.clone())).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDescription {
                    u: Label::Name(self.labels[e.u].clone()),
                    v: Label::Name(self.labels[e.v].clone()),
                    length: Some(1.0),
                    length_expr: None,
                })
                .collect(),
            outer: self.labels.iter().map(|l| Label::Name(l.clone())).collect(),
        };
        validate(&raw)
    }
}

pub fn reduced_graph(g: &MetricGraph) -> ReducedGraph {
    let m = g.outer_count();
    let mut kinds: BTreeMap<(usize, usize), EdgeKind> = BTreeMap::new();
    let mut touches: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); g.inner_components().len()];
    let component_of = |v: usize| {
        g.inner_components()
            .iter()
            .position(|r| r.contains(&v))
            .expect("inner vertex belongs to a component")
    };
    for e in g.edges() {
        match (g.is_outer(e.u), g.is_outer(e.v)) {
            (true, true) => {
                kinds.insert((e.u, e.v), EdgeKind::Direct);
            }
            (true, false) => {
                touches[component_of(e.v)].insert(e.u);
            }
            (false, true) => {
                touches[component_of(e.u)].insert(e.v);
            }
            (false, false) => {}
        }
    }
    for set in &touches {
        let members: Vec<usize> = set.iter().copied().collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                kinds
                    .entry((a, b))
                    .and_modify(|k| {
                        if *k == EdgeKind::Direct {
                            *k = EdgeKind::Both
                        }
                    })
                    .or_insert(EdgeKind::ThroughInner);
            }
        }
    }
    ReducedGraph {
        labels: g.labels()[..m].to_vec(),
        edges: kinds
            .into_iter()
            .map(|((u, v), kind)| ReducedEdge { u, v, kind })
            .collect(),
    }
}

/// Allowed off-diagonal positions of a matrix in the adjacency class of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyPattern {
    pub n: usize,
    pub allowed: BTreeSet<(usize, usize)>,
}

impl AdjacencyPattern {
    pub fn of(graph: &SimpleGraph) -> Self {
        let mut allowed = BTreeSet::new();
        for &(a, b) in graph.edges() {
            allowed.insert((a, b));
            allowed.insert((b, a));
        }
        AdjacencyPattern { n: graph.order(), allowed }
    }

    pub fn contains(&self, k: usize, j: usize) -> bool {
        self.allowed.contains(&(k, j))
    }

    pub fn is_symmetric(&self) -> bool {
        self.allowed.iter().all(|&(k, j)| self.allowed.contains(&(j, k)))
    }
}

pub fn adjacency_pattern(r: &ReducedGraph) -> AdjacencyPattern {
    AdjacencyPattern::of(&r.skeleton())
}

/// `A_G - D_G`: off-diagonal 1 on edges, diagonal minus the degree.
pub fn graph_laplacian(g: &SimpleGraph) -> DMatrix<f64> {
    let n = g.order();
    let mut lap = vec![0i64; n * n];
    for &(a, b) in g.edges() {
        lap[a * n + b] += 1;
        lap[b * n + a] += 1;
        lap[a * n + a] -= 1;
        lap[b * n + b] -= 1;
    }
    DMatrix::from_fn(n, n, |i, j| lap[i * n + j] as f64)
}
