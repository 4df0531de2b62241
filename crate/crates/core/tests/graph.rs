use qgraph::catalog::scenario;
use qgraph::graph::{adjacency_pattern, EdgeKind, GraphDescription};
use qgraph::{graph_laplacian, reduced_graph, GraphError, MetricGraph};

fn labels_of(g: &qgraph::ReducedGraph, a: usize, b: usize) -> (String, String) {
    (g.labels()[a].clone(), g.labels()[b].clone())
}

#[test]
fn single_edge_is_the_smallest_graph() {
    let g = MetricGraph::from_parts(&["v1", "v2"], &[("v1", "v2", 1.0)], &["v1", "v2"]).unwrap();
    assert_eq!(g.labels(), ["v1", "v2"]);
    assert_eq!(g.outer_count(), 2);
    assert_eq!(g.inner_count(), 0);
}

#[test]
fn loops_are_not_simple() {
    let err = MetricGraph::from_parts(&["v1"], &[("v1", "v1", 1.0)], &["v1"]).unwrap_err();
    assert!(matches!(err, GraphError::NotSimple(ref msg) if msg.contains("v1")));
}

#[test]
fn validation_errors_name_the_culprit() {
    let disconnected = MetricGraph::from_parts(&["a", "b", "c"], &[("a", "b", 1.0)], &["a"]).unwrap_err();
    assert!(matches!(disconnected, GraphError::Disconnected { ref unreachable, .. } if unreachable == "c"));
    let zero = MetricGraph::from_parts(&["a", "b"], &[("a", "b", 0.0)], &["a"]).unwrap_err();
    assert!(matches!(zero, GraphError::NonPositiveLength { .. }));
    let infinite = MetricGraph::from_parts(&["a", "b"], &[("a", "b", f64::INFINITY)], &["a"]).unwrap_err();
    assert!(matches!(infinite, GraphError::NonPositiveLength { .. }));
    let empty = MetricGraph::from_parts(&["a", "b"], &[("a", "b", 1.0)], &[]).unwrap_err();
    assert_eq!(empty, GraphError::EmptyOuterSet);
}

#[test]
fn json_description_with_length_expressions() {
    let text = r#"{"vertices": ["a", "b", "c"],
                  "edges": [{"u": "a", "v": "b", "length": 1.0},
                            {"u": "b", "v": "c", "length_expr": "sqrt(17)"}],
                  "outer": ["a", "b"]}"#;
    let g = MetricGraph::validate(&GraphDescription::from_json(text).unwrap()).unwrap();
    assert_eq!(g.lengths(), vec![1.0, 17f64.sqrt()]);
}

#[test]
fn figure_one_components() {
    let g = scenario("figure-1").unwrap();
    assert_eq!(g.vertex_count(), 12);
    assert_eq!(g.edges().len(), 13);
    assert_eq!(g.outer_count(), 7);
    let inner: Vec<Vec<&str>> = g
        .inner_components()
        .iter()
        .map(|r| r.clone().map(|v| g.label(v)).collect())
        .collect();
    assert_eq!(inner, vec![vec!["v8", "v9", "v10"], vec!["v11", "v12"]]);
    for r in g.outer_components().iter().chain(g.inner_components()) {
        let outer = g.is_outer(r.start);
        assert!(r.clone().all(|v| g.is_outer(v) == outer));
    }
}

#[test]
fn figure_one_reduced_graph() {
    let g = scenario("figure-1").unwrap();
    let r = reduced_graph(&g);
    let mut edges: Vec<(String, String, EdgeKind)> = r
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = labels_of(&r, e.u, e.v);
            let (a, b) = if a.len() < b.len() || (a.len() == b.len() && a < b) { (a, b) } else { (b, a) };
            (a, b, e.kind)
        })
        .collect();
    edges.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
    let expected: Vec<(String, String, EdgeKind)> = [
        ("v1", "v2", EdgeKind::Both),
        ("v1", "v3", EdgeKind::ThroughInner),
        ("v2", "v3", EdgeKind::ThroughInner),
        ("v3", "v4", EdgeKind::Direct),
        ("v4", "v5", EdgeKind::Both),
        ("v4", "v6", EdgeKind::ThroughInner),
        ("v5", "v6", EdgeKind::ThroughInner),
        ("v6", "v7", EdgeKind::Direct),
    ]
    .iter()
    .map(|&(a, b, k)| (a.to_string(), b.to_string(), k))
    .collect();
    assert_eq!(edges, expected);
}

#[test]
fn reduced_graph_of_all_outer_is_the_graph() {
    let g = scenario("lasso-4-full").unwrap();
    let r = reduced_graph(&g);
    assert_eq!(r.skeleton(), g.skeleton());
    assert!(r.edges().iter().all(|e| e.kind == EdgeKind::Direct));
}

#[test]
fn tree_example_has_no_corner_edge() {
    let g = scenario("evpos-counterexample").unwrap();
    let r = reduced_graph(&g);
    assert_eq!(r.edges().len(), 2);
    assert_eq!(r.kind(0, 1), Some(EdgeKind::Both));
    assert_eq!(r.kind(1, 2), Some(EdgeKind::Direct));
    assert_eq!(r.kind(0, 2), None);
    assert!(r.is_tree() && !r.has_cycle());
    let p = adjacency_pattern(&r);
    let allowed: Vec<(usize, usize)> = p.allowed.iter().copied().collect();
    assert_eq!(allowed, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
}

#[test]
fn lasso_reduces_to_a_triangle() {
    let r = reduced_graph(&scenario("lasso-4").unwrap());
    assert_eq!(r.edges().len(), 3);
    assert!(r.has_cycle() && !r.is_tree());
    assert_eq!(adjacency_pattern(&r).allowed.len(), 6);
}

#[test]
fn star_reduces_to_complete_graph() {
    let r = reduced_graph(&scenario("star-5+center").unwrap());
    assert_eq!(r.edges().len(), 10);
    assert!(r.edges().iter().all(|e| e.kind == EdgeKind::ThroughInner));
    let p = adjacency_pattern(&r);
    assert_eq!(p.allowed.len(), 20);
    assert!(p.is_symmetric());
}

#[test]
fn single_vertex_is_a_tree() {
    let g = MetricGraph::from_parts(&["a", "b"], &[("a", "b", 1.0)], &["a"]).unwrap();
    let r = reduced_graph(&g);
    assert_eq!(r.vertex_count(), 1);
    assert!(r.is_tree() && !r.has_cycle());
}

#[test]
fn laplacians_of_small_graphs() {
    let k2 = MetricGraph::from_parts(&["a", "b"], &[("a", "b", 1.0)], &["a", "b"]).unwrap();
    assert_eq!(graph_laplacian(&k2.skeleton()).as_slice(), &[-1.0, 1.0, 1.0, -1.0]);
    let path = MetricGraph::from_parts(&["a", "b", "c"], &[("a", "b", 1.0), ("b", "c", 1.0)], &["a", "b", "c"]).unwrap();
    let lap = graph_laplacian(&path.skeleton());
    let expected = nalgebra::DMatrix::from_row_slice(3, 3, &[-1.0, 1.0, 0.0, 1.0, -2.0, 1.0, 0.0, 1.0, -1.0]);
    assert_eq!(lap, expected);
    let fig = graph_laplacian(&scenario("figure-1").unwrap().skeleton());
    for row in fig.row_iter() {
        assert_eq!(row.sum(), 0.0);
    }
}
