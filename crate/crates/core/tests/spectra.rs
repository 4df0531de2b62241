mod common;

use std::f64::consts::PI;

use qgraph::catalog::scenario;
use qgraph::spectra::{lambda1_full, PoleKind, SpectrumKind};
use qgraph::{dirichlet_spectrum_full, kirchhoff_spectrum, pole_scan, SpectrumError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

#[test]
fn closed_form_single_edge() {
    let g = scenario("interval").unwrap();
    let s = dirichlet_spectrum_full(&g, 50.0);
    assert_eq!(s.kind, SpectrumKind::ClosedForm);
    assert_eq!(s.values.len(), 2);
    assert!(close(s.values[0], PI * PI, 1e-15));
    assert!(close(s.values[1], 4.0 * PI * PI, 1e-15));
}

#[test]
fn closed_form_two_edges_sorted() {
    let g = scenario("path-3").unwrap();
    let s = dirichlet_spectrum_full(&g, 12.0);
    let mut expected: Vec<f64> = (1..=4).map(|k| (PI * k as f64).powi(2) / 17.0).collect();
    expected.push(PI * PI);
    expected.sort_by(f64::total_cmp);
    assert_eq!(s.values.len(), expected.len());
    for (a, b) in s.values.iter().zip(&expected) {
        assert!(close(*a, *b, 1e-14), "{a} vs {b}");
    }
    assert!(s.values.windows(2).all(|w| w[0] < w[1]));
    assert!(s.multiplicities.iter().all(|&m| m == 1));
}

#[test]
fn closed_form_merges_equal_lengths() {
    let g = scenario("interval").unwrap();
    let doubled = qgraph::graph::GraphDescription::from_json(
        r#"{"vertices":["a","b","c"],"edges":[{"u":"a","v":"b","length":1.0},{"u":"b","v":"c","length":1.0}],"outer":["a","c"]}"#,
    )
    .unwrap();
    let doubled = qgraph::MetricGraph::validate(&doubled).unwrap();
    let s = dirichlet_spectrum_full(&doubled, 50.0);
    assert_eq!(s.multiplicities, vec![2, 2]);
    assert!(dirichlet_spectrum_full(&g, 0.99 * PI * PI).values.is_empty());
}

#[test]
fn mixed_interval_is_quarter_wave() {
    let g = scenario("interval").unwrap().with_outer(&["v1"]).unwrap();
    let s = kirchhoff_spectrum(&g, 2, 64).unwrap();
    assert_eq!(s.kind, SpectrumKind::Discretized);
    assert_eq!(s.resolution, Some(64));
    assert!(close(s.values[0], PI * PI / 4.0, 1e-3), "{}", s.values[0]);
    assert!(close(s.values[1], 9.0 * PI * PI / 4.0, 1e-3), "{}", s.values[1]);
}

#[test]
fn both_ends_outer_matches_closed_form() {
    let g = scenario("interval").unwrap();
    let s = kirchhoff_spectrum(&g, 1, 64).unwrap();
    assert!(close(s.values[0], PI * PI, 1e-3));
    assert!(s.values[0] >= PI * PI, "P1 elements overestimate");
}

#[test]
fn argument_errors() {
    let g = scenario("interval").unwrap();
    assert!(matches!(kirchhoff_spectrum(&g, 0, 64), Err(SpectrumError::InvalidArgument(_))));
    assert!(matches!(kirchhoff_spectrum(&g, 1, 4), Err(SpectrumError::InvalidArgument(_))));
}

#[test]
fn convergence_order_is_two() {
    let g = scenario("interval:1.5").unwrap();
    let exact = (PI / 1.5).powi(2);
    let errors: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&r| kirchhoff_spectrum(&g, 1, r).unwrap().values[0] - exact)
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "observed order {order}");
    }
}

#[test]
fn lambda1_grows_with_the_outer_set() {
    // More Dirichlet vertices shrink the form domain, so the lowest
    // eigenvalue can only grow; with the same mesh the discrete spaces are
    // nested too, so only solver rounding separates equal values.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = 4 + (rand::Rng::gen_range(&mut rng, 0..4));
        let g = common::random_graph(&mut rng, n, 2);
        let labels: Vec<&str> = g.labels().iter().map(String::as_str).collect();
        let outer: Vec<&str> = labels[..g.outer_count()].to_vec();
        let bigger: Vec<&str> = labels[..(g.outer_count() + 1).min(n)].to_vec();
        let small = g.with_outer(&outer).unwrap();
        let large = g.with_outer(&bigger).unwrap();
        let full = g.with_outer(&labels).unwrap();
        let l_small = kirchhoff_spectrum(&small, 1, 64).unwrap().values[0];
        let l_large = kirchhoff_spectrum(&large, 1, 64).unwrap().values[0];
        let l_full = kirchhoff_spectrum(&full, 1, 64).unwrap().values[0];
        assert!(l_small <= l_large * (1.0 + 1e-9), "{l_small} > {l_large}");
        assert!(l_large <= l_full * (1.0 + 1e-9), "{l_large} > {l_full}");
        assert!(l_small <= lambda1_full(&g) * 1.01);
        assert!(l_small > 0.0);
    }
}

#[test]
fn interval_poles_are_squares_of_pi_multiples() {
    let g = scenario("interval").unwrap();
    let poles = pole_scan(&g, 0.0, 50.0, 200);
    assert_eq!(poles.len(), 2);
    for (p, k) in poles.iter().zip([1.0, 2.0]) {
        let exact = (PI * k).powi(2);
        assert!((p.lambda - exact).abs() <= 1e-8 * exact, "{} vs {exact}", p.lambda);
        assert!(matches!(p.kind, PoleKind::Edge { edge: 0, .. }));
    }
}

#[test]
fn path_three_first_pole_matches_fem() {
    let g = scenario("path-3").unwrap();
    let poles = pole_scan(&g, 0.0, 4.0, 400);
    let first = poles.first().expect("a pole below 4");
    assert!(matches!(first.kind, PoleKind::Inner { .. }));
    let fem = kirchhoff_spectrum(&g, 1, 64).unwrap().values[0];
    assert!(close(first.lambda, fem, 1e-3), "{} vs {fem}", first.lambda);
    // The leaf edge is Dirichlet-Neumann, so inner poles sit at quarter waves.
    let quarter = (PI / (2.0 * 17f64.sqrt())).powi(2);
    assert!(close(first.lambda, quarter, 1e-8));
    assert!(poles.windows(2).all(|w| w[0].lambda <= w[1].lambda));
}

#[test]
fn no_poles_below_lambda1() {
    for name in ["interval", "path-3", "lasso-4", "star-5+center"] {
        let g = scenario(name).unwrap();
        let l1 = kirchhoff_spectrum(&g, 1, 64).unwrap().values[0];
        assert!(pole_scan(&g, -10.0, 0.95 * l1, 100).is_empty(), "{name}");
    }
}
