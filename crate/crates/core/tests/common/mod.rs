#![allow(dead_code)]

use qgraph::graph::{EdgeDescription, GraphDescription, Label};
use qgraph::MetricGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub const PRIMES: [u64; 20] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71];

/// `(α, β)` straight from the trigonometric and hyperbolic formulas.
pub fn alpha_beta(lambda: f64, length: f64) -> (f64, f64) {
    if lambda > 0.0 {
        let k = lambda.sqrt();
        let x = k * length;
        (k * x.cos() / x.sin(), k / x.sin())
    } else if lambda < 0.0 {
        let k = (-lambda).sqrt();
        let x = k * length;
        (k * x.cosh() / x.sinh(), k / x.sinh())
    } else {
        (1.0 / length, 1.0 / length)
    }
}

/// Connected random graph on `n` vertices with lengths `a·√p/⌊√p⌋` for
/// distinct primes `p` and `a ∈ {1/2, 2/3, 1, 3/2}`, so the lengths lie in
/// `[1/2, 3)` and are rationally independent. The outer set is a random
/// non-empty subset.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, extra_edges: usize) -> MetricGraph {
    let names: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 1..n {
        let j = order[rng.gen_range(0..i)];
        pairs.push((order[i].min(j), order[i].max(j)));
    }
    let mut tries = 0;
    while pairs.len() < n - 1 + extra_edges && tries < 100 {
        tries += 1;
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let p = (a.min(b), a.max(b));
        if a != b && !pairs.contains(&p) {
            pairs.push(p);
        }
    }
    let mut primes = PRIMES.to_vec();
    primes.shuffle(rng);
    let coefs = ["1/2", "2/3", "1", "3/2"];
    let edges = pairs
        .iter()
        .zip(&primes)
        .map(|(&(a, b), &p)| {
            let root = (p as f64).sqrt().floor() as u64;
            let coef = coefs[rng.gen_range(0..coefs.len())];
            let (num, den) = coef.split_once('/').unwrap_or((coef, "1"));
            let den: u64 = den.parse::<u64>().unwrap() * root;
            EdgeDescription {
                u: Label::Name(names[a].clone()),
                v: Label::Name(names[b].clone()),
                length: None,
                length_expr: Some(format!("{num}/{den}*sqrt({p})")),
            }
        })
        .collect();
    let outer_count = rng.gen_range(1..=n);
    let mut shuffled = names.clone();
    shuffled.shuffle(rng);
    let raw = GraphDescription {
        vertices: names.iter().map(|s| Label::Name(s.clone())).collect(),
        edges,
        outer: shuffled[..outer_count].iter().map(|s| Label::Name(s.clone())).collect(),
    };
    MetricGraph::validate(&raw).expect("random graph is valid")
}

/// Whether `λ` is at least `gap` away (in phase) from every edge pole.
pub fn away_from_poles(g: &MetricGraph, lambda: f64, gap: f64) -> bool {
    lambda <= 0.0 || g.lengths().iter().all(|l| (lambda.sqrt() * l).sin().abs() > gap)
}
