//! Acceptance checks. Prints one line per criterion and exits with status 1
//! if any of them fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use qgraph::catalog::scenario;
use qgraph::dtn::pole_residue_probe;
use qgraph::positivity::{is_irreducible, is_metzler};
use qgraph::search::{
    commensurable_base, find_eventual_not_positive_above, find_not_eventually_positive_above,
    find_strongly_positive_above, kronecker_sequence, limit_matrix_q, verify_limit, Gamma, SearchOptions, TargetSpec,
};
use qgraph::spectra::PoleKind;
use qgraph::{
    assemble_outer, classify, expm_oracle, graph_laplacian, kirchhoff_spectrum, pole_scan, report, sweep,
    ClassifierConfig, ClassifyError, MetricGraph, SampleClass, SearchError, SpectrumError, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn lambda1_fem(g: &MetricGraph) -> Result<f64, String> {
    for res in [16, 32, 64, 128] {
        match kirchhoff_spectrum(g, 1, res) {
            Ok(s) => return Ok(s.values[0]),
            Err(SpectrumError::ResolutionTooLow { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err("no resolution reached 1% accuracy".into())
}

fn interval_bands() -> Outcome {
    let start = Instant::now();
    let g = scenario("interval").map_err(|e| e.to_string())?;
    let (lo, hi, steps) = (-5.0, 60.0, 10_000);
    let step = (hi - lo) / (steps - 1) as f64;
    let records = sweep(&g, lo, hi, steps, &ClassifierConfig::default()).map_err(|e| e.to_string())?;
    let edges = [PI * PI, 4.0 * PI * PI];
    let strong_expected = |l: f64| l < edges[0] || l > edges[1];
    for r in &records {
        if matches!(r.class, SampleClass::Pole | SampleClass::Marginal) {
            continue;
        }
        let expected = if strong_expected(r.lambda) { SampleClass::Strong } else { SampleClass::None };
        ensure(r.class == expected, || format!("lambda {} classified {:?}", r.lambda, r.class))?;
    }
    let bands = report(&records);
    let classes: Vec<SampleClass> = bands.iter().map(|b| b.class).collect();
    ensure(classes == [SampleClass::Strong, SampleClass::None, SampleClass::Strong], || {
        format!("band classes {classes:?}")
    })?;
    for (k, edge) in edges.iter().enumerate() {
        let left = bands[k].to;
        let right = bands[k + 1].from;
        ensure((left - edge).abs() <= step && (right - edge).abs() <= step, || {
            format!("band edge near {edge} at [{left}, {right}]")
        })?;
    }
    let poles = pole_scan(&g, lo, hi, 1000);
    ensure(poles.len() == 2, || format!("{} poles found", poles.len()))?;
    ensure(poles.iter().all(|p| matches!(p.kind, PoleKind::Edge { edge: 0, .. })), || {
        "unexpected pole kind".into()
    })?;
    let worst = poles
        .iter()
        .zip(edges)
        .map(|(p, e)| (p.lambda - e).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-8, || format!("pole error {worst:e}"))?;
    let t = within_time(start, Duration::from_secs(10))?;
    Ok(format!("3 bands, edges within one step, pole error {worst:.1e}, {t:.2?}"))
}

fn closed_form_vs_schur() -> Outcome {
    let start = Instant::now();
    let g = scenario("path-3").map_err(|e| e.to_string())?;
    let l23 = 17f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 50 {
        let lambda = rng.gen_range(-10.0..100.0);
        if !common::away_from_poles(&g, lambda, 1e-3) {
            continue;
        }
        let (a12, b12) = common::alpha_beta(lambda, 1.0);
        let (a23, b23) = common::alpha_beta(lambda, l23);
        if a23.abs() < 1e-3 {
            continue;
        }
        let expected = DMatrix::from_row_slice(2, 2, &[a12, -b12, -b12, a12 + a23 - b23 * b23 / a23]);
        let d = assemble_outer(&g, lambda).map_err(|e| format!("lambda {lambda}: {e}"))?;
        for (x, y) in d.entries.iter().zip(expected.iter()) {
            worst = worst.max((x - y).abs() / y.abs());
        }
        checked += 1;
    }
    ensure(worst <= 1e-12, || format!("largest relative deviation {worst:e}"))?;
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!("50 samples, largest relative deviation {worst:.1e}, {t:.2?}"))
}

fn path3_criterion() -> Outcome {
    let g = scenario("path-3").map_err(|e| e.to_string())?;
    let records = sweep(&g, -5.0, 60.0, 10_000, &ClassifierConfig::default()).map_err(|e| e.to_string())?;
    let mut counted = 0;
    for r in &records {
        if matches!(r.class, SampleClass::Pole | SampleClass::Marginal) {
            continue;
        }
        let strong = r.lambda <= 0.0 || r.lambda.sqrt().sin() > 0.0;
        ensure((r.class == SampleClass::Strong) == strong, || {
            format!("lambda {} classified {:?}", r.lambda, r.class)
        })?;
        counted += 1;
    }
    Ok(format!("{counted} non-marginal samples agree with the sign of sin(sqrt(lambda))"))
}

fn zero_pattern() -> Outcome {
    let g = scenario("evpos-counterexample").map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 100 {
        let lambda = rng.gen_range(-10.0..100.0);
        let Ok(d) = assemble_outer(&g, lambda) else { continue };
        worst = worst.max(d.entries[(0, 2)].abs().max(d.entries[(2, 0)].abs()) / d.max_abs());
        checked += 1;
    }
    ensure(worst <= 1e-12, || format!("corner entry ratio {worst:e}"))?;
    let records = sweep(&g, -5.0, 40.0, 4_000, &ClassifierConfig::default()).map_err(|e| e.to_string())?;
    let eventual = records.iter().filter(|r| r.class == SampleClass::Eventual).count();
    ensure(eventual == 0, || format!("{eventual} samples classified eventual"))?;
    Ok(format!("corner entry ratio {worst:.1e} over 100 samples, no eventual sample in 4000"))
}

fn below_first_eigenvalue() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = ClassifierConfig::default();
    for i in 0..20 {
        let n = rng.gen_range(4..=8);
        let extra = rng.gen_range(0..=3);
        let g = common::random_graph(&mut rng, n, extra);
        let lambda1 = lambda1_fem(&g)?;
        for _ in 0..10 {
            let lambda = rng.gen_range(-lambda1..0.9 * lambda1);
            let d = assemble_outer(&g, lambda).map_err(|e| format!("graph {i}, lambda {lambda}: {e}"))?;
            let neg = -&d.entries;
            let (metzler, margin) = is_metzler(&neg, &cfg);
            ensure(metzler && is_irreducible(&neg, &cfg), || {
                format!("graph {i}, lambda {lambda}: margin {margin:e}")
            })?;
            let verdict = classify(&d.entries, &cfg).map_err(|e| e.to_string())?.verdict;
            ensure(verdict == Verdict::StronglyPositive, || format!("graph {i}: verdict {verdict:?}"))?;
        }
    }
    let t = within_time(start, Duration::from_secs(60))?;
    Ok(format!("20 graphs x 10 samples strongly positive, {t:.2?}"))
}

fn commensurable_scaling() -> Outcome {
    let cfg = ClassifierConfig::default();
    let interval = scenario("interval").map_err(|e| e.to_string())?;
    let path = MetricGraph::from_parts(
        &["a", "b", "c", "d"],
        &[("a", "b", 2.0), ("b", "c", 4.0), ("c", "d", 6.0)],
        &["a", "d"],
    )
    .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (g, expected_base) in [(&interval, 1.0), (&path, 2.0)] {
        let (base, _) = commensurable_base(&g.lengths()).map_err(|e| e.to_string())?;
        ensure((base - expected_base).abs() < 1e-12, || format!("base {base}, expected {expected_base}"))?;
        let lambda1 = lambda1_fem(g)?;
        for mu in [0.3 * lambda1, 0.7 * lambda1] {
            let reference = assemble_outer(g, mu).map_err(|e| e.to_string())?.entries / mu.sqrt();
            for p in [1u32, 2, 5] {
                let lambda = (mu.sqrt() + 2.0 * PI * p as f64 / base).powi(2);
                let d = assemble_outer(g, lambda).map_err(|e| e.to_string())?;
                let scaled = &d.entries / lambda.sqrt();
                for (x, y) in scaled.iter().zip(reference.iter()) {
                    worst = worst.max((x - y).abs() / y.abs());
                }
                let verdict = classify(&d.entries, &cfg).map_err(|e| e.to_string())?.verdict;
                ensure(verdict == Verdict::StronglyPositive, || format!("lambda {lambda}: {verdict:?}"))?;
            }
        }
    }
    ensure(worst <= 1e-9, || format!("largest relative deviation {worst:e}"))?;
    Ok(format!("bases 1 and 2 detected, largest relative deviation {worst:.1e}, all strong"))
}

fn kronecker_limit() -> Outcome {
    let g = scenario("lasso-4-full").map_err(|e| e.to_string())?;
    let lengths = g.lengths();
    let mut lines = Vec::new();
    for (gamma, expected_q) in [(1.0, -graph_laplacian(&g.skeleton())), (-1.0, graph_laplacian(&g.skeleton()))] {
        let spec = TargetSpec::uniform(lengths.len(), Gamma::Finite(gamma));
        let q = limit_matrix_q(&g.skeleton(), &spec).map_err(|e| e.to_string())?;
        ensure(q == expected_q, || format!("gamma {gamma}: unexpected limit matrix"))?;
        let seq = kronecker_sequence(&lengths, &spec, 20, 10_000_000, true).map_err(|e| e.to_string())?;
        let last = seq.elements.last().unwrap();
        ensure(last.ell == 20, || format!("last index {}", last.ell))?;
        for el in &seq.elements {
            let bound = 1.0 / el.ell as f64;
            ensure(el.residuals.iter().all(|r| r.sin < bound), || {
                format!("gamma {gamma}: element {} leaves its window", el.ell)
            })?;
        }
        ensure(seq.elements.windows(2).all(|w| w[0].lambda < w[1].lambda), || {
            format!("gamma {gamma}: lambdas not increasing")
        })?;
        let rep = verify_limit(&g, &spec, &seq).map_err(|e| e.to_string())?;
        ensure(rep.final_error < rep.initial_error && rep.final_error < 0.1, || {
            format!("gamma {gamma}: error {:.3e} -> {:.3e}", rep.initial_error, rep.final_error)
        })?;
        lines.push(format!(
            "gamma {gamma}: {:.2e} -> {:.2e} (lambda_20 = {:.3e}, {} candidates)",
            rep.initial_error, rep.final_error, last.lambda, seq.budget_used
        ));
    }
    Ok(lines.join("; "))
}

fn reclassified(g: &MetricGraph, lambda: f64, wanted: Verdict) -> Result<(), String> {
    let d = assemble_outer(g, lambda).map_err(|e| e.to_string())?;
    let cfg = ClassifierConfig::default();
    let verdict = classify(&d.entries, &cfg).map_err(|e| e.to_string())?.verdict;
    ensure(verdict == wanted, || format!("lambda {lambda} re-classifies as {verdict:?}"))?;
    let oracle = expm_oracle(&d.entries, &cfg);
    ensure(oracle.agrees_with(wanted), || format!("lambda {lambda}: oracle saw {:?}", oracle.class))
}

fn existence_searches() -> Outcome {
    let opts = SearchOptions {
        assert_independent: true,
        ..SearchOptions::default()
    };
    let path = scenario("path-3").map_err(|e| e.to_string())?;
    let pos = find_strongly_positive_above(&path, 30.0, &opts).map_err(|e| format!("find-positive: {e}"))?;
    ensure(pos.lambda > 30.0, || format!("positive witness {} not above 30", pos.lambda))?;
    reclassified(&path, pos.lambda, Verdict::StronglyPositive)?;
    let neg = find_not_eventually_positive_above(&path, 30.0, &opts).map_err(|e| format!("find-nonpositive: {e}"))?;
    ensure(neg.lambda > 30.0, || format!("non-positive witness {} not above 30", neg.lambda))?;
    reclassified(&path, neg.lambda, Verdict::NotEventuallyPositive)?;
    let mut found = vec![format!("positive {:.4}", pos.lambda), format!("none {:.4}", neg.lambda)];
    for name in ["lasso-4", "star-5+center"] {
        let g = scenario(name).map_err(|e| e.to_string())?;
        let ev = find_eventual_not_positive_above(&g, 5.0, &opts).map_err(|e| format!("find-eventual on {name}: {e}"))?;
        ensure(ev.lambda > 5.0, || format!("{name}: eventual witness {} not above 5", ev.lambda))?;
        reclassified(&g, ev.lambda, Verdict::EventuallyStronglyPositive)?;
        found.push(format!("{name} eventual {:.6e}", ev.lambda));
    }
    let tree = scenario("evpos-counterexample").map_err(|e| e.to_string())?;
    match find_eventual_not_positive_above(&tree, 5.0, &opts) {
        Err(SearchError::NoCycle) => {}
        other => return Err(format!("tree reduced graph gave {other:?}")),
    }
    found.push("tree: no cycle".into());
    Ok(found.join(", "))
}

fn residues() -> Outcome {
    let g = scenario("interval").map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (k, expected) in [(1u32, -2.0 * PI * PI), (2, 8.0 * PI * PI)] {
        let r = pole_residue_probe(&g, k, 0).map_err(|e| e.to_string())?;
        worst = worst.max((r - expected).abs() / expected.abs());
    }
    ensure(worst <= 1e-6, || format!("relative error {worst:e}"))?;
    Ok(format!("relative error {worst:.1e}"))
}

fn classifier_vs_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = ClassifierConfig::default();
    let (mut flagged, mut disagreements) = (0, 0);
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..500 {
        let n = rng.gen_range(3..=6);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let m = (&a + a.transpose()) * 0.5;
        match classify(&m, &cfg) {
            Ok(c) => {
                *counts.entry(c.verdict.as_str()).or_insert(0) += 1;
                if !expm_oracle(&m, &cfg).agrees_with(c.verdict) {
                    disagreements += 1;
                }
            }
            Err(ClassifyError::NumericallyMarginal { .. }) => flagged += 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} unflagged disagreements"))?;
    let t = within_time(start, Duration::from_secs(30))?;
    Ok(format!("verdicts {counts:?}, {flagged} flagged marginal, 0 disagreements, {t:.2?}"))
}

fn fem_convergence() -> Outcome {
    let both = scenario("interval").map_err(|e| e.to_string())?;
    let mixed = MetricGraph::from_parts(&["v1", "v2"], &[("v1", "v2", 1.0)], &["v1"]).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for (name, g, exact) in [("dirichlet", &both, PI * PI), ("mixed", &mixed, PI * PI / 4.0)] {
        let errors: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&res| kirchhoff_spectrum(g, 1, res).map(|s| (s.values[0] - exact).abs()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        ensure(orders.iter().all(|&p| p >= 1.9), || format!("{name}: orders {orders:?}"))?;
        ensure(errors[2] < 1e-3 * exact, || format!("{name}: error {:e}", errors[2]))?;
        lines.push(format!("{name} orders {:.3}, {:.3}", orders[0], orders[1]));
    }
    Ok(lines.join("; "))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("interval bands and poles", interval_bands),
        ("closed form matches Schur complement", closed_form_vs_schur),
        ("path-3 positivity criterion", path3_criterion),
        ("zero pattern of the tree example", zero_pattern),
        ("strong positivity below the first eigenvalue", below_first_eigenvalue),
        ("commensurable scaling identity", commensurable_scaling),
        ("Kronecker limit", kronecker_limit),
        ("existence searches", existence_searches),
        ("pole residues", residues),
        ("classifier agrees with the exponential", classifier_vs_oracle),
        ("finite-element convergence", fem_convergence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
