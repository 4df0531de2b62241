use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qgraph::catalog::{self, scenario, CatalogError};
use qgraph::graph::GraphDescription;
use qgraph::positivity::expm_oracle;
use qgraph::search::{
    commensurable_family, find_eventual_not_positive_above, find_not_eventually_positive_above,
    find_strongly_positive_above, kronecker_sequence, verify_limit, Found, Gamma, SearchOptions, TargetSpec,
};
use qgraph::spectra::PoleKind;
use qgraph::sweep::to_csv;
use qgraph::{
    assemble_full, assemble_outer, classify, dirichlet_spectrum_full, kirchhoff_spectrum, pole_scan, reduced_graph,
    report, sweep, ClassifierConfig, ClassifyError, DtnError, MetricGraph, SearchError, SpectrumError,
};
use serde_json::{json, Value};

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_MARGINAL: u8 = 4;

#[derive(Parser)]
#[command(name = "qgraph", version, about = "Positivity of Dirichlet-to-Neumann semigroups on metric graphs")]
struct Cli {
    #[command(flatten)]
    source: Source,
    /// Confirm that the edge lengths are linearly independent over the rationals.
    #[arg(long, global = true)]
    assert_independent: bool,
    /// Relative sign tolerance of the classifier.
    #[arg(long, global = true, default_value_t = 1e-11)]
    tol: f64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Graph description in JSON.
    #[arg(long, global = true, conflicts_with = "scenario")]
    graph: Option<PathBuf>,
    /// Built-in graph, see `qgraph catalog`.
    #[arg(long, global = true)]
    scenario: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpectrumMode {
    /// Dirichlet conditions at every vertex, closed form.
    Full,
    /// Dirichlet on the outer vertices, Kirchhoff on the inner ones.
    Mixed,
    /// Poles of the reduced Dirichlet-to-Neumann matrix.
    Poles,
}

#[derive(Subcommand)]
enum Command {
    /// Check a graph description and summarise it.
    Validate,
    /// Reduced graph on the outer vertices.
    Reduce,
    Spectrum {
        #[arg(long, value_enum, default_value = "full")]
        kind: SpectrumMode,
        /// Upper bound for `full`.
        #[arg(long, default_value_t = 100.0)]
        max: f64,
        /// Number of eigenvalues for `mixed`.
        #[arg(long, default_value_t = 5)]
        count: usize,
        /// Finite elements per unit length for `mixed`.
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Range and sampling for `poles`.
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 100.0)]
        to: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Dirichlet-to-Neumann matrix at one λ.
    Assemble {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// All vertices instead of the outer ones.
        #[arg(long)]
        full: bool,
    },
    /// Positivity class of the semigroup at one λ.
    Classify {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        /// Also sample the matrix exponential.
        #[arg(long)]
        oracle: bool,
    },
    Sweep {
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Summarise as bands instead of listing samples.
        #[arg(long)]
        report: bool,
    },
    /// A strongly positive λ above a bound.
    FindPositive(FindArgs),
    /// A λ above a bound whose semigroup is not eventually positive.
    FindNonpositive(FindArgs),
    /// A λ above a bound whose semigroup is eventually strongly positive but not positive.
    FindEventual(FindArgs),
    /// Strongly positive family for commensurable edge lengths.
    Commensurable {
        #[arg(long)]
        mu: f64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        p: Vec<u64>,
    },
    /// List the built-in graphs or print one of them.
    Catalog { name: Option<String> },
    /// Kronecker sequence with uniform targets and its distance to the limit matrix.
    Limit {
        /// Target: a non-zero number, `inf` or `-inf`.
        #[arg(long, default_value = "1", allow_negative_numbers = true)]
        gamma: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
}

#[derive(Args)]
struct FindArgs {
    #[arg(long, allow_negative_numbers = true)]
    above: f64,
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
    #[arg(long)]
    seed: Option<u64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<SearchError> for Failure {
    fn from(err: SearchError) -> Self {
        let code = match err {
            SearchError::BudgetExhausted { .. } => EXIT_BUDGET,
            SearchError::PrecisionLimit { .. } => EXIT_MARGINAL,
            SearchError::Dtn(_) | SearchError::Spectrum(_) => EXIT_FAILURE,
            _ => EXIT_VALIDATION,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<SpectrumError> for Failure {
    fn from(err: SpectrumError) -> Self {
        let code = match err {
            SpectrumError::InvalidArgument(_) => EXIT_VALIDATION,
            _ => EXIT_FAILURE,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<CatalogError> for Failure {
    fn from(err: CatalogError) -> Self {
        Failure::new(EXIT_VALIDATION, err.to_string())
    }
}

enum Output {
    Json(Value),
    Text(String),
}

fn load(source: &Source) -> Result<MetricGraph, Failure> {
    match (&source.graph, &source.scenario) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot read {}: {e}", path.display())))?;
            let raw = GraphDescription::from_json(&text)
                .map_err(|e| Failure::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
            MetricGraph::validate(&raw).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))
        }
        (None, Some(name)) => Ok(scenario(name)?),
        (None, None) => Err(Failure::new(EXIT_VALIDATION, "pass --graph FILE or --scenario NAME")),
    }
}

fn matrix_json(m: &qgraph::dtn::DtnMatrix) -> Value {
    let rows: Vec<Vec<f64>> = m.entries.row_iter().map(|r| r.iter().copied().collect()).collect();
    json!(rows)
}

fn matrix_csv(labels: &[String], m: &qgraph::dtn::DtnMatrix) -> String {
    let mut out = format!("vertex,{}\n", labels.join(","));
    for (label, row) in labels.iter().zip(m.entries.row_iter()) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&format!("{label},{}\n", cells.join(",")));
    }
    out
}

fn found_json(found: &Found) -> Value {
    json!({
        "lambda": found.lambda,
        "verdict": found.verdict.as_str(),
        "ell": found.ell,
        "residuals": found.residuals,
        "budget_used": found.budget_used,
        "strategy": found.strategy,
    })
}

fn parse_gamma(text: &str) -> Result<Gamma, Failure> {
    match text {
        "inf" | "+inf" => Ok(Gamma::PlusInfinity),
        "-inf" => Ok(Gamma::MinusInfinity),
        _ => match text.parse::<f64>() {
            Ok(x) if x.is_finite() && x != 0.0 => Ok(Gamma::Finite(x)),
            _ => Err(Failure::new(EXIT_VALIDATION, format!("bad target {text:?}"))),
        },
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let cfg = ClassifierConfig {
        sign_tolerance: cli.tol,
        ..ClassifierConfig::default()
    };
    if !(cli.tol > 0.0) {
        return Err(Failure::new(EXIT_VALIDATION, "--tol must be positive"));
    }
    let csv = cli.format == Some(Format::Csv);
    match &cli.command {
        Command::Catalog { name: None } => Ok(Output::Json(json!(catalog::NAMES))),
        Command::Catalog { name: Some(name) } => {
            let g = scenario(name)?;
            Ok(Output::Json(serde_json::to_value(g.description()).expect("serialisable")))
        }
        Command::Validate => {
            let g = load(&cli.source)?;
            let r = reduced_graph(&g);
            Ok(Output::Json(json!({
                "valid": true,
                "vertices": g.vertex_count(),
                "edges": g.edges().len(),
                "outer": &g.labels()[..g.outer_count()],
                "inner": &g.labels()[g.outer_count()..],
                "reduced_has_cycle": r.has_cycle(),
            })))
        }
        Command::Reduce => {
            let g = load(&cli.source)?;
            let r = reduced_graph(&g);
            let edges: Vec<Value> = r
                .edges()
                .iter()
                .map(|e| json!({"u": r.labels()[e.u], "v": r.labels()[e.v], "kind": e.kind}))
                .collect();
            Ok(Output::Json(json!({
                "vertices": r.labels(),
                "edges": edges,
                "tree": r.is_tree(),
                "has_cycle": r.has_cycle(),
            })))
        }
        Command::Spectrum { kind, max, count, resolution, from, to, samples } => {
            let g = load(&cli.source)?;
            let rows: Vec<(f64, String)> = match kind {
                SpectrumMode::Full => {
                    if !(*max > 0.0) {
                        return Err(Failure::new(EXIT_VALIDATION, "--max must be positive"));
                    }
                    let s = dirichlet_spectrum_full(&g, *max);
                    s.values
                        .iter()
                        .zip(&s.multiplicities)
                        .map(|(&v, &m)| (v, format!("closed-form x{m}")))
                        .collect()
                }
                SpectrumMode::Mixed => kirchhoff_spectrum(&g, *count, *resolution)?
                    .values
                    .into_iter()
                    .map(|v| (v, format!("discretized h=1/{resolution}")))
                    .collect(),
                SpectrumMode::Poles => {
                    if !(from < to) || *samples < 2 {
                        return Err(Failure::new(EXIT_VALIDATION, "poles need --from < --to and --samples >= 2"));
                    }
                    pole_scan(&g, *from, *to, *samples)
                        .into_iter()
                        .map(|p| {
                            let label = match p.kind {
                                PoleKind::Edge { edge, k } => format!("edge {edge} k={k}"),
                                PoleKind::Inner { multiplicity } => format!("inner x{multiplicity}"),
                            };
                            (p.lambda, label)
                        })
                        .collect()
                }
            };
            if cli.format == Some(Format::Json) {
                let list: Vec<Value> = rows.iter().map(|(v, k)| json!({"lambda": v, "kind": k})).collect();
                return Ok(Output::Json(json!(list)));
            }
            let mut out = String::from("index,lambda,kind\n");
            for (i, (v, k)) in rows.iter().enumerate() {
                out.push_str(&format!("{},{v:.16e},{k}\n", i + 1));
            }
            Ok(Output::Text(out))
        }
        Command::Assemble { lambda, full } => {
            let g = load(&cli.source)?;
            let d = if *full { assemble_full(&g, *lambda) } else { assemble_outer(&g, *lambda) };
            let d = d.map_err(|e| Failure::new(EXIT_FAILURE, e.to_string()))?;
            let labels = if *full { g.labels() } else { &g.labels()[..g.outer_count()] };
            if csv {
                return Ok(Output::Text(matrix_csv(labels, &d)));
            }
            Ok(Output::Json(json!({"lambda": lambda, "vertices": labels, "matrix": matrix_json(&d)})))
        }
        Command::Classify { lambda, oracle } => {
            let g = load(&cli.source)?;
            let d = match assemble_outer(&g, *lambda) {
                Ok(d) => d,
                Err(e @ (DtnError::AtPole { .. } | DtnError::InnerBlockSingular { .. } | DtnError::PoleCluster { .. })) => {
                    return Ok(Output::Json(json!({"lambda": lambda, "verdict": "pole", "detail": e.to_string()})))
                }
                Err(e) => return Err(Failure::new(EXIT_FAILURE, e.to_string())),
            };
            match classify(&d.entries, &cfg) {
                Ok(c) => {
                    let mut out = json!({
                        "lambda": lambda,
                        "verdict": c.verdict.as_str(),
                        "evidence": c.evidence,
                    });
                    if *oracle {
                        out["oracle"] = serde_json::to_value(expm_oracle(&d.entries, &cfg)).expect("serialisable");
                    }
                    Ok(Output::Json(out))
                }
                Err(e @ ClassifyError::NumericallyMarginal { .. }) => Err(Failure::new(EXIT_MARGINAL, e.to_string())),
                Err(e) => Err(Failure::new(EXIT_FAILURE, e.to_string())),
            }
        }
        Command::Sweep { from, to, steps, report: bands } => {
            let g = load(&cli.source)?;
            let records =
                sweep(&g, *from, *to, *steps, &cfg).map_err(|e| Failure::new(EXIT_VALIDATION, e.to_string()))?;
            if *bands {
                return Ok(Output::Json(serde_json::to_value(report(&records)).expect("serialisable")));
            }
            if cli.format == Some(Format::Json) {
                return Ok(Output::Json(serde_json::to_value(&records).expect("serialisable")));
            }
            Ok(Output::Text(to_csv(&records, g.outer_count())))
        }
        Command::FindPositive(args) | Command::FindNonpositive(args) | Command::FindEventual(args) => {
            let g = load(&cli.source)?;
            let mut opts = SearchOptions {
                budget: args.budget,
                assert_independent: cli.assert_independent,
                classifier: cfg,
                ..SearchOptions::default()
            };
            if let Some(seed) = args.seed {
                opts.seed = seed;
            }
            let found = match &cli.command {
                Command::FindPositive(_) => find_strongly_positive_above(&g, args.above, &opts)?,
                Command::FindNonpositive(_) => find_not_eventually_positive_above(&g, args.above, &opts)?,
                _ => find_eventual_not_positive_above(&g, args.above, &opts)?,
            };
            Ok(Output::Json(found_json(&found)))
        }
        Command::Commensurable { mu, p } => {
            let g = load(&cli.source)?;
            let fam = commensurable_family(&g, *mu, p, &cfg)?;
            let members: Vec<Value> = fam
                .members
                .iter()
                .map(|m| {
                    json!({
                        "p": m.p,
                        "lambda": m.lambda,
                        "verdict": m.verdict.map_or("marginal", |v| v.as_str()),
                        "scaling_error": m.scaling_error,
                    })
                })
                .collect();
            Ok(Output::Json(json!({
                "base": fam.base,
                "multiples": fam.multiples,
                "lambda1": fam.lambda1,
                "mu": fam.mu,
                "members": members,
            })))
        }
        Command::Limit { gamma, count, budget } => {
            let g = load(&cli.source)?;
            let spec = TargetSpec::uniform(g.edges().len(), parse_gamma(gamma)?);
            let seq = kronecker_sequence(&g.lengths(), &spec, *count, *budget, cli.assert_independent)?;
            let limit = verify_limit(&g, &spec, &seq)?;
            Ok(Output::Json(json!({
                "sequence": seq,
                "errors": limit.errors,
                "initial_error": limit.initial_error,
                "final_error": limit.final_error,
                "improved": limit.improved(),
                "skipped": limit.skipped,
            })))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|output| {
        let mut text = match output {
            Output::Json(v) => serde_json::to_string_pretty(&v).expect("serialisable"),
            Output::Text(t) => t,
        };
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &cli.out {
            Some(path) => fs::write(path, text)
                .map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
