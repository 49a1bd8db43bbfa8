//! Command-line front end.
//!
//! Exit status: 0 on success or a passing verdict, 1 when a tester fails,
//! 2 on usage, validation or IO errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::census;
use crate::error::{Error, Result};
use crate::exec::Strategy;
use crate::graph::{GenSpec, Graph, Pattern, VertexSubset};
use crate::quasitest::{self, DensityParams, DeviationReport, TestOptions};
use crate::reconstruct::{self, ReconstructOptions};
use crate::report;
use crate::rng::{self, stream};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "quasirand",
    version,
    about = "Labeled subgraph census and quasi-randomness testing"
)]
pub struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "QUASIRAND_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
#[group(required = true, multiple = false)]
pub struct GraphSource {
    /// Edge-list file.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// G(n, p) random graph.
    #[arg(long, value_name = "N,P")]
    pub gnp: Option<String>,
    /// Disjoint cliques with the given sizes.
    #[arg(long, value_name = "SIZES")]
    pub clique_union: Option<String>,
    #[arg(long, value_name = "N")]
    pub complete: Option<usize>,
    #[arg(long, value_name = "N")]
    pub empty: Option<usize>,
    /// Complete multipartite graph with the given part sizes.
    #[arg(long, value_name = "SIZES")]
    pub multipartite: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    P1,
    P2,
    P3,
    P4,
    Ph,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph in edge-list format.
    Generate {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Count labeled copies of a pattern inside a vertex subset.
    Count {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value = "k3")]
        pattern: String,
        /// Comma-separated vertex ids (default: all vertices).
        #[arg(long)]
        subset: Option<String>,
        /// Also classify copies by vertices outside this comma-separated set.
        #[arg(long)]
        stratify: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run a quasi-randomness tester.
    Test {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, value_enum)]
        property: Property,
        /// Hypothesised edge density; inferred from the graph when omitted.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Cycle length for p1.
        #[arg(long, default_value_t = 4)]
        t: usize,
        #[arg(long, default_value = "k3")]
        pattern: String,
        #[arg(long, default_value_t = quasitest::DEFAULT_SAMPLES)]
        samples: usize,
        /// Default 0.02 for edge statistics, 0.03 for copy statistics.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Predict H[W] for a small W from counts on random extensions of W.
    Reconstruct {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value = "k2")]
        pattern: String,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        alpha: f64,
        /// |W| = ⌊beta n⌋; W is drawn uniformly from the seed.
        #[arg(long, required_unless_present = "subset")]
        beta: Option<f64>,
        /// Explicit comma-separated W instead of --beta.
        #[arg(long, conflicts_with = "beta")]
        subset: Option<String>,
        #[arg(long, default_value_t = reconstruct::DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the copy tester at several subset sizes.
    Sweep {
        #[command(flatten)]
        source: GraphSource,
        #[arg(long, default_value = "k3")]
        pattern: String,
        #[arg(long)]
        p: Option<f64>,
        /// Comma-separated subset sizes; may be empty.
        #[arg(long, default_value = "")]
        sizes: String,
        #[arg(long, default_value_t = quasitest::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = quasitest::COPY_THRESHOLD)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Argument(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

impl GraphSource {
    pub fn describe(&self) -> String {
        if let Some(p) = &self.input {
            format!("input:{}", p.display())
        } else if let Some(s) = &self.gnp {
            format!("gnp:{s}")
        } else if let Some(s) = &self.clique_union {
            format!("clique_union:{s}")
        } else if let Some(n) = self.complete {
            format!("complete:{n}")
        } else if let Some(n) = self.empty {
            format!("empty:{n}")
        } else if let Some(s) = &self.multipartite {
            format!("multipartite:{s}")
        } else {
            "none".into()
        }
    }

    pub fn spec(&self, seed: u64) -> Result<Option<GenSpec>> {
        Ok(Some(if let Some(s) = &self.gnp {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            let [n, p] = parts.as_slice() else {
                return Err(Error::Config(format!("--gnp expects N,P, got {s:?}")));
            };
            GenSpec::Gnp {
                n: n.parse()
                    .map_err(|_| Error::Config(format!("bad vertex count {n:?}")))?,
                p: p.parse()
                    .map_err(|_| Error::Config(format!("bad probability {p:?}")))?,
                seed,
            }
        } else if let Some(s) = &self.clique_union {
            GenSpec::CliqueUnion {
                parts: parse_list(s, "part size")?,
            }
        } else if let Some(n) = self.complete {
            GenSpec::Complete { n }
        } else if let Some(n) = self.empty {
            GenSpec::Empty { n }
        } else if let Some(s) = &self.multipartite {
            GenSpec::CompleteMultipartite {
                parts: parse_list(s, "part size")?,
            }
        } else {
            return Ok(None);
        }))
    }

    pub fn load(&self, seed: u64) -> Result<Graph> {
        match self.spec(seed)? {
            Some(spec) => spec.generate(),
            None => {
                let path = self.input.as_ref().expect("clap enforces one source");
                Graph::from_edge_list(&std::fs::read_to_string(path)?)
            }
        }
    }
}

fn load_pattern(name: &str) -> Result<Pattern> {
    match Pattern::builtin(name) {
        Ok(p) => Ok(p),
        Err(e) => {
            let path = Path::new(name);
            if path.exists() {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
                Pattern::from_edge_list(&std::fs::read_to_string(path)?, stem)
            } else {
                Err(e)
            }
        }
    }
}

fn subset_arg(g: &Graph, text: Option<&str>) -> Result<VertexSubset> {
    match text {
        None => Ok(VertexSubset::full(g.n())),
        Some(t) => VertexSubset::new(g.n(), parse_list::<usize>(t, "vertex")?),
    }
}

fn density(g: &Graph, p: Option<f64>, alpha: f64) -> Result<DensityParams> {
    match p {
        Some(p) => DensityParams::new(p, alpha),
        None => DensityParams::inferred(g, alpha),
    }
}

/// The resolved run configuration embedded in every report.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    graph: String,
    seed: u64,
    #[serde(flatten)]
    extra: Value,
}

fn with_config<T: Serialize>(report: &T, config: RunConfig) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    let cfg = serde_json::to_value(config)?;
    match &mut v {
        Value::Object(map) => {
            map.insert("config".into(), cfg);
        }
        _ => {
            v = serde_json::json!({ "result": v, "config": cfg });
        }
    }
    Ok(v)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    let threads = cli.threads;
    let outcome = with_threads(threads, || execute(&cli));
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<R> + Send,
) -> Result<R> {
    match threads {
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<R> + Send,
) -> Result<R> {
    if threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    f()
}

fn verdict_code(reports: &[&DeviationReport]) -> i32 {
    if reports.iter().all(|r| r.passed()) {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let seed = cli.seed;
    let strategy = Strategy::default();
    match &cli.command {
        Command::Generate { source, output } => {
            let g = source.load(seed)?;
            report::emit(&g.to_edge_list(), output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Count {
            source,
            pattern,
            subset,
            stratify,
            output,
        } => {
            let g = source.load(seed)?;
            let pat = load_pattern(pattern)?;
            let u = subset_arg(&g, subset.as_deref())?;
            let count = census::count_labeled_copies_with(&g, &pat, &u, strategy)?;
            let strat = match stratify {
                Some(w) => Some(census::stratified_census(
                    &g,
                    &pat,
                    &subset_arg(&g, Some(w))?,
                )?),
                None => None,
            };
            let body = serde_json::json!({
                "pattern": pat.name(),
                "n": g.n(),
                "edges": g.edge_count(),
                "subset_size": u.len(),
                "count": count,
                "edges_within": census::count_edges_within(&g, &u)?,
                "cut": census::count_cut(&g, &u)?,
                "stratified": strat.map(|s| s.counts),
            });
            let config = RunConfig {
                command: "count",
                graph: source.describe(),
                seed,
                extra: serde_json::json!({ "pattern": pattern, "subset": subset, "stratify": stratify }),
            };
            report::emit(
                &report::to_json(&with_config(&body, config)?)?,
                output.as_deref(),
            )?;
            Ok(EXIT_OK)
        }
        Command::Test {
            source,
            property,
            p,
            alpha,
            t,
            pattern,
            samples,
            threshold,
            format,
            output,
        } => {
            let g = source.load(seed)?;
            let params = density(&g, *p, *alpha)?;
            let default_threshold = match property {
                Property::P1 | Property::Ph => quasitest::COPY_THRESHOLD,
                _ => quasitest::EDGE_THRESHOLD,
            };
            let threshold = threshold.unwrap_or(default_threshold);
            let opts = TestOptions::new(*samples, seed, threshold).with_strategy(strategy);
            let pat = load_pattern(pattern)?;
            let rep = match property {
                Property::P1 => quasitest::test_p1(&g, *t, &params, &opts)?,
                Property::P2 => quasitest::test_p2(&g, &params, &opts)?,
                Property::P3 => quasitest::test_p3(&g, &params, &opts)?,
                Property::P4 => quasitest::test_p4(&g, &params, &opts)?,
                Property::Ph => quasitest::test_ph_alpha(&g, &pat, &params, &opts)?,
            };
            let text = match format {
                Format::Json => {
                    let config = RunConfig {
                        command: "test",
                        graph: source.describe(),
                        seed,
                        extra: serde_json::json!({
                            "property": property,
                            "p": params.p,
                            "p_inferred": params.p_inferred,
                            "alpha": alpha,
                            "t": t,
                            "pattern": pattern,
                            "samples": samples,
                            "threshold": threshold,
                        }),
                    };
                    report::to_json(&with_config(&rep, config)?)?
                }
                Format::Csv => report::subsets_csv(&rep)?,
            };
            report::emit(&text, output.as_deref())?;
            Ok(verdict_code(&[&rep]))
        }
        Command::Reconstruct {
            source,
            pattern,
            p,
            alpha,
            beta,
            subset,
            replicates,
            output,
        } => {
            let g = source.load(seed)?;
            let pat = load_pattern(pattern)?;
            let params = density(&g, *p, *alpha)?;
            let w = match (subset, beta) {
                (Some(s), _) => subset_arg(&g, Some(s))?,
                (None, Some(b)) => target_subset(&g, *b, seed)?,
                (None, None) => unreachable!("clap requires --beta or --subset"),
            };
            let opts = ReconstructOptions {
                strategy,
                ..ReconstructOptions::new(*replicates, seed)
            };
            let rep = reconstruct::stratified_reconstruct(&g, &pat, &w, &params, &opts)?;
            let config = RunConfig {
                command: "reconstruct",
                graph: source.describe(),
                seed,
                extra: serde_json::json!({
                    "pattern": pattern,
                    "p": params.p,
                    "p_inferred": params.p_inferred,
                    "alpha": alpha,
                    "beta": beta,
                    "subset": w.members(),
                    "replicates": replicates,
                }),
            };
            let mut v = with_config(&rep, config)?;
            if let (Value::Object(map), Some(err)) = (&mut v, rep.relative_error()) {
                map.insert("relative_error".into(), serde_json::json!(err));
            }
            report::emit(&report::to_json(&v)?, output.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            source,
            pattern,
            p,
            sizes,
            samples,
            threshold,
            format,
            output,
        } => {
            let g = source.load(seed)?;
            let pat = load_pattern(pattern)?;
            let params = density(&g, *p, 0.5)?;
            let sizes: Vec<usize> = parse_list(sizes, "size")?;
            let opts = TestOptions::new(*samples, seed, *threshold).with_strategy(strategy);
            let reports = quasitest::sweep_ph(&g, &pat, &params, &sizes, &opts)?;
            let text = match format {
                Format::Json => {
                    let config = RunConfig {
                        command: "sweep",
                        graph: source.describe(),
                        seed,
                        extra: serde_json::json!({
                            "pattern": pattern,
                            "p": params.p,
                            "p_inferred": params.p_inferred,
                            "sizes": sizes,
                            "samples": samples,
                            "threshold": threshold,
                        }),
                    };
                    let body = serde_json::json!({ "reports": reports });
                    report::to_json(&with_config(&body, config)?)?
                }
                Format::Csv => report::reports_csv(&reports)?,
            };
            report::emit(&text, output.as_deref())?;
            Ok(verdict_code(&reports.iter().collect::<Vec<_>>()))
        }
    }
}

/// Uniform `⌊beta n⌋`-subset drawn from the target stream of `seed`.
pub fn target_subset(g: &Graph, beta: f64, seed: u64) -> Result<VertexSubset> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Argument(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    let size = (beta * g.n() as f64).floor() as usize;
    let mut rng = rng::derived_rng(seed, &[stream::TARGET]);
    VertexSubset::random(&mut rng, g.n(), size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists() {
        assert_eq!(parse_list::<usize>("1, 2,3", "x").unwrap(), vec![1, 2, 3]);
        assert!(parse_list::<usize>("", "x").unwrap().is_empty());
        assert!(parse_list::<usize>("1,a", "x").is_err());
    }

    #[test]
    fn graph_sources() {
        let src = GraphSource {
            input: None,
            gnp: Some("10,0.5".into()),
            clique_union: None,
            complete: None,
            empty: None,
            multipartite: None,
        };
        assert_eq!(
            src.load(3).unwrap(),
            GenSpec::Gnp {
                n: 10,
                p: 0.5,
                seed: 3
            }
            .generate()
            .unwrap()
        );
        let bad = GraphSource {
            gnp: Some("10".into()),
            ..src.clone()
        };
        assert!(matches!(bad.load(0), Err(Error::Config(_))));
    }

    #[test]
    fn target_subset_size() {
        let g = Graph::empty(120);
        let w = target_subset(&g, 0.3, 11).unwrap();
        assert_eq!(w.len(), 36);
        assert_eq!(w, target_subset(&g, 0.3, 11).unwrap());
    }
}
