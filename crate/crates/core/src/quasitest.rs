//! Testers for edge-density and copy-density quasi-randomness properties.
//!
//! Each tester examines a family of vertex subsets, measures a statistic on
//! each one and compares it with its `G(n, p)` expectation. The family is a
//! deterministic set of adversarial candidates followed by `samples` uniform
//! random subsets. Adversarial candidates are:
//!
//! * unions of whole connected components (when the graph is disconnected),
//!   truncated or padded to the target size;
//! * prefixes of the vertex list sorted by degree, both directions;
//! * closed neighbourhoods of a maximum- and a minimum-degree vertex.
//!
//! Identical subsets are examined once. Per-subset work may run in parallel;
//! the reduction walks the ordered results, and ties for the worst subset go
//! to the lexicographically smallest member list.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::census;
use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::graph::{Graph, Pattern, VertexSubset};
use crate::rng::{self, stream};

/// Default threshold for edge and cut statistics (normaliser `n^2`).
pub const EDGE_THRESHOLD: f64 = 0.02;
/// Default threshold for copy statistics (normaliser `n^h`).
pub const COPY_THRESHOLD: f64 = 0.03;
pub const DEFAULT_SAMPLES: usize = 200;

/// Component unions are enumerated exhaustively up to this many components.
const MAX_COMPONENTS_EXHAUSTIVE: usize = 8;
/// Above that, only the largest components are used individually and as
/// cumulative unions.
const MAX_COMPONENTS_LISTED: usize = 16;

/// The tested hypothesis: edge density `p` and subset fraction `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityParams {
    pub p: f64,
    pub alpha: f64,
    /// `p` was set from the graph as `2 e(G) / n^2` rather than given.
    pub p_inferred: bool,
}

impl DensityParams {
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Argument(format!("p must lie in (0, 1), got {p}")));
        }
        check_alpha(alpha)?;
        Ok(DensityParams {
            p,
            alpha,
            p_inferred: false,
        })
    }

    /// Allows `p = 1`, the reference density of a complete host.
    pub fn with_unit_density(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(DensityParams {
            p: 1.0,
            alpha,
            p_inferred: false,
        })
    }

    /// Uses the graph's own density `2 e(G) / n^2` as `p`.
    pub fn inferred(g: &Graph, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let n = g.n() as f64;
        if g.n() == 0 {
            return Err(Error::Argument(
                "cannot infer density of an empty vertex set".into(),
            ));
        }
        Ok(DensityParams {
            p: 2.0 * g.edge_count() as f64 / (n * n),
            alpha,
            p_inferred: true,
        })
    }

    /// `⌊alpha n⌋`.
    pub fn subset_size(&self, n: usize) -> usize {
        (self.alpha * n as f64).floor() as usize
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TestOptions {
    pub samples: usize,
    pub seed: u64,
    pub threshold: f64,
    pub strategy: Strategy,
}

impl TestOptions {
    pub fn new(samples: usize, seed: u64, threshold: f64) -> Self {
        TestOptions {
            samples,
            seed,
            threshold,
            strategy: Strategy::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Where an examined subset came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Whole,
    Component,
    DegreePrefix,
    Neighborhood,
    Random,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Whole => "whole",
            Source::Component => "component",
            Source::DegreePrefix => "degree_prefix",
            Source::Neighborhood => "neighborhood",
            Source::Random => "random",
        })
    }
}

/// One examined subset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetRecord {
    pub source: Source,
    pub members: Vec<usize>,
    /// What was measured: an edge, cut or copy count.
    pub statistic: f64,
    /// Its `G(n, p)` expectation.
    pub expected: f64,
    pub abs_deviation: f64,
}

/// Summary of one tester run.
///
/// `max_abs_deviation` and `mean_abs_deviation` are raw; divide by
/// `normalizer` for the normalised deviation. `verdict` is pass iff
/// `max_abs_deviation / normalizer < threshold`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub property: String,
    pub subsets_examined: usize,
    pub max_abs_deviation: f64,
    pub mean_abs_deviation: f64,
    pub normalizer: f64,
    pub worst_subset: Vec<usize>,
    pub threshold: f64,
    pub verdict: Verdict,
    #[serde(skip)]
    pub records: Vec<SubsetRecord>,
}

impl DeviationReport {
    pub fn normalized_max(&self) -> f64 {
        self.max_abs_deviation / self.normalizer
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn from_records(
        property: String,
        normalizer: f64,
        threshold: f64,
        records: Vec<SubsetRecord>,
    ) -> DeviationReport {
        let mut worst: Option<&SubsetRecord> = None;
        let mut sum = 0.0;
        for rec in &records {
            sum += rec.abs_deviation;
            worst = match worst {
                None => Some(rec),
                Some(w) if rec.abs_deviation > w.abs_deviation => Some(rec),
                Some(w) if rec.abs_deviation == w.abs_deviation && rec.members < w.members => {
                    Some(rec)
                }
                keep => keep,
            };
        }
        let max = worst.map_or(0.0, |w| w.abs_deviation);
        let mean = if records.is_empty() {
            0.0
        } else {
            sum / records.len() as f64
        };
        // Mean can exceed max by an ulp when all deviations are equal.
        let mean = mean.min(max);
        let verdict = if max / normalizer < threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        DeviationReport {
            property,
            subsets_examined: records.len(),
            max_abs_deviation: max,
            mean_abs_deviation: mean,
            normalizer,
            worst_subset: worst.map(|w| w.members.clone()).unwrap_or_default(),
            threshold,
            verdict,
            records,
        }
    }
}

/// Target size of the examined subsets.
#[derive(Clone, Copy, Debug)]
enum SizeRule {
    Fixed(usize),
    /// Uniform in `⌈n/10⌉..=n` per random sample; adversarial sets keep
    /// their natural sizes.
    Spread,
}

/// First `size` entries of `priority`, padded with the smallest unused ids.
fn fit(priority: &[usize], size: usize, n: usize) -> Vec<usize> {
    let mut taken: Vec<usize> = priority.iter().copied().take(size).collect();
    if taken.len() < size {
        let mut have = vec![false; n];
        for &v in &taken {
            have[v] = true;
        }
        taken.extend((0..n).filter(|&v| !have[v]).take(size - taken.len()));
    }
    taken.sort_unstable();
    taken
}

fn adversarial_candidates(g: &Graph, rule: SizeRule) -> Vec<(Source, Vec<usize>)> {
    let n = g.n();
    let mut out: Vec<(Source, Vec<usize>)> = Vec::new();
    let mut push = |source: Source, priority: Vec<usize>| match rule {
        SizeRule::Fixed(size) => out.push((source, fit(&priority, size, n))),
        SizeRule::Spread => {
            let mut natural = priority;
            natural.sort_unstable();
            out.push((source, natural));
        }
    };

    if let SizeRule::Spread = rule {
        push(Source::Whole, (0..n).collect());
    }

    let mut comps = g.components();
    if comps.len() > 1 {
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let union = |idx: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
            idx.flat_map(|i| comps[i].iter().copied()).collect()
        };
        if comps.len() <= MAX_COMPONENTS_EXHAUSTIVE {
            for mask in 1u32..(1 << comps.len()) {
                let members = union(&mut (0..comps.len()).filter(|i| mask >> i & 1 == 1));
                push(Source::Component, members);
            }
        } else {
            let listed = comps.len().min(MAX_COMPONENTS_LISTED);
            for comp in &comps[..listed] {
                push(Source::Component, comp.clone());
            }
            for i in 2..=listed {
                push(Source::Component, union(&mut (0..i)));
            }
        }
    }

    let degrees = g.degree_sequence();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
    let mut by_degree_asc: Vec<usize> = (0..n).collect();
    by_degree_asc.sort_by(|&a, &b| degrees[a].cmp(&degrees[b]).then(a.cmp(&b)));
    match rule {
        SizeRule::Fixed(_) => {
            push(Source::DegreePrefix, by_degree.clone());
            push(Source::DegreePrefix, by_degree_asc.clone());
        }
        SizeRule::Spread => {
            for quarter in 1..=3 {
                let len = n * quarter / 4;
                push(Source::DegreePrefix, by_degree[..len].to_vec());
                push(Source::DegreePrefix, by_degree_asc[..len].to_vec());
            }
        }
    }

    for v in [by_degree.first(), by_degree_asc.first()]
        .into_iter()
        .flatten()
    {
        let mut closed = vec![*v];
        closed.extend(g.neighbors(*v));
        push(Source::Neighborhood, closed);
    }

    out
}

fn candidate_family(
    g: &Graph,
    rule: SizeRule,
    opts: &TestOptions,
    salt: u64,
) -> Result<Vec<(Source, VertexSubset)>> {
    let n = g.n();
    if let SizeRule::Fixed(size) = rule {
        if size > n {
            return Err(Error::Argument(format!(
                "subset size {size} exceeds n = {n}"
            )));
        }
    }
    let mut family = adversarial_candidates(g, rule);
    for i in 0..opts.samples {
        let mut rng = rng::derived_rng(opts.seed, &[stream::SUBSETS, salt, i as u64]);
        let size = match rule {
            SizeRule::Fixed(size) => size,
            SizeRule::Spread => {
                use rand::Rng;
                rng.random_range(n.div_ceil(10).min(n)..=n)
            }
        };
        family.push((Source::Random, rng::sample_indices(&mut rng, size, n)));
    }
    let mut seen = HashSet::new();
    Ok(family
        .into_iter()
        .filter(|(_, m)| !m.is_empty() && seen.insert(m.clone()))
        .map(|(s, m)| (s, VertexSubset::from_sorted(n, m)))
        .collect())
}

fn run<F>(
    g: &Graph,
    property: String,
    rule: SizeRule,
    normalizer: f64,
    opts: &TestOptions,
    salt: u64,
    measure: F,
) -> Result<DeviationReport>
where
    F: Fn(&VertexSubset) -> Result<(f64, f64)> + Sync + Send,
{
    let family = candidate_family(g, rule, opts, salt)?;
    let records = exec::try_map(opts.strategy, &family, |(source, u)| {
        let (statistic, expected) = measure(u)?;
        Ok(SubsetRecord {
            source: *source,
            members: u.members().to_vec(),
            statistic,
            expected,
            abs_deviation: (statistic - expected).abs(),
        })
    })?;
    Ok(DeviationReport::from_records(
        property,
        normalizer,
        opts.threshold,
        records,
    ))
}

fn sq(n: usize) -> f64 {
    let n = n as f64;
    n * n
}

/// `e(U)` and its expectation `p |U|^2 / 2`.
pub fn edge_statistic(g: &Graph, u: &VertexSubset, p: f64) -> Result<(f64, f64)> {
    let e = census::count_edges_within(g, u)? as f64;
    Ok((e, p * sq(u.len()) / 2.0))
}

/// `H[U]` and its expectation `p^r |U|^h`.
pub fn copy_statistic(
    g: &Graph,
    pattern: &Pattern,
    u: &VertexSubset,
    p: f64,
) -> Result<(f64, f64)> {
    let c = census::count_labeled_copies(g, pattern, u)? as f64;
    let expected = p.powi(pattern.r() as i32) * (u.len() as f64).powi(pattern.h() as i32);
    Ok((c, expected))
}

/// Global edge count and even-cycle count against `p n^2 / 2` and `p^t n^t`.
///
/// The report has normaliser 1: its two records hold the already normalised
/// deviations `|e(G) - p n^2/2| / n^2` and `|C_t[G] - p^t n^t| / n^t`, and the
/// verdict requires both to clear the threshold.
pub fn test_p1(
    g: &Graph,
    t: usize,
    params: &DensityParams,
    opts: &TestOptions,
) -> Result<DeviationReport> {
    if t != 4 && t != 6 {
        return Err(Error::Argument(format!(
            "cycle length must be 4 or 6, got {t}"
        )));
    }
    let n = g.n();
    let all = VertexSubset::full(n);
    let cycle = Pattern::cycle(t);
    let nn = sq(n);
    let edges = g.edge_count() as f64;
    let cycles = census::count_labeled_copies_with(g, &cycle, &all, opts.strategy)? as f64;
    let nt = (n as f64).powi(t as i32);
    let members: Vec<usize> = (0..n).collect();
    let records = vec![
        SubsetRecord {
            source: Source::Whole,
            members: members.clone(),
            statistic: edges / nn,
            expected: params.p / 2.0,
            abs_deviation: (edges / nn - params.p / 2.0).abs(),
        },
        SubsetRecord {
            source: Source::Whole,
            members,
            statistic: cycles / nt,
            expected: params.p.powi(t as i32),
            abs_deviation: (cycles / nt - params.p.powi(t as i32)).abs(),
        },
    ];
    let mut report =
        DeviationReport::from_records(format!("P1({t})"), 1.0, opts.threshold, records);
    // Both statistics describe the same (whole) vertex set.
    report.subsets_examined = 1;
    Ok(report)
}

/// `|e(U) - p |U|^2 / 2| / n^2` over subsets of spread sizes.
pub fn test_p2(g: &Graph, params: &DensityParams, opts: &TestOptions) -> Result<DeviationReport> {
    let p = params.p;
    run(g, "P2".into(), SizeRule::Spread, sq(g.n()), opts, 2, |u| {
        edge_statistic(g, u, p)
    })
}

/// As [`test_p2`] with every subset of size `⌊n/2⌋`.
pub fn test_p3(g: &Graph, params: &DensityParams, opts: &TestOptions) -> Result<DeviationReport> {
    let p = params.p;
    run(
        g,
        "P3".into(),
        SizeRule::Fixed(g.n() / 2),
        sq(g.n()),
        opts,
        3,
        |u| edge_statistic(g, u, p),
    )
}

/// `|e(U, V \ U) - p alpha (1 - alpha) n^2| / n^2` over subsets of size
/// `⌊alpha n⌋`; requires `alpha <= 1/2`.
pub fn test_p4(g: &Graph, params: &DensityParams, opts: &TestOptions) -> Result<DeviationReport> {
    let alpha = params.alpha;
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Argument(format!(
            "P4 needs alpha in (0, 1/2], got {alpha}"
        )));
    }
    let nn = sq(g.n());
    let expected = params.p * alpha * (1.0 - alpha) * nn;
    let size = params.subset_size(g.n());
    run(
        g,
        format!("P4({alpha})"),
        SizeRule::Fixed(size),
        nn,
        opts,
        4,
        |u| Ok((census::count_cut(g, u)? as f64, expected)),
    )
}

/// `|H[U] - p^r |U|^h| / n^h` over subsets of size `⌊alpha n⌋`.
pub fn test_ph_alpha(
    g: &Graph,
    pattern: &Pattern,
    params: &DensityParams,
    opts: &TestOptions,
) -> Result<DeviationReport> {
    let size = params.subset_size(g.n());
    let property = format!("P[{},{}]", pattern.name(), params.alpha);
    copy_test(g, pattern, params.p, size, property, opts, 6)
}

fn copy_test(
    g: &Graph,
    pattern: &Pattern,
    p: f64,
    size: usize,
    property: String,
    opts: &TestOptions,
    salt: u64,
) -> Result<DeviationReport> {
    let normalizer = (g.n() as f64).powi(pattern.h() as i32);
    run(
        g,
        property,
        SizeRule::Fixed(size),
        normalizer,
        opts,
        salt,
        |u| copy_statistic(g, pattern, u, p),
    )
}

/// Runs the copy tester at each requested subset size.
pub fn sweep_ph(
    g: &Graph,
    pattern: &Pattern,
    params: &DensityParams,
    sizes: &[usize],
    opts: &TestOptions,
) -> Result<Vec<DeviationReport>> {
    let n = g.n();
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::Argument(format!("sweep size {bad} outside 1..={n}")));
    }
    sizes
        .iter()
        .map(|&size| {
            let property = format!("P[{}]@{}", pattern.name(), size);
            let salt = rng::derive_seed(stream::SWEEP, &[size as u64]);
            copy_test(g, pattern, params.p, size, property, opts, salt)
        })
        .collect()
}
