//! Recovering `H[W]` from copy counts measured on other vertex sets.
//!
//! Two routes, depending on how `m = |W|` compares with `k = ⌊alpha n⌋`:
//!
//! * `m > k`: every copy inside `W` lies in exactly `C(m-h, k-h)` of the
//!   `k`-subsets of `W`, so summing `H[U]` over those subsets and dividing
//!   gives `H[W]` ([`averaging_estimate`]).
//! * `m < k`: grow `W` by random sets `Y_i` of outside vertices to sizes
//!   `k_i = k + i ⌊lambda n⌋`, `lambda = (1 - alpha) / (h + 1)`. A copy with
//!   `j` vertices outside `W` survives in `K_i = W ∪ Y_i` with a hypergeometric
//!   probability that is a degree-`j` polynomial in `x_i = (k_i - m)/(n - m)`
//!   with zero constant term. The averaged `H[K_i] / n^h`, together with
//!   `H[V] / n^h` at node 1, therefore interpolate a degree-`h` polynomial whose
//!   constant coefficient is `w_0 = H[W] / n^h`. Solving the Vandermonde system
//!   on nodes `(x_1, ..., x_h, 1)` recovers it ([`stratified_reconstruct`]).
//!
//! For a `G(n, p)`-like host the solved weights should sit near the binomial
//! reference `w_j* = p^r C(h, j) beta^(h-j) (1 - beta)^j`.

use itertools::Itertools;
use serde::Serialize;

use crate::census::{self, count_labeled_copies};
use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::graph::{Graph, Pattern, VertexSubset};
use crate::quasitest::DensityParams;
use crate::rng::{self, stream};

/// Exact averaging enumerates at most this many `k`-subsets.
pub const MAX_EXACT_SUBSETS: u128 = 1_000_000;
/// Largest pattern accepted by the Vandermonde route.
pub const MAX_PATTERN_VERTICES: usize = 10;
pub const DEFAULT_REPLICATES: usize = 50;
/// Below this `beta = m / n` the prediction is the analytic `p^r m^h`.
pub const TRIVIAL_BETA: f64 = 0.05;
pub const DEFAULT_AVERAGING_SAMPLES: usize = 200;

/// `C(n, k)` in `u128`, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AveragingMode {
    /// Sum over all `C(m, k)` subsets.
    Exact,
    /// Mean over `samples` uniform `k`-subsets, scaled by `C(m,k) / C(m-h,k-h)`.
    Sampled { samples: usize },
}

fn check_averaging(pattern: &Pattern, w: &VertexSubset, k: usize) -> Result<()> {
    let m = w.len();
    if m <= k {
        return Err(Error::Argument(format!(
            "averaging needs |W| = {m} > k = {k}"
        )));
    }
    if k < pattern.h() {
        return Err(Error::Argument(format!(
            "averaging needs k = {k} >= h = {}",
            pattern.h()
        )));
    }
    Ok(())
}

/// Exact `(Σ_U H[U], C(m-h, k-h))` over all `k`-subsets `U` of `w`.
pub fn averaging_sum(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
    k: usize,
    strategy: Strategy,
) -> Result<(u128, u128)> {
    g.check_subset(w)?;
    check_averaging(pattern, w, k)?;
    let (m, h) = (w.len() as u64, pattern.h() as u64);
    let subsets = binomial(m, k as u64)
        .filter(|&c| c <= MAX_EXACT_SUBSETS)
        .ok_or_else(|| {
            Error::Refused(format!(
                "exact averaging over C({m}, {k}) subsets exceeds {MAX_EXACT_SUBSETS}"
            ))
        })?;
    let divisor = binomial(m - h, k as u64 - h).expect("smaller than C(m, k)");
    let combos: Vec<Vec<usize>> = w.members().iter().copied().combinations(k).collect();
    debug_assert_eq!(combos.len() as u128, subsets);
    let n = g.n();
    let counts = exec::try_map(strategy, &combos, |members| {
        count_labeled_copies(g, pattern, &VertexSubset::from_sorted(n, members.clone()))
    })?;
    Ok((counts.into_iter().map(u128::from).sum(), divisor))
}

/// Estimate of `H[W]` from copy counts on `k`-subsets of `w`.
///
/// In exact mode the result equals `H[W]`.
pub fn averaging_estimate(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
    k: usize,
    mode: AveragingMode,
    seed: u64,
    strategy: Strategy,
) -> Result<f64> {
    match mode {
        AveragingMode::Exact => {
            let (sum, divisor) = averaging_sum(g, pattern, w, k, strategy)?;
            debug_assert_eq!(sum % divisor, 0);
            Ok((sum / divisor) as f64)
        }
        AveragingMode::Sampled { samples } => {
            g.check_subset(w)?;
            check_averaging(pattern, w, k)?;
            if samples == 0 {
                return Err(Error::Argument(
                    "sampled averaging needs samples >= 1".into(),
                ));
            }
            let idx: Vec<u64> = (0..samples as u64).collect();
            let n = g.n();
            let counts = exec::try_map(strategy, &idx, |&i| {
                let mut rng = rng::derived_rng(seed, &[stream::AVERAGING, i]);
                let picks = rng::sample_indices(&mut rng, k, w.len());
                let members = picks.into_iter().map(|j| w.members()[j]).collect();
                count_labeled_copies(g, pattern, &VertexSubset::from_sorted(n, members))
            })?;
            let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / samples as f64;
            // C(m, k) / C(m-h, k-h) = m (m-1) ... (m-h+1) / (k (k-1) ... (k-h+1))
            let ratio: f64 = (0..pattern.h())
                .map(|i| (w.len() - i) as f64 / (k - i) as f64)
                .product();
            Ok(mean * ratio)
        }
    }
}

/// `lambda = (1 - alpha) / (h + 1)`.
pub fn lambda(alpha: f64, h: usize) -> f64 {
    (1.0 - alpha) / (h as f64 + 1.0)
}

/// Nodes `x_i = (alpha - beta)/(1 - beta) + i lambda/(1 - beta)` for
/// `i = 1..=h`, followed by the node 1.
pub fn vandermonde_nodes(alpha: f64, beta: f64, h: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::Argument(format!(
            "nodes need 0 < beta < alpha, got beta = {beta}, alpha = {alpha}"
        )));
    }
    if h == 0 {
        return Err(Error::Argument("h must be positive".into()));
    }
    let lam = lambda(alpha, h);
    let mut nodes: Vec<f64> = (1..=h)
        .map(|i| (alpha - beta) / (1.0 - beta) + lam * i as f64 / (1.0 - beta))
        .collect();
    nodes.push(1.0);
    Ok(nodes)
}

/// `p_{j,i}`: probability that `j` given vertices outside `W` (`|W| = m`) all
/// land in a uniform `(k_i - m)`-subset of the `n - m` outside vertices.
pub fn survival_probability(n: usize, m: usize, k_i: usize, j: usize) -> Result<f64> {
    if m > k_i || k_i > n || j > n - m {
        return Err(Error::Argument(format!(
            "survival probability needs m <= k_i <= n and j <= n - m (n={n}, m={m}, k_i={k_i}, j={j})"
        )));
    }
    let (drawn, pool) = (k_i - m, n - m);
    if drawn < j {
        return Ok(0.0);
    }
    Ok((0..j)
        .map(|t| (drawn - t) as f64 / (pool - t) as f64)
        .product())
}

/// `w_j* = p^r C(h, j) beta^(h-j) (1 - beta)^j`.
pub fn binomial_reference(p: f64, r: usize, beta: f64, h: usize) -> Vec<f64> {
    let pr = p.powi(r as i32);
    (0..=h)
        .map(|j| {
            let c = binomial(h as u64, j as u64).expect("small binomial") as f64;
            pr * c * beta.powi((h - j) as i32) * (1.0 - beta).powi(j as i32)
        })
        .collect()
}

/// `Σ_j x_i^j w_j = b_i` with rows over the nodes `(x_1, ..., x_h, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VandermondeSystem {
    pub nodes: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Minimum gap between consecutive nodes.
    pub separation: f64,
}

impl VandermondeSystem {
    pub fn new(nodes: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != rhs.len() {
            return Err(Error::Argument(format!(
                "system needs matching non-empty nodes and rhs ({} vs {})",
                nodes.len(),
                rhs.len()
            )));
        }
        if nodes.len() > MAX_PATTERN_VERTICES + 1 {
            return Err(Error::Argument(format!(
                "at most {} nodes supported",
                MAX_PATTERN_VERTICES + 1
            )));
        }
        let separation = nodes
            .iter()
            .tuple_combinations()
            .map(|(a, b)| (a - b).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(VandermondeSystem {
            nodes,
            rhs,
            separation,
        })
    }

    /// Row `i` is `(x_i^0, ..., x_i^h)`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let size = self.nodes.len();
        self.nodes
            .iter()
            .map(|&x| (0..size).map(|j| x.powi(j as i32)).collect())
            .collect()
    }

    pub fn apply(&self, weights: &[f64]) -> Vec<f64> {
        self.matrix()
            .iter()
            .map(|row| row.iter().zip(weights).map(|(a, w)| a * w).sum())
            .collect()
    }
}

/// Monomial coefficients of the polynomial through `(nodes[i], rhs[i])`.
///
/// Newton divided differences followed by conversion to the monomial basis,
/// `O(h^2)` operations.
pub fn solve_vandermonde(system: &VandermondeSystem) -> Result<Vec<f64>> {
    let x = &system.nodes;
    if system.separation.is_nan() || system.separation <= 0.0 {
        return Err(Error::Singular("Vandermonde nodes are not distinct".into()));
    }
    let size = x.len();
    let mut a = system.rhs.clone();
    for k in 0..size - 1 {
        for i in (k + 1..size).rev() {
            a[i] = (a[i] - a[i - 1]) / (x[i] - x[i - k - 1]);
        }
    }
    for k in (0..size - 1).rev() {
        for i in k..size - 1 {
            a[i] -= a[i + 1] * x[k];
        }
    }
    Ok(a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Solved from measured counts.
    Stratified,
    /// `beta` below the trivial cut-off; analytic prediction only.
    TrivialRegime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionParams {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub k_sizes: Vec<usize>,
    pub p: f64,
    pub h: usize,
    pub r: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub weights: Vec<f64>,
    pub reference: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `weights[0] n^h`.
    pub predicted_count: f64,
    pub actual_count: Option<u64>,
    pub nodes: Vec<f64>,
    pub separation: f64,
    pub replicates: usize,
    pub regime: Regime,
    pub params: ReconstructionParams,
    /// Right-hand side: mean `H[K_i] / n^h`, then `H[V] / n^h`.
    pub rhs: Vec<f64>,
    /// Every sampled `K_i` held exactly `H[W]` copies inside `W`.
    pub inner_count_consistent: bool,
}

impl ReconstructionReport {
    pub fn relative_error(&self) -> Option<f64> {
        self.actual_count
            .map(|a| (self.predicted_count - a as f64).abs() / a as f64)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReconstructOptions {
    pub replicates: usize,
    pub seed: u64,
    pub trivial_beta: f64,
    /// Sample count for the averaging route of [`predict_hw`].
    pub averaging_samples: usize,
    pub strategy: Strategy,
}

impl ReconstructOptions {
    pub fn new(replicates: usize, seed: u64) -> Self {
        ReconstructOptions {
            replicates,
            seed,
            trivial_beta: TRIVIAL_BETA,
            averaging_samples: DEFAULT_AVERAGING_SAMPLES,
            strategy: Strategy::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }
}

/// Set sizes `k_i = k + i ⌊lambda n⌋`, clamped to `n`.
pub fn extension_sizes(n: usize, k: usize, h: usize, alpha: f64) -> Vec<usize> {
    let step = (lambda(alpha, h) * n as f64).floor() as usize;
    (1..=h).map(|i| (k + i * step).min(n)).collect()
}

/// Replicate-averaged `H[K_i]` for `W` grown to each size in `k_sizes`.
///
/// Returns the means and whether every `K_i` contained exactly `inner`
/// copies entirely inside `W`.
fn measure_extensions(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
    k_sizes: &[usize],
    inner: u64,
    opts: &ReconstructOptions,
) -> Result<(Vec<f64>, bool)> {
    let n = g.n();
    let outside = w.complement();
    let jobs: Vec<(usize, usize)> = (0..k_sizes.len())
        .flat_map(|i| (0..opts.replicates).map(move |rep| (i, rep)))
        .collect();
    let measured = exec::try_map(opts.strategy, &jobs, |&(i, rep)| {
        let mut rng = rng::derived_rng(opts.seed, &[stream::REPLICATES, i as u64 + 1, rep as u64]);
        let picks = rng::sample_indices(&mut rng, k_sizes[i] - w.len(), outside.len());
        let y =
            VertexSubset::from_sorted(n, picks.into_iter().map(|j| outside.members()[j]).collect());
        let k_set = y.union(w)?;
        let sc = census::stratified_census_within(g, pattern, &k_set, w)?;
        Ok((sc.total, sc.counts[0] == inner))
    })?;
    let mut sums = vec![0u128; k_sizes.len()];
    let mut consistent = true;
    for (&(i, _), &(total, ok)) in jobs.iter().zip(&measured) {
        sums[i] += u128::from(total);
        consistent &= ok;
    }
    let means = sums
        .into_iter()
        .map(|s| s as f64 / opts.replicates as f64)
        .collect();
    Ok((means, consistent))
}

/// Predicts `H[W]` for `|W| < ⌊alpha n⌋` by solving the stratified
/// Vandermonde system built from measured counts on random extensions of `W`.
pub fn stratified_reconstruct(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
    params: &DensityParams,
    opts: &ReconstructOptions,
) -> Result<ReconstructionReport> {
    g.check_subset(w)?;
    let (n, m, h) = (g.n(), w.len(), pattern.h());
    let k = params.subset_size(n);
    if h > MAX_PATTERN_VERTICES {
        return Err(Error::Argument(format!(
            "reconstruction supports h <= {MAX_PATTERN_VERTICES}, got {h}"
        )));
    }
    if m == 0 {
        return Err(Error::Argument("target set W must be non-empty".into()));
    }
    if m >= k {
        return Err(Error::Argument(format!(
            "stratified reconstruction needs |W| = {m} < ⌊alpha n⌋ = {k}"
        )));
    }
    if opts.replicates == 0 {
        return Err(Error::Argument("replicates must be >= 1".into()));
    }
    let k_sizes = extension_sizes(n, k, h, params.alpha);
    if k_sizes.windows(2).any(|s| s[0] >= s[1]) || k_sizes[h - 1] >= n {
        return Err(Error::Argument(format!(
            "n = {n} too small for {h} distinct extension sizes above k = {k} (got {k_sizes:?})"
        )));
    }

    let beta = m as f64 / n as f64;
    let scale = (n as f64).powi(h as i32);
    let reference = binomial_reference(params.p, pattern.r(), beta, h);
    let mut nodes: Vec<f64> = k_sizes
        .iter()
        .map(|&ki| (ki - m) as f64 / (n - m) as f64)
        .collect();
    nodes.push(1.0);
    let actual = count_labeled_copies(g, pattern, w)?;
    let report_params = ReconstructionParams {
        alpha: params.alpha,
        beta,
        lambda: lambda(params.alpha, h),
        n,
        m,
        k,
        k_sizes: k_sizes.clone(),
        p: params.p,
        h,
        r: pattern.r(),
    };

    if beta < opts.trivial_beta {
        let system = VandermondeSystem::new(nodes, vec![0.0; h + 1])?;
        return Ok(ReconstructionReport {
            weights: reference.clone(),
            residuals: vec![0.0; h + 1],
            predicted_count: params.p.powi(pattern.r() as i32) * (m as f64).powi(h as i32),
            reference,
            actual_count: Some(actual),
            nodes: system.nodes,
            separation: system.separation,
            replicates: 0,
            regime: Regime::TrivialRegime,
            params: report_params,
            rhs: Vec::new(),
            inner_count_consistent: true,
        });
    }

    let (means, consistent) = measure_extensions(g, pattern, w, &k_sizes, actual, opts)?;
    let total =
        census::count_labeled_copies_with(g, pattern, &VertexSubset::full(n), opts.strategy)?;
    let mut rhs: Vec<f64> = means.iter().map(|c| c / scale).collect();
    rhs.push(total as f64 / scale);
    let system = VandermondeSystem::new(nodes, rhs)?;
    let weights = solve_vandermonde(&system)?;
    let residuals = weights.iter().zip(&reference).map(|(w, r)| w - r).collect();
    Ok(ReconstructionReport {
        predicted_count: weights[0] * scale,
        weights,
        reference,
        residuals,
        actual_count: Some(actual),
        nodes: system.nodes,
        separation: system.separation,
        replicates: opts.replicates,
        regime: Regime::Stratified,
        params: report_params,
        rhs: system.rhs,
        inner_count_consistent: consistent,
    })
}

/// Which estimator [`predict_hw`] uses for a target of size `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Averaging,
    Direct,
    Stratified,
}

pub fn route_for(m: usize, k: usize) -> Route {
    match m.cmp(&k) {
        std::cmp::Ordering::Greater => Route::Averaging,
        std::cmp::Ordering::Equal => Route::Direct,
        std::cmp::Ordering::Less => Route::Stratified,
    }
}

/// Predicted `H[W]`: sampled averaging above `⌊alpha n⌋`, direct census at
/// it, stratified reconstruction below.
pub fn predict_hw(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
    params: &DensityParams,
    opts: &ReconstructOptions,
) -> Result<f64> {
    let k = params.subset_size(g.n());
    match route_for(w.len(), k) {
        Route::Direct => Ok(count_labeled_copies(g, pattern, w)? as f64),
        Route::Averaging => averaging_estimate(
            g,
            pattern,
            w,
            k,
            AveragingMode::Sampled {
                samples: opts.averaging_samples,
            },
            opts.seed,
            opts.strategy,
        ),
        Route::Stratified => {
            Ok(stratified_reconstruct(g, pattern, w, params, opts)?.predicted_count)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GenSpec;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 6), Some(84));
        assert_eq!(binomial(12, 9), Some(220));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(100, 50), Some(100891344545564193334812497256));
    }

    #[test]
    fn averaging_on_k4() {
        let g = Graph::complete(4);
        let k2 = Pattern::complete(2);
        let all = VertexSubset::full(4);
        let (sum, div) = averaging_sum(&g, &k2, &all, 3, Strategy::Sequential).unwrap();
        assert_eq!((sum, div), (24, 2));
        let est = averaging_estimate(
            &g,
            &k2,
            &all,
            3,
            AveragingMode::Exact,
            0,
            Strategy::Sequential,
        )
        .unwrap();
        assert_eq!(est, 12.0);
    }

    #[test]
    fn averaging_without_copies_is_zero() {
        let g = Graph::empty(8);
        let w = VertexSubset::full(8);
        let est = averaging_estimate(
            &g,
            &Pattern::complete(3),
            &w,
            5,
            AveragingMode::Exact,
            0,
            Strategy::Sequential,
        )
        .unwrap();
        assert_eq!(est, 0.0);
    }

    #[test]
    fn averaging_exact_matches_direct_count() {
        let g = GenSpec::Gnp {
            n: 14,
            p: 0.5,
            seed: 2,
        }
        .generate()
        .unwrap();
        let k3 = Pattern::complete(3);
        let all = VertexSubset::full(14);
        let est = averaging_estimate(
            &g,
            &k3,
            &all,
            10,
            AveragingMode::Exact,
            0,
            Strategy::Parallel,
        )
        .unwrap();
        assert_eq!(est, count_labeled_copies(&g, &k3, &all).unwrap() as f64);
    }

    #[test]
    fn averaging_errors() {
        let g = Graph::complete(30);
        let k2 = Pattern::complete(2);
        let w = VertexSubset::new(30, 0..5).unwrap();
        let exact = AveragingMode::Exact;
        assert!(matches!(
            averaging_estimate(&g, &k2, &w, 5, exact, 0, Strategy::Sequential),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            averaging_estimate(
                &g,
                &Pattern::complete(3),
                &w,
                2,
                exact,
                0,
                Strategy::Sequential
            ),
            Err(Error::Argument(_))
        ));
        let all = VertexSubset::full(30);
        assert!(matches!(
            averaging_estimate(&g, &k2, &all, 15, exact, 0, Strategy::Sequential),
            Err(Error::Refused(_))
        ));
    }

    #[test]
    fn sampled_averaging_is_close() {
        let g = GenSpec::Gnp {
            n: 40,
            p: 0.5,
            seed: 6,
        }
        .generate()
        .unwrap();
        let k2 = Pattern::complete(2);
        let all = VertexSubset::full(40);
        let est = averaging_estimate(
            &g,
            &k2,
            &all,
            20,
            AveragingMode::Sampled { samples: 400 },
            1,
            Strategy::Parallel,
        )
        .unwrap();
        let direct = count_labeled_copies(&g, &k2, &all).unwrap() as f64;
        assert!((est - direct).abs() / direct < 0.03, "{est} vs {direct}");
    }

    #[test]
    fn nodes_example() {
        let nodes = vandermonde_nodes(0.5, 0.25, 2).unwrap();
        assert!(close(nodes[0], 5.0 / 9.0, 1e-15));
        assert!(close(nodes[1], 7.0 / 9.0, 1e-15));
        assert_eq!(nodes[2], 1.0);
        let sys = VandermondeSystem::new(nodes, vec![0.0; 3]).unwrap();
        assert!(close(sys.separation, 2.0 / 9.0, 1e-15));

        let tiny = vandermonde_nodes(0.5, 1e-12, 3).unwrap();
        for i in 1..=3 {
            assert!(close(tiny[i - 1], 0.5 + lambda(0.5, 3) * i as f64, 1e-11));
        }
        assert!(vandermonde_nodes(0.5, 0.5, 2).is_err());
        assert!(vandermonde_nodes(0.5, 0.6, 2).is_err());
    }

    #[test]
    fn survival_probabilities() {
        assert_eq!(survival_probability(10, 4, 7, 0).unwrap(), 1.0);
        assert!(close(
            survival_probability(10, 4, 7, 1).unwrap(),
            0.5,
            1e-15
        ));
        assert!(close(
            survival_probability(10, 4, 7, 2).unwrap(),
            0.2,
            1e-15
        ));
        assert_eq!(survival_probability(10, 4, 5, 2).unwrap(), 0.0);
        assert!(survival_probability(10, 8, 7, 1).is_err());
        assert!(survival_probability(10, 4, 11, 1).is_err());
        assert!(survival_probability(10, 4, 7, 7).is_err());
    }

    #[test]
    fn survival_matches_hypergeometric_ratio() {
        // C(n-m-j, k-m-j) / C(n-m, k-m)
        for (n, m, ki, j) in [(20, 5, 12, 3), (30, 10, 25, 4), (12, 0, 6, 2)] {
            let num = binomial((n - m - j) as u64, (ki - m - j) as u64).unwrap() as f64;
            let den = binomial((n - m) as u64, (ki - m) as u64).unwrap() as f64;
            assert!(close(
                survival_probability(n, m, ki, j).unwrap(),
                num / den,
                1e-14
            ));
        }
    }

    #[test]
    fn solve_examples() {
        let nodes = vec![5.0 / 9.0, 7.0 / 9.0, 1.0];
        let rhs: Vec<f64> = nodes.iter().map(|x| x * x).collect();
        let w = solve_vandermonde(&VandermondeSystem::new(nodes.clone(), rhs).unwrap()).unwrap();
        assert!(close(w[0], 0.0, 1e-14) && close(w[1], 0.0, 1e-14) && close(w[2], 1.0, 1e-14));

        let w = solve_vandermonde(&VandermondeSystem::new(nodes, vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(w, vec![0.0; 3]);

        let dup = VandermondeSystem::new(vec![0.5, 0.5, 1.0], vec![1.0; 3]).unwrap();
        assert!(matches!(solve_vandermonde(&dup), Err(Error::Singular(_))));
    }

    #[test]
    fn solve_recovers_reference_weights() {
        let (alpha, beta, p) = (0.5, 0.25, 0.5);
        for h in 1..=8 {
            let reference = binomial_reference(p, 3, beta, h);
            let nodes = vandermonde_nodes(alpha, beta, h).unwrap();
            let mut sys = VandermondeSystem::new(nodes, vec![0.0; h + 1]).unwrap();
            sys.rhs = sys.apply(&reference);
            let solved = solve_vandermonde(&sys).unwrap();
            for (a, b) in solved.iter().zip(&reference) {
                assert!(close(*a, *b, 1e-8), "h={h}: {solved:?} vs {reference:?}");
            }
        }
    }

    #[test]
    fn reference_examples() {
        let w = binomial_reference(0.5, 1, 0.5, 2);
        assert_eq!(w, vec![0.125, 0.25, 0.125]);
        assert_eq!(w.iter().sum::<f64>(), 0.5);
        assert_eq!(binomial_reference(0.5, 3, 0.5, 3)[0], 1.0 / 64.0);
    }

    #[test]
    fn noiseless_system_gives_binomial_weights() {
        // rhs built from p^r (alpha + lambda i)^h and p^r
        let (alpha, beta, p, r, h): (f64, f64, f64, i32, usize) = (0.6, 0.3, 0.5, 3, 3);
        let lam = lambda(alpha, h);
        let mut rhs: Vec<f64> = (1..=h)
            .map(|i| p.powi(r) * (alpha + lam * i as f64).powi(h as i32))
            .collect();
        rhs.push(p.powi(r));
        let sys = VandermondeSystem::new(vandermonde_nodes(alpha, beta, h).unwrap(), rhs).unwrap();
        let w = solve_vandermonde(&sys).unwrap();
        assert!(close(w[0], p.powi(r) * beta.powi(h as i32), 1e-12));
        let sum: f64 = w.iter().sum();
        assert!(close(sum, p.powi(r), 1e-12));
    }

    #[test]
    fn reconstruct_preconditions_and_trivial_regime() {
        let g = GenSpec::Gnp {
            n: 100,
            p: 0.5,
            seed: 1,
        }
        .generate()
        .unwrap();
        let k2 = Pattern::complete(2);
        let params = DensityParams::new(0.5, 0.6).unwrap();
        let opts = ReconstructOptions::new(5, 0);
        let empty = VertexSubset::empty(100);
        assert!(stratified_reconstruct(&g, &k2, &empty, &params, &opts).is_err());
        let big = VertexSubset::new(100, 0..60).unwrap();
        assert!(stratified_reconstruct(&g, &k2, &big, &params, &opts).is_err());

        let tiny = VertexSubset::new(100, 0..3).unwrap();
        let rep = stratified_reconstruct(&g, &k2, &tiny, &params, &opts).unwrap();
        assert_eq!(rep.regime, Regime::TrivialRegime);
        assert!(close(rep.predicted_count, 0.5 * 9.0, 1e-12));
    }

    #[test]
    fn reconstruct_small_graph_is_consistent() {
        let g = GenSpec::Gnp {
            n: 60,
            p: 0.5,
            seed: 3,
        }
        .generate()
        .unwrap();
        let k2 = Pattern::complete(2);
        let params = DensityParams::new(0.5, 0.6).unwrap();
        let w = VertexSubset::new(60, 0..18).unwrap();
        let seq = stratified_reconstruct(
            &g,
            &k2,
            &w,
            &params,
            &ReconstructOptions::new(20, 4).with_strategy(Strategy::Sequential),
        )
        .unwrap();
        let par = stratified_reconstruct(
            &g,
            &k2,
            &w,
            &params,
            &ReconstructOptions::new(20, 4).with_strategy(Strategy::Parallel),
        )
        .unwrap();
        assert_eq!(seq, par);
        assert!(seq.inner_count_consistent);
        assert_eq!(seq.regime, Regime::Stratified);
        // node-1 row restates the total
        assert!(close(
            seq.weights.iter().sum::<f64>(),
            *seq.rhs.last().unwrap(),
            1e-12
        ));
        assert!(close(seq.predicted_count, seq.weights[0] * 3600.0, 1e-9));
    }

    #[test]
    fn exact_expectations_recover_inner_count() {
        // Feeding E[H[K_i]] = Σ_j p_{j,i} c_j (exact survival probabilities)
        // into the monomial system returns w_0 = H[W] / n^h exactly, since
        // every p_{j,i} is a polynomial in x_i with no constant term.
        let g = GenSpec::Gnp {
            n: 40,
            p: 0.5,
            seed: 12,
        }
        .generate()
        .unwrap();
        let k3 = Pattern::complete(3);
        let w = VertexSubset::new(40, 0..8).unwrap();
        let sc = census::stratified_census(&g, &k3, &w).unwrap();
        let (n, m, k) = (40, 8, 20);
        let k_sizes = extension_sizes(n, k, 3, 0.5);
        let mut rhs: Vec<f64> = k_sizes
            .iter()
            .map(|&ki| {
                (0..=3)
                    .map(|j| survival_probability(n, m, ki, j).unwrap() * sc.counts[j] as f64)
                    .sum::<f64>()
                    / 64000.0
            })
            .collect();
        rhs.push(sc.total as f64 / 64000.0);
        let mut nodes: Vec<f64> = k_sizes
            .iter()
            .map(|&ki| (ki - m) as f64 / (n - m) as f64)
            .collect();
        nodes.push(1.0);
        let weights = solve_vandermonde(&VandermondeSystem::new(nodes, rhs).unwrap()).unwrap();
        assert!(close(weights[0] * 64000.0, sc.counts[0] as f64, 1e-6));
    }

    #[test]
    fn prediction_routes() {
        let g = GenSpec::Gnp {
            n: 50,
            p: 0.5,
            seed: 8,
        }
        .generate()
        .unwrap();
        let k2 = Pattern::complete(2);
        let params = DensityParams::new(0.5, 0.5).unwrap();
        let opts = ReconstructOptions::new(10, 2);
        let w = VertexSubset::new(50, 0..25).unwrap();
        let direct = count_labeled_copies(&g, &k2, &w).unwrap() as f64;
        assert_eq!(predict_hw(&g, &k2, &w, &params, &opts).unwrap(), direct);
        assert_eq!(route_for(30, 25), Route::Averaging);
        assert_eq!(route_for(10, 25), Route::Stratified);
        let all = VertexSubset::full(50);
        let est = predict_hw(&g, &k2, &all, &params, &opts).unwrap();
        let hv = count_labeled_copies(&g, &k2, &all).unwrap() as f64;
        assert!((est - hv).abs() / hv < 0.05);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reference_generating_identity(
                h in 1usize..=6,
                beta in 0.05f64..0.95,
                x in 0.0f64..2.0,
                p in 0.1f64..0.9,
                r in 1usize..=6,
            ) {
                let w = binomial_reference(p, r, beta, h);
                let lhs: f64 = w.iter().enumerate().map(|(j, wj)| x.powi(j as i32) * wj).sum();
                let rhs = p.powi(r as i32) * (beta + x * (1.0 - beta)).powi(h as i32);
                prop_assert!((lhs - rhs).abs() <= 1e-10);
            }

            #[test]
            fn node_separation(
                alpha in 0.05f64..0.95,
                frac in 0.01f64..0.99,
                h in 1usize..=8,
            ) {
                let beta = alpha * frac;
                let sys = VandermondeSystem::new(
                    vandermonde_nodes(alpha, beta, h).unwrap(),
                    vec![0.0; h + 1],
                ).unwrap();
                prop_assert!(sys.separation >= (1.0 - alpha) / (h as f64 + 1.0) - 1e-12);
                prop_assert!(sys.nodes.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(*sys.nodes.last().unwrap(), 1.0);
            }

            #[test]
            fn solve_interpolates(coeffs in prop::collection::vec(-5.0f64..5.0, 1..=7)) {
                let h = coeffs.len() - 1;
                let nodes = if h == 0 { vec![1.0] } else { vandermonde_nodes(0.5, 0.2, h).unwrap() };
                let mut sys = VandermondeSystem::new(nodes, vec![0.0; h + 1]).unwrap();
                sys.rhs = sys.apply(&coeffs);
                let solved = solve_vandermonde(&sys).unwrap();
                for (a, b) in solved.iter().zip(&coeffs) {
                    prop_assert!((a - b).abs() < 1e-7, "{:?} vs {:?}", solved, coeffs);
                }
            }
        }
    }
}
