//! Exact labeled-copy counting.
//!
//! `H[U]` is the number of injective maps `phi: V(H) -> U` with
//! `{phi(x), phi(y)}` an edge of `G` for every edge `{x, y}` of `H`. Copies are
//! labeled: automorphisms of `H` are not factored out, and non-edges of `H`
//! impose nothing (these are not induced copies).
//!
//! The counter backtracks over pattern vertices in a connected greedy order.
//! The candidate set for the next pattern vertex is the subset mask
//! intersected with the adjacency rows of the images of its already placed
//! neighbours, minus the vertices already used. The last level is counted with
//! a popcount instead of being enumerated.
//!
//! Desk-scale ceilings: `n <= 5000` for `K_2`, `n <= 500` for three-vertex
//! patterns, `n <= 120` for four-vertex patterns.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::graph::{Graph, Pattern, VertexSubset};

/// Placement order for the pattern vertices plus, per position, the earlier
/// positions it must be adjacent to.
#[derive(Clone, Debug)]
struct Plan {
    order: Vec<usize>,
    back: Vec<Vec<usize>>,
}

impl Plan {
    fn new(pattern: &Pattern) -> Plan {
        let h = pattern.h();
        let mut placed = vec![false; h];
        let mut order = Vec::with_capacity(h);
        while order.len() < h {
            // Most links to placed vertices first, then highest degree, then lowest id.
            let next = (0..h)
                .filter(|&v| !placed[v])
                .max_by_key(|&v| {
                    let links = order.iter().filter(|&&u| pattern.adjacent(u, v)).count();
                    (links, pattern.degree(v), std::cmp::Reverse(v))
                })
                .expect("unplaced vertex exists");
            placed[next] = true;
            order.push(next);
        }
        let back = (0..h)
            .map(|i| {
                (0..i)
                    .filter(|&j| pattern.adjacent(order[i], order[j]))
                    .collect()
            })
            .collect();
        Plan { order, back }
    }

    fn len(&self) -> usize {
        self.order.len()
    }
}

fn check_capacity(size: usize, h: usize) -> Result<()> {
    (size as u64)
        .checked_pow(h as u32)
        .map(|_| ())
        .ok_or_else(|| Error::Overflow(format!("{size}^{h} labeled copies exceed 64 bits")))
}

/// Reusable per-task buffers: one candidate row per depth.
struct Scratch {
    cand: Vec<Vec<u64>>,
    images: Vec<usize>,
}

impl Scratch {
    fn new(h: usize, words: usize) -> Scratch {
        Scratch {
            cand: vec![vec![0; words]; h],
            images: vec![0; h],
        }
    }
}

#[inline]
fn fill_candidates(g: &Graph, plan: &Plan, depth: usize, base: &[u64], s: &mut Scratch) {
    let out = &mut s.cand[depth];
    out.copy_from_slice(base);
    for &j in &plan.back[depth] {
        for (o, r) in out.iter_mut().zip(g.row(s.images[j])) {
            *o &= r;
        }
    }
    for &v in &s.images[..depth] {
        out[v / 64] &= !(1u64 << (v % 64));
    }
}

fn count_from(g: &Graph, plan: &Plan, depth: usize, base: &[u64], s: &mut Scratch) -> u64 {
    fill_candidates(g, plan, depth, base, s);
    if depth + 1 == plan.len() {
        return s.cand[depth].iter().map(|w| w.count_ones() as u64).sum();
    }
    let mut total = 0;
    let mut i = 0;
    while i < s.cand[depth].len() {
        let mut word = s.cand[depth][i];
        while word != 0 {
            let v = i * 64 + word.trailing_zeros() as usize;
            word &= word - 1;
            s.images[depth] = v;
            total += count_from(g, plan, depth + 1, base, s);
        }
        i += 1;
    }
    total
}

/// Exact `H[U]`.
pub fn count_labeled_copies(g: &Graph, pattern: &Pattern, u: &VertexSubset) -> Result<u64> {
    count_labeled_copies_with(g, pattern, u, Strategy::Sequential)
}

/// Exact `H[U]`, splitting the search over the image of the first pattern
/// vertex according to `strategy`.
pub fn count_labeled_copies_with(
    g: &Graph,
    pattern: &Pattern,
    u: &VertexSubset,
    strategy: Strategy,
) -> Result<u64> {
    g.check_subset(u)?;
    check_capacity(u.len(), pattern.h())?;
    if u.len() < pattern.h() {
        return Ok(0);
    }
    let plan = Plan::new(pattern);
    let base = u.mask();
    let roots = u.members();
    let per_root = |&root: &usize| {
        let mut s = Scratch::new(plan.len(), g.words());
        s.images[0] = root;
        count_from(g, &plan, 1, base, &mut s)
    };
    Ok(match strategy {
        Strategy::Sequential => roots.iter().map(per_root).sum(),
        Strategy::Parallel => exec::map(strategy, roots, per_root).into_iter().sum(),
    })
}

/// `e(U)`: edges with both endpoints in `u`.
pub fn count_edges_within(g: &Graph, u: &VertexSubset) -> Result<u64> {
    g.check_subset(u)?;
    let mask = u.mask();
    let twice: u64 = u
        .members()
        .iter()
        .map(|&v| {
            g.row(v)
                .iter()
                .zip(mask)
                .map(|(r, m)| (r & m).count_ones() as u64)
                .sum::<u64>()
        })
        .sum();
    Ok(twice / 2)
}

/// `e(U, V \ U)`: edges with exactly one endpoint in `u`.
pub fn count_cut(g: &Graph, u: &VertexSubset) -> Result<u64> {
    g.check_subset(u)?;
    let mask = u.mask();
    Ok(u.members()
        .iter()
        .map(|&v| {
            g.row(v)
                .iter()
                .zip(mask)
                .map(|(r, m)| (r & !m).count_ones() as u64)
                .sum::<u64>()
        })
        .sum())
}

/// Labeled copies of `H` classified by how many of their vertices fall
/// outside a distinguished set `W`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratifiedCensus {
    /// `counts[j]`: copies with exactly `j` vertices outside `W`.
    pub counts: Vec<u64>,
    pub total: u64,
    /// Host vertex count, used for normalisation.
    pub n: usize,
}

impl StratifiedCensus {
    /// `w_j = counts[j] / n^h`.
    pub fn normalized(&self) -> Vec<f64> {
        let h = self.counts.len() - 1;
        let scale = (self.n as f64).powi(h as i32);
        self.counts.iter().map(|&c| c as f64 / scale).collect()
    }
}

#[allow(clippy::too_many_arguments)]
fn stratified_from(
    g: &Graph,
    plan: &Plan,
    depth: usize,
    outside: usize,
    base: &[u64],
    w: &[u64],
    s: &mut Scratch,
    counts: &mut [u64],
) {
    fill_candidates(g, plan, depth, base, s);
    if depth + 1 == plan.len() {
        let (mut inner, mut outer) = (0u64, 0u64);
        for (c, m) in s.cand[depth].iter().zip(w) {
            inner += (c & m).count_ones() as u64;
            outer += (c & !m).count_ones() as u64;
        }
        counts[outside] += inner;
        counts[outside + 1] += outer;
        return;
    }
    let mut i = 0;
    while i < s.cand[depth].len() {
        let mut word = s.cand[depth][i];
        while word != 0 {
            let v = i * 64 + word.trailing_zeros() as usize;
            word &= word - 1;
            s.images[depth] = v;
            let out = outside + usize::from(w[v / 64] >> (v % 64) & 1 == 0);
            stratified_from(g, plan, depth + 1, out, base, w, s, counts);
        }
        i += 1;
    }
}

/// Stratified census over the whole vertex set: `counts[0] = H[W]` and the
/// counts sum to `H[V]`.
pub fn stratified_census(
    g: &Graph,
    pattern: &Pattern,
    w: &VertexSubset,
) -> Result<StratifiedCensus> {
    stratified_census_within(g, pattern, &VertexSubset::full(g.n()), w)
}

/// Stratified census restricted to copies lying inside `u`; vertices are
/// classified by membership in `w`. With `w ⊆ u`, `counts[0] = H[W]` and the
/// counts sum to `H[U]`.
pub fn stratified_census_within(
    g: &Graph,
    pattern: &Pattern,
    u: &VertexSubset,
    w: &VertexSubset,
) -> Result<StratifiedCensus> {
    g.check_subset(u)?;
    g.check_subset(w)?;
    check_capacity(u.len(), pattern.h())?;
    let h = pattern.h();
    let mut counts = vec![0u64; h + 1];
    if u.len() >= h {
        let plan = Plan::new(pattern);
        let mut s = Scratch::new(h, g.words());
        let wm = w.mask();
        for &root in u.members() {
            s.images[0] = root;
            let outside = usize::from(!w.contains(root));
            stratified_from(g, &plan, 1, outside, u.mask(), wm, &mut s, &mut counts);
        }
    }
    Ok(StratifiedCensus {
        total: counts.iter().sum(),
        counts,
        n: g.n(),
    })
}

const BRUTE_MAX_SUBSET: usize = 12;
const BRUTE_MAX_PATTERN: usize = 5;

/// Counts labeled copies by trying every injection `V(H) -> U` and checking
/// every pattern edge. Independent of the backtracking counter; for tests.
pub fn brute_force_count(g: &Graph, pattern: &Pattern, u: &VertexSubset) -> Result<u64> {
    g.check_subset(u)?;
    if u.len() > BRUTE_MAX_SUBSET || pattern.h() > BRUTE_MAX_PATTERN {
        return Err(Error::Refused(format!(
            "brute force limited to |U| <= {BRUTE_MAX_SUBSET} and h <= {BRUTE_MAX_PATTERN} (got {} and {})",
            u.len(),
            pattern.h()
        )));
    }
    fn go(
        g: &Graph,
        pattern: &Pattern,
        pool: &[usize],
        used: &mut Vec<bool>,
        map: &mut Vec<usize>,
    ) -> u64 {
        if map.len() == pattern.h() {
            let ok = pattern
                .edges()
                .iter()
                .all(|&(a, b)| g.has_edge(map[a], map[b]));
            return u64::from(ok);
        }
        let mut total = 0;
        for (i, &v) in pool.iter().enumerate() {
            if used[i] {
                continue;
            }
            used[i] = true;
            map.push(v);
            total += go(g, pattern, pool, used, map);
            map.pop();
            used[i] = false;
        }
        total
    }
    let mut used = vec![false; u.len()];
    Ok(go(g, pattern, u.members(), &mut used, &mut Vec::new()))
}
