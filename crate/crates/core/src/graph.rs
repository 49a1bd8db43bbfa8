//! Host graphs, pattern graphs and vertex subsets.
//!
//! A [`Graph`] stores one bit-row per vertex, so "is `u` adjacent to `v`" and
//! "which neighbours of `v` lie in `U`" are single word-level operations. The
//! graph is immutable once built and can be shared freely between threads.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

const WORD: usize = 64;

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    edge_count: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        let words = words_for(n);
        Graph {
            n,
            words,
            rows: vec![0; n * words],
            edge_count: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.insert_edge(u, v);
            }
        }
        g
    }

    /// Builds a graph from an edge list, rejecting loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(u, v) in edges {
            g.try_insert_edge(u, v).map_err(Error::Argument)?;
        }
        Ok(g)
    }

    fn try_insert_edge(&mut self, u: usize, v: usize) -> std::result::Result<(), String> {
        if u >= self.n || v >= self.n {
            return Err(format!("edge ({u}, {v}) out of range for n = {}", self.n));
        }
        if u == v {
            return Err(format!("self-loop at vertex {u}"));
        }
        if self.has_edge(u, v) {
            return Err(format!("duplicate edge ({u}, {v})"));
        }
        self.insert_edge(u, v);
        Ok(())
    }

    fn insert_edge(&mut self, u: usize, v: usize) {
        self.rows[u * self.words + v / WORD] |= 1 << (v % WORD);
        self.rows[v * self.words + u / WORD] |= 1 << (u % WORD);
        self.edge_count += 1;
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Number of `u64` words in each adjacency row.
    #[inline]
    pub fn words(&self) -> usize {
        self.words
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / WORD] >> (v % WORD) & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        BitIter::new(self.row(v))
    }

    /// Edges as `(u, v)` pairs with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Checks symmetry, the zero diagonal, padding bits and the stored edge
    /// count against the raw rows.
    pub fn check_invariants(&self) -> bool {
        let mut bits = 0usize;
        for u in 0..self.n {
            if self.has_edge(u, u) {
                return false;
            }
            for v in self.neighbors(u) {
                if v >= self.n || !self.has_edge(v, u) {
                    return false;
                }
                bits += 1;
            }
        }
        bits == 2 * self.edge_count
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for u in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Subgraph induced by `u`, relabelled `0..|u|` in member order.
    pub fn induced_subgraph(&self, u: &VertexSubset) -> Result<Graph> {
        self.check_subset(u)?;
        let members = u.members();
        let mut sub = Graph::empty(members.len());
        for (i, &a) in members.iter().enumerate() {
            for (j, &b) in members.iter().enumerate().skip(i + 1) {
                if self.has_edge(a, b) {
                    sub.insert_edge(i, j);
                }
            }
        }
        Ok(sub)
    }

    pub(crate) fn check_subset(&self, u: &VertexSubset) -> Result<()> {
        if u.universe() != self.n {
            return Err(Error::Argument(format!(
                "subset over {} vertices used with a graph on {}",
                u.universe(),
                self.n
            )));
        }
        Ok(())
    }

    /// Parses the edge-list format: a header line `n m`, then `m` lines `u v`.
    pub fn from_edge_list(text: &str) -> Result<Graph> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (header_line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header \"n m\"".into(),
        })?;
        let (n, m) = parse_pair(header_line, header)?;

        let mut g = Graph::empty(n);
        let mut seen = 0usize;
        for (line, body) in lines {
            if seen == m {
                return Err(Error::Parse {
                    line,
                    message: format!("more than the declared {m} edges"),
                });
            }
            let (u, v) = parse_pair(line, body)?;
            g.try_insert_edge(u, v)
                .map_err(|message| Error::Parse { line, message })?;
            seen += 1;
        }
        if seen != m {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                message: format!("expected {m} edges, found {seen}"),
            });
        }
        Ok(g)
    }

    /// Serialises to the edge-list format with `u < v` and LF endings.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edge_count);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn parse_pair(line: usize, body: &str) -> Result<(usize, usize)> {
    let mut fields = body.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        let tok = fields.next().ok_or_else(|| Error::Parse {
            line,
            message: format!("missing {what}"),
        })?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            message: format!("{what} {tok:?} is not a non-negative integer"),
        })
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if fields.next().is_some() {
        return Err(Error::Parse {
            line,
            message: "expected exactly two fields".into(),
        });
    }
    Ok((a, b))
}

/// Iterator over set bit positions of a word slice.
pub(crate) struct BitIter<'a> {
    words: &'a [u64],
    idx: usize,
    cur: u64,
}

impl<'a> BitIter<'a> {
    pub(crate) fn new(words: &'a [u64]) -> Self {
        BitIter {
            words,
            idx: 0,
            cur: words.first().copied().unwrap_or(0),
        }
    }
}

impl Iterator for BitIter<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        while self.cur == 0 {
            self.idx += 1;
            if self.idx >= self.words.len() {
                return None;
            }
            self.cur = self.words[self.idx];
        }
        let bit = self.cur.trailing_zeros() as usize;
        self.cur &= self.cur - 1;
        Some(self.idx * WORD + bit)
    }
}

/// The fixed pattern `H`: at least two vertices and at least one edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    h: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<u64>,
    name: Option<String>,
}

/// Names accepted by [`Pattern::builtin`].
pub const BUILTIN_PATTERNS: [&str; 6] = ["k2", "k3", "k4", "p3", "c4", "c6"];

impl Pattern {
    pub fn new(h: usize, edges: &[(usize, usize)], name: Option<String>) -> Result<Pattern> {
        if h < 2 {
            return Err(Error::Argument(format!(
                "pattern needs at least 2 vertices, got {h}"
            )));
        }
        if h > 64 {
            return Err(Error::Argument(format!("pattern too large: {h} vertices")));
        }
        if edges.is_empty() {
            return Err(Error::Argument("pattern needs at least one edge".into()));
        }
        let mut adjacency = vec![0u64; h];
        let mut canon = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= h || b >= h {
                return Err(Error::Argument(format!(
                    "pattern edge ({a}, {b}) out of range"
                )));
            }
            if a == b {
                return Err(Error::Argument(format!("pattern self-loop at {a}")));
            }
            if adjacency[a] >> b & 1 == 1 {
                return Err(Error::Argument(format!(
                    "duplicate pattern edge ({a}, {b})"
                )));
            }
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
            canon.push((a.min(b), a.max(b)));
        }
        Ok(Pattern {
            h,
            edges: canon,
            adjacency,
            name,
        })
    }

    pub fn complete(h: usize) -> Pattern {
        let edges: Vec<_> = (0..h)
            .flat_map(|a| (a + 1..h).map(move |b| (a, b)))
            .collect();
        Pattern::new(h, &edges, Some(format!("k{h}"))).expect("complete pattern is valid")
    }

    pub fn cycle(h: usize) -> Pattern {
        let edges: Vec<_> = (0..h).map(|a| (a, (a + 1) % h)).collect();
        Pattern::new(h, &edges, Some(format!("c{h}"))).expect("cycle pattern is valid")
    }

    pub fn path(h: usize) -> Pattern {
        let edges: Vec<_> = (0..h - 1).map(|a| (a, a + 1)).collect();
        Pattern::new(h, &edges, Some(format!("p{h}"))).expect("path pattern is valid")
    }

    pub fn builtin(name: &str) -> Result<Pattern> {
        match name {
            "k2" => Ok(Pattern::complete(2)),
            "k3" => Ok(Pattern::complete(3)),
            "k4" => Ok(Pattern::complete(4)),
            "p3" => Ok(Pattern::path(3)),
            "c4" => Ok(Pattern::cycle(4)),
            "c6" => Ok(Pattern::cycle(6)),
            other => Err(Error::Argument(format!(
                "unknown pattern {other:?}; built-ins are {}",
                BUILTIN_PATTERNS.join(", ")
            ))),
        }
    }

    /// Reads a pattern in the host edge-list format.
    pub fn from_edge_list(text: &str, name: Option<String>) -> Result<Pattern> {
        let g = Graph::from_edge_list(text)?;
        let edges: Vec<_> = g.edges().collect();
        Pattern::new(g.n(), &edges, name)
    }

    /// Vertex count `h`.
    #[inline]
    pub fn h(&self) -> usize {
        self.h
    }

    /// Edge count `r`.
    #[inline]
    pub fn r(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or("custom")
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a] >> b & 1 == 1
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adjacency[a].count_ones() as usize
    }
}

/// Sorted set of distinct vertices of a graph on `universe` vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VertexSubset {
    universe: usize,
    members: Vec<usize>,
    mask: Vec<u64>,
}

impl VertexSubset {
    /// Members may come in any order; duplicates and out-of-range ids are
    /// rejected.
    pub fn new(universe: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        if let Some(w) = members.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("vertex {} listed twice", w[0])));
        }
        if let Some(&last) = members.last() {
            if last >= universe {
                return Err(Error::Argument(format!(
                    "vertex {last} out of range for n = {universe}"
                )));
            }
        }
        Ok(Self::from_sorted(universe, members))
    }

    pub(crate) fn from_sorted(universe: usize, members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        let mut mask = vec![0u64; words_for(universe)];
        for &v in &members {
            mask[v / WORD] |= 1 << (v % WORD);
        }
        VertexSubset {
            universe,
            members,
            mask,
        }
    }

    pub fn full(universe: usize) -> Self {
        Self::from_sorted(universe, (0..universe).collect())
    }

    pub fn empty(universe: usize) -> Self {
        Self::from_sorted(universe, Vec::new())
    }

    /// Uniform random subset of the given size.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, universe: usize, size: usize) -> Result<Self> {
        if size > universe {
            return Err(Error::Argument(format!(
                "cannot draw {size} vertices out of {universe}"
            )));
        }
        Ok(Self::from_sorted(
            universe,
            rng::sample_indices(rng, size, universe),
        ))
    }

    pub fn complement(&self) -> Self {
        let members = (0..self.universe).filter(|&v| !self.contains(v)).collect();
        Self::from_sorted(self.universe, members)
    }

    pub fn union(&self, other: &VertexSubset) -> Result<Self> {
        if self.universe != other.universe {
            return Err(Error::Argument(
                "union of subsets over different graphs".into(),
            ));
        }
        let mut members: Vec<usize> = self.members.iter().chain(&other.members).copied().collect();
        members.sort_unstable();
        members.dedup();
        Ok(Self::from_sorted(self.universe, members))
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn mask(&self) -> &[u64] {
        &self.mask
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        v < self.universe && self.mask[v / WORD] >> (v % WORD) & 1 == 1
    }

    pub fn is_subset_of(&self, other: &VertexSubset) -> bool {
        self.universe == other.universe && self.members.iter().all(|&v| other.contains(v))
    }
}

/// Deterministic graph generators.
#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    /// `G(n, p)`: each pair independently with probability `p`, drawn in
    /// lexicographic pair order from a ChaCha8 stream seeded with `seed`.
    Gnp {
        n: usize,
        p: f64,
        seed: u64,
    },
    /// Disjoint complete graphs on consecutive vertex blocks.
    CliqueUnion {
        parts: Vec<usize>,
    },
    Complete {
        n: usize,
    },
    Empty {
        n: usize,
    },
    /// Every pair in different blocks is an edge.
    CompleteMultipartite {
        parts: Vec<usize>,
    },
}

impl GenSpec {
    pub fn n(&self) -> usize {
        match self {
            GenSpec::Gnp { n, .. } | GenSpec::Complete { n } | GenSpec::Empty { n } => *n,
            GenSpec::CliqueUnion { parts } | GenSpec::CompleteMultipartite { parts } => {
                parts.iter().sum()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GenSpec::Gnp { p, .. } if !(*p > 0.0 && *p < 1.0) => Err(Error::Config(format!(
                "gnp edge probability must lie strictly inside (0, 1), got {p}"
            ))),
            GenSpec::CliqueUnion { parts } | GenSpec::CompleteMultipartite { parts } => {
                if parts.is_empty() || parts.contains(&0) {
                    Err(Error::Config(format!(
                        "parts must be non-empty and positive, got {parts:?}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn generate(&self) -> Result<Graph> {
        self.validate()?;
        let g = match self {
            GenSpec::Gnp { n, p, seed } => {
                let mut rng = rng::rng_from_seed(*seed);
                let mut g = Graph::empty(*n);
                for u in 0..*n {
                    for v in u + 1..*n {
                        if rng.random::<f64>() < *p {
                            g.insert_edge(u, v);
                        }
                    }
                }
                g
            }
            GenSpec::CliqueUnion { parts } => {
                let mut g = Graph::empty(self.n());
                for block in blocks(parts) {
                    for u in block.clone() {
                        for v in u + 1..block.end {
                            g.insert_edge(u, v);
                        }
                    }
                }
                g
            }
            GenSpec::Complete { n } => Graph::complete(*n),
            GenSpec::Empty { n } => Graph::empty(*n),
            GenSpec::CompleteMultipartite { parts } => {
                let n = self.n();
                let mut g = Graph::empty(n);
                for block in blocks(parts) {
                    for u in block.clone() {
                        for v in block.end..n {
                            g.insert_edge(u, v);
                        }
                    }
                }
                g
            }
        };
        Ok(g)
    }
}

fn blocks(parts: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    parts
        .iter()
        .map(|&len| {
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}
