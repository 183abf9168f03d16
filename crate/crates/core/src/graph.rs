//! Labelled simple graphs on `[n] = {0, .., n-1}` stored as adjacency bitsets.
//!
//! Each row is a run of `u64` words. For `n <= 64` a row is a single word and
//! every set operation reduces to one AND/OR plus a popcount.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::symmat::SymmetricMatrix;

/// Largest vertex count the toolkit accepts.
pub const MAX_VERTICES: usize = 10_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    m: usize,
}

/// Degree of every vertex, in label order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence(Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegularityCertificate {
    pub degree: usize,
    pub valid: bool,
}

impl DegreeSequence {
    pub fn new(degrees: Vec<usize>) -> Result<Self> {
        let n = degrees.len();
        if let Some(&bad) = degrees.iter().find(|&&h| n == 0 || h > n - 1) {
            return Err(Error::InvalidDegreeSequence(format!(
                "entry {bad} exceeds n - 1 for n = {n}"
            )));
        }
        if degrees.iter().sum::<usize>() % 2 != 0 {
            return Err(Error::InvalidDegreeSequence("odd degree sum".into()));
        }
        Ok(Self(degrees))
    }

    pub fn regular(n: usize, h: usize) -> Result<Self> {
        Self::new(vec![h; n])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of edges, half the degree sum.
    pub fn edge_count(&self) -> usize {
        self.0.iter().sum::<usize>() / 2
    }
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl Graph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyVertexSet);
        }
        if n > MAX_VERTICES {
            return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_VERTICES}")));
        }
        let words = words_for(n);
        Ok(Self {
            n,
            words,
            rows: vec![0; n * words],
            m: 0,
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Ok(Self::empty(n)?.complement())
    }

    /// Builds a graph from 0-based pairs `u < v`.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(u, v) in edges {
            if u == v {
                return Err(Error::LoopEdge(u));
            }
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if g.has_edge(u, v) {
                return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
            }
            g.insert(u, v);
        }
        Ok(g)
    }

    #[inline]
    fn insert(&mut self, u: usize, v: usize) {
        let w = self.words;
        self.rows[u * w + v / 64] |= 1 << (v % 64);
        self.rows[v * w + u / 64] |= 1 << (u % 64);
        self.m += 1;
    }

    #[inline]
    fn remove(&mut self, u: usize, v: usize) {
        let w = self.words;
        self.rows[u * w + v / 64] &= !(1 << (v % 64));
        self.rows[v * w + u / 64] &= !(1 << (u % 64));
        self.m -= 1;
    }

    /// Adds `uv`; returns false if it was already present or is a loop.
    pub(crate) fn add_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v || self.has_edge(u, v) {
            return false;
        }
        self.insert(u, v);
        true
    }

    /// Removes `uv`; returns false if it was absent.
    pub(crate) fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if !self.has_edge(u, v) {
            return false;
        }
        self.remove(u, v);
        true
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Edge count.
    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    pub fn row(&self, v: usize) -> &[u64] {
        &self.rows[v * self.words..(v + 1) * self.words]
    }

    /// Neighbourhood of `v` as a single word; only meaningful for `n <= 64`.
    #[inline]
    pub fn row_mask(&self, v: usize) -> u64 {
        debug_assert!(self.n <= 64);
        self.rows[v * self.words]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence(self.degrees())
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(v).iter().enumerate().flat_map(|(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n {
            out.extend(self.neighbours(u).filter(|&v| v > u).map(|v| (u, v)));
        }
        out
    }

    pub fn regularity(&self) -> RegularityCertificate {
        let degree = self.degree(0);
        RegularityCertificate {
            degree,
            valid: (1..self.n).all(|v| self.degree(v) == degree),
        }
    }

    /// The common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let c = self.regularity();
        c.valid.then_some(c.degree)
    }

    pub fn complement(&self) -> Self {
        let mut rows = vec![0u64; self.rows.len()];
        let w = self.words;
        for v in 0..self.n {
            for wi in 0..w {
                let lo = wi * 64;
                let span = (self.n - lo).min(64);
                let valid = if span == 64 { u64::MAX } else { (1u64 << span) - 1 };
                let mut word = !self.rows[v * w + wi] & valid;
                if v / 64 == wi {
                    word &= !(1 << (v % 64));
                }
                rows[v * w + wi] = word;
            }
        }
        Self {
            n: self.n,
            words: w,
            rows,
            m: self.n * (self.n - 1) / 2 - self.m,
        }
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch(self.n, other.n));
        }
        Ok(())
    }

    /// Union of two edge-disjoint graphs on the same vertex set.
    pub fn union_disjoint(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        for u in 0..self.n {
            let shared = self
                .row(u)
                .iter()
                .zip(other.row(u))
                .enumerate()
                .find_map(|(wi, (a, b))| {
                    let x = a & b;
                    (x != 0).then(|| wi * 64 + x.trailing_zeros() as usize)
                });
            if let Some(v) = shared {
                return Err(Error::OverlappingEdges(u.min(v), u.max(v)));
            }
        }
        Ok(Self {
            n: self.n,
            words: self.words,
            rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect(),
            m: self.m + other.m,
        })
    }

    /// Edge difference `self \ other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let rows: Vec<u64> = self.rows.iter().zip(&other.rows).map(|(a, b)| a & !b).collect();
        let twice: usize = rows.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Self {
            n: self.n,
            words: self.words,
            rows,
            m: twice / 2,
        })
    }

    /// Whether every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Self) -> bool {
        self.n == other.n && self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    /// `|E(self) ∩ E(other)|`.
    pub fn intersection_size(&self, other: &Self) -> Result<usize> {
        self.check_same_n(other)?;
        let twice: usize = if self.words == 1 {
            self.rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| (a & b).count_ones() as usize)
                .sum()
        } else {
            self.rows
                .chunks_exact(self.words)
                .zip(other.rows.chunks_exact(self.words))
                .map(|(ra, rb)| {
                    ra.iter()
                        .zip(rb)
                        .map(|(a, b)| (a & b).count_ones() as usize)
                        .sum::<usize>()
                })
                .sum()
        };
        Ok(twice / 2)
    }

    pub fn common_neighbours(&self, u: usize, v: usize) -> usize {
        self.row(u)
            .iter()
            .zip(self.row(v))
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Minimum and maximum of `|N(u) ∩ N(v)|` over unordered distinct pairs.
    pub fn common_neighbour_range(&self) -> Result<(usize, usize)> {
        if self.n < 2 {
            return Err(Error::DomainError("need at least two vertices".into()));
        }
        let mut lo = usize::MAX;
        let mut hi = 0;
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                let c = self.common_neighbours(u, v);
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        Ok((lo, hi))
    }

    pub fn adjacency_matrix(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(self.n, |i, j| if self.has_edge(i, j) { 1.0 } else { 0.0 })
    }

    /// `Q = D + A`, whose quadratic form is `sum over edges jk of (x_j + x_k)^2`.
    pub fn signless_laplacian(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_upper_fn(self.n, |i, j| {
            if i == j {
                self.degree(i) as f64
            } else if self.has_edge(i, j) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Image of the graph under `perm`: edge `uv` becomes `perm[u] perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n)?;
        Ok(self.relabel_unchecked(perm))
    }

    pub(crate) fn relabel_unchecked(&self, perm: &[usize]) -> Self {
        let mut g = Self {
            n: self.n,
            words: self.words,
            rows: vec![0; self.rows.len()],
            m: 0,
        };
        for (u, v) in self.edges() {
            g.insert(perm[u], perm[v]);
        }
        g
    }

    /// Serializes to the edge-list text format: `n m` then one `u v` per line.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.m);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let [n, m] = parse_pair(header, 1)?;
        let mut g = Self::empty(n).map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?;
        for i in 0..m {
            let (idx, line) = lines.next().ok_or_else(|| Error::Parse {
                line: i + 2,
                msg: format!("expected {m} edges, found {i}"),
            })?;
            let [u, v] = parse_pair(line, idx + 1)?;
            if u >= v || v >= n {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("edge ({u}, {v}) must satisfy u < v < n = {n}"),
                });
            }
            if !g.add_edge(u, v) {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("duplicate edge ({u}, {v})"),
                });
            }
        }
        for (idx, line) in lines {
            if !line.is_empty() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "trailing content after the last edge".into(),
                });
            }
        }
        if !text.ends_with('\n') {
            return Err(Error::Parse {
                line: m + 1,
                msg: "missing final newline".into(),
            });
        }
        Ok(g)
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<[usize; 2]> {
    let bad = |msg: String| Error::Parse { line: line_no, msg };
    let mut parts = line.split(' ');
    let mut out = [0usize; 2];
    for slot in &mut out {
        let tok = parts
            .next()
            .ok_or_else(|| bad(format!("expected two integers in {line:?}")))?;
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(format!("not a decimal integer: {tok:?}")));
        }
        *slot = tok.parse().map_err(|e| bad(format!("{e}")))?;
    }
    if parts.next().is_some() {
        return Err(bad(format!("trailing garbage in {line:?}")));
    }
    Ok(out)
}

impl FromStr for Graph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_edge_list(s)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges())
            .finish()
    }
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::NotAPermutation(n));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotAPermutation(n));
        }
    }
    Ok(())
}

/// Circulant graph: `i ~ i ± s (mod n)` for each `s` in `offsets`.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<Graph> {
    let mut g = Graph::empty(n)?;
    for i in 0..n {
        for &s in offsets {
            let j = (i + s) % n;
            if j != i {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}
