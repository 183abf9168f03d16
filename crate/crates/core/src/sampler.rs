//! Samplers for uniform random regular graphs, disjoint pairs and relabellings.
//!
//! All randomness flows from a [`SeedSpec`]: `base_seed` keys a ChaCha8
//! generator and `stream_index` selects one of its 2^64 independent streams, so
//! trial `i` of an experiment is reproducible on its own, on any thread.

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{circulant, Graph};
use crate::subgraphs::{for_each_regular_subgraph, graph_from_rows};

/// Default cap on exhaustive enumeration for mid-range degrees.
pub const DEFAULT_MAX_ENUM_N: usize = 12;
/// Degrees above this make pairing rejection impractically slow.
pub const PAIRING_DEGREE_WARN: usize = 8;
/// Attempt cap for [`sample_disjoint_pair`].
pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self {
            base_seed,
            stream_index,
        }
    }

    /// Same base seed, different stream.
    pub fn stream(self, stream_index: u64) -> Self {
        Self {
            stream_index,
            ..self
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// Stream reserved for item `i` of a seeded sweep: the low 32 bits of the
    /// stream index carry `i`, the high bits the caller's stream.
    pub fn substream(self, i: u64) -> Self {
        self.stream((self.stream_index << 32) | (i & 0xffff_ffff))
    }

    /// The stream positioned at block `block` (2^40 words per block), so that
    /// fixed work chunks draw disjoint randomness whatever the thread count.
    pub fn rng_block(self, block: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos((block as u128) << 40);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMethod {
    Exhaustive,
    Pairing,
    Switching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerStats {
    pub attempts: u64,
    pub accepted: u64,
    pub method: SamplerMethod,
    /// Set for Markov chain output, which is only approximately uniform.
    pub approximate: bool,
}

fn check_degree(n: usize, d: usize) -> Result<()> {
    if n * d % 2 != 0 {
        return Err(Error::ParityError { n, d });
    }
    if n == 0 || d >= n {
        return Err(Error::DegreeOutOfRange { n, d });
    }
    Ok(())
}

/// Every labelled `d`-regular graph on `[n]` in lexicographic edge-set order.
///
/// Mid-range degrees (`3 <= d <= n - 4`) are refused above `max_n` vertices.
pub fn enumerate_regular(n: usize, d: usize, max_n: usize) -> Result<Vec<Graph>> {
    check_degree(n, d)?;
    if n > max_n && d >= 3 && d + 4 <= n {
        return Err(Error::TooLarge(format!(
            "enumerating {d}-regular graphs on {n} vertices (limit n <= {max_n})"
        )));
    }
    let host = Graph::complete(n)?;
    let mut out = Vec::new();
    for_each_regular_subgraph(&host, d, |rows| out.push(graph_from_rows(n, rows)))?;
    Ok(out)
}

/// Uniform `d`-regular graph by the configuration model, rejecting pairings
/// with loops or repeated edges.
pub fn sample_pairing(n: usize, d: usize, seed: SeedSpec) -> Result<(Graph, SamplerStats)> {
    check_degree(n, d)?;
    if d > PAIRING_DEGREE_WARN {
        warn!("pairing sampler with d = {d} may reject for a very long time");
    }
    let mut rng = seed.rng();
    let (g, attempts) = pairing_with(n, d, &mut rng);
    Ok((
        g,
        SamplerStats {
            attempts,
            accepted: 1,
            method: SamplerMethod::Pairing,
            approximate: false,
        },
    ))
}

fn pairing_with<R: Rng>(n: usize, d: usize, rng: &mut R) -> (Graph, u64) {
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut attempts = 0;
    'retry: loop {
        attempts += 1;
        points.shuffle(rng);
        let mut g = Graph::empty(n).expect("n >= 1");
        for pair in points.chunks_exact(2) {
            if !g.add_edge(pair[0], pair[1]) {
                continue 'retry;
            }
        }
        return (g, attempts);
    }
}

/// The deterministic start of the switching chain: `i ~ i ± 1, .., i ± ⌊d/2⌋`,
/// plus the diameter matching `i ~ i + n/2` when `d` is odd.
pub fn circulant_start(n: usize, d: usize) -> Result<Graph> {
    check_degree(n, d)?;
    let mut offsets: Vec<usize> = (1..=d / 2).collect();
    if d % 2 == 1 {
        offsets.push(n / 2);
    }
    let g = circulant(n, &offsets)?;
    debug_assert_eq!(g.regular_degree(), Some(d));
    Ok(g)
}

/// Number of swaps used when the caller has no preference.
pub fn default_switching_steps(n: usize, d: usize) -> u64 {
    100 * n as u64 * d as u64
}

/// Double-edge-swap chain state over simple `d`-regular graphs.
///
/// A step picks an ordered pair of edges `uv`, `xy` and an orientation
/// uniformly; if `u, v, x, y` are distinct and `ux`, `vy` are absent, the edges
/// are replaced by `ux`, `vy`. The proposal is symmetric, so the uniform law is
/// stationary.
#[derive(Debug, Clone)]
pub struct SwapChain {
    graph: Graph,
    edges: Vec<(usize, usize)>,
}

/// A proposed double-edge swap: remove `edges[i]`, `edges[j]`, add the
/// re-paired edges.
#[derive(Debug, Clone, Copy)]
pub struct SwapMove {
    i: usize,
    j: usize,
    old: [(usize, usize); 2],
    new: [(usize, usize); 2],
}

impl SwapChain {
    pub fn new(graph: Graph) -> Self {
        let edges = graph.edges();
        Self { graph, edges }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    /// Draws a proposal; `None` when it would create a loop or a repeated edge.
    pub fn propose<R: Rng>(&self, rng: &mut R) -> Option<SwapMove> {
        let m = self.edges.len();
        if m < 2 {
            return None;
        }
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        let (u, v) = self.edges[i];
        let (mut x, mut y) = self.edges[j];
        if rng.random::<bool>() {
            std::mem::swap(&mut x, &mut y);
        }
        if i == j || u == x || u == y || v == x || v == y {
            return None;
        }
        if self.graph.has_edge(u, x) || self.graph.has_edge(v, y) {
            return None;
        }
        Some(SwapMove {
            i,
            j,
            old: [self.edges[i], self.edges[j]],
            new: [(u.min(x), u.max(x)), (v.min(y), v.max(y))],
        })
    }

    pub fn apply(&mut self, mv: &SwapMove) {
        for &(a, b) in &mv.old {
            self.graph.remove_edge(a, b);
        }
        for &(a, b) in &mv.new {
            self.graph.add_edge(a, b);
        }
        self.edges[mv.i] = mv.new[0];
        self.edges[mv.j] = mv.new[1];
    }

    pub fn undo(&mut self, mv: &SwapMove) {
        for &(a, b) in &mv.new {
            self.graph.remove_edge(a, b);
        }
        for &(a, b) in &mv.old {
            self.graph.add_edge(a, b);
        }
        self.edges[mv.i] = mv.old[0];
        self.edges[mv.j] = mv.old[1];
    }

    /// One step of the lazy chain; returns whether the graph changed.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> bool {
        match self.propose(rng) {
            Some(mv) => {
                self.apply(&mv);
                true
            }
            None => false,
        }
    }
}

/// Approximately uniform `d`-regular graph after `steps` double-edge swaps from
/// the circulant start.
pub fn sample_switching(
    n: usize,
    d: usize,
    steps: u64,
    seed: SeedSpec,
) -> Result<(Graph, SamplerStats)> {
    let mut chain = SwapChain::new(circulant_start(n, d)?);
    let mut rng = seed.rng();
    let mut accepted = 0;
    for _ in 0..steps {
        accepted += chain.step(&mut rng) as u64;
    }
    Ok((
        chain.into_graph(),
        SamplerStats {
            attempts: steps,
            accepted,
            method: SamplerMethod::Switching,
            approximate: true,
        },
    ))
}

/// Uniform element of `S_n(d1, d2)`: independent uniform `d1`- and
/// `d2`-regular graphs, resampled until edge-disjoint.
pub fn sample_disjoint_pair(
    n: usize,
    d1: usize,
    d2: usize,
    seed: SeedSpec,
    max_attempts: u64,
) -> Result<((Graph, Graph), SamplerStats)> {
    check_degree(n, d1)?;
    check_degree(n, d2)?;
    if d1 + d2 > n - 1 {
        return Err(Error::DegreeOutOfRange { n, d: d1 + d2 });
    }
    let mut rng = seed.rng();
    for attempt in 1..=max_attempts {
        let (g1, _) = pairing_with(n, d1, &mut rng);
        let (g2, _) = pairing_with(n, d2, &mut rng);
        if g1.intersection_size(&g2)? == 0 {
            return Ok((
                (g1, g2),
                SamplerStats {
                    attempts: attempt,
                    accepted: 1,
                    method: SamplerMethod::Pairing,
                    approximate: false,
                },
            ));
        }
    }
    Err(Error::RejectionBudgetExceeded(max_attempts))
}

/// Uniform permutation of `[n]` by Fisher-Yates.
pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// `G` relabelled by a uniform random permutation.
pub fn random_relabel(g: &Graph, seed: SeedSpec) -> Graph {
    let perm = random_permutation(g.n(), &mut seed.rng());
    g.relabel_unchecked(&perm)
}

/// A `d`-regular graph, uniform when pairing is practical (`d <= 8`) and from
/// the switching chain otherwise.
pub fn sample_regular(n: usize, d: usize, seed: SeedSpec) -> Result<(Graph, SamplerStats)> {
    let co = n.saturating_sub(1).saturating_sub(d);
    if d <= PAIRING_DEGREE_WARN {
        sample_pairing(n, d, seed)
    } else if co <= PAIRING_DEGREE_WARN && n * co % 2 == 0 && d < n {
        let (g, stats) = sample_pairing(n, co, seed)?;
        Ok((g.complement(), stats))
    } else {
        sample_switching(n, d, default_switching_steps(n, d), seed)
    }
}

/// Codegree window test: every pair of distinct vertices has
/// `d^2/n (1 ± eps)` common neighbours.
pub fn within_codegree_window(g: &Graph, d: usize, eps: f64) -> bool {
    let n = g.n();
    let target = (d * d) as f64 / n as f64;
    let lo = target * (1.0 - eps);
    let hi = target * (1.0 + eps);
    (0..n).all(|u| {
        ((u + 1)..n).all(|v| {
            let c = g.common_neighbours(u, v) as f64;
            c >= lo && c <= hi
        })
    })
}

/// Finds a circulant `d`-regular graph inside the codegree window, scanning
/// connection sets in lexicographic order.
pub fn find_circulant_in_window(n: usize, d: usize, eps: f64) -> Result<Option<Graph>> {
    check_degree(n, d)?;
    let half = (n - 1) / 2;
    let with_diameter = d % 2 == 1;
    let pairs_needed = d / 2;
    let mut found = None;
    let mut offsets = Vec::with_capacity(pairs_needed + 1);
    fn search(
        start: usize,
        half: usize,
        left: usize,
        offsets: &mut Vec<usize>,
        accept: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if left == 0 {
            return accept(offsets);
        }
        for s in start..=half {
            if half + 1 - s < left {
                break;
            }
            offsets.push(s);
            if search(s + 1, half, left - 1, offsets, accept) {
                return true;
            }
            offsets.pop();
        }
        false
    }
    let mut accept = |offs: &[usize]| {
        let mut all = offs.to_vec();
        if with_diameter {
            all.push(n / 2);
        }
        let g = circulant(n, &all).expect("n >= 1");
        if g.regular_degree() == Some(d) && within_codegree_window(&g, d, eps) {
            found = Some(g);
            true
        } else {
            false
        }
    };
    search(1, half, pairs_needed, &mut offsets, &mut accept);
    Ok(found)
}

/// Graphs from a double-edge-swap walk confined to the codegree window.
///
/// Starts from [`find_circulant_in_window`] and keeps only swaps that stay in
/// the window; a graph is emitted after every `thin` accepted swaps. Returns
/// `Ok(None)` when no circulant start exists. Output is approximate in the same
/// sense as [`sample_switching`], restricted to the window.
pub fn sample_codegree_window(
    n: usize,
    d: usize,
    eps: f64,
    count: usize,
    thin: u64,
    seed: SeedSpec,
) -> Result<Option<(Vec<Graph>, SamplerStats)>> {
    let Some(start) = find_circulant_in_window(n, d, eps)? else {
        return Ok(None);
    };
    let mut chain = SwapChain::new(start);
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0u64;
    let mut accepted = 0u64;
    let budget = 1_000_000u64.max(thin * count as u64 * 10_000);
    while out.len() < count {
        if attempts == budget {
            return Err(Error::RejectionBudgetExceeded(budget));
        }
        attempts += 1;
        let Some(mv) = chain.propose(&mut rng) else {
            continue;
        };
        chain.apply(&mv);
        if within_codegree_window(chain.graph(), d, eps) {
            accepted += 1;
            if accepted % thin.max(1) == 0 {
                out.push(chain.graph().clone());
            }
        } else {
            chain.undo(&mv);
        }
    }
    Ok(Some((
        out,
        SamplerStats {
            attempts,
            accepted,
            method: SamplerMethod::Switching,
            approximate: true,
        },
    )))
}
