//! Finite couplings with uniform marginals under a bipartite constraint.
//!
//! The minimal deficiency is found by integer max-flow with all masses in
//! units of `1 / (|S| |T|)`, so every answer is an exact rational.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactcount::DEFAULT_MAX_PARTITION_N;
use crate::graph::Graph;
use crate::sampler::enumerate_regular;
use crate::subgraphs::{for_each_regular_subgraph, graph_from_rows};

/// Largest number of `S` nodes in one connected component that the Hall
/// brute force will enumerate.
pub const HALL_MAX_COMPONENT: usize = 20;

/// Allowed pairs `D ⊆ S × T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteConstraint {
    s_size: usize,
    t_size: usize,
    adj: Vec<Vec<usize>>,
    pub s_labels: Option<Vec<String>>,
    pub t_labels: Option<Vec<String>>,
}

impl BipartiteConstraint {
    pub fn new(s_size: usize, t_size: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if s_size == 0 || t_size == 0 {
            return Err(Error::EmptySide);
        }
        let mut adj = vec![Vec::new(); s_size];
        for &(s, t) in pairs {
            if s >= s_size {
                return Err(Error::VertexOutOfRange { vertex: s, n: s_size });
            }
            if t >= t_size {
                return Err(Error::VertexOutOfRange { vertex: t, n: t_size });
            }
            adj[s].push(t);
        }
        for (s, row) in adj.iter_mut().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::DuplicateEdge(s, w[0]));
            }
        }
        Ok(Self {
            s_size,
            t_size,
            adj,
            s_labels: None,
            t_labels: None,
        })
    }

    /// Every pair allowed.
    pub fn complete(s_size: usize, t_size: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..s_size)
            .flat_map(|s| (0..t_size).map(move |t| (s, t)))
            .collect();
        Self::new(s_size, t_size, &pairs)
    }

    pub fn s_size(&self) -> usize {
        self.s_size
    }

    pub fn t_size(&self) -> usize {
        self.t_size
    }

    /// Sorted `T` neighbours of `s`.
    pub fn neighbours(&self, s: usize) -> &[usize] {
        &self.adj[s]
    }

    pub fn contains(&self, s: usize, t: usize) -> bool {
        self.adj[s].binary_search(&t).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn s_degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn t_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.t_size];
        for row in &self.adj {
            for &t in row {
                deg[t] += 1;
            }
        }
        deg
    }

    /// Connected components, each as (S indices, T indices). T nodes with no
    /// edges are left out.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let mut t_adj = vec![Vec::new(); self.t_size];
        for (s, row) in self.adj.iter().enumerate() {
            for &t in row {
                t_adj[t].push(s);
            }
        }
        let mut seen_s = vec![false; self.s_size];
        let mut seen_t = vec![false; self.t_size];
        let mut out = Vec::new();
        for root in 0..self.s_size {
            if seen_s[root] {
                continue;
            }
            seen_s[root] = true;
            let (mut ss, mut ts) = (vec![root], Vec::new());
            let mut queue = VecDeque::from([root]);
            while let Some(s) = queue.pop_front() {
                for &t in &self.adj[s] {
                    if seen_t[t] {
                        continue;
                    }
                    seen_t[t] = true;
                    ts.push(t);
                    for &s2 in &t_adj[t] {
                        if !seen_s[s2] {
                            seen_s[s2] = true;
                            ss.push(s2);
                            queue.push_back(s2);
                        }
                    }
                }
            }
            ss.sort_unstable();
            ts.sort_unstable();
            out.push((ss, ts));
        }
        out
    }
}

/// Exact joint law on `S × T`; zero cells are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    pub s_size: usize,
    pub t_size: usize,
    pub mass: BTreeMap<(usize, usize), BigRational>,
}

fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

impl JointDistribution {
    pub fn total(&self) -> BigRational {
        self.mass.values().sum()
    }

    pub fn row_sums(&self) -> Vec<BigRational> {
        let mut rows = vec![BigRational::zero(); self.s_size];
        for (&(s, _), p) in &self.mass {
            rows[s] += p;
        }
        rows
    }

    pub fn column_sums(&self) -> Vec<BigRational> {
        let mut cols = vec![BigRational::zero(); self.t_size];
        for (&(_, t), p) in &self.mass {
            cols[t] += p;
        }
        cols
    }

    /// Both marginals exactly uniform and every mass non-negative.
    pub fn has_uniform_marginals(&self) -> bool {
        let rs = ratio(1, self.s_size);
        let rt = ratio(1, self.t_size);
        self.mass.values().all(|p| *p >= BigRational::zero())
            && self.row_sums().iter().all(|r| *r == rs)
            && self.column_sums().iter().all(|c| *c == rt)
    }

    /// `P(XY ∉ D)`.
    pub fn mass_outside(&self, d: &BipartiteConstraint) -> BigRational {
        self.mass
            .iter()
            .filter(|(&(s, t), _)| !d.contains(s, t))
            .map(|(_, p)| p)
            .sum()
    }

    /// Versioned text form: a `joint v1` header, the two sizes, then one
    /// `s t numerator denominator` line per stored cell.
    pub fn to_text(&self) -> String {
        let mut out = format!("joint v1\n{} {}\n", self.s_size, self.t_size);
        for (&(s, t), p) in &self.mass {
            writeln!(out, "{s} {t} {} {}", p.numer(), p.denom()).unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, "joint v1")) => {}
            _ => return Err(err(1, "expected header `joint v1`")),
        }
        let (ln, sizes) = lines.next().ok_or_else(|| err(2, "missing sizes"))?;
        let sizes: Vec<usize> = sizes
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(ln, "sizes must be two integers"))?;
        let [s_size, t_size] = sizes[..] else {
            return Err(err(ln, "sizes must be two integers"));
        };
        let mut mass = BTreeMap::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(err(ln, "expected `s t numerator denominator`"));
            }
            let idx = |x: &str, bound: usize| -> Result<usize> {
                x.parse::<usize>()
                    .ok()
                    .filter(|&v| v < bound)
                    .ok_or_else(|| err(ln, "index out of range"))
            };
            let (s, t) = (idx(f[0], s_size)?, idx(f[1], t_size)?);
            let num: BigInt = f[2].parse().map_err(|_| err(ln, "bad numerator"))?;
            let den: BigInt = f[3].parse().map_err(|_| err(ln, "bad denominator"))?;
            if den.is_zero() {
                return Err(err(ln, "zero denominator"));
            }
            if mass.insert((s, t), BigRational::new(num, den)).is_some() {
                return Err(err(ln, "repeated cell"));
            }
        }
        Ok(Self { s_size, t_size, mass })
    }
}

/// Dinic max-flow on integer capacities.
struct FlowNetwork {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            head: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i64) -> usize {
        let id = self.to.len();
        self.head[u].push(id);
        self.to.push(v);
        self.cap.push(c);
        self.head[v].push(id + 1);
        self.to.push(u);
        self.cap.push(0);
        id
    }

    fn levels(&self, src: usize, sink: usize) -> Option<Vec<i32>> {
        let mut level = vec![-1; self.head.len()];
        level[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (level[sink] >= 0).then_some(level)
    }

    fn augment(&mut self, u: usize, sink: usize, pushed: i64, level: &[i32], it: &mut [usize]) -> i64 {
        if u == sink {
            return pushed;
        }
        while it[u] < self.head[u].len() {
            let e = self.head[u][it[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && level[v] == level[u] + 1 {
                let got = self.augment(v, sink, pushed.min(self.cap[e]), level, it);
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            it[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, src: usize, sink: usize) -> i64 {
        let mut flow = 0;
        while let Some(level) = self.levels(src, sink) {
            let mut it = vec![0; self.head.len()];
            loop {
                let f = self.augment(src, sink, i64::MAX, &level, &mut it);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

/// Minimal `P(XY ∉ D)` over couplings of the uniform laws on `S` and `T`,
/// together with a coupling attaining it.
///
/// The in-`D` part is a maximum flow; leftover row and column mass is placed
/// by a northwest-corner sweep in lexicographic `(s, t)` order. At a maximum
/// flow no allowed cell has both leftovers positive, so the sweep only ever
/// fills cells outside `D`.
pub fn min_deficiency(d: &BipartiteConstraint) -> Result<(BigRational, JointDistribution)> {
    let (ns, nt) = (d.s_size, d.t_size);
    if ns == 0 || nt == 0 {
        return Err(Error::EmptySide);
    }
    let unit = (ns * nt) as i64;
    let (src, sink) = (ns + nt, ns + nt + 1);
    let mut net = FlowNetwork::new(ns + nt + 2);
    for s in 0..ns {
        net.add_edge(src, s, nt as i64);
    }
    let mut mid = Vec::with_capacity(d.edge_count());
    for s in 0..ns {
        for &t in d.neighbours(s) {
            mid.push((s, t, net.add_edge(s, ns + t, unit + 1)));
        }
    }
    for t in 0..nt {
        net.add_edge(ns + t, sink, ns as i64);
    }
    let flow = net.max_flow(src, sink);

    let mut cells: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let mut row_left = vec![nt as i64; ns];
    let mut col_left = vec![ns as i64; nt];
    for &(s, t, e) in &mid {
        let f = net.cap[e ^ 1];
        if f > 0 {
            cells.insert((s, t), f);
            row_left[s] -= f;
            col_left[t] -= f;
        }
    }
    let mut t = 0;
    for s in 0..ns {
        while row_left[s] > 0 {
            while col_left[t] == 0 {
                t += 1;
            }
            let x = row_left[s].min(col_left[t]);
            debug_assert!(!d.contains(s, t));
            *cells.entry((s, t)).or_insert(0) += x;
            row_left[s] -= x;
            col_left[t] -= x;
        }
    }
    let mass = cells
        .into_iter()
        .map(|(k, v)| (k, ratio(v, unit)))
        .collect();
    let eps_star = ratio(unit - flow, unit);
    Ok((
        eps_star,
        JointDistribution {
            s_size: ns,
            t_size: nt,
            mass,
        },
    ))
}

/// `max over Ω ⊆ S of π_S(Ω) - π_T(N(Ω))`, clamped at 0, by enumerating
/// subsets. The objective is additive over connected components of `D`, so
/// each component is enumerated separately in Gray-code order.
pub fn hall_deficiency_bruteforce(d: &BipartiteConstraint) -> Result<BigRational> {
    let (ns, nt) = (d.s_size, d.t_size);
    if ns == 0 || nt == 0 {
        return Err(Error::EmptySide);
    }
    let components = d.components();
    if let Some((big, _)) = components.iter().find(|(ss, _)| ss.len() > HALL_MAX_COMPONENT) {
        return Err(Error::TooLarge(format!(
            "Hall enumeration over a component with {} S-nodes (limit {HALL_MAX_COMPONENT})",
            big.len()
        )));
    }
    let mut multiplicity = vec![0u32; nt];
    let mut total: i64 = 0;
    for (ss, _) in &components {
        let k = ss.len();
        let (mut omega, mut nbhd) = (0i64, 0i64);
        let mut best = 0i64;
        let mut inside = vec![false; k];
        for step in 1u64..(1u64 << k) {
            let bit = step.trailing_zeros() as usize;
            let s = ss[bit];
            inside[bit] = !inside[bit];
            if inside[bit] {
                omega += 1;
                for &t in d.neighbours(s) {
                    multiplicity[t] += 1;
                    if multiplicity[t] == 1 {
                        nbhd += 1;
                    }
                }
            } else {
                omega -= 1;
                for &t in d.neighbours(s) {
                    multiplicity[t] -= 1;
                    if multiplicity[t] == 0 {
                        nbhd -= 1;
                    }
                }
            }
            best = best.max(omega * nt as i64 - nbhd * ns as i64);
        }
        for (bit, &s) in ss.iter().enumerate() {
            if inside[bit] {
                for &t in d.neighbours(s) {
                    multiplicity[t] -= 1;
                }
            }
        }
        total += best;
    }
    Ok(ratio(total, ns * nt))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBound {
    pub eps: f64,
    pub delta: f64,
    /// `2 delta + eps / (1 - eps)`.
    pub bound: f64,
    pub s_good_size: usize,
    pub t_good_size: usize,
}

/// Degree-based sufficient bound. A node is good when its degree is at least
/// `(1 - eps)` times the average degree on its side; `delta` is the larger of
/// the two bad fractions. An empty `D` makes every node vacuously good, so it
/// is reported with `delta = 1` instead.
pub fn sufficient_bound(d: &BipartiteConstraint, eps: f64) -> Result<CouplingBound> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::DomainError(format!("eps = {eps} not in [0, 1)")));
    }
    let (ns, nt) = (d.s_size, d.t_size);
    let edges = d.edge_count() as f64;
    let threshold = (1.0 - eps) * edges;
    let s_good_size = d
        .s_degrees()
        .iter()
        .filter(|&&x| (x * ns) as f64 >= threshold)
        .count();
    let t_good_size = d
        .t_degrees()
        .iter()
        .filter(|&&y| (y * nt) as f64 >= threshold)
        .count();
    let delta = if d.edge_count() == 0 {
        1.0
    } else {
        (1.0 - s_good_size as f64 / ns as f64).max(1.0 - t_good_size as f64 / nt as f64)
    };
    Ok(CouplingBound {
        eps,
        delta,
        bound: 2.0 * delta + eps / (1.0 - eps),
        s_good_size,
        t_good_size,
    })
}

/// The constraint between `d`-regular graphs (`d = d1 + d2`) and ordered
/// edge-disjoint pairs `(G1, G2)`: `G` is joined to every pair whose union
/// is `G`.
#[derive(Debug, Clone)]
pub struct SprinklingConstraint {
    pub constraint: BipartiteConstraint,
    pub graphs: Vec<Graph>,
    pub pairs: Vec<(Graph, Graph)>,
}

pub fn sprinkling_constraint(n: usize, d1: usize, d2: usize) -> Result<SprinklingConstraint> {
    for h in [d1, d2] {
        if n * h % 2 != 0 {
            return Err(Error::ParityError { n, d: h });
        }
    }
    if n > DEFAULT_MAX_PARTITION_N {
        return Err(Error::TooLarge(format!(
            "sprinkling constraint needs n <= {DEFAULT_MAX_PARTITION_N}, got {n}"
        )));
    }
    let graphs = enumerate_regular(n, d1 + d2, DEFAULT_MAX_PARTITION_N)?;
    let per_graph: Vec<Vec<(Graph, Graph)>> = graphs
        .par_iter()
        .map(|g| {
            let mut out = Vec::new();
            for_each_regular_subgraph(g, d1, |rows| {
                let g1 = graph_from_rows(n, rows);
                let g2 = g.difference(&g1).expect("subgraph of g");
                out.push((g1, g2));
            })?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut edges = Vec::new();
    for (s, list) in per_graph.into_iter().enumerate() {
        for pair in list {
            edges.push((s, pairs.len()));
            pairs.push(pair);
        }
    }
    if graphs.is_empty() || pairs.is_empty() {
        return Err(Error::EmptySide);
    }
    let constraint = BipartiteConstraint::new(graphs.len(), pairs.len(), &edges)?;
    Ok(SprinklingConstraint {
        constraint,
        graphs,
        pairs,
    })
}

#[derive(Debug, Clone)]
pub struct SprinklingReport {
    pub s_size: usize,
    pub t_size: usize,
    /// `|D| / |S|`, the mean of `|R_{d1}(G)|` over `d`-regular `G`.
    pub mean_degree: BigRational,
    /// Value of `|R_{d1}(G)|` mapped to how many `G` attain it.
    pub degree_histogram: BTreeMap<usize, usize>,
    /// `|R_{d1}(G)| / E|R_{d1}|` mapped to its probability under uniform `G`.
    pub concentration: BTreeMap<BigRational, BigRational>,
    /// `sum over G of max(0, 1/|S| - deg(G)/|T|)`.
    pub closed_form_eps: BigRational,
    /// Mass the constructed coupling puts outside `D`.
    pub off_d_mass: BigRational,
    pub marginals_uniform: bool,
    /// When `d1 = d2` each unordered decomposition is counted in both orders.
    pub ordered_pairs: bool,
}

pub fn build_sprinkling_coupling(
    n: usize,
    d1: usize,
    d2: usize,
) -> Result<(BigRational, JointDistribution, SprinklingReport)> {
    let sc = sprinkling_constraint(n, d1, d2)?;
    let d = &sc.constraint;
    let (eps_star, joint) = min_deficiency(d)?;
    let off_d_mass = joint.mass_outside(d);
    let marginals_uniform = joint.has_uniform_marginals();
    let (ns, nt) = (d.s_size(), d.t_size());
    let mean_degree = ratio(nt, ns);
    let mut degree_histogram = BTreeMap::new();
    let mut closed_form_eps = BigRational::zero();
    for deg in d.s_degrees() {
        *degree_histogram.entry(deg).or_insert(0) += 1;
        let gap = ratio(1, ns) - ratio(deg, nt);
        if gap > BigRational::zero() {
            closed_form_eps += gap;
        }
    }
    let concentration = degree_histogram
        .iter()
        .map(|(&deg, &count)| (ratio(deg * ns, nt), ratio(count, ns)))
        .collect();
    Ok((
        eps_star,
        joint,
        SprinklingReport {
            s_size: ns,
            t_size: nt,
            mean_degree,
            degree_histogram,
            concentration,
            closed_form_eps,
            off_d_mass,
            marginals_uniform,
            ordered_pairs: d1 == d2,
        },
    ))
}
