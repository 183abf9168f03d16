//! Backtracking enumeration of `h`-regular spanning subgraphs of a host graph.
//!
//! Vertices are completed in label order. When vertex `v` is reached, every
//! edge to a lower label has been decided, so its residual demand must be met
//! now from higher-labelled host neighbours that still have capacity. The
//! neighbour set is chosen in lexicographic order, which makes the output order
//! lexicographic in the sorted edge list.
//!
//! After each choice every later vertex is checked against a counting bound:
//! its residual demand may not exceed the number of live host neighbours that
//! remain above `v`.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Hosts beyond this size do not fit the single-word kernel.
pub const KERNEL_MAX_N: usize = 64;

struct Search<'a, F> {
    n: usize,
    host: Vec<u64>,
    residual: Vec<u32>,
    chosen: Vec<u64>,
    visit: &'a mut F,
}

#[inline]
fn above(v: usize) -> u64 {
    if v >= 63 {
        0
    } else {
        !0u64 << (v + 1)
    }
}

impl<F: FnMut(&[u64])> Search<'_, F> {
    fn live(&self) -> u64 {
        let mut mask = 0u64;
        for (w, &r) in self.residual.iter().enumerate() {
            if r > 0 {
                mask |= 1 << w;
            }
        }
        mask
    }

    fn vertex(&mut self, v: usize) {
        if v == self.n {
            (self.visit)(&self.chosen);
            return;
        }
        let need = self.residual[v];
        if need == 0 {
            self.vertex(v + 1);
            return;
        }
        let candidates = self.host[v] & self.live() & above(v);
        if (candidates.count_ones()) < need {
            return;
        }
        self.pick(v, need, candidates);
    }

    fn pick(&mut self, v: usize, need: u32, candidates: u64) {
        if need == 0 {
            if self.feasible_after(v) {
                self.vertex(v + 1);
            }
            return;
        }
        let mut rest = candidates;
        while rest.count_ones() >= need {
            let w = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            self.residual[v] -= 1;
            self.residual[w] -= 1;
            self.chosen[v] |= 1 << w;
            self.chosen[w] |= 1 << v;
            self.pick(v, need - 1, rest);
            self.chosen[v] &= !(1 << w);
            self.chosen[w] &= !(1 << v);
            self.residual[v] += 1;
            self.residual[w] += 1;
        }
    }

    fn feasible_after(&self, v: usize) -> bool {
        let pool = self.live() & above(v);
        let mut rest = pool;
        while rest != 0 {
            let w = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let supply = (self.host[w] & pool & !(1u64 << w)).count_ones();
            if supply < self.residual[w] {
                return false;
            }
        }
        true
    }
}

/// Calls `visit` with the adjacency rows (one `u64` per vertex) of every
/// `h`-regular spanning subgraph of `host`, in lexicographic edge-set order.
///
/// An odd `n * h` is a [`Error::ParityError`]; `h` above the minimum host
/// degree simply yields nothing.
pub fn for_each_regular_subgraph<F: FnMut(&[u64])>(host: &Graph, h: usize, mut visit: F) -> Result<()> {
    let n = host.n();
    if n * h % 2 != 0 {
        return Err(Error::ParityError { n, d: h });
    }
    if n > KERNEL_MAX_N {
        return Err(Error::TooLarge(format!(
            "exact enumeration supports n <= {KERNEL_MAX_N}, got {n}"
        )));
    }
    if h > host.min_degree() {
        return Ok(());
    }
    let mut search = Search {
        n,
        host: (0..n).map(|v| host.row_mask(v)).collect(),
        residual: vec![h as u32; n],
        chosen: vec![0; n],
        visit: &mut visit,
    };
    search.vertex(0);
    Ok(())
}

/// Number of perfect matchings of `host`: pair the lowest unmatched vertex with
/// each available neighbour in turn.
pub fn count_perfect_matchings(host: &Graph) -> Result<u64> {
    let n = host.n();
    if n % 2 != 0 {
        return Err(Error::ParityError { n, d: 1 });
    }
    if n > KERNEL_MAX_N {
        return Err(Error::TooLarge(format!(
            "exact enumeration supports n <= {KERNEL_MAX_N}, got {n}"
        )));
    }
    let rows: Vec<u64> = (0..n).map(|v| host.row_mask(v)).collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };

    fn go(rows: &[u64], free: u64) -> u64 {
        if free == 0 {
            return 1;
        }
        let u = free.trailing_zeros() as usize;
        let rest = free & !(1u64 << u);
        let mut partners = rows[u] & rest;
        let mut total = 0;
        while partners != 0 {
            let w = partners.trailing_zeros() as usize;
            partners &= partners - 1;
            total += go(rows, rest & !(1u64 << w));
        }
        total
    }
    Ok(go(&rows, full))
}

/// Number of `h`-regular spanning subgraphs of `host`.
pub fn count_regular_subgraphs(host: &Graph, h: usize) -> Result<u64> {
    if h == 1 {
        return count_perfect_matchings(host);
    }
    let mut count = 0u64;
    for_each_regular_subgraph(host, h, |_| count += 1)?;
    Ok(count)
}

/// Rebuilds a graph from kernel adjacency rows.
pub(crate) fn graph_from_rows(n: usize, rows: &[u64]) -> Graph {
    let mut g = Graph::empty(n).expect("kernel graphs have n >= 1");
    for (u, &row) in rows.iter().enumerate() {
        let mut rest = row & above(u);
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            g.add_edge(u, v);
        }
    }
    g
}
