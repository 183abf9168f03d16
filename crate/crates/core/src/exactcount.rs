//! Exact big-integer counts of regular spanning subgraphs and the exact
//! moments of `|R_h(G)|` for uniform random regular `G`.
//!
//! These are the brute-force oracles the asymptotic formulas are judged
//! against; nothing here ever rounds.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampler::enumerate_regular;
use crate::subgraphs::{count_regular_subgraphs, for_each_regular_subgraph, graph_from_rows};

/// Largest `n` accepted by [`count_clique_partitions`] by default.
pub const DEFAULT_MAX_PARTITION_N: usize = 8;

/// An exact non-negative count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub BigUint);

impl BigCount {
    pub fn to_rational(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(self.0.clone()))
    }
}

impl From<u64> for BigCount {
    fn from(v: u64) -> Self {
        Self(BigUint::from(v))
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// First and second moments of a random count, as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPair {
    pub first: BigRational,
    pub second: BigRational,
}

impl MomentPair {
    /// `second / first^2`, the quantity a second-moment argument needs near 1.
    pub fn ratio(&self) -> Option<BigRational> {
        (!self.first.is_zero()).then(|| &self.second / (&self.first * &self.first))
    }
}

/// `|R_h(G)|`, the number of `h`-regular spanning subgraphs of `g`.
pub fn count_regular_spanning_subgraphs(g: &Graph, h: usize) -> Result<BigCount> {
    Ok(count_regular_subgraphs(g, h)?.into())
}

/// Perfect matchings of `K_n` sharing no edge with `forbidden`.
pub fn count_matchings_avoiding(n: usize, forbidden: &Graph) -> Result<BigCount> {
    if forbidden.n() != n {
        return Err(Error::SizeMismatch(forbidden.n(), n));
    }
    if n % 2 != 0 {
        return Err(Error::ParityError { n, d: 1 });
    }
    count_regular_spanning_subgraphs(&forbidden.complement(), 1)
}

/// `|R_d(K_n)|`, the number of labelled `d`-regular graphs on `[n]`.
pub fn count_regular_graphs(n: usize, d: usize) -> Result<BigCount> {
    count_regular_spanning_subgraphs(&Graph::complete(n)?, d)
}

/// `R(n; d_0, .., d_k)`: ordered partitions of `E(K_n)` into regular spanning
/// subgraphs of the given degrees.
///
/// Picks every element of `R_{d_0}(K_n)` and recurses on the remaining host
/// graph. Zero degrees are allowed and contribute the empty graph.
pub fn count_clique_partitions(n: usize, degrees: &[usize], max_n: usize) -> Result<BigCount> {
    let total: usize = degrees.iter().sum();
    if n == 0 || total != n - 1 {
        return Err(Error::DegreeSumMismatch {
            got: total,
            expected: n.saturating_sub(1),
        });
    }
    if let Some(&d) = degrees.iter().find(|&&d| n * d % 2 != 0) {
        return Err(Error::ParityError { n, d });
    }
    if n > max_n {
        return Err(Error::TooLarge(format!(
            "clique partitions need n <= {max_n}, got {n}"
        )));
    }
    Ok(partitions_of(&Graph::complete(n)?, degrees)?.into())
}

fn partitions_of(host: &Graph, degrees: &[usize]) -> Result<u64> {
    match degrees {
        [] => Ok(u64::from(host.m() == 0)),
        [_] => Ok(1),
        [first, _] => count_regular_subgraphs(host, *first),
        [first, rest @ ..] => {
            let mut parts = Vec::new();
            for_each_regular_subgraph(host, *first, |rows| {
                parts.push(graph_from_rows(host.n(), rows))
            })?;
            parts
                .par_iter()
                .map(|g| partitions_of(&host.difference(g)?, rest))
                .try_reduce(|| 0, |a, b| Ok(a + b))
        }
    }
}

/// How many `d`-regular graphs `G` on `[n]` have each value of `|R_{d1}(G)|`.
pub fn subgraph_count_distribution(
    n: usize,
    d1: usize,
    d: usize,
    max_n: usize,
) -> Result<BTreeMap<u64, u64>> {
    if n * d1 % 2 != 0 {
        return Err(Error::ParityError { n, d: d1 });
    }
    let graphs = enumerate_regular(n, d, max_n)?;
    let counts: Vec<u64> = graphs
        .par_iter()
        .map(|g| count_regular_subgraphs(g, d1))
        .collect::<Result<_>>()?;
    let mut dist = BTreeMap::new();
    for c in counts {
        *dist.entry(c).or_insert(0) += 1;
    }
    Ok(dist)
}

fn rational(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Exact moments from a value histogram.
pub fn moments_from_distribution(dist: &BTreeMap<u64, u64>) -> MomentPair {
    let mut total = BigInt::zero();
    let mut sum = BigInt::zero();
    let mut sum_sq = BigInt::zero();
    for (&value, &mult) in dist {
        let v = BigInt::from(value);
        let m = BigInt::from(mult);
        sum_sq += &v * &v * &m;
        sum += v * &m;
        total += m;
    }
    let total = rational(total);
    MomentPair {
        first: rational(sum) / &total,
        second: rational(sum_sq) / total,
    }
}

/// `E|R_{d1}(G_d)|` and `E|R_{d1}(G_d)|^2` for `G_d` uniform over `R_d(K_n)`.
pub fn exact_moments(n: usize, d1: usize, d: usize, max_n: usize) -> Result<MomentPair> {
    Ok(moments_from_distribution(&subgraph_count_distribution(n, d1, d, max_n)?))
}

/// `|S_n(d1, d2)|`, ordered pairs of edge-disjoint `d1`- and `d2`-regular
/// graphs on `[n]`, counted as `sum over G in R_{d1+d2}(K_n) of |R_{d1}(G)|`.
pub fn count_disjoint_pairs(n: usize, d1: usize, d2: usize, max_n: usize) -> Result<BigCount> {
    let dist = subgraph_count_distribution(n, d1, d1 + d2, max_n)?;
    let total: BigUint = dist
        .iter()
        .map(|(&v, &m)| BigUint::from(v) * BigUint::from(m))
        .sum();
    Ok(BigCount(total))
}

/// `P_d(H)`: the fraction of `d`-regular graphs on `[n]` containing `h`.
pub fn exact_containment_probability(h: &Graph, d: usize, max_n: usize) -> Result<BigRational> {
    let graphs = enumerate_regular(h.n(), d, max_n)?;
    let hits = graphs.par_iter().filter(|g| h.is_subgraph_of(g)).count();
    Ok(BigRational::new(
        BigInt::from(hits),
        BigInt::from(graphs.len()),
    ))
}

/// `(n-1)!!` for even `n`, the number of perfect matchings of `K_n`.
pub fn double_factorial_odd(n: usize) -> BigUint {
    let mut acc = BigUint::one();
    let mut k = n.saturating_sub(1);
    while k > 1 {
        acc *= BigUint::from(k);
        k -= 2;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::circulant;
    use crate::sampler::DEFAULT_MAX_ENUM_N;

    fn big(v: u64) -> BigCount {
        v.into()
    }

    fn frac(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn spanning_subgraph_examples() {
        let k4 = Graph::complete(4).unwrap();
        let k6 = Graph::complete(6).unwrap();
        assert_eq!(count_regular_spanning_subgraphs(&k4, 1).unwrap(), big(3));
        assert_eq!(count_regular_spanning_subgraphs(&k6, 2).unwrap(), big(70));
        assert_eq!(count_regular_spanning_subgraphs(&k6, 3).unwrap(), big(70));
        assert_eq!(
            count_regular_spanning_subgraphs(&circulant(5, &[1]).unwrap(), 1),
            Err(Error::ParityError { n: 5, d: 1 })
        );
    }

    #[test]
    fn cycle_covers_of_k6_by_hand() {
        // Hamiltonian cycles: 5!/2 = 60; two disjoint triangles: C(6,3)/2 = 10.
        assert_eq!(60 + 10, 70);
        assert_eq!(count_regular_graphs(6, 2).unwrap(), big(60 + 10));
    }

    #[test]
    fn trivial_counts() {
        for (n, offs) in [(7usize, vec![1usize, 3]), (8, vec![1, 2, 4]), (6, vec![])] {
            let g = circulant(n, &offs).unwrap();
            let d = g.regular_degree().unwrap();
            assert_eq!(count_regular_spanning_subgraphs(&g, 0).unwrap(), big(1));
            assert_eq!(count_regular_spanning_subgraphs(&g, d).unwrap(), big(1));
        }
        // h above the minimum degree is an empty set, not an error.
        let c6 = circulant(6, &[1]).unwrap();
        assert_eq!(count_regular_spanning_subgraphs(&c6, 4).unwrap(), big(0));
    }

    #[test]
    fn matchings_avoiding() {
        assert_eq!(count_matchings_avoiding(4, &Graph::empty(4).unwrap()).unwrap(), big(3));
        let pm = Graph::from_edge_list(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(count_matchings_avoiding(4, &pm).unwrap(), big(2));
        let c6 = circulant(6, &[1]).unwrap();
        let via_general = {
            let mut c = 0u64;
            for_each_regular_subgraph(&c6.complement(), 1, |_| c += 1).unwrap();
            c
        };
        assert_eq!(count_matchings_avoiding(6, &c6).unwrap(), big(via_general));
        assert_eq!(
            count_matchings_avoiding(5, &Graph::empty(5).unwrap()),
            Err(Error::ParityError { n: 5, d: 1 })
        );
    }

    #[test]
    fn clique_partition_examples() {
        assert_eq!(count_clique_partitions(4, &[1, 1, 1], 8).unwrap(), big(6));
        assert_eq!(count_clique_partitions(4, &[1, 2], 8).unwrap(), big(3));
        assert_eq!(count_clique_partitions(4, &[2, 1], 8).unwrap(), big(3));
        // 12 five-cycles in K5, each with a forced complementary five-cycle.
        assert_eq!(count_clique_partitions(5, &[2, 2], 8).unwrap(), big(12));
        assert_eq!(count_clique_partitions(4, &[3, 0], 8).unwrap(), big(1));
        assert!(matches!(
            count_clique_partitions(4, &[1, 1], 8),
            Err(Error::DegreeSumMismatch { got: 2, expected: 3 })
        ));
        assert_eq!(
            count_clique_partitions(5, &[1, 3], 8),
            Err(Error::ParityError { n: 5, d: 1 })
        );
        assert!(matches!(
            count_clique_partitions(10, &[9], 8),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn clique_partitions_brute_force_oracle() {
        // Independent oracle for n = 5: 2-colour the 10 edges of K5 and keep
        // colourings where both colour classes are 2-regular.
        let pairs: Vec<(usize, usize)> = (0..5)
            .flat_map(|u| ((u + 1)..5).map(move |v| (u, v)))
            .collect();
        let mut oracle = 0;
        for mask in 0u32..(1 << pairs.len()) {
            let mut deg = [0; 5];
            for (k, &(u, v)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    deg[u] += 1;
                    deg[v] += 1;
                }
            }
            oracle += deg.iter().all(|&x| x == 2) as u64;
        }
        assert_eq!(count_clique_partitions(5, &[2, 2], 8).unwrap(), big(oracle));
    }

    #[test]
    fn moment_examples() {
        let m = exact_moments(4, 1, 1, DEFAULT_MAX_ENUM_N).unwrap();
        assert_eq!((m.first.clone(), m.second.clone()), (frac(1, 1), frac(1, 1)));
        for (n, d) in [(6, 3), (7, 2), (8, 3)] {
            let m = exact_moments(n, d, d, DEFAULT_MAX_ENUM_N).unwrap();
            assert_eq!(m.first, frac(1, 1));
            assert_eq!(m.second, frac(1, 1));
        }
        let m = exact_moments(6, 1, 3, DEFAULT_MAX_ENUM_N).unwrap();
        let s = count_disjoint_pairs(6, 1, 2, DEFAULT_MAX_ENUM_N).unwrap();
        let r3 = count_regular_graphs(6, 3).unwrap();
        assert_eq!(m.first, s.to_rational() / r3.to_rational());
        assert!(m.second >= &m.first * &m.first);
    }

    #[test]
    fn containment_examples() {
        let pm = Graph::from_edge_list(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(exact_containment_probability(&pm, 1, 12).unwrap(), frac(1, 3));
        assert_eq!(exact_containment_probability(&pm, 3, 12).unwrap(), frac(1, 1));
        let e = Graph::from_edge_list(6, &[(0, 1)]).unwrap();
        assert_eq!(exact_containment_probability(&e, 3, 12).unwrap(), frac(3, 5));
        assert_eq!(exact_containment_probability(&e, 5, 12).unwrap(), frac(1, 1));
    }

    #[test]
    fn containment_sums_to_first_moment() {
        for (n, d1, d) in [(6, 1, 3), (6, 2, 4), (7, 2, 4), (8, 1, 3)] {
            let subs = enumerate_regular(n, d1, 12).unwrap();
            let total: BigRational = subs
                .iter()
                .map(|h| exact_containment_probability(h, d, 12).unwrap())
                .sum();
            assert_eq!(total, exact_moments(n, d1, d, 12).unwrap().first, "({n}, {d1}, {d})");
        }
    }

    #[test]
    fn host_complement_symmetry_small() {
        for g in enumerate_regular(7, 4, 12).unwrap().iter().step_by(7) {
            for h in [0, 2, 4] {
                assert_eq!(
                    count_regular_spanning_subgraphs(g, h).unwrap(),
                    count_regular_spanning_subgraphs(g, 4 - h).unwrap()
                );
            }
        }
    }

    #[test]
    fn partition_order_invariance() {
        for (n, a, b) in [(6usize, 1usize, 4usize), (6, 2, 3), (7, 2, 4), (8, 3, 4)] {
            assert_eq!(
                count_clique_partitions(n, &[a, b], 8).unwrap(),
                count_clique_partitions(n, &[b, a], 8).unwrap()
            );
        }
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(2), BigUint::from(1u32));
        assert_eq!(double_factorial_odd(10), BigUint::from(945u32));
    }
}
