//! The number of common edges between `H1` and a uniformly relabelled `H2`,
//! exactly over all `n!` labellings or by Monte Carlo, plus the label
//! transposition switching used in the tail argument.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::asymptotics::overlap_pmf;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::sampler::{random_permutation, SeedSpec};

/// Default `n!` guard for exhaustive mode.
pub const DEFAULT_MAX_PERM_N: usize = 9;

/// Trials per independently seeded Monte Carlo block.
const MC_BLOCK: u64 = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum OverlapPmf {
    /// Exact probabilities over all labellings.
    Exact(BTreeMap<usize, BigRational>),
    /// `(estimate, standard error)` per value.
    MonteCarlo(BTreeMap<usize, (f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapDistribution {
    pub n: usize,
    /// Labellings examined: `n!` or the trial count.
    pub samples: u64,
    pub pmf: OverlapPmf,
}

impl OverlapDistribution {
    pub fn mode(&self) -> &'static str {
        match self.pmf {
            OverlapPmf::Exact(_) => "exact",
            OverlapPmf::MonteCarlo(_) => "mc",
        }
    }

    pub fn probability(&self, m: usize) -> f64 {
        match &self.pmf {
            OverlapPmf::Exact(p) => p.get(&m).map_or(0.0, |q| q.to_f64().unwrap()),
            OverlapPmf::MonteCarlo(p) => p.get(&m).map_or(0.0, |q| q.0),
        }
    }

    pub fn max_support(&self) -> usize {
        match &self.pmf {
            OverlapPmf::Exact(p) => p.keys().next_back().copied().unwrap_or(0),
            OverlapPmf::MonteCarlo(p) => p.keys().next_back().copied().unwrap_or(0),
        }
    }

    /// `P(X >= threshold)`.
    pub fn tail(&self, threshold: f64) -> f64 {
        (0..=self.max_support())
            .filter(|&m| m as f64 >= threshold)
            .fold(0.0, |acc, m| acc + self.probability(m))
    }

    /// Exact `P(X >= threshold)`, exhaustive mode only.
    pub fn exact_tail(&self, threshold: f64) -> Option<BigRational> {
        match &self.pmf {
            OverlapPmf::Exact(p) => Some(
                p.iter()
                    .filter(|(&m, _)| m as f64 >= threshold)
                    .map(|(_, q)| q)
                    .sum(),
            ),
            OverlapPmf::MonteCarlo(_) => None,
        }
    }

    /// Total variation distance to `Poisson(h^2 / 2)`.
    pub fn tv_to_poisson(&self, h: usize) -> f64 {
        let top = self.max_support().max(4 * h * h + 40);
        let mut covered = 0.0;
        let mut diff = 0.0;
        for m in 0..=top {
            let q = overlap_pmf(h, m);
            covered += q;
            diff += (self.probability(m) - q).abs();
        }
        0.5 * (diff + (1.0 - covered).max(0.0))
    }

    /// CSV with header `m,numerator,denominator` or `m,estimate,stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.pmf {
            OverlapPmf::Exact(p) => {
                out.push_str("m,numerator,denominator\n");
                for (m, q) in p {
                    writeln!(out, "{m},{},{}", q.numer(), q.denom()).unwrap();
                }
            }
            OverlapPmf::MonteCarlo(p) => {
                out.push_str("m,estimate,stderr\n");
                for (m, (est, se)) in p {
                    writeln!(out, "{m},{est},{se}").unwrap();
                }
            }
        }
        out
    }
}

fn check_pair(h1: &Graph, h2: &Graph) -> Result<()> {
    if h1.n() != h2.n() {
        return Err(Error::SizeMismatch(h1.n(), h2.n()));
    }
    Ok(())
}

/// Common edges between `h1` and `h2` relabelled by `perm`.
fn overlap_under(h1_rows: &[u64], h2_edges: &[(usize, usize)], perm: &[usize]) -> usize {
    h2_edges
        .iter()
        .filter(|&&(a, b)| h1_rows[perm[a]] >> perm[b] & 1 == 1)
        .count()
}

/// In-place lexicographic successor; `false` once the last permutation is reached.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("pivot has a successor");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exact law of `|H1 ∩ H2^σ|` over all `n!` permutations `σ`.
pub fn overlap_distribution_exact(h1: &Graph, h2: &Graph, max_perm_n: usize) -> Result<OverlapDistribution> {
    check_pair(h1, h2)?;
    let n = h1.n();
    if n > max_perm_n {
        return Err(Error::TooLarge(format!(
            "exhaustive overlap needs n <= {max_perm_n}, got {n}"
        )));
    }
    let rows: Vec<u64> = (0..n).map(|v| h1.row_mask(v)).collect();
    let edges = h2.edges();
    let counts = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut hist = vec![0u64; edges.len() + 1];
            let mut perm: Vec<usize> = std::iter::once(first)
                .chain((0..n).filter(|&v| v != first))
                .collect();
            loop {
                hist[overlap_under(&rows, &edges, &perm)] += 1;
                if !next_permutation(&mut perm[1..]) {
                    break;
                }
            }
            hist
        })
        .reduce(
            || vec![0u64; edges.len() + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total: u64 = counts.iter().sum();
    let pmf = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| (m, BigRational::new(BigInt::from(c), BigInt::from(total))))
        .collect();
    Ok(OverlapDistribution {
        n,
        samples: total,
        pmf: OverlapPmf::Exact(pmf),
    })
}

/// Empirical law of `|H1 ∩ H2^σ|` from `trials` uniform permutations.
///
/// Trials are split into fixed blocks, each drawing from its own position of
/// the seeded stream, so the result does not depend on the thread count.
pub fn overlap_distribution_mc(h1: &Graph, h2: &Graph, trials: u64, seed: SeedSpec) -> Result<OverlapDistribution> {
    check_pair(h1, h2)?;
    if trials == 0 {
        return Err(Error::DomainError("trials must be at least 1".into()));
    }
    let n = h1.n();
    let word_path = n <= 64;
    let rows: Vec<u64> = if word_path {
        (0..n).map(|v| h1.row_mask(v)).collect()
    } else {
        Vec::new()
    };
    let edges = h2.edges();
    let blocks = trials.div_ceil(MC_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = seed.rng_block(b);
            let mut hist = vec![0u64; edges.len() + 1];
            let len = MC_BLOCK.min(trials - b * MC_BLOCK);
            for _ in 0..len {
                let perm = random_permutation(n, &mut rng);
                let m = if word_path {
                    overlap_under(&rows, &edges, &perm)
                } else {
                    h1.intersection_size(&h2.relabel_unchecked(&perm)).expect("same n")
                };
                hist[m] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; edges.len() + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let t = trials as f64;
    let pmf = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| {
            let p = c as f64 / t;
            (m, (p, (p * (1.0 - p) / t).sqrt()))
        })
        .collect();
    Ok(OverlapDistribution {
        n,
        samples: trials,
        pmf: OverlapPmf::MonteCarlo(pmf),
    })
}

/// One forward switching: a common edge `uw`, its chosen end `u`, and a
/// vertex `z` that is neither `u` nor adjacent to `u` in the relabelled graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SwitchChoice {
    pub u: usize,
    pub w: usize,
    pub z: usize,
}

/// All valid forward switchings of `g_sigma` against `h1`. For an `h`-regular
/// `g_sigma` with `i` common edges there are exactly `2 i (n - h - 1)`.
pub fn forward_switching_choices(g_sigma: &Graph, h1: &Graph) -> Result<Vec<SwitchChoice>> {
    check_pair(g_sigma, h1)?;
    let n = g_sigma.n();
    let mut out = Vec::new();
    for (a, b) in g_sigma.edges() {
        if !h1.has_edge(a, b) {
            continue;
        }
        for (u, w) in [(a, b), (b, a)] {
            for z in (0..n).filter(|&z| z != u && !g_sigma.has_edge(u, z)) {
                out.push(SwitchChoice { u, w, z });
            }
        }
    }
    Ok(out)
}

/// Applies the transposition `(u z)` to the labels of `g_sigma`.
///
/// Only edges at `u` or `z` move, so at most `deg u + deg z` common edges are
/// lost. The edge `uw` stops being common exactly when `z` is not adjacent to
/// `w`; otherwise the old edge `zw` is carried onto `uw`.
pub fn forward_switching(g_sigma: &Graph, h1: &Graph, choice: SwitchChoice) -> Result<Graph> {
    check_pair(g_sigma, h1)?;
    let SwitchChoice { u, w, z } = choice;
    let n = g_sigma.n();
    if u >= n || w >= n || z >= n {
        return Err(Error::InvalidChoice(format!("vertex out of range in {choice:?}")));
    }
    if u == w || !g_sigma.has_edge(u, w) || !h1.has_edge(u, w) {
        return Err(Error::InvalidChoice(format!("{u}{w} is not a common edge")));
    }
    if z == u || g_sigma.has_edge(u, z) {
        return Err(Error::InvalidChoice(format!("z = {z} is u or adjacent to u = {u}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.swap(u, z);
    Ok(g_sigma.relabel_unchecked(&perm))
}
