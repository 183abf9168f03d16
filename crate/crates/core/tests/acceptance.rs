//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS or FAIL line; the process exits non-zero if any fails.

use std::collections::HashMap;
use std::f64::consts::E;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use regglab::asymptotics::{
    conjecture2_estimate, detq_band, hm_partition_estimate, isserlis_moments, overlap_tail_bound,
    quasirandom_eps, rhat, theorem5_count, Regime,
};
use regglab::coupling::{
    build_sprinkling_coupling, hall_deficiency_bruteforce, min_deficiency, sufficient_bound,
    BipartiteConstraint, JointDistribution,
};
use regglab::exactcount::{
    count_clique_partitions, count_regular_spanning_subgraphs, moments_from_distribution,
    subgraph_count_distribution,
};
use regglab::overlap::{overlap_distribution_exact, OverlapPmf};
use regglab::sampler::{
    default_switching_steps, enumerate_regular, sample_codegree_window, sample_pairing,
    sample_regular, sample_switching,
};
use regglab::subgraphs::count_regular_subgraphs;
use regglab::{Graph, SeedSpec};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

fn frac(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

// ---------------------------------------------------------------- oracles

fn double_factorial(n: u64) -> BigUint {
    (1..n).step_by(2).map(BigUint::from).product()
}

/// Ordered colourings of the edges of `K_n` into classes of the given
/// degrees, by backtracking over edges with per-vertex degree caps.
fn edge_colourings(n: usize, degrees: &[usize]) -> u64 {
    fn rec(i: usize, edges: &[(usize, usize)], degrees: &[usize], deg: &mut [Vec<usize>]) -> u64 {
        if i == edges.len() {
            return deg.iter().all(|d| d == degrees) as u64;
        }
        let (u, v) = edges[i];
        let mut total = 0;
        for c in 0..degrees.len() {
            if deg[u][c] < degrees[c] && deg[v][c] < degrees[c] {
                deg[u][c] += 1;
                deg[v][c] += 1;
                total += rec(i + 1, edges, degrees, deg);
                deg[u][c] -= 1;
                deg[v][c] -= 1;
            }
        }
        total
    }
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    rec(0, &edges, degrees, &mut vec![vec![0; degrees.len()]; n])
}

/// `max over Ω ⊆ S of |Ω|/|S| - |N(Ω)|/|T|`, by subset enumeration.
fn hall_oracle(s: usize, t: usize, adj: &[u32]) -> BigRational {
    let mut best = 0i64;
    for omega in 0u32..(1 << s) {
        let mut nb = 0u32;
        for (i, row) in adj.iter().enumerate() {
            if omega >> i & 1 == 1 {
                nb |= row;
            }
        }
        let score = omega.count_ones() as i64 * t as i64 - nb.count_ones() as i64 * s as i64;
        best = best.max(score);
    }
    frac(best, (s * t) as i64)
}

/// Row and column sums recomputed from the raw mass table.
fn marginals_exact(j: &JointDistribution, d: &BipartiteConstraint) -> Result<BigRational, String> {
    let (s, t) = (j.s_size, j.t_size);
    let mut rows = vec![BigRational::zero(); s];
    let mut cols = vec![BigRational::zero(); t];
    let mut outside = BigRational::zero();
    for (&(a, b), m) in &j.mass {
        ensure!(!m.is_negative(), "negative mass at ({a},{b})");
        rows[a] += m;
        cols[b] += m;
        if !d.contains(a, b) {
            outside += m;
        }
    }
    ensure!(rows.iter().all(|r| *r == frac(1, s as i64)), "row sums not 1/|S|");
    ensure!(cols.iter().all(|c| *c == frac(1, t as i64)), "column sums not 1/|T|");
    Ok(outside)
}

/// Gaussian sampler for density `∝ exp(-x^T Q x)`: Gauss-Jordan inverse of
/// `Q`, halved, then Cholesky.
struct Field {
    n: usize,
    chol: Vec<f64>,
}

impl Field {
    fn new(g: &Graph) -> Self {
        let n = g.n();
        let mut a = vec![0.0; n * 2 * n];
        let w = 2 * n;
        for i in 0..n {
            a[i * w + i] = g.degree(i) as f64;
            for j in g.neighbours(i) {
                a[i * w + j] = 1.0;
            }
            a[i * w + n + i] = 1.0;
        }
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x * w + c].abs().total_cmp(&a[y * w + c].abs())).unwrap();
            for k in 0..w {
                a.swap(c * w + k, p * w + k);
            }
            let piv = a[c * w + c];
            assert!(piv.abs() > 1e-9, "singular Q");
            for k in 0..w {
                a[c * w + k] /= piv;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r * w + c];
                    if f != 0.0 {
                        for k in 0..w {
                            a[r * w + k] -= f * a[c * w + k];
                        }
                    }
                }
            }
        }
        let sigma = |i: usize, j: usize| 0.25 * (a[i * w + n + j] + a[j * w + n + i]);
        let mut chol = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| chol[i * n + k] * chol[j * n + k]).sum();
                chol[i * n + j] = if i == j {
                    (sigma(i, i) - s).sqrt()
                } else {
                    (sigma(i, j) - s) / chol[j * n + j]
                };
            }
        }
        Self { n, chol }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, z: &mut [f64], x: &mut [f64]) {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..self.n {
            x[i] = (0..=i).map(|k| self.chol[i * self.n + k] * z[k]).sum();
        }
    }
}

/// Monte Carlo `(mean, stderr)` of `u(X)` and `v(X)^2`.
fn uv_monte_carlo(g: &Graph, lambda: f64, trials: usize, seed: u64) -> [(f64, f64); 2] {
    let field = Field::new(g);
    let cu = lambda * (1.0 - lambda) * (1.0 - 6.0 * lambda + 6.0 * lambda * lambda) / 24.0;
    let cv = lambda * (1.0 - lambda) * (1.0 - 2.0 * lambda) / 6.0;
    let edges = g.edges();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut z, mut x) = (vec![0.0; g.n()], vec![0.0; g.n()]);
    let mut sums = [[0.0f64; 2]; 2];
    for _ in 0..trials {
        field.draw(&mut rng, &mut z, &mut x);
        let (mut s3, mut s4) = (0.0, 0.0);
        for &(j, k) in &edges {
            let s = x[j] + x[k];
            s3 += s.powi(3);
            s4 += s.powi(4);
        }
        let u = cu * s4;
        let v2 = (cv * s3).powi(2);
        for (acc, val) in sums.iter_mut().zip([u, v2]) {
            acc[0] += val;
            acc[1] += val * val;
        }
    }
    let t = trials as f64;
    sums.map(|[s, s2]| {
        let mean = s / t;
        let var = (s2 / t - mean * mean) * t / (t - 1.0);
        (mean, (var / t).sqrt())
    })
}

fn is_bipartite(g: &Graph) -> bool {
    let n = g.n();
    let mut side = vec![usize::MAX; n];
    for s in 0..n {
        if side[s] != usize::MAX {
            continue;
        }
        side[s] = 0;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for w in g.neighbours(v) {
                if side[w] == usize::MAX {
                    side[w] = 1 - side[v];
                    stack.push(w);
                } else if side[w] == side[v] {
                    return false;
                }
            }
        }
    }
    true
}

fn disjoint_cycles(lengths: &[usize]) -> Graph {
    let n: usize = lengths.iter().sum();
    let mut edges = Vec::new();
    let mut base = 0;
    for &l in lengths {
        for i in 0..l {
            edges.push((base + i, base + (i + 1) % l));
        }
        base += l;
    }
    Graph::from_edge_list(n, &edges).unwrap()
}

fn perfect_matching(n: usize) -> Graph {
    let edges: Vec<_> = (0..n / 2).map(|i| (2 * i, 2 * i + 1)).collect();
    Graph::from_edge_list(n, &edges).unwrap()
}

/// The seeded bipartite instances shared by criteria 4 to 6.
fn random_instances() -> Vec<(usize, usize, Vec<u32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb1_9a47);
    (0..100)
        .map(|_| {
            let s = rng.random_range(1..=12);
            let t = rng.random_range(1..=12);
            let p: f64 = rng.random_range(0.05..0.9);
            let adj = (0..s)
                .map(|_| (0..t).filter(|_| rng.random_bool(p)).fold(0u32, |m, j| m | 1 << j))
                .collect();
            (s, t, adj)
        })
        .collect()
}

fn constraint(s: usize, t: usize, adj: &[u32]) -> BipartiteConstraint {
    let pairs: Vec<_> = adj
        .iter()
        .enumerate()
        .flat_map(|(i, row)| (0..t).filter(move |j| row >> j & 1 == 1).map(move |j| (i, j)))
        .collect();
    BipartiteConstraint::new(s, t, &pairs).unwrap()
}

// ---------------------------------------------------------------- criteria

fn matching_counts() -> Outcome {
    for n in [4usize, 6, 8, 10, 12] {
        let got = count_regular_spanning_subgraphs(&Graph::complete(n).unwrap(), 1).unwrap();
        let want = double_factorial(n as u64);
        ensure!(got.0 == want, "K_{n}: {} != {want}", got.0);
    }
    Ok("K_4..K_12 give 3, 15, 105, 945, 10395".into())
}

fn complement_symmetry() -> Outcome {
    let mut graphs = 0usize;
    for n in 2..=8usize {
        for d in 1..n {
            if n * d % 2 != 0 {
                continue;
            }
            let all = enumerate_regular(n, d, 8).unwrap();
            graphs += all.len();
            let bad = all.par_iter().find_any(|g| {
                (0..=d).any(|h| {
                    // odd n h leaves no h-regular graph, and then n (d - h) is odd too
                    let count = |k: usize| match count_regular_subgraphs(g, k) {
                        Err(regglab::Error::ParityError { .. }) => 0,
                        other => other.unwrap(),
                    };
                    count(h) != count(d - h)
                })
            });
            ensure!(bad.is_none(), "asymmetric counts on a {d}-regular graph, n = {n}");
        }
    }
    Ok(format!("{graphs} labelled graphs, every h"))
}

fn double_counting() -> Outcome {
    let mut cases = 0;
    for n in 3..=7usize {
        for d1 in 1..n {
            for d2 in 1..n - d1 {
                if n * d1 % 2 != 0 || n * d2 % 2 != 0 {
                    continue;
                }
                let d = d1 + d2;
                let degrees = [d1, d2, n - 1 - d];
                let dist = subgraph_count_distribution(n, d1, d, 7).unwrap();
                let graphs: u64 = dist.values().sum();
                let lhs = int(graphs) * moments_from_distribution(&dist).first;
                let partitions = count_clique_partitions(n, &degrees, 7).unwrap();
                let oracle = edge_colourings(n, &degrees);
                ensure!(
                    lhs == int(partitions.0.clone()) && lhs == int(oracle),
                    "(n, d1, d2) = ({n}, {d1}, {d2}): {lhs} vs {} vs {oracle}",
                    partitions.0
                );
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} feasible triples"))
}

fn flow_equals_hall() -> Outcome {
    for (k, (s, t, adj)) in random_instances().iter().enumerate() {
        let d = constraint(*s, *t, adj);
        let (flow, _) = min_deficiency(&d).unwrap();
        let hall = hall_deficiency_bruteforce(&d).unwrap();
        let oracle = hall_oracle(*s, *t, adj);
        ensure!(flow == hall && hall == oracle, "instance {k}: flow {flow}, hall {hall}, oracle {oracle}");
        ensure!((&flow * int((s * t) as u64)).is_integer(), "instance {k}: denominator");
    }
    Ok("100 instances, zero mismatches".into())
}

fn coupling_validity() -> Outcome {
    for (k, (s, t, adj)) in random_instances().iter().enumerate() {
        let d = constraint(*s, *t, adj);
        let (eps, joint) = min_deficiency(&d).unwrap();
        let outside = marginals_exact(&joint, &d).map_err(|e| format!("instance {k}: {e}"))?;
        ensure!(outside == eps, "instance {k}: off-D mass {outside} != {eps}");
    }
    Ok("100 instances, exact marginals and off-D mass".into())
}

fn sufficient_bound_soundness() -> Outcome {
    let mut constraints: Vec<BipartiteConstraint> =
        random_instances().iter().map(|(s, t, adj)| constraint(*s, *t, adj)).collect();
    for (n, d1, d2) in [(4, 1, 1), (6, 1, 1), (6, 1, 2), (6, 2, 2)] {
        constraints.push(regglab::coupling::sprinkling_constraint(n, d1, d2).unwrap().constraint);
    }
    let (mut tested, mut violations) = (0, 0);
    for d in &constraints {
        let (eps_star, _) = min_deficiency(d).unwrap();
        for eps in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7] {
            let b = sufficient_bound(d, eps).unwrap();
            if b.bound < 1.0 {
                tested += 1;
                violations += (eps_star > BigRational::from_float(b.bound).unwrap()) as usize;
            }
        }
    }
    ensure!(tested > 0, "no instance had bound < 1");
    ensure!(violations == 0, "{violations} violations out of {tested}");
    Ok(format!("{tested} (instance, eps) pairs with bound < 1, zero violations"))
}

fn detq_bands() -> Outcome {
    let seed = SeedSpec::new(7, 0);
    let (n, d) = (24, 16);
    let (centre, half) = detq_band(n, d, Regime::Dense { alpha: 2.0 / 3.0 }).unwrap();
    let steps = default_switching_steps(n, d);
    let dense: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (g, _) = sample_switching(n, d, steps, seed.substream(i)).unwrap();
            assert_eq!(g.regular_degree(), Some(d));
            let q = g.signless_laplacian();
            let lu = q.determinant();
            let eig: f64 = q.eigenvalues(1e-12).unwrap().values.iter().map(|x| x.ln()).sum();
            assert!(lu.sign == 1 && (lu.log_abs - eig).abs() < 1e-8, "LU and Jacobi disagree");
            lu.log_abs
        })
        .collect();
    let dense_bad = dense.iter().filter(|x| (*x - centre).abs() > half).count();
    ensure!(dense_bad == 0, "{dense_bad} dense samples outside {centre} ± {half}");

    let (n, d) = (20, 10);
    let (graphs, _) = sample_codegree_window(n, d, 0.25, 100, 200, seed.stream(1))
        .unwrap()
        .ok_or("no circulant start in the codegree window")?;
    ensure!(graphs.len() == 100, "window walk returned {} graphs", graphs.len());
    let mut worst_eps: f64 = 0.0;
    for (k, g) in graphs.iter().enumerate() {
        let eps = quasirandom_eps(g).unwrap();
        ensure!(eps <= 0.25, "graph {k}: measured eps {eps}");
        worst_eps = worst_eps.max(eps);
        let (c, h) = detq_band(n, d, Regime::Quasirandom { eps }).unwrap();
        let lg = g.signless_laplacian().determinant().log_abs;
        ensure!((lg - c).abs() <= h, "graph {k}: log det Q {lg} outside {c} ± {h}");
    }
    Ok(format!("100 + 100 graphs in band, largest measured eps {worst_eps:.3}"))
}

fn isserlis_vs_monte_carlo() -> Outcome {
    let configs = [
        (8, 3, 1),
        (8, 5, 2),
        (10, 4, 1),
        (10, 6, 2),
        (12, 3, 1),
        (12, 5, 2),
        (14, 4, 3),
        (14, 6, 1),
        (16, 6, 2),
        (16, 9, 4),
    ];
    let zs: Vec<f64> = configs
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, &(n, d, h))| {
            let mut i = 0;
            let g = loop {
                let (g, _) = sample_regular(n, d, SeedSpec::new(11, k as u64).substream(i)).unwrap();
                if !is_bipartite(&g) {
                    break g;
                }
                i += 1;
            };
            let lambda = h as f64 / d as f64;
            let (eu, ev2) = isserlis_moments(&g, lambda).unwrap();
            let [mu, mv2] = uv_monte_carlo(&g, lambda, 100_000, 1000 + k as u64);
            [(mu.0 - eu) / mu.1, (mv2.0 - ev2) / mv2.1]
        })
        .collect();
    let over3 = zs.iter().filter(|z| z.abs() > 3.0).count();
    let max = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    ensure!(zs.len() == 20 && zs.iter().all(|z| z.is_finite()), "non-finite z-scores");
    ensure!(over3 <= 1 && max <= 4.0, "{over3} of 20 above 3, max |z| = {max:.2}");
    Ok(format!("20 z-scores, max |z| = {max:.2}, {over3} above 3"))
}

fn overlap_law() -> Outcome {
    let pm4 = perfect_matching(4);
    let dist = overlap_distribution_exact(&pm4, &pm4, 9).unwrap();
    let OverlapPmf::Exact(p) = &dist.pmf else {
        return Err("exact pmf expected".into());
    };
    let want = [(0usize, frac(2, 3)), (2, frac(1, 3))].into_iter().collect();
    ensure!(*p == want, "(4, 1) pmf {p:?}");

    let mut types: Vec<(usize, usize, Vec<Graph>)> = Vec::new();
    for n in [4, 6, 8] {
        types.push((n, 1, vec![perfect_matching(n)]));
    }
    let cycles: [&[&[usize]]; 5] = [
        &[&[4]],
        &[&[5]],
        &[&[6], &[3, 3]],
        &[&[7], &[4, 3]],
        &[&[8], &[5, 3], &[4, 4]],
    ];
    for (i, parts) in cycles.iter().enumerate() {
        types.push((i + 4, 2, parts.iter().map(|l| disjoint_cycles(l)).collect()));
    }
    let mut checks = 0;
    for (n, h, graphs) in &types {
        for a in graphs {
            for b in graphs {
                let dist = overlap_distribution_exact(a, b, 9).unwrap();
                for alpha in [E, 4.0, 6.0] {
                    let tb = overlap_tail_bound(*h, *n, alpha).unwrap();
                    let tail = dist.exact_tail(tb.m_alpha).unwrap();
                    let bound = BigRational::from_float(tb.bound).unwrap();
                    ensure!(tail <= bound, "n = {n}, h = {h}, alpha = {alpha}: {tail} > {}", tb.bound);
                    checks += 1;
                }
            }
        }
    }
    let tv = |n| {
        let m = perfect_matching(n);
        overlap_distribution_exact(&m, &m, 9).unwrap().tv_to_poisson(1)
    };
    let (tv6, tv8) = (tv(6), tv(8));
    ensure!(tv8 < tv6, "TV did not decrease: {tv6} -> {tv8}");
    Ok(format!("pmf exact, {checks} tail checks, TV {tv6:.4} -> {tv8:.4}"))
}

fn formula_consistency() -> Outcome {
    let mut points = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    while points < 50 {
        let n = rng.random_range(6..=400usize);
        let d1 = rng.random_range(1..n - 2);
        let d2 = rng.random_range(1..n - 1 - d1);
        if n * d1 % 2 != 0 || n * d2 % 2 != 0 {
            continue;
        }
        let c2 = conjecture2_estimate(n, d1, d2).unwrap().log_value;
        let r = rhat(n, d1, d1 + d2).unwrap().log_value;
        ensure!(c2.to_bits() == r.to_bits(), "conjecture2 ({n},{d1},{d2}): {c2} != {r}");
        let hm = hm_partition_estimate(n, &[d1, n - 1 - d1]).unwrap().log_value;
        let rk = rhat(n, d1, n - 1).unwrap().log_value;
        ensure!(hm.to_bits() == rk.to_bits(), "partition ({n},{d1}): {hm} != {rk}");
        points += 1;
    }
    Ok("50 points, bit-identical logs".into())
}

fn convergence_trends() -> Outcome {
    let errs: Vec<f64> = [8usize, 10, 12, 14]
        .iter()
        .map(|&n| {
            let est = rhat(n, 1, n - 1).unwrap();
            (est.ratio_to_count(&double_factorial(n as u64)) - 1.0).abs()
        })
        .collect();
    ensure!(errs.windows(2).all(|w| w[1] < w[0]), "matching errors not decreasing: {errs:?}");
    let ratio = |n: usize| {
        let k = Graph::complete(n).unwrap();
        let exact = count_regular_spanning_subgraphs(&k, 2).unwrap();
        theorem5_count(&k, 2).unwrap().ratio_to_count(&exact.0)
    };
    let (r8, r12) = (ratio(8), ratio(12));
    ensure!((r12 - 1.0).abs() < (r8 - 1.0).abs(), "K_n, h = 2 ratio {r8} -> {r12}");
    Ok(format!(
        "matching errors {:.2e} > {:.2e} > {:.2e} > {:.2e}; K_n h = 2 ratio {r8:.4} -> {r12:.4}",
        errs[0], errs[1], errs[2], errs[3]
    ))
}

fn sampler_uniformity() -> Outcome {
    let support = enumerate_regular(6, 3, 6).unwrap();
    ensure!(support.len() == 70, "support has {} graphs", support.len());
    let index: HashMap<Graph, usize> = support.into_iter().enumerate().map(|(i, g)| (g, i)).collect();
    let seed = SeedSpec::new(12, 0);
    let samples = 70_000u64;
    let hits: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|i| index[&sample_pairing(6, 3, seed.substream(i)).unwrap().0])
        .collect();
    let mut counts = [0u64; 70];
    for h in hits {
        counts[h] += 1;
    }
    let expected = samples as f64 / 70.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = ChiSquared::new(69.0).unwrap().sf(chi2);
    ensure!(p > 0.001, "chi-square {chi2:.1}, p = {p:.2e}");
    let (eps, _, _) = build_sprinkling_coupling(4, 1, 1).unwrap();
    ensure!(eps.is_zero(), "sprinkling (4,1,1) eps = {eps}");
    Ok(format!("chi-square {chi2:.1} on 69 dof, p = {p:.3}; (4,1,1) eps = 0"))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 12] = [
        ("exact matching counts", 1, matching_counts),
        ("complement symmetry", 60, complement_symmetry),
        ("double-counting identity", 300, double_counting),
        ("flow deficiency equals Hall deficiency", 60, flow_equals_hall),
        ("coupling validity", 60, coupling_validity),
        ("sufficient-bound soundness", 60, sufficient_bound_soundness),
        ("log det Q bands", 120, detq_bands),
        ("Isserlis vs Monte Carlo", 120, isserlis_vs_monte_carlo),
        ("overlap law", 120, overlap_law),
        ("formula consistency", 1, formula_consistency),
        ("convergence trends", 60, convergence_trends),
        ("sampler uniformity", 60, sampler_uniformity),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*budget) => {
                Err(format!("took {elapsed:.1?}, budget {budget} s"))
            }
            other => other,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += outcome.is_err() as usize;
        println!("{tag} criterion {:>2} {name}: {detail} [{elapsed:.2?}]", k + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
