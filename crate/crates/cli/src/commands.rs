use std::collections::BTreeMap;
use std::f64::consts::E;
use std::path::Path;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use regglab::asymptotics::{
    conjecture2_estimate, detq_band, gaussian_uv_monte_carlo, isserlis_moments, overlap_pmf,
    overlap_pmf_error_scale, overlap_tail_bound, quasirandom_eps, rhat, theorem5_count, Regime,
};
use regglab::coupling::build_sprinkling_coupling;
use regglab::exactcount::{
    count_clique_partitions, count_regular_spanning_subgraphs, moments_from_distribution,
    subgraph_count_distribution, DEFAULT_MAX_PARTITION_N,
};
use regglab::overlap::{overlap_distribution_exact, overlap_distribution_mc, OverlapPmf};
use regglab::sampler::{
    circulant_start, default_switching_steps, sample_codegree_window, sample_regular,
    sample_switching,
};
use regglab::subgraphs::KERNEL_MAX_N;
use regglab::{Graph, SeedSpec};

use crate::report::{rational, real, ExperimentReport};
use crate::{
    CliError, Common, ConjecturesArgs, CountArgs, Mode, MomentsArgs, OverlapArgs, SamplerChoice,
    SpectraArgs,
};

type CmdResult = Result<ExperimentReport, CliError>;

fn seed_of(common: &Common) -> SeedSpec {
    SeedSpec::new(common.seed, common.stream)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Usage(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))
}

fn guard_enum(n: usize, limit: usize) -> Result<(), CliError> {
    if n > limit {
        return Err(CliError::Guard(format!(
            "exact enumeration on n = {n} exceeds --max-enum {limit}"
        )));
    }
    Ok(())
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn cmd_count(common: &Common, a: &CountArgs) -> CmdResult {
    let seed = seed_of(common);
    let mut report = ExperimentReport::new("count", seed);
    report.param("h", a.h);
    let host = match (&a.complete, &a.graph, a.n, a.d) {
        (Some(n), _, _, _) => {
            report.param("complete", n);
            Graph::complete(*n)?
        }
        (_, Some(path), _, _) => {
            report.param("graph", path.display().to_string());
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
            Graph::parse_edge_list(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (_, _, Some(n), Some(d)) => {
            report.param("n", n);
            report.param("d", d);
            sample_regular(n, d, seed)?.0
        }
        _ => {
            return Err(CliError::Usage(
                "give one of --complete N, --graph FILE or --n N --d D".into(),
            ))
        }
    };
    let n = host.n();
    guard_enum(n, common.max_enum)?;
    let count = count_regular_spanning_subgraphs(&host, a.h)?;
    report.result("n", json!(n));
    report.result("count", json!(count.0.to_u64()));
    let Some(d) = host.regular_degree() else {
        report.result("host_regular", json!(false));
        return Ok(report);
    };
    report.result("host_regular", json!(true));
    report.result("host_degree", json!(d));
    if a.h == 0 || a.h >= d {
        return Ok(report);
    }
    if let Ok(est) = rhat(n, a.h, d) {
        report.result("rhat_log", real(est.log_value));
        report.result("rhat_ratio", real(est.ratio_to_count(&count.0)));
    }
    match theorem5_count(&host, a.h) {
        Ok(est) => {
            report.result("theorem5_log", real(est.log_value));
            report.result("theorem5_ratio", real(est.ratio_to_count(&count.0)));
            report.result("theorem5_regime", json!(est.regime_satisfied));
            report.result("theorem5_terms", json!(est.correction_terms));
        }
        Err(e) => report.result("theorem5_error", json!(e.to_string())),
    }
    Ok(report)
}

pub fn cmd_conjectures(common: &Common, a: &ConjecturesArgs) -> CmdResult {
    let seed = seed_of(common);
    let mut report = ExperimentReport::new("conjectures", seed);
    let (n, d1, d2) = (a.n, a.d1, a.d2);
    let d = d1 + d2;
    report.param("n", n);
    report.param("d1", d1);
    report.param("d2", d2);
    report.param("mode", format!("{:?}", a.mode).to_lowercase());
    if d >= n {
        return Err(CliError::Usage(format!("d1 + d2 = {d} must be below n = {n}")));
    }
    let estimate = conjecture2_estimate(n, d1, d2).ok();
    if let Some(est) = &estimate {
        report.result("conjecture2_log", real(est.log_value));
    }
    match a.mode {
        Mode::Exact => {
            guard_enum(n, common.max_enum).map_err(|e| CliError::Guard(format!("{e}; try --mode mc")))?;
            let dist = subgraph_count_distribution(n, d1, d, common.max_enum).map_err(|e| match e {
                regglab::Error::TooLarge(m) => CliError::Guard(format!("{m}; try --mode mc")),
                other => other.into(),
            })?;
            let moments = moments_from_distribution(&dist);
            let graphs: u64 = dist.values().sum();
            let pairs: u64 = dist.iter().map(|(v, m)| v * m).sum();
            report.result("regular_graphs", json!(graphs));
            report.result("disjoint_pairs", json!(pairs));
            report.result("first_moment", rational(&moments.first));
            report.result("second_moment", rational(&moments.second));
            if let Some(r) = moments.ratio() {
                report.result("second_over_first_sq", rational(&r));
            }
            report.result(
                "histogram",
                json!(dist.iter().map(|(v, m)| (v.to_string(), m)).collect::<BTreeMap<_, _>>()),
            );
            if let (Some(est), false) = (&estimate, moments.first.is_zero()) {
                report.result("conjecture2_ratio", real(est.ratio_to_rational(&moments.first)));
            }
            if n <= DEFAULT_MAX_PARTITION_N {
                let partitions = count_clique_partitions(n, &[d1, d2, n - 1 - d], DEFAULT_MAX_PARTITION_N)?;
                report.result("clique_partitions", json!(partitions.0.to_u64()));
                report.check("double_counting_identity", partitions.0 == pairs.into());
                if graphs as usize <= a.max_coupling_s {
                    let (eps, _, sr) = build_sprinkling_coupling(n, d1, d2)?;
                    report.result("eps_star", rational(&eps));
                    report.result("ordered_pairs", json!(sr.ordered_pairs));
                    report.result(
                        "concentration",
                        json!(sr
                            .concentration
                            .iter()
                            .map(|(k, p)| (k.to_string(), p.to_string()))
                            .collect::<BTreeMap<_, _>>()),
                    );
                    report.check("coupling_marginals_uniform", sr.marginals_uniform);
                    report.check("coupling_off_d_mass_is_eps_star", sr.off_d_mass == eps);
                    report.check("eps_star_closed_form", sr.closed_form_eps == eps);
                } else {
                    report.result("coupling_skipped", json!("more graphs than --max-coupling-s"));
                }
            }
        }
        Mode::Mc => {
            if n > KERNEL_MAX_N {
                return Err(CliError::Guard(format!("counting needs n <= {KERNEL_MAX_N}")));
            }
            if a.trials < 2 {
                return Err(CliError::Usage("--trials must be at least 2".into()));
            }
            report.param("trials", a.trials);
            let samples: Vec<(f64, bool)> = (0..a.trials)
                .into_par_iter()
                .map(|i| {
                    let (g, stats) = sample_regular(n, d, seed.substream(i))?;
                    let c = count_regular_spanning_subgraphs(&g, d1)?;
                    Ok((c.0.to_f64().unwrap_or(f64::NAN), stats.approximate))
                })
                .collect::<Result<_, regglab::Error>>()?;
            let t = a.trials as f64;
            let m1 = samples.iter().map(|s| s.0).sum::<f64>() / t;
            let m2 = samples.iter().map(|s| s.0 * s.0).sum::<f64>() / t;
            let m4 = samples.iter().map(|s| s.0.powi(4)).sum::<f64>() / t;
            let m3 = samples.iter().map(|s| s.0.powi(3)).sum::<f64>() / t;
            let var1 = (m2 - m1 * m1) * t / (t - 1.0);
            let var2 = (m4 - m2 * m2) * t / (t - 1.0);
            let cov = (m3 - m1 * m2) * t / (t - 1.0);
            report.result("first_moment", json!({"estimate": real(m1), "stderr": real((var1 / t).sqrt())}));
            report.result("second_moment", json!({"estimate": real(m2), "stderr": real((var2 / t).sqrt())}));
            // Delta method for m2 / m1^2.
            let ratio = m2 / (m1 * m1);
            let (g1, g2) = (-2.0 * m2 / m1.powi(3), 1.0 / (m1 * m1));
            let var_r = g1 * g1 * var1 + g2 * g2 * var2 + 2.0 * g1 * g2 * cov;
            report.result(
                "second_over_first_sq",
                json!({"estimate": real(ratio), "stderr": real((var_r / t).sqrt())}),
            );
            report.result("sampler_approximate", json!(samples.iter().any(|s| s.1)));
            if let Some(est) = &estimate {
                report.result("conjecture2_ratio", real(est.value() / m1));
            }
        }
    }
    Ok(report)
}

fn parse_alphas(text: &str) -> Result<Vec<(String, f64)>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v = if s == "e" {
                E
            } else {
                s.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad alpha `{s}`")))?
            };
            Ok((s.to_string(), v))
        })
        .collect()
}

pub fn cmd_overlap(common: &Common, a: &OverlapArgs) -> CmdResult {
    let seed = seed_of(common);
    let mut report = ExperimentReport::new("overlap", seed);
    report.param("n", a.n);
    report.param("h", a.h);
    report.param("mode", format!("{:?}", a.mode).to_lowercase());
    report.param("alpha", &a.alpha);
    let alphas = parse_alphas(&a.alpha)?;
    let h1 = circulant_start(a.n, a.h)?;
    let h2 = sample_regular(a.n, a.h, seed)?.0;
    let dist = match a.mode {
        Mode::Exact => overlap_distribution_exact(&h1, &h2, common.max_perm)?,
        Mode::Mc => {
            report.param("trials", a.trials);
            overlap_distribution_mc(&h1, &h2, a.trials, seed.stream(seed.stream_index ^ 0x5eed))?
        }
    };
    match &dist.pmf {
        OverlapPmf::Exact(p) => report.result(
            "pmf",
            json!(p.iter().map(|(m, q)| (m.to_string(), q.to_string())).collect::<BTreeMap<_, _>>()),
        ),
        OverlapPmf::MonteCarlo(p) => report.result(
            "pmf",
            json!(p
                .iter()
                .map(|(m, (e, s))| (m.to_string(), json!({"estimate": real(*e), "stderr": real(*s)})))
                .collect::<BTreeMap<_, _>>()),
        ),
    }
    report.result(
        "poisson_pmf",
        json!((0..=dist.max_support()).map(|m| real(overlap_pmf(a.h, m))).collect::<Vec<_>>()),
    );
    report.result("tv_to_poisson", real(dist.tv_to_poisson(a.h)));
    report.result("poisson_error_scale", real(overlap_pmf_error_scale(a.h, a.n)));
    let mut tails = BTreeMap::new();
    for (label, alpha) in alphas {
        let tb = overlap_tail_bound(a.h, a.n, alpha)?;
        let tail = dist.tail(tb.m_alpha);
        let ok = tail <= tb.bound;
        tails.insert(
            label.clone(),
            json!({
                "m_alpha": real(tb.m_alpha),
                "bound": real(tb.bound),
                "exponent": tb.exponent,
                "tail": real(tail),
                "holds": ok,
            }),
        );
        if let Some(exact) = dist.exact_tail(tb.m_alpha) {
            report.check(&format!("tail_bound_alpha_{label}"), to_f64(&exact) <= tb.bound);
        }
    }
    report.result("tail_bound", json!(tails));
    if let Some(path) = &common.csv {
        std::fs::write(path, dist.to_csv())
            .map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?;
    }
    Ok(report)
}

fn parse_regime(text: &str) -> Result<Regime, CliError> {
    let bad = || CliError::Usage(format!("--regime must be dense:ALPHA or quasirandom:EPS, got `{text}`"));
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    let value = if value == "2/3" {
        2.0 / 3.0
    } else {
        value.parse::<f64>().map_err(|_| bad())?
    };
    match kind {
        "dense" => Ok(Regime::Dense { alpha: value }),
        "quasirandom" => Ok(Regime::Quasirandom { eps: value }),
        _ => Err(bad()),
    }
}

pub fn cmd_spectra(common: &Common, a: &SpectraArgs) -> CmdResult {
    let seed = seed_of(common);
    let mut report = ExperimentReport::new("spectra", seed);
    let (n, d) = (a.n, a.d);
    report.param("n", n);
    report.param("d", d);
    report.param("samples", a.samples);
    report.param("regime", &a.regime);
    report.param("sampler", format!("{:?}", a.sampler).to_lowercase());
    let regime = parse_regime(&a.regime)?;

    let steps = a.steps.unwrap_or_else(|| default_switching_steps(n, d));
    let graphs: Vec<Graph> = match a.sampler {
        SamplerChoice::Window => {
            let Regime::Quasirandom { eps } = regime else {
                return Err(CliError::Usage("--sampler window needs a quasirandom regime".into()));
            };
            sample_codegree_window(n, d, eps, a.samples, a.thin, seed)?
                .ok_or_else(|| CliError::Usage(format!("no circulant start inside the eps = {eps} window")))?
                .0
        }
        choice => (0..a.samples as u64)
            .into_par_iter()
            .map(|i| {
                let s = seed.substream(i);
                Ok(match choice {
                    SamplerChoice::Switching => sample_switching(n, d, steps, s)?.0,
                    _ => sample_regular(n, d, s)?.0,
                })
            })
            .collect::<Result<_, regglab::Error>>()?,
    };

    let nf = n as f64;
    let df = d as f64;
    let cn_center = df * df / nf;
    let cn_slack = df.powi(3) / (nf * nf * nf.ln());
    let rows: Vec<(Value, Vec<String>, Option<bool>)> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let det = g.signless_laplacian().determinant();
            let (lo, hi) = g.common_neighbour_range().unwrap_or((0, 0));
            let cn_ok = (lo as f64) >= cn_center - cn_slack && (hi as f64) <= cn_center + cn_slack;
            let eps_measured = quasirandom_eps(g).unwrap_or(f64::INFINITY);
            let sample_regime = match regime {
                Regime::Dense { .. } => regime,
                Regime::Quasirandom { eps } => Regime::Quasirandom {
                    eps: if eps_measured <= eps { eps_measured } else { eps },
                },
            };
            let eligible = match regime {
                Regime::Dense { .. } => true,
                Regime::Quasirandom { eps } => eps_measured <= eps,
            };
            let band = detq_band(n, d, sample_regime);
            let (center, half, regime_note) = match &band {
                Ok((c, w)) => (*c, *w, Value::Null),
                Err(e) => (f64::NAN, f64::NAN, json!(e.to_string())),
            };
            let in_band = (det.sign > 0 && band.is_ok() && eligible)
                .then(|| (det.log_abs - center).abs() <= half);
            let singular = det.sign <= 0;
            let row = json!({
                "index": i,
                "log_det_q": real(det.log_abs),
                "det_sign": det.sign,
                "center": real(center),
                "halfwidth": real(half),
                "in_band": in_band,
                "singular": singular,
                "regime_violation": if eligible { regime_note } else { json!("codegree deviation exceeds eps") },
                "eps_measured": real(eps_measured),
                "codegree_min": lo,
                "codegree_max": hi,
                "codegree_window_ok": cn_ok,
            });
            let csv_row = vec![
                i.to_string(),
                det.log_abs.to_string(),
                det.sign.to_string(),
                center.to_string(),
                half.to_string(),
                in_band.map_or("na".into(), |b| b.to_string()),
                eps_measured.to_string(),
                lo.to_string(),
                hi.to_string(),
            ];
            (row, csv_row, in_band)
        })
        .collect();

    let checked = rows.iter().filter(|r| r.2.is_some()).count();
    let passed = rows.iter().filter(|r| r.2 == Some(true)).count();
    let singular = rows.iter().filter(|r| r.0["singular"] == json!(true)).count();
    let cn_ok = rows.iter().filter(|r| r.0["codegree_window_ok"] == json!(true)).count();
    report.result("samples", json!(rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>()));
    report.result("band_checked", json!(checked));
    report.result("band_passed", json!(passed));
    report.result("singular_samples", json!(singular));
    report.result("codegree_window_passed", json!(cn_ok));
    report.check("detq_band", passed == checked);
    if let Some(path) = &common.csv {
        let table: Vec<Vec<String>> = rows.into_iter().map(|r| r.1).collect();
        write_csv(
            path,
            &["index", "log_det_q", "det_sign", "center", "halfwidth", "in_band", "eps_measured", "codegree_min", "codegree_max"],
            &table,
        )?;
    }
    Ok(report)
}

pub fn cmd_moments(common: &Common, a: &MomentsArgs) -> CmdResult {
    let seed = seed_of(common);
    let mut report = ExperimentReport::new("moments", seed);
    let (n, d, h) = (a.n, a.d, a.h);
    report.param("n", n);
    report.param("d", d);
    report.param("h", h);
    report.param("samples", a.samples);
    report.param("mc_trials", a.mc_trials);
    if h == 0 || h >= d || d >= n {
        return Err(CliError::Usage(format!("need 0 < h < d < n, got h = {h}, d = {d}, n = {n}")));
    }
    if a.mc_trials < 2 {
        return Err(CliError::Usage("--mc-trials must be at least 2".into()));
    }
    let lambda = h as f64 / d as f64;
    let exact_ok = n <= common.max_enum;
    let rows: Vec<(Value, Vec<f64>)> = (0..a.samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.substream(i);
            let g = if d == n - 1 { Graph::complete(n)? } else { sample_regular(n, d, s)?.0 };
            let mut row = serde_json::Map::new();
            row.insert("index".into(), json!(i));
            let mut z = Vec::new();
            match isserlis_moments(&g, lambda) {
                Ok((eu, ev2)) => {
                    let mut rng = s.rng_block(1);
                    let ((mu, su), (mv, sv)) = gaussian_uv_monte_carlo(&g, lambda, a.mc_trials, &mut rng)?;
                    let score = |m: f64, e: f64, se: f64| if se > 0.0 { (m - e) / se } else if m == e { 0.0 } else { f64::INFINITY };
                    let (zu, zv) = (score(mu, eu, su), score(mv, ev2, sv));
                    z = vec![zu, zv];
                    row.insert("exp_u".into(), real(eu));
                    row.insert("exp_v2".into(), real(ev2));
                    row.insert("mc_u".into(), json!({"estimate": real(mu), "stderr": real(su)}));
                    row.insert("mc_v2".into(), json!({"estimate": real(mv), "stderr": real(sv)}));
                    row.insert("z_u".into(), real(zu));
                    row.insert("z_v2".into(), real(zv));
                }
                Err(e) => {
                    row.insert("singular".into(), json!(e.to_string()));
                }
            }
            match theorem5_count(&g, h) {
                Ok(est) => {
                    row.insert("theorem5_log".into(), real(est.log_value));
                    row.insert("theorem5_regime".into(), json!(est.regime_satisfied));
                    if exact_ok && n * h % 2 == 0 {
                        let c = count_regular_spanning_subgraphs(&g, h)?;
                        row.insert("exact_count".into(), json!(c.0.to_u64()));
                        row.insert("theorem5_ratio".into(), real(est.ratio_to_count(&c.0)));
                    }
                }
                Err(e) => {
                    row.insert("theorem5_error".into(), json!(e.to_string()));
                }
            }
            Ok((Value::Object(row), z))
        })
        .collect::<Result<_, regglab::Error>>()?;

    let zs: Vec<f64> = rows.iter().flat_map(|r| r.1.iter().copied()).collect();
    let max_z = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    report.result("samples", json!(rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>()));
    report.result("z_scores", json!(zs.len()));
    report.result("max_abs_z", real(max_z));
    report.result("z_above_3", json!(zs.iter().filter(|z| z.abs() > 3.0).count()));
    report.result("z_above_4", json!(zs.iter().filter(|z| z.abs() > 4.0).count()));
    if 2 * h == d {
        let zero = rows.iter().all(|r| r.0.get("exp_v2").is_none_or(|v| *v == json!(0.0)));
        report.check("exp_v2_vanishes_at_half_density", zero);
    }
    if let Some(path) = &common.csv {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                ["index", "exp_u", "exp_v2", "z_u", "z_v2", "theorem5_log", "theorem5_ratio"]
                    .iter()
                    .map(|k| r.0.get(*k).map_or(String::new(), |v| v.to_string()))
                    .collect()
            })
            .collect();
        write_csv(path, &["index", "exp_u", "exp_v2", "z_u", "z_v2", "theorem5_log", "theorem5_ratio"], &table)?;
    }
    Ok(report)
}
