//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the full disorder ensemble (1000 realizations per cell by default;
//! override with `SUBRADIANCE_ACCEPTANCE_REALIZATIONS`). Failing criteria are
//! reported but only turn the exit status non-zero when
//! `SUBRADIANCE_ACCEPTANCE_STRICT=1`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use subradiance::ensemble::{run_ensemble, spec_grid, EnsembleConfig, EnsembleStats};
use subradiance::fss::{collapse, synthetic_table, CollapseOptions, CollapseResult};
use subradiance::io::{write_csv, EnsembleRecord};
use subradiance::localization::{
    center_statistics, equivalence_check, sigma_scaling, CenterEstimator, HistogramOptions, LocalizationStats,
    PotentialFit,
};
use subradiance::model::{build_h_eff, build_h_inv, ChainSpec, Realization};
use subradiance::scaling::{
    detect_crossover_nc, fit_exponential, fit_power_law, xi_from_moments, ScalingSeries, XiRow, XiTable,
};
use subradiance::spectrum::{
    boundary_rate_identity, diagonalize, diagonalize_inverse, realization_modes, select_target_mode, ModeTarget, Solver,
};

const PHI: f64 = PI / 2.0;
const SEED: u64 = 1;
const STRONG: usize = 0;
const WEAK: usize = 1;
const SUPER: usize = 2;
const DISORDERS: [f64; 20] = [
    0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.12, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
];
const COLLAPSE_SIZES: [usize; 4] = [100, 200, 300, 400];

fn targets() -> [ModeTarget; 3] {
    [
        ModeTarget::band_edge_low(),
        ModeTarget::fixed_k(0.75 * PI),
        ModeTarget::fixed_k(0.49 * PI),
    ]
}

/// Full size grid: every N up to 50, then steps of 25 up to 400.
fn sizes() -> Vec<usize> {
    (1..=50).chain((3..=16).map(|i| 25 * i)).collect()
}

fn strong_window() -> Vec<f64> {
    DISORDERS.iter().copied().filter(|&w| w > 0.0 && w <= 0.6).collect()
}

fn weak_window() -> Vec<f64> {
    DISORDERS.iter().copied().filter(|&w| w >= 0.4).collect()
}

type Outcome = Result<(bool, String), String>;

struct Report {
    results: Vec<(usize, &'static str, bool)>,
}

impl Report {
    fn record(&mut self, id: usize, name: &'static str, outcome: Outcome) {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        println!(
            "criterion {id:>2} [{}] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.results.push((id, name, pass));
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn main() {
    let n_real: u64 = std::env::var("SUBRADIANCE_ACCEPTANCE_REALIZATIONS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1000);
    let strict = std::env::var("SUBRADIANCE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    println!("acceptance: {n_real} realizations per disordered cell, master seed {SEED}");
    let mut report = Report { results: Vec::new() };

    report.record(1, "exact structure", exact_structure());
    report.record(2, "ordered scaling", ordered_scaling());

    let started = Instant::now();
    let data = match Data::simulate(n_real) {
        Ok(d) => d,
        Err(e) => {
            println!("ensemble failed: {e}");
            std::process::exit(1);
        }
    };
    eprintln!("ensemble finished in {:.0} s", started.elapsed().as_secs_f64());

    report.record(3, "disordered exponential scaling", exponential_scaling(&data));
    report.record(4, "crossover size", crossover(&data));
    report.record(5, "xi saturation and growth", xi_behaviour(&data));
    let collapses = Collapses::compute(&data);
    report.record(6, "criticality", criticality(&collapses));
    report.record(7, "localization", localization(&data, &collapses));
    report.record(8, "effective potential", potential(n_real));
    report.record(9, "mean versus typical", mean_vs_typical(&data));
    report.record(10, "property suite", property_suite());

    let failed: Vec<_> = report.results.iter().filter(|r| !r.2).map(|r| r.0).collect();
    println!(
        "acceptance summary: {} passed, {} failed {:?}",
        report.results.len() - failed.len(),
        failed.len(),
        failed
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}

fn exact_structure() -> Outcome {
    let (mut inv_err, mut im_off, mut resid, mut trace_err, mut boundary_err) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut cases = 0;
    for n in 2..=12 {
        for phi in [PHI, 0.3 * PI] {
            let spec = ChainSpec::new(n, phi, 0.5, 1.0, SEED).map_err(err)?;
            for r in 0..100 {
                let real = Realization::draw(&spec, r).map_err(err)?;
                let h = build_h_eff(&real, 1.0, phi);
                let tri = build_h_inv(&real, 1.0, phi).map_err(err)?;
                let dense_inv = h.inverse();
                let scale = dense_inv.iter().map(|z| z.norm()).fold(1.0, f64::max);
                for (i, (a, b)) in tri.to_dense().iter().zip(&dense_inv).enumerate() {
                    inv_err = inv_err.max((a - b).norm() / scale);
                    let (row, col) = (i / n, i % n);
                    if !(row == col && (row == 0 || row == n - 1)) {
                        im_off = im_off.max(a.im.abs() / scale);
                    }
                }
                for modes in [diagonalize(&h).map_err(err)?, diagonalize_inverse(&tri).map_err(err)?] {
                    let total: f64 = modes.iter().map(|m| m.gamma).sum();
                    trace_err = trace_err.max((total - n as f64 / 2.0).abs() / n as f64);
                    for m in &modes {
                        let hv = h.mul_vec(&m.vector);
                        let r: f64 = hv
                            .iter()
                            .zip(&m.vector)
                            .map(|(a, v)| (a - m.omega * v).norm())
                            .fold(0.0, f64::max);
                        resid = resid.max(r);
                        let b = boundary_rate_identity(m, 1.0);
                        boundary_err = boundary_err.max((b.lhs - b.rhs).abs() / b.lhs.abs().max(1.0));
                    }
                }
                cases += 1;
            }
        }
    }
    let worst = inv_err.max(im_off).max(resid).max(trace_err).max(boundary_err);
    Ok((
        worst < 1e-10,
        format!(
            "{cases} chains, max errors: inverse {inv_err:.1e}, Im off-boundary {im_off:.1e}, residual {resid:.1e}, \
             trace {trace_err:.1e}, boundary identity {boundary_err:.1e} (limit 1e-10)"
        ),
    ))
}

fn ordered_rates(target: &ModeTarget, sizes: &[usize]) -> Result<ScalingSeries, String> {
    let mut pts = Vec::new();
    for &n in sizes {
        let real = Realization::draw(&ChainSpec::ordered(n, PHI).map_err(err)?, 0).map_err(err)?;
        let modes = realization_modes(&real, 1.0, PHI, Solver::Tridiagonal).map_err(err)?;
        let m = select_target_mode(&modes, target, PHI, 1.0).map_err(err)?;
        pts.push((n, m.ln_gamma.exp()));
    }
    ScalingSeries::new(pts).map_err(err)
}

fn ordered_scaling() -> Outcome {
    let sizes = [50, 100, 200, 400];
    let [strong, weak, _] = targets();
    let s = fit_power_law(&ordered_rates(&strong, &sizes)?).map_err(err)?.exponent;
    let w = fit_power_law(&ordered_rates(&weak, &sizes)?).map_err(err)?.exponent;
    Ok((
        (s + 3.0).abs() <= 0.1 && (w + 1.0).abs() <= 0.1,
        format!("band-edge slope {s:.3} (want -3 +- 0.1), k = 0.75 pi slope {w:.3} (want -1 +- 0.1)"),
    ))
}

struct Data {
    stats: Vec<EnsembleStats>,
    sizes: Vec<usize>,
}

impl Data {
    fn simulate(n_real: u64) -> subradiance::Result<Data> {
        let sizes = sizes();
        let mut stats = Vec::new();
        for &w in &DISORDERS {
            let t = Instant::now();
            let specs = spec_grid(&sizes, &[w], PHI, 1.0, SEED)?;
            let cfg = EnsembleConfig {
                n_realizations: if w == 0.0 { 1 } else { n_real },
                ..Default::default()
            };
            let cells = run_ensemble(&specs, &targets(), &cfg)?;
            stats.extend(cells.into_iter().map(|c| c.stats));
            eprintln!("  W = {w:.2}: {:.1} s", t.elapsed().as_secs_f64());
        }
        Ok(Data { stats, sizes })
    }

    fn cell(&self, t: usize, n: usize, w: f64) -> &EnsembleStats {
        let target = targets()[t];
        self.stats
            .iter()
            .find(|s| s.n_qubits == n && s.disorder_w == w && s.target == target)
            .expect("cell present")
    }

    fn sizes_in(&self, lo: usize, hi: usize) -> Vec<usize> {
        self.sizes.iter().copied().filter(|&n| n >= lo && n <= hi).collect()
    }

    fn typ_series(&self, t: usize, w: f64, lo: usize, hi: usize) -> Result<ScalingSeries, String> {
        let pts = self
            .sizes_in(lo, hi)
            .into_iter()
            .map(|n| (n, self.cell(t, n, w).ln_gamma_mean.exp()))
            .collect();
        Ok(ScalingSeries::new(pts).map_err(err)?.with_meta(w, targets()[t].label()))
    }

    fn avg_series(&self, t: usize, w: f64, lo: usize, hi: usize) -> Result<ScalingSeries, String> {
        let pts = self
            .sizes_in(lo, hi)
            .into_iter()
            .map(|n| (n, self.cell(t, n, w).gamma_avg))
            .collect();
        ScalingSeries::new(pts).map_err(err)
    }

    fn xi_table(&self, t: usize, ws: &[f64]) -> Result<XiTable, String> {
        let series = ws
            .iter()
            .map(|&w| self.typ_series(t, w, 1, 400))
            .collect::<Result<Vec<_>, _>>()?;
        XiTable::from_series(&series, 2).map_err(err)
    }

    fn xi_phi_table(&self, t: usize, ws: &[f64]) -> XiTable {
        let mut rows = Vec::new();
        for &w in ws {
            for &n in &self.sizes {
                rows.push(XiRow {
                    n_max: n,
                    disorder_w: w,
                    xi: self.cell(t, n, w).xi_phi_typ,
                });
            }
        }
        XiTable { rows }
    }

    /// Crossover size against the ordered chain, with the exponential fitted
    /// over the upper half of the size range.
    fn crossover(&self, t: usize, w: f64) -> Result<Option<usize>, String> {
        let series = self.typ_series(t, w, 1, 400)?;
        let reference = self.typ_series(t, 0.0, 1, 400)?;
        let fit = fit_exponential(&self.typ_series(t, w, 200, 400)?).map_err(err)?;
        detect_crossover_nc(&series, &reference, &fit).map_err(err)
    }
}

fn exponential_scaling(data: &Data) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, name) in [(STRONG, "band edge"), (WEAK, "k = 0.75 pi")] {
        let s = data.typ_series(t, 0.4, 100, 400)?;
        let e = fit_exponential(&s).map_err(err)?;
        let p = fit_power_law(&s).map_err(err)?;
        pass &= e.r_squared > 0.99 && e.rss < p.rss;
        parts.push(format!(
            "{name}: semilog r2 {:.4}, rss exp {:.3e} vs power {:.3e}",
            e.r_squared, e.rss, p.rss
        ));
    }
    Ok((pass, format!("W = 0.4, N in [100, 400]; {}", parts.join("; "))))
}

fn crossover(data: &Data) -> Outcome {
    let ordered = data.crossover(STRONG, 0.0)?;
    let mut ncs = Vec::new();
    for w in [0.06, 0.1, 0.2, 0.4] {
        ncs.push((w, data.crossover(STRONG, w)?));
    }
    let all_found = ncs.iter().all(|(_, nc)| nc.is_some());
    let decreasing = ncs
        .windows(2)
        .all(|p| matches!((p[0].1, p[1].1), (Some(a), Some(b)) if a > b));
    let listed: Vec<String> = ncs
        .iter()
        .map(|(w, nc)| format!("W={w}: {}", nc.map_or("absent".into(), |n| n.to_string())))
        .collect();
    Ok((
        ordered.is_none() && all_found && decreasing,
        format!(
            "W=0: {}; {} (want strictly decreasing)",
            ordered.map_or("absent".into(), |n| n.to_string()),
            listed.join(", ")
        ),
    ))
}

fn xi_behaviour(data: &Data) -> Outcome {
    let table = data.xi_table(STRONG, &DISORDERS)?;
    let get = |n: usize, w: f64| table.get(n, w).ok_or_else(|| format!("missing xi at N={n}, W={w}"));
    let mut worst_var: (f64, f64) = (0.0, 0.0);
    for &w in DISORDERS.iter().filter(|&&w| w >= 0.3) {
        let vals = data
            .sizes_in(200, 400)
            .into_iter()
            .map(|n| get(n, w))
            .collect::<Result<Vec<_>, _>>()?;
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let (lo, hi) = vals
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
        let var = (hi - lo) / mean;
        if var > worst_var.1 {
            worst_var = (w, var);
        }
    }
    let growth_sizes = [50, 100, 200, 300, 400];
    let mut growth_fail = Vec::new();
    for &w in DISORDERS.iter().filter(|&&w| w <= 0.05) {
        let vals = growth_sizes.iter().map(|&n| get(n, w)).collect::<Result<Vec<_>, _>>()?;
        if !vals.windows(2).all(|p| p[1] > p[0]) {
            growth_fail.push(w);
        }
    }
    Ok((
        worst_var.1 < 0.1 && growth_fail.is_empty(),
        format!(
            "worst spread over N in [200, 400] at W >= 0.3: {:.1}% (W = {}); xi increasing in N {:?} at every W <= 0.05{}",
            100.0 * worst_var.1,
            worst_var.0,
            growth_sizes,
            if growth_fail.is_empty() { String::new() } else { format!(" except {growth_fail:?}") }
        ),
    ))
}

struct Collapses {
    strong: Result<CollapseResult, String>,
    weak: Result<CollapseResult, String>,
    superradiant: Result<CollapseResult, String>,
    strong_phi: Result<CollapseResult, String>,
    weak_phi: Result<CollapseResult, String>,
}

impl Collapses {
    fn compute(data: &Data) -> Collapses {
        let opts = CollapseOptions {
            seed: SEED,
            ..Default::default()
        };
        let run = |t: usize, ws: &[f64]| -> Result<CollapseResult, String> {
            collapse(&data.xi_table(t, ws)?.select(&COLLAPSE_SIZES, ws), &opts).map_err(err)
        };
        let run_phi =
            |t: usize, ws: &[f64]| collapse(&data.xi_phi_table(t, ws).select(&COLLAPSE_SIZES, ws), &opts).map_err(err);
        let c = Collapses {
            strong: run(STRONG, &strong_window()),
            weak: run(WEAK, &weak_window()),
            superradiant: run(SUPER, &strong_window()),
            strong_phi: run_phi(STRONG, &strong_window()),
            weak_phi: run_phi(WEAK, &strong_window()),
        };
        // Window sensitivity, reported for context only.
        let quick = CollapseOptions { bootstrap: 10, ..opts };
        let all: Vec<f64> = DISORDERS.iter().copied().filter(|&w| w > 0.0).collect();
        for (t, name) in [(STRONG, "band edge"), (WEAK, "k = 0.75 pi")] {
            for (label, ws) in [
                ("W in (0, 0.9]", all.clone()),
                ("W in (0, 0.6]", strong_window()),
                ("W in [0.4, 0.9]", weak_window()),
            ] {
                let xi = data
                    .xi_table(t, &ws)
                    .and_then(|x| collapse(&x.select(&COLLAPSE_SIZES, &ws), &quick).map_err(err));
                let phi = collapse(&data.xi_phi_table(t, &ws).select(&COLLAPSE_SIZES, &ws), &quick).map_err(err);
                println!("  note: {name}, {label}: xi {}; xi_phi {}", brief(&xi), brief(&phi));
            }
        }
        c
    }
}

fn brief(r: &Result<CollapseResult, String>) -> String {
    match r {
        Ok(r) => format!(
            "W_c {:+.3} +- {:.3}, nu {:.2} +- {:.2}, cost {:.3}{}",
            r.w_c,
            r.uncertainty.0,
            r.nu,
            r.uncertainty.1,
            r.cost,
            if r.at_boundary { " (box edge)" } else { "" }
        ),
        Err(e) => format!("error: {e}"),
    }
}

fn criticality(c: &Collapses) -> Outcome {
    let strong = c.strong.as_ref().map_err(Clone::clone)?;
    let weak = c.weak.as_ref().map_err(Clone::clone)?;
    let sup = c.superradiant.as_ref().map_err(Clone::clone)?;
    let strong_ok = strong.w_c.abs() <= 0.03 && (strong.nu - 1.5).abs() <= 0.2;
    let weak_ok = (weak.nu - 1.95).abs() <= 0.25;
    let ratio = sup.cost / strong.cost.max(weak.cost);
    Ok((
        strong_ok && weak_ok && ratio >= 5.0,
        format!(
            "N {COLLAPSE_SIZES:?}; band edge (W in (0, 0.6]): {} [want W_c 0 +- 0.03, nu 1.5 +- 0.2]; \
             k = 0.75 pi (W in [0.4, 0.9]): {} [want nu 1.95 +- 0.25]; k = 0.49 pi cost {:.3}, {ratio:.1}x the subradiant costs [want >= 5x]",
            brief(&c.strong),
            brief(&c.weak),
            sup.cost
        ),
    ))
}

fn localization(data: &Data, c: &Collapses) -> Outcome {
    let strong = c.strong_phi.as_ref().map_err(Clone::clone)?;
    let weak = c.weak_phi.as_ref().map_err(Clone::clone)?;
    let exps_ok = (strong.nu - 1.51).abs() <= 0.25 && (weak.nu - 1.93).abs() <= 0.25;
    let ws: Vec<f64> = DISORDERS
        .iter()
        .copied()
        .filter(|&w| (0.2..=0.6).contains(&w))
        .collect();
    let mut ratios_ok = true;
    let mut parts = Vec::new();
    for (t, name) in [(STRONG, "band edge"), (WEAK, "k = 0.75 pi")] {
        let crossovers = ws
            .iter()
            .map(|&w| Ok((w, data.crossover(t, w)?)))
            .collect::<Result<Vec<_>, String>>()?;
        let report = equivalence_check(&data.xi_table(t, &ws)?, &data.xi_phi_table(t, &ws), &crossovers, 2.0)
            .map_err(|e| format!("{name}: {e}"))?;
        ratios_ok &= (1.6..=2.4).contains(&report.mean);
        parts.push(format!(
            "{name} xi/xi_phi mean {:.2} (range {:.2}..{:.2}, {} cells)",
            report.mean,
            report.min,
            report.max,
            report.cells.len()
        ));
    }
    Ok((
        exps_ok && ratios_ok,
        format!(
            "xi_phi collapse on W in (0, 0.6]: band edge {} [want nu 1.51 +- 0.25], k = 0.75 pi {} [want nu 1.93 +- 0.25]; \
             saturated cells (N >= 2 N_c, W in [0.2, 0.6]): {} [want mean in [1.6, 2.4]]",
            brief(&c.strong_phi),
            brief(&c.weak_phi),
            parts.join(", ")
        ),
    ))
}

/// Per size: band-edge and weak-target statistics from the argmax centre, and
/// the weak target again from the centroid.
type PotentialStats = Vec<(usize, LocalizationStats, LocalizationStats, LocalizationStats)>;

fn potential_stats(n_real: u64) -> subradiance::Result<PotentialStats> {
    let [strong, weak, _] = targets();
    let mut out = Vec::new();
    for n in [100, 200, 300, 400] {
        let specs = spec_grid(&[n], &[0.2], PHI, 1.0, SEED)?;
        let cfg = EnsembleConfig {
            n_realizations: n_real,
            keep_samples: true,
            ..Default::default()
        };
        let cells = run_ensemble(&specs, &[strong, weak], &cfg)?;
        let stats = |i: usize, estimator: CenterEstimator| {
            let centers: Vec<f64> = cells[i]
                .samples
                .iter()
                .map(|s| match estimator {
                    CenterEstimator::Argmax => s.center_argmax,
                    CenterEstimator::Centroid => s.center_centroid,
                })
                .collect();
            let xi: Vec<f64> = cells[i].samples.iter().map(|s| s.xi_phi).collect();
            center_statistics(&centers, &xi, n, &HistogramOptions::default())
        };
        out.push((
            n,
            stats(0, CenterEstimator::Argmax)?,
            stats(1, CenterEstimator::Argmax)?,
            stats(1, CenterEstimator::Centroid)?,
        ));
    }
    Ok(out)
}

fn potential(n_real: u64) -> Outcome {
    let stats = potential_stats(n_real).map_err(err)?;
    let strong400 = &stats.iter().find(|s| s.0 == 400).ok_or("no N = 400")?.1;
    let weak200 = &stats.iter().find(|s| s.0 == 200).ok_or("no N = 200")?.2;
    let constant = matches!(strong400.fit, PotentialFit::Constant { .. });
    let harmonic = matches!(weak200.fit, PotentialFit::Harmonic { .. });
    let widths_of =
        |pick: fn(&(usize, LocalizationStats, LocalizationStats, LocalizationStats)) -> &LocalizationStats| {
            stats
                .iter()
                .filter_map(|row| pick(row).sigma().filter(|s| s.is_finite()).map(|s| (row.0, s)))
                .collect::<Vec<(usize, f64)>>()
        };
    let centroid = widths_of(|row| &row.3);
    let centroid_sig: Vec<String> = centroid.iter().map(|(n, s)| format!("{n}:{s:.1}")).collect();
    let centroid_alpha = sigma_scaling(&centroid).map_or_else(|e| e.to_string(), |a| format!("{a:.2}"));
    let weak200c = &stats.iter().find(|s| s.0 == 200).ok_or("no N = 200")?.3;
    println!(
        "  note: centroid centre, k = 0.75 pi N=200 rss const {:.3} vs harmonic {:.3}; sigma(N) {} gives alpha {centroid_alpha}",
        weak200c.comparison.constant_rss,
        weak200c.comparison.harmonic_rss,
        centroid_sig.join(" ")
    );
    let widths = widths_of(|row| &row.2);
    let alpha = sigma_scaling(&widths).map_err(err)?;
    let sig: Vec<String> = widths.iter().map(|(n, s)| format!("{n}:{s:.1}")).collect();
    Ok((
        constant && harmonic && alpha > 1.0,
        format!(
            "W = 0.2; band edge N=400 rss const {:.3} vs harmonic {:.3} -> {}; k = 0.75 pi N=200 rss const {:.3} vs harmonic {:.3} -> {}; \
             sigma(N) {} gives alpha {alpha:.2} [want > 1]",
            strong400.comparison.constant_rss,
            strong400.comparison.harmonic_rss,
            if constant { "constant" } else { "harmonic" },
            weak200.comparison.constant_rss,
            weak200.comparison.harmonic_rss,
            if harmonic { "harmonic" } else { "constant" },
            sig.join(" ")
        ),
    ))
}

fn mean_vs_typical(data: &Data) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (t, name) in [(STRONG, "band edge"), (WEAK, "k = 0.75 pi")] {
        let slope = fit_power_law(&data.avg_series(t, 0.4, 100, 400)?)
            .map_err(err)?
            .exponent;
        pass &= (slope + 1.0).abs() <= 0.3;
        parts.push(format!("{name} {slope:.2}"));
    }
    let violations = data
        .stats
        .iter()
        .filter(|s| s.gamma_avg < s.gamma_typ * (1.0 - 1e-12))
        .count();
    Ok((
        pass && violations == 0,
        format!(
            "avg-rate slope at W = 0.4, N in [100, 400]: {} [want -1 +- 0.3]; AM-GM violations {violations} of {} cells",
            parts.join(", "),
            data.stats.len()
        ),
    ))
}

fn property_suite() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    // Synthetic collapse recovers the generator exponent.
    let sizes = [100, 200, 400];
    let ws: Vec<f64> = (0..40).map(|i| 0.05 * 12f64.powf(i as f64 / 39.0)).collect();
    let opts = CollapseOptions {
        bootstrap: 10,
        ..Default::default()
    };
    for nu in [1.5, 2.0] {
        let r = collapse(&synthetic_table(&sizes, &ws, 2.0, nu), &opts).map_err(err)?;
        check(
            &format!("synthetic nu = {nu}"),
            (r.nu - nu).abs() <= 0.1 && r.w_c.abs() <= 0.02,
        );
    }

    // Analytic moment-scale values.
    let geo = ScalingSeries::from_fn(1..=2000, |n| (-(n as f64) / 10.0).exp()).map_err(err)?;
    let r = (-0.1f64).exp();
    check(
        "geometric moment scale",
        (xi_from_moments(&geo).map_err(err)? - 2.0 * r / (1.0 - r * r)).abs() < 1e-9,
    );
    let cubic = ScalingSeries::from_fn(1..=100, |n| (n as f64).powi(-3)).map_err(err)?;
    check(
        "n^-3 moment scale",
        (xi_from_moments(&cubic).map_err(err)? - 16.105).abs() < 1e-3,
    );

    // Crossover criterion on a constructed series.
    let reference = ScalingSeries::from_fn(1..=60, |n| (n as f64).powi(-3)).map_err(err)?;
    let xi0 = 12.5;
    let series = ScalingSeries::from_fn(1..=60, |n| (n as f64).powi(-3) * (-(n as f64) / xi0).exp()).map_err(err)?;
    let fit = subradiance::scaling::ExponentialFit {
        xi_inf: xi0,
        prefactor: 1e-9,
        r_squared: 1.0,
        rss: 0.0,
    };
    let nc = detect_crossover_nc(&series, &reference, &fit).map_err(err)?;
    let absent = detect_crossover_nc(&reference, &reference, &fit).map_err(err)?;
    check("crossover at ceil(xi0)", nc == Some(13) && absent.is_none());

    // Two-site chain and zero-disorder ensembles.
    let spec2 = ChainSpec::ordered(2, PHI).map_err(err)?;
    let modes = realization_modes(
        &Realization::draw(&spec2, 0).map_err(err)?,
        1.0,
        PHI,
        Solver::Tridiagonal,
    )
    .map_err(err)?;
    check(
        "two-site rates",
        modes
            .iter()
            .all(|m| (m.gamma - 0.5).abs() < 1e-12 && (m.omega.re.abs() - 0.5).abs() < 1e-12),
    );
    let one = realization_modes(
        &Realization::draw(&ChainSpec::ordered(1, PHI).map_err(err)?, 0).map_err(err)?,
        1.0,
        PHI,
        Solver::Dense,
    )
    .map_err(err)?;
    check("single site", (one[0].omega - Complex64::new(0.0, -0.5)).norm() < 1e-14);
    let zero = run_ensemble(
        &spec_grid(&[30], &[0.0], PHI, 1.0, SEED).map_err(err)?,
        &[ModeTarget::band_edge_low()],
        &EnsembleConfig {
            n_realizations: 20,
            ..Default::default()
        },
    )
    .map_err(err)?;
    check(
        "zero disorder is exact",
        zero[0].stats.ln_gamma_std == 0.0 && zero[0].stats.gamma_typ == zero[0].stats.gamma_avg,
    );

    // Byte-identical output under one and four workers.
    let specs = spec_grid(&[10, 40], &[0.1, 0.4], PHI, 1.0, SEED).map_err(err)?;
    let dir = std::env::temp_dir().join(format!("subradiance-acceptance-{}", std::process::id()));
    let mut bytes = Vec::new();
    for workers in [1, 4] {
        let cfg = EnsembleConfig {
            n_realizations: 50,
            workers: Some(workers),
            ..Default::default()
        };
        let cells = run_ensemble(&specs, &targets(), &cfg).map_err(err)?;
        let recs: Vec<EnsembleRecord> = cells.iter().map(|c| EnsembleRecord::from(&c.stats)).collect();
        let path = dir.join(format!("w{workers}.csv"));
        write_csv(&path, &recs).map_err(err)?;
        bytes.push(std::fs::read(&path).map_err(err)?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    check("determinism across workers", bytes[0] == bytes[1]);

    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            "synthetic collapse (nu 1.5, 2.0), moment scales, crossover rule, two-site and single-site spectra, zero disorder, worker determinism".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    ))
}
