use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use subradiance::fss::{
    collapse, collapse_points, compare_collapse, CollapseComparison, CollapseOptions, CollapseResult,
};
use subradiance::io::{read_csv, write_json_with_meta, write_table_with_meta, EnsembleRecord, Metadata, VERSION};
use subradiance::localization::{
    center_statistics, equivalence_check, sigma_scaling, CenterEstimator, HistogramOptions, LocalizationStats,
};
use subradiance::model::{build_h_inv, ChainSpec, Realization};
use subradiance::scaling::{
    detect_crossover_nc, fit_exponential, fit_power_law, ExponentialFit, PowerLawFit, ScalingSeries, XiRow, XiTable,
};
use subradiance::spectrum::{ModeTarget, TargetKind};

use crate::commands::{metadata, require, SampleRow};
use crate::{CliError, Run};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Strong,
    Weak,
    Superradiant,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub disorder_w: f64,
    pub power_exponent: Option<f64>,
    pub power_r2: Option<f64>,
    pub exp_xi_inf: Option<f64>,
    pub exp_r2: Option<f64>,
    pub avg_exponent: Option<f64>,
    pub n_c: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseBrief {
    pub w_c: f64,
    pub w_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    pub cost: f64,
    pub at_boundary: bool,
    pub no_collapse: bool,
    pub n_points: usize,
}

impl From<&CollapseResult> for CollapseBrief {
    fn from(r: &CollapseResult) -> Self {
        CollapseBrief {
            w_c: r.w_c,
            w_c_err: r.uncertainty.0,
            nu: r.nu,
            nu_err: r.uncertainty.1,
            cost: r.cost,
            at_boundary: r.at_boundary,
            no_collapse: r.no_collapse,
            n_points: r.n_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub label: String,
    pub k_over_pi: Option<f64>,
    pub role: Role,
    pub window: (f64, f64),
    pub fits: Vec<FitRow>,
    pub collapse_xi: Result<CollapseBrief, String>,
    pub collapse_xi_phi: Result<CollapseBrief, String>,
    pub equivalence: Result<(f64, f64, f64, usize), String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSummary {
    pub target: String,
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub n_modes: usize,
    pub fit: String,
    pub constant_rss: f64,
    pub harmonic_rss: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub targets: Vec<TargetSummary>,
    /// `xi` versus `xi_phi` master curves per target.
    pub comparisons: Vec<(String, CollapseComparison)>,
    pub potentials: Vec<PotentialSummary>,
    /// `sigma(N) ~ N^alpha` per target.
    pub sigma_exponents: Vec<(String, Result<f64, String>)>,
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or("-".into(), |x| format!("{x:.digits$}"))
}

fn fmt_collapse(r: &Result<CollapseBrief, String>) -> String {
    match r {
        Ok(c) => format!(
            "{:+.3} ± {:.3} | {:.2} ± {:.2} | {:.3}{}",
            c.w_c,
            c.w_c_err,
            c.nu,
            c.nu_err,
            c.cost,
            if c.at_boundary { " (edge)" } else { "" }
        ),
        Err(e) => format!("- | - | {e}"),
    }
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Subradiance analysis\n");
        let _ = writeln!(
            s,
            "version {}, config {}, seed {}\n",
            self.version,
            &self.config_hash[..12.min(self.config_hash.len())],
            self.master_seed
        );
        let _ = writeln!(s, "## Data collapse\n");
        let _ = writeln!(s, "| target | role | observable | W_c | nu | cost |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for t in &self.targets {
            for (obs, r) in [("xi", &t.collapse_xi), ("xi_phi", &t.collapse_xi_phi)] {
                let _ = writeln!(s, "| {} | {:?} | {obs} | {} |", t.label, t.role, fmt_collapse(r));
            }
        }
        let _ = writeln!(s, "\n## Scaling fits\n");
        let _ = writeln!(
            s,
            "| target | W | power exponent | power r2 | xi_inf | exp r2 | avg exponent | N_c |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
        for t in &self.targets {
            for f in &t.fits {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {} | {} |",
                    t.label,
                    f.disorder_w,
                    fmt_opt(f.power_exponent, 3),
                    fmt_opt(f.power_r2, 4),
                    fmt_opt(f.exp_xi_inf, 2),
                    fmt_opt(f.exp_r2, 4),
                    fmt_opt(f.avg_exponent, 3),
                    f.n_c.map_or("-".into(), |n| n.to_string())
                );
            }
        }
        let _ = writeln!(s, "\n## Localization\n");
        for t in &self.targets {
            match &t.equivalence {
                Ok((mean, lo, hi, cells)) => {
                    let _ = writeln!(
                        s,
                        "- {}: xi/xi_phi mean {mean:.2} (range {lo:.2} to {hi:.2}, {cells} saturated cells)",
                        t.label
                    );
                }
                Err(e) => {
                    let _ = writeln!(s, "- {}: xi/xi_phi unavailable ({e})", t.label);
                }
            }
        }
        for (label, c) in &self.comparisons {
            let _ = writeln!(
                s,
                "- {label}: xi_phi master curve maps onto xi with x scale {:.3}, y scale {:.3}, rms residual {:.3}",
                c.scale_x, c.scale_y, c.residual_rms
            );
        }
        for p in &self.potentials {
            let _ = writeln!(
                s,
                "- potential {} N = {} W = {}: {} fit preferred (rss constant {:.3}, harmonic {:.3}, sigma {})",
                p.target,
                p.n_qubits,
                p.disorder_w,
                p.fit,
                p.constant_rss,
                p.harmonic_rss,
                fmt_opt(p.sigma, 1)
            );
        }
        for (label, a) in &self.sigma_exponents {
            match a {
                Ok(a) => {
                    let _ = writeln!(s, "- {label}: sigma(N) ~ N^{a:.2}");
                }
                Err(e) => {
                    let _ = writeln!(s, "- {label}: sigma(N) exponent unavailable ({e})");
                }
            }
        }
        s
    }
}

struct TargetData {
    target: ModeTarget,
    label: String,
    records: Vec<EnsembleRecord>,
}

impl TargetData {
    fn get(&self, n: usize, w: f64) -> Option<&EnsembleRecord> {
        self.records.iter().find(|r| r.n_qubits == n && r.disorder_w == w)
    }

    fn disorders(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().map(|r| r.disorder_w).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    fn sizes_at(&self, w: f64) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .records
            .iter()
            .filter(|r| r.disorder_w == w)
            .map(|r| r.n_qubits)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn series(&self, w: f64, lo: usize, hi: usize, value: impl Fn(&EnsembleRecord) -> f64) -> Option<ScalingSeries> {
        let pts: Vec<(usize, f64)> = self
            .sizes_at(w)
            .into_iter()
            .filter(|&n| n >= lo && n <= hi)
            .filter_map(|n| self.get(n, w).map(|r| (n, value(r))))
            .collect();
        ScalingSeries::new(pts).ok().map(|s| s.with_meta(w, self.label.clone()))
    }

    fn typ(&self, w: f64, lo: usize, hi: usize) -> Option<ScalingSeries> {
        self.series(w, lo, hi, |r| r.ln_gamma_mean.exp())
    }

    fn xi_table(&self, ws: &[f64]) -> XiTable {
        self.xi_table_from(ws, 0)
    }

    /// `xi` with the moment sums starting at `n_min`.
    fn xi_table_from(&self, ws: &[f64], n_min: usize) -> XiTable {
        let mut rows = Vec::new();
        for &w in ws {
            if let Some(s) = self.typ(w, n_min, usize::MAX) {
                if let Ok(t) = XiTable::from_series(&[s], 2) {
                    rows.extend(t.rows);
                }
            }
        }
        XiTable { rows }
    }

    fn xi_phi_table(&self, ws: &[f64]) -> XiTable {
        let rows = ws
            .iter()
            .flat_map(|&w| {
                self.sizes_at(w).into_iter().filter_map(move |n| {
                    self.get(n, w).map(|r| XiRow {
                        n_max: n,
                        disorder_w: w,
                        xi: r.xi_phi_typ,
                    })
                })
            })
            .collect();
        XiTable { rows }
    }

    fn crossover(&self, w: f64, fit_window: (usize, usize)) -> Option<usize> {
        let series = self.typ(w, 0, usize::MAX)?;
        let reference = self.typ(0.0, 0, usize::MAX)?;
        let fit = fit_exponential(&self.typ(w, fit_window.0, fit_window.1)?).ok()?;
        detect_crossover_nc(&series, &reference, &fit).ok().flatten()
    }
}

fn k_over_pi(t: &ModeTarget) -> Option<f64> {
    match t.kind {
        TargetKind::FixedK(k) => Some(k / std::f64::consts::PI),
        _ => None,
    }
}

fn fits_for(td: &TargetData, w: f64, window: (usize, usize)) -> (Option<PowerLawFit>, Option<ExponentialFit>) {
    match td.typ(w, window.0, window.1) {
        Some(s) => (fit_power_law(&s).ok(), fit_exponential(&s).ok()),
        None => (None, None),
    }
}

fn cells<T: ToString>(items: impl IntoIterator<Item = T>) -> Vec<String> {
    items.into_iter().map(|x| x.to_string()).collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn load_records(path: &Path) -> Result<Vec<EnsembleRecord>, CliError> {
    require(path)?;
    let records: Vec<EnsembleRecord> = read_csv(path)?;
    if records.is_empty() {
        return Err(CliError::Input(format!("{} holds no ensemble rows", path.display())));
    }
    Ok(records)
}

fn group(records: Vec<EnsembleRecord>) -> Result<Vec<TargetData>, CliError> {
    let mut groups: Vec<TargetData> = Vec::new();
    for r in records {
        let target = r.target()?;
        match groups.iter_mut().find(|g| g.target == target) {
            Some(g) => g.records.push(r),
            None => groups.push(TargetData {
                target,
                label: target.label(),
                records: vec![r],
            }),
        }
    }
    Ok(groups)
}

/// Label, role, ξ and ξ_φ collapses, and the two tables they were fitted on.
type TargetCollapse = (
    String,
    Role,
    Option<CollapseResult>,
    Option<CollapseResult>,
    XiTable,
    XiTable,
);

pub fn analyze(run: &Run) -> Result<(), CliError> {
    let c = &run.config;
    let a = &c.analysis;
    let out = &run.out;
    let records = load_records(&out.join("ensemble.csv"))?;
    let phi = records[0].phi;
    let groups = group(records)?;
    let meta = metadata(run, "analyze");
    let table = |name: &str, headers: &[&str], rows: &[Vec<String>]| -> Result<(), CliError> {
        write_table_with_meta(&out.join(name), headers, rows, &meta)?;
        Ok(())
    };

    let role = |td: &TargetData| -> Role {
        if td.target.is_superradiant(phi) {
            Role::Superradiant
        } else if matches!(td.target.kind, TargetKind::BandEdgeLow) {
            Role::Strong
        } else if k_over_pi(&td.target).is_some_and(|k| (k - a.weak_k_over_pi).abs() < 1e-9) {
            Role::Weak
        } else {
            Role::Other
        }
    };
    let window_for = |td: &TargetData| -> (f64, f64) {
        let below_phi = match td.target.kind {
            TargetKind::BandEdgeLow => true,
            TargetKind::BandEdgeHigh => false,
            TargetKind::FixedK(k) => k < phi,
        };
        if below_phi {
            a.strong_window
        } else {
            a.weak_window
        }
    };
    let opts = CollapseOptions {
        bootstrap: a.bootstrap,
        seed: c.ensemble.master_seed,
        ..Default::default()
    };

    let mut summaries = Vec::new();
    let mut fit_rows = Vec::new();
    let mut xi_rows = Vec::new();
    let mut master_rows = Vec::new();
    let mut collapses: Vec<TargetCollapse> = Vec::new();

    for td in &groups {
        let ws = td.disorders();
        let xi = td.xi_table(&ws);
        let xi_phi = td.xi_phi_table(&ws);
        let xi_alt = td.xi_table_from(&ws, a.xi_alt_n_min);
        for r in &xi.rows {
            xi_rows.push(cells([
                td.label.clone(),
                r.n_max.to_string(),
                r.disorder_w.to_string(),
                r.xi.to_string(),
                opt(xi_alt.get(r.n_max, r.disorder_w)),
                opt(xi_phi.get(r.n_max, r.disorder_w)),
            ]));
        }

        let mut fits = Vec::new();
        if a.scaling {
            for &w in &ws {
                let (p, e) = fits_for(td, w, a.fit_window);
                let avg = td
                    .series(w, a.fit_window.0, a.fit_window.1, |r| r.gamma_avg)
                    .and_then(|s| fit_power_law(&s).ok());
                let row = FitRow {
                    disorder_w: w,
                    power_exponent: p.map(|f| f.exponent),
                    power_r2: p.map(|f| f.r_squared),
                    exp_xi_inf: e.map(|f| f.xi_inf),
                    exp_r2: e.map(|f| f.r_squared),
                    avg_exponent: avg.map(|f| f.exponent),
                    n_c: if w > 0.0 {
                        td.crossover(w, a.crossover_fit_window)
                    } else {
                        None
                    },
                };
                fit_rows.push(cells([
                    td.label.clone(),
                    w.to_string(),
                    opt(row.power_exponent),
                    opt(row.power_r2),
                    opt(row.exp_xi_inf),
                    opt(row.exp_r2),
                    opt(row.avg_exponent),
                    opt(row.n_c),
                ]));
                fits.push(row);
            }
        }

        let window = window_for(td);
        let in_window: Vec<f64> = ws
            .iter()
            .copied()
            .filter(|&w| w > 0.0 && w >= window.0 && w <= window.1)
            .collect();
        let (mut col_xi, mut col_phi) = (
            Err("collapse disabled".to_string()),
            Err("collapse disabled".to_string()),
        );
        let (mut res_xi, mut res_phi) = (None, None);
        let sel_xi = xi.select(&a.collapse_sizes, &in_window);
        let phi_window: Vec<f64> = ws
            .iter()
            .copied()
            .filter(|&w| w > 0.0 && w >= a.xi_phi_window.0 && w <= a.xi_phi_window.1)
            .collect();
        let sel_phi = xi_phi.select(&a.collapse_sizes, &phi_window);
        if a.fss {
            match collapse(&sel_xi, &opts) {
                Ok(r) => {
                    col_xi = Ok(CollapseBrief::from(&r));
                    res_xi = Some(r);
                }
                Err(e) => col_xi = Err(e.to_string()),
            }
            match collapse(&sel_phi, &opts) {
                Ok(r) => {
                    col_phi = Ok(CollapseBrief::from(&r));
                    res_phi = Some(r);
                }
                Err(e) => col_phi = Err(e.to_string()),
            }
            for (obs, r) in [("xi", &res_xi), ("xi_phi", &res_phi)] {
                if let Some(r) = r {
                    for (x, y) in &r.master_curve {
                        master_rows.push(cells([td.label.clone(), obs.to_string(), x.to_string(), y.to_string()]));
                    }
                }
            }
        }

        let equivalence = if a.localization {
            let eq_ws: Vec<f64> = ws.iter().copied().filter(|&w| w > 0.0).collect();
            let crossovers: Vec<(f64, Option<usize>)> = eq_ws
                .iter()
                .map(|&w| (w, td.crossover(w, a.crossover_fit_window)))
                .collect();
            equivalence_check(
                &xi.select(&td.sizes_at(eq_ws[0].max(0.0)), &eq_ws),
                &xi_phi,
                &crossovers,
                a.saturation_factor,
            )
            .map(|r| (r.mean, r.min, r.max, r.cells.len()))
            .map_err(|e| e.to_string())
        } else {
            Err("localization disabled".into())
        };

        summaries.push(TargetSummary {
            label: td.label.clone(),
            k_over_pi: k_over_pi(&td.target),
            role: role(td),
            window,
            fits,
            collapse_xi: col_xi,
            collapse_xi_phi: col_phi,
            equivalence,
        });
        collapses.push((td.label.clone(), role(td), res_xi, res_phi, sel_xi, sel_phi));
    }

    table(
        "fits.csv",
        &[
            "target",
            "disorder_w",
            "power_exponent",
            "power_r2",
            "exp_xi_inf",
            "exp_r2",
            "avg_exponent",
            "n_c",
        ],
        &fit_rows,
    )?;
    table(
        "xi_table.csv",
        &["target", "n_max", "disorder_w", "xi", "xi_alt_nmin", "xi_phi"],
        &xi_rows,
    )?;
    table("master_curves.csv", &["target", "observable", "x", "y"], &master_rows)?;

    let mut comparisons = Vec::new();
    for (label, _, rx, rp, _, _) in &collapses {
        if let (Some(rx), Some(rp)) = (rx, rp) {
            if let Ok(cmp) = compare_collapse(rp, rx) {
                comparisons.push((label.clone(), cmp));
            }
        }
    }

    let strong = groups
        .iter()
        .zip(&summaries)
        .find(|(_, s)| s.role == Role::Strong)
        .map(|(g, _)| g);
    let weak = groups
        .iter()
        .zip(&summaries)
        .find(|(_, s)| s.role == Role::Weak)
        .map(|(g, _)| g);
    write_figures(run, &meta, strong, weak, &summaries, &collapses)?;

    let (potentials, sigma_exponents) = if a.localization {
        localization(run, &meta, &groups)?
    } else {
        (Vec::new(), Vec::new())
    };

    let summary = Summary {
        version: VERSION.into(),
        config_hash: c.hash(),
        master_seed: c.ensemble.master_seed,
        targets: summaries,
        comparisons,
        potentials,
        sigma_exponents,
    };
    write_json_with_meta(&out.join("summary.json"), &summary, &meta)?;
    eprintln!("analyze: {} targets -> {}", groups.len(), out.display());
    Ok(())
}

fn fit_panel(td: &TargetData, ws: &[f64], window: (usize, usize)) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for &w in ws {
        let Some(s) = td.typ(w, 0, usize::MAX) else { continue };
        let (p, e) = fits_for(td, w, window);
        for &(n, v) in &s.points {
            rows.push(cells([
                w.to_string(),
                n.to_string(),
                v.to_string(),
                opt(e.map(|f| f.eval(n as f64))),
                opt(p.map(|f| f.eval(n as f64))),
            ]));
        }
    }
    rows
}

type CollapseEntry = (
    String,
    Role,
    Option<CollapseResult>,
    Option<CollapseResult>,
    XiTable,
    XiTable,
);

fn collapse_rows(result: &CollapseResult, table: &XiTable) -> Vec<(usize, f64, f64, f64)> {
    collapse_points(table)
        .into_iter()
        .map(|p| (p.n, p.w, p.n as f64 * (p.w - result.w_c).powf(result.nu), p.y))
        .collect()
}

fn write_figures(
    run: &Run,
    meta: &Metadata,
    strong: Option<&TargetData>,
    weak: Option<&TargetData>,
    summaries: &[TargetSummary],
    collapses: &[CollapseEntry],
) -> Result<(), CliError> {
    let a = &run.config.analysis;
    let table = |name: &str, headers: &[&str], rows: &[Vec<String>]| -> Result<(), CliError> {
        write_table_with_meta(&run.out.join(name), headers, rows, meta)?;
        Ok(())
    };
    let fit_headers = ["disorder_w", "n_qubits", "gamma_typ", "exp_fit", "power_fit"];
    if let Some(td) = weak {
        table("fig2a.csv", &fit_headers, &fit_panel(td, &[0.0, 0.4], a.fit_window))?;
    }
    if let Some(td) = strong {
        table("fig2b.csv", &fit_headers, &fit_panel(td, &[0.0, 0.4], a.fit_window))?;
        table(
            "fig2c.csv",
            &fit_headers,
            &fit_panel(td, &[0.06], a.crossover_fit_window),
        )?;
        let inset: Vec<Vec<String>> = td
            .disorders()
            .into_iter()
            .filter(|&w| w > 0.0)
            .map(|w| cells([w.to_string(), opt(td.crossover(w, a.crossover_fit_window))]))
            .collect();
        table("fig2c_inset.csv", &["disorder_w", "n_c"], &inset)?;
        let xi = td.xi_table(&td.disorders());
        let mut by_n = xi.rows.clone();
        by_n.sort_by(|p, q| p.n_max.cmp(&q.n_max).then(p.disorder_w.total_cmp(&q.disorder_w)));
        let rows: Vec<Vec<String>> = by_n
            .iter()
            .map(|r| cells([r.n_max.to_string(), r.disorder_w.to_string(), r.xi.to_string()]))
            .collect();
        table("fig2d.csv", &["n_max", "disorder_w", "xi"], &rows)?;
        let rows: Vec<Vec<String>> = xi
            .rows
            .iter()
            .map(|r| cells([r.disorder_w.to_string(), r.n_max.to_string(), r.xi.to_string()]))
            .collect();
        table("fig2e.csv", &["disorder_w", "n_max", "xi"], &rows)?;
    }
    let master = |role: Role| -> Vec<Vec<String>> {
        collapses
            .iter()
            .filter(|c| c.1 == role)
            .take(1)
            .flat_map(|c| match &c.2 {
                Some(r) => collapse_rows(r, &c.4),
                None => Vec::new(),
            })
            .map(|(n, w, x, y)| cells([n.to_string(), w.to_string(), x.to_string(), y.to_string()]))
            .collect()
    };
    let master_headers = ["n_max", "disorder_w", "x", "y"];
    table("fig3a.csv", &master_headers, &master(Role::Strong))?;
    table("fig3b.csv", &master_headers, &master(Role::Weak))?;
    let per_k = |value: fn(&CollapseBrief) -> (f64, f64)| -> Vec<Vec<String>> {
        let mut rows: Vec<(f64, Vec<String>)> = summaries
            .iter()
            .filter_map(|s| {
                let k = match s.k_over_pi {
                    Some(k) => k,
                    None if s.role == Role::Strong => 0.0,
                    None => return None,
                };
                let c = s.collapse_xi.as_ref().ok()?;
                let (v, e) = value(c);
                Some((k, cells([k.to_string(), s.label.clone(), v.to_string(), e.to_string()])))
            })
            .collect();
        rows.sort_by(|p, q| p.0.total_cmp(&q.0));
        rows.into_iter().map(|r| r.1).collect()
    };
    table(
        "fig3c.csv",
        &["k_over_pi", "target", "w_c", "w_c_err"],
        &per_k(|c| (c.w_c, c.w_c_err)),
    )?;
    table(
        "fig3d.csv",
        &["k_over_pi", "target", "nu", "nu_err"],
        &per_k(|c| (c.nu, c.nu_err)),
    )?;
    table(
        "fig3e.csv",
        &["k_over_pi", "target", "cost", "unused"],
        &per_k(|c| (c.cost, 0.0)),
    )?;

    let c = &run.config;
    let n = c.ensemble.sample_sizes.first().copied().unwrap_or(20);
    let w = c.ensemble.sample_disorders.first().copied().unwrap_or(0.2);
    let spec = ChainSpec::new(n, c.phi(), w, c.model.gamma, c.ensemble.master_seed)?;
    let h_inv = build_h_inv(&Realization::draw(&spec, 0)?, c.model.gamma, c.phi())?;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            cells([
                (i + 1).to_string(),
                h_inv.diag[i].re.to_string(),
                h_inv.diag[i].im.to_string(),
                h_inv.offdiag.get(i).map_or(String::new(), |z| z.re.to_string()),
            ])
        })
        .collect();
    table(
        "fig4a.csv",
        &["site", "onsite_re", "onsite_im", "hopping_to_next"],
        &rows,
    )?;

    let mut rows = Vec::new();
    for entry in collapses.iter().filter(|c| matches!(c.1, Role::Strong | Role::Weak)) {
        for (obs, res, tab) in [("xi", &entry.2, &entry.4), ("xi_phi", &entry.3, &entry.5)] {
            if let Some(r) = res {
                for (n, w, x, y) in collapse_rows(r, tab) {
                    rows.push(cells([
                        obs.to_string(),
                        entry.0.clone(),
                        n.to_string(),
                        w.to_string(),
                        x.to_string(),
                        y.to_string(),
                    ]));
                }
            }
        }
    }
    table(
        "fig4d.csv",
        &["observable", "target", "n_max", "disorder_w", "x", "y"],
        &rows,
    )?;
    Ok(())
}

type LocalizationOutput = (Vec<PotentialSummary>, Vec<(String, Result<f64, String>)>);

fn localization(run: &Run, meta: &Metadata, groups: &[TargetData]) -> Result<LocalizationOutput, CliError> {
    let path = run.out.join("samples.csv");
    if !path.is_file() {
        return Ok((Vec::new(), Vec::new()));
    }
    let samples: Vec<SampleRow> = read_csv(&path)?;
    let mut cells_seen: Vec<(String, usize, f64)> = Vec::new();
    for s in &samples {
        let key = (s.target.clone(), s.n_qubits, s.disorder_w);
        if !cells_seen.contains(&key) {
            cells_seen.push(key);
        }
    }
    let mut potentials = Vec::new();
    let mut stats_all: Vec<(String, usize, f64, LocalizationStats)> = Vec::new();
    let mut rows = Vec::new();
    for (label, n, w) in &cells_seen {
        let cell: Vec<&SampleRow> = samples
            .iter()
            .filter(|s| &s.target == label && s.n_qubits == *n && s.disorder_w == *w)
            .collect();
        let centers: Vec<f64> = cell
            .iter()
            .map(|s| match run.config.analysis.center_estimator {
                CenterEstimator::Argmax => s.center_argmax,
                CenterEstimator::Centroid => s.center_centroid,
            })
            .collect();
        let xi: Vec<f64> = cell.iter().map(|s| s.xi_phi).collect();
        let stats = center_statistics(&centers, &xi, *n, &HistogramOptions::default())?;
        for ((x, p), v) in stats.bin_centers().iter().zip(&stats.density).zip(&stats.potential) {
            rows.push(cells([
                label.clone(),
                n.to_string(),
                w.to_string(),
                x.to_string(),
                p.to_string(),
                v.to_string(),
                stats.fit.eval(*x).to_string(),
            ]));
        }
        potentials.push(PotentialSummary {
            target: label.clone(),
            n_qubits: *n,
            disorder_w: *w,
            n_modes: stats.n_modes,
            fit: match stats.fit {
                subradiance::localization::PotentialFit::Constant { .. } => "constant".into(),
                subradiance::localization::PotentialFit::Harmonic { .. } => "harmonic".into(),
            },
            constant_rss: stats.comparison.constant_rss,
            harmonic_rss: stats.comparison.harmonic_rss,
            sigma: stats.sigma().filter(|s| s.is_finite()),
        });
        stats_all.push((label.clone(), *n, *w, stats));
    }
    let headers = ["target", "n_qubits", "disorder_w", "x0", "density", "potential", "fit"];
    write_table_with_meta(&run.out.join("potential.csv"), &headers, &rows, meta)?;
    write_json_with_meta(&run.out.join("localization.json"), &stats_all, meta)?;

    let analysis = &run.config.analysis;
    let strong = groups
        .iter()
        .find(|g| matches!(g.target.kind, TargetKind::BandEdgeLow))
        .map(|g| g.label.clone());
    let weak = groups
        .iter()
        .find(|g| k_over_pi(&g.target).is_some_and(|k| (k - analysis.weak_k_over_pi).abs() < 1e-9))
        .map(|g| g.label.clone());
    let panel = |label: &Option<String>, prefer: usize| -> Vec<Vec<String>> {
        let Some(label) = label else { return Vec::new() };
        let best = stats_all
            .iter()
            .filter(|s| &s.0 == label)
            .min_by_key(|s| s.1.abs_diff(prefer));
        let Some((_, _, _, st)) = best else { return Vec::new() };
        st.bin_centers()
            .iter()
            .zip(&st.density)
            .zip(&st.potential)
            .map(|((x, p), v)| cells([x.to_string(), p.to_string(), v.to_string(), st.fit.eval(*x).to_string()]))
            .collect()
    };
    let headers = ["x0", "density", "potential", "fit"];
    write_table_with_meta(&run.out.join("fig4b.csv"), &headers, &panel(&strong, 400), meta)?;
    write_table_with_meta(&run.out.join("fig4c.csv"), &headers, &panel(&weak, 200), meta)?;

    let mut sigma_exponents = Vec::new();
    for g in groups {
        let widths: Vec<(usize, f64)> = stats_all
            .iter()
            .filter(|s| s.0 == g.label)
            .filter_map(|s| s.3.sigma().filter(|x| x.is_finite()).map(|x| (s.1, x)))
            .collect();
        if stats_all.iter().any(|s| s.0 == g.label) {
            sigma_exponents.push((g.label.clone(), sigma_scaling(&widths).map_err(|e| e.to_string())));
        }
    }
    Ok((potentials, sigma_exponents))
}
