//! Finite-size-scaling data collapse.
//!
//! Points `(N, W, y = N/xi)` are mapped to `x = N (W - W_c)^nu`. Collapse
//! quality is the total variation of `y` along increasing `x`, divided by the
//! range of `y`, minus one: zero exactly when `y` is monotonic in `x`. The
//! optimum over `(W_c, nu)` is found by a grid scan followed by Nelder-Mead
//! refinement; uncertainties come from bootstrap resampling of disorder
//! columns.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::auxiliary_rng;
use crate::scaling::XiTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub n: usize,
    pub w: f64,
    pub y: f64,
}

/// `y = N / xi` for every row of the table.
pub fn collapse_points(table: &XiTable) -> Vec<CollapsePoint> {
    table
        .rows
        .iter()
        .map(|r| CollapsePoint {
            n: r.n_max,
            w: r.disorder_w,
            y: r.n_max as f64 / r.xi,
        })
        .collect()
}

fn scaled_x(p: &CollapsePoint, w_c: f64, nu: f64) -> f64 {
    p.n as f64 * (p.w - w_c).powf(nu)
}

/// Points sorted by scaled `x`; ties broken by `y` so the order is canonical.
fn master_curve(points: &[CollapsePoint], w_c: f64, nu: f64) -> Vec<(f64, f64)> {
    let mut curve: Vec<(f64, f64)> = points.iter().map(|p| (scaled_x(p, w_c, nu), p.y)).collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    curve
}

pub fn cost_function(points: &[CollapsePoint], w_c: f64, nu: f64) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| p.w <= w_c) {
        return Err(Error::Domain(format!("W = {} not above W_c = {w_c}", p.w)));
    }
    let curve = master_curve(points, w_c, nu);
    let (lo, hi) = curve.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1), hi.max(p.1))
    });
    if hi - lo <= 0.0 {
        return Err(Error::Degenerate("collapse observable has zero range".into()));
    }
    let variation: f64 = curve.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum();
    Ok(variation / (hi - lo) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub w_c: (f64, f64),
    pub nu: (f64, f64),
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            w_c: (-0.05, 0.1),
            nu: (0.5, 3.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseOptions {
    pub search: SearchBox,
    /// Grid points per axis in the coarse scan.
    pub grid: usize,
    pub bootstrap: usize,
    pub seed: u64,
    /// Costs above this mark the result as no collapse.
    pub max_cost: f64,
    /// Grid cells within this of the minimum cost form the plateau whose
    /// centroid is reported.
    pub plateau_tolerance: f64,
}

impl Default for CollapseOptions {
    fn default() -> Self {
        CollapseOptions {
            search: SearchBox::default(),
            grid: 41,
            bootstrap: 100,
            seed: 0,
            max_cost: 2.0,
            plateau_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub w_c: f64,
    pub nu: f64,
    pub cost: f64,
    pub master_curve: Vec<(f64, f64)>,
    /// Bootstrap standard deviations of `(w_c, nu)`.
    pub uncertainty: (f64, f64),
    /// Optimum on (or within one grid step of) the search box edge.
    pub at_boundary: bool,
    pub no_collapse: bool,
    pub n_points: usize,
    /// Grid cells on the minimum-cost plateau.
    pub plateau_cells: usize,
}

fn penalized_cost(points: &[CollapsePoint], x: [f64; 2], bx: &SearchBox) -> f64 {
    let [w_c, nu] = x;
    if w_c < bx.w_c.0 || w_c > bx.w_c.1 || nu < bx.nu.0 || nu > bx.nu.1 {
        return f64::INFINITY;
    }
    cost_function(points, w_c, nu).unwrap_or(f64::INFINITY)
}

struct Optimum {
    x: [f64; 2],
    cost: f64,
    grid_step: [f64; 2],
    plateau_cells: usize,
}

fn optimize(points: &[CollapsePoint], opts: &CollapseOptions) -> Result<Optimum> {
    let bx = &opts.search;
    let g = opts.grid.max(2);
    let step = [
        (bx.w_c.1 - bx.w_c.0) / (g - 1) as f64,
        (bx.nu.1 - bx.nu.0) / (g - 1) as f64,
    ];
    let mut scan = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let x = [bx.w_c.0 + i as f64 * step[0], bx.nu.0 + j as f64 * step[1]];
            scan.push((x, penalized_cost(points, x, bx)));
        }
    }
    let grid_best = scan
        .iter()
        .fold(([f64::NAN; 2], f64::INFINITY), |b, c| if c.1 < b.1 { *c } else { b });
    if !grid_best.1.is_finite() {
        return Err(Error::Domain("no admissible (W_c, nu) in the search box".into()));
    }
    let (x, cost) = nelder_mead(
        |x| penalized_cost(points, x, bx),
        grid_best.0,
        [0.5 * step[0], 0.5 * step[1]],
        400,
    );
    let (x, cost) = if cost <= grid_best.1 { (x, cost) } else { grid_best };
    // The cost is piecewise constant in (W_c, nu); report the centre of the
    // minimum plateau rather than an arbitrary point on it.
    let plateau: Vec<[f64; 2]> = scan
        .iter()
        .filter(|c| c.1 <= cost + opts.plateau_tolerance)
        .map(|c| c.0)
        .collect();
    if plateau.is_empty() {
        return Ok(Optimum {
            x,
            cost,
            grid_step: step,
            plateau_cells: 0,
        });
    }
    let m = plateau.len() as f64;
    let centre = [
        plateau.iter().map(|p| p[0]).sum::<f64>() / m,
        plateau.iter().map(|p| p[1]).sum::<f64>() / m,
    ];
    let centre_cost = penalized_cost(points, centre, bx);
    if !centre_cost.is_finite() {
        return Ok(Optimum {
            x,
            cost,
            grid_step: step,
            plateau_cells: plateau.len(),
        });
    }
    Ok(Optimum {
        x: centre,
        cost: centre_cost,
        grid_step: step,
        plateau_cells: plateau.len(),
    })
}

/// Best `(W_c, nu)` for the table, with bootstrap uncertainties.
pub fn collapse(table: &XiTable, opts: &CollapseOptions) -> Result<CollapseResult> {
    let sizes = table.sizes();
    let disorders = table.disorders();
    if sizes.len() < 3 || disorders.len() < 5 {
        return Err(Error::Data(format!(
            "collapse needs >= 3 sizes and >= 5 disorder values, got {} and {}",
            sizes.len(),
            disorders.len()
        )));
    }
    let points = collapse_points(table);
    let best = optimize(&points, opts)?;
    let [w_c, nu] = best.x;
    let bx = &opts.search;
    let at_boundary = w_c - bx.w_c.0 < best.grid_step[0]
        || bx.w_c.1 - w_c < best.grid_step[0]
        || nu - bx.nu.0 < best.grid_step[1]
        || bx.nu.1 - nu < best.grid_step[1];

    let mut samples = Vec::with_capacity(opts.bootstrap);
    for b in 0..opts.bootstrap {
        let mut rng = auxiliary_rng(opts.seed, b as u64);
        let picked: Vec<f64> = (0..disorders.len())
            .map(|_| disorders[rng.random_range(0..disorders.len())])
            .collect();
        let mut resampled = Vec::with_capacity(points.len());
        for w in &picked {
            resampled.extend(points.iter().filter(|p| p.w == *w).copied());
        }
        if let Ok(o) = optimize(&resampled, opts) {
            samples.push(o.x);
        }
    }
    let spread = |k: usize| {
        if samples.len() < 2 {
            return f64::NAN;
        }
        let m = samples.len() as f64;
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / m;
        (samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    Ok(CollapseResult {
        w_c,
        nu,
        cost: best.cost,
        master_curve: master_curve(&points, w_c, nu),
        uncertainty: (spread(0), spread(1)),
        at_boundary,
        no_collapse: best.cost > opts.max_cost,
        n_points: points.len(),
        plateau_cells: best.plateau_cells,
    })
}

/// Nelder-Mead on two parameters with the standard coefficients.
pub fn nelder_mead(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], step: [f64; 2], max_iter: usize) -> ([f64; 2], f64) {
    let mut simplex = [x0, [x0[0] + step[0], x0[1]], [x0[0], x0[1] + step[1]]];
    let mut values = simplex.map(&f);
    let add = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    for _ in 0..max_iter {
        let mut order = [0, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        let size = (simplex[1][0] - simplex[0][0])
            .abs()
            .max((simplex[2][0] - simplex[0][0]).abs())
            / step[0].abs()
            + (simplex[1][1] - simplex[0][1])
                .abs()
                .max((simplex[2][1] - simplex[0][1]).abs())
                / step[1].abs();
        if size < 1e-6 {
            break;
        }
        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let reflected = add(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = add(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                add(centroid, reflected, 0.5)
            } else {
                add(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = add(simplex[0], simplex[k], 0.5);
                    values[k] = f(simplex[k]);
                }
            }
        }
    }
    let mut best = 0;
    for k in 1..3 {
        if values[k] < values[best] {
            best = k;
        }
    }
    (simplex[best], values[best])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseComparison {
    /// Multiplicative factors applied to `b`'s `x` and `y`.
    pub scale_x: f64,
    pub scale_y: f64,
    /// RMS of `ln y` residuals on the overlap.
    pub residual_rms: f64,
    pub overlap_points: usize,
    pub a: (f64, f64),
    pub b: (f64, f64),
}

/// Piecewise-linear interpolant through points sorted by `u`, with equal
/// abscissae averaged.
fn interpolant(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for &(u, v) in points {
        match out.last_mut() {
            Some(last) if last.0 == u => {
                last.1 += v;
                last.2 += 1;
            }
            _ => out.push((u, v, 1)),
        }
    }
    out.into_iter().map(|(u, v, k)| (u, v / k as f64)).collect()
}

fn interpolate(curve: &[(f64, f64)], u: f64) -> Option<f64> {
    if curve.is_empty() || u < curve[0].0 || u > curve[curve.len() - 1].0 {
        return None;
    }
    let i = curve.partition_point(|p| p.0 < u);
    if i == 0 {
        return Some(curve[0].1);
    }
    let (a, b) = (curve[i - 1], curve[i]);
    Some(a.1 + (b.1 - a.1) * (u - a.0) / (b.0 - a.0))
}

/// Residual and optimal log-offset in `y` for a log-shift `t` of `b`'s `x`.
fn overlap_fit(a: &[(f64, f64)], b: &[(f64, f64)], t: f64) -> Option<(f64, f64, usize)> {
    let diffs: Vec<f64> = b
        .iter()
        .filter_map(|&(u, v)| interpolate(a, u + t).map(|ya| ya - v))
        .collect();
    if diffs.len() < 2 {
        return None;
    }
    let m = diffs.len() as f64;
    let offset = diffs.iter().sum::<f64>() / m;
    let rms = (diffs.iter().map(|d| (d - offset).powi(2)).sum::<f64>() / m).sqrt();
    Some((rms, offset, diffs.len()))
}

/// Least-squares rescaling of `b`'s master curve onto `a`'s in log-log
/// coordinates.
pub fn compare_collapse(a: &CollapseResult, b: &CollapseResult) -> Result<CollapseComparison> {
    let to_log = |c: &[(f64, f64)]| -> Vec<(f64, f64)> {
        c.iter()
            .filter(|p| p.0 > 0.0 && p.1 > 0.0)
            .map(|p| (p.0.ln(), p.1.ln()))
            .collect()
    };
    let la = interpolant(&to_log(&a.master_curve));
    let lb = to_log(&b.master_curve);
    if la.len() < 2 || lb.len() < 2 {
        return Err(Error::Data("master curves too short to compare".into()));
    }
    let (a_lo, a_hi) = (la[0].0, la[la.len() - 1].0);
    let (b_lo, b_hi) = (lb[0].0, lb[lb.len() - 1].0);
    // Shifts keeping at least part of b inside a's range.
    let t_lo = a_lo - b_hi;
    let t_hi = a_hi - b_lo;
    let eval = |t: f64| overlap_fit(&la, &lb, t).map(|r| r.0).unwrap_or(f64::INFINITY);
    let steps = 400;
    let mut best_t = f64::NAN;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        let t = t_lo + (t_hi - t_lo) * i as f64 / steps as f64;
        let r = eval(t);
        if r < best || (r == best && t.abs() < best_t.abs()) {
            best = r;
            best_t = t;
        }
    }
    if !best.is_finite() {
        return Err(Error::Data("master curves have disjoint x ranges".into()));
    }
    // Golden-section refinement within one scan step.
    let h = (t_hi - t_lo) / steps as f64;
    let (mut lo, mut hi) = (best_t - h, best_t + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if eval(m1) <= eval(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_ref = 0.5 * (lo + hi);
    let t = if eval(t_ref) <= best { t_ref } else { best_t };
    let (rms, offset, k) =
        overlap_fit(&la, &lb, t).ok_or_else(|| Error::Data("master curves have disjoint x ranges".into()))?;
    Ok(CollapseComparison {
        scale_x: t.exp(),
        scale_y: offset.exp(),
        residual_rms: rms,
        overlap_points: k,
        a: (a.w_c, a.nu),
        b: (b.w_c, b.nu),
    })
}

/// `xi(N, W) = min(N, amplitude * W^{-nu})` on the given grid.
pub fn synthetic_table(sizes: &[usize], disorders: &[f64], amplitude: f64, nu: f64) -> XiTable {
    let mut rows = Vec::new();
    for &w in disorders {
        for &n in sizes {
            rows.push(crate::scaling::XiRow {
                n_max: n,
                disorder_w: w,
                xi: (n as f64).min(amplitude * w.powf(-nu)),
            });
        }
    }
    XiTable { rows }
}
