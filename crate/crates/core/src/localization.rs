//! Localization diagnostics for subradiant eigenmodes.
//!
//! Participation-ratio lengths, wavepacket centres and their histogram, the
//! effective potential `V(x0) = -ln P(x0)` with constant and harmonic fits,
//! the prediction of the typical rate from the centre distribution, and the
//! comparison of the spectral scale with the spatial one.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::{fit_line, XiTable};

/// `(sum_x |phi(x)|^4)^{-1}` of a unit-norm state.
pub fn participation_ratio(amplitudes: &[Complex64]) -> f64 {
    1.0 / amplitudes.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CenterEstimator {
    #[default]
    Argmax,
    Centroid,
}

/// Wavepacket centre in 1-based site units. `Argmax` breaks ties toward the
/// smallest site.
pub fn wavepacket_center(amplitudes: &[Complex64], estimator: CenterEstimator) -> f64 {
    match estimator {
        CenterEstimator::Argmax => {
            let mut best = 0;
            let mut best_p = -1.0;
            for (i, z) in amplitudes.iter().enumerate() {
                let p = z.norm_sqr();
                if p > best_p * (1.0 + 1e-12) {
                    best = i;
                    best_p = p;
                }
            }
            (best + 1) as f64
        }
        CenterEstimator::Centroid => {
            let total: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
            amplitudes
                .iter()
                .enumerate()
                .map(|(i, z)| (i + 1) as f64 * z.norm_sqr())
                .sum::<f64>()
                / total
        }
    }
}

/// Fit selected for the effective potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PotentialFit {
    Constant { level: f64 },
    Harmonic { level: f64, center: f64, sigma: f64 },
}

impl PotentialFit {
    /// Fitted `V(x0)`.
    pub fn eval(&self, x0: f64) -> f64 {
        match *self {
            PotentialFit::Constant { level } => level,
            PotentialFit::Harmonic { level, center, sigma } => level + ((x0 - center) / sigma).powi(2),
        }
    }
}

/// Residual sums of squares of both fits over the bulk bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitComparison {
    pub constant_rss: f64,
    pub harmonic_rss: f64,
    /// Bulk bins used by the fits.
    pub bins: usize,
    pub constant: PotentialFit,
    pub harmonic: PotentialFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationStats {
    pub n_qubits: usize,
    pub n_modes: usize,
    /// `exp(<ln xi_phi>)` over the modes, when lengths were supplied.
    pub xi_phi_typ: Option<f64>,
    /// Bin edges over `[1, N]`.
    pub bin_edges: Vec<f64>,
    /// Probability density per bin; `sum P * width = 1`.
    pub density: Vec<f64>,
    /// `-ln P` per bin.
    pub potential: Vec<f64>,
    /// Bins entering the fits (edge bins excluded).
    pub fit_range: (usize, usize),
    pub fit: PotentialFit,
    pub comparison: FitComparison,
}

impl LocalizationStats {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect()
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_edges[1] - self.bin_edges[0]
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.comparison.harmonic {
            PotentialFit::Harmonic { sigma, .. } => Some(sigma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramOptions {
    /// `None` gives `ceil(N / 10)` bins.
    pub n_bins: Option<usize>,
    /// Fraction of sites excluded from the fits at each edge.
    pub edge_fraction: f64,
    /// Harmonic fit wins only if it lowers the residual by this factor.
    pub harmonic_gain: f64,
}

impl Default for HistogramOptions {
    fn default() -> Self {
        HistogramOptions {
            n_bins: None,
            edge_fraction: 0.05,
            harmonic_gain: 0.5,
        }
    }
}

pub const RECOMMENDED_MIN_MODES: usize = 500;

/// Histogram of wavepacket centres over `[1, N]` and fits of the effective
/// potential. Empty interior bins receive one pseudo-count before
/// normalisation so the potential stays finite.
pub fn center_statistics(
    centers: &[f64],
    xi_phi: &[f64],
    n_qubits: usize,
    options: &HistogramOptions,
) -> Result<LocalizationStats> {
    if centers.is_empty() {
        return Err(Error::Data("no wavepacket centres".into()));
    }
    let n_bins = options.n_bins.unwrap_or(n_qubits.div_ceil(10)).max(3);
    let lo = 1.0;
    let hi = n_qubits as f64;
    let width = (hi - lo).max(1.0) / n_bins as f64;
    let bin_edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0.0; n_bins];
    for &x in centers {
        let b = (((x - lo) / width).floor() as isize).clamp(0, n_bins as isize - 1) as usize;
        counts[b] += 1.0;
    }
    if counts.iter().filter(|&&c| c > 0.0).count() <= 1 {
        return Err(Error::Degenerate("all wavepacket centres fall in one bin".into()));
    }
    for c in counts.iter_mut().take(n_bins - 1).skip(1) {
        if *c == 0.0 {
            *c = 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    let density: Vec<f64> = counts.iter().map(|c| c / (total * width)).collect();
    let potential: Vec<f64> = density.iter().map(|p| -p.ln()).collect();

    let edge_sites = options.edge_fraction * n_qubits as f64;
    let centers_of: Vec<f64> = bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let first = centers_of.iter().position(|&c| c - lo >= edge_sites).unwrap_or(0);
    let last = centers_of
        .iter()
        .rposition(|&c| hi - c >= edge_sites)
        .unwrap_or(n_bins - 1);
    if last < first + 2 {
        return Err(Error::Degenerate("too few bulk bins for the potential fit".into()));
    }
    let xs = &centers_of[first..=last];
    let vs: Vec<f64> = potential[first..=last].to_vec();
    let finite: Vec<(f64, f64)> = xs
        .iter()
        .zip(&vs)
        .filter(|(_, v)| v.is_finite())
        .map(|(x, v)| (*x, *v))
        .collect();
    let comparison = compare_potential_fits(&finite, n_qubits as f64)?;
    let fit = if comparison.harmonic_rss < options.harmonic_gain * comparison.constant_rss {
        comparison.harmonic
    } else {
        comparison.constant
    };
    let xi_phi_typ = if xi_phi.is_empty() {
        None
    } else {
        Some((xi_phi.iter().map(|x| x.ln()).sum::<f64>() / xi_phi.len() as f64).exp())
    };
    Ok(LocalizationStats {
        n_qubits,
        n_modes: centers.len(),
        xi_phi_typ,
        bin_edges,
        density,
        potential,
        fit_range: (first, last),
        fit,
        comparison,
    })
}

/// Constant fit `V = c` versus harmonic fit `V = c + (x - x0)^2 / sigma^2`
/// (least squares, quadratic in `x`). A harmonic fit with non-positive
/// curvature degenerates to the constant one.
fn compare_potential_fits(points: &[(f64, f64)], n: f64) -> Result<FitComparison> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    let m = points.len() as f64;
    let mean = points.iter().map(|p| p.1).sum::<f64>() / m;
    let constant_rss: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let constant = PotentialFit::Constant { level: mean };

    // Quadratic least squares in the centred coordinate u = (x - N/2) / N.
    let scale = n.max(1.0);
    let u: Vec<f64> = points.iter().map(|p| (p.0 - n / 2.0) / scale).collect();
    let coeffs = quadratic_lsq(&u, &points.iter().map(|p| p.1).collect::<Vec<_>>());
    let (harmonic, harmonic_rss) = match coeffs {
        Some([c0, c1, c2]) if c2 > 0.0 => {
            let rss: f64 = u
                .iter()
                .zip(points)
                .map(|(ui, p)| (p.1 - (c0 + c1 * ui + c2 * ui * ui)).powi(2))
                .sum();
            let u0 = -c1 / (2.0 * c2);
            let level = c0 - c1 * c1 / (4.0 * c2);
            (
                PotentialFit::Harmonic {
                    level,
                    center: n / 2.0 + u0 * scale,
                    sigma: scale / c2.sqrt(),
                },
                rss,
            )
        }
        _ => (
            PotentialFit::Harmonic {
                level: mean,
                center: n / 2.0,
                sigma: f64::INFINITY,
            },
            constant_rss,
        ),
    };
    Ok(FitComparison {
        constant_rss,
        harmonic_rss,
        bins: points.len(),
        constant,
        harmonic,
    })
}

fn quadratic_lsq(x: &[f64], y: &[f64]) -> Option<[f64; 3]> {
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (xi, yi) in x.iter().zip(y) {
        let p = [1.0, *xi, xi * xi];
        for r in 0..3 {
            b[r] += p[r] * yi;
            for c in 0..3 {
                a[r][c] += p[r] * p[c];
            }
        }
    }
    solve3(a, b)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[row].iter_mut().zip(pivot).skip(col) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Log-log slope of the potential width against system size.
pub fn sigma_scaling(widths: &[(usize, f64)]) -> Result<f64> {
    if widths.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: widths.len(),
        });
    }
    if widths.iter().any(|(_, s)| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Data("widths must be positive and finite".into()));
    }
    let x: Vec<f64> = widths.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let y: Vec<f64> = widths.iter().map(|(_, s)| s.ln()).collect();
    Ok(fit_line(&x, &y)?.slope)
}

/// Exponent of the typical rate predicted from the centre distribution:
/// midpoint quadrature of `ln(exp(-N/xi) cosh((2 x0 - N)/xi)) P(x0)` over
/// the histogram bins. Prefactor-free; meaningful through differences in N.
pub fn predict_typ_rate(bin_edges: &[f64], density: &[f64], xi_phi: f64, n: f64) -> Result<f64> {
    if bin_edges.len() != density.len() + 1 || density.is_empty() {
        return Err(Error::Data("bin edges and densities disagree".into()));
    }
    if xi_phi.is_nan() || xi_phi <= 0.0 {
        return Err(Error::Domain(format!("xi_phi = {xi_phi} must be positive")));
    }
    let mass: f64 = density
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(p, e)| p * (e[1] - e[0]))
        .sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Data(format!("density integrates to {mass}, not 1")));
    }
    Ok(density
        .iter()
        .zip(bin_edges.windows(2))
        .map(|(p, e)| {
            let x0 = 0.5 * (e[0] + e[1]);
            p * (e[1] - e[0]) * log_boundary_weight(x0, xi_phi, n)
        })
        .sum())
}

/// `ln(exp(-N/xi) cosh((2 x0 - N)/xi))`, evaluated without overflow.
fn log_boundary_weight(x0: f64, xi: f64, n: f64) -> f64 {
    let a = ((2.0 * x0 - n) / xi).abs();
    -n / xi + a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// Helper producing a uniform density over `[1, N]` with `bins` bins.
pub fn uniform_density(n: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let width = (n - 1.0) / bins as f64;
    let edges = (0..=bins).map(|i| 1.0 + i as f64 * width).collect();
    (edges, vec![1.0 / (n - 1.0); bins])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioCell {
    pub n_max: usize,
    pub disorder_w: f64,
    pub xi: f64,
    pub xi_phi: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub cells: Vec<RatioCell>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

/// Per-cell `xi / xi_phi` over cells present in both tables whose size is at
/// least `saturation_factor * N_c(W)`; `crossovers` maps each `W` to its
/// crossover size (cells at disorder values without one are excluded).
pub fn equivalence_check(
    xi_table: &XiTable,
    xi_phi_table: &XiTable,
    crossovers: &[(f64, Option<usize>)],
    saturation_factor: f64,
) -> Result<RatioReport> {
    let mut cells = Vec::new();
    for row in &xi_table.rows {
        let Some(other) = xi_phi_table
            .rows
            .iter()
            .find(|r| r.n_max == row.n_max && (r.disorder_w - row.disorder_w).abs() < 1e-12)
        else {
            continue;
        };
        let nc = crossovers
            .iter()
            .find(|(w, _)| (w - row.disorder_w).abs() < 1e-12)
            .and_then(|(_, nc)| *nc);
        let Some(nc) = nc else { continue };
        if (row.n_max as f64) < saturation_factor * nc as f64 {
            continue;
        }
        cells.push(RatioCell {
            n_max: row.n_max,
            disorder_w: row.disorder_w,
            xi: row.xi,
            xi_phi: other.xi,
            ratio: row.xi / other.xi,
        });
    }
    if cells.is_empty() {
        return Err(Error::Data("no overlapping saturated cells".into()));
    }
    let m = cells.len() as f64;
    let mean = cells.iter().map(|c| c.ratio).sum::<f64>() / m;
    let std = (cells.iter().map(|c| (c.ratio - mean).powi(2)).sum::<f64>() / m).sqrt();
    Ok(RatioReport {
        mean,
        min: cells.iter().map(|c| c.ratio).fold(f64::INFINITY, f64::min),
        max: cells.iter().map(|c| c.ratio).fold(f64::NEG_INFINITY, f64::max),
        std,
        cells,
    })
}
