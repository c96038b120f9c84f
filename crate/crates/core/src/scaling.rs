//! Size scaling of typical decay rates.
//!
//! Power-law and exponential fits on the respective linearizations, the
//! moment-based finite-size characteristic scale
//! `xi = M3/M2 - M2/M1` with `M_q = sum_n n^q Gamma(n)`, and the crossover
//! size where a disordered series leaves its ordered counterpart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Data("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: x.len(),
        });
    }
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - rss / syy };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        rss,
    })
}

/// Typical rate against system size for one disorder strength and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub points: Vec<(usize, f64)>,
    #[serde(default)]
    pub disorder_w: f64,
    #[serde(default)]
    pub label: String,
}

impl ScalingSeries {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self> {
        let s = ScalingSeries {
            points,
            disorder_w: 0.0,
            label: String::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_meta(mut self, disorder_w: f64, label: impl Into<String>) -> Self {
        self.disorder_w = disorder_w;
        self.label = label.into();
        self
    }

    pub fn from_fn(sizes: impl IntoIterator<Item = usize>, mut f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(sizes.into_iter().map(|n| (n, f(n))).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Data("sizes must be strictly increasing".into()));
        }
        if let Some((n, v)) = self.points.iter().find(|(_, v)| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Data(format!("non-positive value {v} at n = {n}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn value_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == n).map(|p| p.1)
    }

    /// Points with `lo <= n <= hi`.
    pub fn window(&self, lo: usize, hi: usize) -> ScalingSeries {
        ScalingSeries {
            points: self.points.iter().copied().filter(|p| p.0 >= lo && p.0 <= hi).collect(),
            disorder_w: self.disorder_w,
            label: self.label.clone(),
        }
    }

    /// Points with `n <= n_max`.
    pub fn truncated(&self, n_max: usize) -> ScalingSeries {
        self.window(0, n_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub rss: f64,
}

impl PowerLawFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.prefactor * n.powf(self.exponent)
    }
}

/// Least squares on `(ln n, ln value)`.
pub fn fit_power_law(series: &ScalingSeries) -> Result<PowerLawFit> {
    if series.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: series.len(),
        });
    }
    series.validate()?;
    let x: Vec<f64> = series.points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = series.points.iter().map(|p| p.1.ln()).collect();
    let f = fit_line(&x, &y)?;
    Ok(PowerLawFit {
        exponent: f.slope,
        prefactor: f.intercept.exp(),
        r_squared: f.r_squared,
        rss: f.rss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub xi_inf: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub rss: f64,
}

impl ExponentialFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.prefactor * (-n / self.xi_inf).exp()
    }
}

/// Least squares on `(n, ln value)`; `xi_inf = -1/slope`.
pub fn fit_exponential(series: &ScalingSeries) -> Result<ExponentialFit> {
    if series.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: series.len(),
        });
    }
    series.validate()?;
    let x: Vec<f64> = series.points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = series.points.iter().map(|p| p.1.ln()).collect();
    let f = fit_line(&x, &y)?;
    if f.slope >= 0.0 {
        return Err(Error::NotExponential { slope: f.slope });
    }
    Ok(ExponentialFit {
        xi_inf: -1.0 / f.slope,
        prefactor: f.intercept.exp(),
        r_squared: f.r_squared,
        rss: f.rss,
    })
}

/// Moment ratio `M3/M2 - M2/M1` over all points of the series. Points are
/// weighted by the local grid spacing, which cancels for uniform grids.
pub fn xi_from_moments(series: &ScalingSeries) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: series.len(),
        });
    }
    series.validate()?;
    let pts = &series.points;
    let weight = |i: usize| -> f64 {
        let left = if i > 0 {
            pts[i].0 - pts[i - 1].0
        } else {
            pts[1].0 - pts[0].0
        };
        let right = if i + 1 < pts.len() {
            pts[i + 1].0 - pts[i].0
        } else {
            left
        };
        0.5 * (left + right) as f64
    };
    // Factor out the largest value so tiny rates do not underflow the sums.
    let vmax = pts.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut m = [0.0f64; 4];
    for (i, &(n, v)) in pts.iter().enumerate() {
        let n = n as f64;
        let g = weight(i) * v / vmax;
        m[1] += n * g;
        m[2] += n * n * g;
        m[3] += n * n * n * g;
    }
    let xi = m[3] / m[2] - m[2] / m[1];
    if !xi.is_finite() || xi <= 0.0 {
        return Err(Error::Degenerate(format!("moment scale {xi} is not positive")));
    }
    Ok(xi)
}

/// One row of the characteristic-scale table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiRow {
    pub n_max: usize,
    pub disorder_w: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct XiTable {
    pub rows: Vec<XiRow>,
}

impl XiTable {
    /// `xi(n_max, W)` from every prefix of each series that holds at least
    /// `min_points` points.
    pub fn from_series(series: &[ScalingSeries], min_points: usize) -> Result<Self> {
        let mut rows = Vec::new();
        for s in series {
            for (i, &(n_max, _)) in s.points.iter().enumerate() {
                if i + 1 < min_points.max(2) {
                    continue;
                }
                let xi = xi_from_moments(&s.truncated(n_max))?;
                rows.push(XiRow {
                    n_max,
                    disorder_w: s.disorder_w,
                    xi,
                });
            }
        }
        Ok(XiTable { rows })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.rows.iter().map(|r| r.n_max).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn disorders(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.disorder_w).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn get(&self, n_max: usize, disorder_w: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n_max == n_max && (r.disorder_w - disorder_w).abs() < 1e-12)
            .map(|r| r.xi)
    }

    /// Rows restricted to the given sizes and disorder values.
    pub fn select(&self, sizes: &[usize], disorders: &[f64]) -> XiTable {
        XiTable {
            rows: self
                .rows
                .iter()
                .copied()
                .filter(|r| sizes.contains(&r.n_max) && disorders.iter().any(|w| (w - r.disorder_w).abs() < 1e-12))
                .collect(),
        }
    }
}

/// Smallest `n` where `series/reference <= 1/e` and `series/exp_fit >= 2/e`.
/// `None` when no size qualifies.
pub fn detect_crossover_nc(
    series: &ScalingSeries,
    ordered_reference: &ScalingSeries,
    exp_fit: &ExponentialFit,
) -> Result<Option<usize>> {
    if series.sizes() != ordered_reference.sizes() {
        return Err(Error::GridMismatch(
            "series and ordered reference sample different sizes".into(),
        ));
    }
    let e_inv = (-1.0f64).exp();
    for (&(n, v), &(_, r)) in series.points.iter().zip(&ordered_reference.points) {
        if v / r <= e_inv && v / exp_fit.eval(n as f64) >= 2.0 * e_inv {
            return Ok(Some(n));
        }
    }
    Ok(None)
}
