//! Single-excitation spectrum: eigenmodes, decay rates, quasimomentum labels
//! and target-mode selection.
//!
//! Two solvers are available. [`diagonalize`] runs a general dense complex
//! eigendecomposition of `H_eff`. [`InverseSpectrum`] works on the
//! tridiagonal `H_eff^{-1}` in `O(N^2)` and recovers decay rates from the
//! boundary amplitudes, so rates far below `eps * |H_eff|` stay resolved.
//! The two routes agree to round-off on the modes both can resolve and serve
//! as cross-checks for each other.

mod tridiag;

use std::borrow::Borrow;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_h_eff, build_h_inv, DenseHamiltonian, Realization, TridiagonalInverse, POLE_GUARD};

/// Modes with `|k_est - phi|` below this are labelled superradiant.
pub const SUPERRADIANT_WINDOW: f64 = 0.05 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeClass {
    StrongSubradiant,
    WeakSubradiant,
    Superradiant,
}

impl ModeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeClass::StrongSubradiant => "strong_subradiant",
            ModeClass::WeakSubradiant => "weak_subradiant",
            ModeClass::Superradiant => "superradiant",
        }
    }
}

impl fmt::Display for ModeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One eigenpair of `H_eff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenMode {
    pub omega: Complex64,
    /// `-Im(omega)`.
    pub gamma: f64,
    /// `ln(gamma)`, kept separately because the tridiagonal route resolves
    /// rates below the smallest normal `f64`.
    pub ln_gamma: f64,
    /// Right eigenvector, unit Euclidean norm, largest component real positive.
    pub vector: Vec<Complex64>,
    pub k_est: f64,
    pub node_index: usize,
    pub mode_class: ModeClass,
}

impl EigenMode {
    /// `Omega_k = Re(omega)`.
    pub fn frequency(&self) -> f64 {
        self.omega.re
    }

    pub fn n(&self) -> usize {
        self.vector.len()
    }

    /// `|phi(1)|^2 + |phi(N)|^2`.
    pub fn boundary_population(&self) -> f64 {
        let n = self.vector.len();
        self.vector[0].norm_sqr() + self.vector[n - 1].norm_sqr()
    }

    fn from_parts(omega: Complex64, ln_gamma: f64, mut vector: Vec<Complex64>, phi: f64) -> Self {
        fix_phase(&mut vector);
        let (k_est, node_index) = estimate_k(&vector);
        let mode_class = classify(k_est, node_index, vector.len(), phi);
        EigenMode {
            omega,
            gamma: -omega.im,
            ln_gamma,
            vector,
            k_est,
            node_index,
            mode_class,
        }
    }
}

fn fix_phase(v: &mut [Complex64]) {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let pivot = v.iter().copied().fold(Complex64::new(0.0, 0.0), |best, z| {
        if z.norm() > best.norm() * (1.0 + 1e-12) {
            z
        } else {
            best
        }
    });
    if norm == 0.0 || pivot.norm() == 0.0 {
        return;
    }
    let rot = pivot.conj() / pivot.norm() / norm;
    for z in v.iter_mut() {
        *z *= rot;
    }
}

/// Dense general eigendecomposition of `H_eff`, modes sorted by ascending
/// `Omega` (ties by ascending `Gamma`).
pub fn diagonalize(h: &DenseHamiltonian) -> Result<Vec<EigenMode>> {
    let n = h.n;
    if n == 0 {
        return Err(Error::Data("empty Hamiltonian".into()));
    }
    let evd = h.to_mat().eigen().map_err(|e| Error::Eigensolver {
        realization: None,
        reason: format!("{e:?}"),
    })?;
    let values = evd.S();
    let vectors = evd.U();
    let mut modes: Vec<EigenMode> = (0..n)
        .map(|j| {
            let omega = values[j];
            let vector: Vec<Complex64> = (0..n).map(|i| vectors[(i, j)]).collect();
            EigenMode::from_parts(omega, (-omega.im).ln(), vector, h.phi)
        })
        .collect();
    sort_modes(&mut modes);
    Ok(modes)
}

fn sort_modes(modes: &mut [EigenMode]) {
    modes.sort_by(|a, b| a.omega.re.total_cmp(&b.omega.re));
    order_degenerate(modes, |m| m.omega);
}

/// Relative width below which two frequencies count as degenerate.
const DEGENERACY_TOL: f64 = 1e-10;

/// Within runs of equal `Omega` in an `Omega`-sorted list, orders modes as
/// the ordered chain does: rates grow towards the pole, so ascending on the
/// `Omega > 0` side and descending on the `Omega < 0` side.
fn order_degenerate<T>(items: &mut [T], omega: impl Fn(&T) -> Complex64) {
    let mut start = 0;
    while start < items.len() {
        let w0 = omega(&items[start]).re;
        let mut end = start + 1;
        while end < items.len() && (omega(&items[end]).re - w0).abs() <= DEGENERACY_TOL * w0.abs().max(1.0) {
            end += 1;
        }
        if end - start > 1 {
            let sign = if w0 < 0.0 { -1.0 } else { 1.0 };
            items[start..end].sort_by(|a, b| (sign * -omega(a).im).total_cmp(&(sign * -omega(b).im)));
        }
        start = end;
    }
}

/// Spectrum of `H_eff` obtained through the tridiagonal inverse.
///
/// Eigenvalues are computed up front; eigenvectors, refined rates and
/// quasimomentum labels are produced per mode on demand, which keeps an
/// ensemble step at `O(N^2)`.
#[derive(Debug, Clone)]
pub struct InverseSpectrum {
    h_inv: TridiagonalInverse,
    /// Eigenvalues of `H_eff^{-1}`, ordered by ascending `Re(1/lambda)`.
    lambdas: Vec<Complex64>,
}

impl InverseSpectrum {
    pub fn new(h_inv: TridiagonalInverse) -> Result<Self> {
        let mut lambdas =
            tridiag::ql_eigenvalues(&h_inv.diag, &h_inv.offdiag).map_err(|reason| Error::Eigensolver {
                realization: None,
                reason,
            })?;
        lambdas.sort_by(|a, b| a.inv().re.total_cmp(&b.inv().re));
        order_degenerate(&mut lambdas, |l| l.inv());
        Ok(InverseSpectrum { h_inv, lambdas })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Unrefined `omega = 1/lambda` for every mode, in spectrum order.
    pub fn omegas(&self) -> Vec<Complex64> {
        self.lambdas.iter().map(|l| l.inv()).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.inv().re).collect()
    }

    fn pair(&self, index: usize) -> tridiag::InversePair {
        tridiag::refine_pair(
            &self.h_inv.diag,
            &self.h_inv.offdiag,
            self.h_inv.gamma,
            self.lambdas[index],
        )
    }

    /// Boundary-refined `ln Gamma` of one mode, `O(N)`.
    pub fn ln_gamma(&self, index: usize) -> f64 {
        let p = self.pair(index);
        ln_gamma_from_lambda(p.lambda.re, p.ln_im_lambda)
    }

    /// Full eigenmode with refined rate, `O(N)` plus the `O(N^2)` label.
    pub fn mode(&self, index: usize) -> EigenMode {
        let p = self.pair(index);
        let a = p.lambda.re;
        let ln_gamma = ln_gamma_from_lambda(a, p.ln_im_lambda);
        let b = p.lambda.im;
        let omega = Complex64::new(a / (a * a + b * b), -ln_gamma.exp());
        EigenMode::from_parts(omega, ln_gamma, p.vector, self.h_inv.phi)
    }

    pub fn modes(&self) -> Vec<EigenMode> {
        (0..self.len()).map(|i| self.mode(i)).collect()
    }

    /// Index of the mode picked by `target`.
    pub fn select(&self, target: &ModeTarget) -> Result<usize> {
        self.select_mode(target).map(|(i, _)| i)
    }

    /// Index and mode picked by `target`; subradiant targets skip modes
    /// labelled superradiant.
    pub fn select_mode(&self, target: &ModeTarget) -> Result<(usize, EigenMode)> {
        let (phi, gamma) = (self.h_inv.phi, self.h_inv.gamma);
        let omegas = self.omegas();
        let freqs: Vec<f64> = omegas.iter().map(|w| w.re).collect();
        let idx = select_index(&omegas, |i| self.ln_gamma(i), target, phi, gamma)?;
        if target.is_superradiant(phi) {
            return Ok((idx, self.mode(idx)));
        }
        let aim = target.target_frequency(phi, gamma)?;
        Ok(skip_superradiant(&freqs, idx, aim, |i| self.mode(i)))
    }
}

fn ln_gamma_from_lambda(re: f64, ln_im: f64) -> f64 {
    // Gamma = b / (a^2 + b^2) with b = Im(lambda).
    let b = ln_im.exp();
    ln_im - (re * re + b * b).ln()
}

/// All modes through the tridiagonal route, sorted by ascending `Omega`.
pub fn diagonalize_inverse(h_inv: &TridiagonalInverse) -> Result<Vec<EigenMode>> {
    let spec = InverseSpectrum::new(h_inv.clone())?;
    let mut modes = spec.modes();
    sort_modes(&mut modes);
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Dense,
    #[default]
    Tridiagonal,
}

/// Spectrum of one realization by the chosen route. The tridiagonal route
/// falls back to the dense solver if its QL sweep fails.
pub fn realization_modes(realization: &Realization, gamma: f64, phi: f64, solver: Solver) -> Result<Vec<EigenMode>> {
    let tag = |e: Error| match e {
        Error::Eigensolver { reason, .. } => Error::Eigensolver {
            realization: Some(realization.realization_index),
            reason,
        },
        other => other,
    };
    match solver {
        Solver::Dense => diagonalize(&build_h_eff(realization, gamma, phi)).map_err(tag),
        Solver::Tridiagonal => match build_h_inv(realization, gamma, phi).and_then(|t| diagonalize_inverse(&t)) {
            Ok(m) => Ok(m),
            Err(Error::Eigensolver { .. }) => diagonalize(&build_h_eff(realization, gamma, phi)).map_err(tag),
            Err(e) => Err(e),
        },
    }
}

/// Dispersion of the infinite ordered chain at real quasimomentum `k`,
/// `omega = (gamma/4) [cot((phi+k)/2) + cot((phi-k)/2)]`. Real for real `k`.
pub fn ordered_dispersion(phi: f64, k: f64, gamma: f64) -> Result<f64> {
    if !(k > 0.0 && k < PI) {
        return Err(Error::Domain(format!("k = {k} outside (0, pi)")));
    }
    if (k - phi).abs() <= POLE_GUARD {
        return Err(Error::DispersionPole { k, phi });
    }
    let cot = |x: f64| x.cos() / x.sin();
    Ok(gamma / 4.0 * (cot((phi + k) / 2.0) + cot((phi - k) / 2.0)))
}

/// Standing-wave label: `k_est = q* pi / (N + 1)` with `q*` maximizing the
/// discrete sine overlap. Ties go to the smallest `q`.
pub fn estimate_k(vector: &[Complex64]) -> (f64, usize) {
    let n = vector.len();
    let step = PI / (n + 1) as f64;
    let period = 2 * (n + 1);
    let table: Vec<f64> = (0..period).map(|j| (j as f64 * step).sin()).collect();
    let mut best_q = 1;
    let mut best = -1.0;
    for q in 1..=n {
        let mut j = 0;
        let mut overlap = Complex64::new(0.0, 0.0);
        for v in vector {
            j += q;
            if j >= period {
                j -= period;
            }
            overlap += v * table[j];
        }
        let score = overlap.norm();
        if score > best * (1.0 + 1e-9) + 1e-300 {
            best = score;
            best_q = q;
        }
    }
    (best_q as f64 * step, best_q)
}

pub fn classify(k_est: f64, node_index: usize, n: usize, phi: f64) -> ModeClass {
    if (k_est - phi).abs() < SUPERRADIANT_WINDOW {
        ModeClass::Superradiant
    } else if node_index == 1 || node_index == n {
        ModeClass::StrongSubradiant
    } else {
        ModeClass::WeakSubradiant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum TargetKind {
    /// `k -> 0` edge of the band (`Omega > 0` branch).
    BandEdgeLow,
    /// `k -> pi` edge of the band (`Omega < 0` branch).
    BandEdgeHigh,
    FixedK(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    NearestOmega,
    #[default]
    SortedIndex,
    MinGamma,
}

impl Selector {
    pub fn as_str(&self) -> &'static str {
        match self {
            Selector::NearestOmega => "nearest_omega",
            Selector::SortedIndex => "sorted_index",
            Selector::MinGamma => "min_gamma",
        }
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest_omega" => Ok(Selector::NearestOmega),
            "sorted_index" => Ok(Selector::SortedIndex),
            "min_gamma" => Ok(Selector::MinGamma),
            other => Err(Error::Config(format!("unknown selector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeTarget {
    pub kind: TargetKind,
    #[serde(default)]
    pub selector: Selector,
}

impl ModeTarget {
    pub fn band_edge_low() -> Self {
        ModeTarget {
            kind: TargetKind::BandEdgeLow,
            selector: Selector::default(),
        }
    }

    pub fn band_edge_high() -> Self {
        ModeTarget {
            kind: TargetKind::BandEdgeHigh,
            selector: Selector::default(),
        }
    }

    pub fn fixed_k(k: f64) -> Self {
        ModeTarget {
            kind: TargetKind::FixedK(k),
            selector: Selector::default(),
        }
    }

    pub fn with_selector(self, selector: Selector) -> Self {
        ModeTarget { selector, ..self }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            TargetKind::BandEdgeLow => "band_edge_low",
            TargetKind::BandEdgeHigh => "band_edge_high",
            TargetKind::FixedK(_) => "fixed_k",
        }
    }

    /// Nominal quasimomentum: `0`, `pi` or the fixed value.
    pub fn k(&self) -> f64 {
        match self.kind {
            TargetKind::BandEdgeLow => 0.0,
            TargetKind::BandEdgeHigh => PI,
            TargetKind::FixedK(k) => k,
        }
    }

    /// Ordered-chain frequency the selection aims at; band edges use the
    /// `k -> 0` and `k -> pi` limits of the dispersion.
    pub fn target_frequency(&self, phi: f64, gamma: f64) -> Result<f64> {
        match self.kind {
            TargetKind::BandEdgeLow => Ok(gamma / 2.0 / (phi / 2.0).tan()),
            TargetKind::BandEdgeHigh => Ok(-gamma / 2.0 * (phi / 2.0).tan()),
            TargetKind::FixedK(k) => ordered_dispersion(phi, k, gamma),
        }
    }

    /// True when a fixed-k target sits inside the superradiant window.
    pub fn is_superradiant(&self, phi: f64) -> bool {
        matches!(self.kind, TargetKind::FixedK(k) if (k - phi).abs() < SUPERRADIANT_WINDOW)
    }

    /// Short label used in file names and tables.
    pub fn label(&self) -> String {
        match self.kind {
            TargetKind::FixedK(k) => format!("k{:.4}pi_{}", k / PI, self.selector.as_str()),
            _ => format!("{}_{}", self.kind_str(), self.selector.as_str()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TargetKind::FixedK(k) = self.kind {
            if !(k > 0.0 && k < PI) {
                return Err(Error::Config(format!("fixed_k target {k} outside (0, pi)")));
            }
            if self.selector == Selector::MinGamma {
                return Err(Error::Config(
                    "min_gamma selector applies to band-edge targets only".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Index into an `Omega`-sorted mode list chosen by `target`.
///
/// `sorted_index` ranks the target among the ordered-chain modes. For odd `N`
/// one ordered mode sits on the dispersion pole at `Omega = 0`; disorder pushes
/// it to either branch. It is left out of the ordered rank and its
/// continuation, the brightest mode in `omegas`, is left out of the list, so
/// the rank does not shift with the side it lands on.
pub(crate) fn select_index(
    omegas: &[Complex64],
    ln_gamma: impl Fn(usize) -> f64,
    target: &ModeTarget,
    phi: f64,
    gamma: f64,
) -> Result<usize> {
    if omegas.is_empty() {
        return Err(Error::Data("empty mode list".into()));
    }
    target.validate()?;
    let n = omegas.len();
    match target.selector {
        Selector::NearestOmega => {
            let aim = target.target_frequency(phi, gamma)?;
            let mut best = 0;
            for (i, w) in omegas.iter().enumerate() {
                if (w.re - aim).abs() < (omegas[best].re - aim).abs() {
                    best = i;
                }
            }
            Ok(best)
        }
        Selector::SortedIndex => {
            let step = PI / (n + 1) as f64;
            let q_target = match target.kind {
                TargetKind::BandEdgeLow => 1,
                TargetKind::BandEdgeHigh => n,
                TargetKind::FixedK(k) => ((k / step).round() as usize).clamp(1, n),
            };
            let ordered = |q: usize| ordered_dispersion(phi, q as f64 * step, gamma).ok();
            let pole = (1..=n).find(|&q| ordered(q).is_none());
            let brightest = || {
                (0..n)
                    .max_by(|&a, &b| (-omegas[a].im).total_cmp(&-omegas[b].im))
                    .unwrap_or(0)
            };
            let Some(aim) = ordered(q_target) else {
                return Ok(brightest());
            };
            let rank = (1..=n)
                .filter(|&q| q != q_target)
                .filter_map(|q| ordered(q).map(|w| (q, w)))
                .filter(|&(q, w)| w < aim || (w == aim && q < q_target))
                .count();
            let index = match pole {
                Some(_) => {
                    let skip = brightest();
                    if rank < skip {
                        rank
                    } else {
                        rank + 1
                    }
                }
                None => rank,
            };
            Ok(index.min(n - 1))
        }
        Selector::MinGamma => {
            let branch = |f: f64| match target.kind {
                TargetKind::BandEdgeHigh => f < 0.0,
                _ => f > 0.0,
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, w) in omegas.iter().enumerate() {
                if !branch(w.re) {
                    continue;
                }
                let g = ln_gamma(i);
                if best.is_none_or(|(_, b)| g < b) {
                    best = Some((i, g));
                }
            }
            best.map(|(i, _)| i)
                .ok_or_else(|| Error::Data("no mode on the target branch".into()))
        }
    }
}

/// Nearest mode to `start` in the sorted list that is not labelled
/// superradiant, preferring the side towards `aim` at equal distance. Falls
/// back to `start` when every mode is superradiant.
fn skip_superradiant<M: Borrow<EigenMode>>(
    freqs: &[f64],
    start: usize,
    aim: f64,
    mode: impl Fn(usize) -> M,
) -> (usize, M) {
    let first = mode(start);
    if first.borrow().mode_class != ModeClass::Superradiant {
        return (start, first);
    }
    let up_first = aim > freqs[start];
    for d in 1..freqs.len() {
        let up = (start + d < freqs.len()).then_some(start + d);
        let down = start.checked_sub(d);
        let order = if up_first { [up, down] } else { [down, up] };
        for i in order.into_iter().flatten() {
            let m = mode(i);
            if m.borrow().mode_class != ModeClass::Superradiant {
                return (i, m);
            }
        }
    }
    (start, first)
}

/// Mode picked by `target`; subradiant targets skip modes labelled
/// superradiant.
pub fn select_target_mode<'a>(
    modes: &'a [EigenMode],
    target: &ModeTarget,
    phi: f64,
    gamma: f64,
) -> Result<&'a EigenMode> {
    let omegas: Vec<Complex64> = modes.iter().map(|m| m.omega).collect();
    let freqs: Vec<f64> = omegas.iter().map(|w| w.re).collect();
    let idx = select_index(&omegas, |i| modes[i].ln_gamma, target, phi, gamma)?;
    if target.is_superradiant(phi) {
        return Ok(&modes[idx]);
    }
    let aim = target.target_frequency(phi, gamma)?;
    Ok(skip_superradiant(&freqs, idx, aim, |i| &modes[i]).1)
}

/// Both sides of the boundary identity for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryRates {
    /// `Gamma / (Gamma^2 + Omega^2) = Im(1/omega)`.
    pub lhs: f64,
    /// `(|phi(1)|^2 + |phi(N)|^2) / gamma`.
    pub rhs: f64,
    pub boundary_population: f64,
    /// Subradiant estimate `(Omega^2 / gamma) (|phi(1)|^2 + |phi(N)|^2)`.
    pub approx_gamma: f64,
}

/// Coefficient in front of the boundary population; fixed at 1 by the dense
/// inverse (see `build_h_inv`).
pub const BOUNDARY_COEFFICIENT: f64 = 1.0;

/// For `N = 1` both boundary terms refer to the same site and count twice.
pub fn boundary_rate_identity(mode: &EigenMode, gamma: f64) -> BoundaryRates {
    let omega = mode.omega;
    let lhs = mode.gamma / (mode.gamma * mode.gamma + omega.re * omega.re);
    let pop = mode.boundary_population();
    let rhs = BOUNDARY_COEFFICIENT * pop / gamma;
    BoundaryRates {
        lhs,
        rhs,
        boundary_population: pop,
        approx_gamma: BOUNDARY_COEFFICIENT * omega.re * omega.re / gamma * pop,
    }
}

#[cfg(test)]
mod tests;
