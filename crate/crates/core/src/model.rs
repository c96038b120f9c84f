//! Qubit geometries and the two Hamiltonian representations.
//!
//! Positions are measured in units of the ordered lattice constant `d`, so
//! the propagation phase between qubits `m` and `n` is `phi * |x_m - x_n|`
//! with `phi = k0 * d`. The dense effective Hamiltonian couples every pair of
//! qubits; its inverse is a complex symmetric tridiagonal matrix whose only
//! non-Hermitian entries sit on the two boundary sites.

use std::f64::consts::PI;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::realization_rng;

/// Spacing phases closer than this to a multiple of pi are rejected.
pub const POLE_GUARD: f64 = 1e-9;

/// One physical configuration of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_qubits: usize,
    /// Phase accumulated over one lattice spacing, `k0 * d`.
    pub phi: f64,
    /// Width of the uniform offset distribution, in units of `d`.
    pub disorder_w: f64,
    pub gamma: f64,
    pub master_seed: u64,
}

impl ChainSpec {
    pub fn new(n_qubits: usize, phi: f64, disorder_w: f64, gamma: f64, master_seed: u64) -> Result<Self> {
        let spec = ChainSpec {
            n_qubits,
            phi,
            disorder_w,
            gamma,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Ordered chain with `gamma = 1`.
    pub fn ordered(n_qubits: usize, phi: f64) -> Result<Self> {
        Self::new(n_qubits, phi, 0.0, 1.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidSpec("n_qubits must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.disorder_w) {
            return Err(Error::InvalidSpec(format!(
                "disorder_w = {} outside [0, 1)",
                self.disorder_w
            )));
        }
        if !(self.phi > 0.0 && self.phi <= PI / 2.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!("phi = {} outside (0, pi/2]", self.phi)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidSpec(format!("gamma = {} must be positive", self.gamma)));
        }
        Ok(())
    }

    pub fn with_n(self, n_qubits: usize) -> Self {
        ChainSpec { n_qubits, ..self }
    }

    pub fn with_disorder(self, disorder_w: f64) -> Self {
        ChainSpec { disorder_w, ..self }
    }
}

/// One disorder draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub offsets: Vec<f64>,
    /// Positions `x_m = m + delta_m` in units of `d`, with `m = 1..=N`.
    pub positions: Vec<f64>,
    /// `phi * (x_{m+1} - x_m)` for each of the `N - 1` bonds.
    pub spacing_phases: Vec<f64>,
    pub realization_index: u64,
}

impl Realization {
    /// Draws offsets for `realization_index` and builds the geometry.
    pub fn draw(spec: &ChainSpec, realization_index: u64) -> Result<Self> {
        let offsets = sample_offsets(spec, realization_index);
        build_positions(spec, &offsets, realization_index)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }
}

/// Uniform offsets on `[-W/2, W/2)`, one per qubit, from the realization's
/// own stream.
pub fn sample_offsets(spec: &ChainSpec, realization_index: u64) -> Vec<f64> {
    if spec.disorder_w == 0.0 {
        return vec![0.0; spec.n_qubits];
    }
    let mut rng = realization_rng(spec.master_seed, realization_index);
    (0..spec.n_qubits)
        .map(|_| spec.disorder_w * (rng.random::<f64>() - 0.5))
        .collect()
}

pub fn build_positions(spec: &ChainSpec, offsets: &[f64], realization_index: u64) -> Result<Realization> {
    if offsets.len() != spec.n_qubits {
        return Err(Error::InvalidSpec(format!(
            "expected {} offsets, got {}",
            spec.n_qubits,
            offsets.len()
        )));
    }
    let half = spec.disorder_w / 2.0;
    if let Some(bad) = offsets.iter().find(|d| d.abs() > half + 1e-15) {
        return Err(Error::InvalidSpec(format!("offset {bad} outside [-W/2, W/2]")));
    }
    let positions: Vec<f64> = offsets.iter().enumerate().map(|(i, d)| (i + 1) as f64 + d).collect();
    let mut spacing_phases = Vec::with_capacity(positions.len().saturating_sub(1));
    for (bond, pair) in positions.windows(2).enumerate() {
        let spacing = pair[1] - pair[0];
        if spacing <= 0.0 {
            return Err(Error::Ordering {
                site: bond + 1,
                spacing,
            });
        }
        let phase = spec.phi * spacing;
        let r = phase.rem_euclid(PI);
        if r < POLE_GUARD || PI - r < POLE_GUARD {
            return Err(Error::SingularSpacing { bond: bond + 1, phase });
        }
        spacing_phases.push(phase);
    }
    Ok(Realization {
        offsets: offsets.to_vec(),
        positions,
        spacing_phases,
        realization_index,
    })
}

/// Dense `N x N` effective Hamiltonian, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseHamiltonian {
    pub n: usize,
    pub gamma: f64,
    pub phi: f64,
    pub entries: Vec<Complex64>,
}

impl DenseHamiltonian {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    pub fn to_mat(&self) -> Mat<Complex64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Numerical inverse via partial-pivot LU, row-major.
    pub fn inverse(&self) -> Vec<Complex64> {
        let inv = self.to_mat().partial_piv_lu().inverse();
        let mut out = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.push(inv[(i, j)]);
            }
        }
        out
    }
}

/// `H_{mn} = -(i gamma / 2) exp(i phi |x_m - x_n|)`.
pub fn build_h_eff(realization: &Realization, gamma: f64, phi: f64) -> DenseHamiltonian {
    let n = realization.n();
    let x = &realization.positions;
    let pref = Complex64::new(0.0, -gamma / 2.0);
    let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        entries[i * n + i] = pref;
        for j in (i + 1)..n {
            let h = pref * Complex64::cis(phi * (x[j] - x[i]).abs());
            entries[i * n + j] = h;
            entries[j * n + i] = h;
        }
    }
    DenseHamiltonian { n, gamma, phi, entries }
}

/// Tridiagonal representation of the inverse effective Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalInverse {
    pub gamma: f64,
    pub phi: f64,
    pub diag: Vec<Complex64>,
    pub offdiag: Vec<Complex64>,
}

impl TridiagonalInverse {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            out[i * n + i] = self.diag[i];
        }
        for (i, w) in self.offdiag.iter().enumerate() {
            out[i * n + i + 1] = *w;
            out[(i + 1) * n + i] = *w;
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.offdiag[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }
}

/// Builds `H_eff^{-1} = H_0 + i V`.
///
/// With `c_m = cot(dphi_m)` and `s_m = csc(dphi_m)`, the entries are
/// `gamma * diag_m = -(c_{m-1} + c_m)` (missing bonds omitted at the ends),
/// `gamma * offdiag_m = +s_m`, and `+i/gamma` added on sites 1 and N. Both the
/// end-site real part (full-angle cotangent) and the positive off-diagonal
/// sign are what the dense numerical inverse produces.
pub fn build_h_inv(realization: &Realization, gamma: f64, phi: f64) -> Result<TridiagonalInverse> {
    let n = realization.n();
    let mut cot = Vec::with_capacity(n.saturating_sub(1));
    let mut csc = Vec::with_capacity(n.saturating_sub(1));
    for (i, &dp) in realization.spacing_phases.iter().enumerate() {
        let r = dp.rem_euclid(PI);
        if r < POLE_GUARD || PI - r < POLE_GUARD {
            return Err(Error::SingularSpacing { bond: i + 1, phase: dp });
        }
        let (s, c) = dp.sin_cos();
        cot.push(c / s);
        csc.push(1.0 / s);
    }
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    for (m, d) in diag.iter_mut().enumerate() {
        let mut v = 0.0;
        if m > 0 {
            v -= cot[m - 1];
        }
        if m + 1 < n {
            v -= cot[m];
        }
        *d = Complex64::new(v / gamma, 0.0);
    }
    diag[0].im += 1.0 / gamma;
    diag[n - 1].im += 1.0 / gamma;
    let offdiag = csc.iter().map(|s| Complex64::new(s / gamma, 0.0)).collect();
    Ok(TridiagonalInverse {
        gamma,
        phi,
        diag,
        offdiag,
    })
}
