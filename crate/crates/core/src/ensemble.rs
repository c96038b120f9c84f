//! Seeded disorder ensembles over `(N, W)` grids.
//!
//! Every realization is an independent work item keyed by
//! `(cell, realization_index)`. Results land in an indexed buffer and are
//! reduced in index order, so statistics are bitwise identical for any
//! worker count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::localization::{participation_ratio, wavepacket_center, CenterEstimator};
use crate::model::{build_h_eff, build_h_inv, ChainSpec, Realization};
use crate::spectrum::{diagonalize, select_target_mode, EigenMode, InverseSpectrum, ModeClass, ModeTarget, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_realizations: u64,
    /// First realization index; realizations `first_index..first_index + n`
    /// are drawn.
    pub first_index: u64,
    /// `None` uses the global pool.
    pub workers: Option<usize>,
    pub solver: Solver,
    pub keep_samples: bool,
    /// A cell with a larger fraction of failed realizations aborts the run.
    pub max_failure_fraction: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_realizations: 1000,
            first_index: 0,
            workers: None,
            solver: Solver::Tridiagonal,
            keep_samples: false,
            max_failure_fraction: 0.01,
        }
    }
}

/// Summary of the selected mode in one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSample {
    pub realization_index: u64,
    pub omega_re: f64,
    pub gamma: f64,
    pub ln_gamma: f64,
    pub k_est: f64,
    pub node_index: usize,
    pub mode_class: ModeClass,
    pub first_population: f64,
    pub last_population: f64,
    pub xi_phi: f64,
    pub center_argmax: f64,
    pub center_centroid: f64,
}

impl ModeSample {
    pub fn from_mode(mode: &EigenMode, realization_index: u64) -> Self {
        let n = mode.n();
        ModeSample {
            realization_index,
            omega_re: mode.frequency(),
            gamma: mode.gamma,
            ln_gamma: mode.ln_gamma,
            k_est: mode.k_est,
            node_index: mode.node_index,
            mode_class: mode.mode_class,
            first_population: mode.vector[0].norm_sqr(),
            last_population: mode.vector[n - 1].norm_sqr(),
            xi_phi: participation_ratio(&mode.vector),
            center_argmax: wavepacket_center(&mode.vector, CenterEstimator::Argmax),
            center_centroid: wavepacket_center(&mode.vector, CenterEstimator::Centroid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub phi: f64,
    pub gamma: f64,
    pub target: ModeTarget,
    /// Successful realizations entering the statistics.
    pub n_realizations: u64,
    pub n_failed: u64,
    pub gamma_typ: f64,
    pub gamma_avg: f64,
    pub ln_gamma_mean: f64,
    pub ln_gamma_std: f64,
    /// `exp <ln xi_phi>` of the selected mode.
    pub xi_phi_typ: f64,
    pub master_seed: u64,
    pub first_index: u64,
    pub last_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub realization_index: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCell {
    pub stats: EnsembleStats,
    /// Filled when `keep_samples` is set, in realization order.
    pub samples: Vec<ModeSample>,
    pub failures: Vec<Failure>,
}

/// Mean computed as `x_0 + sum(x_i - x_0) / n`, exact for constant input.
fn shifted_mean(values: &[f64]) -> f64 {
    let first = values[0];
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

fn shifted_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// `exp <ln x>`, reduced in input order.
pub fn typical(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(Error::NonPositiveRate { index, value });
    }
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(shifted_mean(&logs).exp())
}

/// Selected modes of one realization, one per target.
fn realization_samples(
    spec: &ChainSpec,
    index: u64,
    targets: &[ModeTarget],
    solver: Solver,
) -> Result<Vec<ModeSample>> {
    let realization = Realization::draw(spec, index)?;
    let (gamma, phi) = (spec.gamma, spec.phi);
    let dense = |realization: &Realization| -> Result<Vec<ModeSample>> {
        let modes = diagonalize(&build_h_eff(realization, gamma, phi)).map_err(|e| match e {
            Error::Eigensolver { reason, .. } => Error::Eigensolver {
                realization: Some(index),
                reason,
            },
            other => other,
        })?;
        targets
            .iter()
            .map(|t| select_target_mode(&modes, t, phi, gamma).map(|m| ModeSample::from_mode(m, index)))
            .collect()
    };
    match solver {
        Solver::Dense => dense(&realization),
        Solver::Tridiagonal => match InverseSpectrum::new(build_h_inv(&realization, gamma, phi)?) {
            Ok(spectrum) => {
                let samples = targets
                    .iter()
                    .map(|t| spectrum.select_mode(t).map(|(_, m)| ModeSample::from_mode(&m, index)))
                    .collect::<Result<Vec<_>>>()?;
                if samples.iter().all(|s| s.ln_gamma.is_finite()) {
                    Ok(samples)
                } else {
                    dense(&realization)
                }
            }
            Err(Error::Eigensolver { .. }) => dense(&realization),
            Err(e) => Err(e),
        },
    }
}

fn map_indexed<T: Send>(count: usize, workers: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
        match workers {
            Some(k) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(k.max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
                Ok(pool.install(run))
            }
            None => Ok(run()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok((0..count).map(f).collect())
    }
}

fn reduce_cell(
    spec: &ChainSpec,
    target: &ModeTarget,
    cfg: &EnsembleConfig,
    samples: Vec<ModeSample>,
    failures: Vec<Failure>,
) -> Result<EnsembleCell> {
    let total = cfg.n_realizations;
    let failed = failures.len() as u64;
    if samples.is_empty() || failed as f64 > cfg.max_failure_fraction * total as f64 {
        return Err(Error::CellAborted {
            n: spec.n_qubits,
            w: spec.disorder_w,
            failed,
            total,
        });
    }
    let logs: Vec<f64> = samples.iter().map(|s| s.ln_gamma).collect();
    let ln_mean = shifted_mean(&logs);
    let rates: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let ln_xi: Vec<f64> = samples.iter().map(|s| s.xi_phi.ln()).collect();
    let stats = EnsembleStats {
        n_qubits: spec.n_qubits,
        disorder_w: spec.disorder_w,
        phi: spec.phi,
        gamma: spec.gamma,
        target: *target,
        n_realizations: samples.len() as u64,
        n_failed: failed,
        gamma_typ: ln_mean.exp(),
        gamma_avg: shifted_mean(&rates),
        ln_gamma_mean: ln_mean,
        ln_gamma_std: shifted_std(&logs, ln_mean),
        xi_phi_typ: shifted_mean(&ln_xi).exp(),
        master_seed: spec.master_seed,
        first_index: cfg.first_index,
        last_index: cfg.first_index + total - 1,
    };
    Ok(EnsembleCell {
        stats,
        samples: if cfg.keep_samples { samples } else { Vec::new() },
        failures,
    })
}

/// Runs every `(spec, target)` cell. Output order is spec-major, target-minor.
pub fn run_ensemble(specs: &[ChainSpec], targets: &[ModeTarget], cfg: &EnsembleConfig) -> Result<Vec<EnsembleCell>> {
    if cfg.n_realizations == 0 {
        return Err(Error::Config("n_realizations must be at least 1".into()));
    }
    if targets.is_empty() {
        return Err(Error::Config("no mode targets".into()));
    }
    for spec in specs {
        spec.validate()?;
    }
    for t in targets {
        t.validate()?;
    }
    let per_cell = cfg.n_realizations as usize;
    let results = map_indexed(specs.len() * per_cell, cfg.workers, |item| {
        let spec = &specs[item / per_cell];
        let index = cfg.first_index + (item % per_cell) as u64;
        realization_samples(spec, index, targets, cfg.solver)
    })?;

    let mut cells = Vec::with_capacity(specs.len() * targets.len());
    for (s, spec) in specs.iter().enumerate() {
        let chunk = &results[s * per_cell..(s + 1) * per_cell];
        for (t, target) in targets.iter().enumerate() {
            let mut samples = Vec::with_capacity(per_cell);
            let mut failures = Vec::new();
            for (offset, r) in chunk.iter().enumerate() {
                match r {
                    Ok(per_target) => samples.push(per_target[t]),
                    Err(e) => failures.push(Failure {
                        realization_index: cfg.first_index + offset as u64,
                        reason: e.to_string(),
                    }),
                }
            }
            cells.push(reduce_cell(spec, target, cfg, samples, failures)?);
        }
    }
    Ok(cells)
}

/// Cartesian `(N, W)` grid of chain specs sharing `phi`, `gamma` and seed.
pub fn spec_grid(sizes: &[usize], disorders: &[f64], phi: f64, gamma: f64, master_seed: u64) -> Result<Vec<ChainSpec>> {
    let mut specs = Vec::with_capacity(sizes.len() * disorders.len());
    for &w in disorders {
        for &n in sizes {
            specs.push(ChainSpec::new(n, phi, w, gamma, master_seed)?);
        }
    }
    Ok(specs)
}
