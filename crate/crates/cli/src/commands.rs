use std::path::Path;

use serde::{Deserialize, Serialize};
use subradiance::ensemble::{run_ensemble, EnsembleConfig, ModeSample};
use subradiance::io::{read_json, write_csv_with_meta, write_json, write_json_with_meta, EnsembleRecord, Metadata};
use subradiance::model::{ChainSpec, Realization};
use subradiance::spectrum::realization_modes;

use crate::analyze::Summary;
use crate::{CliError, Run};

pub fn metadata(run: &Run, command: &str) -> Metadata {
    let mut meta = Metadata::new(command, &run.config.hash(), run.config.ensemble.master_seed);
    meta.config = Some(serde_json::to_value(run.config.resolved()).expect("config serializes"));
    meta
}

/// One eigenmode of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub realization: u64,
    pub mode: usize,
    pub omega_re: f64,
    pub omega_im: f64,
    pub gamma: f64,
    pub ln_gamma: f64,
    pub k_est_over_pi: f64,
    pub class: String,
    pub first_population: f64,
    pub last_population: f64,
    pub xi_phi: f64,
    pub x0: f64,
}

pub fn spectrum(run: &Run) -> Result<(), CliError> {
    let c = &run.config;
    let s = &c.spectrum;
    let spec = ChainSpec::new(s.n_qubits, c.phi(), s.disorder_w, c.model.gamma, c.ensemble.master_seed)?;
    let mut rows = Vec::new();
    for index in s.first_index..s.first_index + s.realizations {
        let realization = Realization::draw(&spec, index)?;
        let modes = realization_modes(&realization, c.model.gamma, c.phi(), c.ensemble.solver)?;
        for (i, m) in modes.iter().enumerate() {
            let sample = ModeSample::from_mode(m, index);
            rows.push(SpectrumRow {
                realization: index,
                mode: i,
                omega_re: m.omega.re,
                omega_im: m.omega.im,
                gamma: m.gamma,
                ln_gamma: m.ln_gamma,
                k_est_over_pi: m.k_est / std::f64::consts::PI,
                class: m.mode_class.as_str().into(),
                first_population: sample.first_population,
                last_population: sample.last_population,
                xi_phi: sample.xi_phi,
                x0: sample.center_argmax * c.model.d,
            });
        }
    }
    let path = run.out.join("spectrum.csv");
    write_csv_with_meta(&path, &rows, &metadata(run, "spectrum"))?;
    eprintln!("spectrum: {} modes -> {}", rows.len(), path.display());
    Ok(())
}

/// Selected mode of one realization in a sampled cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub target: String,
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub realization: u64,
    pub omega_re: f64,
    pub gamma: f64,
    pub ln_gamma: f64,
    pub k_est_over_pi: f64,
    pub class: String,
    pub first_population: f64,
    pub last_population: f64,
    pub xi_phi: f64,
    pub center_argmax: f64,
    pub center_centroid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub target: String,
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub realization: u64,
    pub reason: String,
}

pub fn ensemble(run: &Run) -> Result<(), CliError> {
    let c = &run.config;
    let targets = c.targets();
    let mut records = Vec::new();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for &w in &c.grid.disorders {
        for &n in &c.grid.sizes {
            let spec = ChainSpec::new(n, c.phi(), w, c.model.gamma, c.ensemble.master_seed)?;
            let keep = c.ensemble.sample_sizes.contains(&n) && c.ensemble.sample_disorders.contains(&w);
            let cfg = EnsembleConfig {
                n_realizations: c.ensemble.n_realizations,
                workers: Some(run.workers),
                solver: c.ensemble.solver,
                keep_samples: keep,
                max_failure_fraction: c.ensemble.max_failure_fraction,
                ..Default::default()
            };
            let cells = run_ensemble(&[spec], &targets, &cfg)?;
            let failed: usize = cells.iter().map(|cell| cell.failures.len()).sum();
            eprintln!("ensemble: N = {n}, W = {w}: done ({failed} failed realizations)");
            for cell in cells {
                let label = cell.stats.target.label();
                records.push(EnsembleRecord::from(&cell.stats));
                for s in &cell.samples {
                    samples.push(SampleRow {
                        target: label.clone(),
                        n_qubits: n,
                        disorder_w: w,
                        realization: s.realization_index,
                        omega_re: s.omega_re,
                        gamma: s.gamma,
                        ln_gamma: s.ln_gamma,
                        k_est_over_pi: s.k_est / std::f64::consts::PI,
                        class: s.mode_class.as_str().into(),
                        first_population: s.first_population,
                        last_population: s.last_population,
                        xi_phi: s.xi_phi,
                        center_argmax: s.center_argmax,
                        center_centroid: s.center_centroid,
                    });
                }
                for f in &cell.failures {
                    failures.push(FailureRow {
                        target: label.clone(),
                        n_qubits: n,
                        disorder_w: w,
                        realization: f.realization_index,
                        reason: f.reason.clone(),
                    });
                }
            }
        }
    }
    let meta = metadata(run, "ensemble");
    write_csv_with_meta(&run.out.join("ensemble.csv"), &records, &meta)?;
    write_json_with_meta(
        &run.out.join("ensemble.json"),
        &records,
        &Metadata {
            rows: records.len(),
            ..meta.clone()
        },
    )?;
    write_csv_with_meta(&run.out.join("samples.csv"), &samples, &meta)?;
    write_csv_with_meta(&run.out.join("failures.csv"), &failures, &meta)?;
    write_json(&run.out.join("config.json"), &c.resolved())?;
    eprintln!(
        "ensemble: {} cells, {} sampled modes, {} failures -> {}",
        records.len(),
        samples.len(),
        failures.len(),
        run.out.display()
    );
    Ok(())
}

pub fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Input(format!("missing input file {}", path.display())))
    }
}

pub fn report(run: &Run) -> Result<(), CliError> {
    let path = run.out.join("summary.json");
    require(&path)?;
    let summary: Summary = read_json(&path)?;
    let text = summary.render();
    std::fs::write(run.out.join("report.md"), &text)
        .map_err(|e| CliError::Input(format!("cannot write report: {e}")))?;
    print!("{text}");
    Ok(())
}
