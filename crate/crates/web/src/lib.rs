//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`. The plain functions behind them
//! are ordinary Rust and are tested natively.

use std::f64::consts::PI;

use subradiance::ensemble::{run_ensemble, EnsembleConfig};
use subradiance::model::{ChainSpec, Realization};
use subradiance::spectrum::{realization_modes, select_target_mode, ModeTarget, Solver};
use wasm_bindgen::prelude::*;

fn target(k_over_pi: f64) -> ModeTarget {
    if k_over_pi > 0.0 {
        ModeTarget::fixed_k(k_over_pi * PI)
    } else {
        ModeTarget::band_edge_low()
    }
}

fn spec(n: usize, phi_over_pi: f64, w: f64, seed: u64) -> Result<ChainSpec, String> {
    ChainSpec::new(n, phi_over_pi * PI, w, 1.0, seed).map_err(|e| e.to_string())
}

/// `[Omega_0, ln Gamma_0, Omega_1, ln Gamma_1, ...]` for one realization.
pub fn spectrum_points(n: usize, phi_over_pi: f64, w: f64, seed: u64, realization: u64) -> Result<Vec<f64>, String> {
    let s = spec(n, phi_over_pi, w, seed)?;
    let r = Realization::draw(&s, realization).map_err(|e| e.to_string())?;
    let modes = realization_modes(&r, 1.0, s.phi, Solver::Tridiagonal).map_err(|e| e.to_string())?;
    Ok(modes.iter().flat_map(|m| [m.omega.re, m.ln_gamma]).collect())
}

/// Site populations `|phi_j|^2` of the targeted mode; `k_over_pi <= 0` picks
/// the lower band edge.
pub fn mode_populations(n: usize, phi_over_pi: f64, w: f64, seed: u64, k_over_pi: f64) -> Result<Vec<f64>, String> {
    let s = spec(n, phi_over_pi, w, seed)?;
    let r = Realization::draw(&s, 0).map_err(|e| e.to_string())?;
    let modes = realization_modes(&r, 1.0, s.phi, Solver::Tridiagonal).map_err(|e| e.to_string())?;
    let m = select_target_mode(&modes, &target(k_over_pi), s.phi, 1.0).map_err(|e| e.to_string())?;
    Ok(m.vector.iter().map(|z| z.norm_sqr()).collect())
}

/// `[N, ln Gamma_typ(N), ...]` over `sizes` for the targeted mode.
pub fn typical_scaling(
    sizes: &[usize],
    phi_over_pi: f64,
    w: f64,
    realizations: u64,
    seed: u64,
    k_over_pi: f64,
) -> Result<Vec<f64>, String> {
    let specs = sizes
        .iter()
        .map(|&n| spec(n, phi_over_pi, w, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = EnsembleConfig {
        n_realizations: realizations,
        workers: Some(1),
        ..Default::default()
    };
    let cells = run_ensemble(&specs, &[target(k_over_pi)], &cfg).map_err(|e| e.to_string())?;
    Ok(cells
        .iter()
        .flat_map(|c| [c.stats.n_qubits as f64, c.stats.ln_gamma_mean])
        .collect())
}

#[wasm_bindgen]
pub fn spectrum(n: usize, phi_over_pi: f64, w: f64, seed: u64, realization: u64) -> Result<Vec<f64>, JsError> {
    spectrum_points(n, phi_over_pi, w, seed, realization).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn populations(n: usize, phi_over_pi: f64, w: f64, seed: u64, k_over_pi: f64) -> Result<Vec<f64>, JsError> {
    mode_populations(n, phi_over_pi, w, seed, k_over_pi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scaling(
    sizes: Vec<u32>,
    phi_over_pi: f64,
    w: f64,
    realizations: u32,
    seed: u64,
    k_over_pi: f64,
) -> Result<Vec<f64>, JsError> {
    let sizes: Vec<usize> = sizes.into_iter().map(|n| n as usize).collect();
    typical_scaling(&sizes, phi_over_pi, w, realizations as u64, seed, k_over_pi).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_spectrum() {
        let p = spectrum_points(2, 0.5, 0.0, 0, 0).unwrap();
        assert_eq!(p.len(), 4);
        let mut omegas = [p[0], p[2]];
        omegas.sort_by(f64::total_cmp);
        assert!((omegas[0] + 0.5).abs() < 1e-12 && (omegas[1] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.5f64.ln()).abs() < 1e-12 && (p[3] - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn populations_are_normalized() {
        for k in [0.0, 0.75] {
            let p = mode_populations(40, 0.5, 0.2, 3, k).unwrap();
            assert_eq!(p.len(), 40);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn band_edge_rate_drops_with_size() {
        let s = typical_scaling(&[10, 20, 40], 0.5, 0.0, 1, 0, 0.0).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s[1] > s[3] && s[3] > s[5]);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(spectrum_points(0, 0.5, 0.0, 0, 0).is_err());
        assert!(mode_populations(10, 0.5, -1.0, 0, 0.0).is_err());
    }
}
