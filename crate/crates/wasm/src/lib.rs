//! Browser bindings: collective rates, the pair correlation curve and the
//! emission burst of a small emitter cluster around a silver sphere.

use plasmodicke_core::geometry::{
    place_pair, place_polar, place_ring, DrudeModel, EmitterSet, NanoSphere, NumericalControls, OrientationMode,
    SystemConfig,
};
use plasmodicke_core::lindblad::{ideal_cascade, simulate, EvolveOptions};
use plasmodicke_core::modes::extract_modes;
use plasmodicke_core::rates::{brightest_fixed_orientation, dynamics_rates, gamma_matrix_green};
use wasm_bindgen::prelude::*;

/// Largest cluster the demo will evolve.
pub const MAX_DEMO_EMITTERS: usize = 6;

fn orientation(name: &str) -> Result<OrientationMode, String> {
    match name {
        "radial" => Ok(OrientationMode::Radial),
        "azimuthal" => Ok(OrientationMode::Azimuthal),
        "tangential" => Ok(OrientationMode::Tangential),
        other => Err(format!("unknown orientation `{other}`")),
    }
}

/// Builds a configuration for a `ring`, `poles` or `pair` layout. For the
/// pair, `count` is ignored and `theta_deg` is the angular separation.
pub fn build_config(
    layout: &str,
    count: usize,
    radius_nm: f64,
    h_nm: f64,
    orientation_name: &str,
    omega0_ev: f64,
    theta_deg: f64,
) -> Result<SystemConfig, String> {
    let sphere = NanoSphere::new(radius_nm, DrudeModel::silver());
    let mode = orientation(orientation_name)?;
    let emitters: EmitterSet = match layout {
        "ring" => place_ring(count, h_nm, mode, &sphere, omega0_ev),
        "poles" => place_polar(count, h_nm, &sphere, omega0_ev, 1.0),
        "pair" => place_pair(theta_deg.to_radians(), h_nm, mode, &sphere, omega0_ev),
        other => return Err(format!("unknown layout `{other}`")),
    }
    .map_err(|e| e.to_string())?;
    let config = SystemConfig::new(sphere, emitters).with_controls(NumericalControls::default());
    config.ensure_valid().map_err(|e| e.to_string())?;
    Ok(config)
}

/// [Γ1/Γ0, largest Γ eigenvalue / Γ1, Γ12/Γ1].
pub fn rate_summary(config: &SystemConfig) -> Result<Vec<f64>, String> {
    let rates = gamma_matrix_green(config).map_err(|e| e.to_string())?;
    let g1 = rates.gamma1();
    let g12 = if rates.n_emitters() > 1 { rates.gamma[(0, 1)] / g1 } else { 0.0 };
    Ok(vec![g1, brightest_fixed_orientation(&rates) / g1, g12])
}

/// Γ12/Γ1 of a pair for `steps` separations spanning 0..180 degrees.
pub fn pair_curve_values(
    radius_nm: f64,
    h_nm: f64,
    orientation_name: &str,
    omega0_ev: f64,
    steps: usize,
) -> Result<Vec<f64>, String> {
    if steps < 2 {
        return Err("at least two separations are required".into());
    }
    (0..steps)
        .map(|i| {
            let theta = 180.0 * i as f64 / (steps - 1) as f64;
            let config = build_config("pair", 2, radius_nm, h_nm, orientation_name, omega0_ev, theta)?;
            let rates = gamma_matrix_green(&config).map_err(|e| e.to_string())?;
            Ok(rates.gamma[(0, 1)] / rates.gamma1())
        })
        .collect()
}

/// Emission rate from the fully excited state, flattened as four blocks of
/// `samples` values: t·Γ1, W/Γ1, ideal Dicke W/Γ1, independent-emitter W/Γ1.
pub fn emission_values(config: &SystemConfig, t_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if config.n_emitters() > MAX_DEMO_EMITTERS {
        return Err(format!("the demo evolves at most {MAX_DEMO_EMITTERS} emitters"));
    }
    if samples < 2 || t_max.is_nan() || t_max <= 0.0 {
        return Err("need a positive duration and at least two samples".into());
    }
    let grid: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let modes = extract_modes(config).map_err(|e| e.to_string())?;
    let rates = dynamics_rates(config, &modes).map_err(|e| e.to_string())?;
    let opts = EvolveOptions::default();
    let computed = simulate(&rates, &grid, &opts).map_err(|e| e.to_string())?;
    let incoherent = simulate(&rates.incoherent(), &grid, &opts).map_err(|e| e.to_string())?;
    let ideal = ideal_cascade(config.n_emitters(), 1.0, &grid).map_err(|e| e.to_string())?;
    let mut out = grid;
    out.extend_from_slice(&computed.trace.w);
    out.extend_from_slice(&ideal.w);
    out.extend_from_slice(&incoherent.trace.w);
    Ok(out)
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn rates(
    layout: &str,
    count: usize,
    radius_nm: f64,
    h_nm: f64,
    orientation: &str,
    omega0_ev: f64,
    theta_deg: f64,
) -> Result<Vec<f64>, JsError> {
    let config = build_config(layout, count, radius_nm, h_nm, orientation, omega0_ev, theta_deg).map_err(js)?;
    rate_summary(&config).map_err(js)
}

#[wasm_bindgen]
pub fn pair_curve(radius_nm: f64, h_nm: f64, orientation: &str, omega0_ev: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    pair_curve_values(radius_nm, h_nm, orientation, omega0_ev, steps).map_err(js)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn emission(
    layout: &str,
    count: usize,
    radius_nm: f64,
    h_nm: f64,
    orientation: &str,
    omega0_ev: f64,
    theta_deg: f64,
    t_max: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    let config = build_config(layout, count, radius_nm, h_nm, orientation, omega0_ev, theta_deg).map_err(js)?;
    emission_values(&config, t_max, samples).map_err(js)
}
