//! Scenario description: the metal nanosphere, its Drude response, the emitter
//! set and the numerical controls, plus the canonical layouts (equatorial ring,
//! pole clusters, emitter pairs).
//!
//! Lengths are in nm with the origin at the sphere center, energies in eV.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// Drude permittivity ε(ω) = ε∞ − ωp² / (ω² + iγpω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrudeModel {
    pub eps_inf: f64,
    /// Plasma frequency ħωp (eV).
    pub omega_p: f64,
    /// Damping ħγp (eV).
    pub gamma_p: f64,
}

impl DrudeModel {
    pub fn new(eps_inf: f64, omega_p: f64, gamma_p: f64) -> Self {
        Self { eps_inf, omega_p, gamma_p }
    }

    /// Silver: ε∞ = 6, ħωp = 7.90 eV, ħγp = 51 meV.
    pub fn silver() -> Self {
        Self::new(6.0, 7.90, 0.051)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NanoSphere {
    /// Radius (nm).
    pub radius: f64,
    /// Permittivity of the host medium.
    pub eps_d: f64,
    pub metal: DrudeModel,
}

impl NanoSphere {
    /// Sphere in vacuum. The radius has no default on purpose.
    pub fn new(radius: f64, metal: DrudeModel) -> Self {
        Self { radius, eps_d: 1.0, metal }
    }

    pub fn with_host(mut self, eps_d: f64) -> Self {
        self.eps_d = eps_d;
        self
    }
}

/// A two-level emitter with transition dipole `dipole_magnitude · orientation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Emitter {
    pub position: Vector3<f64>,
    pub orientation: Vector3<f64>,
    /// Dipole magnitude in e·nm.
    pub dipole_magnitude: f64,
}

impl Emitter {
    pub fn new(position: Vector3<f64>, orientation: Vector3<f64>) -> Self {
        Self { position, orientation, dipole_magnitude: 1.0 }
    }

    pub fn dipole(&self) -> Vector3<f64> {
        self.orientation * self.dipole_magnitude
    }

    pub fn distance(&self) -> f64 {
        self.position.norm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterSet {
    pub emitters: Vec<Emitter>,
    /// Transition energy ħω0 (eV).
    pub omega0: f64,
}

impl EmitterSet {
    pub fn len(&self) -> usize {
        self.emitters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emitters.is_empty()
    }

    /// Same set with every emitter rigidly rotated about the polar (z) axis.
    pub fn rotated_about_z(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let rot = |v: &Vector3<f64>| Vector3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
        Self {
            emitters: self
                .emitters
                .iter()
                .map(|e| Emitter {
                    position: rot(&e.position),
                    orientation: rot(&e.orientation),
                    dipole_magnitude: e.dipole_magnitude,
                })
                .collect(),
            omega0: self.omega0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericalControls {
    /// Highest multipole order kept in the scattered Green function.
    pub max_multipole: usize,
    /// Half-width (eV) of the window sampled for the Lorentzian mode fits.
    pub fit_window: f64,
    /// Integrator step ceiling as a fraction of 1 / max Γ eigenvalue.
    pub time_step_factor: f64,
    pub eigen_tolerance: f64,
    /// Include the direct (free-space) emitter-emitter coupling in Γ.
    pub free_space_coupling: bool,
}

impl Default for NumericalControls {
    fn default() -> Self {
        Self {
            max_multipole: 25,
            fit_window: 3.0 * DrudeModel::silver().gamma_p,
            time_step_factor: 0.01,
            eigen_tolerance: 1e-8,
            free_space_coupling: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub sphere: NanoSphere,
    pub emitters: EmitterSet,
    pub controls: NumericalControls,
}

impl SystemConfig {
    pub fn new(sphere: NanoSphere, emitters: EmitterSet) -> Self {
        Self { sphere, emitters, controls: NumericalControls::default() }
    }

    pub fn with_controls(mut self, controls: NumericalControls) -> Self {
        self.controls = controls;
        self
    }

    pub fn n_emitters(&self) -> usize {
        self.emitters.len()
    }

    pub fn omega0(&self) -> f64 {
        self.emitters.omega0
    }

    /// Returns `Err` listing every violation when [`validate`] is not clean.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Geometry(violations.join("; ")))
        }
    }
}

/// How dipoles are oriented relative to the layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationMode {
    /// Along the outward surface normal.
    Radial,
    /// Normal to the plane of the layout circle. For the equatorial ring this is
    /// the polar axis, i.e. tangent to the dipolar LSP field lines.
    Azimuthal,
    /// Tangent to the layout circle.
    Tangential,
}

fn check_spacing(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter { name: "h", reason: format!("separation must be positive, got {h}") })
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Parameter { name: "n_emitters", reason: "at least one emitter is required".into() })
    } else {
        Ok(())
    }
}

/// `n` emitters equally spaced on the equator at distance `h` from the surface.
pub fn place_ring(
    n: usize,
    h: f64,
    mode: OrientationMode,
    sphere: &NanoSphere,
    omega0: f64,
) -> Result<EmitterSet> {
    check_count(n)?;
    check_spacing(h)?;
    let r = sphere.radius + h;
    let emitters = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let (s, c) = phi.sin_cos();
            let radial = Vector3::new(c, s, 0.0);
            let orientation = match mode {
                OrientationMode::Radial => radial,
                OrientationMode::Azimuthal => Vector3::z(),
                OrientationMode::Tangential => Vector3::new(-s, c, 0.0),
            };
            Emitter::new(radial * r, orientation)
        })
        .collect();
    Ok(EmitterSet { emitters, omega0 })
}

/// Emitters clustered at the two poles: ⌈n/2⌉ north, ⌊n/2⌋ south, radially
/// oriented. When a pole holds more than one emitter they are tilted by
/// `offset_deg` from the axis and fanned out evenly in azimuth; a lone emitter
/// sits exactly on the pole.
pub fn place_polar(
    n: usize,
    h: f64,
    sphere: &NanoSphere,
    omega0: f64,
    offset_deg: f64,
) -> Result<EmitterSet> {
    check_count(n)?;
    check_spacing(h)?;
    if !(0.0..90.0).contains(&offset_deg) {
        return Err(Error::Parameter {
            name: "offset_deg",
            reason: format!("fan-out angle must lie in [0, 90), got {offset_deg}"),
        });
    }
    let r = sphere.radius + h;
    let tilt = offset_deg.to_radians();
    let north = n.div_ceil(2);
    let south = n / 2;
    let mut emitters = Vec::with_capacity(n);
    for (count, north_side) in [(north, true), (south, false)] {
        let t = if count > 1 { tilt } else { 0.0 };
        let theta = if north_side { t } else { PI - t };
        for k in 0..count {
            let phi = 2.0 * PI * k as f64 / count as f64;
            let rhat = spherical_unit(theta, phi);
            emitters.push(Emitter::new(rhat * r, rhat));
        }
    }
    Ok(EmitterSet { emitters, omega0 })
}

/// Two emitters at the same distance `h`, one on the north pole and one at
/// polar angle `theta` in the xz-plane.
pub fn place_pair(
    theta: f64,
    h: f64,
    mode: OrientationMode,
    sphere: &NanoSphere,
    omega0: f64,
) -> Result<EmitterSet> {
    check_spacing(h)?;
    let r = sphere.radius + h;
    let emitters = [0.0, theta]
        .into_iter()
        .map(|t| {
            let rhat = spherical_unit(t, 0.0);
            let orientation = match mode {
                OrientationMode::Radial => rhat,
                OrientationMode::Azimuthal => Vector3::y(),
                OrientationMode::Tangential => Vector3::new(t.cos(), 0.0, -t.sin()),
            };
            Emitter::new(rhat * r, orientation)
        })
        .collect();
    Ok(EmitterSet { emitters, omega0 })
}

fn spherical_unit(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Lists every violated invariant of `config`. An empty list means the
/// configuration is usable.
pub fn validate(config: &SystemConfig) -> Vec<String> {
    let mut out = Vec::new();
    let metal = &config.sphere.metal;
    if !(metal.eps_inf >= 1.0) {
        out.push(format!("metal.eps_inf must be >= 1 (got {})", metal.eps_inf));
    }
    if !(metal.omega_p > 0.0) {
        out.push(format!("metal.omega_p must be > 0 (got {})", metal.omega_p));
    }
    if !(metal.gamma_p > 0.0) {
        out.push(format!("metal.gamma_p must be > 0 (got {})", metal.gamma_p));
    }
    let sphere = &config.sphere;
    if !(sphere.radius > 0.0) {
        out.push(format!("sphere.radius must be > 0 (got {})", sphere.radius));
    }
    if !(sphere.eps_d >= 1.0) {
        out.push(format!("sphere.eps_d must be >= 1 (got {})", sphere.eps_d));
    }
    let set = &config.emitters;
    if set.is_empty() {
        out.push("emitters: set is empty".into());
    }
    if !(set.omega0 > 0.0) {
        out.push(format!("emitters.omega0 must be > 0 (got {})", set.omega0));
    }
    for (i, e) in set.emitters.iter().enumerate() {
        if !(e.distance() > sphere.radius) {
            out.push(format!(
                "emitter {i}: emitter inside or on sphere (|r| = {} nm, radius = {} nm)",
                e.distance(),
                sphere.radius
            ));
        }
        let norm = e.orientation.norm();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            out.push(format!("emitter {i}: orientation not normalized (|e| = {norm})"));
        }
        if !(e.dipole_magnitude > 0.0) {
            out.push(format!("emitter {i}: dipole magnitude must be > 0 (got {})", e.dipole_magnitude));
        }
    }
    let c = &config.controls;
    if c.max_multipole < 1 {
        out.push("controls.max_multipole must be >= 1".into());
    }
    for (name, value) in [
        ("fit_window", c.fit_window),
        ("time_step_factor", c.time_step_factor),
        ("eigen_tolerance", c.eigen_tolerance),
    ] {
        if !(value > 0.0) {
            out.push(format!("controls.{name} must be > 0 (got {value})"));
        }
    }
    out
}
