//! Green tensor of a dipole near a sphere: the quasi-static multipole expansion
//! of the scattered part, the retarded free-space dyadic, the Drude response
//! and the effective (source + induced) dipole.
//!
//! A projection `d_i·G(r_i, r_j)·d_j` is returned in d0²·nm⁻¹ with the
//! convention `E = (ω²/ε₀c²) G·d`, so that a single emitter in the host has
//! `Im[ê·G₀·ê] = k/6π`.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DrudeModel, Emitter, NanoSphere, NumericalControls};
use crate::units::{wavenumber, FINE_STRUCTURE, HBAR_C};

/// Which multipole orders of the scattered field are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    /// Orders `1..=max_multipole`.
    All,
    /// A single order.
    Single(usize),
}

impl ModeSelection {
    pub fn orders(self, controls: &NumericalControls) -> Result<std::ops::RangeInclusive<usize>> {
        match self {
            ModeSelection::All => Ok(1..=controls.max_multipole),
            ModeSelection::Single(n) if n >= 1 && n <= controls.max_multipole => Ok(n..=n),
            ModeSelection::Single(n) => Err(Error::ModeOutOfRange(n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GreenPart {
    Scattered,
    Free,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenProjection {
    pub value: Complex64,
    pub mode: ModeSelection,
    pub part: GreenPart,
}

/// ε_m(ω) = ε∞ − ωp² / (ω² + iγpω).
pub fn drude_permittivity(metal: &DrudeModel, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(Error::Parameter { name: "omega", reason: format!("frequency must be positive, got {omega}") });
    }
    let denom = Complex64::new(omega * omega, metal.gamma_p * omega);
    Ok(metal.eps_inf - metal.omega_p * metal.omega_p / denom)
}

/// Quasi-static multipole response Δ_n(ω) = n(ε_m − ε_d) / (nε_m + (n+1)ε_d).
///
/// Fails when the denominator vanishes, which only happens for a lossless
/// metal sitting exactly on the resonance.
pub fn multipole_coefficient(n: usize, sphere: &NanoSphere, omega: f64) -> Result<Complex64> {
    if n < 1 {
        return Err(Error::ModeOutOfRange(n));
    }
    let eps_m = drude_permittivity(&sphere.metal, omega)?;
    let nf = n as f64;
    let denom = nf * eps_m + (nf + 1.0) * sphere.eps_d;
    if denom.norm() <= 1e-12 * (nf * eps_m.norm() + (nf + 1.0) * sphere.eps_d) {
        return Err(Error::Parameter {
            name: "omega",
            reason: format!("{omega} eV lies on the lossless resonance of order {n}"),
        });
    }
    Ok(nf * (eps_m - sphere.eps_d) / denom)
}

/// Legendre polynomial P_n(x) with its first and second derivatives.
pub fn legendre(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    if n == 0 {
        return (p0, d0, s0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        (p0, p1) = (p1, p2);
        (d0, d1) = (d1, d2);
        (s0, s1) = (s1, s2);
    }
    (p1, d1, s1)
}

/// Geometric factor of order `n`:
/// `(d_i·∇_i)(d_j·∇_j) [R^{2n+1} P_n(r̂_i·r̂_j) / (r_i r_j)^{n+1}]`.
///
/// Real and symmetric under exchange of the two emitters. Multiplying by
/// Δ_n/(4πk²) gives the order-n scattered projection.
pub fn multipole_kernel(n: usize, radius: f64, ri: &Vector3<f64>, di: &Vector3<f64>, rj: &Vector3<f64>, dj: &Vector3<f64>) -> f64 {
    let rho = ri.norm();
    let sig = rj.norm();
    let rh = ri / rho;
    let rph = rj / sig;
    let x = rh.dot(&rph).clamp(-1.0, 1.0);
    let (p, dp, ddp) = legendre(n, x);
    let nf = n as f64;
    let a = di.dot(&rph);
    let b = di.dot(&rh);
    let c = dj.dot(&rh);
    let d = dj.dot(&rph);
    let q = dp * (a - x * b) - (nf + 1.0) * p * b;
    let s = -(nf + 1.0) * d * q + (ddp * (a - x * b) - (nf + 2.0) * dp * b) * (c - x * d) + dp * (di.dot(dj) - a * d);
    let ratio = radius * radius / (rho * sig);
    ratio.powi(n as i32) * radius / (rho * sig).powi(2) * s
}

fn outside(e: &Emitter, sphere: &NanoSphere) -> Result<()> {
    if e.distance() > sphere.radius {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "point at |r| = {} nm is inside or on the sphere of radius {} nm",
            e.distance(),
            sphere.radius
        )))
    }
}

/// Host-medium wavenumber k = √ε_d·ω/ħc (nm⁻¹).
pub fn host_wavenumber(sphere: &NanoSphere, omega: f64) -> f64 {
    sphere.eps_d.sqrt() * wavenumber(omega)
}

/// d_i·G_sc(r_i, r_j, ω)·d_j summed over the selected multipole orders.
pub fn scattered_projection(
    ei: &Emitter,
    ej: &Emitter,
    sphere: &NanoSphere,
    omega: f64,
    mode: ModeSelection,
    controls: &NumericalControls,
) -> Result<GreenProjection> {
    outside(ei, sphere)?;
    outside(ej, sphere)?;
    let orders = mode.orders(controls)?;
    let value = scattered_sum(ei, ej, sphere, omega, orders)?;
    Ok(GreenProjection { value, mode, part: GreenPart::Scattered })
}

fn scattered_sum(
    ei: &Emitter,
    ej: &Emitter,
    sphere: &NanoSphere,
    omega: f64,
    orders: std::ops::RangeInclusive<usize>,
) -> Result<Complex64> {
    let k = host_wavenumber(sphere, omega);
    let di = ei.dipole();
    let dj = ej.dipole();
    let mut sum = Complex64::new(0.0, 0.0);
    for n in orders {
        let f = multipole_kernel(n, sphere.radius, &ei.position, &di, &ej.position, &dj);
        sum += multipole_coefficient(n, sphere, omega)? * f;
    }
    Ok(sum / (4.0 * PI * k * k))
}

/// d_i·G₀(r_i, r_j, ω)·d_j for the homogeneous host. At coincident points
/// only the imaginary part `i k/6π (d_i·d_j)` is kept.
pub fn free_projection(ei: &Emitter, ej: &Emitter, omega: f64, eps_d: f64) -> GreenProjection {
    let k = eps_d.sqrt() * wavenumber(omega);
    let di = ei.dipole();
    let dj = ej.dipole();
    let sep = ej.position - ei.position;
    let r = sep.norm();
    let scale = ei.position.norm().max(ej.position.norm()).max(1.0);
    let value = if r <= 1e-12 * scale {
        Complex64::new(0.0, k / (6.0 * PI) * di.dot(&dj))
    } else {
        let u = sep / r;
        let kr = k * r;
        let phase = Complex64::new(0.0, kr).exp() / (4.0 * PI * r);
        let a = Complex64::new(1.0 - 1.0 / (kr * kr), 1.0 / kr);
        let b = Complex64::new(-1.0 + 3.0 / (kr * kr), -3.0 / kr);
        phase * (a * di.dot(&dj) + b * di.dot(&u) * dj.dot(&u))
    };
    GreenProjection { value, mode: ModeSelection::All, part: GreenPart::Free }
}

/// Scattered plus free projection.
pub fn total_projection(
    ei: &Emitter,
    ej: &Emitter,
    sphere: &NanoSphere,
    omega: f64,
    mode: ModeSelection,
    controls: &NumericalControls,
) -> Result<GreenProjection> {
    let sc = scattered_projection(ei, ej, sphere, omega, mode, controls)?;
    let free = free_projection(ei, ej, omega, sphere.eps_d);
    Ok(GreenProjection { value: sc.value + free.value, mode, part: GreenPart::Total })
}

/// Decay rate (eV) corresponding to a projection: Γ = (2ω²/ε₀c²)·Im[d·G·d].
pub fn rate_from_projection(omega: f64, im_projection: f64) -> f64 {
    8.0 * PI * FINE_STRUCTURE * omega * omega / HBAR_C * im_projection
}

/// Source dipole plus the dipole it induces in the sphere:
/// d̃ = d + R³Δ₁(ω)(3(d·r̂)r̂ − d)/r³.
pub fn effective_dipole(e: &Emitter, sphere: &NanoSphere, omega: f64) -> Result<Vector3<Complex64>> {
    outside(e, sphere)?;
    let d = e.dipole();
    let r = e.distance();
    let rh = e.position / r;
    let image = 3.0 * d.dot(&rh) * rh - d;
    let delta1 = multipole_coefficient(1, sphere, omega)?;
    let factor = delta1 * (sphere.radius / r).powi(3);
    Ok(Vector3::new(
        d.x + factor * image.x,
        d.y + factor * image.y,
        d.z + factor * image.z,
    ))
}

/// One line of the projection spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub omega: f64,
    /// Multipole order, 0 for the sum over all orders.
    pub mode: usize,
    pub value: Complex64,
}

/// Scattered projection between two emitters on a frequency grid, per order
/// and summed.
pub fn projection_spectrum(
    ei: &Emitter,
    ej: &Emitter,
    sphere: &NanoSphere,
    omegas: &[f64],
    controls: &NumericalControls,
) -> Result<Vec<SpectrumPoint>> {
    let mut out = Vec::with_capacity(omegas.len() * (controls.max_multipole + 1));
    for &omega in omegas {
        let mut total = Complex64::new(0.0, 0.0);
        for n in 1..=controls.max_multipole {
            let value = scattered_projection(ei, ej, sphere, omega, ModeSelection::Single(n), controls)?.value;
            total += value;
            out.push(SpectrumPoint { omega, mode: n, value });
        }
        out.push(SpectrumPoint { omega, mode: 0, value: total });
    }
    Ok(out)
}

pub fn write_spectrum_csv<W: Write>(points: &[SpectrumPoint], mut w: W) -> io::Result<()> {
    writeln!(w, "omega_eV,mode,re_projection,im_projection")?;
    for p in points {
        let mode = if p.mode == 0 { "all".to_string() } else { p.mode.to_string() };
        writeln!(w, "{},{},{:e},{:e}", p.omega, mode, p.value.re, p.value.im)?;
    }
    Ok(())
}
