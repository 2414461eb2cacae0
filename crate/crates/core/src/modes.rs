//! Lorentzian pseudo-modes of the sphere.
//!
//! Each multipole order n acts as a lossy bosonic mode with resonance ω_n and
//! width γ_n. An emitter couples to it with strength g_n (eV) and two emitters
//! see it with overlap μ_n. Overlapping couplings are orthonormalized by a
//! Löwdin transform.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Emitter, NanoSphere, SystemConfig};
use crate::greens::{multipole_coefficient, multipole_kernel, rate_from_projection, host_wavenumber, drude_permittivity};
use crate::parallel::map_indices;

/// Fits with a relative L2 residual at or above this are flagged.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;
/// Samples across the fit window.
pub const FIT_SAMPLES: usize = 121;
/// Weak-coupling ratios at or above this trigger a warning.
pub const WEAK_COUPLING_WARNING: f64 = 0.3;
/// Relative threshold below which Löwdin eigenvalues count as zero.
pub const LOWDIN_DROP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LSPMode {
    pub order: usize,
    /// Resonance (eV), the centre of the fitted Lorentzian.
    pub omega_n: f64,
    /// Full width at half maximum (eV).
    pub gamma_n: f64,
    /// Fitted `Im Δ_n(ω) ≈ amplitude / ((ω − ω_n)² + γ_n²/4)`.
    pub amplitude: f64,
    /// Relative L2 misfit over the fit window.
    pub fit_residual: f64,
    /// Root of Re[nε_m + (n+1)ε_d], used to centre the fit window.
    pub omega_root: f64,
}

impl LSPMode {
    pub fn flagged(&self) -> bool {
        !(self.fit_residual < FIT_RESIDUAL_LIMIT)
    }

    /// Detuning δ_n = ω_n − ω₀.
    pub fn detuning(&self, omega0: f64) -> f64 {
        self.omega_n - omega0
    }

    /// Lorentzian line shape of the fit.
    pub fn lorentzian(&self, omega: f64) -> f64 {
        let x = omega - self.omega_n;
        self.amplitude / (x * x + 0.25 * self.gamma_n * self.gamma_n)
    }
}

/// Couplings of every emitter of a set to one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub mode: LSPMode,
    /// g_n^(j) in eV.
    pub g: Vec<f64>,
}

impl CouplingSet {
    /// |κ_n(ω)|² = (γ_n/2π) g² / ((ω − ω_n)² + (γ_n/2)²) for emitter `j`.
    pub fn kappa_sq(&self, j: usize, omega: f64) -> f64 {
        let gam = self.mode.gamma_n;
        let x = omega - self.mode.omega_n;
        gam / (2.0 * std::f64::consts::PI) * self.g[j] * self.g[j] / (x * x + 0.25 * gam * gam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub order: usize,
    pub entries: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowdinTransform {
    pub order: usize,
    /// λ_j, with numerically zero values clamped to 0.
    pub eigenvalues: DVector<f64>,
    /// Orthogonal T with M = T diag(λ) Tᵀ.
    pub transform: DMatrix<f64>,
    /// g^(ij) = g_i λ_j^{1/2} T_ij.
    pub cross_couplings: DMatrix<f64>,
    /// Number of eigenvalues kept.
    pub n_independent: usize,
}

impl LowdinTransform {
    /// Σ_i g^(ji) g^(ki), which equals g_j g_k μ_jk.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.cross_couplings * self.cross_couplings.transpose()
    }
}

/// One order of the mode decomposition for a whole emitter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    pub couplings: CouplingSet,
    pub overlap: OverlapMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LSPModeSet {
    pub modes: Vec<ModeData>,
    pub omega0: f64,
}

impl LSPModeSet {
    pub fn coupling_sets(&self) -> Vec<CouplingSet> {
        self.modes.iter().map(|m| m.couplings.clone()).collect()
    }

    pub fn flagged_orders(&self) -> Vec<usize> {
        self.modes.iter().filter(|m| m.couplings.mode.flagged()).map(|m| m.couplings.mode.order).collect()
    }

    pub fn weak_coupling_ratio(&self) -> f64 {
        weak_coupling_ratio(self.omega0, &self.coupling_sets())
    }
}

fn bisect_root(n: usize, sphere: &NanoSphere) -> Result<f64> {
    let nf = n as f64;
    let f = |w: f64| -> Result<f64> {
        Ok((nf * drude_permittivity(&sphere.metal, w)? + (nf + 1.0) * sphere.eps_d).re)
    };
    let mut lo = 1e-6 * sphere.metal.omega_p;
    let mut hi = sphere.metal.omega_p;
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoResonance(n));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fits `y = a / ((ω − c)² + γ²/4)` by weighted linear least squares on 1/y.
/// Returns (c, γ, a, residual).
fn fit_lorentzian(omegas: &[f64], ys: &[f64], shift: f64) -> Option<(f64, f64, f64, f64)> {
    let m = omegas.len();
    let mut a = DMatrix::<f64>::zeros(m, 3);
    let mut b = DVector::<f64>::zeros(m);
    for (i, (&w, &y)) in omegas.iter().zip(ys).enumerate() {
        if !(y > 0.0) {
            return None;
        }
        let x = w - shift;
        // rows scaled by y: minimizes Σ y²(1/y − p(x))²
        a[(i, 0)] = y;
        a[(i, 1)] = y * x;
        a[(i, 2)] = y * x * x;
        b[i] = 1.0;
    }
    let p = a.svd(true, true).solve(&b, 1e-14).ok()?;
    if !(p[2] > 0.0) {
        return None;
    }
    let c = -p[1] / (2.0 * p[2]);
    let quarter_g2 = p[0] / p[2] - c * c;
    if !(quarter_g2 > 0.0) {
        return None;
    }
    let gamma = 2.0 * quarter_g2.sqrt();
    let amp = 1.0 / p[2];
    let (mut num, mut den) = (0.0, 0.0);
    for (&w, &y) in omegas.iter().zip(ys) {
        let x = w - shift - c;
        let fit = amp / (x * x + quarter_g2);
        num += (fit - y) * (fit - y);
        den += y * y;
    }
    Some((c + shift, gamma, amp, (num / den).sqrt()))
}

/// Resonance and width of multipole order `n` from a Lorentzian fit of
/// Im Δ_n(ω) over `root ± fit_window`.
pub fn find_resonance(n: usize, sphere: &NanoSphere, fit_window: f64) -> Result<LSPMode> {
    if n < 1 {
        return Err(Error::ModeOutOfRange(n));
    }
    if !(fit_window > 0.0) {
        return Err(Error::Parameter { name: "fit_window", reason: format!("must be positive, got {fit_window}") });
    }
    let root = bisect_root(n, sphere)?;
    let lo = (root - fit_window).max(1e-3 * root);
    let hi = root + fit_window;
    let omegas: Vec<f64> = (0..FIT_SAMPLES).map(|i| lo + (hi - lo) * i as f64 / (FIT_SAMPLES - 1) as f64).collect();
    let ys = omegas
        .iter()
        .map(|&w| multipole_coefficient(n, sphere, w).map(|d| d.im))
        .collect::<Result<Vec<_>>>()?;
    let (omega_n, gamma_n, amplitude, fit_residual) =
        fit_lorentzian(&omegas, &ys, root).ok_or(Error::NoResonance(n))?;
    if !(omega_n > 0.0 && gamma_n > 0.0) {
        return Err(Error::NoResonance(n));
    }
    Ok(LSPMode { order: n, omega_n, gamma_n, amplitude, fit_residual, omega_root: root })
}

/// Single-order scattered rate (eV) of an emitter evaluated at ω.
fn mode_rate(order: usize, ei: &Emitter, ej: &Emitter, sphere: &NanoSphere, omega: f64) -> Result<f64> {
    let k = host_wavenumber(sphere, omega);
    let f = multipole_kernel(order, sphere.radius, &ei.position, &ei.dipole(), &ej.position, &ej.dipole());
    let im = multipole_coefficient(order, sphere, omega)?.im * f / (4.0 * std::f64::consts::PI * k * k);
    Ok(rate_from_projection(omega, im))
}

fn check_outside(e: &Emitter, sphere: &NanoSphere) -> Result<()> {
    if e.distance() > sphere.radius {
        Ok(())
    } else {
        Err(Error::Geometry(format!("emitter at |r| = {} nm is not outside the sphere", e.distance())))
    }
}

/// g = √(γ_n Γ_n(ω_n)/4) with Γ_n the order-n decay rate of the emitter,
/// so that the Lorentzian peak rate 4g²/γ_n equals Γ_n(ω_n).
pub fn coupling_strength(mode: &LSPMode, e: &Emitter, sphere: &NanoSphere) -> Result<f64> {
    check_outside(e, sphere)?;
    let rate = mode_rate(mode.order, e, e, sphere, mode.omega_n)?;
    Ok((0.25 * mode.gamma_n * rate.max(0.0)).sqrt())
}

fn self_kernel(order: usize, e: &Emitter, sphere: &NanoSphere) -> f64 {
    multipole_kernel(order, sphere.radius, &e.position, &e.dipole(), &e.position, &e.dipole())
}

/// Scale below which a self kernel counts as vanishing.
fn null_threshold(order: usize, e: &Emitter, sphere: &NanoSphere) -> f64 {
    let rhat = e.position / e.distance();
    let d = e.dipole_magnitude;
    1e-12 * d * d * multipole_kernel(order, sphere.radius, &e.position, &rhat, &e.position, &rhat)
}

/// μ_n^(ij), the sign-carrying normalized cross projection of order n.
pub fn overlap(mode: &LSPMode, ei: &Emitter, ej: &Emitter, sphere: &NanoSphere) -> Result<f64> {
    check_outside(ei, sphere)?;
    check_outside(ej, sphere)?;
    let n = mode.order;
    let fii = self_kernel(n, ei, sphere);
    let fjj = self_kernel(n, ej, sphere);
    if !(fii > null_threshold(n, ei, sphere)) {
        return Err(Error::VanishingCoupling { emitter: 0, order: n });
    }
    if !(fjj > null_threshold(n, ej, sphere)) {
        return Err(Error::VanishingCoupling { emitter: 1, order: n });
    }
    let fij = multipole_kernel(n, sphere.radius, &ei.position, &ei.dipole(), &ej.position, &ej.dipole());
    Ok((fij / (fii * fjj).sqrt()).clamp(-1.0, 1.0))
}

pub fn overlap_matrix(mode: &LSPMode, emitters: &[Emitter], sphere: &NanoSphere) -> Result<OverlapMatrix> {
    let n = emitters.len();
    let mut m = DMatrix::<f64>::identity(n, n);
    for (j, ej) in emitters.iter().enumerate() {
        let fjj = self_kernel(mode.order, ej, sphere);
        if !(fjj > null_threshold(mode.order, ej, sphere)) {
            return Err(Error::VanishingCoupling { emitter: j, order: mode.order });
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mu = overlap(mode, &emitters[j], &emitters[k], sphere)?;
            m[(j, k)] = mu;
            m[(k, j)] = mu;
        }
    }
    Ok(OverlapMatrix { order: mode.order, entries: m })
}

/// Löwdin orthonormalization of the overlapping couplings of one order.
pub fn lowdin(overlaps: &OverlapMatrix, couplings: &CouplingSet) -> Result<LowdinTransform> {
    let n = overlaps.entries.nrows();
    if couplings.g.len() != n || overlaps.entries.ncols() != n {
        return Err(Error::Dimension(format!(
            "overlap matrix is {}x{} but {} couplings were given",
            overlaps.entries.nrows(),
            overlaps.entries.ncols(),
            couplings.g.len()
        )));
    }
    let eig = SymmetricEigen::new(overlaps.entries.clone());
    let max = eig.eigenvalues.max().max(0.0);
    let mut lambda = eig.eigenvalues.clone();
    let mut kept = 0;
    for l in lambda.iter_mut() {
        if *l < -1e-10 {
            return Err(Error::NotPositiveSemidefinite { order: overlaps.order, eigenvalue: *l });
        }
        if *l < LOWDIN_DROP * max {
            *l = 0.0;
        } else {
            kept += 1;
        }
    }
    let t = eig.eigenvectors;
    let cross = DMatrix::from_fn(n, n, |i, j| couplings.g[i] * lambda[j].sqrt() * t[(i, j)]);
    Ok(LowdinTransform { order: overlaps.order, eigenvalues: lambda, transform: t, cross_couplings: cross, n_independent: kept })
}

/// √(Σ_n Σ_i g_n^(i)² / (δ_n² + (γ_n/2)²)). Values of order one or more mean
/// the emitters are not weakly coupled to the modes.
pub fn weak_coupling_ratio(omega0: f64, modes: &[CouplingSet]) -> f64 {
    modes
        .iter()
        .map(|c| {
            let d = c.mode.detuning(omega0);
            let den = d * d + 0.25 * c.mode.gamma_n * c.mode.gamma_n;
            c.g.iter().map(|g| g * g).sum::<f64>() / den
        })
        .sum::<f64>()
        .sqrt()
}

/// Full mode decomposition of a scenario for orders `1..=max_multipole`.
pub fn extract_modes(config: &SystemConfig) -> Result<LSPModeSet> {
    config.ensure_valid()?;
    let sphere = &config.sphere;
    let emitters = &config.emitters.emitters;
    let modes = map_indices(config.controls.max_multipole, |i| -> Result<ModeData> {
        let mode = find_resonance(i + 1, sphere, config.controls.fit_window)?;
        let g = emitters.iter().map(|e| coupling_strength(&mode, e, sphere)).collect::<Result<Vec<_>>>()?;
        let overlap = overlap_matrix(&mode, emitters, sphere)?;
        Ok(ModeData { couplings: CouplingSet { mode, g }, overlap })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(LSPModeSet { modes, omega0: config.omega0() })
}

/// CSV with columns n, omega_n_eV, gamma_n_eV, residual, g_j (eV) per
/// emitter, then μ_jk row-major.
pub fn write_mode_report<W: Write>(set: &LSPModeSet, mut w: W) -> io::Result<()> {
    let ne = set.modes.first().map_or(0, |m| m.couplings.g.len());
    write!(w, "n,omega_n_eV,gamma_n_eV,residual")?;
    for j in 0..ne {
        write!(w, ",g_{j}")?;
    }
    for j in 0..ne {
        for k in 0..ne {
            write!(w, ",mu_{j}_{k}")?;
        }
    }
    writeln!(w)?;
    for m in &set.modes {
        let mode = &m.couplings.mode;
        write!(w, "{},{},{},{:e}", mode.order, mode.omega_n, mode.gamma_n, mode.fit_residual)?;
        for g in &m.couplings.g {
            write!(w, ",{g:e}")?;
        }
        for j in 0..ne {
            for k in 0..ne {
                write!(w, ",{}", m.overlap.entries[(j, k)])?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{place_pair, place_ring, DrudeModel, NumericalControls, OrientationMode};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn sphere(r: f64) -> NanoSphere {
        NanoSphere::new(r, DrudeModel::silver())
    }

    fn window() -> f64 {
        NumericalControls::default().fit_window
    }

    #[test]
    fn dipolar_resonance_matches_closed_form() {
        let m = find_resonance(1, &sphere(15.0), window()).unwrap();
        assert_relative_eq!(m.omega_n, 7.9 / 8f64.sqrt(), max_relative = 1e-4);
        assert_relative_eq!(m.gamma_n, 0.051, max_relative = 0.05);
        assert!(!m.flagged());
    }

    #[test]
    fn resonances_approach_surface_plasmon() {
        let m = find_resonance(200, &sphere(15.0), window()).unwrap();
        assert_relative_eq!(m.omega_n, 7.9 / 7f64.sqrt(), max_relative = 1e-3);
        let mut prev = 0.0;
        for n in 1..=25 {
            let m = find_resonance(n, &sphere(15.0), window()).unwrap();
            let lossless = 7.9 / (6.0 + (n as f64 + 1.0) / n as f64).sqrt();
            assert_relative_eq!(m.omega_n, lossless, max_relative = 1e-3);
            assert_relative_eq!(m.gamma_n, 0.051, max_relative = 0.05);
            assert!(m.fit_residual < FIT_RESIDUAL_LIMIT);
            assert!(m.omega_n > prev);
            prev = m.omega_n;
        }
    }

    #[test]
    fn fit_reproduces_sampled_spectrum() {
        let s = sphere(15.0);
        for n in 1..=25 {
            let m = find_resonance(n, &s, window()).unwrap();
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..=120 {
                let w = m.omega_n - 3.0 * m.gamma_n + 6.0 * m.gamma_n * i as f64 / 120.0;
                let y = multipole_coefficient(n, &s, w).unwrap().im;
                num += (m.lorentzian(w) - y).powi(2);
                den += y * y;
            }
            assert!((num / den).sqrt() < 0.05, "order {n}");
        }
    }

    #[test]
    fn missing_root_is_an_error() {
        // a strongly negative host keeps Re[nε_m + (n+1)ε_d] below zero on (0, ωp)
        let s = NanoSphere::new(15.0, DrudeModel::new(6.0, 7.9, 0.051)).with_host(-10.0);
        assert_eq!(find_resonance(1, &s, window()).unwrap_err(), Error::NoResonance(1));
        assert!(find_resonance(0, &sphere(15.0), window()).is_err());
    }

    fn at(p: [f64; 3], d: [f64; 3]) -> Emitter {
        Emitter::new(Vector3::from(p), Vector3::from(d))
    }

    #[test]
    fn radial_coupling_is_twice_tangential() {
        let s = sphere(15.0);
        let m = find_resonance(1, &s, window()).unwrap();
        let gr = coupling_strength(&m, &at([0.0, 0.0, 35.0], [0.0, 0.0, 1.0]), &s).unwrap();
        let gt = coupling_strength(&m, &at([0.0, 0.0, 35.0], [0.0, 1.0, 0.0]), &s).unwrap();
        assert_relative_eq!(gr, 2.0 * gt, max_relative = 1e-12);
    }

    #[test]
    fn coupling_vanishes_without_sphere_and_scales_with_dipole() {
        let m = find_resonance(1, &sphere(15.0), window()).unwrap();
        let e = at([0.0, 0.0, 35.0], [0.0, 0.0, 1.0]);
        assert!(coupling_strength(&m, &e, &sphere(1e-9)).unwrap() < 1e-15);
        let mut e2 = e;
        e2.dipole_magnitude = 2.0;
        let g1 = coupling_strength(&m, &e, &sphere(15.0)).unwrap();
        let g2 = coupling_strength(&m, &e2, &sphere(15.0)).unwrap();
        assert_relative_eq!(g2, 2.0 * g1, max_relative = 1e-12);
    }

    #[test]
    fn lorentzian_peak_rate_is_mode_rate() {
        let s = sphere(15.0);
        let m = find_resonance(1, &s, window()).unwrap();
        let e = at([0.0, 0.0, 35.0], [0.0, 0.0, 1.0]);
        let g = coupling_strength(&m, &e, &s).unwrap();
        let direct = mode_rate(1, &e, &e, &s, m.omega_n).unwrap();
        assert_relative_eq!(4.0 * g * g / m.gamma_n, direct, max_relative = 1e-12);
        // spectral density normalization: ∫|κ|² dω = g²
        let c = CouplingSet { mode: m, g: vec![g] };
        let h = 1e-4;
        let integral: f64 = (-200_000..200_000).map(|i| c.kappa_sq(0, m.omega_n + h * (i as f64 + 0.5)) * h).sum();
        assert_relative_eq!(integral, g * g, max_relative = 2e-3);
    }

    #[test]
    fn overlap_special_cases() {
        let s = sphere(15.0);
        let m1 = find_resonance(1, &s, window()).unwrap();
        let e = at([0.0, 0.0, 35.0], [0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(overlap(&m1, &e, &e, &s).unwrap(), 1.0, epsilon = 1e-14);
        let ex = at([0.0, 0.0, 35.0], [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(overlap(&m1, &e, &ex, &s).unwrap(), 0.0, epsilon = 1e-14);
        let ey = at([0.0, 0.0, 35.0], [0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(overlap(&m1, &ex, &ey, &s).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn facing_dipoles_alternate_in_sign() {
        let s = sphere(15.0);
        let pair = place_pair(std::f64::consts::PI, 2.0, OrientationMode::Radial, &s, 2.964).unwrap();
        for n in 1..=6 {
            let m = find_resonance(n, &s, window()).unwrap();
            let mu = overlap(&m, &pair.emitters[0], &pair.emitters[1], &s).unwrap();
            let expect = if n % 2 == 1 { -1.0 } else { 1.0 };
            assert_abs_diff_eq!(mu, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn null_space_orientation_is_rejected() {
        // a zero dipole magnitude leaves no coupling at all
        let s = sphere(15.0);
        let m = find_resonance(1, &s, window()).unwrap();
        let mut e = at([0.0, 0.0, 35.0], [0.0, 0.0, 1.0]);
        e.dipole_magnitude = 0.0;
        let other = at([35.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!(matches!(overlap(&m, &e, &other, &s), Err(Error::VanishingCoupling { emitter: 0, order: 1 })));
    }

    #[test]
    fn lowdin_identity_overlap() {
        let m = find_resonance(1, &sphere(15.0), window()).unwrap();
        let ov = OverlapMatrix { order: 1, entries: DMatrix::identity(3, 3) };
        let c = CouplingSet { mode: m, g: vec![0.1, 0.2, 0.3] };
        let l = lowdin(&ov, &c).unwrap();
        assert_eq!(l.n_independent, 3);
        for v in l.eigenvalues.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let r = l.reconstruct();
        assert_abs_diff_eq!(r, DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 0.04, 0.09])), epsilon = 1e-14);
        // every Löwdin mode couples to exactly one emitter
        for i in 0..3 {
            let nonzero = (0..3).filter(|&j| l.cross_couplings[(i, j)].abs() > 1e-14).count();
            assert_eq!(nonzero, 1);
        }
    }

    #[test]
    fn lowdin_rank_one_overlap() {
        let m = find_resonance(1, &sphere(15.0), window()).unwrap();
        let ov = OverlapMatrix { order: 1, entries: DMatrix::from_element(2, 2, 1.0) };
        let c = CouplingSet { mode: m, g: vec![0.3, 0.3] };
        let l = lowdin(&ov, &c).unwrap();
        assert_eq!(l.n_independent, 1);
        let mut ev: Vec<f64> = l.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.reconstruct(), DMatrix::from_element(2, 2, 0.09), epsilon = 1e-14);
    }

    #[test]
    fn lowdin_rejects_indefinite_overlap() {
        let m = find_resonance(1, &sphere(15.0), window()).unwrap();
        let ov = OverlapMatrix { order: 1, entries: DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 1.0]) };
        let c = CouplingSet { mode: m, g: vec![1.0, 1.0] };
        assert!(matches!(lowdin(&ov, &c), Err(Error::NotPositiveSemidefinite { .. })));
    }

    fn ring_config(mode: OrientationMode) -> SystemConfig {
        let s = sphere(15.0);
        SystemConfig::new(s, place_ring(6, 20.0, mode, &s, 2.77).unwrap())
    }

    #[test]
    fn ring_lowdin_reconstruction() {
        let set = extract_modes(&ring_config(OrientationMode::Azimuthal)).unwrap();
        assert_eq!(set.modes.len(), 25);
        for m in &set.modes {
            let l = lowdin(&m.overlap, &m.couplings).unwrap();
            let g = &m.couplings.g;
            let target = DMatrix::from_fn(6, 6, |j, k| g[j] * g[k] * m.overlap.entries[(j, k)]);
            let scale = target.amax();
            assert!((l.reconstruct() - &target).amax() <= 1e-10 * scale);
            let tt = &l.transform * l.transform.transpose();
            assert!((tt - DMatrix::identity(6, 6)).amax() <= 1e-10);
        }
    }

    #[test]
    fn weak_coupling_ratio_cases() {
        let m = LSPMode { order: 1, omega_n: 2.79, gamma_n: 0.05, amplitude: 1.0, fit_residual: 0.0, omega_root: 2.79 };
        let zero = CouplingSet { mode: m, g: vec![0.0; 4] };
        assert_eq!(weak_coupling_ratio(2.77, &[zero]), 0.0);
        let one = CouplingSet { mode: m, g: vec![0.004] };
        assert_relative_eq!(weak_coupling_ratio(2.79, &[one]), 2.0 * 0.004 / 0.05, max_relative = 1e-14);
        let ring = extract_modes(&ring_config(OrientationMode::Azimuthal)).unwrap();
        let r = ring.weak_coupling_ratio();
        assert!(r > 0.0 && r < 1.0, "{r}");
    }

    #[test]
    fn mode_report_layout() {
        let set = extract_modes(&ring_config(OrientationMode::Radial)).unwrap();
        let mut buf = Vec::new();
        write_mode_report(&set, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 4 + 6 + 36);
        assert_eq!(text.lines().count(), 26);
    }

    proptest! {
        #[test]
        fn overlap_matrices_are_psd_with_unit_diagonal(
            pts in proptest::collection::vec((0.05f64..3.1, 0.0f64..6.2, 0.5f64..40.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 2..6),
            n in 1usize..8,
        ) {
            let s = sphere(15.0);
            let emitters: Vec<Emitter> = pts
                .iter()
                .filter(|t| t.3 * t.3 + t.4 * t.4 + t.5 * t.5 > 1e-2)
                .map(|&(th, ph, h, a, b, c)| {
                    let r = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * (15.0 + h);
                    Emitter::new(r, Vector3::new(a, b, c).normalize())
                })
                .collect();
            prop_assume!(!emitters.is_empty());
            let mode = find_resonance(n, &s, window()).unwrap();
            let ov = overlap_matrix(&mode, &emitters, &s).unwrap();
            let m = &ov.entries;
            for j in 0..m.nrows() {
                prop_assert!((m[(j, j)] - 1.0).abs() < 1e-12);
                for k in 0..m.ncols() {
                    prop_assert!(m[(j, k)].abs() <= 1.0 + 1e-9);
                    prop_assert!((m[(j, k)] - m[(k, j)]).abs() < 1e-12);
                }
            }
            let ev = SymmetricEigen::new(m.clone()).eigenvalues;
            prop_assert!(ev.min() >= -1e-10);
        }
    }
}
