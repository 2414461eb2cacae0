//! Collective decay (Γ), shift (Δ) and radiative (Γ_rad) matrices of an
//! emitter set, and the classical coupled-dipole eigenproblem.
//!
//! All matrix entries are in units of Γ₀, the free-space rate of the first
//! emitter's dipole at ω₀ in the host medium.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Emitter, SystemConfig};
use crate::greens::{effective_dipole, free_projection, host_wavenumber, scattered_projection, ModeSelection};
use crate::modes::LSPModeSet;
use crate::parallel::map_indices;
use crate::units::free_space_rate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Green,
    ModeSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrices {
    pub gamma: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub gamma_rad: DMatrix<f64>,
    pub omega0: f64,
    pub route: Route,
    pub selection: ModeSelection,
    pub max_multipole: usize,
    /// Γ₀ in eV.
    pub gamma0_ev: f64,
}

impl RateMatrices {
    pub fn n_emitters(&self) -> usize {
        self.gamma.nrows()
    }

    /// Single-emitter rate Γ₁ = Γ_11 (Γ₀ units).
    pub fn gamma1(&self) -> f64 {
        self.gamma[(0, 0)]
    }

    /// Same matrices with the inter-emitter decay removed.
    pub fn incoherent(&self) -> Self {
        let mut out = self.clone();
        out.gamma = DMatrix::from_diagonal(&self.gamma.diagonal());
        out.delta = DMatrix::from_diagonal(&self.delta.diagonal());
        out.gamma_rad = DMatrix::from_diagonal(&self.gamma_rad.diagonal());
        out
    }

    /// Every Γ_jk equal to Γ₁: the ideal Dicke limit.
    pub fn ideal(&self) -> Self {
        let n = self.n_emitters();
        let mut out = self.clone();
        out.gamma = DMatrix::from_element(n, n, self.gamma1());
        out.delta = DMatrix::zeros(n, n);
        out
    }

    pub fn with_delta(mut self, delta: DMatrix<f64>) -> Self {
        self.delta = delta;
        self
    }

    /// Eigenvalues of Γ in ascending order.
    pub fn gamma_eigenvalues(&self) -> DVector<f64> {
        sorted(SymmetricEigen::new(self.gamma.clone()).eigenvalues)
    }

    /// Hard invariant violations (asymmetry, negative Γ eigenvalues,
    /// non-positive diagonal).
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.n_emitters();
        for (name, m) in [("gamma", &self.gamma), ("delta", &self.delta), ("gamma_rad", &self.gamma_rad)] {
            if m.nrows() != n || m.ncols() != n {
                out.push(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols()));
                continue;
            }
            let scale = m.amax().max(f64::MIN_POSITIVE);
            if (m - m.transpose()).amax() > 1e-12 * scale {
                out.push(format!("{name} is not symmetric"));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let ev = self.gamma_eigenvalues();
        let max = ev.max().abs();
        if ev.min() < -1e-9 * max {
            out.push(format!("gamma has eigenvalue {:e} below zero", ev.min()));
        }
        for j in 0..n {
            if !(self.gamma[(j, j)] > 0.0) {
                out.push(format!("gamma[{j},{j}] = {} is not positive", self.gamma[(j, j)]));
            }
        }
        out
    }

    /// Soft violations: the quasi-static radiative rate exceeding the total
    /// rate, or a Γ_rad that is not positive semidefinite.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for j in 0..self.n_emitters() {
            if self.gamma_rad[(j, j)] > self.gamma[(j, j)] * (1.0 + 1e-12) {
                out.push(format!(
                    "gamma_rad[{j},{j}] = {:.6} exceeds gamma[{j},{j}] = {:.6}; quasi-static radiative estimate breaks down",
                    self.gamma_rad[(j, j)],
                    self.gamma[(j, j)]
                ));
            }
        }
        let ev = SymmetricEigen::new(self.gamma_rad.clone()).eigenvalues;
        if ev.min() < -1e-9 * ev.max().abs() {
            out.push(format!("gamma_rad has eigenvalue {:e} below zero", ev.min()));
        }
        out
    }
}

fn sorted(v: DVector<f64>) -> DVector<f64> {
    let mut x: Vec<f64> = v.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    DVector::from_vec(x)
}

fn reference_dipole(config: &SystemConfig) -> f64 {
    config.emitters.emitters[0].dipole_magnitude
}

fn gamma0_ev(config: &SystemConfig) -> f64 {
    free_space_rate(config.omega0(), reference_dipole(config), config.sphere.eps_d)
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Whether the free-space Green function enters entry (j, k).
fn free_part_enabled(config: &SystemConfig, selection: ModeSelection, diagonal: bool) -> bool {
    matches!(selection, ModeSelection::All) && (diagonal || config.controls.free_space_coupling)
}

/// Complex coupling d_a·G(r_a, r_b, ω₀)·d_b scaled by 3π/k, in Γ₀ units so
/// that Γ = 2 Im. `same` marks a self term of one emitter.
fn coupling_between(config: &SystemConfig, a: &Emitter, b: &Emitter, same: bool, selection: ModeSelection) -> Result<Complex64> {
    let omega = config.omega0();
    let kk = host_wavenumber(&config.sphere, omega);
    let mut g = scattered_projection(a, b, &config.sphere, omega, selection, &config.controls)?.value;
    if free_part_enabled(config, selection, same) {
        g += free_projection(a, b, omega, config.sphere.eps_d).value;
    }
    Ok(3.0 * PI / kk * g / reference_dipole(config).powi(2))
}

fn coupling_entry(config: &SystemConfig, j: usize, k: usize, selection: ModeSelection) -> Result<Complex64> {
    let em = &config.emitters.emitters;
    coupling_between(config, &em[j], &em[k], j == k, selection)
}

/// Γ_jk from the imaginary part of the Green tensor at ω₀. Δ is left at zero
/// and Γ_rad is filled from the effective dipoles.
pub fn gamma_matrix_green(config: &SystemConfig) -> Result<RateMatrices> {
    gamma_matrix_green_with(config, ModeSelection::All)
}

/// Green route restricted to the given multipole selection. A single order
/// keeps only that scattered term, with no free-space part.
pub fn gamma_matrix_green_with(config: &SystemConfig, selection: ModeSelection) -> Result<RateMatrices> {
    config.ensure_valid()?;
    selection.orders(&config.controls)?;
    let n = config.n_emitters();
    let entries = map_indices(n * n, |idx| coupling_entry(config, idx / n, idx % n, selection))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let gamma = DMatrix::from_fn(n, n, |j, k| 2.0 * entries[j * n + k].im);
    Ok(RateMatrices {
        gamma: symmetrize(gamma),
        delta: DMatrix::zeros(n, n),
        gamma_rad: radiative_matrix(config)?,
        omega0: config.omega0(),
        route: Route::Green,
        selection,
        max_multipole: config.controls.max_multipole,
        gamma0_ev: gamma0_ev(config),
    })
}

/// Γ_jk^rad = Re[d̃_j·conj(d̃_k)]/d_ref², from the source dipoles dressed by
/// the dipole they induce in the sphere.
pub fn radiative_matrix(config: &SystemConfig) -> Result<DMatrix<f64>> {
    config.ensure_valid()?;
    let d: Vec<Vector3<Complex64>> = config
        .emitters
        .emitters
        .iter()
        .map(|e| effective_dipole(e, &config.sphere, config.omega0()))
        .collect::<Result<_>>()?;
    let d2 = reference_dipole(config).powi(2);
    let n = d.len();
    Ok(DMatrix::from_fn(n, n, |j, k| {
        (d[j].x * d[k].x.conj() + d[j].y * d[k].y.conj() + d[j].z * d[k].z.conj()).re / d2
    }))
}

/// Γ_jk and Δ_jk from the Lorentzian mode sum. The free-space part of Γ is
/// added as in the Green route; Δ carries the modes only.
pub fn gamma_delta_matrices_modes(config: &SystemConfig, modes: &LSPModeSet) -> Result<RateMatrices> {
    config.ensure_valid()?;
    let n = config.n_emitters();
    if modes.modes.is_empty() {
        return Err(Error::Dimension("mode set is empty".into()));
    }
    for m in &modes.modes {
        if m.couplings.g.len() != n || m.overlap.entries.nrows() != n {
            return Err(Error::Dimension(format!(
                "mode {} has {} couplings for {n} emitters",
                m.couplings.mode.order,
                m.couplings.g.len()
            )));
        }
    }
    let g0 = gamma0_ev(config);
    let omega0 = config.omega0();
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    let mut delta = DMatrix::<f64>::zeros(n, n);
    for m in &modes.modes {
        let mode = &m.couplings.mode;
        let d = mode.detuning(omega0);
        let den = d * d + 0.25 * mode.gamma_n * mode.gamma_n;
        let g = &m.couplings.g;
        for j in 0..n {
            for k in 0..n {
                let w = g[j] * g[k] * m.overlap.entries[(j, k)] / g0;
                gamma[(j, k)] += mode.gamma_n / den * w;
                delta[(j, k)] += d / den * w;
            }
        }
    }
    let em = &config.emitters.emitters;
    let kk = host_wavenumber(&config.sphere, omega0);
    let d2 = reference_dipole(config).powi(2);
    for j in 0..n {
        for k in 0..n {
            if free_part_enabled(config, ModeSelection::All, j == k) {
                let f = free_projection(&em[j], &em[k], omega0, config.sphere.eps_d).value;
                gamma[(j, k)] += 6.0 * PI / kk * f.im / d2;
            }
        }
    }
    Ok(RateMatrices {
        gamma: symmetrize(gamma),
        delta: symmetrize(delta),
        gamma_rad: radiative_matrix(config)?,
        omega0,
        route: Route::ModeSum,
        selection: ModeSelection::All,
        max_multipole: modes.modes.len(),
        gamma0_ev: g0,
    })
}

/// Green-route Γ together with the mode-sum Δ, the combination that drives
/// the master equation.
pub fn dynamics_rates(config: &SystemConfig, modes: &LSPModeSet) -> Result<RateMatrices> {
    let delta = gamma_delta_matrices_modes(config, modes)?.delta;
    Ok(gamma_matrix_green(config)?.with_delta(delta))
}

/// Entrywise |a − b| / |b|.
pub fn route_discrepancy(a: &RateMatrices, b: &RateMatrices) -> DMatrix<f64> {
    a.gamma.zip_map(&b.gamma, |x, y| (x - y).abs() / y.abs())
}

/// (Γ_S, Γ_A) = Γ̄ ± Γ_12 for a pair, Γ̄ the mean diagonal rate.
pub fn pair_rates(rates: &RateMatrices) -> Result<(f64, f64)> {
    if rates.n_emitters() != 2 {
        return Err(Error::Dimension(format!("pair rates need 2 emitters, got {}", rates.n_emitters())));
    }
    let mean = 0.5 * (rates.gamma[(0, 0)] + rates.gamma[(1, 1)]);
    Ok((mean + rates.gamma[(0, 1)], mean - rates.gamma[(0, 1)]))
}

/// Eigenstate of the 3N coupled-dipole problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveEigenstate {
    /// Unit-norm complex dipole pattern, components (x, y, z) per emitter.
    pub pattern: DVector<Complex64>,
    /// Γ_tot = 2 Im λ (Γ₀ units).
    pub gamma_tot: f64,
    /// Δ_tot = Re λ (Γ₀ units).
    pub delta_tot: f64,
    /// Γ_tot / Γ₁.
    pub gamma_over_gamma1: f64,
    /// Weight of the pattern along the configured orientations.
    pub alignment: f64,
    /// Weight along the local radial, polar and azimuthal unit vectors.
    pub local_fractions: [f64; 3],
    pub residual: f64,
}

impl CollectiveEigenstate {
    pub fn descriptor(&self) -> String {
        let [r, t, p] = self.local_fractions;
        let dominant = if r >= t && r >= p {
            "radial"
        } else if t >= p {
            "polar"
        } else {
            "azimuthal"
        };
        format!("{dominant} (r {r:.2} / theta {t:.2} / phi {p:.2})")
    }
}

fn local_frame(position: &Vector3<f64>) -> [Vector3<f64>; 3] {
    let r = position.normalize();
    let rho = (r.x * r.x + r.y * r.y).sqrt();
    let phi = if rho > 1e-12 { Vector3::new(-r.y / rho, r.x / rho, 0.0) } else { Vector3::y() };
    let theta = phi.cross(&r);
    [r, theta, phi]
}

/// 3N×3N matrix M with blocks (3π/k)·G(r_i, r_j) in Γ₀ units.
pub fn coupled_dipole_matrix(config: &SystemConfig, selection: ModeSelection) -> Result<DMatrix<Complex64>> {
    config.ensure_valid()?;
    selection.orders(&config.controls)?;
    let em = &config.emitters.emitters;
    let n = em.len();
    let axes = [Vector3::x(), Vector3::y(), Vector3::z()];
    let blocks = map_indices(n * n, |idx| -> Result<Matrix3<Complex64>> {
        let (i, j) = (idx / n, idx % n);
        let mut b = Matrix3::<Complex64>::zeros();
        for a in 0..3 {
            for c in 0..3 {
                let ei = Emitter { orientation: axes[a], ..em[i] };
                let ej = Emitter { orientation: axes[c], ..em[j] };
                b[(a, c)] = coupling_between(config, &ei, &ej, i == j, selection)?;
            }
        }
        Ok(b)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut m = DMatrix::<Complex64>::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            m.fixed_view_mut::<3, 3>(3 * i, 3 * j).copy_from(&blocks[i * n + j]);
        }
    }
    Ok(m)
}

fn inverse_iteration(m: &DMatrix<Complex64>, lambda: Complex64, previous: &[DVector<Complex64>], seed: usize) -> Option<DVector<Complex64>> {
    let dim = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let shift = lambda + Complex64::new(1e-10 * scale, 1e-10 * scale);
    let a = m - DMatrix::<Complex64>::identity(dim, dim) * shift;
    let lu = a.lu();
    let mut v = DVector::<Complex64>::from_fn(dim, |i, _| {
        Complex64::new(1.0 + ((i * 7 + seed * 13) % 11) as f64 / 11.0, ((i * 3 + seed * 5) % 7) as f64 / 7.0)
    });
    for _ in 0..4 {
        for p in previous {
            let proj = p.dotc(&v);
            v -= p * proj;
        }
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        v /= Complex64::new(norm, 0.0);
        v = lu.solve(&v)?;
    }
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v / Complex64::new(norm, 0.0))
}

/// Eigenstates of the coupled-dipole problem λd_i = Σ_j (3π/k)G(r_i, r_j)d_j
/// with unconstrained dipole orientations, sorted by Γ_tot descending.
pub fn classical_eigenstates(config: &SystemConfig, selection: ModeSelection) -> Result<Vec<CollectiveEigenstate>> {
    let m = coupled_dipole_matrix(config, selection)?;
    let dim = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let schur = m.clone().try_schur(1e-14 * scale, 10_000).ok_or_else(|| {
        Error::NonConvergence(format!("Schur decomposition of the {dim}x{dim} coupled-dipole matrix"))
    })?;
    let (_, t) = schur.unpack();
    let mut lambdas: Vec<Complex64> = (0..dim).map(|i| t[(i, i)]).collect();
    lambdas.sort_by(|a, b| b.im.total_cmp(&a.im));

    let gamma1 = single_emitter_rate(config, selection)?;
    let em = &config.emitters.emitters;
    let mut found: Vec<(Complex64, DVector<Complex64>)> = Vec::with_capacity(dim);
    let mut states = Vec::with_capacity(dim);
    for (idx, &lambda) in lambdas.iter().enumerate() {
        let close: Vec<DVector<Complex64>> = found
            .iter()
            .filter(|(l, _)| (l - lambda).norm() <= 1e-6 * scale)
            .map(|(_, v)| v.clone())
            .collect();
        let v = inverse_iteration(&m, lambda, &close, idx)
            .ok_or_else(|| Error::NonConvergence(format!("eigenvector for eigenvalue {lambda}")))?;
        let residual = (&m * &v - &v * lambda).norm() / scale;
        if !(residual < config.controls.eigen_tolerance) {
            return Err(Error::NonConvergence(format!(
                "eigenvector residual {residual:e} exceeds tolerance {:e}",
                config.controls.eigen_tolerance
            )));
        }
        let mut alignment = 0.0;
        let mut local = [0.0; 3];
        for (i, e) in em.iter().enumerate() {
            let di = v.fixed_rows::<3>(3 * i);
            let proj = |u: &Vector3<f64>| (di[0] * u.x + di[1] * u.y + di[2] * u.z).norm_sqr();
            alignment += proj(&e.orientation);
            for (slot, u) in local.iter_mut().zip(local_frame(&e.position).iter()) {
                *slot += proj(u);
            }
        }
        let gamma_tot = 2.0 * lambda.im;
        states.push(CollectiveEigenstate {
            pattern: v.clone(),
            gamma_tot,
            delta_tot: lambda.re,
            gamma_over_gamma1: gamma_tot / gamma1,
            alignment,
            local_fractions: local,
            residual,
        });
        found.push((lambda, v));
    }
    states.sort_by(|a, b| b.gamma_tot.total_cmp(&a.gamma_tot));
    Ok(states)
}

/// Γ₁: the rate of the first emitter alone, same orientation and selection.
pub fn single_emitter_rate(config: &SystemConfig, selection: ModeSelection) -> Result<f64> {
    let mut single = config.clone();
    single.emitters.emitters.truncate(1);
    Ok(2.0 * coupling_entry(&single, 0, 0, selection)?.im)
}

/// Brightest state whose pattern lies along the configured orientations
/// (alignment ≥ `min_alignment`).
pub fn brightest_aligned(states: &[CollectiveEigenstate], min_alignment: f64) -> Option<&CollectiveEigenstate> {
    states.iter().find(|s| s.alignment >= min_alignment)
}

/// Brightest single-excitation decay rate with orientations held fixed: the
/// largest eigenvalue of Γ.
pub fn brightest_fixed_orientation(rates: &RateMatrices) -> f64 {
    rates.gamma_eigenvalues().max()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrightnessRow {
    pub rank: usize,
    pub gamma_over_gamma0: f64,
    pub gamma_over_gamma1: f64,
    pub alignment: f64,
    pub descriptor: String,
}

pub fn brightness_report(states: &[CollectiveEigenstate]) -> Vec<BrightnessRow> {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| BrightnessRow {
            rank: i + 1,
            gamma_over_gamma0: s.gamma_tot,
            gamma_over_gamma1: s.gamma_over_gamma1,
            alignment: s.alignment,
            descriptor: s.descriptor(),
        })
        .collect()
}

/// Writes one matrix as CSV with a comment header carrying ω₀, route and N.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, rates: &RateMatrices, label: &str, mut w: W) -> io::Result<()> {
    let route = match rates.route {
        Route::Green => "green",
        Route::ModeSum => "mode_sum",
    };
    writeln!(w, "# {label} in units of gamma0; omega0_eV={}; route={route}; N={}", rates.omega0, rates.max_multipole)?;
    let header: Vec<String> = (0..m.ncols()).map(|k| format!("e{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for j in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|k| format!("{:.12e}", m[(j, k)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_brightness_csv<W: Write>(rows: &[BrightnessRow], mut w: W) -> io::Result<()> {
    writeln!(w, "rank,gamma_over_gamma0,gamma_over_gamma1,alignment,pattern")?;
    for r in rows {
        writeln!(w, "{},{:.10e},{:.10e},{:.6},{}", r.rank, r.gamma_over_gamma0, r.gamma_over_gamma1, r.alignment, r.descriptor)?;
    }
    Ok(())
}
