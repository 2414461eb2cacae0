//! Time integration of the vectorized master equation with an adaptive
//! Dormand–Prince 5(4) pair.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::liouvillian::{ElementSpace, Liouvillian};
use crate::error::{Error, Result};

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-8;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
/// Largest Hilbert dimension for which the spectrum of ρ is checked.
pub const POSITIVITY_CHECK_DIM: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Step ceiling as a fraction of 1/max Γ eigenvalue.
    pub time_step_factor: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_refinements: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { time_step_factor: 0.01, rtol: 1e-10, atol: 1e-13, max_refinements: 3 }
    }
}

impl EvolveOptions {
    pub fn with_step_factor(mut self, factor: f64) -> Self {
        self.time_step_factor = factor;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub matrix: DMatrix<Complex64>,
    pub time: f64,
}

impl DensityOperator {
    /// |idx⟩⟨idx| at t = 0.
    pub fn basis_state(dim: usize, idx: usize) -> Self {
        let mut matrix = DMatrix::zeros(dim, dim);
        matrix[(idx, idx)] = Complex64::new(1.0, 0.0);
        Self { matrix, time: 0.0 }
    }

    /// All emitters excited.
    pub fn all_excited(dim: usize) -> Self {
        Self::basis_state(dim, 0)
    }

    /// Pure state |ψ⟩⟨ψ| at t = 0.
    pub fn pure(psi: &[Complex64]) -> Self {
        let d = psi.len();
        let matrix = DMatrix::from_fn(d, d, |n, m| psi[n] * psi[m].conj());
        Self { matrix, time: 0.0 }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn violations(&self) -> Vec<String> {
        invariant_violations(&self.matrix)
    }
}

/// Lists breaches of Hermiticity, unit trace and positivity.
pub fn invariant_violations(rho: &DMatrix<Complex64>) -> Vec<String> {
    let mut out = Vec::new();
    let herm = (rho - rho.adjoint()).camax();
    if herm > HERMITIAN_TOLERANCE {
        out.push(format!("hermiticity defect {herm:e}"));
    }
    let tr = rho.trace();
    if (tr - 1.0).norm() > TRACE_TOLERANCE {
        out.push(format!("trace {tr} differs from 1"));
    }
    if rho.nrows() <= POSITIVITY_CHECK_DIM {
        let min = min_eigenvalue(rho);
        if min < -POSITIVITY_TOLERANCE {
            out.push(format!("eigenvalue {min:e} below zero"));
        }
    }
    out
}

pub fn min_eigenvalue(rho: &DMatrix<Complex64>) -> f64 {
    let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h).eigenvalues.min()
}

/// States on the element space at each requested time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub space: ElementSpace,
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    /// Largest |tr ρ − 1| seen at the snapshots.
    pub max_trace_drift: f64,
    /// Most negative eigenvalue seen (only checked for small D).
    pub min_eigenvalue: f64,
    pub steps: usize,
    pub refinements: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn density(&self, i: usize) -> DensityOperator {
        DensityOperator { matrix: self.space.unpack(&self.states[i]), time: self.times[i] }
    }

    /// ⟨n|ρ(t_i)|n⟩.
    pub fn population(&self, i: usize, n: usize) -> f64 {
        self.space.position(n, n).map_or(0.0, |p| self.states[i][p].re)
    }
}

// Dormand–Prince 5(4) tableau; the generator is time independent so the
// nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Stepper<'a> {
    l: &'a Liouvillian,
    k: Vec<Vec<Complex64>>,
    tmp: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(l: &'a Liouvillian) -> Self {
        let n = l.space.len();
        Self { l, k: vec![vec![Complex64::new(0.0, 0.0); n]; 7], tmp: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// One trial step; writes the fifth-order result to `out` and returns the
    /// scaled error norm.
    fn step(&mut self, y: &[Complex64], h: f64, out: &mut [Complex64], rtol: f64, atol: f64) -> f64 {
        let n = y.len();
        for s in 0..7 {
            let (done, rest) = self.k.split_at_mut(s);
            for i in 0..n {
                let mut acc = y[i];
                for (r, a) in A[s][..s].iter().enumerate() {
                    if *a != 0.0 {
                        acc += done[r][i] * (h * a);
                    }
                }
                self.tmp[i] = acc;
            }
            self.l.matrix.matvec(&self.tmp, &mut rest[0]);
        }
        let mut err2 = 0.0;
        for i in 0..n {
            let mut y5 = y[i];
            let mut e = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                y5 += self.k[s][i] * (h * B5[s]);
                e += self.k[s][i] * (h * (B5[s] - B4[s]));
            }
            out[i] = y5;
            let scale = atol + rtol * y[i].norm().max(y5.norm());
            err2 += (e.norm() / scale).powi(2);
        }
        (err2 / n as f64).sqrt()
    }
}

fn integrate(l: &Liouvillian, y0: &[Complex64], times: &[f64], opts: &EvolveOptions) -> Result<(Vec<Vec<Complex64>>, usize)> {
    let h_max = if l.max_rate > 0.0 { opts.time_step_factor / l.max_rate } else { f64::INFINITY };
    let mut stepper = Stepper::new(l);
    let mut y = y0.to_vec();
    let mut trial = y.clone();
    let mut t = times[0];
    let mut h = h_max.min((times[times.len() - 1] - t).max(0.0)).max(f64::MIN_POSITIVE);
    let mut out = vec![y.clone()];
    let mut steps = 0usize;
    for &target in &times[1..] {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let err = stepper.step(&y, h_try, &mut trial, opts.rtol, opts.atol);
            if !err.is_finite() {
                return Err(Error::NonConvergence(format!("non-finite state at t = {t}")));
            }
            if err <= 1.0 {
                std::mem::swap(&mut y, &mut trial);
                t = if last { target } else { t + h_try };
                steps += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last || err > 1.0 {
                h = (h_try * factor).min(h_max);
            }
            if h < 1e-14 * target.abs().max(1.0) {
                return Err(Error::NonConvergence(format!("step size underflow at t = {t}")));
            }
        }
        out.push(y.clone());
    }
    Ok((out, steps))
}

/// Evolves `rho0` under `l` and returns the state at every time in
/// `t_grid` (same time unit as the inverse rates, first entry the initial
/// time). A snapshot that breaches the density-operator invariants triggers
/// a restart with a four times smaller step ceiling and ten times tighter
/// tolerance, up to `max_refinements` times.
pub fn evolve(l: &Liouvillian, rho0: &DensityOperator, t_grid: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    if t_grid.is_empty() {
        return Err(Error::Parameter { name: "t_grid", reason: "time grid is empty".into() });
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return Err(Error::Parameter { name: "t_grid", reason: "times must be finite and strictly increasing".into() });
    }
    let v = rho0.violations();
    if !v.is_empty() {
        return Err(Error::InvariantBreach(format!("initial state: {}", v.join("; "))));
    }
    let y0 = l.space.pack(&rho0.matrix)?;
    let mut opts = *opts;
    let mut last_issue = String::new();
    for refinement in 0..=opts.max_refinements {
        let (states, steps) = integrate(l, &y0, t_grid, &opts)?;
        let mut drift: f64 = 0.0;
        let mut min_ev = f64::INFINITY;
        let mut breach = None;
        for (i, s) in states.iter().enumerate() {
            let rho = l.space.unpack(s);
            drift = drift.max((rho.trace() - 1.0).norm());
            if rho.nrows() <= POSITIVITY_CHECK_DIM {
                min_ev = min_ev.min(min_eigenvalue(&rho));
            }
            let v = invariant_violations(&rho);
            if !v.is_empty() && breach.is_none() {
                breach = Some(format!("t = {}: {}", t_grid[i], v.join("; ")));
            }
        }
        match breach {
            None => {
                return Ok(Trajectory {
                    space: l.space.clone(),
                    times: t_grid.to_vec(),
                    states,
                    max_trace_drift: drift,
                    min_eigenvalue: min_ev,
                    steps,
                    refinements: refinement,
                })
            }
            Some(msg) => {
                last_issue = msg;
                opts.time_step_factor /= 4.0;
                opts.rtol /= 10.0;
            }
        }
    }
    Err(Error::InvariantBreach(format!(
        "density operator invariants still violated after {} refinements ({last_issue})",
        opts.max_refinements
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::liouvillian::build_liouvillian;
    use crate::lindblad::operators::build_operators;
    use crate::greens::ModeSelection;
    use crate::rates::{RateMatrices, Route};

    fn rates(gamma: DMatrix<f64>, delta: DMatrix<f64>) -> RateMatrices {
        let n = gamma.nrows();
        RateMatrices {
            gamma,
            delta,
            gamma_rad: DMatrix::zeros(n, n),
            omega0: 2.77,
            route: Route::Green,
            selection: ModeSelection::All,
            max_multipole: 25,
            gamma0_ev: 1.0,
        }
    }

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn zero_generator_keeps_state() {
        let ops = build_operators(2).unwrap();
        let l = build_liouvillian(&rates(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)), &ops).unwrap();
        let psi = [0.6, 0.0, 0.8, 0.0].map(|x| Complex64::new(x, 0.0));
        let rho0 = DensityOperator::pure(&psi);
        let traj = evolve(&l, &rho0, &grid(3.0, 5), &EvolveOptions::default()).unwrap();
        for i in 0..traj.len() {
            assert!((traj.density(i).matrix - &rho0.matrix).camax() < 1e-15);
        }
    }

    #[test]
    fn single_emitter_decays_exponentially() {
        let ops = build_operators(1).unwrap();
        let g = 1.7;
        let l = build_liouvillian(&rates(DMatrix::from_element(1, 1, g), DMatrix::zeros(1, 1)), &ops).unwrap();
        let t = grid(4.0 / g, 41);
        let traj = evolve(&l, &DensityOperator::all_excited(2), &t, &EvolveOptions::default()).unwrap();
        for (i, &ti) in t.iter().enumerate() {
            assert!((traj.population(i, 0) - (-g * ti).exp()).abs() < 1e-10);
        }
        assert!(traj.max_trace_drift < 1e-12);
        assert!(traj.min_eigenvalue > -1e-12);
        assert_eq!(traj.refinements, 0);
    }

    #[test]
    fn unitary_dynamics_preserve_purity() {
        let ops = build_operators(2).unwrap();
        let delta = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let l = build_liouvillian(&rates(DMatrix::zeros(2, 2), delta), &ops).unwrap();
        // start in |eg⟩: the excitation swaps to |ge⟩ at t = π/(2·0.5)
        let rho0 = DensityOperator::basis_state(4, 1);
        let t = grid(std::f64::consts::PI, 11);
        let traj = evolve(&l, &rho0, &t, &EvolveOptions::default()).unwrap();
        for i in 0..traj.len() {
            let rho = traj.density(i).matrix;
            let purity = (&rho * &rho).trace().re;
            assert!((purity - 1.0).abs() < 1e-9);
        }
        assert!((traj.population(10, 2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn step_ceiling_is_respected() {
        let ops = build_operators(1).unwrap();
        let l = build_liouvillian(&rates(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)), &ops).unwrap();
        let traj = evolve(&l, &DensityOperator::all_excited(2), &[0.0, 1.0], &EvolveOptions::default()).unwrap();
        assert!(traj.steps >= 100);
    }

    #[test]
    fn rejects_bad_grids_and_states() {
        let ops = build_operators(1).unwrap();
        let l = build_liouvillian(&rates(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)), &ops).unwrap();
        let rho = DensityOperator::all_excited(2);
        assert!(evolve(&l, &rho, &[], &EvolveOptions::default()).is_err());
        assert!(evolve(&l, &rho, &[0.0, 1.0, 0.5], &EvolveOptions::default()).is_err());
        let mut bad = rho.clone();
        bad.matrix[(1, 1)] = Complex64::new(0.5, 0.0);
        assert!(matches!(evolve(&l, &bad, &[0.0, 1.0], &EvolveOptions::default()), Err(Error::InvariantBreach(_))));
    }

    #[test]
    fn persistent_breach_is_a_hard_error() {
        // a generator that does not preserve the trace cannot be rescued by refinement
        let ops = build_operators(1).unwrap();
        let mut l = build_liouvillian(&rates(DMatrix::from_element(1, 1, 1.0), DMatrix::zeros(1, 1)), &ops).unwrap();
        l.matrix = crate::lindblad::sparse::CsrMatrix::from_triplets(4, 4, vec![(0, 0, Complex64::new(-1.0, 0.0))]);
        let err = evolve(&l, &DensityOperator::all_excited(2), &[0.0, 1.0], &EvolveOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvariantBreach(ref m) if m.contains("3 refinements")));
    }
}
