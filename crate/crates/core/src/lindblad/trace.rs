//! Emission observables along a trajectory.
//!
//! W = Tr(ρ Σ Γ_ij σ₊^(i)σ₋^(j)) is the total emission rate. W_P collects
//! the terms diagonal in the product basis (populations), W_C the rest
//! (coherences between basis states of equal excitation), and W_rad is W
//! evaluated with the radiative rates.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrate::Trajectory;
use super::operators::OperatorSet;
use crate::error::{Error, Result};
use crate::rates::RateMatrices;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionTrace {
    /// Time in units of 1/Γ_ref.
    pub t: Vec<f64>,
    /// Rates in units of Γ_ref.
    pub w: Vec<f64>,
    pub w_p: Vec<f64>,
    pub w_c: Vec<f64>,
    pub w_rad: Vec<f64>,
    /// W_rad / W (0 where W vanishes).
    pub eta: Vec<f64>,
    /// populations[i][k]: probability of k excitations at t[i].
    pub populations: Vec<Vec<f64>>,
    /// Γ_ref in Γ₀ units.
    pub gamma_ref: f64,
}

impl EmissionTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n_emitters(&self) -> usize {
        self.populations.first().map_or(0, |p| p.len() - 1)
    }

    /// (index, value) of the largest W.
    pub fn peak(&self) -> (usize, f64) {
        self.w.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc })
    }

    /// η at the peak of W.
    pub fn eta_at_peak(&self) -> f64 {
        self.eta[self.peak().0]
    }

    /// ∫W_rad dt / ∫W dt by the trapezoid rule.
    pub fn integrated_yield(&self) -> f64 {
        let integral = |y: &[f64]| -> f64 { self.t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum() };
        integral(&self.w_rad) / integral(&self.w)
    }

    /// ∫W dt by the trapezoid rule (emitted quanta).
    pub fn emitted(&self) -> f64 {
        self.t.windows(2).zip(self.w.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
    }

    /// Largest |W − W_P − W_C|.
    pub fn split_defect(&self) -> f64 {
        self.w.iter().zip(&self.w_p).zip(&self.w_c).map(|((w, p), c)| (w - p - c).abs()).fold(0.0, f64::max)
    }
}

/// Matrix of Σ Γ_ij σ₊^(i)σ₋^(j) in the product basis.
pub fn emission_operator(gamma: &DMatrix<f64>, ops: &OperatorSet) -> DMatrix<f64> {
    let d = ops.dim();
    let ne = ops.n_emitters();
    let mut o = DMatrix::zeros(d, d);
    for n in 0..d {
        for i in 0..ne {
            for j in 0..ne {
                if let Some(a) = ops.hop(n, j, i) {
                    o[(a, n)] += gamma[(i, j)];
                }
            }
        }
    }
    o
}

/// Observables of `traj`, reported with time in 1/Γ_ref and rates in Γ_ref
/// where Γ_ref = `gamma_ref` (Γ₀ units). The trajectory times are in 1/Γ₀.
pub fn emission_trace(traj: &Trajectory, rates: &RateMatrices, ops: &OperatorSet, gamma_ref: f64) -> Result<EmissionTrace> {
    if traj.is_empty() {
        return Err(Error::Parameter { name: "trajectory", reason: "no snapshots".into() });
    }
    if ops.dim() != traj.space.dim() || rates.n_emitters() != ops.n_emitters() {
        return Err(Error::Dimension("trajectory, rates and operators disagree on the number of emitters".into()));
    }
    if !(gamma_ref > 0.0) {
        return Err(Error::Parameter { name: "gamma_ref", reason: format!("must be positive, got {gamma_ref}") });
    }
    let o = emission_operator(&rates.gamma, ops);
    let o_rad = emission_operator(&rates.gamma_rad, ops);
    let ne = ops.n_emitters();
    let mut out = EmissionTrace {
        t: Vec::with_capacity(traj.len()),
        w: Vec::with_capacity(traj.len()),
        w_p: Vec::with_capacity(traj.len()),
        w_c: Vec::with_capacity(traj.len()),
        w_rad: Vec::with_capacity(traj.len()),
        eta: Vec::with_capacity(traj.len()),
        populations: Vec::with_capacity(traj.len()),
        gamma_ref,
    };
    for (i, state) in traj.states.iter().enumerate() {
        let (mut w, mut wp, mut wr) = (Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0));
        let mut pops = vec![0.0; ne + 1];
        for (p, rho) in state.iter().enumerate() {
            let (n, m) = traj.space.pair(p);
            // Tr(ρO) = Σ ρ_nm O_mn
            w += rho * o[(m, n)];
            wr += rho * o_rad[(m, n)];
            if n == m {
                wp += rho.re * o[(n, n)];
                pops[ops.excitation(n)] += rho.re;
            }
        }
        let w = w.re / gamma_ref;
        let wp = wp / gamma_ref;
        let wr = wr.re / gamma_ref;
        out.t.push(traj.times[i] * gamma_ref);
        out.w.push(w);
        out.w_p.push(wp);
        out.w_c.push(w - wp);
        out.w_rad.push(wr);
        out.eta.push(if w.abs() > 0.0 { wr / w } else { 0.0 });
        out.populations.push(pops);
    }
    Ok(out)
}

/// CSV with columns t_over_tau1, W_over_gamma1, WP, WC, Wrad, eta,
/// pop_exc_k for k = 0..N.
pub fn write_trace_csv<W: Write>(trace: &EmissionTrace, mut w: W) -> io::Result<()> {
    write!(w, "t_over_tau1,W_over_gamma1,WP,WC,Wrad,eta")?;
    for k in 0..=trace.n_emitters() {
        write!(w, ",pop_exc_{k}")?;
    }
    writeln!(w)?;
    for i in 0..trace.len() {
        write!(
            w,
            "{:.10e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            trace.t[i], trace.w[i], trace.w_p[i], trace.w_c[i], trace.w_rad[i], trace.eta[i]
        )?;
        for p in &trace.populations[i] {
            write!(w, ",{p:.12e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
