//! Closed-form decay of two identical emitters from |ee⟩ through the
//! symmetric and antisymmetric single-excitation states.

use serde::{Deserialize, Serialize};

use super::trace::EmissionTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoEmitterSolution {
    pub gamma1: f64,
    pub gamma12: f64,
    pub gamma_s: f64,
    pub gamma_a: f64,
    pub times: Vec<f64>,
    pub rho_ee: Vec<f64>,
    pub rho_s: Vec<f64>,
    pub rho_a: Vec<f64>,
    pub rho_gg: Vec<f64>,
    /// Set when |Γ₁₂| > Γ₁, where Γ is not positive semidefinite.
    pub flagged: bool,
}

/// ρ_X(t) for dρ_X/dt = Γ_X(ρ_ee − ρ_X), ρ_ee = e^{−2Γ₁t}, ρ_X(0) = 0.
fn single_population(gamma_x: f64, gamma1: f64, t: f64) -> f64 {
    let a = 2.0 * gamma1 - gamma_x;
    let factor = if a == 0.0 { t } else { -(-a * t).exp_m1() / a };
    gamma_x * (-gamma_x * t).exp() * factor
}

pub fn two_emitter_analytic(gamma1: f64, gamma12: f64, t_grid: &[f64]) -> Result<TwoEmitterSolution> {
    if !(gamma1 > 0.0) || !gamma12.is_finite() {
        return Err(Error::Parameter { name: "gamma1", reason: format!("need Γ₁ > 0 and finite Γ₁₂, got {gamma1}, {gamma12}") });
    }
    let gamma_s = gamma1 + gamma12;
    let gamma_a = gamma1 - gamma12;
    let mut out = TwoEmitterSolution {
        gamma1,
        gamma12,
        gamma_s,
        gamma_a,
        times: t_grid.to_vec(),
        rho_ee: Vec::with_capacity(t_grid.len()),
        rho_s: Vec::with_capacity(t_grid.len()),
        rho_a: Vec::with_capacity(t_grid.len()),
        rho_gg: Vec::with_capacity(t_grid.len()),
        flagged: gamma12.abs() > gamma1,
    };
    for &t in t_grid {
        let ee = (-2.0 * gamma1 * t).exp();
        let s = single_population(gamma_s, gamma1, t);
        let a = single_population(gamma_a, gamma1, t);
        out.rho_ee.push(ee);
        out.rho_s.push(s);
        out.rho_a.push(a);
        out.rho_gg.push(1.0 - ee - s - a);
    }
    Ok(out)
}

impl TwoEmitterSolution {
    /// W = 2Γ₁ρ_ee + Γ_Sρ_S + Γ_Aρ_A.
    pub fn w(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|i| 2.0 * self.gamma1 * self.rho_ee[i] + self.gamma_s * self.rho_s[i] + self.gamma_a * self.rho_a[i])
            .collect()
    }

    /// Emission trace in units of Γ_ref. W_P = Γ₁(2ρ_ee + ρ_S + ρ_A) and
    /// W_C = Γ₁₂(ρ_S − ρ_A). `radiative` gives (Γ₁, Γ₁₂) of the radiative
    /// part; without it W_rad is zero.
    #[allow(clippy::needless_range_loop)]
    pub fn trace(&self, gamma_ref: f64, radiative: Option<(f64, f64)>) -> EmissionTrace {
        let w = self.w();
        let n = self.times.len();
        let (r1, r12) = radiative.unwrap_or((0.0, 0.0));
        let mut tr = EmissionTrace {
            t: self.times.iter().map(|t| t * gamma_ref).collect(),
            w: w.iter().map(|w| w / gamma_ref).collect(),
            w_p: Vec::with_capacity(n),
            w_c: Vec::with_capacity(n),
            w_rad: Vec::with_capacity(n),
            eta: Vec::with_capacity(n),
            populations: Vec::with_capacity(n),
            gamma_ref,
        };
        for i in 0..n {
            let single = self.rho_s[i] + self.rho_a[i];
            tr.w_p.push(self.gamma1 * (2.0 * self.rho_ee[i] + single) / gamma_ref);
            tr.w_c.push(self.gamma12 * (self.rho_s[i] - self.rho_a[i]) / gamma_ref);
            let rad = r1 * (2.0 * self.rho_ee[i] + single) + r12 * (self.rho_s[i] - self.rho_a[i]);
            tr.w_rad.push(rad / gamma_ref);
            tr.eta.push(if w[i] != 0.0 { rad / w[i] } else { 0.0 });
            tr.populations.push(vec![self.rho_gg[i], single, self.rho_ee[i]]);
        }
        tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::integrate::{evolve, DensityOperator, EvolveOptions};
    use crate::lindblad::liouvillian::build_liouvillian;
    use crate::lindblad::liouvillian::tests::rates_from;
    use crate::lindblad::operators::build_operators;
    use nalgebra::DMatrix;

    fn grid() -> Vec<f64> {
        (0..41).map(|i| 0.1 * i as f64).collect()
    }

    #[test]
    fn populations_sum_to_one() {
        let s = two_emitter_analytic(1.0, 0.6, &grid()).unwrap();
        for i in 0..s.times.len() {
            assert!((s.rho_ee[i] + s.rho_s[i] + s.rho_a[i] + s.rho_gg[i] - 1.0).abs() < 1e-15);
        }
        assert!(!s.flagged);
    }

    #[test]
    fn perfect_correlation_leaves_antisymmetric_state_empty() {
        let s = two_emitter_analytic(1.0, 1.0, &grid()).unwrap();
        assert!(s.rho_a.iter().all(|&a| a == 0.0));
        assert_eq!(s.gamma_s, 2.0);
    }

    #[test]
    fn anticorrelation_exchanges_roles() {
        let p = two_emitter_analytic(1.0, 0.7, &grid()).unwrap();
        let m = two_emitter_analytic(1.0, -0.7, &grid()).unwrap();
        for i in 0..p.times.len() {
            assert!((p.rho_s[i] - m.rho_a[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn uncorrelated_pair_is_incoherent() {
        let s = two_emitter_analytic(1.3, 0.0, &grid()).unwrap();
        for (i, t) in s.times.iter().enumerate() {
            assert!((s.w()[i] - 2.6 * (-1.3 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_rate_limit_is_continuous() {
        // Γ_S = 2Γ₁ makes a = 0
        let t = [0.7];
        let at = two_emitter_analytic(1.0, 1.0, &t).unwrap().rho_s[0];
        let near = two_emitter_analytic(1.0, 1.0 - 1e-9, &t).unwrap().rho_s[0];
        assert!((at - near).abs() < 1e-8);
        assert!((at - 2.0 * 0.7 * (-1.4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn split_adds_up() {
        let tr = two_emitter_analytic(1.0, 0.4, &grid()).unwrap().trace(1.0, Some((0.1, 0.05)));
        assert!(tr.split_defect() < 1e-15);
        assert!((tr.w[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn master_equation_matches_closed_form() {
        let ops = build_operators(2).unwrap();
        for g12 in [0.9, 0.3, -0.5] {
            let gamma = DMatrix::from_row_slice(2, 2, &[1.0, g12, g12, 1.0]);
            let delta = DMatrix::from_row_slice(2, 2, &[0.2, -0.8, -0.8, 0.2]);
            let l = build_liouvillian(&rates_from(gamma, delta), &ops).unwrap();
            let traj = evolve(&l, &DensityOperator::all_excited(4), &grid(), &EvolveOptions::default()).unwrap();
            let exact = two_emitter_analytic(1.0, g12, &grid()).unwrap();
            let h = 0.5f64.sqrt();
            for i in 0..traj.len() {
                let rho = traj.density(i).matrix;
                let (eg, ge) = (ops.index(0b10), ops.index(0b01));
                let s = (rho[(eg, eg)] + rho[(ge, ge)] + rho[(eg, ge)] + rho[(ge, eg)]).re * h * h;
                let a = (rho[(eg, eg)] + rho[(ge, ge)] - rho[(eg, ge)] - rho[(ge, eg)]).re * h * h;
                assert!((rho[(0, 0)].re - exact.rho_ee[i]).abs() < 1e-8);
                assert!((s - exact.rho_s[i]).abs() < 1e-8);
                assert!((a - exact.rho_a[i]).abs() < 1e-8);
                assert!((rho[(3, 3)].re - exact.rho_gg[i]).abs() < 1e-8);
            }
        }
    }
}
