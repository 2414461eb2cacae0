//! Dicke states, the ideal superradiant cascade and ladder rates of a
//! general rate matrix projected on the Dicke states.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::operators::OperatorSet;
use crate::error::{Error, Result};
use crate::rates::RateMatrices;

/// Symmetric states |J, M⟩ of N = 2J emitters, stored by excitation number
/// k = J + M.
#[derive(Debug, Clone)]
pub struct DickeBasis {
    ops: OperatorSet,
    /// states[k] has k excitations.
    states: Vec<DVector<f64>>,
}

impl DickeBasis {
    pub fn new(ops: &OperatorSet) -> Self {
        let n = ops.n_emitters();
        let d = ops.dim();
        let mut states = vec![DVector::zeros(d); n + 1];
        let mut v = DVector::zeros(d);
        v[0] = 1.0;
        states[n] = v.clone();
        for k in (0..n).rev() {
            let mut next = DVector::zeros(d);
            for idx in 0..d {
                if v[idx] != 0.0 {
                    for site in 0..n {
                        if let Some(l) = ops.lower(idx, site) {
                            next[l] += v[idx];
                        }
                    }
                }
            }
            next /= next.norm();
            states[k] = next.clone();
            v = next;
        }
        Self { ops: ops.clone(), states }
    }

    pub fn n_emitters(&self) -> usize {
        self.ops.n_emitters()
    }

    pub fn j(&self) -> f64 {
        self.n_emitters() as f64 / 2.0
    }

    pub fn operators(&self) -> &OperatorSet {
        &self.ops
    }

    /// M = k − J.
    pub fn m_value(&self, excitations: usize) -> f64 {
        excitations as f64 - self.j()
    }

    /// Excitation number of |J, M⟩.
    pub fn excitations(&self, m: f64) -> Result<usize> {
        let k = m + self.j();
        if (k - k.round()).abs() > 1e-9 || k.round() < 0.0 || k.round() > self.n_emitters() as f64 {
            return Err(Error::Parameter { name: "M", reason: format!("M = {m} is not in -J..=J for J = {}", self.j()) });
        }
        Ok(k.round() as usize)
    }

    /// |J, M⟩ for M = k − J.
    pub fn state(&self, excitations: usize) -> &DVector<f64> {
        &self.states[excitations]
    }

    /// Basis states of the permutation class with `excitations` excitations.
    pub fn permutation_class(&self, excitations: usize) -> Vec<usize> {
        self.ops.sector(excitations)
    }
}

/// |J, M⟩ as a product-basis vector.
pub fn dicke_state(basis: &DickeBasis, m: f64) -> Result<DVector<f64>> {
    Ok(basis.state(basis.excitations(m)?).clone())
}

/// Γ_M / Γ₁ = (J + M)(J − M + 1) for the state with k = J + M excitations.
pub fn ideal_rate(n_emitters: usize, excitations: usize) -> f64 {
    (excitations * (n_emitters + 1 - excitations)) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealCascade {
    pub times: Vec<f64>,
    /// populations[i][k]: weight of the Dicke state with k excitations.
    pub populations: Vec<Vec<f64>>,
    /// W(t) = Σ Γ_M ρ_M in the units of `gamma1`.
    pub w: Vec<f64>,
}

/// Solves dρ_M/dt = Γ_{M+1}ρ_{M+1} − Γ_M ρ_M from the fully excited state.
pub fn ideal_cascade(n_emitters: usize, gamma1: f64, t_grid: &[f64]) -> Result<IdealCascade> {
    if n_emitters == 0 {
        return Err(Error::Parameter { name: "n_emitters", reason: "at least one emitter is required".into() });
    }
    let n = n_emitters;
    let rates: Vec<f64> = (0..=n).map(|k| ideal_rate(n, k) * gamma1).collect();
    let mut generator = DMatrix::zeros(n + 1, n + 1);
    for k in 1..=n {
        generator[(k, k)] = -rates[k];
        generator[(k - 1, k)] = rates[k];
    }
    let mut p0 = DVector::zeros(n + 1);
    p0[n] = 1.0;
    let mut out = IdealCascade { times: t_grid.to_vec(), populations: Vec::new(), w: Vec::new() };
    for &t in t_grid {
        let p = (&generator * t).exp() * &p0;
        out.w.push(p.iter().zip(&rates).map(|(p, r)| p * r).sum());
        out.populations.push(p.iter().copied().collect());
    }
    Ok(out)
}

/// Rates of a general Γ projected on the Dicke ladder, indexed by the
/// excitation number k of the upper state (entry 0 unused and zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeLadderRates {
    pub n_emitters: usize,
    /// ⟨J,M|Σ Γ_ij σ₊^(i)σ₋^(j)|J,M⟩.
    pub gamma_m: Vec<f64>,
    /// Γ_{M→M−1}.
    pub ladder: Vec<f64>,
    /// γ_{M→α} = Γ_M − Γ_{M→M−1}.
    pub leak: Vec<f64>,
    /// γ_{α→M−1} = ⟨J,M−1|Σ Γ_ij σ₋^(i)σ₊^(j)|J,M−1⟩ − Γ_{M→M−1}.
    pub feed: Vec<f64>,
    /// Γ₁ in the units of the other fields.
    pub gamma1: f64,
}

impl DickeLadderRates {
    /// Ladder rates from the top, k = N..1, in units of Γ₁.
    pub fn ladder_over_gamma1(&self) -> Vec<f64> {
        (1..=self.n_emitters).rev().map(|k| self.ladder[k] / self.gamma1).collect()
    }

    pub fn min_leak(&self) -> f64 {
        self.leak[1..].iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn expectation(ops: &OperatorSet, gamma: &DMatrix<f64>, v: &DVector<f64>, raise_first: bool) -> f64 {
    let ne = ops.n_emitters();
    let mut acc = 0.0;
    for idx in 0..ops.dim() {
        if v[idx] == 0.0 {
            continue;
        }
        for i in 0..ne {
            for j in 0..ne {
                // σ₊^(i)σ₋^(j) or σ₋^(i)σ₊^(j)
                let target = if raise_first {
                    ops.lower(idx, j).and_then(|l| ops.raise(l, i))
                } else {
                    ops.raise(idx, j).and_then(|l| ops.lower(l, i))
                };
                if let Some(t) = target {
                    acc += gamma[(i, j)] * v[t] * v[idx];
                }
            }
        }
    }
    acc
}

/// Γ_M, Γ_{M→M−1}, leak and feed rates for every step of the ladder.
pub fn extended_dicke_rates(rates: &RateMatrices, basis: &DickeBasis) -> Result<DickeLadderRates> {
    let n = basis.n_emitters();
    if rates.n_emitters() != n {
        return Err(Error::Dimension(format!("{} emitters in the rates, {n} in the Dicke basis", rates.n_emitters())));
    }
    let ops = basis.operators();
    let mut out = DickeLadderRates {
        n_emitters: n,
        gamma_m: vec![0.0; n + 1],
        ladder: vec![0.0; n + 1],
        leak: vec![0.0; n + 1],
        feed: vec![0.0; n + 1],
        gamma1: rates.gamma1(),
    };
    for k in 1..=n {
        let upper = basis.state(k);
        let lower = basis.state(k - 1);
        // a_j = ⟨M−1|σ₋^(j)|M⟩; the jump term maps |M⟩⟨M| to Σ Γ_jk a_j a_k
        // on |M−1⟩⟨M−1|
        let a: Vec<f64> = (0..n)
            .map(|site| (0..ops.dim()).filter_map(|idx| ops.lower(idx, site).map(|l| lower[l] * upper[idx])).sum())
            .collect();
        let mut ladder = 0.0;
        for i in 0..n {
            for j in 0..n {
                ladder += rates.gamma[(i, j)] * a[i] * a[j];
            }
        }
        out.gamma_m[k] = expectation(ops, &rates.gamma, upper, true);
        out.ladder[k] = ladder;
        out.leak[k] = out.gamma_m[k] - ladder;
        out.feed[k] = expectation(ops, &rates.gamma, lower, false) - ladder;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::liouvillian::build_liouvillian;
    use crate::lindblad::liouvillian::tests::rates_from;
    use crate::lindblad::operators::build_operators;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn top_state_is_fully_excited() {
        let ops = build_operators(4).unwrap();
        let b = DickeBasis::new(&ops);
        let top = dicke_state(&b, 2.0).unwrap();
        assert_eq!(top[0], 1.0);
        assert!((top.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_emitter_middle_state_is_symmetric() {
        let ops = build_operators(2).unwrap();
        let s = dicke_state(&DickeBasis::new(&ops), 0.0).unwrap();
        let h = 0.5f64.sqrt();
        assert!((s[ops.index(0b10)] - h).abs() < 1e-15);
        assert!((s[ops.index(0b01)] - h).abs() < 1e-15);
    }

    #[test]
    fn coefficients_follow_the_factorial_formula() {
        for n in 1..=6 {
            let ops = build_operators(n).unwrap();
            let b = DickeBasis::new(&ops);
            for k in 0..=n {
                let c = 1.0 / binomial(n, n - k).sqrt();
                let v = b.state(k);
                for idx in 0..ops.dim() {
                    let expect = if ops.excitation(idx) == k { c } else { 0.0 };
                    assert!((v[idx] - expect).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let ops = build_operators(5).unwrap();
        let b = DickeBasis::new(&ops);
        for k in 0..=5 {
            for l in 0..=5 {
                let d = b.state(k).dot(b.state(l));
                assert!((d - if k == l { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn out_of_range_m_is_rejected() {
        let b = DickeBasis::new(&build_operators(3).unwrap());
        assert!(dicke_state(&b, 2.5).is_err());
        assert!(dicke_state(&b, 1.0).is_err());
        assert!(dicke_state(&b, -1.5).is_ok());
    }

    #[test]
    fn ideal_sequence_for_six() {
        let r: Vec<f64> = (1..=6).rev().map(|k| ideal_rate(6, k)).collect();
        assert_eq!(r, vec![6.0, 10.0, 12.0, 12.0, 10.0, 6.0]);
    }

    #[test]
    fn single_emitter_cascade_is_exponential() {
        let c = ideal_cascade(1, 1.5, &[0.0, 0.3, 1.0]).unwrap();
        for (i, t) in c.times.iter().enumerate() {
            assert!((c.populations[i][1] - (-1.5 * t).exp()).abs() < 1e-14);
            assert!((c.w[i] - 1.5 * (-1.5 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn cascade_conserves_probability() {
        let c = ideal_cascade(6, 1.0, &[0.0, 0.05, 0.2, 1.0, 4.0]).unwrap();
        for p in &c.populations {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((c.w[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_rates_give_a_leak_free_ladder() {
        let ops = build_operators(6).unwrap();
        let b = DickeBasis::new(&ops);
        let r = rates_from(DMatrix::from_element(6, 6, 1.0), DMatrix::zeros(6, 6));
        let l = extended_dicke_rates(&r, &b).unwrap();
        let expect = [6.0, 10.0, 12.0, 12.0, 10.0, 6.0];
        for (a, e) in l.ladder_over_gamma1().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }
        for k in 1..=6 {
            assert!(l.leak[k].abs() < 1e-12);
            assert!((l.gamma_m[k] - ideal_rate(6, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn outflow_of_a_dicke_projector_sums_to_its_rate() {
        let ops = build_operators(4).unwrap();
        let b = DickeBasis::new(&ops);
        let gamma = DMatrix::from_row_slice(4, 4, &[1.0, 0.6, -0.2, 0.3, 0.6, 1.0, 0.5, -0.1, -0.2, 0.5, 1.0, 0.4, 0.3, -0.1, 0.4, 1.0]);
        let r = rates_from(gamma, DMatrix::zeros(4, 4));
        let ladder = extended_dicke_rates(&r, &b).unwrap();
        let l = build_liouvillian(&r, &ops).unwrap();
        for k in 1..=4 {
            let v = b.state(k);
            let rho = DMatrix::from_fn(ops.dim(), ops.dim(), |n, m| Complex64::new(v[n] * v[m], 0.0));
            let drho = l.apply(&rho).unwrap();
            let lower = ops.sector(k - 1);
            let outflow: f64 = lower.iter().map(|&i| drho[(i, i)].re).sum();
            assert!((outflow - ladder.gamma_m[k]).abs() < 1e-9);
            let w = b.state(k - 1);
            let onto: Complex64 = (0..ops.dim()).flat_map(|n| (0..ops.dim()).map(move |m| (n, m))).map(|(n, m)| drho[(n, m)] * w[n] * w[m]).sum();
            assert!((onto.re - ladder.ladder[k]).abs() < 1e-12);
            assert!(ladder.leak[k] >= -1e-9);
        }
    }
}
