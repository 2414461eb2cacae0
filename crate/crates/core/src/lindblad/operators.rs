//! Two-level operators of N emitters in the product basis.
//!
//! Basis states are bit masks with site j stored in bit N−1−j (1 = excited).
//! They are ordered by excitation number, highest first, and within one
//! excitation number lexicographically with `e` before `g`, so |e…e⟩ is
//! state 0 and |g…g⟩ the last one.

use num_complex::Complex64;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

pub const MAX_EMITTERS: usize = 10;

#[derive(Debug, Clone)]
pub struct OperatorSet {
    n: usize,
    states: Vec<u32>,
    index_of: Vec<usize>,
    lowering: Vec<CsrMatrix>,
}

impl OperatorSet {
    pub fn n_emitters(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Basis state `idx` as a bit mask.
    pub fn state(&self, idx: usize) -> u32 {
        self.states[idx]
    }

    pub fn index(&self, mask: u32) -> usize {
        self.index_of[mask as usize]
    }

    pub fn excitation(&self, idx: usize) -> usize {
        self.states[idx].count_ones() as usize
    }

    fn bit(&self, site: usize) -> u32 {
        1 << (self.n - 1 - site)
    }

    pub fn is_excited(&self, idx: usize, site: usize) -> bool {
        self.states[idx] & self.bit(site) != 0
    }

    /// Index of σ₋^(site)|idx⟩, if nonzero.
    pub fn lower(&self, idx: usize, site: usize) -> Option<usize> {
        let m = self.states[idx];
        let b = self.bit(site);
        (m & b != 0).then(|| self.index(m & !b))
    }

    /// Index of σ₊^(site)|idx⟩, if nonzero.
    pub fn raise(&self, idx: usize, site: usize) -> Option<usize> {
        let m = self.states[idx];
        let b = self.bit(site);
        (m & b == 0).then(|| self.index(m | b))
    }

    /// Index of σ₊^(k)σ₋^(j)|idx⟩, if nonzero.
    pub fn hop(&self, idx: usize, j: usize, k: usize) -> Option<usize> {
        self.lower(idx, j).and_then(|l| self.raise(l, k))
    }

    pub fn lowering(&self, site: usize) -> &CsrMatrix {
        &self.lowering[site]
    }

    pub fn raising(&self, site: usize) -> CsrMatrix {
        self.lowering[site].adjoint()
    }

    /// Ĵ₋ = Σ σ₋^(i).
    pub fn collective_lowering(&self) -> CsrMatrix {
        let mut t = Vec::new();
        for idx in 0..self.dim() {
            for site in 0..self.n {
                if let Some(l) = self.lower(idx, site) {
                    t.push((l, idx, Complex64::new(1.0, 0.0)));
                }
            }
        }
        CsrMatrix::from_triplets(self.dim(), self.dim(), t)
    }

    /// Basis indices with exactly `k` excitations, in basis order.
    pub fn sector(&self, k: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.excitation(i) == k).collect()
    }

    /// Basis state as an `e`/`g` string, site 0 first.
    pub fn label(&self, idx: usize) -> String {
        (0..self.n).map(|s| if self.is_excited(idx, s) { 'e' } else { 'g' }).collect()
    }
}

/// Lowering and raising operators for `n` emitters.
pub fn build_operators(n: usize) -> Result<OperatorSet> {
    if n == 0 || n > MAX_EMITTERS {
        return Err(Error::Parameter {
            name: "n_emitters",
            reason: format!("operator algebra supports 1..={MAX_EMITTERS} emitters, got {n}"),
        });
    }
    let dim = 1usize << n;
    let mut states: Vec<u32> = (0..dim as u32).collect();
    states.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), std::cmp::Reverse(m)));
    let mut index_of = vec![0; dim];
    for (i, &m) in states.iter().enumerate() {
        index_of[m as usize] = i;
    }
    let mut set = OperatorSet { n, states, index_of, lowering: Vec::new() };
    let lowering = (0..n)
        .map(|site| {
            let t = (0..dim)
                .filter_map(|idx| set.lower(idx, site).map(|l| (l, idx, Complex64::new(1.0, 0.0))))
                .collect();
            CsrMatrix::from_triplets(dim, dim, t)
        })
        .collect();
    set.lowering = lowering;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn single_emitter_lowering() {
        let ops = build_operators(1).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]).map(|x| Complex64::new(x, 0.0));
        assert_eq!(ops.lowering(0).to_dense(), expect);
        assert_eq!(ops.label(0), "e");
    }

    #[test]
    fn basis_order_for_three_emitters() {
        let ops = build_operators(3).unwrap();
        let labels: Vec<String> = (0..8).map(|i| ops.label(i)).collect();
        assert_eq!(labels, ["eee", "eeg", "ege", "gee", "egg", "geg", "gge", "ggg"]);
        let two: Vec<String> = ops.sector(2).into_iter().map(|i| ops.label(i)).collect();
        assert_eq!(two, ["eeg", "ege", "gee"]);
    }

    #[test]
    fn algebra_invariants() {
        let ops = build_operators(4).unwrap();
        for i in 0..4 {
            let sm = ops.lowering(i).to_dense();
            let sp = ops.raising(i).to_dense();
            assert_eq!(sp, sm.adjoint());
            assert_eq!((&sm * &sm).camax(), 0.0);
            for j in 0..4 {
                if i != j {
                    let sj = ops.lowering(j).to_dense();
                    let spj = ops.raising(j).to_dense();
                    assert_eq!((&sm * &sj - &sj * &sm).camax(), 0.0);
                    assert_eq!((&sp * &spj - &spj * &sp).camax(), 0.0);
                }
            }
        }
    }

    #[test]
    fn collective_lowering_norm() {
        for n in 1..=6 {
            let ops = build_operators(n).unwrap();
            let mut top = vec![Complex64::new(0.0, 0.0); ops.dim()];
            top[0] = Complex64::new(1.0, 0.0);
            let v = ops.collective_lowering().mul_vec(&top);
            let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert_eq!(norm2, n as f64);
        }
    }

    #[test]
    fn resource_guard() {
        assert!(build_operators(0).is_err());
        assert!(build_operators(11).is_err());
        assert_eq!(build_operators(10).unwrap().dim(), 1024);
    }
}
