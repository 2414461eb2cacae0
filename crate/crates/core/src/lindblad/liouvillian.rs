//! Vectorized master equation
//!
//! dρ/dt = −i[H, ρ] + Σ_jk Γ_jk (σ₋^(j) ρ σ₊^(k) − ½{σ₊^(k)σ₋^(j), ρ}),
//! H = −Σ_jk Δ_jk σ₊^(k)σ₋^(j).
//!
//! ρ is vectorized row-major (ρ_nm at n·D + m), so AρB maps to A ⊗ Bᵀ. The
//! generator conserves the excitation difference between ket and bra, which
//! lets the evolution run on the subspace of matrix elements reachable from
//! the initial state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::operators::OperatorSet;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::parallel::map_indices;
use crate::rates::RateMatrices;

const ABSENT: usize = usize::MAX;

/// Set of matrix elements (n, m) the vectorized state is stored on.
#[derive(Debug, Clone)]
pub struct ElementSpace {
    dim: usize,
    pairs: Vec<(usize, usize)>,
    index: Vec<usize>,
}

impl ElementSpace {
    /// All D² elements.
    pub fn full(dim: usize) -> Self {
        Self::from_filter(dim, |_, _| true)
    }

    /// Elements whose ket and bra excitation numbers differ by one of `diffs`.
    pub fn excitation_difference(ops: &OperatorSet, diffs: &[i64]) -> Self {
        Self::from_filter(ops.dim(), |n, m| {
            let d = ops.excitation(n) as i64 - ops.excitation(m) as i64;
            diffs.contains(&d)
        })
    }

    /// Smallest space containing the support of `rho` and closed under the
    /// generator.
    pub fn for_state(ops: &OperatorSet, rho: &DMatrix<Complex64>) -> Self {
        let mut diffs = Vec::new();
        for n in 0..rho.nrows() {
            for m in 0..rho.ncols() {
                if rho[(n, m)] != Complex64::new(0.0, 0.0) {
                    let d = ops.excitation(n) as i64 - ops.excitation(m) as i64;
                    if !diffs.contains(&d) {
                        diffs.push(d);
                    }
                }
            }
        }
        Self::excitation_difference(ops, &diffs)
    }

    fn from_filter(dim: usize, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut pairs = Vec::new();
        let mut index = vec![ABSENT; dim * dim];
        for n in 0..dim {
            for m in 0..dim {
                if keep(n, m) {
                    index[n * dim + m] = pairs.len();
                    pairs.push((n, m));
                }
            }
        }
        Self { dim, pairs, index }
    }

    /// Hilbert-space dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored elements.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, i: usize) -> (usize, usize) {
        self.pairs[i]
    }

    pub fn position(&self, n: usize, m: usize) -> Option<usize> {
        let i = self.index[n * self.dim + m];
        (i != ABSENT).then_some(i)
    }

    pub fn pack(&self, rho: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Dimension(format!("density matrix is {}x{}, expected {d}x{d}", rho.nrows(), rho.ncols(), d = self.dim)));
        }
        for n in 0..self.dim {
            for m in 0..self.dim {
                if self.position(n, m).is_none() && rho[(n, m)] != Complex64::new(0.0, 0.0) {
                    return Err(Error::Dimension(format!("element ({n}, {m}) lies outside the evolution subspace")));
                }
            }
        }
        Ok(self.pairs.iter().map(|&(n, m)| rho[(n, m)]).collect())
    }

    pub fn unpack(&self, v: &[Complex64]) -> DMatrix<Complex64> {
        let mut rho = DMatrix::zeros(self.dim, self.dim);
        for (&(n, m), z) in self.pairs.iter().zip(v) {
            rho[(n, m)] = *z;
        }
        rho
    }
}

#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub space: ElementSpace,
    pub matrix: CsrMatrix,
    /// Largest eigenvalue of Γ, the fastest decay scale of the generator.
    pub max_rate: f64,
    pub n_emitters: usize,
}

fn check_rates(rates: &RateMatrices, ops: &OperatorSet) -> Result<()> {
    let n = ops.n_emitters();
    for m in [&rates.gamma, &rates.delta] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!("rate matrix is {}x{} for {n} emitters", m.nrows(), m.ncols())));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for j in 0..n {
            for k in 0..j {
                if (m[(j, k)] - m[(k, j)]).abs() > 1e-12 * scale {
                    return Err(Error::NotSymmetric(j, k));
                }
            }
        }
    }
    Ok(())
}

/// K = −iH − ½ Σ Γ_jk σ₊^(k)σ₋^(j), stored by column: `cols[n]` lists
/// (a, K_an).
fn effective_generator(rates: &RateMatrices, ops: &OperatorSet) -> Vec<Vec<(usize, Complex64)>> {
    let ne = ops.n_emitters();
    (0..ops.dim())
        .map(|n| {
            let mut col: Vec<(usize, Complex64)> = Vec::new();
            for j in 0..ne {
                for k in 0..ne {
                    let coeff = Complex64::new(-0.5 * rates.gamma[(j, k)], rates.delta[(j, k)]);
                    if coeff == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    if let Some(a) = ops.hop(n, j, k) {
                        match col.iter_mut().find(|(r, _)| *r == a) {
                            Some(slot) => slot.1 += coeff,
                            None => col.push((a, coeff)),
                        }
                    }
                }
            }
            col
        })
        .collect()
}

/// Liouvillian on the full D² element space.
pub fn build_liouvillian(rates: &RateMatrices, ops: &OperatorSet) -> Result<Liouvillian> {
    build_liouvillian_on(rates, ops, ElementSpace::full(ops.dim()))
}

/// Liouvillian restricted to `space`, which must be closed under the
/// generator.
pub fn build_liouvillian_on(rates: &RateMatrices, ops: &OperatorSet, space: ElementSpace) -> Result<Liouvillian> {
    check_rates(rates, ops)?;
    let k = effective_generator(rates, ops);
    let ne = ops.n_emitters();
    let columns = map_indices(space.len(), |c| -> Result<Vec<(usize, usize, Complex64)>> {
        let (n, m) = space.pair(c);
        let mut t = Vec::new();
        let mut push = |a: usize, b: usize, v: Complex64| -> Result<()> {
            let row = space
                .position(a, b)
                .ok_or_else(|| Error::Dimension(format!("element ({a}, {b}) escapes the evolution subspace")))?;
            t.push((row, c, v));
            Ok(())
        };
        // K|n⟩⟨m|
        for &(a, v) in &k[n] {
            push(a, m, v)?;
        }
        // |n⟩⟨m|K†
        for &(b, v) in &k[m] {
            push(n, b, v.conj())?;
        }
        // Σ Γ_jk σ₋^(j)|n⟩⟨m|σ₊^(k)
        for j in 0..ne {
            if let Some(a) = ops.lower(n, j) {
                for kk in 0..ne {
                    let g = rates.gamma[(j, kk)];
                    if g != 0.0 {
                        if let Some(b) = ops.lower(m, kk) {
                            push(a, b, Complex64::new(g, 0.0))?;
                        }
                    }
                }
            }
        }
        Ok(t)
    });
    let mut triplets = Vec::new();
    for col in columns {
        triplets.extend(col?);
    }
    let matrix = CsrMatrix::from_triplets(space.len(), space.len(), triplets);
    let max_rate = SymmetricEigen::new(rates.gamma.clone()).eigenvalues.max().max(0.0);
    Ok(Liouvillian { space, matrix, max_rate, n_emitters: ne })
}

impl Liouvillian {
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        let v = self.space.pack(rho)?;
        Ok(self.space.unpack(&self.matrix.mul_vec(&v)))
    }

    /// max over columns of |Σ_n L_(nn),c|; zero for a trace-preserving
    /// generator.
    pub fn trace_defect(&self) -> f64 {
        let diag: Vec<usize> = (0..self.space.dim()).filter_map(|n| self.space.position(n, n)).collect();
        let mut sums = vec![Complex64::new(0.0, 0.0); self.space.len()];
        for &r in &diag {
            for (c, v) in self.matrix.row(r) {
                sums[c] += v;
            }
        }
        sums.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}
