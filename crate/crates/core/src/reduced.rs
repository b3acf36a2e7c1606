//! Partial traces of composite states, the entry-wise entanglement measure
//! `G = |R − ρ_S ⊗ ρ_B| / |R|`, von Neumann entropy and the expansion of
//! the bath Schmidt states in the bath energy basis.

use alloc::format;

use crate::error::{Error, Result};
use crate::evolution::{EnsembleState, StateVector};
use crate::linalg;
use crate::operators::BasisTag;
use crate::prelude::*;
use crate::spectra::EigenSystem;

/// Default largest composite dimension for which [`entanglement_g`] will
/// materialize the full density matrix.
pub const DEFAULT_G_CAP: usize = 4096;

/// Eigenvalues of a reduced matrix in `[-CLIP, 0)` are treated as zero.
pub const CLIP: f64 = 1e-10;

/// Borrowed view of a pure state or an ensemble.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Ensemble(&'a EnsembleState),
}

impl<'a> From<&'a StateVector> for StateRef<'a> {
    fn from(s: &'a StateVector) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a EnsembleState> for StateRef<'a> {
    fn from(s: &'a EnsembleState) -> Self {
        StateRef::Ensemble(s)
    }
}

impl<'a> StateRef<'a> {
    pub fn members(&self) -> Vec<(f64, &'a [Complex64])> {
        match *self {
            StateRef::Pure(s) => vec![(1.0, s.amplitudes())],
            StateRef::Ensemble(e) => e.members().iter().map(|(w, s)| (*w, s.amplitudes())).collect(),
        }
    }

    fn tag(&self) -> BasisTag {
        match *self {
            StateRef::Pure(s) => s.tag(),
            StateRef::Ensemble(e) => e.tag(),
        }
    }

    fn dim(&self) -> usize {
        match *self {
            StateRef::Pure(s) => s.dim(),
            StateRef::Ensemble(e) => e.dim(),
        }
    }

    /// Bath dimension of a composite state.
    pub fn bath_dim(&self) -> Result<usize> {
        if self.tag() != BasisTag::Composite || !self.dim().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "expected a composite state with spin-major layout, got {} of dim {}",
                self.tag(),
                self.dim()
            )));
        }
        Ok(self.dim() / 2)
    }
}

/// 2×2 reduced density matrix of the spin, rows/columns `(↑, ↓)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSystemMatrix {
    pub entries: [[Complex64; 2]; 2],
}

impl ReducedSystemMatrix {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn from_pure(amplitudes: [Complex64; 2]) -> Self {
        let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
        for s in 0..2 {
            for t in 0..2 {
                entries[s][t] = amplitudes[s] * amplitudes[t].conj();
            }
        }
        Self { entries }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// `ρ_↑↓`.
    pub fn coherence(&self) -> Complex64 {
        self.entries[0][1]
    }

    pub fn populations(&self) -> [f64; 2] {
        [self.entries[0][0].re, self.entries[1][1].re]
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let e = &self.entries;
        (e[0][1] - e[1][0].conj())
            .norm()
            .max(e[0][0].im.abs())
            .max(e[1][1].im.abs())
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        linalg::hermitian_eigen_2x2(&self.entries).0
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().flatten().map(|x| x.norm_sqr()).sum()
    }

    /// Weights in descending order with their eigenvectors.
    pub fn spectral_decomposition(&self) -> SpectralDecomposition {
        let (vals, vecs) = linalg::hermitian_eigen_2x2(&self.entries);
        SpectralDecomposition {
            weights: vec![vals[1], vals[0]],
            states: vec![vecs[1].to_vec(), vecs[0].to_vec()],
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut e = self.entries;
        e.iter_mut().flatten().for_each(|x| *x *= s);
        Self { entries: e }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Entry-wise absolute sum.
    pub fn abs_sum(&self) -> f64 {
        self.entries.iter().flatten().map(|x| x.norm()).sum()
    }
}

/// Reduced density matrix of the bath, held as `ρ_B = Σ_r x_r x_r†` with
/// (unnormalized) bath vectors `x_r`. The dense matrix is built on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBathMatrix {
    dim: usize,
    factors: Vec<Vec<Complex64>>,
}

impl ReducedBathMatrix {
    /// `ρ_B = |ψ⟩⟨ψ|` for a normalized bath vector.
    pub fn pure(state: &StateVector) -> Self {
        Self { dim: state.dim(), factors: vec![state.amplitudes().to_vec()] }
    }

    /// Builds from weighted bath vectors `Σ_j w_j |ψ_j⟩⟨ψ_j|`.
    pub fn from_ensemble(ensemble: &EnsembleState) -> Self {
        let dim = ensemble.dim();
        let factors = ensemble
            .members()
            .iter()
            .map(|(w, s)| s.amplitudes().iter().map(|a| a * w.sqrt()).collect())
            .collect();
        Self { dim, factors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Vec<Complex64>] {
        &self.factors
    }

    pub fn trace(&self) -> f64 {
        self.factors.iter().map(|x| x.iter().map(|a| a.norm_sqr()).sum::<f64>()).sum()
    }

    pub fn entry(&self, b: usize, bp: usize) -> Complex64 {
        self.factors.iter().map(|x| x[b] * x[bp].conj()).sum()
    }

    /// Dense row-major matrix.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for x in &self.factors {
            for b in 0..n {
                let xb = x[b];
                if xb == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &mut out[b * n..(b + 1) * n];
                for (r, y) in row.iter_mut().zip(x) {
                    *r += xb * y.conj();
                }
            }
        }
        out
    }

    /// `Tr[Λ ρ_B]` for an operator on the bath.
    pub fn expectation(&self, op: &crate::operators::SparseOperator) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in &self.factors {
            acc += op.matrix_element(x, x)?;
        }
        Ok(acc)
    }

    /// Nonzero spectrum through the Gram matrix of the factors. Weights are
    /// descending; eigenvalues at or below `CLIP` are dropped.
    pub fn spectral_decomposition(&self) -> Result<SpectralDecomposition> {
        let r = self.factors.len();
        let mut gram = vec![Complex64::new(0.0, 0.0); r * r];
        for a in 0..r {
            for b in 0..r {
                gram[a * r + b] = linalg::inner(&self.factors[a], &self.factors[b]);
            }
        }
        let (vals, vecs) = linalg::hermitian_eigen(&gram, r, true)?;
        let vecs = vecs.expect("vectors requested");
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for k in (0..r).rev() {
            let w = vals[k];
            if w < -CLIP {
                return Err(Error::NegativeEigenvalue(w));
            }
            if w <= CLIP {
                continue;
            }
            // Φ = X g / sqrt(w), where g solves the Gram problem.
            let mut phi = vec![Complex64::new(0.0, 0.0); self.dim];
            for (x, &g) in self.factors.iter().zip(&vecs[k]) {
                for (p, xi) in phi.iter_mut().zip(x) {
                    *p += g * xi;
                }
            }
            let norm = linalg::norm2(&phi);
            phi.iter_mut().for_each(|p| *p /= norm);
            weights.push(w);
            states.push(phi);
        }
        Ok(SpectralDecomposition { weights, states })
    }

    /// Full spectrum (ascending) of the dense matrix, computed without
    /// reference to the factors. Used to check the Schmidt structure.
    pub fn dense_eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::hermitian_eigen(&self.to_dense(), self.dim, false)?.0)
    }

    /// Dense route to the spectral decomposition; keeps eigenpairs with
    /// weight above `CLIP`.
    pub fn dense_spectral_decomposition(&self) -> Result<SpectralDecomposition> {
        let (vals, vecs) = linalg::hermitian_eigen(&self.to_dense(), self.dim, true)?;
        let vecs = vecs.expect("vectors requested");
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for k in (0..self.dim).rev() {
            if vals[k] < -CLIP {
                return Err(Error::NegativeEigenvalue(vals[k]));
            }
            if vals[k] > CLIP {
                weights.push(vals[k]);
                states.push(vecs[k].clone());
            }
        }
        Ok(SpectralDecomposition { weights, states })
    }
}

/// Weights `w_n` (descending) and the matching orthonormal states.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub weights: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
}

/// `ρ_S = Tr_B R`.
pub fn trace_out_bath<'a>(state: impl Into<StateRef<'a>>) -> Result<ReducedSystemMatrix> {
    let state = state.into();
    let d = state.bath_dim()?;
    let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (w, psi) in state.members() {
        let (up, down) = psi.split_at(d);
        let blocks = [up, down];
        for s in 0..2 {
            for t in s..2 {
                let v: Complex64 = blocks[s].iter().zip(blocks[t]).map(|(a, b)| a * b.conj()).sum();
                entries[s][t] += v * w;
            }
        }
    }
    entries[1][0] = entries[0][1].conj();
    Ok(ReducedSystemMatrix { entries })
}

/// `ρ_B = Tr_S R`.
pub fn trace_out_system<'a>(state: impl Into<StateRef<'a>>) -> Result<ReducedBathMatrix> {
    let state = state.into();
    let d = state.bath_dim()?;
    let mut factors = Vec::new();
    for (w, psi) in state.members() {
        let sw = w.sqrt();
        for block in psi.chunks(d) {
            factors.push(block.iter().map(|a| a * sw).collect());
        }
    }
    Ok(ReducedBathMatrix { dim: d, factors })
}

/// `G = Σ|R − ρ_S ⊗ ρ_B| / Σ|R|` in the product basis, with the composite
/// density matrix materialized. Fails when the composite dimension exceeds
/// `cap`.
pub fn entanglement_g_with_cap<'a>(state: impl Into<StateRef<'a>>, cap: usize) -> Result<f64> {
    let state = state.into();
    let d = state.bath_dim()?;
    let n = 2 * d;
    if n > cap {
        return Err(Error::MemoryCap { dim: n, cap });
    }
    let members = state.members();
    let mut r = vec![Complex64::new(0.0, 0.0); n * n];
    for (w, psi) in &members {
        for i in 0..n {
            let a = psi[i] * *w;
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let row = &mut r[i * n..(i + 1) * n];
            for (x, b) in row.iter_mut().zip(psi.iter()) {
                *x += a * b.conj();
            }
        }
    }
    let rho_s = trace_out_bath(state)?;
    // ρ_B is read straight off R to stay consistent with the materialized
    // matrix.
    let mut rho_b = vec![Complex64::new(0.0, 0.0); d * d];
    for s in 0..2 {
        for b in 0..d {
            for bp in 0..d {
                rho_b[b * d + bp] += r[(s * d + b) * n + s * d + bp];
            }
        }
    }
    let mut diff = 0.0;
    let mut total = 0.0;
    for s in 0..2 {
        for b in 0..d {
            let row = &r[(s * d + b) * n..(s * d + b + 1) * n];
            for t in 0..2 {
                let ps = rho_s.entries[s][t];
                let rb = &rho_b[b * d..(b + 1) * d];
                for (x, y) in row[t * d..(t + 1) * d].iter().zip(rb) {
                    diff += (x - ps * y).norm();
                    total += x.norm();
                }
            }
        }
    }
    Ok(if total > 0.0 { diff / total } else { 0.0 })
}

pub fn entanglement_g<'a>(state: impl Into<StateRef<'a>>) -> Result<f64> {
    entanglement_g_with_cap(state, DEFAULT_G_CAP)
}

/// `S = −Σ w ln w` with `0 ln 0 = 0`. Weights in `[−CLIP, 0)` are clipped;
/// anything more negative is an error.
pub fn entropy(sd: &SpectralDecomposition) -> Result<f64> {
    entropy_of(&sd.weights)
}

pub fn entropy_of(weights: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &w in weights {
        if w < -CLIP {
            return Err(Error::NegativeEigenvalue(w));
        }
        if w > 0.0 {
            s -= w * w.ln();
        }
    }
    Ok(s)
}

/// Schmidt states of `ρ_B` expanded in the bath energy basis:
/// `coefficients[n][j] = ⟨Ψ_j|Φ_n⟩`, `j` ascending in bath energy.
#[derive(Debug, Clone, PartialEq)]
pub struct BathExpansion {
    pub weights: Vec<f64>,
    pub coefficients: Vec<Vec<Complex64>>,
}

impl BathExpansion {
    /// Fraction of `Σ_j |c_j^{(n)}|²` inside the given energy windows.
    pub fn mass_in_windows(&self, n: usize, energies: &[f64], windows: &[(f64, f64)]) -> f64 {
        let c = &self.coefficients[n];
        let total: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        let inside: f64 = c
            .iter()
            .zip(energies)
            .filter(|(_, &e)| windows.iter().any(|&(lo, hi)| e >= lo && e <= hi))
            .map(|(x, _)| x.norm_sqr())
            .sum();
        inside / total
    }
}

pub fn bath_eigenstate_expansion(rho_b: &ReducedBathMatrix, bath_es: &EigenSystem) -> Result<BathExpansion> {
    if rho_b.dim() != bath_es.dim() {
        return Err(Error::DimensionMismatch { expected: bath_es.dim(), found: rho_b.dim() });
    }
    let sd = rho_b.spectral_decomposition()?;
    let coefficients = sd.states.iter().map(|phi| bath_es.project(phi)).collect::<Result<Vec<_>>>()?;
    Ok(BathExpansion { weights: sd.weights, coefficients })
}

/// `ρ_S(t)` of an ensemble evolved under `es`, at many times.
///
/// With `ψ_j(t) = Σ_m c_jm e^{−iE_m t} v_m`, every entry is
/// `ρ_ss'(t) = Σ_mn e^{−iE_m t} Q_mn S^{ss'}_mn e^{iE_n t}` with
/// `Q = Σ_j w_j c_j c_j†` and `S^{ss'}_mn = ⟨v_n^{s'}|v_m^s⟩` over bath
/// indices. Both are built once; the time dependence is then a matrix
/// product, so no composite state is ever reconstructed.
pub fn system_trajectory(es: &EigenSystem, rho0: &EnsembleState, times: &[f64]) -> Result<Vec<ReducedSystemMatrix>> {
    let n = es.dim();
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.dim() });
    }
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("composite dimension {n} is odd")));
    }
    let nb = n / 2;
    let r = rho0.len();
    let mut ar = vec![0.0; n * r];
    let mut ai = vec![0.0; n * r];
    for (j, (w, psi)) in rho0.members().iter().enumerate() {
        let sw = w.sqrt();
        for (i, a) in psi.amplitudes().iter().enumerate() {
            ar[i * r + j] = a.re * sw;
            ai[i * r + j] = a.im * sw;
        }
    }
    let cr = linalg::matmul(es.vectors(), &ar, n, n, r);
    let ci = linalg::matmul(es.vectors(), &ai, n, n, r);
    let cr_t = transpose(&cr, n, r);
    let ci_t = transpose(&ci, n, r);
    let mut q_re = linalg::matmul(&cr, &cr_t, n, r, n);
    linalg::gemm_into(1.0, &ci, false, &ci_t, n, r, n, 1.0, &mut q_re);
    let mut q_im = linalg::matmul(&ci, &cr_t, n, r, n);
    linalg::gemm_into(-1.0, &cr, false, &ci_t, n, r, n, 1.0, &mut q_im);
    drop((cr, ci, cr_t, ci_t));

    // Spin blocks of the eigenvectors, n × nb each, and their transposes.
    let block = |s: usize| -> Vec<f64> {
        let mut b = vec![0.0; n * nb];
        for m in 0..n {
            b[m * nb..(m + 1) * nb].copy_from_slice(&es.vector(m)[s * nb..(s + 1) * nb]);
        }
        b
    };
    let blocks = [block(0), block(1)];
    let blocks_t = [transpose(&blocks[0], n, nb), transpose(&blocks[1], n, nb)];

    let tc = times.len();
    let mut ure = vec![0.0; n * tc];
    let mut uim = vec![0.0; n * tc];
    for m in 0..n {
        for (t, &time) in times.iter().enumerate() {
            let (sn, cs) = (es.energy(m) * time).sin_cos();
            ure[m * tc + t] = cs;
            uim[m * tc + t] = sn;
        }
    }

    let mut out = vec![[[Complex64::new(0.0, 0.0); 2]; 2]; tc];
    for (s, sp) in [(0usize, 0usize), (1, 1), (0, 1)] {
        let overlap = linalg::matmul(&blocks[s], &blocks_t[sp], n, nb, n);
        let k_re: Vec<f64> = q_re.iter().zip(&overlap).map(|(a, b)| a * b).collect();
        let k_im: Vec<f64> = q_im.iter().zip(&overlap).map(|(a, b)| a * b).collect();
        drop(overlap);
        // Y = K · conj(U), with conj(U)_nt = e^{iE_n t}.
        let mut y_re = linalg::matmul(&k_re, &ure, n, n, tc);
        linalg::gemm_into(-1.0, &k_im, false, &uim, n, n, tc, 1.0, &mut y_re);
        let mut y_im = linalg::matmul(&k_re, &uim, n, n, tc);
        linalg::gemm_into(1.0, &k_im, false, &ure, n, n, tc, 1.0, &mut y_im);
        for (t, entry) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                let u = Complex64::new(ure[m * tc + t], -uim[m * tc + t]);
                acc += u * Complex64::new(y_re[m * tc + t], y_im[m * tc + t]);
            }
            entry[s][sp] = acc;
        }
    }
    Ok(out
        .into_iter()
        .map(|mut e| {
            e[0][0].im = 0.0;
            e[1][1].im = 0.0;
            e[1][0] = e[0][1].conj();
            ReducedSystemMatrix { entries: e }
        })
        .collect())
}

fn transpose(v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = v[i * cols + j];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn composite(amps: Vec<Complex64>) -> StateVector {
        StateVector::normalized(amps, BasisTag::Composite).unwrap()
    }

    #[test]
    fn product_state_reduces_to_factors() {
        // (√0.7, √0.3) ⊗ (0.6, 0.8)
        let (a, b) = (0.7f64.sqrt(), 0.3f64.sqrt());
        let psi = composite(vec![c(a * 0.6), c(a * 0.8), c(b * 0.6), c(b * 0.8)]);
        let rho = trace_out_bath(&psi).unwrap();
        assert!((rho.entries[0][0].re - 0.7).abs() < 1e-15);
        assert!((rho.entries[1][1].re - 0.3).abs() < 1e-15);
        assert!((rho.coherence().re - 0.21f64.sqrt()).abs() < 1e-15);
        let rb = trace_out_system(&psi).unwrap();
        let sd = rb.spectral_decomposition().unwrap();
        assert_eq!(sd.weights.len(), 1);
        assert!((sd.weights[0] - 1.0).abs() < 1e-14);
        assert!(entanglement_g(&psi).unwrap() < 1e-15);
        assert!(entropy(&rho.spectral_decomposition()).unwrap() < 1e-7);
    }

    #[test]
    fn bell_like_state() {
        let s = 0.5f64.sqrt();
        let psi = composite(vec![c(s), c(0.0), c(0.0), c(s)]);
        let rho = trace_out_bath(&psi).unwrap();
        assert!((rho.entries[0][0].re - 0.5).abs() < 1e-15);
        assert!(rho.coherence().norm() < 1e-15);
        let ent = entropy(&rho.spectral_decomposition()).unwrap();
        assert!((ent - 2f64.ln()).abs() < 1e-12);
        assert!(entanglement_g(&psi).unwrap() > 0.1);
    }

    #[test]
    fn entropy_edge_cases() {
        assert_eq!(entropy_of(&[1.0, 0.0]).unwrap(), 0.0);
        assert!((entropy_of(&[0.5, 0.5]).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(entropy_of(&[1.0, -5e-11]).unwrap(), 0.0);
        assert!(matches!(entropy_of(&[1.0, -1e-6]), Err(Error::NegativeEigenvalue(_))));
    }

    #[test]
    fn ensemble_bath_trace() {
        let s = 0.5f64.sqrt();
        let a = composite(vec![c(s), c(0.0), c(s), c(0.0)]);
        let b = composite(vec![c(0.0), c(s), c(0.0), c(s)]);
        let ens = EnsembleState::uniform(vec![a, b]).unwrap();
        let rb = trace_out_system(&ens).unwrap();
        assert!((rb.trace() - 1.0).abs() < 1e-15);
        let dense = rb.to_dense();
        assert!((dense[0].re - 0.5).abs() < 1e-15 && (dense[3].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn trajectory_matches_explicit_evolution() {
        use crate::evolution::{evolve_ensemble, product_state, TimeGrid};
        use crate::fock_basis::FockBasis;
        use crate::operators::{self, ModelParams};
        use crate::spectra;
        let p = ModelParams::REFERENCE.with_size(3, 4);
        let b = FockBasis::new(3, 4).unwrap();
        let hb = spectra::diagonalize(&operators::build_bath_hamiltonian(&p, &b).unwrap()).unwrap();
        let es = spectra::diagonalize(&operators::build_total_hamiltonian(&p, &b).unwrap()).unwrap();
        let spin = StateVector::spin(0.7).unwrap();
        let members = [4, 9, 11]
            .iter()
            .map(|&k| product_state(&spin, &StateVector::from_real(hb.vector(k), BasisTag::Bath).unwrap()).unwrap())
            .collect();
        let ens = EnsembleState::uniform(members).unwrap();
        let grid = TimeGrid::new(0.0, 1.7, 12).unwrap();
        let times: Vec<f64> = grid.times().collect();
        let fast = system_trajectory(&es, &ens, &times).unwrap();
        let slow = evolve_ensemble(&es, &ens, &grid).unwrap();
        for (f, s) in fast.iter().zip(&slow) {
            assert!(f.max_abs_diff(&trace_out_bath(s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn g_memory_cap() {
        let psi = composite(vec![c(1.0), c(0.0), c(0.0), c(0.0)]);
        assert!(matches!(entanglement_g_with_cap(&psi, 2), Err(Error::MemoryCap { dim: 4, cap: 2 })));
    }

    #[test]
    fn wrong_layout_is_rejected() {
        let s = StateVector::spin(0.5).unwrap();
        assert!(trace_out_bath(&s).is_err());
        let odd = StateVector::normalized(vec![c(1.0); 3], BasisTag::Composite).unwrap();
        assert!(trace_out_system(&odd).is_err());
    }
}
