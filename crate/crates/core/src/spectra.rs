//! Full dense diagonalization and eigenstate selection.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::SparseOperator;
use crate::prelude::*;

/// Largest dimension [`diagonalize`] densifies by default
/// (8192² · 8 bytes ≈ 512 MiB for the matrix alone).
pub const DEFAULT_DIMENSION_CAP: usize = 8192;

/// Eigenvalues in ascending order with the matching orthonormal
/// eigenvectors. `vectors[k * dim + i]` is component `i` of eigenvector `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    dim: usize,
    energies: Vec<f64>,
    vectors: Vec<f64>,
    tag: String,
}

impl EigenSystem {
    /// Reassembles an eigensystem, e.g. from a cache. Only shapes are
    /// checked here; see [`EigenSystem::max_residual`] for content checks.
    pub fn from_parts(dim: usize, energies: Vec<f64>, vectors: Vec<f64>, tag: String) -> Result<Self> {
        if energies.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: energies.len() });
        }
        if vectors.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, found: vectors.len() });
        }
        if energies.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidArgument("energies must be ascending".into()));
        }
        Ok(Self { dim, energies, vectors, tag })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// All eigenvectors, one per row.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn eigenpair(&self, k: usize) -> Eigenpair<'_> {
        Eigenpair { index: k, energy: self.energies[k], vector: self.vector(k) }
    }

    /// Complex copy of eigenvector `k`.
    pub fn state(&self, k: usize) -> Vec<Complex64> {
        self.vector(k).iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    /// Coefficients `⟨k|ψ⟩` of a complex vector in the eigenbasis.
    pub fn project(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: psi.len() });
        }
        Ok((0..self.dim)
            .map(|k| {
                let v = self.vector(k);
                let (mut re, mut im) = (0.0, 0.0);
                for (x, z) in v.iter().zip(psi) {
                    re += x * z.re;
                    im += x * z.im;
                }
                Complex64::new(re, im)
            })
            .collect())
    }

    /// `max_ij |(VᵀV - 1)_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim;
        let gram = linalg::matmul(&self.vectors, &transpose(&self.vectors, n), n, n, n);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[i * n + j] - target).abs());
            }
        }
        worst
    }

    /// `max_k ‖H v_k − E_k v_k‖_∞`.
    pub fn max_residual(&self, op: &SparseOperator) -> Result<f64> {
        let mut worst = 0.0f64;
        for k in 0..self.dim {
            worst = worst.max(self.residual(op, k)?);
        }
        Ok(worst)
    }

    pub fn residual(&self, op: &SparseOperator, k: usize) -> Result<f64> {
        let v = self.vector(k);
        let hv = op.apply_real(v)?;
        Ok(hv.iter().zip(v).map(|(a, b)| (a - self.energies[k] * b).abs()).fold(0.0, f64::max))
    }

    /// Eigenpair whose energy is closest to `target`; ties go to the lower
    /// index. `None` only for an empty system.
    pub fn select_by_energy(&self, target: f64) -> Option<Eigenpair<'_>> {
        select_index(&self.energies, target).map(|k| self.eigenpair(k))
    }

    /// Every eigenpair with `emin <= E <= emax`, ascending.
    pub fn select_window(&self, emin: f64, emax: f64) -> Result<Vec<Eigenpair<'_>>> {
        Ok(window_indices(&self.energies, emin, emax)?.map(|k| self.eigenpair(k)).collect())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Eigenpair<'a> {
    pub index: usize,
    pub energy: f64,
    pub vector: &'a [f64],
}

fn transpose(v: &[f64], n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = v[i * n + j];
        }
    }
    t
}

/// Index of the energy closest to `target`, lower index on ties.
pub fn select_index(energies: &[f64], target: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &e) in energies.iter().enumerate() {
        let d = (e - target).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k)
}

pub fn window_indices(energies: &[f64], emin: f64, emax: f64) -> Result<impl Iterator<Item = usize> + '_> {
    if !(emin <= emax) {
        return Err(Error::InvalidArgument(format!("empty energy window [{emin}, {emax}]")));
    }
    Ok(energies.iter().enumerate().filter(move |(_, &e)| e >= emin && e <= emax).map(|(k, _)| k))
}

#[derive(Debug, Clone, Copy)]
pub struct DiagonalizeOptions {
    pub dimension_cap: usize,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        Self { dimension_cap: DEFAULT_DIMENSION_CAP }
    }
}

/// Full spectrum and eigenvectors of a real-symmetric operator.
pub fn diagonalize(op: &SparseOperator) -> Result<EigenSystem> {
    diagonalize_with(op, DiagonalizeOptions::default())
}

pub fn diagonalize_with(op: &SparseOperator, opts: DiagonalizeOptions) -> Result<EigenSystem> {
    let dense = densify(op, opts)?;
    let eig = linalg::symmetric_eigen(dense, op.dim(), true)?;
    let tag = format!("{}:dim={}", op.tag(), op.dim());
    EigenSystem::from_parts(op.dim(), eig.values, eig.vectors.unwrap_or_default(), tag)
}

/// Eigenvalues only; roughly a third of the cost of [`diagonalize`].
pub fn eigenvalues(op: &SparseOperator) -> Result<Vec<f64>> {
    eigenvalues_with(op, DiagonalizeOptions::default())
}

pub fn eigenvalues_with(op: &SparseOperator, opts: DiagonalizeOptions) -> Result<Vec<f64>> {
    let dense = densify(op, opts)?;
    Ok(linalg::symmetric_eigen(dense, op.dim(), false)?.values)
}

fn densify(op: &SparseOperator, opts: DiagonalizeOptions) -> Result<Vec<f64>> {
    if op.dim() > opts.dimension_cap {
        return Err(Error::DimensionOverCap { dim: op.dim(), cap: opts.dimension_cap });
    }
    if op.hermiticity_defect() != 0.0 {
        return Err(Error::InvalidArgument("operator is not Hermitian".into()));
    }
    op.to_dense_real()
}

/// Normalized histogram over `[lo, hi]` with equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub weights: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.weights.len() as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        let w = self.bin_width();
        (0..self.weights.len()).map(move |i| self.lo + (i as f64 + 0.5) * w)
    }

    pub fn sup_distance(&self, other: &Histogram) -> Result<f64> {
        if self.weights.len() != other.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: other.weights.len() });
        }
        Ok(self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Fraction of levels per bin (weights sum to one) over `[min, max]` of the
/// spectrum.
pub fn density_of_states(energies: &[f64], bins: usize) -> Result<Histogram> {
    let (lo, hi) = energies
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    density_of_states_in(energies, bins, lo, hi)
}

/// Same as [`density_of_states`] over a caller-fixed range, so that two
/// spectra can be compared bin by bin.
pub fn density_of_states_in(energies: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidArgument("at least one bin required".into()));
    }
    if energies.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let mut weights = vec![0.0; bins];
    let width = hi - lo;
    for &e in energies {
        let idx = if width > 0.0 { (((e - lo) / width) * bins as f64) as isize } else { 0 };
        let idx = idx.clamp(0, bins as isize - 1) as usize;
        weights[idx] += 1.0;
    }
    let total = energies.len() as f64;
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Histogram { lo, hi, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_basis::FockBasis;
    use crate::operators::{self, ModelParams};

    #[test]
    fn diagonal_operator() {
        let es = diagonalize(&operators::build_system_hamiltonian(0.5)).unwrap();
        assert_eq!(es.energies(), &[-0.5, 0.5]);
    }

    #[test]
    fn single_particle_two_sites() {
        let p = ModelParams { j: 1.0, u: 0.8, sites: 2, particles: 1, delta: 0.5, epsilon: 0.0 };
        let b = FockBasis::new(1, 2).unwrap();
        let es = diagonalize(&operators::build_bath_hamiltonian(&p, &b).unwrap()).unwrap();
        assert!((es.energy(0) + 0.5).abs() < 1e-14 && (es.energy(1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn two_particles_free_chain() {
        let p = ModelParams { j: 1.0, u: 0.0, sites: 2, particles: 2, delta: 0.5, epsilon: 0.0 };
        let b = FockBasis::new(2, 2).unwrap();
        let es = diagonalize(&operators::build_bath_hamiltonian(&p, &b).unwrap()).unwrap();
        for (e, x) in es.energies().iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - x).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_and_trace() {
        let p = ModelParams::REFERENCE.with_size(3, 5).with_epsilon(0.3);
        let b = FockBasis::new(3, 5).unwrap();
        let h = operators::build_total_hamiltonian(&p, &b).unwrap();
        let es = diagonalize(&h).unwrap();
        assert!(es.orthonormality_defect() < 1e-10);
        assert!(es.max_residual(&h).unwrap() < 1e-8 * h.max_abs());
        let tr: f64 = es.energies().iter().sum();
        assert!((tr - h.trace().re).abs() < 1e-8 * h.trace().re.abs().max(1.0));
    }

    #[test]
    fn zero_coupling_spectrum_is_shifted_union() {
        let p = ModelParams::REFERENCE.with_size(3, 4).with_epsilon(0.0);
        let b = FockBasis::new(3, 4).unwrap();
        let hb = diagonalize(&operators::build_bath_hamiltonian(&p, &b).unwrap()).unwrap();
        let h = eigenvalues(&operators::build_total_hamiltonian(&p, &b).unwrap()).unwrap();
        let mut union: Vec<f64> = hb.energies().iter().flat_map(|e| [e + p.delta, e - p.delta]).collect();
        union.sort_by(f64::total_cmp);
        let err = union.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn selection() {
        let es = EigenSystem::from_parts(3, vec![-1.0, 0.0, 1.0], vec![1., 0., 0., 0., 1., 0., 0., 0., 1.], "t".into()).unwrap();
        assert_eq!(es.select_by_energy(0.1).unwrap().index, 1);
        assert!(es.select_window(10.0, 11.0).unwrap().is_empty());
        assert_eq!(es.select_window(-2.0, 2.0).unwrap().len(), 3);
        assert!(es.select_window(1.0, 0.0).is_err());
        assert_eq!(select_index(&[0.0, 0.0], 0.0), Some(0));
        assert_eq!(select_index(&[], 0.0), None);
    }

    #[test]
    fn cap_is_enforced() {
        let b = FockBasis::new(2, 3).unwrap();
        let h = operators::build_total_hamiltonian(&ModelParams::REFERENCE.with_size(2, 3), &b).unwrap();
        let err = diagonalize_with(&h, DiagonalizeOptions { dimension_cap: 4 }).unwrap_err();
        assert!(matches!(err, Error::DimensionOverCap { dim: 12, cap: 4 }));
    }

    #[test]
    fn histogram() {
        let h = density_of_states(&[1.0], 1).unwrap();
        assert_eq!(h.weights, vec![1.0]);
        let e: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let h = density_of_states(&e, 10).unwrap();
        assert!(h.weights.iter().all(|w| (w - 0.1).abs() < 0.002));
        assert!(density_of_states(&e, 0).is_err());
    }
}
