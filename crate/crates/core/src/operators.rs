//! Sparse operators for the bath, the two-level system and the composite
//! space.
//!
//! Conventions used throughout the crate:
//!
//! * spin basis order is `(|↑⟩, |↓⟩)`, `σ_z = diag(+1, -1)`, `σ_+|↓⟩ = |↑⟩`;
//! * the composite index is spin-major: `spin · dim_B + bath`;
//! * sites are 0-based in code, so the coupling acts on sites 0 and 1.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use core::fmt::{self, Write};

use crate::error::{Error, Result};
use crate::fock_basis::FockBasis;
use crate::prelude::*;

pub const SPIN_UP: usize = 0;
pub const SPIN_DOWN: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisTag {
    Bath,
    System,
    Composite,
}

impl BasisTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BasisTag::Bath => "bath",
            BasisTag::System => "system",
            BasisTag::Composite => "composite",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bath" => Some(BasisTag::Bath),
            "system" => Some(BasisTag::System),
            "composite" => Some(BasisTag::Composite),
            _ => None,
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Model parameters: hopping `j`, on-site interaction `u`, chain of `sites`
/// sites holding `particles` bosons, spin splitting `delta` and coupling
/// `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub j: f64,
    pub u: f64,
    pub sites: usize,
    pub particles: usize,
    pub delta: f64,
    pub epsilon: f64,
}

impl ModelParams {
    /// δ = 0.5, ε = 0.2, J = 1, U = 0.8, L = 7, N = 6.
    pub const REFERENCE: ModelParams =
        ModelParams { j: 1.0, u: 0.8, sites: 7, particles: 6, delta: 0.5, epsilon: 0.2 };

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_u(self, u: f64) -> Self {
        Self { u, ..self }
    }

    pub fn with_size(self, particles: usize, sites: usize) -> Self {
        Self { particles, sites, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("J", self.j), ("U", self.u), ("delta", self.delta), ("epsilon", self.epsilon)] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.sites == 0 {
            return Err(Error::InvalidArgument("L must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// Operator stored as `(row, col, value)` triplets, sorted by `(row, col)`
/// with duplicates merged and exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    triplets: Vec<(usize, usize, Complex64)>,
    tag: BasisTag,
}

impl SparseOperator {
    pub fn from_triplets(
        dim: usize,
        tag: BasisTag,
        entries: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in entries {
            if r >= dim || c >= dim {
                return Err(Error::InvalidArgument(format!("entry ({r}, {c}) outside dimension {dim}")));
            }
            *merged.entry((r, c)).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        let triplets = merged.into_iter().filter(|(_, v)| *v != Complex64::new(0.0, 0.0)).map(|((r, c), v)| (r, c, v)).collect();
        Ok(Self { dim, triplets, tag })
    }

    fn from_real(dim: usize, tag: BasisTag, entries: Vec<(usize, usize, f64)>) -> Self {
        Self::from_triplets(dim, tag, entries.into_iter().map(|(r, c, v)| (r, c, Complex64::new(v, 0.0))))
            .expect("indices produced by basis lookup are in range")
    }

    pub fn zero(dim: usize, tag: BasisTag) -> Self {
        Self { dim, triplets: Vec::new(), tag }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn triplets(&self) -> &[(usize, usize, Complex64)] {
        &self.triplets
    }

    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    pub fn adjoint(&self) -> Self {
        let mut t: Vec<_> = self.triplets.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        t.sort_by_key(|&(r, c, _)| (r, c));
        Self { dim: self.dim, triplets: t, tag: self.tag }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_triplets(self.dim, self.tag, self.triplets.iter().map(|&(r, c, v)| (r, c, v * s))).unwrap()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        Self::from_triplets(self.dim, self.tag, self.triplets.iter().chain(other.triplets.iter()).copied())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Exact sparse product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let rows = other.row_ranges();
        let mut out = Vec::new();
        for &(r, k, a) in &self.triplets {
            let (lo, hi) = rows[k];
            for &(_, c, b) in &other.triplets[lo..hi] {
                out.push((r, c, a * b));
            }
        }
        Self::from_triplets(self.dim, self.tag, out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    fn row_ranges(&self) -> Vec<(usize, usize)> {
        let mut ranges = vec![(0, 0); self.dim];
        let mut i = 0;
        for r in 0..self.dim {
            let lo = i;
            while i < self.triplets.len() && self.triplets[i].0 == r {
                i += 1;
            }
            ranges[r] = (lo, i);
        }
        ranges
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.tag != other.tag {
            return Err(Error::InvalidArgument(format!("basis tags differ: {} vs {}", self.tag, other.tag)));
        }
        Ok(())
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        Ok(y)
    }

    /// `y = A x` for a real operator and real vector.
    pub fn apply_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        let mut y = vec![0.0; self.dim];
        for &(r, c, v) in &self.triplets {
            y[r] += v.re * x[c];
        }
        Ok(y)
    }

    /// `⟨x|A|y⟩`.
    pub fn matrix_element(&self, x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
        let ay = self.apply(y)?;
        Ok(crate::linalg::inner(x, &ay))
    }

    pub fn max_imag(&self) -> f64 {
        self.triplets.iter().fold(0.0, |m, &(_, _, v)| m.max(v.im.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.triplets.iter().fold(0.0, |m, &(_, _, v)| m.max(v.norm()))
    }

    /// Largest `|A_rc - conj(A_cr)|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.sub(&self.adjoint()).expect("same space");
        d.max_abs()
    }

    pub fn is_real(&self) -> bool {
        self.max_imag() == 0.0
    }

    pub fn trace(&self) -> Complex64 {
        self.triplets.iter().filter(|(r, c, _)| r == c).map(|&(_, _, v)| v).sum()
    }

    /// Dense real row-major copy. Fails when any entry carries an imaginary
    /// part.
    pub fn to_dense_real(&self) -> Result<Vec<f64>> {
        if !self.is_real() {
            return Err(Error::InvalidArgument("operator has complex entries".into()));
        }
        let mut out = vec![0.0; self.dim * self.dim];
        for &(r, c, v) in &self.triplets {
            out[r * self.dim + c] = v.re;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim * self.dim];
        for &(r, c, v) in &self.triplets {
            out[r * self.dim + c] = v;
        }
        out
    }

    /// Embeds a bath operator as `1_S ⊗ A` in the composite space.
    pub fn embed_bath(&self) -> Result<Self> {
        if self.tag != BasisTag::Bath {
            return Err(Error::InvalidArgument("embed_bath expects a bath operator".into()));
        }
        let d = self.dim;
        let t = [SPIN_UP, SPIN_DOWN]
            .iter()
            .flat_map(|&s| self.triplets.iter().map(move |&(r, c, v)| (s * d + r, s * d + c, v)));
        Self::from_triplets(2 * d, BasisTag::Composite, t)
    }

    /// Embeds a 2×2 system operator as `A ⊗ 1_B` over a bath of dimension
    /// `bath_dim`.
    pub fn embed_system(&self, bath_dim: usize) -> Result<Self> {
        if self.tag != BasisTag::System || self.dim != 2 {
            return Err(Error::InvalidArgument("embed_system expects a 2x2 system operator".into()));
        }
        let t = self
            .triplets
            .iter()
            .flat_map(|&(r, c, v)| (0..bath_dim).map(move |b| (r * bath_dim + b, c * bath_dim + b, v)));
        Self::from_triplets(2 * bath_dim, BasisTag::Composite, t)
    }

    /// Plain-text dump: a header line `# dim <n> basis <tag>` followed by one
    /// `row col re im` line per stored entry.
    pub fn write_triplets<W: Write>(&self, w: &mut W) -> fmt::Result {
        writeln!(w, "# dim {} basis {}", self.dim, self.tag)?;
        for &(r, c, v) in &self.triplets {
            writeln!(w, "{r} {c} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_triplet_string(&self) -> String {
        let mut s = String::new();
        self.write_triplets(&mut s).expect("writing to a String cannot fail");
        s
    }

    pub fn parse_triplets(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::InvalidArgument(format!("malformed triplet line: {line:?}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad(""))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (dim, tag) = match fields.as_slice() {
            ["#", "dim", dim, "basis", tag] => (
                dim.parse::<usize>().map_err(|_| bad(header))?,
                BasisTag::parse(tag).ok_or_else(|| bad(header))?,
            ),
            _ => return Err(bad(header)),
        };
        let mut entries = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            let r = f[0].parse::<usize>().map_err(|_| bad(line))?;
            let c = f[1].parse::<usize>().map_err(|_| bad(line))?;
            let re = f[2].parse::<f64>().map_err(|_| bad(line))?;
            let im = f[3].parse::<f64>().map_err(|_| bad(line))?;
            entries.push((r, c, Complex64::new(re, im)));
        }
        Self::from_triplets(dim, tag, entries)
    }
}

fn check_basis(params: &ModelParams, basis: &FockBasis) -> Result<()> {
    params.validate()?;
    if basis.particles() != params.particles || basis.sites() != params.sites {
        return Err(Error::InvalidArgument(format!(
            "basis is (N={}, L={}) but parameters ask for (N={}, L={})",
            basis.particles(),
            basis.sites(),
            params.particles,
            params.sites
        )));
    }
    Ok(())
}

/// Moves one boson from site `from` to site `to`. Returns the target index
/// and the bosonic amplitude `sqrt(n_from (n_to + 1))`.
fn hop(basis: &FockBasis, state: usize, from: usize, to: usize, scratch: &mut Vec<u32>) -> Option<(usize, f64)> {
    let occ = basis.state(state).occupations();
    let n_from = occ[from];
    if n_from == 0 {
        return None;
    }
    let n_to = occ[to];
    scratch.clear();
    scratch.extend_from_slice(occ);
    scratch[from] -= 1;
    scratch[to] += 1;
    let target = basis.lookup(scratch).expect("hopping conserves the particle number");
    Some((target, (n_from as f64 * (n_to as f64 + 1.0)).sqrt()))
}

/// `H_B = -J/2 Σ_l (a†_{l+1} a_l + h.c.) + U/2 Σ_l n_l (n_l - 1)` with open
/// boundaries.
pub fn build_bath_hamiltonian(params: &ModelParams, basis: &FockBasis) -> Result<SparseOperator> {
    check_basis(params, basis)?;
    let mut entries = Vec::new();
    let mut scratch = Vec::with_capacity(basis.sites());
    for k in 0..basis.dim() {
        let occ = basis.state(k).occupations();
        let diag: f64 = occ.iter().map(|&n| 0.5 * params.u * n as f64 * (n as f64 - 1.0)).sum();
        entries.push((k, k, diag));
        for l in 0..basis.sites().saturating_sub(1) {
            if let Some((target, amp)) = hop(basis, k, l, l + 1, &mut scratch) {
                let v = -0.5 * params.j * amp;
                entries.push((target, k, v));
                entries.push((k, target, v));
            }
        }
    }
    Ok(SparseOperator::from_real(basis.dim(), BasisTag::Bath, entries))
}

/// `H_S = δ σ_z` in the order `(|↑⟩, |↓⟩)`.
pub fn build_system_hamiltonian(delta: f64) -> SparseOperator {
    SparseOperator::from_real(2, BasisTag::System, vec![(SPIN_UP, SPIN_UP, delta), (SPIN_DOWN, SPIN_DOWN, -delta)])
}

/// `H_int = ε (a†_1 a_2 σ_+ + a†_2 a_1 σ_-)` on the composite space.
pub fn build_interaction(params: &ModelParams, basis: &FockBasis) -> Result<SparseOperator> {
    check_basis(params, basis)?;
    if basis.sites() < 2 {
        return Err(Error::InvalidArgument("the coupling needs at least two sites".into()));
    }
    let d = basis.dim();
    let mut entries = Vec::new();
    if params.epsilon != 0.0 {
        let mut scratch = Vec::with_capacity(basis.sites());
        for k in 0..d {
            // Boson tunnels from the second site into the first, spin flips up.
            if let Some((target, amp)) = hop(basis, k, 1, 0, &mut scratch) {
                let row = SPIN_UP * d + target;
                let col = SPIN_DOWN * d + k;
                let v = params.epsilon * amp;
                entries.push((row, col, v));
                entries.push((col, row, v));
            }
        }
    }
    Ok(SparseOperator::from_real(2 * d, BasisTag::Composite, entries))
}

/// `H = H_S ⊗ 1 + 1 ⊗ H_B + H_int`.
pub fn build_total_hamiltonian(params: &ModelParams, basis: &FockBasis) -> Result<SparseOperator> {
    let hb = build_bath_hamiltonian(params, basis)?;
    let hs = build_system_hamiltonian(params.delta);
    let hint = build_interaction(params, basis)?;
    let h = hs.embed_system(basis.dim())?.add(&hb.embed_bath()?)?.add(&hint)?;
    if h.dim() != 2 * basis.dim() {
        return Err(Error::DimensionMismatch { expected: 2 * basis.dim(), found: h.dim() });
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathObservable {
    /// `a†_1 a_2`
    Hop21To1,
    /// `a†_2 a_1`
    Hop1To2,
    /// `a†_1 a_2 · a†_2 a_1`
    HopProduct,
}

impl BathObservable {
    pub fn name(self) -> &'static str {
        match self {
            BathObservable::Hop21To1 => "a1dag_a2",
            BathObservable::Hop1To2 => "a2dag_a1",
            BathObservable::HopProduct => "a1dag_a2_a2dag_a1",
        }
    }
}

impl fmt::Display for BathObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn build_bath_observable(kind: BathObservable, basis: &FockBasis) -> Result<SparseOperator> {
    if basis.sites() < 2 {
        return Err(Error::InvalidArgument("bath observables need at least two sites".into()));
    }
    let hop_op = |from: usize, to: usize| {
        let mut scratch = Vec::with_capacity(basis.sites());
        let entries = (0..basis.dim())
            .filter_map(|k| hop(basis, k, from, to, &mut scratch).map(|(t, amp)| (t, k, amp)))
            .collect();
        SparseOperator::from_real(basis.dim(), BasisTag::Bath, entries)
    };
    match kind {
        BathObservable::Hop21To1 => Ok(hop_op(1, 0)),
        BathObservable::Hop1To2 => Ok(hop_op(0, 1)),
        BathObservable::HopProduct => hop_op(1, 0).mul(&hop_op(0, 1)),
    }
}

/// Total boson number on the composite space. The basis holds a single
/// particle-number sector, so this is `N · 1`.
pub fn number_operator(basis: &FockBasis) -> SparseOperator {
    let d = basis.dim();
    let entries = (0..2 * d)
        .map(|k| {
            let n: u64 = basis.state(k % d).particles();
            (k, k, n as f64)
        })
        .collect();
    SparseOperator::from_real(2 * d, BasisTag::Composite, entries)
}

/// Occupation of one site, embedded in the composite space.
pub fn site_occupation(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    if site >= basis.sites() {
        return Err(Error::InvalidArgument(format!("site {site} outside chain of {}", basis.sites())));
    }
    let entries = (0..basis.dim()).map(|k| (k, k, basis.state(k).occupation(site) as f64)).collect();
    SparseOperator::from_real(basis.dim(), BasisTag::Bath, entries).embed_bath()
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "J={} U={} L={} N={} delta={} epsilon={}",
            self.j, self.u, self.sites, self.particles, self.delta, self.epsilon
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, l: usize, u: f64, eps: f64) -> ModelParams {
        ModelParams { j: 1.0, u, sites: l, particles: n, delta: 0.5, epsilon: eps }
    }

    fn dense(op: &SparseOperator) -> Vec<f64> {
        op.to_dense_real().unwrap()
    }

    #[test]
    fn bath_hamiltonian_small_cases() {
        let b = FockBasis::new(1, 2).unwrap();
        let h = build_bath_hamiltonian(&params(1, 2, 0.8, 0.2), &b).unwrap();
        assert_eq!(dense(&h), vec![0.0, -0.5, -0.5, 0.0]);

        let b = FockBasis::new(2, 1).unwrap();
        let h = build_bath_hamiltonian(&params(2, 1, 0.8, 0.2), &b).unwrap();
        assert_eq!(dense(&h), vec![0.8]);
    }

    #[test]
    fn bath_hamiltonian_two_particles_two_sites() {
        // Basis (2,0), (1,1), (0,2); hopping amplitude (J/2) sqrt(2).
        let b = FockBasis::new(2, 2).unwrap();
        let h = dense(&build_bath_hamiltonian(&params(2, 2, 0.0, 0.0), &b).unwrap());
        let s = -0.5 * 2f64.sqrt();
        let expect = [0.0, s, 0.0, s, 0.0, s, 0.0, s, 0.0];
        for (a, e) in h.iter().zip(expect) {
            assert!((a - e).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let b = FockBasis::new(2, 3).unwrap();
        assert!(build_bath_hamiltonian(&params(3, 3, 0.8, 0.2), &b).is_err());
        assert!(build_total_hamiltonian(&params(2, 4, 0.8, 0.2), &b).is_err());
    }

    #[test]
    fn system_hamiltonian() {
        assert_eq!(dense(&build_system_hamiltonian(0.5)), vec![0.5, 0.0, 0.0, -0.5]);
        assert_eq!(build_system_hamiltonian(0.0).nnz(), 0);
        assert_eq!(dense(&build_system_hamiltonian(1.0)), vec![1.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn interaction_elements() {
        let b = FockBasis::new(1, 2).unwrap();
        let h = build_interaction(&params(1, 2, 0.8, 0.2), &b).unwrap();
        let m = dense(&h);
        // ⟨(1,0)↑| H_int |(0,1)↓⟩: row 0 (up, (1,0)), col 2 + 1 (down, (0,1)).
        assert!((m[3] - 0.2).abs() < 1e-15);
        assert!((m[3 * 4] - 0.2).abs() < 1e-15);
        assert_eq!(h.nnz(), 2);

        let zero = build_interaction(&params(1, 2, 0.8, 0.0), &b).unwrap();
        assert_eq!(zero.nnz(), 0);

        let b1 = FockBasis::new(2, 1).unwrap();
        assert!(build_interaction(&params(2, 1, 0.8, 0.2), &b1).is_err());
    }

    #[test]
    fn composite_is_hermitian_and_real() {
        let b = FockBasis::new(3, 4).unwrap();
        let h = build_total_hamiltonian(&params(3, 4, 0.8, 0.1), &b).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        assert!(h.is_real());
        let hint = build_interaction(&params(3, 4, 0.8, 0.1), &b).unwrap();
        assert_eq!(hint.hermiticity_defect(), 0.0);
    }

    #[test]
    fn zero_coupling_is_block_diagonal() {
        let b = FockBasis::new(2, 3).unwrap();
        let p = params(2, 3, 0.8, 0.0);
        let h = build_total_hamiltonian(&p, &b).unwrap();
        let hb = dense(&build_bath_hamiltonian(&p, &b).unwrap());
        let d = b.dim();
        let m = dense(&h);
        for s in 0..2 {
            let shift = if s == 0 { 0.5 } else { -0.5 };
            for i in 0..d {
                for k in 0..d {
                    let expect = hb[i * d + k] + if i == k { shift } else { 0.0 };
                    assert_eq!(m[(s * d + i) * 2 * d + s * d + k], expect);
                    let other = 1 - s;
                    assert_eq!(m[(s * d + i) * 2 * d + other * d + k], 0.0);
                }
            }
        }
    }

    #[test]
    fn number_conservation() {
        let b = FockBasis::new(3, 4).unwrap();
        let h = build_total_hamiltonian(&params(3, 4, 0.8, 0.3), &b).unwrap();
        assert_eq!(h.commutator(&number_operator(&b)).unwrap().nnz(), 0);
        // n_1 + spin-up projector is not conserved by hopping but is by H_int.
        let hint = build_interaction(&params(3, 4, 0.8, 0.3), &b).unwrap();
        let up = SparseOperator::from_real(2, BasisTag::System, vec![(0, 0, 1.0)]).embed_system(b.dim()).unwrap();
        let q = site_occupation(&b, 0).unwrap().sub(&up).unwrap();
        assert_eq!(hint.commutator(&q).unwrap().nnz(), 0);
    }

    #[test]
    fn hopping_amplitude_rule() {
        let b = FockBasis::new(4, 3).unwrap();
        let p = params(4, 3, 0.3, 0.0);
        let h = build_bath_hamiltonian(&p, &b).unwrap();
        for &(r, c, v) in h.triplets() {
            if r == c {
                continue;
            }
            let (from, to) = (b.state(c).occupations(), b.state(r).occupations());
            let l = (0..3).find(|&l| from[l] != to[l]).unwrap();
            let (src, dst) = if to[l] < from[l] { (l, l + 1) } else { (l + 1, l) };
            let amp = 0.5 * p.j * ((from[src] as f64) * (from[dst] as f64 + 1.0)).sqrt();
            assert!((v.re.abs() - amp).abs() < 1e-15);
        }
    }

    #[test]
    fn observables() {
        let b = FockBasis::new(1, 2).unwrap();
        let a = build_bath_observable(BathObservable::Hop21To1, &b).unwrap();
        assert_eq!(dense(&a), vec![0.0, 1.0, 0.0, 0.0]);
        let p = build_bath_observable(BathObservable::HopProduct, &b).unwrap();
        // n_1 (n_2 + 1) on [(1,0), (0,1)].
        assert_eq!(dense(&p), vec![1.0, 0.0, 0.0, 0.0]);
        let adag = build_bath_observable(BathObservable::Hop1To2, &b).unwrap();
        assert_eq!(adag, a.adjoint());
    }

    #[test]
    fn product_observable_is_number_product() {
        let b = FockBasis::new(3, 4).unwrap();
        let p = build_bath_observable(BathObservable::HopProduct, &b).unwrap();
        assert_eq!(p.hermiticity_defect(), 0.0);
        for &(r, c, v) in p.triplets() {
            assert_eq!(r, c);
            let o = b.state(r).occupations();
            assert!((v.re - o[0] as f64 * (o[1] as f64 + 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn triplet_text_round_trip() {
        let b = FockBasis::new(2, 3).unwrap();
        let h = build_total_hamiltonian(&params(2, 3, 0.8, 0.2), &b).unwrap();
        let text = h.to_triplet_string();
        assert!(text.starts_with("# dim 12 basis composite\n"));
        assert_eq!(SparseOperator::parse_triplets(&text).unwrap(), h);
        assert!(SparseOperator::parse_triplets("# dim x basis bath").is_err());
    }
}
