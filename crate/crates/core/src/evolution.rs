//! Exact unitary evolution through the spectral decomposition of `H`:
//! `ψ(t) = Σ_k e^{-iE_k t} ⟨k|ψ0⟩ |k⟩`.
//!
//! Mixed states are carried as weighted ensembles of pure states; no
//! composite density matrix is ever formed here.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::BasisTag;
use crate::prelude::*;
use crate::spectra::EigenSystem;

const NORM_TOLERANCE: f64 = 1e-10;
const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    tag: BasisTag,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(amplitudes: Vec<Complex64>, tag: BasisTag) -> Result<Self> {
        let norm = linalg::norm2(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, tag })
    }

    /// Rescales to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>, tag: BasisTag) -> Result<Self> {
        let norm = linalg::norm2(&amplitudes);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { amplitudes, tag })
    }

    pub fn from_real(values: &[f64], tag: BasisTag) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect(), tag)
    }

    /// `√p_up |↑⟩ + √(1 − p_up) |↓⟩`.
    pub fn spin(p_up: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_up) {
            return Err(Error::InvalidArgument(format!("spin-up probability {p_up} outside [0, 1]")));
        }
        Self::new(
            vec![Complex64::new(p_up.sqrt(), 0.0), Complex64::new((1.0 - p_up).sqrt(), 0.0)],
            BasisTag::System,
        )
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.amplitudes)
    }

    pub fn overlap(&self, other: &StateVector) -> Complex64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }
}

/// Weighted set of pure states representing `ρ = Σ_j w_j |ψ_j⟩⟨ψ_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    members: Vec<(f64, StateVector)>,
}

impl EnsembleState {
    pub fn new(members: Vec<(f64, StateVector)>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let (dim, tag) = (first.1.dim(), first.1.tag());
        let mut total = 0.0;
        for (w, s) in &members {
            if !(*w > 0.0) {
                return Err(Error::InvalidArgument(format!("ensemble weight {w} is not positive")));
            }
            if s.dim() != dim || s.tag() != tag {
                return Err(Error::DimensionMismatch { expected: dim, found: s.dim() });
            }
            total += w;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { members })
    }

    /// Equal weights over the given states.
    pub fn uniform(states: Vec<StateVector>) -> Result<Self> {
        let w = 1.0 / states.len() as f64;
        Self::new(states.into_iter().map(|s| (w, s)).collect())
    }

    /// Rescales arbitrary positive weights to sum to one.
    pub fn from_unnormalized(members: Vec<(f64, StateVector)>) -> Result<Self> {
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidArgument("ensemble weights must be positive".into()));
        }
        Self::new(members.into_iter().map(|(w, s)| (w / total, s)).collect())
    }

    pub fn pure(state: StateVector) -> Self {
        Self { members: vec![(1.0, state)] }
    }

    pub fn members(&self) -> &[(f64, StateVector)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].1.dim()
    }

    pub fn tag(&self) -> BasisTag {
        self.members[0].1.tag()
    }
}

impl From<StateVector> for EnsembleState {
    fn from(s: StateVector) -> Self {
        Self::pure(s)
    }
}

/// Uniform grid `t0, t0 + dt, …, t0 + steps·dt` (`steps + 1` points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive and finite")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("a time grid needs at least one step".into()));
        }
        Ok(Self { t0, dt, steps })
    }

    /// Grid from `t0` to `t1` inclusive with spacing `dt`; `t1 − t0` must be
    /// an integer multiple of `dt` up to rounding.
    pub fn span(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        let steps = ((t1 - t0) / dt).round();
        if !(steps >= 1.0) {
            return Err(Error::InvalidArgument(format!("empty time span [{t0}, {t1}]")));
        }
        Self::new(t0, dt, steps as usize)
    }

    /// The default grid for reproductions: `t ∈ [0, 200]`, `dt = 1`.
    pub fn reference() -> Self {
        Self { t0: 0.0, dt: 1.0, steps: 200 }
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |k| self.time(k))
    }

    pub fn end(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Composite amplitudes `c[s·dim_B + b] = sys[s] · bath[b]`.
pub fn product_state(sys: &StateVector, bath: &StateVector) -> Result<StateVector> {
    if sys.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: sys.dim() });
    }
    let amplitudes = sys
        .amplitudes()
        .iter()
        .flat_map(|&s| bath.amplitudes().iter().map(move |&b| s * b))
        .collect();
    StateVector::normalized(amplitudes, BasisTag::Composite)
}

/// Precomputed eigenbasis coefficients of a batch of states, ready to be
/// propagated to arbitrary times with one matrix product per time.
pub struct Propagator<'a> {
    es: &'a EigenSystem,
    count: usize,
    // Coefficients stored eigen-index major: [k * count + member].
    coeff_re: Vec<f64>,
    coeff_im: Vec<f64>,
    tag: BasisTag,
}

impl<'a> Propagator<'a> {
    pub fn new(es: &'a EigenSystem, states: &[&StateVector]) -> Result<Self> {
        let n = es.dim();
        let count = states.len();
        let tag = states.first().map_or(BasisTag::Composite, |s| s.tag());
        let mut re = vec![0.0; n * count];
        let mut im = vec![0.0; n * count];
        for (m, s) in states.iter().enumerate() {
            if s.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.dim() });
            }
            for (i, a) in s.amplitudes().iter().enumerate() {
                re[i * count + m] = a.re;
                im[i * count + m] = a.im;
            }
        }
        let coeff_re = linalg::matmul(es.vectors(), &re, n, n, count);
        let coeff_im = linalg::matmul(es.vectors(), &im, n, n, count);
        Ok(Self { es, count, coeff_re, coeff_im, tag })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// States at time `t`, in input order.
    pub fn at(&self, t: f64) -> Vec<Vec<Complex64>> {
        let n = self.es.dim();
        let m = self.count;
        let mut pre = vec![0.0; n * m];
        let mut pim = vec![0.0; n * m];
        for k in 0..n {
            let (s, c) = (-self.es.energy(k) * t).sin_cos();
            for j in 0..m {
                let (a, b) = (self.coeff_re[k * m + j], self.coeff_im[k * m + j]);
                pre[k * m + j] = c * a - s * b;
                pim[k * m + j] = s * a + c * b;
            }
        }
        let re = linalg::matmul_tn(self.es.vectors(), &pre, n, n, m);
        let im = linalg::matmul_tn(self.es.vectors(), &pim, n, n, m);
        (0..m).map(|j| (0..n).map(|i| Complex64::new(re[i * m + j], im[i * m + j])).collect()).collect()
    }

    pub fn states_at(&self, t: f64) -> Vec<StateVector> {
        self.at(t).into_iter().map(|a| StateVector { amplitudes: a, tag: self.tag }).collect()
    }
}

/// `ψ(t)` at every grid point.
pub fn evolve(es: &EigenSystem, psi0: &StateVector, grid: &TimeGrid) -> Result<Vec<StateVector>> {
    let prop = Propagator::new(es, &[psi0])?;
    Ok(grid.times().map(|t| prop.states_at(t).pop().expect("one member")).collect())
}

/// State at a single time.
pub fn evolve_to(es: &EigenSystem, psi0: &StateVector, t: f64) -> Result<StateVector> {
    let prop = Propagator::new(es, &[psi0])?;
    Ok(prop.states_at(t).pop().expect("one member"))
}

/// Evolves every member independently; weights are carried unchanged.
pub fn evolve_ensemble(es: &EigenSystem, rho0: &EnsembleState, grid: &TimeGrid) -> Result<Vec<EnsembleState>> {
    let prop = ensemble_propagator(es, rho0)?;
    let weights: Vec<f64> = rho0.members().iter().map(|(w, _)| *w).collect();
    Ok(grid
        .times()
        .map(|t| EnsembleState { members: weights.iter().copied().zip(prop.states_at(t)).collect() })
        .collect())
}

pub fn evolve_ensemble_to(es: &EigenSystem, rho0: &EnsembleState, t: f64) -> Result<EnsembleState> {
    let prop = ensemble_propagator(es, rho0)?;
    let weights = rho0.members().iter().map(|(w, _)| *w);
    Ok(EnsembleState { members: weights.zip(prop.states_at(t)).collect() })
}

/// Reusable propagator for an ensemble, for callers that want to sample
/// times lazily instead of holding a whole trajectory in memory.
pub fn ensemble_propagator<'a>(es: &'a EigenSystem, rho0: &EnsembleState) -> Result<Propagator<'a>> {
    let states: Vec<&StateVector> = rho0.members().iter().map(|(_, s)| s).collect();
    Propagator::new(es, &states)
}

impl EnsembleState {
    /// Rebuilds an ensemble with the same weights from evolved states.
    pub fn with_states(&self, states: Vec<StateVector>) -> Result<Self> {
        if states.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: states.len() });
        }
        Ok(Self { members: self.members.iter().map(|(w, _)| *w).zip(states).collect() })
    }
}

/// `⟨ψ|H|ψ⟩` through the eigenbasis.
pub fn energy_expectation(es: &EigenSystem, psi: &StateVector) -> Result<f64> {
    let c = es.project(psi.amplitudes())?;
    Ok(c.iter().zip(es.energies()).map(|(c, e)| c.norm_sqr() * e).sum())
}
