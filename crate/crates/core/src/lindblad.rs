//! Two-level Lindblad master equation
//! `dρ/dt = −i[H_S, ρ] − Σ_n (γ_n/2)(ρV†V − 2VρV† + V†Vρ)`,
//! log-linear decay fits, and the ε² scaling of the exact coherence decay.

use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::evolution::{product_state, EnsembleState, StateVector, TimeGrid};
use crate::fock_basis::FockBasis;
use crate::linalg;
use crate::operators::{self, BasisTag, ModelParams};
use crate::prelude::*;
use crate::reduced::{self, ReducedSystemMatrix};
use crate::spectra::{self, EigenSystem};

pub type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `σ₊ = |↑⟩⟨↓|` in the `(↑, ↓)` order.
pub const SIGMA_PLUS: Matrix2 = [[ZERO, ONE], [ZERO, ZERO]];
pub const SIGMA_MINUS: Matrix2 = [[ZERO, ZERO], [ONE, ZERO]];

fn mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut c = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn adjoint(a: &Matrix2) -> Matrix2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

fn axpy(y: &mut Matrix2, alpha: Complex64, x: &Matrix2) {
    for i in 0..2 {
        for j in 0..2 {
            y[i][j] += alpha * x[i][j];
        }
    }
}

fn norm1(a: &Matrix2) -> f64 {
    a.iter().flatten().map(|z| z.norm()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub gamma: f64,
    pub op: Matrix2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    h: Matrix2,
    channels: Vec<Channel>,
}

impl LindbladModel {
    pub fn new(h: Matrix2, channels: Vec<Channel>) -> Result<Self> {
        if norm1(&{
            let mut d = h;
            axpy(&mut d, -ONE, &adjoint(&h));
            d
        }) > 1e-12
        {
            return Err(Error::InvalidArgument("H_S must be Hermitian".into()));
        }
        if let Some(c) = channels.iter().find(|c| !(c.gamma >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative relaxation rate {}", c.gamma)));
        }
        Ok(Self { h, channels })
    }

    /// `H_S = δσ_z` with `V₁ = σ₋`, `V₂ = σ₊` at the common rate `γ`; the
    /// coherence then decays as `e^{−γt}`.
    pub fn high_temperature(delta: f64, gamma: f64) -> Result<Self> {
        let d = Complex64::new(delta, 0.0);
        Self::new(
            [[d, ZERO], [ZERO, -d]],
            vec![Channel { gamma, op: SIGMA_MINUS }, Channel { gamma, op: SIGMA_PLUS }],
        )
    }

    pub fn hamiltonian(&self) -> &Matrix2 {
        &self.h
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn generator(&self, rho: &Matrix2) -> Matrix2 {
        let mi = Complex64::new(0.0, -1.0);
        let mut out = [[ZERO; 2]; 2];
        axpy(&mut out, mi, &mul(&self.h, rho));
        axpy(&mut out, -mi, &mul(rho, &self.h));
        for c in &self.channels {
            let vd = adjoint(&c.op);
            let vdv = mul(&vd, &c.op);
            let g = Complex64::new(c.gamma / 2.0, 0.0);
            axpy(&mut out, -g, &mul(rho, &vdv));
            axpy(&mut out, -g, &mul(&vdv, rho));
            axpy(&mut out, g * 2.0, &mul(&mul(&c.op, rho), &vd));
        }
        out
    }

    /// Crude bound on the generator norm, used to pick the first step size.
    fn scale(&self) -> f64 {
        2.0 * norm1(&self.h) + self.channels.iter().map(|c| 2.0 * c.gamma * norm1(&c.op).powi(2)).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    /// Largest admissible change of any entry when the step is halved.
    pub tolerance: f64,
    pub max_doublings: usize,
    /// Eigenvalues below `−positivity_tolerance` are an error.
    pub positivity_tolerance: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_doublings: 16, positivity_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladRun {
    pub states: Vec<ReducedSystemMatrix>,
    /// RK4 substeps per grid interval that passed the halving check.
    pub substeps: usize,
}

fn rk4_run(model: &LindbladModel, rho0: &Matrix2, grid: &TimeGrid, substeps: usize) -> Vec<Matrix2> {
    let h = grid.dt / substeps as f64;
    let hc = Complex64::new(h, 0.0);
    let mut rho = *rho0;
    let mut out = Vec::with_capacity(grid.len());
    out.push(rho);
    for _ in 1..grid.len() {
        for _ in 0..substeps {
            let k1 = model.generator(&rho);
            let mut tmp = rho;
            axpy(&mut tmp, hc * 0.5, &k1);
            let k2 = model.generator(&tmp);
            tmp = rho;
            axpy(&mut tmp, hc * 0.5, &k2);
            let k3 = model.generator(&tmp);
            tmp = rho;
            axpy(&mut tmp, hc, &k3);
            let k4 = model.generator(&tmp);
            axpy(&mut rho, hc / 6.0, &k1);
            axpy(&mut rho, hc / 3.0, &k2);
            axpy(&mut rho, hc / 3.0, &k3);
            axpy(&mut rho, hc / 6.0, &k4);
        }
        out.push(rho);
    }
    out
}

fn max_diff(a: &[Matrix2], b: &[Matrix2]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().flatten().zip(y.iter().flatten()).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

/// Fixed-step RK4 on `grid`. The substep count starts from the generator
/// scale and doubles until halving the step moves no entry by more than
/// the tolerance; every output state is then checked for positivity.
pub fn integrate_lindblad_with(
    model: &LindbladModel,
    rho0: &ReducedSystemMatrix,
    grid: &TimeGrid,
    opts: IntegrationOptions,
) -> Result<LindbladRun> {
    let mut substeps = ((grid.dt * model.scale() / 0.5).ceil() as usize).max(1);
    let mut coarse = rk4_run(model, &rho0.entries, grid, substeps);
    let mut last = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        let fine = rk4_run(model, &rho0.entries, grid, 2 * substeps);
        last = max_diff(&coarse, &fine);
        substeps *= 2;
        coarse = fine;
        if last < opts.tolerance {
            let states: Vec<ReducedSystemMatrix> = coarse.into_iter().map(ReducedSystemMatrix::new).collect();
            for s in &states {
                let lo = s.eigenvalues()[0];
                if lo < -opts.positivity_tolerance {
                    return Err(Error::PositivityViolated(lo));
                }
            }
            return Ok(LindbladRun { states, substeps });
        }
    }
    Err(Error::StepSizeNotConverged(last))
}

pub fn integrate_lindblad(
    model: &LindbladModel,
    rho0: &ReducedSystemMatrix,
    grid: &TimeGrid,
) -> Result<Vec<ReducedSystemMatrix>> {
    Ok(integrate_lindblad_with(model, rho0, grid, IntegrationOptions::default())?.states)
}

/// `series ≈ amplitude · e^{−rate·t}` over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    /// RMS residual of the fit to `ln(series)`.
    pub goodness: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (-self.rate * t).exp()
    }
}

/// Least-squares line through `ln(values)` for times inside `window`.
pub fn fit_decay(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, _)| **t >= window.0 && **t <= window.1).map(|(t, v)| (*t, *v)).collect();
    if pts.len() < 3 {
        return Err(Error::NoExponentialRegime(format!("only {} samples in the fit window", pts.len())));
    }
    if let Some(p) = pts.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::NoExponentialRegime(format!("non-positive value {} at t = {}", p.1, p.0)));
    }
    let design: Vec<f64> = pts.iter().flat_map(|p| [1.0, p.0]).collect();
    let rhs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let coef = linalg::least_squares(&design, &rhs, pts.len(), 2)?;
    let rate = -coef[1];
    let span = pts[pts.len() - 1].0 - pts[0].0;
    if !(rate * span > 1e-6) {
        return Err(Error::NoExponentialRegime(format!("series does not decay (rate {rate:e})")));
    }
    let goodness =
        (pts.iter().map(|p| (p.1.ln() - coef[0] - coef[1] * p.0).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok(DecayFit { rate, amplitude: coef[0].exp(), goodness, window, points: pts.len() })
}

/// Lindblad run at a fitted rate against an exact `ρ_S(t)` series.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladComparison {
    pub lindblad: Vec<ReducedSystemMatrix>,
    /// `max_t ||ρ_ud^L| − |ρ_ud^exact|| / max_t |ρ_ud^exact|`.
    pub sup_relative: f64,
}

/// Starts the high-temperature model at the exact `ρ_S(0)` with `gamma`
/// and compares coherence magnitudes on `grid`.
pub fn compare_with_exact(
    exact: &[ReducedSystemMatrix],
    grid: &TimeGrid,
    delta: f64,
    gamma: f64,
) -> Result<LindbladComparison> {
    if exact.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: exact.len() });
    }
    let model = LindbladModel::high_temperature(delta, gamma)?;
    let lindblad = integrate_lindblad(&model, &exact[0], grid)?;
    let scale = exact.iter().map(|r| r.coherence().norm()).fold(0.0, f64::max);
    let dev = lindblad
        .iter()
        .zip(exact)
        .map(|(l, e)| (l.coherence().norm() - e.coherence().norm()).abs())
        .fold(0.0, f64::max);
    Ok(LindbladComparison { lindblad, sup_relative: dev / scale })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingOptions {
    /// Fit window and sampling step at the reference coupling; both scale
    /// as `(reference_epsilon / ε)²`.
    pub reference_epsilon: f64,
    pub window: (f64, f64),
    pub dt: f64,
    /// Initial spin population `|⟨↑|ψ⟩|²`.
    pub spin_up: f64,
    /// Bath eigenstates in this energy window form the initial ensemble.
    pub bath_window: (f64, f64),
    pub spread_limit: f64,
    pub goodness_limit: f64,
    pub dimension_cap: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            reference_epsilon: 0.2,
            window: (0.0, 40.0),
            dt: 0.5,
            spin_up: 0.7,
            bath_window: (2.45, 3.21),
            spread_limit: 0.25,
            goodness_limit: 0.25,
            dimension_cap: spectra::DEFAULT_DIMENSION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalingFlag {
    /// ε = 0: the coherence does not decay; rate reported as zero.
    NoDecay,
    FitFailed(String),
    PoorFit,
    /// `rate/ε²` deviates from the mean beyond the spread limit.
    Deviates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub epsilon: f64,
    pub rate: f64,
    pub rate_over_eps2: Option<f64>,
    pub fit: Option<DecayFit>,
    pub flags: Vec<ScalingFlag>,
    pub times: Vec<f64>,
    pub exact: Vec<ReducedSystemMatrix>,
}

impl ScalingRow {
    pub fn coherence(&self) -> Vec<f64> {
        self.exact.iter().map(|r| r.coherence().norm()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// `(max − min)/mean` of `rate/ε²` over rows with a successful fit.
    pub relative_spread: f64,
}

impl ScalingTable {
    pub fn within_limit(&self, limit: f64) -> bool {
        self.relative_spread <= limit
    }

    pub fn rate(&self, epsilon: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.epsilon - epsilon).abs() < 1e-12).filter(|r| r.fit.is_some()).map(|r| r.rate)
    }
}

/// The initial ensemble `ψ ⊗ Ψ_j` over bath eigenstates in `window`.
pub fn product_ensemble(bath_es: &EigenSystem, spin: &StateVector, window: (f64, f64)) -> Result<EnsembleState> {
    let members = spectra::window_indices(bath_es.energies(), window.0, window.1)?
        .map(|k| product_state(spin, &StateVector::from_real(bath_es.vector(k), BasisTag::Bath)?))
        .collect::<Result<Vec<_>>>()?;
    EnsembleState::uniform(members)
}

/// Exact ensemble dynamics per ε, log-linear fits of `|ρ_ud(t)|` and the
/// `rate/ε²` table. Failed fits are reported as flags on their rows.
pub fn epsilon_scaling_check(params: &ModelParams, eps_list: &[f64], opts: &ScalingOptions) -> Result<ScalingTable> {
    params.validate()?;
    let basis = FockBasis::new(params.particles, params.sites)?;
    let dopts = spectra::DiagonalizeOptions { dimension_cap: opts.dimension_cap };
    let bath_es = spectra::diagonalize_with(&operators::build_bath_hamiltonian(params, &basis)?, dopts)?;
    let ens = product_ensemble(&bath_es, &StateVector::spin(opts.spin_up)?, opts.bath_window)?;
    drop(bath_es);

    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = params.with_epsilon(eps);
        let es = spectra::diagonalize_with(&operators::build_total_hamiltonian(&p, &basis)?, dopts)?;
        rows.push(scaling_row(&es, &ens, eps, opts)?);
    }
    Ok(scaling_table(rows, opts.spread_limit))
}

/// The sampling grid and fit window used for coupling `eps`.
pub fn scaling_grid(eps: f64, opts: &ScalingOptions) -> Result<(TimeGrid, (f64, f64))> {
    let stretch = if eps > 0.0 { (opts.reference_epsilon / eps).powi(2) } else { 1.0 };
    let window = (opts.window.0 * stretch, opts.window.1 * stretch);
    Ok((TimeGrid::span(0.0, window.1, opts.dt * stretch)?, window))
}

/// One row of the scaling table from a composite eigensystem at coupling
/// `eps` and the initial product ensemble.
pub fn scaling_row(es: &EigenSystem, ens: &EnsembleState, eps: f64, opts: &ScalingOptions) -> Result<ScalingRow> {
    let (grid, window) = scaling_grid(eps, opts)?;
    let times: Vec<f64> = grid.times().collect();
    let exact = reduced::system_trajectory(es, ens, &times)?;
    let coherence: Vec<f64> = exact.iter().map(|r| r.coherence().norm()).collect();
    let mut row = ScalingRow { epsilon: eps, rate: 0.0, rate_over_eps2: None, fit: None, flags: Vec::new(), times, exact };
    match fit_decay(&row.times, &coherence, window) {
        Ok(fit) => {
            row.rate = fit.rate;
            if eps > 0.0 {
                row.rate_over_eps2 = Some(fit.rate / (eps * eps));
            }
            if fit.goodness > opts.goodness_limit {
                row.flags.push(ScalingFlag::PoorFit);
            }
            row.fit = Some(fit);
        }
        Err(Error::NoExponentialRegime(_)) if eps == 0.0 => row.flags.push(ScalingFlag::NoDecay),
        Err(e) => row.flags.push(ScalingFlag::FitFailed(format!("{e}"))),
    }
    Ok(row)
}

/// Collects rows, computes the spread of `rate/ε²` and flags outliers.
pub fn scaling_table(mut rows: Vec<ScalingRow>, spread_limit: f64) -> ScalingTable {
    let normalized: Vec<f64> = rows.iter().filter_map(|r| r.rate_over_eps2).collect();
    let relative_spread = if normalized.is_empty() {
        f64::NAN
    } else {
        let mean = normalized.iter().sum::<f64>() / normalized.len() as f64;
        for r in rows.iter_mut() {
            if let Some(v) = r.rate_over_eps2 {
                if ((v - mean) / mean).abs() > spread_limit {
                    r.flags.push(ScalingFlag::Deviates);
                }
            }
        }
        let (lo, hi) = normalized.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        (hi - lo) / mean
    };
    ScalingTable { rows, relative_spread }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rho(p: f64, c: f64) -> ReducedSystemMatrix {
        ReducedSystemMatrix::new([
            [Complex64::new(p, 0.0), Complex64::new(c, 0.0)],
            [Complex64::new(c, 0.0), Complex64::new(1.0 - p, 0.0)],
        ])
    }

    #[test]
    fn no_channels_diagonal_is_stationary() {
        let m = LindbladModel::new([[ONE * 0.5, ZERO], [ZERO, -ONE * 0.5]], Vec::new()).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 30).unwrap();
        let r0 = rho(0.7, 0.0);
        for r in integrate_lindblad(&m, &r0, &grid).unwrap() {
            assert!(r.max_abs_diff(&r0) < 1e-14);
        }
    }

    #[test]
    fn equal_rate_pair_closed_form() {
        let gamma = 0.07;
        let m = LindbladModel::high_temperature(0.5, gamma).unwrap();
        let grid = TimeGrid::new(0.0, 0.5, 100).unwrap();
        let r0 = rho(0.7, 0.21f64.sqrt());
        let run = integrate_lindblad(&m, &r0, &grid).unwrap();
        for (t, r) in grid.times().zip(&run) {
            let c = 0.21f64.sqrt() * (-gamma * t).exp();
            assert!((r.coherence().norm() - c).abs() < 1e-9);
            // Populations relax to ½ at 2γ.
            let p = 0.5 + 0.2 * (-2.0 * gamma * t).exp();
            assert!((r.entries[0][0].re - p).abs() < 1e-9);
            assert!((r.trace().re - 1.0).abs() < 1e-9);
            assert!(r.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn negative_rate_rejected() {
        assert!(LindbladModel::high_temperature(0.5, -0.1).is_err());
    }

    #[test]
    fn fit_recovers_rate() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|t| (-0.1 * t).exp()).collect();
        let fit = fit_decay(&t, &v, (0.0, 50.0)).unwrap();
        assert!((fit.rate - 0.1).abs() < 1e-6);
        assert!(fit.goodness < 1e-10);
    }

    #[test]
    fn constant_series_has_no_regime() {
        let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let v = vec![0.4; 20];
        assert!(matches!(fit_decay(&t, &v, (0.0, 20.0)), Err(Error::NoExponentialRegime(_))));
        let z = vec![0.0; 20];
        assert!(matches!(fit_decay(&t, &z, (0.0, 20.0)), Err(Error::NoExponentialRegime(_))));
    }
}
