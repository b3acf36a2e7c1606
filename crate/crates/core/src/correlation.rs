//! Bath correlation function
//! `α(τ) = Tr_B[e^{−iH_Bτ} A e^{iH_Bτ} A† ρ_B]` with `A = a†_1 a_2`,
//! its spectral form, the statistics of the transition matrix elements
//! `|⟨Ψ_k|A†|Ψ_j⟩|²` against `ΔE = E_k − E_j`, and the Gaussian-envelope
//! correlation time.

use crate::error::{Error, Result};
use crate::evolution::TimeGrid;
use crate::linalg;
use crate::operators::SparseOperator;
use crate::prelude::*;
use crate::reduced::ReducedBathMatrix;
use crate::spectra::EigenSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub taus: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Time at which the bath state was sampled.
    pub t_anchor: f64,
}

impl CorrelationSeries {
    pub fn normalized_modulus(&self) -> Vec<f64> {
        let a0 = self.values.first().map_or(0.0, |v| v.norm());
        self.values.iter().map(|v| v.norm() / a0).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

fn check_operator(bath_es: &EigenSystem, a: &SparseOperator) -> Result<()> {
    if a.dim() != bath_es.dim() {
        return Err(Error::DimensionMismatch { expected: bath_es.dim(), found: a.dim() });
    }
    Ok(())
}

/// `α(τ)` for an arbitrary bath state. `ρ_B` and the dense `A` are rotated
/// into the bath eigenbasis once; each τ then costs one phase-weighted
/// contraction.
pub fn correlation_time_domain(
    bath_es: &EigenSystem,
    a: &SparseOperator,
    rho_b: &ReducedBathMatrix,
    taus: &TimeGrid,
    t_anchor: f64,
) -> Result<CorrelationSeries> {
    check_operator(bath_es, a)?;
    if rho_b.dim() != bath_es.dim() {
        return Err(Error::DimensionMismatch { expected: bath_es.dim(), found: rho_b.dim() });
    }
    let n = bath_es.dim();
    let w = bath_es.vectors();

    // Ã = W A Wᵀ, real.
    let a_dense = a.to_dense_real()?;
    let a_wt = linalg::matmul(&a_dense, &transpose(w, n), n, n, n);
    let a_eig = linalg::matmul(w, &a_wt, n, n, n);

    // ρ̃ = W ρ_B Wᵀ from the factors: X̃ = W X, ρ̃ = X̃ X̃†.
    let r = rho_b.factors().len();
    let mut xr = vec![0.0; n * r];
    let mut xi = vec![0.0; n * r];
    for (c, x) in rho_b.factors().iter().enumerate() {
        for (i, z) in x.iter().enumerate() {
            xr[i * r + c] = z.re;
            xi[i * r + c] = z.im;
        }
    }
    let tr = linalg::matmul(w, &xr, n, n, r);
    let ti = linalg::matmul(w, &xi, n, n, r);
    let (tr_t, ti_t) = (transpose_rect(&tr, n, r), transpose_rect(&ti, n, r));
    let mut rho_re = linalg::matmul(&tr, &tr_t, n, r, n);
    linalg::gemm_into(1.0, &ti, false, &ti_t, n, r, n, 1.0, &mut rho_re);
    let mut rho_im = linalg::matmul(&ti, &tr_t, n, r, n);
    linalg::gemm_into(-1.0, &tr, false, &ti_t, n, r, n, 1.0, &mut rho_im);

    // B = Ãᵀ ρ̃ (Ã real), and weights M_mk = Ã_mk B_km.
    let b_re = linalg::matmul_tn(&a_eig, &rho_re, n, n, n);
    let b_im = linalg::matmul_tn(&a_eig, &rho_im, n, n, n);
    let mut m_re = vec![0.0; n * n];
    let mut m_im = vec![0.0; n * n];
    for m in 0..n {
        for k in 0..n {
            let am = a_eig[m * n + k];
            m_re[m * n + k] = am * b_re[k * n + m];
            m_im[m * n + k] = am * b_im[k * n + m];
        }
    }

    // U = M P with P_kt = e^{iE_k τ_t}; α_t = Σ_m e^{−iE_m τ_t} U_mt.
    let tcount = taus.len();
    let mut p_re = vec![0.0; n * tcount];
    let mut p_im = vec![0.0; n * tcount];
    for k in 0..n {
        for (t, tau) in taus.times().enumerate() {
            let (s, c) = (bath_es.energy(k) * tau).sin_cos();
            p_re[k * tcount + t] = c;
            p_im[k * tcount + t] = s;
        }
    }
    let mut u_re = linalg::matmul(&m_re, &p_re, n, n, tcount);
    linalg::gemm_into(-1.0, &m_im, false, &p_im, n, n, tcount, 1.0, &mut u_re);
    let mut u_im = linalg::matmul(&m_re, &p_im, n, n, tcount);
    linalg::gemm_into(1.0, &m_im, false, &p_re, n, n, tcount, 1.0, &mut u_im);

    let values = taus
        .times()
        .enumerate()
        .map(|(t, _)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                let phase = Complex64::new(p_re[m * tcount + t], -p_im[m * tcount + t]);
                acc += phase * Complex64::new(u_re[m * tcount + t], u_im[m * tcount + t]);
            }
            acc
        })
        .collect();
    Ok(CorrelationSeries { taus: taus.times().collect(), values, t_anchor })
}

/// Squared transition elements `|⟨Ψ_k|A†|Ψ_j⟩|²` for every `k`.
pub fn transition_strengths(bath_es: &EigenSystem, a: &SparseOperator, j: usize) -> Result<Vec<f64>> {
    check_operator(bath_es, a)?;
    if j >= bath_es.dim() {
        return Err(Error::InvalidArgument(alloc::format!("state index {j} out of range")));
    }
    let y = a.adjoint().apply_real(bath_es.vector(j))?;
    Ok((0..bath_es.dim())
        .map(|k| {
            let m: f64 = bath_es.vector(k).iter().zip(&y).map(|(a, b)| a * b).sum();
            m * m
        })
        .collect())
}

/// `α(τ) = Σ_k |⟨Ψ_k|A†|Ψ_j⟩|² e^{i(E_k − E_j)τ}` by direct summation, for
/// the bath prepared in eigenstate `j`.
pub fn correlation_spectral(
    bath_es: &EigenSystem,
    a: &SparseOperator,
    j: usize,
    taus: &TimeGrid,
) -> Result<CorrelationSeries> {
    let strengths = transition_strengths(bath_es, a, j)?;
    let ej = bath_es.energy(j);
    let values = taus
        .times()
        .map(|tau| {
            strengths
                .iter()
                .zip(bath_es.energies())
                .map(|(&s, &e)| {
                    let (sn, cs) = ((e - ej) * tau).sin_cos();
                    Complex64::new(s * cs, s * sn)
                })
                .sum()
        })
        .collect();
    Ok(CorrelationSeries { taus: taus.times().collect(), values, t_anchor: 0.0 })
}

fn transpose(v: &[f64], n: usize) -> Vec<f64> {
    transpose_rect(v, n, n)
}

fn transpose_rect(v: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = v[i * cols + j];
        }
    }
    t
}

/// Gaussian `amplitude · exp(−(x − center)² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub center: f64,
    pub sigma: f64,
    /// RMS residual of the log-space fit.
    pub log_rms: f64,
}

impl GaussianFit {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeOptions {
    /// Fine bins merged into one block before taking the maximum.
    pub block: usize,
    /// Blocks whose maximum falls below this fraction of the largest one
    /// are left out of the fit.
    pub floor: f64,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self { block: 4, floor: 1e-2 }
    }
}

pub const MIN_POPULATED_BINS: usize = 5;

/// Log-space least-squares Gaussian through block maxima of `(x, y)`
/// samples (`x` ascending). Blocks are consecutive runs of `block` samples;
/// each contributes its largest positive `y` at that sample's `x`.
pub fn fit_gaussian_envelope(x: &[f64], y: &[f64], opts: EnvelopeOptions) -> Result<GaussianFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    let block = opts.block.max(1);
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (cx, cy) in x.chunks(block).zip(y.chunks(block)) {
        let best = cx.iter().zip(cy).filter(|(_, &v)| v > 0.0).max_by(|a, b| a.1.total_cmp(b.1));
        if let Some((&bx, &by)) = best {
            points.push((bx, by));
        }
    }
    let peak = points.iter().fold(0.0f64, |m, p| m.max(p.1));
    points.retain(|p| p.1 >= opts.floor * peak);
    if points.len() < MIN_POPULATED_BINS {
        return Err(Error::InsufficientBins { populated: points.len(), required: MIN_POPULATED_BINS });
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
    let scale_x = points.iter().fold(0.0f64, |m, p| m.max((p.0 - mean_x).abs())).max(f64::MIN_POSITIVE);
    let design: Vec<f64> = points
        .iter()
        .flat_map(|p| {
            let z = (p.0 - mean_x) / scale_x;
            [1.0, z, z * z]
        })
        .collect();
    let rhs: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let coef = linalg::least_squares(&design, &rhs, points.len(), 3)?;
    let (c0, c1, c2) = (coef[0], coef[1] / scale_x, coef[2] / (scale_x * scale_x));
    if !(c2 < 0.0) {
        return Err(Error::RegularBath);
    }
    let center = mean_x - c1 / (2.0 * c2);
    let sigma = (-1.0 / (2.0 * c2)).sqrt();
    let log_amp = c0 - c1 * c1 / (4.0 * c2);
    let log_rms = (points
        .iter()
        .map(|p| {
            let z = p.0 - center;
            let model = log_amp - z * z / (2.0 * sigma * sigma);
            (p.1.ln() - model).powi(2)
        })
        .sum::<f64>()
        / points.len() as f64)
        .sqrt();
    Ok(GaussianFit { amplitude: log_amp.exp(), center, sigma, log_rms })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixElementStats {
    pub bin_centers: Vec<f64>,
    /// Mean `|⟨Ψ_k|A†|Ψ_j⟩|²` per bin, zero for empty bins.
    pub v: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit: GaussianFit,
    /// `√2 / σ`, the decay time of the Fourier transform of the envelope.
    pub tau_star: f64,
}

/// Averages `values` into bins of width `bin_width` centred on multiples of
/// `bin_width`, spanning the data range.
pub fn bin_pairs(pairs: &[(f64, f64)], bin_width: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InsufficientBins { populated: 0, required: MIN_POPULATED_BINS });
    }
    let idx = |x: f64| (x / bin_width).round() as i64;
    let lo = pairs.iter().map(|p| idx(p.0)).min().unwrap();
    let hi = pairs.iter().map(|p| idx(p.0)).max().unwrap();
    let nbins = (hi - lo + 1) as usize;
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for &(x, v) in pairs {
        let b = (idx(x) - lo) as usize;
        sums[b] += v;
        counts[b] += 1;
    }
    let centers = (0..nbins).map(|b| (lo + b as i64) as f64 * bin_width).collect();
    let means = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    Ok((centers, means, counts))
}

/// Default `ΔE` bin width: the spectral range over 200.
pub fn default_bin_width(bath_es: &EigenSystem) -> f64 {
    let e = bath_es.energies();
    (e[e.len() - 1] - e[0]) / 200.0
}

/// `(E_k − E_j, |⟨Ψ_k|A†|Ψ_j⟩|²)` for every `j` in `j_set` and `k ≠ j`.
/// The diagonal term sits at `ΔE = 0` for every `j` and is left out.
pub fn transition_pairs(bath_es: &EigenSystem, a: &SparseOperator, j_set: &[usize]) -> Result<Vec<(f64, f64)>> {
    if j_set.is_empty() {
        return Err(Error::InvalidArgument("need at least one initial state".into()));
    }
    let mut pairs = Vec::with_capacity(j_set.len() * bath_es.dim());
    for &j in j_set {
        let strengths = transition_strengths(bath_es, a, j)?;
        let ej = bath_es.energy(j);
        for (k, (&s, &e)) in strengths.iter().zip(bath_es.energies()).enumerate() {
            if k != j {
                pairs.push((e - ej, s));
            }
        }
    }
    Ok(pairs)
}

/// Binned `V(ΔE)` over the initial states `j_set` (see [`transition_pairs`])
/// with a Gaussian envelope fit.
pub fn matrix_element_statistics(
    bath_es: &EigenSystem,
    a: &SparseOperator,
    j_set: &[usize],
    bin_width: f64,
    opts: EnvelopeOptions,
) -> Result<MatrixElementStats> {
    let pairs = transition_pairs(bath_es, a, j_set)?;
    let (bin_centers, v, counts) = bin_pairs(&pairs, bin_width)?;
    let fit = fit_gaussian_envelope(&bin_centers, &v, opts)?;
    Ok(MatrixElementStats { bin_centers, v, counts, tau_star: 2f64.sqrt() / fit.sigma, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTimeOptions {
    /// Samples per block when taking maxima of `|α|/|α(0)|`.
    pub block: usize,
    /// The fit uses blocks from `τ = 0` up to the first block maximum below
    /// this level.
    pub floor: f64,
    /// A block maximum above this level anywhere in the second half of the
    /// series counts as a revival: the correlations do not decay.
    pub revival: f64,
}

impl Default for CorrelationTimeOptions {
    fn default() -> Self {
        Self { block: 5, floor: 0.1, revival: 0.3 }
    }
}

/// Envelope fit of a correlation series; see [`correlation_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTime {
    pub tau_star: f64,
    /// Fitted `ln|α|/|α(0)| ≈ log_amplitude − (τ/width)²`.
    pub log_amplitude: f64,
    pub width: f64,
    pub points_used: usize,
}

/// `τ*`: where the fitted Gaussian envelope `A exp[−(τ/w)²]` of
/// `|α(τ)|/|α(0)|` crosses `1/e`. Returns [`Error::RegularBath`] when the
/// correlations show no decay.
pub fn correlation_time(series: &CorrelationSeries) -> Result<f64> {
    Ok(correlation_time_fit(series, CorrelationTimeOptions::default())?.tau_star)
}

pub fn correlation_time_fit(series: &CorrelationSeries, opts: CorrelationTimeOptions) -> Result<CorrelationTime> {
    let y = series.normalized_modulus();
    if y.is_empty() || !y[0].is_finite() {
        return Err(Error::InvalidArgument("correlation series is empty or α(0) = 0".into()));
    }
    let block = opts.block.max(1);
    let maxima: Vec<(f64, f64)> = series
        .taus
        .chunks(block)
        .zip(y.chunks(block))
        .map(|(t, v)| {
            let (i, m) = v.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc });
            (t[i], m)
        })
        .collect();
    let late = &maxima[maxima.len() / 2..];
    if late.iter().any(|p| p.1 > opts.revival) {
        return Err(Error::RegularBath);
    }
    let used: Vec<(f64, f64)> = maxima.iter().copied().take_while(|p| p.1 >= opts.floor).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientBins { populated: used.len(), required: 3 });
    }
    // ln y = c0 + c1 τ².
    let design: Vec<f64> = used.iter().flat_map(|p| [1.0, p.0 * p.0]).collect();
    let rhs: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let coef = linalg::least_squares(&design, &rhs, used.len(), 2)?;
    if !(coef[1] < 0.0) {
        return Err(Error::RegularBath);
    }
    let width = (-1.0 / coef[1]).sqrt();
    let tau_star = width * (1.0 + coef[0]).max(0.0).sqrt();
    Ok(CorrelationTime { tau_star, log_amplitude: coef[0], width, points_used: used.len() })
}
