//! Unfolding, nearest-neighbour spacing statistics and the critical coupling
//! at which the composite spectrum turns single-GOE.

use alloc::format;
use alloc::string::String;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fock_basis::FockBasis;
use crate::linalg;
use crate::operators::{self, ModelParams};
use crate::prelude::*;
use crate::spectra;

pub const DEFAULT_FIT_DEGREE: usize = 7;
pub const DEFAULT_EDGE_FRACTION: f64 = 0.02;
pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const MIN_LEVELS: usize = 50;

/// Levels removed from each edge for a fractional discard.
pub fn edge_count(levels: usize, fraction: f64) -> usize {
    (levels as f64 * fraction).round() as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedSpectrum {
    pub unfolded_levels: Vec<f64>,
    pub fit_degree: usize,
    pub discarded_edges: usize,
}

impl UnfoldedSpectrum {
    pub fn spacings(&self) -> Vec<f64> {
        self.unfolded_levels.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        let n = self.unfolded_levels.len();
        (self.unfolded_levels[n - 1] - self.unfolded_levels[0]) / (n - 1) as f64
    }
}

fn chebyshev_row(z: f64, degree: usize, row: &mut [f64]) {
    row[0] = 1.0;
    if degree >= 1 {
        row[1] = z;
    }
    for k in 2..=degree {
        row[k] = 2.0 * z * row[k - 1] - row[k - 2];
    }
}

/// Maps sorted `energies` through a degree-`fit_degree` Chebyshev fit of the
/// staircase `N(E)`, drops `edge_discard` levels at each end, and rescales
/// to unit mean spacing.
pub fn unfold(energies: &[f64], fit_degree: usize, edge_discard: usize) -> Result<UnfoldedSpectrum> {
    let n = energies.len();
    if n < MIN_LEVELS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_LEVELS} levels, got {n}")));
    }
    if fit_degree < 3 {
        return Err(Error::InvalidArgument("fit degree must be at least 3".into()));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("energies must be ascending".into()));
    }
    if 2 * edge_discard + 2 > n {
        return Err(Error::InvalidArgument("edge discard leaves fewer than two levels".into()));
    }
    let (lo, hi) = (energies[0], energies[n - 1]);
    let half = 0.5 * (hi - lo);
    if !(half > 0.0) {
        return Err(Error::InvalidArgument("spectrum has zero width".into()));
    }
    let z = |e: f64| (e - lo) / half - 1.0;

    let cols = fit_degree + 1;
    let mut design = vec![0.0; n * cols];
    for (k, &e) in energies.iter().enumerate() {
        chebyshev_row(z(e), fit_degree, &mut design[k * cols..(k + 1) * cols]);
    }
    let staircase: Vec<f64> = (0..n).map(|k| k as f64 + 0.5).collect();
    let coef = linalg::least_squares(&design, &staircase, n, cols)?;
    let mut row = vec![0.0; cols];
    let mut eval = |e: f64| {
        chebyshev_row(z(e), fit_degree, &mut row);
        row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>()
    };

    let kept = &energies[edge_discard..n - edge_discard];
    let mapped: Vec<f64> = kept.iter().map(|&e| eval(e)).collect();
    // Strict monotonicity on the retained levels plus a dense probe between
    // the retained endpoints.
    let probes = 8 * kept.len();
    let (a, b) = (kept[0], kept[kept.len() - 1]);
    let mut prev = eval(a);
    let mut monotone = mapped.windows(2).all(|w| w[1] >= w[0]);
    for i in 1..=probes {
        let v = eval(a + (b - a) * i as f64 / probes as f64);
        monotone &= v >= prev;
        prev = v;
    }
    if !monotone {
        return Err(Error::NonMonotoneUnfolding { degree: fit_degree });
    }
    let m = mapped.len();
    let scale = (m - 1) as f64 / (mapped[m - 1] - mapped[0]);
    let origin = mapped[0];
    Ok(UnfoldedSpectrum {
        unfolded_levels: mapped.iter().map(|x| (x - origin) * scale).collect(),
        fit_degree,
        discarded_edges: edge_discard,
    })
}

/// Unfolds with the default degree and edge fraction.
pub fn unfold_default(energies: &[f64]) -> Result<UnfoldedSpectrum> {
    unfold(energies, DEFAULT_FIT_DEGREE, edge_count(energies.len(), DEFAULT_EDGE_FRACTION))
}

/// Wigner surmise `1 − exp(−πs²/4)`.
pub fn integrated_goe(s: f64) -> f64 {
    1.0 - (-PI * s * s / 4.0).exp()
}

pub fn integrated_poisson(s: f64) -> f64 {
    1.0 - (-s).exp()
}

/// Tabulated integrated spacing distribution of two merged independent
/// Wigner-surmise sequences, sampled on a uniform `s` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingTable {
    pub step: f64,
    pub values: Vec<f64>,
}

impl SpacingTable {
    /// Linear interpolation; 1 beyond the table.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let x = s / self.step;
        let i = x as usize;
        if i + 1 >= self.values.len() {
            return 1.0;
        }
        let f = x - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Parses `s,I` rows; `#` lines and a non-numeric header are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut s_vals = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut it = line.split(',');
            let (Some(a), Some(b)) = (it.next(), it.next()) else {
                return Err(Error::InvalidArgument(format!("bad table row: {line}")));
            };
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(s), Ok(v)) => {
                    s_vals.push(s);
                    values.push(v);
                }
                _ if s_vals.is_empty() => continue,
                _ => return Err(Error::InvalidArgument(format!("bad table row: {line}"))),
            }
        }
        if s_vals.len() < 2 || s_vals[0] != 0.0 {
            return Err(Error::InvalidArgument("table must start at s = 0 with at least two rows".into()));
        }
        let step = s_vals[1] - s_vals[0];
        if s_vals.iter().enumerate().any(|(k, &s)| (s - k as f64 * step).abs() > 1e-9) {
            return Err(Error::InvalidArgument("table grid must be uniform".into()));
        }
        Ok(Self { step, values })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,I_2GOE\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{:.2},{:.6}\n", k as f64 * self.step, v));
        }
        out
    }
}

static TWO_GOE_CSV: &str = include_str!("../data/two_goe.csv");

/// The shipped two-GOE reference table.
pub fn two_goe_table() -> SpacingTable {
    SpacingTable::parse_csv(TWO_GOE_CSV).expect("bundled table is well formed")
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Wigner-surmise spacing by inverse CDF.
fn surmise_spacing(rng: &mut ChaCha8Rng) -> f64 {
    (-4.0 / PI * (1.0 - uniform(rng)).ln()).sqrt()
}

/// Spacings of two independent unit-density Wigner-surmise sequences merged
/// and rescaled to unit mean spacing. Returns about `samples` spacings.
pub fn sample_two_goe_spacings(seed: u64, samples: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = samples / 2 + 1;
    let seq = |rng: &mut ChaCha8Rng| {
        let mut x = 0.0;
        (0..half)
            .map(|_| {
                x += surmise_spacing(rng);
                x
            })
            .collect::<Vec<f64>>()
    };
    let a = seq(&mut rng);
    let b = seq(&mut rng);
    let end = a[a.len() - 1].min(b[b.len() - 1]);
    let mut merged: Vec<f64> = a.into_iter().chain(b).filter(|&x| x <= end).collect();
    merged.sort_by(f64::total_cmp);
    let mut spacings: Vec<f64> = merged.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = spacings.iter().sum::<f64>() / spacings.len() as f64;
    spacings.iter_mut().for_each(|s| *s /= mean);
    spacings
}

/// Empirical integrated distribution of `spacings` on `0, step, …, s_max`.
pub fn tabulate(spacings: &[f64], step: f64, s_max: f64) -> SpacingTable {
    let mut sorted = spacings.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = (s_max / step).round() as usize + 1;
    let values = (0..count).map(|k| cumulative_fraction(&sorted, k as f64 * step)).collect();
    SpacingTable { step, values }
}

/// Generator for the shipped table.
pub fn generate_two_goe_table(seed: u64, samples: usize) -> SpacingTable {
    tabulate(&sample_two_goe_spacings(seed, samples), 0.01, 5.0)
}

fn cumulative_fraction(sorted: &[f64], s: f64) -> f64 {
    sorted.partition_point(|&x| x <= s) as f64 / sorted.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    Goe,
    Poisson,
    TwoGoe,
}

impl Reference {
    pub fn name(self) -> &'static str {
        match self {
            Reference::Goe => "GOE",
            Reference::Poisson => "Poisson",
            Reference::TwoGoe => "2xGOE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacingDistribution {
    pub s_grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub goe: Vec<f64>,
    pub poisson: Vec<f64>,
    pub two_goe: Vec<f64>,
}

impl SpacingDistribution {
    pub fn reference(&self, r: Reference) -> &[f64] {
        match r {
            Reference::Goe => &self.goe,
            Reference::Poisson => &self.poisson,
            Reference::TwoGoe => &self.two_goe,
        }
    }
}

/// `0, 0.01, …, 4`.
pub fn default_s_grid() -> Vec<f64> {
    (0..=400).map(|k| k as f64 * 0.01).collect()
}

pub fn integrated_spacing(us: &UnfoldedSpectrum, s_grid: &[f64]) -> SpacingDistribution {
    integrated_spacing_of(&us.spacings(), s_grid)
}

pub fn integrated_spacing_of(spacings: &[f64], s_grid: &[f64]) -> SpacingDistribution {
    let mut sorted = spacings.to_vec();
    sorted.sort_by(f64::total_cmp);
    let table = two_goe_table();
    SpacingDistribution {
        s_grid: s_grid.to_vec(),
        empirical: s_grid.iter().map(|&s| cumulative_fraction(&sorted, s)).collect(),
        goe: s_grid.iter().map(|&s| integrated_goe(s)).collect(),
        poisson: s_grid.iter().map(|&s| integrated_poisson(s)).collect(),
        two_goe: s_grid.iter().map(|&s| table.eval(s)).collect(),
    }
}

/// Sup-norm distance between the empirical curve and a reference on the grid.
pub fn goe_distance(sd: &SpacingDistribution, reference: Reference) -> f64 {
    sd.empirical.iter().zip(sd.reference(reference)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub fit_degree: usize,
    pub edge_fraction: f64,
    pub threshold: f64,
    pub dimension_cap: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            fit_degree: DEFAULT_FIT_DEGREE,
            edge_fraction: DEFAULT_EDGE_FRACTION,
            threshold: DEFAULT_THRESHOLD,
            dimension_cap: spectra::DEFAULT_DIMENSION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSweep {
    /// `(ε, distance to GOE)`.
    pub curve: Vec<(f64, f64)>,
    pub threshold: f64,
}

impl EpsilonSweep {
    /// Smallest ε whose distance is below the threshold.
    pub fn critical(&self) -> Option<f64> {
        self.curve.iter().find(|p| p.1 < self.threshold).map(|p| p.0)
    }
}

/// Distance to GOE of the unfolded composite spectrum at the given `params`.
pub fn composite_spacing(params: &ModelParams, opts: &SweepOptions) -> Result<SpacingDistribution> {
    params.validate()?;
    let basis = FockBasis::new(params.particles, params.sites)?;
    let h = operators::build_total_hamiltonian(params, &basis)?;
    let energies =
        spectra::eigenvalues_with(&h, spectra::DiagonalizeOptions { dimension_cap: opts.dimension_cap })?;
    spacing_of_energies(&energies, opts)
}

/// Unfolds `energies` with the sweep settings and tabulates on the default grid.
pub fn spacing_of_energies(energies: &[f64], opts: &SweepOptions) -> Result<SpacingDistribution> {
    let us = unfold(energies, opts.fit_degree, edge_count(energies.len(), opts.edge_fraction))?;
    Ok(integrated_spacing(&us, &default_s_grid()))
}

/// Runs the sweep over `eps_grid` (ascending). The curve is always returned;
/// use [`EpsilonSweep::critical`] for the crossing, which is `None` when the
/// sweep never gets below the threshold.
pub fn critical_epsilon(base: &ModelParams, eps_grid: &[f64], opts: &SweepOptions) -> Result<EpsilonSweep> {
    if eps_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("epsilon grid must be strictly increasing".into()));
    }
    let mut curve = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let sd = composite_spacing(&base.with_epsilon(eps), opts)?;
        curve.push((eps, goe_distance(&sd, Reference::Goe)));
    }
    Ok(EpsilonSweep { curve, threshold: opts.threshold })
}
