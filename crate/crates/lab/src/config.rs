//! Experiment configuration: one TOML file per run.
//!
//! ```toml
//! recipe = "fig1a"
//! output_dir = "out/fig1a"      # relative to the config file
//! cache_dir = ".lab-cache"      # optional
//!
//! [model]                       # any subset; the rest comes from the recipe
//! u = 0.8
//!
//! [grid]
//! t1 = 200.0
//!
//! [fig1a]                       # options of the selected recipe only
//! energy = 2.8361
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use born_markov::{ModelParams, TimeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config does not match the schema: {0}")]
    Parse(String),
    #[error("unknown recipe `{0}`; valid recipes: {valid}", valid = Recipe::names().join(", "))]
    UnknownRecipe(String),
    #[error("table [{table}] does not apply to recipe `{recipe}`")]
    MisplacedTable { table: String, recipe: Recipe },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Fig1a,
    Fig1b,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    EpsScan,
    Custom,
}

impl Recipe {
    pub const ALL: [Recipe; 10] = [
        Recipe::Fig1a,
        Recipe::Fig1b,
        Recipe::Fig2,
        Recipe::Fig3,
        Recipe::Fig4,
        Recipe::Fig5,
        Recipe::Fig6,
        Recipe::Fig7,
        Recipe::EpsScan,
        Recipe::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig1a => "fig1a",
            Recipe::Fig1b => "fig1b",
            Recipe::Fig2 => "fig2",
            Recipe::Fig3 => "fig3",
            Recipe::Fig4 => "fig4",
            Recipe::Fig5 => "fig5",
            Recipe::Fig6 => "fig6",
            Recipe::Fig7 => "fig7",
            Recipe::EpsScan => "eps_scan",
            Recipe::Custom => "custom",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|r| r.name()).collect()
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }

    pub fn description(self) -> &'static str {
        match self {
            Recipe::Fig1a => "G(t) and |rho_S| elements from a single bath eigenstate",
            Recipe::Fig1b => "ensemble-averaged rho_S(t), exponential fit and Lindblad comparison",
            Recipe::Fig2 => "factorization test lhs/rhs and bath invariance",
            Recipe::Fig3 => "density of states and integrated spacing distributions at eps=0 and eps=0.2",
            Recipe::Fig4 => "bath correlation alpha(tau) at t_anchor and t=0, regular-bath (U=0) comparison",
            Recipe::Fig5 => "entropy and eigenvalues of rho_S(t), Schmidt check",
            Recipe::Fig6 => "bath eigen-expansion of the Schmidt states of rho_B(t)",
            Recipe::Fig7 => "spectral alpha(tau) and binned transition strengths V(dE)",
            Recipe::EpsScan => "distance to GOE versus eps, eps_cr, and the rate/eps^2 scaling table",
            Recipe::Custom => "chosen observables for a chosen initial bath state",
        }
    }

    /// Default model for the recipe; only `fig7` moves to the larger bath.
    pub fn default_model(self) -> ModelParams {
        match self {
            Recipe::Fig7 => ModelParams::REFERENCE.with_size(7, 8),
            _ => ModelParams::REFERENCE,
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathState {
    /// The bath eigenstate closest to `energy`.
    Eigenstate,
    /// Equal-weight mixture of the bath eigenstates inside `window`.
    Ensemble,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub j: Option<f64>,
    pub u: Option<f64>,
    pub sites: Option<usize>,
    pub particles: Option<usize>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    /// Largest matrix densified for diagonalization.
    pub dimension_cap: usize,
    /// Largest composite dimension for which `R` is materialized (G).
    pub g_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self { dimension_cap: born_markov::spectra::DEFAULT_DIMENSION_CAP, g_cap: born_markov::reduced::DEFAULT_G_CAP }
    }
}

const E_REF: f64 = 2.8361;
const WINDOW_REF: [f64; 2] = [2.45, 3.21];
const SPIN_UP: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1aOptions {
    pub energy: f64,
    pub spin_up: f64,
    /// G is evaluated on every `g_every`-th grid point.
    pub g_every: usize,
}

impl Default for Fig1aOptions {
    fn default() -> Self {
        Self { energy: E_REF, spin_up: SPIN_UP, g_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1bOptions {
    pub window: [f64; 2],
    pub spin_up: f64,
    pub g_every: usize,
    /// Log-linear fit window for |rho_ud(t)|.
    pub fit_window: [f64; 2],
}

impl Default for Fig1bOptions {
    fn default() -> Self {
        Self { window: WINDOW_REF, spin_up: SPIN_UP, g_every: 10, fit_window: [0.0, 40.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Options {
    pub bath_state: BathState,
    pub energy: f64,
    pub window: [f64; 2],
    pub spin_up: f64,
}

impl Default for Fig2Options {
    fn default() -> Self {
        Self { bath_state: BathState::Ensemble, energy: E_REF, window: WINDOW_REF, spin_up: SPIN_UP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Options {
    pub epsilons: Vec<f64>,
    pub fit_degree: usize,
    pub edge_fraction: f64,
    pub dos_bins: usize,
}

impl Default for Fig3Options {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.2],
            fit_degree: born_markov::levelstats::DEFAULT_FIT_DEGREE,
            edge_fraction: born_markov::levelstats::DEFAULT_EDGE_FRACTION,
            dos_bins: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Options {
    pub t_anchor: f64,
    pub tau_max: f64,
    pub tau_dt: f64,
    pub window: [f64; 2],
    pub spin_up: f64,
    /// Interaction strength of the regular comparison bath.
    pub regular_u: f64,
}

impl Default for Fig4Options {
    fn default() -> Self {
        Self { t_anchor: 100.0, tau_max: 20.0, tau_dt: 0.05, window: WINDOW_REF, spin_up: SPIN_UP, regular_u: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig5Options {
    pub energy: f64,
    pub spin_up: f64,
}

impl Default for Fig5Options {
    fn default() -> Self {
        Self { energy: E_REF, spin_up: SPIN_UP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig6Options {
    pub energy: f64,
    pub spin_up: f64,
    /// Sampling time; the end of the grid when absent.
    pub t_sample: Option<f64>,
    /// Half-width of the three energy windows, in units of delta.
    pub half_width: f64,
}

impl Default for Fig6Options {
    fn default() -> Self {
        Self { energy: E_REF, spin_up: SPIN_UP, t_sample: None, half_width: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig7Options {
    /// Centre energy; the mean of the bath spectrum when absent.
    pub energy: Option<f64>,
    /// Number of eigenstates nearest `energy` averaged in V(dE).
    pub states: usize,
    pub tau_max: f64,
    pub tau_dt: f64,
    /// dE bin width; the spectral range over 200 when absent.
    pub bin_width: Option<f64>,
    pub block: usize,
    pub floor: f64,
}

impl Default for Fig7Options {
    fn default() -> Self {
        let env = born_markov::correlation::EnvelopeOptions::default();
        Self { energy: None, states: 100, tau_max: 20.0, tau_dt: 0.05, bin_width: None, block: env.block, floor: env.floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsScanOptions {
    pub epsilons: Vec<f64>,
    pub threshold: f64,
    pub fit_degree: usize,
    pub edge_fraction: f64,
    /// Couplings for the rate/eps^2 table; empty skips the dynamics.
    pub scaling_epsilons: Vec<f64>,
    pub window: [f64; 2],
    pub spin_up: f64,
    /// Fit window and step at `reference_epsilon`; both stretch as (ref/eps)^2.
    pub fit_window: [f64; 2],
    pub dt: f64,
    pub reference_epsilon: f64,
    pub spread_limit: f64,
    pub goodness_limit: f64,
}

impl Default for EpsScanOptions {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.025, 0.05, 0.075, 0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4],
            threshold: born_markov::levelstats::DEFAULT_THRESHOLD,
            fit_degree: born_markov::levelstats::DEFAULT_FIT_DEGREE,
            edge_fraction: born_markov::levelstats::DEFAULT_EDGE_FRACTION,
            scaling_epsilons: vec![0.1, 0.15, 0.2],
            window: WINDOW_REF,
            spin_up: SPIN_UP,
            fit_window: [0.0, 40.0],
            dt: 0.5,
            reference_epsilon: 0.2,
            spread_limit: 0.25,
            goodness_limit: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    RhoS,
    G,
    Entropy,
    Factorization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomOptions {
    pub bath_state: BathState,
    pub energy: f64,
    pub window: [f64; 2],
    pub spin_up: f64,
    pub observables: Vec<Observable>,
    pub g_every: usize,
}

impl Default for CustomOptions {
    fn default() -> Self {
        Self {
            bath_state: BathState::Eigenstate,
            energy: E_REF,
            window: WINDOW_REF,
            spin_up: SPIN_UP,
            observables: vec![Observable::RhoS, Observable::G],
            g_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum RecipeOptions {
    Fig1a(Fig1aOptions),
    Fig1b(Fig1bOptions),
    Fig2(Fig2Options),
    Fig3(Fig3Options),
    Fig4(Fig4Options),
    Fig5(Fig5Options),
    Fig6(Fig6Options),
    Fig7(Fig7Options),
    EpsScan(EpsScanOptions),
    Custom(CustomOptions),
}

impl RecipeOptions {
    pub fn defaults(recipe: Recipe) -> Self {
        match recipe {
            Recipe::Fig1a => Self::Fig1a(Default::default()),
            Recipe::Fig1b => Self::Fig1b(Default::default()),
            Recipe::Fig2 => Self::Fig2(Default::default()),
            Recipe::Fig3 => Self::Fig3(Default::default()),
            Recipe::Fig4 => Self::Fig4(Default::default()),
            Recipe::Fig5 => Self::Fig5(Default::default()),
            Recipe::Fig6 => Self::Fig6(Default::default()),
            Recipe::Fig7 => Self::Fig7(Default::default()),
            Recipe::EpsScan => Self::EpsScan(Default::default()),
            Recipe::Custom => Self::Custom(Default::default()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    recipe: String,
    output_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    #[serde(default)]
    model: ModelOverrides,
    #[serde(default)]
    grid: GridOverrides,
    #[serde(default)]
    limits: Limits,
    fig1a: Option<Fig1aOptions>,
    fig1b: Option<Fig1bOptions>,
    fig2: Option<Fig2Options>,
    fig3: Option<Fig3Options>,
    fig4: Option<Fig4Options>,
    fig5: Option<Fig5Options>,
    fig6: Option<Fig6Options>,
    fig7: Option<Fig7Options>,
    eps_scan: Option<EpsScanOptions>,
    custom: Option<CustomOptions>,
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub recipe: Recipe,
    pub model: ModelParams,
    pub grid: TimeGrid,
    pub limits: Limits,
    pub options: RecipeOptions,
    pub output_dir: PathBuf,
    /// `None` uses the runner's default location.
    pub cache_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for `recipe`, writing to `out/<recipe>`.
    pub fn defaults(recipe: Recipe) -> Self {
        Self {
            recipe,
            model: recipe.default_model(),
            grid: TimeGrid::reference(),
            limits: Limits::default(),
            options: RecipeOptions::defaults(recipe),
            output_dir: Path::new("out").join(recipe.name()),
            cache_dir: None,
        }
    }

    /// Reads and validates a config file; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let recipe = Recipe::from_name(&raw.recipe).ok_or_else(|| ConfigError::UnknownRecipe(raw.recipe.clone()))?;

        let tables: [(Recipe, bool); 10] = [
            (Recipe::Fig1a, raw.fig1a.is_some()),
            (Recipe::Fig1b, raw.fig1b.is_some()),
            (Recipe::Fig2, raw.fig2.is_some()),
            (Recipe::Fig3, raw.fig3.is_some()),
            (Recipe::Fig4, raw.fig4.is_some()),
            (Recipe::Fig5, raw.fig5.is_some()),
            (Recipe::Fig6, raw.fig6.is_some()),
            (Recipe::Fig7, raw.fig7.is_some()),
            (Recipe::EpsScan, raw.eps_scan.is_some()),
            (Recipe::Custom, raw.custom.is_some()),
        ];
        if let Some((other, _)) = tables.iter().find(|(r, present)| *present && *r != recipe) {
            return Err(ConfigError::MisplacedTable { table: other.name().into(), recipe });
        }

        let m = &raw.model;
        let d = recipe.default_model();
        let model = ModelParams {
            j: m.j.unwrap_or(d.j),
            u: m.u.unwrap_or(d.u),
            sites: m.sites.unwrap_or(d.sites),
            particles: m.particles.unwrap_or(d.particles),
            delta: m.delta.unwrap_or(d.delta),
            epsilon: m.epsilon.unwrap_or(d.epsilon),
        };

        let g = &raw.grid;
        let r = TimeGrid::reference();
        let (t0, t1, dt) = (g.t0.unwrap_or(r.t0), g.t1.unwrap_or(r.end()), g.dt.unwrap_or(r.dt));
        if dt <= 0.0 || !dt.is_finite() {
            return Err(invalid("grid.dt", "must be positive and finite"));
        }
        if t1 <= t0 || !t0.is_finite() || !t1.is_finite() {
            return Err(invalid("grid.t1", format!("must be finite and greater than grid.t0 = {t0}")));
        }
        let steps = (t1 - t0) / dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(invalid("grid.dt", format!("t1 - t0 = {} is not a whole number of steps", t1 - t0)));
        }
        let grid = TimeGrid::span(t0, t1, dt).map_err(|e| invalid("grid", e.to_string()))?;

        let options = match recipe {
            Recipe::Fig1a => RecipeOptions::Fig1a(raw.fig1a.unwrap_or_default()),
            Recipe::Fig1b => RecipeOptions::Fig1b(raw.fig1b.unwrap_or_default()),
            Recipe::Fig2 => RecipeOptions::Fig2(raw.fig2.unwrap_or_default()),
            Recipe::Fig3 => RecipeOptions::Fig3(raw.fig3.unwrap_or_default()),
            Recipe::Fig4 => RecipeOptions::Fig4(raw.fig4.unwrap_or_default()),
            Recipe::Fig5 => RecipeOptions::Fig5(raw.fig5.unwrap_or_default()),
            Recipe::Fig6 => RecipeOptions::Fig6(raw.fig6.unwrap_or_default()),
            Recipe::Fig7 => RecipeOptions::Fig7(raw.fig7.unwrap_or_default()),
            Recipe::EpsScan => RecipeOptions::EpsScan(raw.eps_scan.unwrap_or_default()),
            Recipe::Custom => RecipeOptions::Custom(raw.custom.unwrap_or_default()),
        };

        let output_dir = base.join(raw.output_dir.unwrap_or_else(|| Path::new("out").join(recipe.name())));
        let cache_dir = raw.cache_dir.map(|c| base.join(c));
        let cfg = Self { recipe, model, grid, limits: raw.limits, options, output_dir, cache_dir };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.model;
        m.validate().map_err(|e| invalid("model", e.to_string()))?;
        if m.sites < 2 {
            return Err(invalid("model.sites", "the coupling needs at least two sites"));
        }
        if m.particles == 0 {
            return Err(invalid("model.particles", "must be at least 1"));
        }
        let dim = born_markov::fock_basis::dimension(m.particles, m.sites).map_err(|e| invalid("model", e.to_string()))?;
        if dim > self.limits.dimension_cap {
            return Err(invalid(
                "model",
                format!("bath dimension {dim} exceeds limits.dimension_cap = {}", self.limits.dimension_cap),
            ));
        }
        if self.limits.g_cap == 0 {
            return Err(invalid("limits.g_cap", "must be positive"));
        }
        let name = self.recipe.name();
        let field = |f: &str| format!("{name}.{f}");
        let spin = |p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(invalid(&field("spin_up"), "must lie in [0, 1]"))
            }
        };
        let window = |f: &str, w: [f64; 2]| {
            if w[0].is_finite() && w[1].is_finite() && w[0] < w[1] {
                Ok(())
            } else {
                Err(invalid(&field(f), format!("needs lo < hi, got {w:?}")))
            }
        };
        let positive = |f: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(&field(f), "must be positive"))
            }
        };
        let nonzero = |f: &str, v: usize| if v > 0 { Ok(()) } else { Err(invalid(&field(f), "must be at least 1")) };
        let couplings = |f: &str, v: &[f64], allow_empty: bool| {
            if v.is_empty() && !allow_empty {
                return Err(invalid(&field(f), "must not be empty"));
            }
            if v.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(invalid(&field(f), "couplings must be finite and non-negative"));
            }
            Ok(())
        };
        let edges = |f: &str, v: f64| {
            if (0.0..0.5).contains(&v) {
                Ok(())
            } else {
                Err(invalid(&field(f), "must lie in [0, 0.5)"))
            }
        };

        match &self.options {
            RecipeOptions::Fig1a(o) => {
                spin(o.spin_up)?;
                nonzero("g_every", o.g_every)?;
            }
            RecipeOptions::Fig1b(o) => {
                spin(o.spin_up)?;
                window("window", o.window)?;
                window("fit_window", o.fit_window)?;
                nonzero("g_every", o.g_every)?;
            }
            RecipeOptions::Fig2(o) => {
                spin(o.spin_up)?;
                window("window", o.window)?;
            }
            RecipeOptions::Fig3(o) => {
                couplings("epsilons", &o.epsilons, false)?;
                edges("edge_fraction", o.edge_fraction)?;
                nonzero("dos_bins", o.dos_bins)?;
            }
            RecipeOptions::Fig4(o) => {
                spin(o.spin_up)?;
                window("window", o.window)?;
                positive("tau_dt", o.tau_dt)?;
                positive("tau_max", o.tau_max)?;
                if o.tau_max < o.tau_dt {
                    return Err(invalid(&field("tau_max"), "must be at least tau_dt"));
                }
                if !o.t_anchor.is_finite() {
                    return Err(invalid(&field("t_anchor"), "must be finite"));
                }
            }
            RecipeOptions::Fig5(o) => spin(o.spin_up)?,
            RecipeOptions::Fig6(o) => {
                spin(o.spin_up)?;
                positive("half_width", o.half_width)?;
                if let Some(t) = o.t_sample {
                    if !t.is_finite() {
                        return Err(invalid(&field("t_sample"), "must be finite"));
                    }
                }
            }
            RecipeOptions::Fig7(o) => {
                nonzero("states", o.states)?;
                positive("tau_dt", o.tau_dt)?;
                positive("tau_max", o.tau_max)?;
                nonzero("block", o.block)?;
                positive("floor", o.floor)?;
                if let Some(b) = o.bin_width {
                    positive("bin_width", b)?;
                }
                if o.states > dim {
                    return Err(invalid(&field("states"), format!("bath has only {dim} eigenstates")));
                }
            }
            RecipeOptions::EpsScan(o) => {
                couplings("epsilons", &o.epsilons, false)?;
                if o.epsilons.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid(&field("epsilons"), "must be strictly increasing"));
                }
                couplings("scaling_epsilons", &o.scaling_epsilons, true)?;
                positive("threshold", o.threshold)?;
                edges("edge_fraction", o.edge_fraction)?;
                spin(o.spin_up)?;
                window("window", o.window)?;
                window("fit_window", o.fit_window)?;
                positive("dt", o.dt)?;
                positive("reference_epsilon", o.reference_epsilon)?;
                positive("spread_limit", o.spread_limit)?;
                positive("goodness_limit", o.goodness_limit)?;
            }
            RecipeOptions::Custom(o) => {
                spin(o.spin_up)?;
                window("window", o.window)?;
                nonzero("g_every", o.g_every)?;
                if o.observables.is_empty() {
                    return Err(invalid(&field("observables"), "must not be empty"));
                }
            }
        }
        Ok(())
    }

    /// The resolved configuration as recorded in the manifest.
    pub fn to_json(&self) -> serde_json::Value {
        let m = &self.model;
        serde_json::json!({
            "recipe": self.recipe,
            "model": {
                "j": m.j, "u": m.u, "sites": m.sites, "particles": m.particles,
                "delta": m.delta, "epsilon": m.epsilon,
            },
            "grid": { "t0": self.grid.t0, "t1": self.grid.end(), "dt": self.grid.dt, "points": self.grid.len() },
            "limits": self.limits,
            "options": self.options,
            "output_dir": self.output_dir,
            "cache_dir": self.cache_dir,
        })
    }
}
