//! Runs one configured experiment end to end.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;

use crate::cache::EigenCache;
use crate::config::ExperimentConfig;
use crate::output::{Bundle, Manifest, SeedRecord, SCHEMA_VERSION};
use crate::recipes;
use crate::session::Session;

pub const CACHE_DIR_ENV: &str = "LAB_CACHE_DIR";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides both the config's `cache_dir` and the default.
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// `$LAB_CACHE_DIR`, else `.lab-cache` in the working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".lab-cache"))
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> anyhow::Result<RunReport> {
    let started = Instant::now();
    cfg.validate()?;
    let cache = if opts.no_cache {
        None
    } else {
        let dir = opts.cache_dir.clone().or_else(|| cfg.cache_dir.clone()).unwrap_or_else(default_cache_dir);
        Some(EigenCache::open(&dir).with_context(|| format!("opening cache directory {}", dir.display()))?)
    };
    let mut session = Session::new(cache, cfg.limits.dimension_cap);
    let mut bundle = Bundle::new();
    let summary = recipes::execute(cfg, &mut session, &mut bundle)
        .with_context(|| format!("recipe `{}` failed", cfg.recipe.name()))?;

    let outputs = bundle
        .write(&cfg.output_dir)
        .with_context(|| format!("writing outputs to {}", cfg.output_dir.display()))?;
    let seeds = session
        .events
        .iter()
        .filter_map(|e| {
            e.spot_check_seed.map(|seed| SeedRecord {
                purpose: format!("cache spot-check, {} {}", e.kind.name(), &e.key[..16]),
                seed,
            })
        })
        .collect();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        recipe: cfg.recipe.name().to_string(),
        code_version: crate::code_version(),
        config: cfg.to_json(),
        seeds,
        cache: serde_json::to_value(&session.events)?,
        outputs,
        summary,
        warnings: session.warnings.clone(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    manifest
        .write(&cfg.output_dir)
        .with_context(|| format!("writing manifest to {}", cfg.output_dir.display()))?;
    Ok(RunReport { output_dir: cfg.output_dir.clone(), manifest })
}
