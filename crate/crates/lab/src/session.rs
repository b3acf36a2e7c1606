use std::collections::HashMap;
use std::rc::Rc;

use anyhow::Context;
use born_markov::spectra::{self, DiagonalizeOptions};
use born_markov::{EigenSystem, ModelParams};
use serde::Serialize;

use crate::cache::{CacheKey, EigenCache, Lookup, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Miss,
    /// Entry failed verification and was recomputed.
    Recomputed,
    /// No cache configured.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CacheEvent {
    pub kind: SystemKind,
    pub key: String,
    pub dim: usize,
    pub status: CacheStatus,
    /// Seed of the spot-check draw, when one was made.
    pub spot_check_seed: Option<u64>,
    pub spot_checked: Vec<usize>,
    pub max_residual: Option<f64>,
    pub detail: Option<String>,
}

/// Eigensystems for one run: memoized in memory, backed by the disk cache.
pub struct Session {
    cache: Option<EigenCache>,
    memo: HashMap<String, Rc<EigenSystem>>,
    dopts: DiagonalizeOptions,
    pub events: Vec<CacheEvent>,
    pub warnings: Vec<String>,
}

impl Session {
    pub fn new(cache: Option<EigenCache>, dimension_cap: usize) -> Self {
        Self {
            cache,
            memo: HashMap::new(),
            dopts: DiagonalizeOptions { dimension_cap },
            events: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn dimension_cap(&self) -> usize {
        self.dopts.dimension_cap
    }

    pub fn bath(&mut self, p: &ModelParams) -> anyhow::Result<Rc<EigenSystem>> {
        self.system(SystemKind::Bath, p)
    }

    pub fn composite(&mut self, p: &ModelParams) -> anyhow::Result<Rc<EigenSystem>> {
        self.system(SystemKind::Composite, p)
    }

    /// Composite eigenvalues only. Served from a cached full eigensystem
    /// when one exists; otherwise computed without vectors and not stored.
    pub fn composite_energies(&mut self, p: &ModelParams) -> anyhow::Result<Vec<f64>> {
        let key = CacheKey::new(SystemKind::Composite, p);
        if let Some(es) = self.memo.get(&key.hex) {
            return Ok(es.energies().to_vec());
        }
        if self.cache.as_ref().is_some_and(|c| c.entry_path(&key).exists()) {
            return Ok(self.composite(p)?.energies().to_vec());
        }
        let h = SystemKind::Composite.hamiltonian(p).with_context(|| stage("build composite Hamiltonian", p))?;
        spectra::eigenvalues_with(&h, self.dopts).with_context(|| stage("composite eigenvalues", p))
    }

    fn system(&mut self, kind: SystemKind, p: &ModelParams) -> anyhow::Result<Rc<EigenSystem>> {
        let key = CacheKey::new(kind, p);
        if let Some(es) = self.memo.get(&key.hex) {
            return Ok(es.clone());
        }
        let mut event = CacheEvent {
            kind,
            key: key.hex.clone(),
            dim: 0,
            status: CacheStatus::Disabled,
            spot_check_seed: None,
            spot_checked: Vec::new(),
            max_residual: None,
            detail: None,
        };
        let mut found = None;
        if let Some(cache) = &self.cache {
            event.spot_check_seed = Some(key.seed());
            match cache.lookup(&key, p) {
                Lookup::Hit { system, checked, max_residual } => {
                    event.status = CacheStatus::Hit;
                    event.spot_checked = checked;
                    event.max_residual = Some(max_residual);
                    found = Some(system);
                }
                Lookup::Miss => {
                    event.status = CacheStatus::Miss;
                    event.spot_check_seed = None;
                }
                Lookup::Corrupt(why) => {
                    let msg = format!("discarded corrupt {} cache entry {}: {why}; recomputing", kind.name(), key.hex);
                    eprintln!("warning: {msg}");
                    self.warnings.push(msg);
                    event.status = CacheStatus::Recomputed;
                    event.detail = Some(why);
                }
            }
        }
        let es = match found {
            Some(es) => es,
            None => {
                let what = format!("diagonalize {}", kind.name());
                let h = kind.hamiltonian(p).with_context(|| stage(&what, p))?;
                let es = spectra::diagonalize_with(&h, self.dopts).with_context(|| stage(&what, p))?;
                if let Some(cache) = &self.cache {
                    if let Err(e) = cache.store(&key, p, &es) {
                        let msg = format!("could not write cache entry {}: {e}", key.hex);
                        eprintln!("warning: {msg}");
                        self.warnings.push(msg);
                    }
                }
                es
            }
        };
        event.dim = es.dim();
        self.events.push(event);
        let es = Rc::new(es);
        self.memo.insert(key.hex, es.clone());
        Ok(es)
    }
}

/// Error context naming the pipeline stage.
pub fn stage(name: &str, p: &ModelParams) -> String {
    format!("stage `{name}` failed (N={}, L={})", p.particles, p.sites)
}
