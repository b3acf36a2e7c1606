use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use born_markov::operators::{self, BathObservable};
use born_markov::FockBasis;
use born_markov_lab::cache::{EigenCache, SystemKind};
use born_markov_lab::config::{ExperimentConfig, Recipe};
use born_markov_lab::runner::{self, RunOptions};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "lab", version, about = "Spin coupled to a Bose-Hubbard bath: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Cache directory (default: $LAB_CACHE_DIR or ./.lab-cache).
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Neither read nor write the eigensystem cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// List the available recipes.
    Recipes,
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// Inspect or clear the eigensystem cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        #[arg(long, global = true)]
        dir: Option<PathBuf>,
    },
    /// Write an operator of the configured model as `row col re im` triplets.
    Operator {
        config: PathBuf,
        which: Which,
        /// Output file (default: stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Ls,
    Clear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Bath,
    Composite,
    /// a1† a2
    Hop,
    /// (a1† a2)(a2† a1)
    HopProduct,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config, cache_dir, no_cache } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = runner::run(&cfg, &RunOptions { cache_dir, no_cache })?;
            let m = &report.manifest;
            for o in &m.outputs {
                println!("{}", report.output_dir.join(&o.file).display());
            }
            println!(
                "{} done in {:.1} s; cache: [{}]; {} warning(s)",
                m.recipe,
                m.wall_time_seconds,
                m.cache_statuses().join(", "),
                m.warnings.len()
            );
        }
        Command::Recipes => {
            for r in Recipe::ALL {
                let m = r.default_model();
                println!("{:<9} (N={}, L={})  {}", r.name(), m.particles, m.sites, r.description());
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!("{}: ok ({}, N={}, L={})", config.display(), cfg.recipe, cfg.model.particles, cfg.model.sites);
        }
        Command::Cache { action, dir } => {
            let dir = dir.unwrap_or_else(runner::default_cache_dir);
            let cache = EigenCache::open(&dir).with_context(|| format!("opening {}", dir.display()))?;
            match action {
                CacheAction::Ls => {
                    for e in cache.entries()? {
                        println!(
                            "{}  {:<9} N={} L={} J={} U={} dim={} {} bytes",
                            &e.key[..16],
                            e.kind.name(),
                            e.particles,
                            e.sites,
                            e.j,
                            e.u,
                            e.dim,
                            e.bytes
                        );
                    }
                }
                CacheAction::Clear => println!("removed {} entries from {}", cache.clear()?, dir.display()),
            }
        }
        Command::Operator { config, which, output } => {
            let p = ExperimentConfig::load(&config)?.model;
            let op = match which {
                Which::Bath => SystemKind::Bath.hamiltonian(&p)?,
                Which::Composite => SystemKind::Composite.hamiltonian(&p)?,
                Which::Hop | Which::HopProduct => {
                    let kind = if matches!(which, Which::Hop) { BathObservable::Hop21To1 } else { BathObservable::HopProduct };
                    operators::build_bath_observable(kind, &FockBasis::new(p.particles, p.sites)?)?
                }
            };
            let text = op.to_triplet_string();
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
