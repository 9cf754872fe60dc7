//! Experiment runner for the open-map resonance library: configuration,
//! orchestration, caching and artifact output.

pub mod artifacts;
pub mod cache;
pub mod commands;
pub mod config;
pub mod error;

use clap::{Parser, Subcommand};
use serde_json::json;

use artifacts::{Artifacts, Timer};
use cache::Cache;
use commands::{Context, Side, Source};
use config::ConfigFlags;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "omrl",
    version,
    about = "Resonances and scar functions of open quantum maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub flags: ConfigFlags,
    /// Neither read nor write the on-disk cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exact and scar-method spectra with matching report and overlay plot.
    Spectrum {
        /// Also write the reduced H and S matrices.
        #[arg(long)]
        export_reduced: bool,
    },
    /// Husimi and mixed phase-space panels of one resonance state.
    Husimi {
        #[arg(long, value_enum, default_value = "both")]
        source: Source,
        #[arg(long, value_enum, default_value = "all")]
        side: Side,
    },
    /// Long-lived resonance counts over several N and their power-law fit.
    Weyl,
    /// Periodic orbits that avoid the opening.
    Orbits,
    /// Box-counting dimension of the trapped set.
    Dimension,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Husimi { .. } => "husimi",
            Command::Weyl => "weyl",
            Command::Orbits => "orbits",
            Command::Dimension => "dimension",
        }
    }
}

/// Runs one subcommand. On failure every file this run wrote is removed.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.flags.resolve()?;
    cfg.check()?;
    let cache = if cli.no_cache {
        Cache::disabled()
    } else {
        Cache::from_env()
    };
    let mut ctx = Context {
        cache,
        out: Artifacts::prepare(&cfg.out)?,
        timer: Timer::default(),
    };
    let result = match &cli.command {
        Command::Spectrum { export_reduced } => commands::spectrum(&cfg, &mut ctx, *export_reduced),
        Command::Husimi { source, side } => commands::husimi_panels(&cfg, &mut ctx, *source, *side),
        Command::Weyl => commands::weyl(&cfg, &mut ctx),
        Command::Orbits => commands::orbits(&cfg, &mut ctx),
        Command::Dimension => commands::dimension(&cfg, &mut ctx),
    };
    let Context {
        cache,
        mut out,
        timer,
    } = ctx;
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            out.discard();
            return Err(e);
        }
    };
    let mut manifest = json!({
        "command": cli.command.name(),
        "config": cfg,
        "versions": { "omrl": omrl::VERSION, "omrl-cli": env!("CARGO_PKG_VERSION") },
        "summary": summary,
        "artifacts": out.names(),
        "cache": cache.stats(),
        "timings": timer.into_stages(),
    });
    if let Command::Husimi { source, side } = &cli.command {
        manifest["selector"] = json!({ "source": source, "side": side });
    }
    let name = format!("{}_manifest.json", cli.command.name());
    if let Err(e) = out.write_json(&name, &manifest) {
        out.discard();
        return Err(e);
    }
    Ok(())
}
