//! Run configuration: TOML file, environment and flag overrides, validation.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, ValueEnum};
use cornerwalk::evolution::{DEFAULT_MAX_STEPS, DEFAULT_SNAPSHOTS};
use cornerwalk::{CouplingParams, DisorderConfig, LatticeGeometry};
use serde::{Deserialize, Serialize};

pub const OUTPUT_DIR_ENV: &str = "CORNERWALK_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Sweep,
    Invariant,
    Evolve,
    Disorder,
    Layout,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Spectrum => "spectrum",
            Command::Sweep => "sweep",
            Command::Invariant => "invariant",
            Command::Evolve => "evolve",
            Command::Disorder => "disorder",
            Command::Layout => "layout",
        };
        f.write_str(name)
    }
}

/// Fields accepted in a config file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[arg(long = "size", short = 'm')]
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(rename = "J1")]
    pub j1: Option<f64>,
    #[arg(long)]
    #[serde(rename = "J2")]
    pub j2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Disorder strength.
    #[arg(long = "disorder", short = 'w')]
    #[serde(rename = "W")]
    pub w: Option<f64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    #[serde(rename = "N_max")]
    pub n_max: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub snapshot_steps: Option<Vec<usize>>,
    /// Momentum grid points per direction.
    #[arg(long = "k-grid")]
    pub k_grid: Option<usize>,
    /// Initial site as `x,y` (1-based).
    #[arg(long, value_delimiter = ',')]
    pub initial_site: Option<Vec<usize>>,
    /// `start,end,points` of the J1 grid swept by `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; all cores when unset.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Overrides {
    /// Fields set in `other` replace those in `self`.
    fn merge(&mut self, other: Overrides) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            m,
            j1,
            j2,
            seed,
            w,
            realizations,
            n_max,
            snapshot_steps,
            k_grid,
            initial_site,
            sweep,
            output_dir,
            threads
        );
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(flatten)]
    fields: Overrides,
}

#[derive(Debug, Parser)]
#[command(
    name = "cornerwalk",
    version,
    about = "Corner states of a two-dimensional quantum walk",
    allow_negative_numbers = true
)]
pub struct Cli {
    /// What to compute; may instead be given as `command` in the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML config file; flags override its values.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "J1")]
    pub j1: f64,
    #[serde(rename = "J2")]
    pub j2: f64,
    pub seed: u64,
    #[serde(rename = "W")]
    pub w: f64,
    pub realizations: usize,
    #[serde(rename = "N_max")]
    pub n_max: usize,
    pub snapshot_steps: Vec<usize>,
    pub k_grid: usize,
    pub initial_site: (usize, usize),
    pub sweep: (f64, f64, usize),
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn geometry(&self) -> cornerwalk::Result<LatticeGeometry> {
        LatticeGeometry::new(self.m)
    }

    pub fn couplings(&self) -> cornerwalk::Result<CouplingParams> {
        CouplingParams::new(self.j1, self.j2)
    }

    pub fn disorder(&self) -> cornerwalk::Result<DisorderConfig> {
        DisorderConfig::new(self.w, self.seed, self.realizations)
    }

    pub fn sweep_grid(&self) -> Vec<f64> {
        let (a, b, n) = self.sweep;
        if n == 1 {
            return vec![a];
        }
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Reads and validates a config from parsed command-line arguments.
pub fn parse_config(cli: Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => read_file(path)?,
        None => FileConfig::default(),
    };
    let mut fields = file.fields;
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            fields.output_dir = Some(PathBuf::from(dir));
        }
    }
    fields.merge(cli.overrides);
    let command = cli.command.or(file.command).context("no command given (flag or `command` in config)")?;
    resolve(command, fields)
}

fn read_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn resolve(command: Command, f: Overrides) -> Result<RunConfig> {
    let initial_site = match f.initial_site.as_deref() {
        None => (1, 1),
        Some(&[x, y]) => (x, y),
        Some(other) => bail!("initial_site: expected two coordinates, got {}", other.len()),
    };
    let sweep = match f.sweep.as_deref() {
        None => (0.0, 2.0, 41),
        Some(&[a, b, n]) => {
            if !(n >= 1.0 && n.fract() == 0.0) {
                bail!("sweep: point count must be a positive integer, got {n}");
            }
            (a, b, n as usize)
        }
        Some(other) => bail!("sweep: expected start,end,points, got {} values", other.len()),
    };
    let cfg = RunConfig {
        command,
        m: f.m.unwrap_or(20),
        j1: f.j1.unwrap_or(0.1),
        j2: f.j2.unwrap_or(1.0),
        seed: f.seed.unwrap_or(0),
        w: f.w.unwrap_or(2.5),
        realizations: f.realizations.unwrap_or(100),
        n_max: f.n_max.unwrap_or(DEFAULT_MAX_STEPS),
        snapshot_steps: f.snapshot_steps.unwrap_or_else(|| DEFAULT_SNAPSHOTS.to_vec()),
        k_grid: f.k_grid.unwrap_or(cornerwalk::bloch::DEFAULT_GRID),
        initial_site,
        sweep,
        output_dir: f.output_dir.unwrap_or_else(|| PathBuf::from("output")),
        threads: f.threads,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let geom = cfg.geometry().context("M")?;
    cfg.couplings().context("J1/J2")?;
    cfg.disorder().context("W/realizations/seed")?;
    let (x, y) = cfg.initial_site;
    if !geom.contains(x, y) {
        bail!("initial_site: ({x}, {y}) lies outside the {0}x{0} lattice", cfg.m);
    }
    if cfg.k_grid < cornerwalk::bloch::MIN_GRID {
        bail!("k_grid: {} is below the minimum of {}", cfg.k_grid, cornerwalk::bloch::MIN_GRID);
    }
    let late = cfg.snapshot_steps.iter().find(|&&s| s > cfg.n_max);
    if let (Command::Evolve, Some(&s)) = (cfg.command, late) {
        bail!("snapshot_steps: step {s} exceeds N_max = {}", cfg.n_max);
    }
    let (a, b, _) = cfg.sweep;
    if !a.is_finite() || !b.is_finite() {
        bail!("sweep: bounds must be finite");
    }
    if cfg.threads == Some(0) {
        bail!("threads: must be at least 1");
    }
    Ok(())
}
