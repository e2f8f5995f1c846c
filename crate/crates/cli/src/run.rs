//! Command dispatch and output emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cornerwalk::bloch::{quadrupole_invariant, Direction, FrameGrid, WannierData, WilsonOptions};
use cornerwalk::evolution::{disorder_ensemble, evolve_all, region_probability, LocalizationCurve, Region};
use cornerwalk::linalg::max_abs_diff;
use cornerwalk::photonic::{compile_step, simulate_layout};
use cornerwalk::spectrum::{
    classify_states, collective_distribution, quasienergy_spectrum, spectrum_sweep, DEFAULT_EDGE_WINDOW,
    DEFAULT_ZERO_TOL,
};
use cornerwalk::{build_one_step, localized_state, LatticeGeometry};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Command, RunConfig};

/// Largest compiled-layout deviation accepted by `layout`.
pub const LAYOUT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub checks: BTreeMap<String, f64>,
    pub wall_time_s: f64,
    pub files: Vec<OutputFile>,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
    checks: BTreeMap<String, f64>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), checks: BTreeMap::new() })
    }

    fn write(&mut self, name: &str, data: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, data).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(OutputFile {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len(),
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for row in rows {
            w.write_record(&row)?;
        }
        let mut data = format!("# {header}\n").into_bytes();
        data.extend(w.into_inner().context("flushing csv")?);
        self.write(name, &data)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut data = serde_json::to_vec_pretty(value)?;
        data.push(b'\n');
        self.write(name, &data)
    }

    /// Site values as an `M x M` block: row `x`, column `y`.
    fn grid(&mut self, name: &str, geom: &LatticeGeometry, values: &[f64]) -> Result<()> {
        let m = geom.size();
        let rows = values.chunks(m).map(|row| row.iter().map(|&v| num(v)).collect());
        self.csv(name, "rows x=1..M, columns y=1..M", rows)
    }

    fn curve(&mut self, name: &str, curve: &LocalizationCurve) -> Result<()> {
        let rows = curve.values.iter().enumerate().map(|(n, &p)| {
            let s = curve.spread.as_ref().map_or(0.0, |s| s[n]);
            vec![n.to_string(), num(p), num(s)]
        });
        self.csv(name, "N,P_mean,P_std", rows)
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Region tracked for a walker started at `site`: that corner, or the edge
/// column it sits on without its corners, or the site itself in the bulk.
pub fn region_for(site: (usize, usize), geom: &LatticeGeometry) -> Region {
    let m = geom.size();
    let (x, y) = site;
    let on_x_edge = x == 1 || x == m;
    let on_y_edge = y == 1 || y == m;
    if on_x_edge && !on_y_edge {
        Region::EdgeColumn { x, exclude_corners: true }
    } else {
        Region::Site { x, y }
    }
}

/// Runs one command, writing its files and `manifest.json` into the output directory.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(|| run_inner(cfg)),
        None => run_inner(cfg),
    }
}

fn run_inner(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut out = Outputs::new(&cfg.output_dir)?;
    match cfg.command {
        Command::Spectrum => spectrum(cfg, &mut out)?,
        Command::Sweep => sweep(cfg, &mut out)?,
        Command::Invariant => invariant(cfg, &mut out)?,
        Command::Evolve => evolve(cfg, &mut out)?,
        Command::Disorder => disorder(cfg, &mut out)?,
        Command::Layout => layout(cfg, &mut out)?,
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        checks: out.checks.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files: out.files.clone(),
    };
    let path = cfg.output_dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}

#[derive(Serialize)]
struct SpectrumSummary {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "J1")]
    j1: f64,
    #[serde(rename = "J2")]
    j2: f64,
    zero_tolerance: f64,
    has_zero_modes: bool,
    /// 1-based state numbers.
    zero_mode_states: Vec<usize>,
    edge_states: Vec<usize>,
    gap_to_bulk: f64,
    corner_patch_weight: f64,
}

fn spectrum(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let geom = cfg.geometry()?;
    let cp = cfg.couplings()?;
    let spec = quasienergy_spectrum(&build_one_step(&geom, &cp))?;
    let class = classify_states(&spec, DEFAULT_ZERO_TOL, DEFAULT_EDGE_WINDOW);
    let corner = collective_distribution(&spec, &class.zero_modes)?;
    let edge = collective_distribution(&spec, &class.edge_modes)?;
    let patch_weight = geom.corner_patches(3).iter().map(|&i| corner[i]).sum::<f64>() / class.zero_modes.len() as f64;

    out.csv(
        "spectrum.csv",
        "n,E",
        spec.energies().iter().enumerate().map(|(n, &e)| vec![(n + 1).to_string(), num(e)]),
    )?;
    out.grid("corner_modes.csv", &geom, &corner)?;
    out.grid("edge_modes.csv", &geom, &edge)?;
    out.json(
        "spectrum.json",
        &SpectrumSummary {
            m: cfg.m,
            j1: cp.j1,
            j2: cp.j2,
            zero_tolerance: DEFAULT_ZERO_TOL,
            has_zero_modes: class.has_zero_modes,
            zero_mode_states: class.zero_modes.iter().map(|i| i + 1).collect(),
            edge_states: class.edge_state_numbers(),
            gap_to_bulk: class.gap_to_bulk,
            corner_patch_weight: patch_weight,
        },
    )
}

fn sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let geom = cfg.geometry()?;
    let rows = spectrum_sweep(&geom, cfg.j2, &cfg.sweep_grid())?;
    let lines = rows
        .iter()
        .flat_map(|r| r.energies.iter().enumerate().map(move |(n, &e)| vec![num(r.j1), (n + 1).to_string(), num(e)]));
    out.csv("sweep.csv", "J1,n,E", lines)
}

#[derive(Serialize)]
struct InvariantSummary {
    #[serde(rename = "J1")]
    j1: f64,
    #[serde(rename = "J2")]
    j2: f64,
    #[serde(rename = "N")]
    n: usize,
    p_y_plus: f64,
    p_y_minus: f64,
    p_x_plus: f64,
    p_x_minus: f64,
    nu: u8,
    quantization_error: f64,
}

fn wannier_rows(data: &WannierData) -> impl Iterator<Item = Vec<String>> + '_ {
    data.transverse_k.iter().zip(&data.plus).zip(&data.minus).map(|((&k, &p), &m)| vec![num(k), num(p), num(m)])
}

fn invariant(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let cp = cfg.couplings()?;
    let n = cfg.k_grid;
    let q = quadrupole_invariant(&cp, n, n)?;
    let grid = FrameGrid::build(&cp, n, n)?;
    let wx = grid.wannier_bands(Direction::X, WilsonOptions::default())?;
    let wy = grid.wannier_bands(Direction::Y, WilsonOptions::default())?;
    out.checks.insert("quantization_error".into(), q.quantization_error);

    out.json(
        "invariant.json",
        &InvariantSummary {
            j1: cp.j1,
            j2: cp.j2,
            n,
            p_y_plus: q.p_y[0],
            p_y_minus: q.p_y[1],
            p_x_plus: q.p_x[0],
            p_x_minus: q.p_x[1],
            nu: q.nu,
            quantization_error: q.quantization_error,
        },
    )?;
    out.csv("wannier_x.csv", "k_y,nu_x_plus,nu_x_minus", wannier_rows(&wx))?;
    out.csv("wannier_y.csv", "k_x,nu_y_plus,nu_y_minus", wannier_rows(&wy))
}

fn evolve(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let geom = cfg.geometry()?;
    let cp = cfg.couplings()?;
    let (x, y) = cfg.initial_site;
    let traj = evolve_all(&localized_state(x, y, &geom)?, &build_one_step(&geom, &cp), cfg.n_max)?;
    let mut steps = cfg.snapshot_steps.clone();
    steps.sort_unstable();
    steps.dedup();
    for n in steps {
        let snap = traj.snapshot(n).context("snapshot step beyond N_max")?;
        out.grid(&format!("snapshot_{n:04}.csv"), &geom, snap)?;
    }
    let curve = region_probability(&traj, &geom, region_for(cfg.initial_site, &geom))?;
    out.curve("curve.csv", &curve)?;
    out.json("region.json", &curve.region)
}

#[derive(Serialize)]
struct DisorderSummary {
    region: Region,
    #[serde(rename = "W")]
    w: f64,
    realizations: usize,
    seed: u64,
    #[serde(rename = "N_max")]
    n_max: usize,
    clean: f64,
    disordered: f64,
    relative_drop: f64,
}

fn disorder(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let geom = cfg.geometry()?;
    let cp = cfg.couplings()?;
    let dc = cfg.disorder()?;
    let (x, y) = cfg.initial_site;
    let psi0 = localized_state(x, y, &geom)?;
    let region = region_for(cfg.initial_site, &geom);

    let clean = region_probability(&evolve_all(&psi0, &build_one_step(&geom, &cp), cfg.n_max)?, &geom, region.clone())?;
    let ens = disorder_ensemble(&geom, &cp, &dc, &psi0, cfg.n_max, region.clone())?;
    out.curve("curve.csv", &ens)?;
    out.curve("curve_clean.csv", &clean)?;
    let (c, d) = (clean.values[cfg.n_max], ens.values[cfg.n_max]);
    out.json(
        "disorder.json",
        &DisorderSummary {
            region,
            w: dc.strength,
            realizations: dc.realizations,
            seed: dc.seed,
            n_max: cfg.n_max,
            clean: c,
            disordered: d,
            relative_drop: (c - d) / c,
        },
    )
}

fn layout(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let geom = cfg.geometry()?;
    let cp = cfg.couplings()?;
    let schedule = compile_step(&geom, &cp);
    let err = max_abs_diff(&simulate_layout(&schedule)?, &build_one_step(&geom, &cp).to_dense());
    out.checks.insert("layout_round_trip".into(), err);
    if err > LAYOUT_TOL {
        bail!("compiled layout deviates from the step operator by {err:e}");
    }
    out.write("layout.json", format!("{}\n", schedule.to_json()?).as_bytes())
}
