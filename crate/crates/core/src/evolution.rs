//! Multi-step walker dynamics, corner/edge occupation curves and static
//! disorder ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, DisorderConfig, LatticeGeometry, WaveFunction};
use crate::walk::{build_disorder, build_one_step, compose_disordered_step, WalkOperator};

/// Snapshot steps of the default run.
pub const DEFAULT_SNAPSHOTS: [usize; 4] = [5, 50, 100, 150];
pub const DEFAULT_MAX_STEPS: usize = 150;

/// Probability fields `|psi_N|^2` captured at the requested step counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial_site: Option<(usize, usize)>,
    /// Ascending, without duplicates.
    pub steps: Vec<usize>,
    pub snapshots: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn snapshot(&self, step: usize) -> Option<&[f64]> {
        self.steps.binary_search(&step).ok().map(|i| self.snapshots[i].as_slice())
    }

    /// Largest step reached, provided every step `0..=N` is present.
    fn contiguous_max(&self) -> Result<usize> {
        for (i, &s) in self.steps.iter().enumerate() {
            if s != i {
                return Err(Error::MissingStep(i));
            }
        }
        self.steps.last().copied().ok_or(Error::MissingStep(0))
    }
}

/// Applies `op` repeatedly, recording the distribution after each requested
/// number of steps (0 means the initial state).
pub fn evolve(psi0: &WaveFunction, op: &WalkOperator, steps_wanted: &[usize]) -> Result<Trajectory> {
    let mut steps = steps_wanted.to_vec();
    steps.sort_unstable();
    steps.dedup();

    let mut amps = psi0.amplitudes().to_vec();
    if amps.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), actual: amps.len() });
    }
    let mut snapshots = Vec::with_capacity(steps.len());
    let mut done = 0;
    for &target in &steps {
        while done < target {
            op.apply_in_place(&mut amps)?;
            done += 1;
        }
        let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        snapshots.push(probs);
    }
    Ok(Trajectory { initial_site: None, steps, snapshots })
}

/// Every step from 0 to `n_max`.
pub fn evolve_all(psi0: &WaveFunction, op: &WalkOperator, n_max: usize) -> Result<Trajectory> {
    evolve(psi0, op, &(0..=n_max).collect::<Vec<_>>())
}

/// A set of sites whose summed occupation is tracked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Site {
        x: usize,
        y: usize,
    },
    /// Column `x`, optionally without its two corner sites.
    EdgeColumn {
        x: usize,
        exclude_corners: bool,
    },
    Sites {
        indices: Vec<usize>,
    },
}

impl Region {
    pub fn indices(&self, geom: &LatticeGeometry) -> Result<Vec<usize>> {
        let m = geom.size();
        match self {
            Region::Site { x, y } => Ok(vec![geom.site_index(*x, *y)?]),
            Region::EdgeColumn { x, exclude_corners } => {
                let ys = if *exclude_corners { 2..=m - 1 } else { 1..=m };
                ys.map(|y| geom.site_index(*x, y)).collect()
            }
            Region::Sites { indices } => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= geom.total_sites()) {
                    return Err(Error::IndexOutOfRange { index: bad, total: geom.total_sites() });
                }
                Ok(indices.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub strength: f64,
    pub realizations: usize,
    pub seed: u64,
}

/// `P(N)` for `N = 0..=N_max`, optionally an ensemble mean with its spread.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationCurve {
    pub region: Region,
    pub values: Vec<f64>,
    /// Per-step standard deviation across realizations (ensembles only).
    pub spread: Option<Vec<f64>>,
    pub ensemble: Option<EnsembleMeta>,
}

impl LocalizationCurve {
    pub fn at(&self, step: usize) -> Option<f64> {
        self.values.get(step).copied()
    }
}

fn region_sum(probs: &[f64], sites: &[usize]) -> f64 {
    sites.iter().map(|&i| probs[i]).sum()
}

pub fn region_probability(traj: &Trajectory, geom: &LatticeGeometry, region: Region) -> Result<LocalizationCurve> {
    traj.contiguous_max()?;
    let sites = region.indices(geom)?;
    let values = traj.snapshots.iter().map(|p| region_sum(p, &sites)).collect();
    Ok(LocalizationCurve { region, values, spread: None, ensemble: None })
}

/// `P_c(N)`: occupation of the single corner site.
pub fn corner_probability(
    traj: &Trajectory,
    geom: &LatticeGeometry,
    corner: (usize, usize),
) -> Result<LocalizationCurve> {
    region_probability(traj, geom, Region::Site { x: corner.0, y: corner.1 })
}

/// `P_e(N)`: summed occupation of column `x`, corners optionally excluded.
pub fn edge_probability(
    traj: &Trajectory,
    geom: &LatticeGeometry,
    column: usize,
    exclude_corners: bool,
) -> Result<LocalizationCurve> {
    region_probability(traj, geom, Region::EdgeColumn { x: column, exclude_corners })
}

fn region_series(psi0: &WaveFunction, op: &WalkOperator, n_max: usize, sites: &[usize]) -> Result<Vec<f64>> {
    let mut amps = psi0.amplitudes().to_vec();
    let mut out = Vec::with_capacity(n_max + 1);
    let prob = |amps: &[num_complex::Complex64]| sites.iter().map(|&i| amps[i].norm_sqr()).sum::<f64>();
    out.push(prob(&amps));
    for _ in 0..n_max {
        op.apply_in_place(&mut amps)?;
        out.push(prob(&amps));
    }
    Ok(out)
}

/// Ensemble-averaged region occupation under static disorder.
///
/// Realization `r` draws one `U_dis(r)` and evolves with `U_step U_dis(r)` at
/// every step. Realizations run in parallel; the reduction walks them in
/// index order so the result does not depend on scheduling.
pub fn disorder_ensemble(
    geom: &LatticeGeometry,
    cp: &CouplingParams,
    dc: &DisorderConfig,
    psi0: &WaveFunction,
    n_max: usize,
    region: Region,
) -> Result<LocalizationCurve> {
    let sites = region.indices(geom)?;
    let step = build_one_step(geom, cp);
    let meta = EnsembleMeta { strength: dc.strength, realizations: dc.realizations, seed: dc.seed };

    // Without disorder every realization is the clean walk.
    if dc.strength == 0.0 {
        let values = region_series(psi0, &step, n_max, &sites)?;
        let spread = vec![0.0; values.len()];
        return Ok(LocalizationCurve { region, values, spread: Some(spread), ensemble: Some(meta) });
    }

    let runs: Vec<Vec<f64>> = (0..dc.realizations as u64)
        .into_par_iter()
        .map(|r| {
            let op = compose_disordered_step(&step, &build_disorder(geom, dc, r))?;
            region_series(psi0, &op, n_max, &sites)
        })
        .collect::<Result<_>>()?;

    let count = runs.len() as f64;
    let mut mean = vec![0.0; n_max + 1];
    for run in &runs {
        for (m, v) in mean.iter_mut().zip(run) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; n_max + 1];
    for run in &runs {
        for ((s, v), m) in var.iter_mut().zip(run).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let spread = var.into_iter().map(|s| (s / count).sqrt()).collect();
    Ok(LocalizationCurve { region, values: mean, spread: Some(spread), ensemble: Some(meta) })
}

/// Walk started on site `(x, y)` under the clean step.
pub fn evolve_from_site(
    geom: &LatticeGeometry,
    cp: &CouplingParams,
    site: (usize, usize),
    steps_wanted: &[usize],
) -> Result<Trajectory> {
    let psi0 = crate::lattice::localized_state(site.0, site.1, geom)?;
    let mut traj = evolve(&psi0, &build_one_step(geom, cp), steps_wanted)?;
    traj.initial_site = Some(site);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::localized_state;

    fn g20() -> LatticeGeometry {
        LatticeGeometry::new(20).unwrap()
    }

    fn cp(j1: f64) -> CouplingParams {
        CouplingParams::new(j1, 1.0).unwrap()
    }

    #[test]
    fn identity_leaves_distribution_unchanged() {
        let g = LatticeGeometry::new(6).unwrap();
        let psi = localized_state(2, 5, &g).unwrap();
        let traj = evolve(&psi, &WalkOperator::identity(36), &[0, 3, 9]).unwrap();
        for snap in &traj.snapshots {
            assert_eq!(snap, &psi.probabilities());
        }
    }

    #[test]
    fn snapshots_are_normalized_and_sorted() {
        let g = LatticeGeometry::new(8).unwrap();
        let traj = evolve_from_site(&g, &cp(0.6), (3, 4), &[50, 5, 5, 0]).unwrap();
        assert_eq!(traj.steps, vec![0, 5, 50]);
        assert_eq!(traj.initial_site, Some((3, 4)));
        for snap in &traj.snapshots {
            assert!((snap.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!(traj.snapshot(5).is_some() && traj.snapshot(6).is_none());
    }

    #[test]
    fn decoupled_corner_never_moves() {
        let g = g20();
        let psi = localized_state(1, 1, &g).unwrap();
        let traj = evolve_all(&psi, &build_one_step(&g, &cp(0.0)), 150).unwrap();
        let pc = corner_probability(&traj, &g, (1, 1)).unwrap();
        assert!(pc.values.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn curves_need_contiguous_steps() {
        let g = LatticeGeometry::new(4).unwrap();
        let traj = evolve_from_site(&g, &cp(0.1), (1, 1), &[0, 1, 3]).unwrap();
        assert_eq!(corner_probability(&traj, &g, (1, 1)).unwrap_err(), Error::MissingStep(2));
    }

    #[test]
    fn initial_values_are_one() {
        let g = g20();
        let a = evolve_from_site(&g, &cp(0.1), (1, 1), &(0..=3).collect::<Vec<_>>()).unwrap();
        assert_eq!(corner_probability(&a, &g, (1, 1)).unwrap().values[0], 1.0);
        let b = evolve_from_site(&g, &cp(0.1), (1, 2), &(0..=3).collect::<Vec<_>>()).unwrap();
        assert_eq!(edge_probability(&b, &g, 1, true).unwrap().values[0], 1.0);
    }

    #[test]
    fn trivial_phase_spreads_into_bulk() {
        let g = g20();
        let traj = evolve_from_site(&g, &cp(1.5), (1, 1), &[150]).unwrap();
        let patch: f64 = g
            .corner_patches(3)
            .iter()
            .filter(|&&i| {
                let (x, y) = g.site_coords(i).unwrap();
                x <= 3 && y <= 3
            })
            .map(|&i| traj.snapshot(150).unwrap()[i])
            .sum();
        assert!(patch < 0.1, "patch weight {patch}");
    }

    #[test]
    fn edge_region_excludes_corners() {
        let g = LatticeGeometry::new(6).unwrap();
        let with = Region::EdgeColumn { x: 1, exclude_corners: false }.indices(&g).unwrap();
        let without = Region::EdgeColumn { x: 1, exclude_corners: true }.indices(&g).unwrap();
        assert_eq!(with, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(without, vec![1, 2, 3, 4]);
        assert!(Region::Sites { indices: vec![36] }.indices(&g).is_err());
    }

    #[test]
    fn clean_ensemble_equals_clean_curve() {
        let g = LatticeGeometry::new(8).unwrap();
        let psi = localized_state(1, 2, &g).unwrap();
        let dc = DisorderConfig::new(0.0, 3, 10).unwrap();
        let region = Region::EdgeColumn { x: 1, exclude_corners: true };
        let ens = disorder_ensemble(&g, &cp(0.1), &dc, &psi, 40, region.clone()).unwrap();
        let traj = evolve_all(&psi, &build_one_step(&g, &cp(0.1)), 40).unwrap();
        let clean = region_probability(&traj, &g, region).unwrap();
        assert_eq!(ens.values, clean.values);
        assert!(ens.spread.unwrap().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn ensemble_is_reproducible() {
        let g = LatticeGeometry::new(8).unwrap();
        let psi = localized_state(1, 1, &g).unwrap();
        let dc = DisorderConfig::new(2.5, 99, 16).unwrap();
        let region = Region::Site { x: 1, y: 1 };
        let a = disorder_ensemble(&g, &cp(0.1), &dc, &psi, 30, region.clone()).unwrap();
        let b = disorder_ensemble(&g, &cp(0.1), &dc, &psi, 30, region.clone()).unwrap();
        assert_eq!(a, b);
        let other = DisorderConfig { seed: 100, ..dc };
        assert_ne!(a.values, disorder_ensemble(&g, &cp(0.1), &other, &psi, 30, region).unwrap().values);
        assert!(a.values.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
    }
}
