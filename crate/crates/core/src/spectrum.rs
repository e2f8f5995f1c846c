//! Quasienergy spectra of the one-step operator and corner/edge state
//! identification.
//!
//! Quasienergies follow `U |E> = exp(-i E) |E>` on the branch `(-pi, pi]`, i.e.
//! they are the spectrum of `H_eff = i ln U`. The unitary is diagonalized
//! directly so no matrix logarithm is ever formed.

use nalgebra::{DMatrix, DVector, DVectorView};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, LatticeGeometry};
use crate::linalg::{unitary_eigen, wrap_phase};
use crate::walk::{build_one_step, WalkOperator};

/// Residual above which an input is rejected as non-unitary.
pub const UNITARITY_GUARD: f64 = 1e-8;
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;
pub const DEFAULT_EDGE_WINDOW: usize = 4;

/// Sorted quasienergies with their orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct QuasienergySpectrum {
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl QuasienergySpectrum {
    /// Quasienergies in ascending order.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Eigenvector of the `n`-th (0-based) quasienergy.
    pub fn eigenvector(&self, n: usize) -> DVectorView<'_, C64> {
        self.vectors.column(n)
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.vectors
    }

    /// `V diag(exp(-i E)) V^dagger`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DVector::from_iterator(self.len(), self.energies.iter().map(|&e| C64::from_polar(1.0, -e)));
        &self.vectors * DMatrix::from_diagonal(&d) * self.vectors.adjoint()
    }
}

/// Full eigendecomposition of a unitary walk operator.
pub fn quasienergy_spectrum(op: &WalkOperator) -> Result<QuasienergySpectrum> {
    spectrum_of_dense(&op.to_dense())
}

pub fn spectrum_of_dense(u: &DMatrix<C64>) -> Result<QuasienergySpectrum> {
    let residual = crate::walk::unitarity_residual(u);
    if residual > UNITARITY_GUARD {
        return Err(Error::NotUnitary { residual });
    }
    let eig = unitary_eigen(u)?;
    let n = u.nrows();

    // Gauge: largest component of each eigenvector made real and positive.
    let mut vectors = eig.eigenvectors;
    let mut anchor = vec![0usize; n];
    for (col, slot) in anchor.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_norm = -1.0;
        for row in 0..n {
            let a = vectors[(row, col)].norm();
            if a > best_norm + 1e-12 {
                best = row;
                best_norm = a;
            }
        }
        let phase = vectors[(best, col)] / best_norm;
        for row in 0..n {
            vectors[(row, col)] /= phase;
        }
        *slot = best;
    }

    let energies: Vec<f64> = eig.eigenvalues.iter().map(|z| wrap_phase(-z.arg())).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]).then(anchor[a].cmp(&anchor[b])));

    let sorted_vectors = DMatrix::from_fn(n, n, |row, col| vectors[(row, order[col])]);
    Ok(QuasienergySpectrum { energies: order.iter().map(|&i| energies[i]).collect(), vectors: sorted_vectors })
}

/// Zero modes, the edge window above them, and the remaining bulk states.
/// All indices are 0-based positions in the ascending spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateClassification {
    /// The four states of smallest `|E|`, ascending by position.
    pub zero_modes: Vec<usize>,
    /// Whether all four zero-mode candidates satisfy `|E| <= zero_tol`.
    pub has_zero_modes: bool,
    /// States immediately above the zero modes in the ascending ordering.
    pub edge_modes: Vec<usize>,
    pub bulk: Vec<usize>,
    /// Smallest `|E|` outside the zero modes minus the largest `|E|` inside.
    pub gap_to_bulk: f64,
}

impl StateClassification {
    /// 1-based state numbers of the edge window.
    pub fn edge_state_numbers(&self) -> Vec<usize> {
        self.edge_modes.iter().map(|i| i + 1).collect()
    }
}

pub fn classify_states(spec: &QuasienergySpectrum, zero_tol: f64, edge_window: usize) -> StateClassification {
    let e = spec.energies();
    let n = e.len();
    let mut by_abs: Vec<usize> = (0..n).collect();
    by_abs.sort_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()).then(a.cmp(&b)));

    let count = 4.min(n);
    let mut zero_modes: Vec<usize> = by_abs[..count].to_vec();
    zero_modes.sort_unstable();
    let has_zero_modes = count == 4 && zero_modes.iter().all(|&i| e[i].abs() <= zero_tol);

    let top = zero_modes.last().copied().unwrap_or(0);
    let edge_modes: Vec<usize> = ((top + 1)..n).take(edge_window).collect();
    let bulk: Vec<usize> = (0..n).filter(|i| !zero_modes.contains(i) && !edge_modes.contains(i)).collect();

    let inner = zero_modes.iter().map(|&i| e[i].abs()).fold(0.0, f64::max);
    let outer = by_abs.get(count).map(|&i| e[i].abs()).unwrap_or(f64::INFINITY);

    StateClassification { zero_modes, has_zero_modes, edge_modes, bulk, gap_to_bulk: outer - inner }
}

/// Summed `|amplitude|^2` per site over the selected states.
pub fn collective_distribution(spec: &QuasienergySpectrum, indices: &[usize]) -> Result<Vec<f64>> {
    let n = spec.len();
    let mut out = vec![0.0; n];
    for &k in indices {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, total: n });
        }
        for (site, amp) in spec.eigenvector(k).iter().enumerate() {
            out[site] += amp.norm_sqr();
        }
    }
    Ok(out)
}

/// One row of a quasienergy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub j1: f64,
    pub energies: Vec<f64>,
}

/// Spectra of the open-boundary step at fixed `J2` for each `J1`, in grid order.
pub fn spectrum_sweep(geom: &LatticeGeometry, j2: f64, j1_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if j1_grid.is_empty() {
        return Err(Error::InvalidParameter { name: "J1 grid", reason: "grid is empty".into() });
    }
    j1_grid
        .par_iter()
        .map(|&j1| {
            let cp = CouplingParams::new(j1, j2)?;
            let spec = quasienergy_spectrum(&build_one_step(geom, &cp))?;
            Ok(SweepRow { j1, energies: spec.energies().to_vec() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn spectrum(m: usize, j1: f64, j2: f64) -> QuasienergySpectrum {
        let g = LatticeGeometry::new(m).unwrap();
        quasienergy_spectrum(&build_one_step(&g, &CouplingParams::new(j1, j2).unwrap())).unwrap()
    }

    #[test]
    fn identity_has_zero_spectrum() {
        let spec = quasienergy_spectrum(&WalkOperator::identity(16)).unwrap();
        assert!(spec.energies().iter().all(|&e| e == 0.0));
    }

    #[test]
    fn rejects_non_unitary_input() {
        let m = DMatrix::from_element(3, 3, C64::new(1.0, 0.0));
        assert!(matches!(spectrum_of_dense(&m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn eigenpairs_reconstruct_step() {
        let g = LatticeGeometry::new(8).unwrap();
        let op = build_one_step(&g, &CouplingParams::new(0.4, 1.0).unwrap());
        let spec = quasienergy_spectrum(&op).unwrap();
        assert!(max_abs_diff(&spec.reconstruct(), &op.to_dense()) < 1e-9);
        let v = spec.eigenvectors();
        assert!(max_abs_diff(&(v.adjoint() * v), &DMatrix::identity(64, 64)) < 1e-10);
        assert!(spec.energies().windows(2).all(|w| w[0] <= w[1]));
        assert!(spec.energies().iter().all(|&e| e > -std::f64::consts::PI && e <= std::f64::consts::PI));
    }

    #[test]
    fn spectrum_is_symmetric_under_sign_flip() {
        for &(j1, j2) in &[(0.1, 1.0), (0.6, 1.0), (1.5, 1.0), (0.3, 0.8)] {
            let e = spectrum(8, j1, j2).energies().to_vec();
            let n = e.len();
            for i in 0..n {
                assert!((e[i] + e[n - 1 - i]).abs() < 1e-9, "J1={j1}: {} vs {}", e[i], e[n - 1 - i]);
            }
        }
    }

    #[test]
    fn decoupled_corners_are_exact_zero_modes() {
        let spec = spectrum(20, 0.0, 1.0);
        let class = classify_states(&spec, 1e-12, DEFAULT_EDGE_WINDOW);
        assert!(class.has_zero_modes);
        let dist = collective_distribution(&spec, &class.zero_modes).unwrap();
        let g = LatticeGeometry::new(20).unwrap();
        let corners = g.corner_indices();
        // In the decoupled limit the four corner sites may mix with other exact
        // zero modes only if there are more than four; there are not.
        for c in corners {
            assert!((dist[c] - 1.0).abs() < 1e-12, "corner {c}: {}", dist[c]);
        }
    }

    #[test]
    fn trivial_phase_has_no_zero_modes() {
        let spec = spectrum(20, 1.5, 1.0);
        let class = classify_states(&spec, DEFAULT_ZERO_TOL, DEFAULT_EDGE_WINDOW);
        assert!(!class.has_zero_modes);
        assert!(spec.energies().iter().all(|e| e.abs() > DEFAULT_ZERO_TOL));
    }

    #[test]
    fn collective_distribution_rejects_bad_index() {
        let spec = spectrum(4, 0.1, 1.0);
        assert!(collective_distribution(&spec, &[16]).is_err());
        let total: f64 = collective_distribution(&spec, &[0, 3, 5]).unwrap().iter().sum();
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let g = LatticeGeometry::new(4).unwrap();
        let rows = spectrum_sweep(&g, 1.0, &[0.0, 0.5, 1.5]).unwrap();
        assert_eq!(rows.iter().map(|r| r.j1).collect::<Vec<_>>(), vec![0.0, 0.5, 1.5]);
        assert!(rows.iter().all(|r| r.energies.len() == 16));
        assert!(spectrum_sweep(&g, 1.0, &[]).is_err());
    }
}
