//! Dense helpers for unitary matrices.

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenpairs of a unitary matrix, in no particular order.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub eigenvalues: Vec<C64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: DMatrix<C64>,
    /// Largest strictly-upper entry left in the Schur factor.
    pub schur_residual: f64,
}

/// Diagonalizes a unitary matrix through its complex Schur form.
///
/// A normal matrix has a diagonal Schur factor, so the Schur vectors form an
/// orthonormal eigenbasis even inside (near-)degenerate clusters, where a
/// general eigensolver would return a skewed basis.
pub fn unitary_eigen(u: &DMatrix<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    let schur = Schur::try_new(u.clone(), f64::EPSILON, 100 * n.max(10)).ok_or(Error::NoConvergence)?;
    let (q, t) = schur.unpack();
    let mut schur_residual = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            schur_residual = schur_residual.max(t[(i, j)].norm());
        }
    }
    Ok(UnitaryEigen { eigenvalues: (0..n).map(|i| t[(i, i)]).collect(), eigenvectors: q, schur_residual })
}

/// Closest unitary to `m` (polar factor `A B^dagger` of `m = A S B^dagger`) and
/// the smallest singular value of `m`.
pub fn unitarize(m: &DMatrix<C64>) -> (DMatrix<C64>, f64) {
    let svd = SVD::new(m.clone(), true, true);
    let sigma_min = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (u * v_t, sigma_min)
}

pub fn smallest_singular_value(m: &DMatrix<C64>) -> f64 {
    SVD::new(m.clone(), false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn eigen_of_diagonal_unitary() {
        let phases = [0.3, -1.2, 2.9, 0.3];
        let u = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            phases.iter().map(|&p| C64::from_polar(1.0, p)),
        ));
        let eig = unitary_eigen(&u).unwrap();
        let mut got: Vec<f64> = eig.eigenvalues.iter().map(|z| z.arg()).collect();
        got.sort_by(f64::total_cmp);
        let mut want = phases.to_vec();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn eigenvectors_reconstruct_degenerate_unitary() {
        // Rotated diag(i, i, -1, 1): a degenerate pair and a generic basis.
        let v = unitarize(&DMatrix::from_fn(4, 4, |i, j| C64::new((i * 3 + j) as f64, ((i + 2 * j) as f64).sin()))).0;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::i(),
            C64::i(),
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
        ]));
        let u = &v * d * v.adjoint();
        let eig = unitary_eigen(&u).unwrap();
        let q = &eig.eigenvectors;
        let recon = q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.eigenvalues.clone())) * q.adjoint();
        assert!(max_abs_diff(&recon, &u) < 1e-13);
        assert!(max_abs_diff(&(q.adjoint() * q), &DMatrix::identity(4, 4)) < 1e-13);
    }

    #[test]
    fn unitarize_is_identity_on_unitaries() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        );
        let (u, s) = unitarize(&m);
        assert!(max_abs_diff(&u, &m) < 1e-15);
        assert!((s - 1.0).abs() < 1e-15);
        assert!(smallest_singular_value(&DMatrix::<C64>::zeros(2, 2)) == 0.0);
    }

    #[test]
    fn wrap_phase_branch() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.0), 0.0);
    }
}
