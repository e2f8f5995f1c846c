//! Substep unitaries, the one-step operator and static phase disorder.
//!
//! Every substep is a product of disjoint two-site rotations
//! `cos(pi r / 4) I - i sin(pi r / 4) X_phi`. Odd bonds `(1,2), (3,4), ...`
//! carry the intracell amplitude `J1`, even bonds `(2,3), (4,5), ...` the
//! intercell amplitude `J2`. Links along `y` pick up the flux sign
//! `exp(i x pi) = (-1)^x` of the column they sit in.

use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, DisorderConfig, LatticeGeometry, WaveFunction};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Which family of nearest-neighbour bonds a substep acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BondParity {
    /// Bonds `(1,2), (3,4), ..., (M-1,M)`.
    Odd,
    /// Bonds `(2,3), ..., (M-2,M-1)`; sites 1 and M are left alone under open
    /// boundaries and joined by the wrap bond `(M,1)` under periodic ones.
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Substep(u8),
    OneStep,
    Disorder,
    Composite,
}

/// Two-site rotation `cos(pi r/4) I - i sin(pi r/4) X_phi`.
///
/// In the ordered basis `(lower, upper)` the upper-from-lower entry carries
/// `exp(i phi)` and the lower-from-upper entry `exp(-i phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationBlock {
    pub amplitude: f64,
    pub phase: f64,
}

impl RotationBlock {
    pub fn new(amplitude: f64, phase: f64) -> Self {
        Self { amplitude, phase }
    }

    pub fn angle(&self) -> f64 {
        FRAC_PI_4 * self.amplitude
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.angle().sin_cos();
        let off = C64::new(0.0, -s);
        [
            [C64::new(c, 0.0), off * C64::from_polar(1.0, -self.phase)],
            [off * C64::from_polar(1.0, self.phase), C64::new(c, 0.0)],
        ]
    }

    pub fn is_identity(&self) -> bool {
        self.angle().sin() == 0.0 && self.angle().cos() == 1.0
    }
}

/// A rotation acting on the pair of linear site indices `(lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub lower: usize,
    pub upper: usize,
    pub block: RotationBlock,
    matrix: [[C64; 2]; 2],
}

impl Bond {
    pub fn new(lower: usize, upper: usize, block: RotationBlock) -> Self {
        Self { lower, upper, block, matrix: block.matrix() }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Disjoint two-site blocks; sites not named by any bond are fixed.
    Bonds(Vec<Bond>),
    Diagonal(Vec<C64>),
    Dense(DMatrix<C64>),
    /// Factors applied first to last, i.e. the operator is `F_n ... F_2 F_1`.
    Product(Vec<WalkOperator>),
}

/// A unitary on the `M^2`-dimensional site space.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkOperator {
    dim: usize,
    kind: OperatorKind,
    repr: Repr,
}

impl WalkOperator {
    pub fn identity(dim: usize) -> Self {
        Self { dim, kind: OperatorKind::Composite, repr: Repr::Bonds(Vec::new()) }
    }

    /// Wraps a dense matrix. Fails if it is not square.
    pub fn from_dense(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), actual: matrix.ncols() });
        }
        Ok(Self { dim: matrix.nrows(), kind: OperatorKind::Composite, repr: Repr::Dense(matrix) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Bonds of a substep operator; `None` for other representations.
    pub fn bonds(&self) -> Option<&[Bond]> {
        match &self.repr {
            Repr::Bonds(b) => Some(b),
            _ => None,
        }
    }

    /// Diagonal entries of a disorder operator.
    pub fn diagonal(&self) -> Option<&[C64]> {
        match &self.repr {
            Repr::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    /// Factors of a composite operator, in application order.
    pub fn factors(&self) -> Option<&[WalkOperator]> {
        match &self.repr {
            Repr::Product(f) => Some(f),
            _ => None,
        }
    }

    /// `amps <- U amps`.
    pub fn apply_in_place(&self, amps: &mut [C64]) -> Result<()> {
        if amps.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: amps.len() });
        }
        self.apply_unchecked(amps);
        Ok(())
    }

    fn apply_unchecked(&self, amps: &mut [C64]) {
        match &self.repr {
            Repr::Bonds(bonds) => {
                for b in bonds {
                    let (lo, up) = (amps[b.lower], amps[b.upper]);
                    let m = &b.matrix;
                    amps[b.lower] = m[0][0] * lo + m[0][1] * up;
                    amps[b.upper] = m[1][0] * lo + m[1][1] * up;
                }
            }
            Repr::Diagonal(d) => {
                for (a, p) in amps.iter_mut().zip(d) {
                    *a *= p;
                }
            }
            Repr::Dense(u) => {
                let out: Vec<C64> = (0..self.dim).map(|i| (0..self.dim).map(|j| u[(i, j)] * amps[j]).sum()).collect();
                amps.copy_from_slice(&out);
            }
            Repr::Product(factors) => {
                for f in factors {
                    f.apply_unchecked(amps);
                }
            }
        }
    }

    /// Left-multiplies `target` by this operator.
    fn left_multiply(&self, target: &mut DMatrix<C64>) {
        match &self.repr {
            Repr::Bonds(bonds) => {
                for b in bonds {
                    let m = &b.matrix;
                    for col in 0..target.ncols() {
                        let lo = target[(b.lower, col)];
                        let up = target[(b.upper, col)];
                        target[(b.lower, col)] = m[0][0] * lo + m[0][1] * up;
                        target[(b.upper, col)] = m[1][0] * lo + m[1][1] * up;
                    }
                }
            }
            Repr::Diagonal(d) => {
                for (i, p) in d.iter().enumerate() {
                    for col in 0..target.ncols() {
                        target[(i, col)] *= p;
                    }
                }
            }
            Repr::Dense(u) => {
                *target = u * &*target;
            }
            Repr::Product(factors) => {
                for f in factors {
                    f.left_multiply(target);
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        if let Repr::Dense(u) = &self.repr {
            return u.clone();
        }
        let mut out = DMatrix::identity(self.dim, self.dim);
        self.left_multiply(&mut out);
        out
    }

    /// Collapses the operator into its dense matrix, keeping its kind.
    pub fn materialize(&self) -> WalkOperator {
        Self { dim: self.dim, kind: self.kind, repr: Repr::Dense(self.to_dense()) }
    }

    /// `max |(U^dagger U - I)_ij|`.
    pub fn unitarity_residual(&self) -> f64 {
        unitarity_residual(&self.to_dense())
    }
}

/// `max |(U^dagger U - I)_ij|` of a square matrix.
pub fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - target).norm());
        }
    }
    worst
}

/// `psi' = U psi`.
pub fn apply(op: &WalkOperator, psi: &WaveFunction) -> Result<WaveFunction> {
    let mut amps = psi.amplitudes().to_vec();
    op.apply_in_place(&mut amps)?;
    Ok(WaveFunction::from_unitary_image(amps))
}

/// Pairs `(a, a+1)` along one axis (1-based) for the given parity.
fn bond_pairs(m: usize, parity: BondParity, boundary: Boundary) -> Vec<(usize, usize)> {
    match parity {
        BondParity::Odd => (1..m).step_by(2).map(|a| (a, a + 1)).collect(),
        BondParity::Even => {
            let mut pairs: Vec<_> = (2..m - 1).step_by(2).map(|a| (a, a + 1)).collect();
            if boundary == Boundary::Periodic {
                pairs.push((m, 1));
            }
            pairs
        }
    }
}

fn substep_kind(axis_y: bool, parity: BondParity) -> OperatorKind {
    let n = match (axis_y, parity) {
        (false, BondParity::Odd) => 1,
        (false, BondParity::Even) => 2,
        (true, BondParity::Odd) => 3,
        (true, BondParity::Even) => 4,
    };
    OperatorKind::Substep(n)
}

/// Rotations with amplitude `r` on every `x`-bond of the given parity, identity in `y`.
pub fn build_translation_x(geom: &LatticeGeometry, parity: BondParity, r: f64) -> WalkOperator {
    build_translation_x_with(geom, parity, r, Boundary::Open)
}

pub fn build_translation_x_with(
    geom: &LatticeGeometry,
    parity: BondParity,
    r: f64,
    boundary: Boundary,
) -> WalkOperator {
    let m = geom.size();
    let block = RotationBlock::new(r, 0.0);
    let mut bonds = Vec::new();
    for (xa, xb) in bond_pairs(m, parity, boundary) {
        for y in 1..=m {
            bonds.push(Bond::new((xa - 1) * m + (y - 1), (xb - 1) * m + (y - 1), block));
        }
    }
    WalkOperator { dim: geom.total_sites(), kind: substep_kind(false, parity), repr: Repr::Bonds(bonds) }
}

/// Rotations with amplitude `r` on every `y`-bond of the given parity; the
/// bond in column `x` carries the phase `x pi`.
pub fn build_translation_y(geom: &LatticeGeometry, parity: BondParity, r: f64) -> WalkOperator {
    build_translation_y_with(geom, parity, r, Boundary::Open)
}

pub fn build_translation_y_with(
    geom: &LatticeGeometry,
    parity: BondParity,
    r: f64,
    boundary: Boundary,
) -> WalkOperator {
    let m = geom.size();
    let mut bonds = Vec::new();
    for x in 1..=m {
        let block = RotationBlock::new(r, flux_phase(x));
        for (ya, yb) in bond_pairs(m, parity, boundary) {
            bonds.push(Bond::new((x - 1) * m + (ya - 1), (x - 1) * m + (yb - 1), block));
        }
    }
    WalkOperator { dim: geom.total_sites(), kind: substep_kind(true, parity), repr: Repr::Bonds(bonds) }
}

/// Phase `x pi` of the `y`-links in column `x`, reduced to `{0, pi}`.
pub fn flux_phase(x: usize) -> f64 {
    if x.is_multiple_of(2) {
        0.0
    } else {
        PI
    }
}

/// `[U1, U2, U3, U4]` under open boundaries.
pub fn build_substeps(geom: &LatticeGeometry, cp: &CouplingParams) -> [WalkOperator; 4] {
    build_substeps_with(geom, cp, Boundary::Open)
}

pub fn build_substeps_with(geom: &LatticeGeometry, cp: &CouplingParams, boundary: Boundary) -> [WalkOperator; 4] {
    [
        build_translation_x_with(geom, BondParity::Odd, cp.j1, boundary),
        build_translation_x_with(geom, BondParity::Even, cp.j2, boundary),
        build_translation_y_with(geom, BondParity::Odd, cp.j1, boundary),
        build_translation_y_with(geom, BondParity::Even, cp.j2, boundary),
    ]
}

/// `U_step = U4 U3 U2 U1` under open boundaries.
pub fn build_one_step(geom: &LatticeGeometry, cp: &CouplingParams) -> WalkOperator {
    build_one_step_with(geom, cp, Boundary::Open)
}

pub fn build_one_step_with(geom: &LatticeGeometry, cp: &CouplingParams, boundary: Boundary) -> WalkOperator {
    WalkOperator {
        dim: geom.total_sites(),
        kind: OperatorKind::OneStep,
        repr: Repr::Product(build_substeps_with(geom, cp, boundary).into()),
    }
}

/// Site phases `delta_{x,y}` of one disorder realization, in site-index order.
pub fn disorder_phases(geom: &LatticeGeometry, dc: &DisorderConfig, realization_id: u64) -> Vec<f64> {
    let n = geom.total_sites();
    if dc.strength == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha20Rng::seed_from_u64(dc.seed);
    rng.set_stream(realization_id);
    let half = 0.5 * dc.strength;
    (0..n).map(|_| rng.gen_range(-half..=half)).collect()
}

/// Diagonal `U_dis = sum exp(i delta_{x,y}) |x,y><x,y|`, reproducible from
/// `(seed, realization_id)`.
pub fn build_disorder(geom: &LatticeGeometry, dc: &DisorderConfig, realization_id: u64) -> WalkOperator {
    let diag = disorder_phases(geom, dc, realization_id).into_iter().map(|d| C64::from_polar(1.0, d)).collect();
    WalkOperator { dim: geom.total_sites(), kind: OperatorKind::Disorder, repr: Repr::Diagonal(diag) }
}

/// `U_total = U_step U_dis`: disorder acts first.
pub fn compose_disordered_step(step: &WalkOperator, disorder: &WalkOperator) -> Result<WalkOperator> {
    if step.dim != disorder.dim {
        return Err(Error::DimensionMismatch { expected: step.dim, actual: disorder.dim });
    }
    Ok(WalkOperator {
        dim: step.dim,
        kind: OperatorKind::Composite,
        repr: Repr::Product(vec![disorder.clone(), step.clone()]),
    })
}
