//! Momentum-space one-step operator, Wilson loops, Wannier bands, nested
//! Wilson loops and the quadrupole index.
//!
//! The unit cell holds 2x2 sites. Orbital `s = 2a + b` sits at
//! `x = 2X + 1 + a`, `y = 2Y + 1 + b`, so orbitals with `a = 0` live in odd
//! columns and see the flux phase `pi` on their `y`-links. Bloch phases are
//! attached to intercell bonds only, which makes `U(k)` strictly
//! `2 pi`-periodic in both directions and lets a closed Wilson loop reuse the
//! frame at `k` for `k + 2 pi`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CouplingParams;
use crate::linalg::{unitarize, unitary_eigen, wrap_phase};
use crate::walk::{flux_phase, RotationBlock};

/// Eigenphases closer than this to `0` or `pi` count as a gap closure.
pub const GAP_TOL: f64 = 1e-10;
/// Overlap matrices with a smaller singular value mean the grid is too coarse.
pub const OVERLAP_TOL: f64 = 1e-8;
/// Wannier values closer than this (mod 1) count as degenerate.
pub const WANNIER_GAP_TOL: f64 = 1e-8;
/// Grid size used for the index: `N = 50` intervals, 51 points with the end
/// point identified with the start.
pub const DEFAULT_GRID: usize = 50;
pub const MIN_GRID: usize = 8;

fn orbital(a: usize, b: usize) -> usize {
    2 * a + b
}

/// `U(k)` on the 4-orbital unit cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochStep {
    pub k: (f64, f64),
    pub matrix: DMatrix<C64>,
}

/// Places a rotation block on orbitals `(lower, upper)`. For intercell bonds the
/// upper orbital belongs to the next cell along the bond, so the hop
/// lower -> upper carries `exp(-i k)` and its reverse `exp(i k)`.
fn embed_block(block: &RotationBlock, pairs: &[(usize, usize)], k: f64) -> DMatrix<C64> {
    let m = block.matrix();
    let bloch = C64::from_polar(1.0, -k);
    let mut out = DMatrix::zeros(4, 4);
    for &(lo, up) in pairs {
        out[(lo, lo)] = m[0][0];
        out[(up, up)] = m[1][1];
        out[(up, lo)] = m[1][0] * bloch;
        out[(lo, up)] = m[0][1] * bloch.conj();
    }
    out
}

/// The four momentum-space substeps `[U1(k), ..., U4(k)]`.
pub fn bloch_substeps(kx: f64, ky: f64, cp: &CouplingParams) -> [DMatrix<C64>; 4] {
    let x_intra = RotationBlock::new(cp.j1, 0.0);
    let x_inter = RotationBlock::new(cp.j2, 0.0);
    let u1 = embed_block(&x_intra, &[(orbital(0, 0), orbital(1, 0)), (orbital(0, 1), orbital(1, 1))], 0.0);
    let u2 = embed_block(&x_inter, &[(orbital(1, 0), orbital(0, 0)), (orbital(1, 1), orbital(0, 1))], kx);

    // y-links: the flux phase depends only on the column parity.
    let mut u3 = DMatrix::zeros(4, 4);
    let mut u4 = DMatrix::zeros(4, 4);
    for a in 0..2 {
        let phase = flux_phase(a + 1);
        u3 += embed_block(&RotationBlock::new(cp.j1, phase), &[(orbital(a, 0), orbital(a, 1))], 0.0);
        u4 += embed_block(&RotationBlock::new(cp.j2, phase), &[(orbital(a, 1), orbital(a, 0))], ky);
    }
    [u1, u2, u3, u4]
}

pub fn build_bloch_step(kx: f64, ky: f64, cp: &CouplingParams) -> BlochStep {
    let [u1, u2, u3, u4] = bloch_substeps(kx, ky, cp);
    BlochStep { k: (kx, ky), matrix: u4 * u3 * u2 * u1 }
}

impl BlochStep {
    /// Quasienergies `E` with `U(k) |E> = exp(-i E) |E>`, ascending.
    pub fn quasienergies(&self) -> Result<Vec<f64>> {
        let eig = unitary_eigen(&self.matrix)?;
        let mut e: Vec<f64> = eig.eigenvalues.iter().map(|z| wrap_phase(-z.arg())).collect();
        e.sort_by(f64::total_cmp);
        Ok(e)
    }
}

/// Orthonormal basis (4x2) of the two lower bands, `E in (-pi, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupiedFrame {
    pub k: (f64, f64),
    pub vectors: DMatrix<C64>,
    pub energies: [f64; 2],
}

impl OccupiedFrame {
    /// Spectral projector `V V^dagger`.
    pub fn projector(&self) -> DMatrix<C64> {
        &self.vectors * self.vectors.adjoint()
    }
}

pub fn occupied_frame(bs: &BlochStep) -> Result<OccupiedFrame> {
    let eig = unitary_eigen(&bs.matrix)?;
    let energies: Vec<f64> = eig.eigenvalues.iter().map(|z| wrap_phase(-z.arg())).collect();
    let distance = energies.iter().map(|e| e.abs().min(PI - e.abs())).fold(f64::INFINITY, f64::min);
    let lower: Vec<usize> = (0..4).filter(|&i| energies[i] < 0.0).collect();
    if distance < GAP_TOL || lower.len() != 2 {
        return Err(Error::GapClosure { kx: bs.k.0, ky: bs.k.1, distance });
    }
    let vectors = DMatrix::from_fn(4, 2, |r, c| eig.eigenvectors[(r, lower[c])]);
    Ok(OccupiedFrame { k: bs.k, vectors, energies: [energies[lower[0]], energies[lower[1]]] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    Y,
}

impl Direction {
    pub fn transverse(self) -> Direction {
        match self {
            Direction::X => Direction::Y,
            Direction::Y => Direction::X,
        }
    }
}

/// Wannier sector: `Plus` is the band with the smaller Wannier value in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WannierSector {
    Plus,
    Minus,
}

impl WannierSector {
    fn slot(self) -> usize {
        match self {
            WannierSector::Plus => 0,
            WannierSector::Minus => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WilsonOptions {
    /// Replace each overlap matrix by its unitary polar factor before the
    /// ordered product. Raw overlaps converge to the same loop phases as the
    /// grid is refined.
    pub unitarize: bool,
}

impl Default for WilsonOptions {
    fn default() -> Self {
        Self { unitarize: true }
    }
}

/// Overlap `<frame_next | frame_cur>`, checked for rank and optionally unitarized.
fn overlap(next: &OccupiedFrame, cur: &OccupiedFrame, opts: WilsonOptions) -> Result<DMatrix<C64>> {
    let raw = next.vectors.adjoint() * &cur.vectors;
    let (unitary, sigma_min) = unitarize(&raw);
    if sigma_min < OVERLAP_TOL {
        return Err(Error::GridTooCoarse { kx: cur.k.0, ky: cur.k.1, sigma_min });
    }
    Ok(if opts.unitarize { unitary } else { raw })
}

/// Ordered product `F_{start-1} ... F_{start+1} F_start` around a closed loop
/// of frames; `frames[i + 1]` follows `frames[i]` and the last wraps to the first.
pub fn wilson_product(frames: &[OccupiedFrame], start: usize, opts: WilsonOptions) -> Result<DMatrix<C64>> {
    let n = frames.len();
    let mut w = DMatrix::identity(2, 2);
    for step in 0..n {
        let i = (start + step) % n;
        let f = overlap(&frames[(i + 1) % n], &frames[i], opts)?;
        w = f * w;
    }
    Ok(w)
}

fn loop_overlaps(frames: &[OccupiedFrame], opts: WilsonOptions) -> Result<Vec<DMatrix<C64>>> {
    let n = frames.len();
    (0..n).map(|i| overlap(&frames[(i + 1) % n], &frames[i], opts)).collect()
}

/// Eigenpairs of a 2x2 matrix in closed form; eigenvectors normalized.
fn eigen2(w: &DMatrix<C64>) -> [(C64, DVector<C64>); 2] {
    let (a, b, c, d) = (w[(0, 0)], w[(0, 1)], w[(1, 0)], w[(1, 1)]);
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
    [half_tr + disc, half_tr - disc].map(|lambda| {
        // Rows of (W - lambda) annihilate the eigenvector; use the better-conditioned one.
        let v1 = DVector::from_vec(vec![b, lambda - a]);
        let v2 = DVector::from_vec(vec![lambda - d, c]);
        let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        let n = v.norm();
        let v = if n > 0.0 {
            v / C64::new(n, 0.0)
        } else {
            DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
        };
        (lambda, v)
    })
}

/// Wannier values `arg(lambda) / 2 pi` in `[0, 1)`, ascending, with the
/// matching eigenvectors of a Wilson matrix.
fn wannier_decompose(w: &DMatrix<C64>) -> ([f64; 2], [DVector<C64>; 2]) {
    let [(l0, v0), (l1, v1)] = eigen2(w);
    let n0 = (l0.arg() / TAU).rem_euclid(1.0) % 1.0;
    let n1 = (l1.arg() / TAU).rem_euclid(1.0) % 1.0;
    if n0 <= n1 {
        ([n0, n1], [v0, v1])
    } else {
        ([n1, n0], [v1, v0])
    }
}

/// Wilson loop at one transverse momentum with its Wannier decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WilsonLoop {
    pub direction: Direction,
    pub transverse_k: f64,
    pub matrix: DMatrix<C64>,
    /// `[nu_plus, nu_minus]`, ascending in `[0, 1)`.
    pub wannier: [f64; 2],
    pub spinors: [DVector<C64>; 2],
}

fn grid_k(i: usize, n: usize) -> f64 {
    TAU * i as f64 / n as f64
}

fn check_grid(name: &'static str, n: usize) -> Result<()> {
    if n < MIN_GRID {
        return Err(Error::InvalidParameter { name, reason: format!("need at least {MIN_GRID} k-points, got {n}") });
    }
    Ok(())
}

fn frames_along(direction: Direction, transverse_k: f64, cp: &CouplingParams, n: usize) -> Result<Vec<OccupiedFrame>> {
    (0..n)
        .map(|i| {
            let k = grid_k(i, n);
            let (kx, ky) = match direction {
                Direction::X => (k, transverse_k),
                Direction::Y => (transverse_k, k),
            };
            occupied_frame(&build_bloch_step(kx, ky, cp))
        })
        .collect()
}

/// Wilson loop along `direction` at fixed transverse momentum, based at `k = 0`.
pub fn wilson_loop(
    direction: Direction,
    transverse_k: f64,
    cp: &CouplingParams,
    n: usize,
    opts: WilsonOptions,
) -> Result<WilsonLoop> {
    check_grid("N", n)?;
    let frames = frames_along(direction, transverse_k, cp, n)?;
    let matrix = wilson_product(&frames, 0, opts)?;
    let (wannier, spinors) = wannier_decompose(&matrix);
    Ok(WilsonLoop { direction, transverse_k, matrix, wannier, spinors })
}

/// `W_x` along `k_x` at fixed `k_y`.
pub fn wilson_loop_x(ky: f64, cp: &CouplingParams, n_x: usize) -> Result<WilsonLoop> {
    wilson_loop(Direction::X, ky, cp, n_x, WilsonOptions::default())
}

/// Wannier bands `nu^{+-}(k_perp)` of the Wilson loop along one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WannierData {
    pub direction: Direction,
    pub transverse_k: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// Occupied frames on the full `n_x x n_y` grid, `frames[ix * n_y + iy]`.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub n_x: usize,
    pub n_y: usize,
    frames: Vec<OccupiedFrame>,
}

impl FrameGrid {
    pub fn build(cp: &CouplingParams, n_x: usize, n_y: usize) -> Result<Self> {
        check_grid("N_x", n_x)?;
        check_grid("N_y", n_y)?;
        let frames = (0..n_x * n_y)
            .into_par_iter()
            .map(|idx| {
                let (ix, iy) = (idx / n_y, idx % n_y);
                occupied_frame(&build_bloch_step(grid_k(ix, n_x), grid_k(iy, n_y), cp))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_x, n_y, frames })
    }

    pub fn get(&self, ix: usize, iy: usize) -> &OccupiedFrame {
        &self.frames[ix * self.n_y + iy]
    }

    /// Applies a per-k change of basis `V(k) -> V(k) R(k)` inside the occupied space.
    pub fn rotate_frames(&mut self, mut rotation: impl FnMut(usize, usize) -> DMatrix<C64>) {
        for ix in 0..self.n_x {
            for iy in 0..self.n_y {
                let f = &mut self.frames[ix * self.n_y + iy];
                f.vectors = &f.vectors * rotation(ix, iy);
            }
        }
    }

    fn counts(&self, direction: Direction) -> (usize, usize) {
        match direction {
            Direction::X => (self.n_x, self.n_y),
            Direction::Y => (self.n_y, self.n_x),
        }
    }

    /// Frames along `direction` with transverse index `j`.
    fn line(&self, direction: Direction, j: usize) -> Vec<OccupiedFrame> {
        let (along, _) = self.counts(direction);
        (0..along)
            .map(|i| match direction {
                Direction::X => self.get(i, j).clone(),
                Direction::Y => self.get(j, i).clone(),
            })
            .collect()
    }

    /// Wannier bands of the Wilson loop along `direction`.
    pub fn wannier_bands(&self, direction: Direction, opts: WilsonOptions) -> Result<WannierData> {
        let (_, across) = self.counts(direction);
        let mut data = WannierData { direction, transverse_k: Vec::new(), plus: Vec::new(), minus: Vec::new() };
        for j in 0..across {
            let w = wilson_product(&self.line(direction, j), 0, opts)?;
            let ([p, m], _) = wannier_decompose(&w);
            data.transverse_k.push(grid_k(j, across));
            data.plus.push(p);
            data.minus.push(m);
        }
        Ok(data)
    }

    /// Wannier states `|w^{+-}_k>` for every grid point, indexed `[j][i]` with `i`
    /// along `direction` and `j` transverse. Each state comes from the Wilson
    /// loop based at its own `k`.
    fn wannier_states(&self, direction: Direction, opts: WilsonOptions) -> Result<Vec<Vec<[DVector<C64>; 2]>>> {
        let (along, across) = self.counts(direction);
        (0..across)
            .into_par_iter()
            .map(|j| {
                let line = self.line(direction, j);
                let overlaps = loop_overlaps(&line, opts)?;
                let mut states = Vec::with_capacity(along);
                for start in 0..along {
                    let mut w = DMatrix::identity(2, 2);
                    for step in 0..along {
                        w = &overlaps[(start + step) % along] * w;
                    }
                    let (values, spinors) = wannier_decompose(&w);
                    let separation = circular_distance(values[0], values[1]);
                    if separation < WANNIER_GAP_TOL {
                        return Err(Error::DegenerateWannier { k: grid_k(j, across), separation });
                    }
                    let v = &line[start].vectors;
                    states.push([v * &spinors[0], v * &spinors[1]]);
                }
                Ok(states)
            })
            .collect()
    }

    /// Nested polarization of `sector` of the Wilson loop along `direction`,
    /// averaged over the momentum along `direction`; in `[0, 1)`.
    pub fn nested_polarization(&self, direction: Direction, sector: WannierSector, opts: WilsonOptions) -> Result<f64> {
        let states = self.wannier_states(direction, opts)?;
        nested_from_states(&states, sector, opts)
    }
}

/// Distance between two values on the unit circle `R / Z`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Mean of values on `R / Z`, in `[0, 1)`.
pub fn circular_mean(values: &[f64]) -> f64 {
    let (s, c) = values.iter().fold((0.0, 0.0), |(s, c), v| (s + (TAU * v).sin(), c + (TAU * v).cos()));
    let center = s.atan2(c) / TAU;
    let mean = values.iter().map(|v| center + wrap_phase(TAU * (v - center)) / TAU).sum::<f64>() / values.len() as f64;
    let mean = mean.rem_euclid(1.0);
    // rem_euclid of a tiny negative number rounds up to exactly 1.0 or just below
    if 1.0 - mean < 1e-12 {
        0.0
    } else {
        mean
    }
}

fn nested_from_states(states: &[Vec<[DVector<C64>; 2]>], sector: WannierSector, opts: WilsonOptions) -> Result<f64> {
    let across = states.len();
    let along = states[0].len();
    let slot = sector.slot();
    let phases: Vec<f64> = (0..along)
        .map(|i| {
            let mut w = C64::new(1.0, 0.0);
            for j in 0..across {
                let cur = &states[j][i][slot];
                let next = &states[(j + 1) % across][i][slot];
                let f = next.dotc(cur);
                w *= if opts.unitarize { f / f.norm() } else { f };
            }
            (w.arg() / TAU).rem_euclid(1.0)
        })
        .collect();
    Ok(circular_mean(&phases))
}

/// Nested polarization `p_{perp}^{nu_dir^{+-}}` on an `n_x x n_y` grid.
pub fn nested_polarization(
    cp: &CouplingParams,
    n_x: usize,
    n_y: usize,
    direction: Direction,
    sector: WannierSector,
    opts: WilsonOptions,
) -> Result<f64> {
    FrameGrid::build(cp, n_x, n_y)?.nested_polarization(direction, sector, opts)
}

/// Nearest quantized value in `{0, 1/2}` (mod 1) and the distance to it.
pub fn quantize_half(p: f64) -> (f64, f64) {
    let q = (2.0 * p).round() / 2.0;
    ((q.rem_euclid(1.0)), (p - q).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupoleResult {
    pub j1: f64,
    pub j2: f64,
    pub n_x: usize,
    pub n_y: usize,
    /// Nested polarization along `y` of the `x`-Wannier sectors `[+, -]`.
    pub p_y: [f64; 2],
    /// Nested polarization along `x` of the `y`-Wannier sectors `[+, -]`.
    pub p_x: [f64; 2],
    /// Index per sector, `round(4 p_y p_x)` on the quantized polarizations.
    pub nu_sectors: [u8; 2],
    pub nu: u8,
    /// Largest distance of any polarization from `{0, 1/2}`.
    pub quantization_error: f64,
}

/// The `Z2` quadrupole index `nu = 4 p_y p_x`.
pub fn quadrupole_invariant(cp: &CouplingParams, n_x: usize, n_y: usize) -> Result<QuadrupoleResult> {
    quadrupole_invariant_with(cp, n_x, n_y, WilsonOptions::default())
}

pub fn quadrupole_invariant_with(
    cp: &CouplingParams,
    n_x: usize,
    n_y: usize,
    opts: WilsonOptions,
) -> Result<QuadrupoleResult> {
    let grid = FrameGrid::build(cp, n_x, n_y)?;
    let x_states = grid.wannier_states(Direction::X, opts)?;
    let y_states = grid.wannier_states(Direction::Y, opts)?;
    let sectors = [WannierSector::Plus, WannierSector::Minus];
    let mut p_y = [0.0; 2];
    let mut p_x = [0.0; 2];
    for (slot, &sector) in sectors.iter().enumerate() {
        p_y[slot] = nested_from_states(&x_states, sector, opts)?;
        p_x[slot] = nested_from_states(&y_states, sector, opts)?;
    }

    let mut quantization_error = 0.0_f64;
    let mut nu_sectors = [0u8; 2];
    for slot in 0..2 {
        let (qy, ey) = quantize_half(p_y[slot]);
        let (qx, ex) = quantize_half(p_x[slot]);
        quantization_error = quantization_error.max(ey).max(ex);
        nu_sectors[slot] = (4.0 * qy * qx).round() as u8;
    }
    if nu_sectors[0] != nu_sectors[1] {
        return Err(Error::SectorMismatch { plus: nu_sectors[0], minus: nu_sectors[1] });
    }
    Ok(QuadrupoleResult { j1: cp.j1, j2: cp.j2, n_x, n_y, p_y, p_x, nu_sectors, nu: nu_sectors[0], quantization_error })
}
