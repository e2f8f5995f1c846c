//! Lattice addressing, hopping parameters and walker states.
//!
//! Sites carry 1-based coordinates `(x, y)` with `1 <= x, y <= M`; the linear
//! index is row-major with `x` outer, `(x - 1) * M + (y - 1)`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `M x M` square lattice with `M` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    size: usize,
}

impl LatticeGeometry {
    pub fn new(size: usize) -> Result<Self> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(Error::InvalidLatticeSize(size));
        }
        Ok(Self { size })
    }

    /// Sites per side.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn total_sites(&self) -> usize {
        self.size * self.size
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (1..=self.size).contains(&x) && (1..=self.size).contains(&y)
    }

    pub fn site_index(&self, x: usize, y: usize) -> Result<usize> {
        if !self.contains(x, y) {
            return Err(Error::SiteOutOfRange { x, y, m: self.size });
        }
        Ok((x - 1) * self.size + (y - 1))
    }

    /// Inverse of [`site_index`](Self::site_index).
    pub fn site_coords(&self, index: usize) -> Result<(usize, usize)> {
        if index >= self.total_sites() {
            return Err(Error::IndexOutOfRange { index, total: self.total_sites() });
        }
        Ok((index / self.size + 1, index % self.size + 1))
    }

    /// Linear indices of the four corner sites, in the order
    /// (1,1), (1,M), (M,1), (M,M).
    pub fn corner_indices(&self) -> [usize; 4] {
        let m = self.size;
        [0, m - 1, (m - 1) * m, m * m - 1]
    }

    /// Linear indices of the `w x w` patch anchored at each corner.
    pub fn corner_patches(&self, width: usize) -> Vec<usize> {
        let m = self.size;
        let w = width.min(m);
        let mut out = Vec::with_capacity(4 * w * w);
        for x in 1..=m {
            for y in 1..=m {
                let near_x = x <= w || x > m - w;
                let near_y = y <= w || y > m - w;
                if near_x && near_y {
                    out.push((x - 1) * m + (y - 1));
                }
            }
        }
        out
    }
}

/// Intracell (`j1`) and intercell (`j2`) hopping amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub j1: f64,
    pub j2: f64,
}

impl CouplingParams {
    pub fn new(j1: f64, j2: f64) -> Result<Self> {
        if !j1.is_finite() {
            return Err(Error::InvalidParameter { name: "J1", reason: format!("{j1} is not finite") });
        }
        if !j2.is_finite() {
            return Err(Error::InvalidParameter { name: "J2", reason: format!("{j2} is not finite") });
        }
        Ok(Self { j1, j2 })
    }

    /// From the mean hopping `t` and dimerization `dt`: `J1 = t - dt`, `J2 = t + dt`.
    pub fn from_dimerization(t: f64, dt: f64) -> Result<Self> {
        Self::new(t - dt, t + dt)
    }

    pub fn mean_hopping(&self) -> f64 {
        0.5 * (self.j1 + self.j2)
    }

    pub fn dimerization(&self) -> f64 {
        0.5 * (self.j2 - self.j1)
    }
}

/// Static on-site phase disorder: phases drawn from `[-W/2, W/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderConfig {
    pub strength: f64,
    pub seed: u64,
    pub realizations: usize,
}

impl DisorderConfig {
    pub fn new(strength: f64, seed: u64, realizations: usize) -> Result<Self> {
        if !(strength.is_finite() && strength >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "W",
                reason: format!("disorder strength must be finite and >= 0, got {strength}"),
            });
        }
        if realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "realizations",
                reason: "need at least one realization".into(),
            });
        }
        Ok(Self { strength, seed, realizations })
    }
}

/// Walker amplitudes over the lattice sites, indexed by `site_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    amplitudes: Vec<C64>,
}

impl WaveFunction {
    /// Normalizes `amplitudes`; fails on a zero vector.
    pub fn from_amplitudes(mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: format!("cannot normalize vector with norm {norm}"),
            });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// Wraps amplitudes produced by a unitary map without renormalizing.
    pub(crate) fn from_unitary_image(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &WaveFunction) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

/// The walker sitting on the single site `(x, y)`.
pub fn localized_state(x: usize, y: usize, geom: &LatticeGeometry) -> Result<WaveFunction> {
    let index = geom.site_index(x, y)?;
    let mut amplitudes = vec![C64::new(0.0, 0.0); geom.total_sites()];
    amplitudes[index] = C64::new(1.0, 0.0);
    Ok(WaveFunction { amplitudes })
}
