//! Directional-coupler layouts for one walk step.
//!
//! Every two-site rotation of the walk maps onto a pair of evanescently
//! coupled waveguides. Couplers without a phase are single-layer; the pi
//! phase carried by the `y`-links of odd columns needs a double-layer coupler.

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_4, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CouplingParams, LatticeGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplerLayer {
    Single,
    Double,
}

/// A coupler with coefficient `k`, interaction length `z` and phase `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerSpec {
    pub k: f64,
    pub z: f64,
    pub phi: f64,
    pub layer: CouplerLayer,
}

impl CouplerSpec {
    pub fn transfer(&self) -> [[C64; 2]; 2] {
        match self.layer {
            CouplerLayer::Single => coupler_transfer(self.k, self.z),
            CouplerLayer::Double => phased_coupler_transfer(self.k, self.z, self.phi),
        }
    }
}

/// `T1(z) = [[cos Kz, -i sin Kz], [-i sin Kz, cos Kz]]`.
pub fn coupler_transfer(k: f64, z: f64) -> [[C64; 2]; 2] {
    let (s, c) = (k * z).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

/// `T2(z)`: `T1(z)` with the off-diagonals dressed by `exp(i phi)` and `exp(-i phi)`.
pub fn phased_coupler_transfer(k: f64, z: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (k * z).sin_cos();
    let off = C64::new(0.0, -s);
    [[C64::new(c, 0.0), off * C64::from_polar(1.0, phi)], [off * C64::from_polar(1.0, -phi), C64::new(c, 0.0)]]
}

/// One coupler placed on the waveguide pair `(pair[0], pair[1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedCoupler {
    pub pair: [usize; 2],
    pub kz: f64,
    pub phi: f64,
    pub layer: CouplerLayer,
}

impl PlacedCoupler {
    pub fn spec(&self) -> CouplerSpec {
        CouplerSpec { k: 1.0, z: self.kz, phi: self.phi, layer: self.layer }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutMeta {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "J1")]
    pub j1: f64,
    #[serde(rename = "J2")]
    pub j2: f64,
}

/// Coupler layers in the order light traverses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSchedule {
    pub meta: LayoutMeta,
    pub layers: Vec<Vec<PlacedCoupler>>,
}

impl LayoutSchedule {
    pub fn coupler_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter { name: "layout", reason: e.to_string() })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter { name: "layout", reason: e.to_string() })
    }
}

/// Coupler realizing `cos(theta) I - i sin(theta) X_phi` on `(lower, upper)`,
/// or `None` when that block is the identity.
fn lower_rotation(lower: usize, upper: usize, theta: f64, phi: f64) -> Option<PlacedCoupler> {
    // A negative angle is a positive one with an extra pi phase.
    let (kz, phi) = if theta < 0.0 { (-theta, phi + PI) } else { (theta, phi) };
    let phi = phi.rem_euclid(TAU);
    let phi = if (phi - PI).abs() < 1e-9 { PI } else { 0.0 };
    if kz.rem_euclid(TAU) == 0.0 {
        return None;
    }
    // T2 places exp(i phi) on <lower|T|upper>; for phi in {0, pi} this is the
    // same matrix as the walk block, which puts exp(-i phi) there.
    let layer = if phi == 0.0 { CouplerLayer::Single } else { CouplerLayer::Double };
    Some(PlacedCoupler { pair: [lower, upper], kz, phi, layer })
}

/// Lowers `U4 U3 U2 U1` into four coupler layers, first layer first.
pub fn compile_step(geom: &LatticeGeometry, cp: &CouplingParams) -> LayoutSchedule {
    let m = geom.size();
    let idx = |x: usize, y: usize| (x - 1) * m + (y - 1);
    let mut layers = Vec::with_capacity(4);

    for (first, r) in [(1, cp.j1), (2, cp.j2)] {
        let theta = FRAC_PI_4 * r;
        let mut layer = Vec::new();
        for xa in (first..m).step_by(2) {
            for y in 1..=m {
                layer.extend(lower_rotation(idx(xa, y), idx(xa + 1, y), theta, 0.0));
            }
        }
        layers.push(layer);
    }
    for (first, r) in [(1, cp.j1), (2, cp.j2)] {
        let theta = FRAC_PI_4 * r;
        let mut layer = Vec::new();
        for x in 1..=m {
            let phi = (x as f64 * PI).rem_euclid(TAU);
            for ya in (first..m).step_by(2) {
                layer.extend(lower_rotation(idx(x, ya), idx(x, ya + 1), theta, phi));
            }
        }
        layers.push(layer);
    }

    LayoutSchedule { meta: LayoutMeta { m, j1: cp.j1, j2: cp.j2 }, layers }
}

/// Global transfer matrix of a schedule, composed layer by layer.
pub fn simulate_layout(layout: &LayoutSchedule) -> Result<DMatrix<C64>> {
    let n = layout.meta.m * layout.meta.m;
    let mut total = DMatrix::<C64>::identity(n, n);
    for (layer_no, layer) in layout.layers.iter().enumerate() {
        let mut used = HashSet::new();
        let mut t = DMatrix::<C64>::identity(n, n);
        for c in layer {
            let [a, b] = c.pair;
            for site in [a, b] {
                if site >= n {
                    return Err(Error::IndexOutOfRange { index: site, total: n });
                }
                if !used.insert(site) {
                    return Err(Error::OverlappingCouplers { layer: layer_no, site });
                }
            }
            let m = c.spec().transfer();
            t[(a, a)] = m[0][0];
            t[(a, b)] = m[0][1];
            t[(b, a)] = m[1][0];
            t[(b, b)] = m[1][1];
        }
        total = t * total;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use crate::walk::build_one_step;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn as_dense(t: [[C64; 2]; 2]) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[t[0][0], t[0][1], t[1][0], t[1][1]])
    }

    fn residual(t: [[C64; 2]; 2]) -> f64 {
        let m = as_dense(t);
        max_abs_diff(&(m.adjoint() * &m), &DMatrix::identity(2, 2))
    }

    #[test]
    fn coupler_limits() {
        assert!(max_abs_diff(&as_dense(coupler_transfer(1.0, 0.0)), &DMatrix::identity(2, 2)) == 0.0);
        let full = as_dense(coupler_transfer(2.0, PI / 4.0));
        let want = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), -C64::i(), -C64::i(), C64::new(0.0, 0.0)]);
        assert!(max_abs_diff(&full, &want) < 1e-15);
        let half = coupler_transfer(1.0, PI / 4.0);
        for row in half {
            for z in row {
                assert!((z.norm() - 0.5_f64.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn phased_coupler_reduces_and_flips() {
        for &(k, z) in &[(1.0, 0.3), (0.7, 2.0), (1.0, PI / 4.0)] {
            assert_eq!(phased_coupler_transfer(k, z, 0.0), coupler_transfer(k, z));
            let t2 = as_dense(phased_coupler_transfer(k, z, TAU));
            assert!(max_abs_diff(&t2, &as_dense(coupler_transfer(k, z))) < 1e-15);
        }
        let t = phased_coupler_transfer(1.0, PI / 4.0, PI);
        let s = 0.5_f64.sqrt();
        assert!((t[0][1] - C64::new(0.0, s)).norm() < 1e-15);
        assert!((t[1][0] - C64::new(0.0, s)).norm() < 1e-15);
    }

    #[test]
    fn random_couplers_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (k, z, phi) = (rng.gen_range(0.01..3.0), rng.gen_range(0.0..10.0), rng.gen_range(-7.0..7.0));
            assert!(residual(coupler_transfer(k, z)) < 1e-14);
            assert!(residual(phased_coupler_transfer(k, z, phi)) < 1e-14);
        }
    }

    #[test]
    fn layout_round_trip() {
        for m in [4, 8] {
            let g = LatticeGeometry::new(m).unwrap();
            for &(j1, j2) in &[(0.1, 1.0), (1.5, 1.0), (0.0, 1.0), (-0.7, 2.5)] {
                let cp = CouplingParams::new(j1, j2).unwrap();
                let layout = compile_step(&g, &cp);
                let u = simulate_layout(&layout).unwrap();
                let err = max_abs_diff(&u, &build_one_step(&g, &cp).to_dense());
                assert!(err < 1e-12, "M={m} J1={j1}: {err:e}");
            }
        }
    }

    #[test]
    fn compiled_layout_shape() {
        let g = LatticeGeometry::new(4).unwrap();
        let layout = compile_step(&g, &CouplingParams::new(0.0, 1.0).unwrap());
        assert_eq!(layout.layers.len(), 4);
        assert!(layout.layers[0].is_empty() && layout.layers[2].is_empty());
        // One interior x-bond per row, one interior y-bond per column.
        assert_eq!(layout.layers[1].len(), 4);
        assert_eq!(layout.layers[3].len(), 4);
        for c in layout.layers.iter().flatten() {
            assert!((c.kz - PI / 4.0).abs() < 1e-15);
            assert!(c.phi == 0.0 || c.phi == PI);
        }
        for c in &layout.layers[3] {
            let x = c.pair[0] / 4 + 1;
            let want = if x % 2 == 0 { CouplerLayer::Single } else { CouplerLayer::Double };
            assert_eq!(c.layer, want, "column {x}");
        }
    }

    #[test]
    fn empty_schedule_is_identity() {
        let layout = LayoutSchedule { meta: LayoutMeta { m: 4, j1: 0.0, j2: 0.0 }, layers: vec![] };
        assert_eq!(simulate_layout(&layout).unwrap(), DMatrix::identity(16, 16));
        let g = LatticeGeometry::new(4).unwrap();
        assert_eq!(compile_step(&g, &CouplingParams::new(0.0, 0.0).unwrap()).coupler_count(), 0);
    }

    #[test]
    fn overlapping_pairs_are_rejected() {
        let c = |a, b| PlacedCoupler { pair: [a, b], kz: 0.3, phi: 0.0, layer: CouplerLayer::Single };
        let layout = LayoutSchedule {
            meta: LayoutMeta { m: 4, j1: 0.0, j2: 0.0 },
            layers: vec![vec![c(0, 1)], vec![c(2, 3), c(3, 4)]],
        };
        assert!(matches!(simulate_layout(&layout), Err(Error::OverlappingCouplers { layer: 1, site: 3 })));
    }

    #[test]
    fn json_round_trip() {
        let g = LatticeGeometry::new(4).unwrap();
        let layout = compile_step(&g, &CouplingParams::new(0.1, 1.0).unwrap());
        let json = layout.to_json().unwrap();
        assert!(json.contains("\"M\": 4") && json.contains("\"double\""));
        assert_eq!(LayoutSchedule::from_json(&json).unwrap(), layout);
    }
}
