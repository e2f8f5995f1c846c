use thiserror::Error;

/// Errors raised by the walk, spectral and invariant routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lattice size M={0} must be even and at least 4")]
    InvalidLatticeSize(usize),

    #[error("site ({x}, {y}) lies outside the {m}x{m} lattice")]
    SiteOutOfRange { x: usize, y: usize, m: usize },

    #[error("linear index {index} outside lattice with {total} sites")]
    IndexOutOfRange { index: usize, total: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("eigendecomposition failed to converge")]
    NoConvergence,

    #[error("quasienergy gap closes at k = ({kx:.6}, {ky:.6}) (min distance {distance:.3e})")]
    GapClosure { kx: f64, ky: f64, distance: f64 },

    #[error("overlap matrix rank deficient at k = ({kx:.6}, {ky:.6}) (sigma_min {sigma_min:.3e}); refine the k-grid")]
    GridTooCoarse { kx: f64, ky: f64, sigma_min: f64 },

    #[error("Wannier bands degenerate at transverse momentum {k:.6} (separation {separation:.3e})")]
    DegenerateWannier { k: f64, separation: f64 },

    #[error("Wannier sectors disagree on the invariant: nu(+) = {plus}, nu(-) = {minus}")]
    SectorMismatch { plus: u8, minus: u8 },

    #[error("trajectory lacks step {0}")]
    MissingStep(usize),

    #[error("couplers in layer {layer} overlap on waveguide {site}")]
    OverlappingCouplers { layer: usize, site: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
