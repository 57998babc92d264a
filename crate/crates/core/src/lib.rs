//! Truncated Fock-space toolkit for Gaussian maximally mixed states: candidate
//! constructors, g-purification into two-mode Schmidt states, phase-space
//! functions and scalar diagnostics.

pub mod acceptance;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod phasespace;
pub mod purify;
pub mod quadrature;
pub mod special;
pub mod states;
pub mod tolerance;

pub use error::{GmmsError, Result};
pub use fock::{
    outer_product, partial_trace_b, BipartitePureState, FockCutoff, FockDensityOperator, FockPureVector,
    SchmidtPureState,
};
pub use metrics::{entropy, hs_distance, mean_photon, purity, StateReport};
pub use phasespace::{husimi_grid, husimi_point, smoothing_check, wigner_point, PhaseSpaceGrid};
pub use purify::{g_purify, tmsv, AncillaUnitary};
pub use states::{BuildOptions, CutoffPolicy, GmmsSpec, QuadratureSpec};
pub use tolerance::ToleranceProfile;
