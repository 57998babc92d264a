//! Numerical budgets shared by every module.

use serde::{Deserialize, Serialize};

/// Cutoff-selection and quadrature tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Maximum probability mass allowed above the Fock cutoff.
    pub trace: f64,
    /// Eigenvalues below `-psd` are an integrity error; those in `(-psd, 0)` are clamped.
    pub psd: f64,
    /// Operator change (Hilbert-Schmidt) at which quadrature refinement stops.
    pub quadrature: f64,
    /// Allowed deviation of a phase-space grid integral from 1.
    pub grid: f64,
    /// Off-diagonal magnitude below which an operator counts as Fock-diagonal.
    pub offdiag: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            trace: 1e-10,
            psd: 1e-10,
            quadrature: 1e-8,
            grid: 1e-3,
            offdiag: 1e-12,
        }
    }
}

impl ToleranceProfile {
    pub fn with_trace(mut self, trace: f64) -> Self {
        self.trace = trace;
        self
    }
}
