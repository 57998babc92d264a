//! The g-purification map: a Fock-diagonal mixed state becomes the two-mode
//! Schmidt state `sum_n sqrt(p_n) |n>_A |n>_B`. Every other purification is
//! reachable from it by a unitary on the ancilla mode B.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{GmmsError, Result};
use crate::fock::{BipartitePureState, FockCutoff, FockDensityOperator, SchmidtPureState};
use crate::states::thermal_cutoff;
use crate::tolerance::ToleranceProfile;

/// Unitary acting on the ancilla mode.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaUnitary {
    cutoff: FockCutoff,
    entries: DMatrix<Complex64>,
}

const UNITARITY_TOL: f64 = 1e-12;

impl AncillaUnitary {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let d = entries.nrows();
        if d == 0 || entries.ncols() != d {
            return Err(GmmsError::domain("unitary", "must be a non-empty square matrix"));
        }
        let gram = &entries * entries.adjoint();
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                let dev = (gram[(i, j)] - Complex64::new(target, 0.0)).norm();
                if dev > UNITARITY_TOL {
                    return Err(GmmsError::Precondition(format!(
                        "matrix is not unitary: |(U U^†)({i},{j}) - delta| = {dev:.3e}"
                    )));
                }
            }
        }
        Ok(AncillaUnitary {
            cutoff: FockCutoff::new(d - 1),
            entries,
        })
    }

    pub fn identity(cutoff: FockCutoff) -> Self {
        AncillaUnitary {
            cutoff,
            entries: DMatrix::identity(cutoff.dim(), cutoff.dim()),
        }
    }

    /// `diag(e^{i theta_n})`.
    pub fn diagonal_phases(phases: &[f64]) -> Result<Self> {
        let diag: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
    }

    /// Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix.
    pub fn random<R: Rng + ?Sized>(cutoff: FockCutoff, rng: &mut R) -> Self {
        let d = cutoff.dim();
        let ginibre = DMatrix::from_fn(d, d, |_, _| {
            let (u1, u2): (f64, f64) = (rng.random::<f64>().max(f64::MIN_POSITIVE), rng.random());
            let r = (-2.0 * u1.ln()).sqrt();
            Complex64::from_polar(r, 2.0 * std::f64::consts::PI * u2)
        });
        let qr = ginibre.qr();
        let (mut q, r) = qr.unpack();
        // fix column phases so the distribution is Haar
        for j in 0..d {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        AncillaUnitary { cutoff, entries: q }
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }
}

/// `sum_n sqrt(p_n) |n>_A |n>_B` for a Fock-diagonal `rho` (non-negative root).
///
/// Weights in `(-psd, 0)` are treated as zero. Operators that are not flagged
/// diagonal are rejected; dephase them explicitly first with
/// [`FockDensityOperator::dephased`], which reports the discarded mass.
pub fn g_purify(rho: &FockDensityOperator, tol: &ToleranceProfile) -> Result<SchmidtPureState> {
    if !rho.is_diagonal() {
        return Err(GmmsError::Precondition(format!(
            "g-purification needs a Fock-diagonal state (largest off-diagonal {:.3e}); \
             dephase or eigendecompose first",
            rho.max_offdiag()
        )));
    }
    let coeffs = rho
        .diagonal()
        .into_iter()
        .enumerate()
        .map(|(n, p)| {
            if p < -tol.psd {
                Err(GmmsError::Integrity(format!("weight p_{n} = {p:.3e} is negative")))
            } else {
                Ok(Complex64::new(p.max(0.0).sqrt(), 0.0))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    SchmidtPureState::new(coeffs)
}

/// Two-mode squeezed vacuum `sqrt(1 - lambda^2) sum_n (-lambda)^n |n>|n>`, `lambda = tanh(zeta)`.
pub fn tmsv(zeta: f64, cutoff: FockCutoff, tol: &ToleranceProfile) -> Result<SchmidtPureState> {
    if !(zeta.is_finite() && zeta >= 0.0) {
        return Err(GmmsError::domain("zeta", format!("must be finite and >= 0, got {zeta}")));
    }
    let lambda = zeta.tanh();
    let tail = lambda.powi(2 * (cutoff.dim() as i32));
    if tail >= tol.trace {
        return Err(GmmsError::Truncation {
            n_max: cutoff.n_max(),
            required: tmsv_cutoff(zeta, tol.trace)?.n_max(),
            tail,
        });
    }
    let amp0 = 1.0 / zeta.cosh();
    let coeffs = (0..cutoff.dim())
        .map(|n| {
            let mag = if n == 0 { amp0 } else { amp0 * lambda.powi(n as i32) };
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * mag, 0.0)
        })
        .collect();
    SchmidtPureState::new(coeffs)
}

/// Cutoff for `tmsv(zeta)`: that of the thermal state with `nbar = sinh^2(zeta)`.
pub fn tmsv_cutoff(zeta: f64, tol: f64) -> Result<FockCutoff> {
    thermal_cutoff(zeta.sinh().powi(2), tol)
}

/// `(1 ⊗ U)|Gamma>`.
pub fn apply_ancilla_unitary(state: &SchmidtPureState, u: &AncillaUnitary) -> Result<BipartitePureState> {
    state.cutoff().ensure_same(u.cutoff())?;
    // psi'_{a b} = sum_k U_{b k} psi_{a k}, with psi diagonal
    let d = state.cutoff().dim();
    let c = state.coefficients();
    let amps = DMatrix::from_fn(d, d, |a, b| u.entries[(b, a)] * c[a]);
    BipartitePureState::new(amps)
}

/// Outcome of comparing a purification's reduced state with a target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurificationReport {
    pub max_entry_deviation: f64,
    pub hs_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Compares `Tr_B |psi><psi|` against `rho`.
pub fn verify_purification(
    state: &BipartitePureState,
    rho: &FockDensityOperator,
    tol: f64,
) -> Result<PurificationReport> {
    let reduced = state.reduced_a();
    let max_entry_deviation = reduced.max_abs_diff(rho)?;
    let hs_deviation = reduced
        .entries()
        .iter()
        .zip(rho.entries().iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(PurificationReport {
        max_entry_deviation,
        hs_deviation,
        tol,
        pass: max_entry_deviation <= tol,
    })
}
