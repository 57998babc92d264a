//! Truncated Fock-space containers and the operations every other module
//! builds on: outer products, accumulation and the partial trace over the
//! ancilla mode of a Schmidt-form two-mode state.
//!
//! Every container carries a [`FockCutoff`]; operands with different cutoffs
//! are rejected with [`GmmsError::Dimension`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GmmsError, Result};
use crate::tolerance::ToleranceProfile;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Off-diagonal magnitude below which an operator is flagged Fock-diagonal.
pub const DIAGONAL_TOL: f64 = 1e-12;

/// Largest tolerated violation of `A = A^†` when adopting an external matrix.
const HERMITIAN_TOL: f64 = 1e-10;

/// Highest retained photon number. The space has dimension `n_max + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const fn new(n_max: usize) -> Self {
        FockCutoff(n_max)
    }

    pub const fn n_max(self) -> usize {
        self.0
    }

    pub const fn dim(self) -> usize {
        self.0 + 1
    }

    pub(crate) fn ensure_same(self, other: FockCutoff) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(GmmsError::Dimension {
                expected: self.0,
                found: other.0,
            })
        }
    }
}

impl std::fmt::Display for FockCutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n_max={}", self.0)
    }
}

/// Builds a Hermitian matrix from its upper triangle; the lower triangle is the
/// exact conjugate mirror and the diagonal is exactly real.
pub(crate) fn hermitian_from_upper<F>(dim: usize, mut upper: F) -> DMatrix<Complex64>
where
    F: FnMut(usize, usize) -> Complex64,
{
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for i in 0..dim {
        m[(i, i)] = Complex64::new(upper(i, i).re, 0.0);
        for j in (i + 1)..dim {
            let v = upper(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    m
}

fn max_offdiag(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

/// A Hermitian operator on a truncated single-mode Fock space.
///
/// Physically valid states have unit trace up to the truncation budget, but the
/// type also serves as an accumulator (see [`FockDensityOperator::add_scaled`]),
/// so unit trace is checked by [`FockDensityOperator::check_state`] rather than
/// enforced on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityOperator {
    cutoff: FockCutoff,
    entries: DMatrix<Complex64>,
    diagonal: bool,
}

impl FockDensityOperator {
    pub fn zeros(cutoff: FockCutoff) -> Self {
        FockDensityOperator {
            cutoff,
            entries: DMatrix::from_element(cutoff.dim(), cutoff.dim(), ZERO),
            diagonal: true,
        }
    }

    pub fn from_diagonal(cutoff: FockCutoff, weights: &[f64]) -> Result<Self> {
        if weights.len() != cutoff.dim() {
            return Err(GmmsError::Dimension {
                expected: cutoff.n_max(),
                found: weights.len().saturating_sub(1),
            });
        }
        let mut op = Self::zeros(cutoff);
        for (n, &w) in weights.iter().enumerate() {
            op.entries[(n, n)] = Complex64::new(w, 0.0);
        }
        Ok(op)
    }

    /// `|n><n|`.
    pub fn fock_projector(cutoff: FockCutoff, n: usize) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(GmmsError::domain("n", format!("{n} exceeds {cutoff}")));
        }
        let mut op = Self::zeros(cutoff);
        op.entries[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(op)
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock_projector(cutoff, 0).expect("vacuum is always inside the cutoff")
    }

    /// Adopts a square matrix that is Hermitian up to rounding. The stored
    /// operator is the exact Hermitian part `(A + A^†)/2`.
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(GmmsError::domain(
                "matrix",
                format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()),
            ));
        }
        let dim = m.nrows();
        let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        for i in 0..dim {
            for j in i..dim {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > HERMITIAN_TOL * scale {
                    return Err(GmmsError::Precondition(format!(
                        "matrix is not Hermitian: |A({i},{j}) - conj A({j},{i})| = {gap:.3e}"
                    )));
                }
            }
        }
        let entries = hermitian_from_upper(dim, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        Ok(Self::adopt(FockCutoff::new(dim - 1), entries))
    }

    /// Wraps an exactly Hermitian matrix and computes the diagonal flag.
    pub(crate) fn adopt(cutoff: FockCutoff, entries: DMatrix<Complex64>) -> Self {
        let diagonal = max_offdiag(&entries) < DIAGONAL_TOL;
        FockDensityOperator {
            cutoff,
            entries,
            diagonal,
        }
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.dim()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entry(&self, m: usize, n: usize) -> Complex64 {
        self.entries[(m, n)]
    }

    /// True when every off-diagonal magnitude is below [`DIAGONAL_TOL`].
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Photon-number distribution `rho(n, n)`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.entries[(n, n)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|n| self.entries[(n, n)].re).sum()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_offdiag(&self) -> f64 {
        max_offdiag(&self.entries)
    }

    /// Hilbert-Schmidt norm of the off-diagonal part.
    pub fn offdiag_hs_mass(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += self.entries[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Drops the off-diagonal part. Returns the dephased operator and the
    /// Hilbert-Schmidt norm that was removed.
    pub fn dephased(&self) -> (Self, f64) {
        let removed = self.offdiag_hs_mass();
        let op = Self::from_diagonal(self.cutoff, &self.diagonal())
            .expect("diagonal has matching length");
        (op, removed)
    }

    /// Spectrum in ascending order. Uses the diagonal directly when flagged.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut evs = if self.diagonal {
            self.diagonal()
        } else {
            SymmetricEigen::new(self.entries.clone())
                .eigenvalues
                .iter()
                .copied()
                .collect()
        };
        evs.sort_by(f64::total_cmp);
        evs
    }

    /// `self + w * op`.
    pub fn add_scaled(&self, op: &FockDensityOperator, w: f64) -> Result<Self> {
        self.cutoff.ensure_same(op.cutoff)?;
        if !w.is_finite() || w < 0.0 {
            return Err(GmmsError::domain("w", format!("weight must be finite and >= 0, got {w}")));
        }
        let mut entries = self.entries.clone();
        entries.zip_apply(&op.entries, |a, b| *a += b * w);
        Ok(FockDensityOperator {
            cutoff: self.cutoff,
            entries,
            diagonal: self.diagonal && op.diagonal,
        })
    }

    pub fn scaled(&self, w: f64) -> Self {
        FockDensityOperator {
            cutoff: self.cutoff,
            entries: self.entries.map(|z| z * w),
            diagonal: self.diagonal,
        }
    }

    /// Explicit renormalization to unit trace.
    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr.is_nan() || tr <= 0.0 {
            return Err(GmmsError::Integrity(format!("cannot normalize operator with trace {tr}")));
        }
        Ok(self.scaled(1.0 / tr))
    }

    /// `U rho U^†` for a unitary (or any square) `U` of matching dimension.
    pub fn conjugated_by(&self, u: &DMatrix<Complex64>) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(GmmsError::Dimension {
                expected: self.cutoff.n_max(),
                found: u.nrows().saturating_sub(1),
            });
        }
        let full = u * &self.entries * u.adjoint();
        let entries = hermitian_from_upper(self.dim(), |i, j| (full[(i, j)] + full[(j, i)].conj()) * 0.5);
        Ok(Self::adopt(self.cutoff, entries))
    }

    /// Largest entrywise deviation `max |a_mn - b_mn|`.
    pub fn max_abs_diff(&self, other: &FockDensityOperator) -> Result<f64> {
        self.cutoff.ensure_same(other.cutoff)?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm())))
    }

    /// Checks the physical-state invariants: trace in `[1 - tol.trace, 1]`
    /// (up to rounding) and no eigenvalue below `-tol.psd`.
    pub fn check_state(&self, tol: &ToleranceProfile) -> Result<()> {
        let tr = self.trace();
        if tr > 1.0 + 1e-12 {
            return Err(GmmsError::Integrity(format!("trace {tr} exceeds 1")));
        }
        if tr < 1.0 - tol.trace {
            return Err(GmmsError::Integrity(format!(
                "trace deficit {:.3e} exceeds truncation budget {:.1e}",
                1.0 - tr,
                tol.trace
            )));
        }
        let min_ev = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min_ev < -tol.psd {
            return Err(GmmsError::Integrity(format!(
                "eigenvalue {min_ev:.3e} below -{:.1e}",
                tol.psd
            )));
        }
        Ok(())
    }
}

/// A single-mode ket in the number basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockPureVector {
    cutoff: FockCutoff,
    amplitudes: DVector<Complex64>,
}

impl FockPureVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(GmmsError::domain("amplitudes", "empty amplitude sequence"));
        }
        Ok(FockPureVector {
            cutoff: FockCutoff::new(amplitudes.len() - 1),
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    pub fn fock(cutoff: FockCutoff, n: usize) -> Result<Self> {
        if n > cutoff.n_max() {
            return Err(GmmsError::domain("n", format!("{n} exceeds {cutoff}")));
        }
        let mut amps = vec![ZERO; cutoff.dim()];
        amps[n] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &FockPureVector) -> Result<Complex64> {
        self.cutoff.ensure_same(other.cutoff)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// `|k><k|`.
pub fn outer_product(ket: &FockPureVector) -> FockDensityOperator {
    let a = ket.amplitudes();
    let entries = hermitian_from_upper(a.len(), |i, j| a[i] * a[j].conj());
    FockDensityOperator::adopt(ket.cutoff(), entries)
}

/// Two-mode pure state `sum_n c_n |n>_A |n>_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtPureState {
    cutoff: FockCutoff,
    coefficients: Vec<Complex64>,
}

impl SchmidtPureState {
    /// Sub-unit norm is accepted as truncation loss and never renormalized here.
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(GmmsError::domain("coefficients", "empty coefficient sequence"));
        }
        if coefficients.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(GmmsError::domain("coefficients", "non-finite coefficient"));
        }
        Ok(SchmidtPureState {
            cutoff: FockCutoff::new(coefficients.len() - 1),
            coefficients,
        })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn renormalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm.is_nan() || norm <= 0.0 {
            return Err(GmmsError::Integrity("cannot renormalize a zero state".into()));
        }
        Self::new(self.coefficients.iter().map(|c| c / norm).collect())
    }

    /// Dense amplitude matrix `psi[(a, b)]`.
    pub fn to_bipartite(&self) -> BipartitePureState {
        let d = self.cutoff.dim();
        let mut m = DMatrix::from_element(d, d, ZERO);
        for (n, c) in self.coefficients.iter().enumerate() {
            m[(n, n)] = *c;
        }
        BipartitePureState {
            cutoff: self.cutoff,
            amplitudes: m,
        }
    }
}

/// `Tr_B |Gamma><Gamma|` for a Schmidt-form state: `diag(|c_n|^2)`.
pub fn partial_trace_b(state: &SchmidtPureState) -> FockDensityOperator {
    let weights: Vec<f64> = state.coefficients.iter().map(|c| c.norm_sqr()).collect();
    FockDensityOperator::from_diagonal(state.cutoff, &weights).expect("one weight per level")
}

/// General two-mode pure state `sum_{a,b} psi_ab |a>_A |b>_B` on equal cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    cutoff: FockCutoff,
    amplitudes: DMatrix<Complex64>,
}

impl BipartitePureState {
    pub fn new(amplitudes: DMatrix<Complex64>) -> Result<Self> {
        if amplitudes.nrows() != amplitudes.ncols() || amplitudes.nrows() == 0 {
            return Err(GmmsError::domain(
                "amplitudes",
                "two-mode amplitudes must be a non-empty square matrix",
            ));
        }
        Ok(BipartitePureState {
            cutoff: FockCutoff::new(amplitudes.nrows() - 1),
            amplitudes,
        })
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    /// Row index is mode A, column index is mode B.
    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `Tr_B |psi><psi| = Psi Psi^†`.
    pub fn reduced_a(&self) -> FockDensityOperator {
        let psi = &self.amplitudes;
        let d = psi.nrows();
        let entries = hermitian_from_upper(d, |i, j| {
            psi.row(i)
                .iter()
                .zip(psi.row(j).iter())
                .map(|(x, y)| x * y.conj())
                .sum()
        });
        FockDensityOperator::adopt(self.cutoff, entries)
    }
}

impl From<&SchmidtPureState> for BipartitePureState {
    fn from(s: &SchmidtPureState) -> Self {
        s.to_bipartite()
    }
}
