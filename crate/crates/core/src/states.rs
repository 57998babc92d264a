//! Constructors for the mixed-state candidates and the coherent and
//! squeezed-coherent kets they are built from.
//!
//! Squeezed-coherent kets follow the `S(zeta) D(alpha)|0>` ordering with
//! `S(zeta) = exp((zeta^* a^2 - zeta a^{†2}) / 2)` and `zeta = s e^{i phi}`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GmmsError, Result};
use crate::fock::{hermitian_from_upper, FockCutoff, FockDensityOperator, FockPureVector};
use crate::quadrature::polar_disk_rule;
use crate::special::{ln_factorial, normalized_hermite_sequence, poisson_survival_table, regularized_lower_gamma};
use crate::tolerance::ToleranceProfile;

/// Largest cutoff the automatic policy will consider.
pub const MAX_AUTO_CUTOFF: usize = 20_000;

/// Description of a mixed-state candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GmmsSpec {
    Thermal { nbar: f64 },
    Cvmms { b: f64 },
    Squeezed { b: f64, s: f64, phi: f64 },
    Riemann { b: f64, delta: f64 },
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(GmmsError::domain(field, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(GmmsError::domain(field, format!("must be finite and >= 0, got {v}")))
    }
}

impl GmmsSpec {
    pub fn thermal(nbar: f64) -> Result<Self> {
        GmmsSpec::Thermal { nbar }.validated()
    }

    pub fn cvmms(b: f64) -> Result<Self> {
        GmmsSpec::Cvmms { b }.validated()
    }

    /// `phi` is reduced into `[0, 2 pi)`.
    pub fn squeezed(b: f64, s: f64, phi: f64) -> Result<Self> {
        GmmsSpec::Squeezed { b, s, phi }.validated()
    }

    pub fn riemann(b: f64, delta: f64) -> Result<Self> {
        GmmsSpec::Riemann { b, delta }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            GmmsSpec::Thermal { nbar } => non_negative("nbar", nbar)?,
            GmmsSpec::Cvmms { b } => positive("b", b)?,
            GmmsSpec::Squeezed { b, s, phi } => {
                positive("b", b)?;
                non_negative("s", s)?;
                if !phi.is_finite() {
                    return Err(GmmsError::domain("phi", "must be finite"));
                }
                return Ok(GmmsSpec::Squeezed {
                    b,
                    s,
                    phi: phi.rem_euclid(2.0 * PI),
                });
            }
            GmmsSpec::Riemann { b, delta } => {
                positive("b", b)?;
                positive("delta", delta)?;
                if delta >= b {
                    return Err(GmmsError::domain("delta", format!("must be < b = {b}, got {delta}")));
                }
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GmmsSpec::Thermal { .. } => "thermal",
            GmmsSpec::Cvmms { .. } => "cvmms",
            GmmsSpec::Squeezed { .. } => "squeezed",
            GmmsSpec::Riemann { .. } => "riemann",
        }
    }
}

impl fmt::Display for GmmsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GmmsSpec::Thermal { nbar } => write!(f, "thermal:nbar={nbar:?}"),
            GmmsSpec::Cvmms { b } => write!(f, "cvmms:b={b:?}"),
            GmmsSpec::Squeezed { b, s, phi } => write!(f, "squeezed:b={b:?},s={s:?},phi={phi:?}"),
            GmmsSpec::Riemann { b, delta } => write!(f, "riemann:b={b:?},delta={delta:?}"),
        }
    }
}

/// Parses `key=value` pairs, rejecting unknown and duplicate keys.
pub(crate) fn parse_params<'a>(body: &'a str, allowed: &[&str]) -> Result<Vec<(&'a str, f64)>> {
    let mut out: Vec<(&str, f64)> = Vec::new();
    if body.trim().is_empty() {
        return Ok(out);
    }
    for part in body.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| GmmsError::Parse(format!("expected key=value, got `{part}`")))?;
        let key = key.trim();
        if !allowed.contains(&key) {
            return Err(GmmsError::Parse(format!(
                "unknown parameter `{key}` (expected one of {})",
                allowed.join(", ")
            )));
        }
        if out.iter().any(|(k, _)| *k == key) {
            return Err(GmmsError::Parse(format!("duplicate parameter `{key}`")));
        }
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| GmmsError::Parse(format!("parameter `{key}`: `{}` is not a number", value.trim())))?;
        out.push((key, v));
    }
    Ok(out)
}

fn require(params: &[(&str, f64)], key: &'static str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| GmmsError::Parse(format!("missing parameter `{key}`")))
}

impl FromStr for GmmsSpec {
    type Err = GmmsError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        match kind {
            "thermal" => {
                let p = parse_params(body, &["nbar"])?;
                GmmsSpec::thermal(require(&p, "nbar")?)
            }
            "cvmms" => {
                let p = parse_params(body, &["b"])?;
                GmmsSpec::cvmms(require(&p, "b")?)
            }
            "squeezed" => {
                let p = parse_params(body, &["b", "s", "phi"])?;
                GmmsSpec::squeezed(require(&p, "b")?, require(&p, "s")?, require(&p, "phi")?)
            }
            "riemann" => {
                let p = parse_params(body, &["b", "delta"])?;
                GmmsSpec::riemann(require(&p, "b")?, require(&p, "delta")?)
            }
            other => Err(GmmsError::Parse(format!(
                "unknown state kind `{other}` (expected thermal, cvmms, squeezed or riemann)"
            ))),
        }
    }
}

/// Orders of the polar product rule on the disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_order: usize,
    pub angular_order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radial_order: 64,
            angular_order: 128,
        }
    }
}

impl QuadratureSpec {
    pub fn new(radial_order: usize, angular_order: usize) -> Result<Self> {
        if radial_order == 0 {
            return Err(GmmsError::domain("radial_order", "must be >= 1"));
        }
        if angular_order == 0 {
            return Err(GmmsError::domain("angular_order", "must be >= 1"));
        }
        Ok(QuadratureSpec {
            radial_order,
            angular_order,
        })
    }

    pub fn doubled(self) -> Self {
        QuadratureSpec {
            radial_order: 2 * self.radial_order,
            angular_order: 2 * self.angular_order,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffPolicy {
    #[default]
    Auto,
    Fixed(FockCutoff),
}

// ---------------------------------------------------------------------------
// kets

/// First `n_max + 1` amplitudes of `|alpha>`, without any tail check.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut amps = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        amps[0] = Complex64::new(1.0, 0.0);
        return amps;
    }
    let ln_r = alpha.norm().ln();
    let theta = alpha.arg();
    for (n, a) in amps.iter_mut().enumerate() {
        let ln_mag = -0.5 * r2 + n as f64 * ln_r - 0.5 * ln_factorial(n as u64);
        *a = Complex64::from_polar(ln_mag.exp(), n as f64 * theta);
    }
    amps
}

/// Smallest `n_max` with Poisson tail `P(n_max + 1, |alpha|^2) < tol`.
pub fn coherent_cutoff(alpha_abs_sqr: f64, tol: f64) -> Result<FockCutoff> {
    if alpha_abs_sqr == 0.0 {
        return Ok(FockCutoff::new(0));
    }
    let mut n = alpha_abs_sqr.floor() as usize;
    while n <= MAX_AUTO_CUTOFF {
        if regularized_lower_gamma(n as u64 + 1, alpha_abs_sqr)? < tol {
            return Ok(FockCutoff::new(n));
        }
        n += 1;
    }
    Err(GmmsError::Precondition(format!(
        "|alpha|^2 = {alpha_abs_sqr} needs a cutoff above {MAX_AUTO_CUTOFF}"
    )))
}

/// `|alpha> = e^{-|alpha|^2/2} sum_n alpha^n / sqrt(n!) |n>`.
pub fn coherent_ket(alpha: Complex64, cutoff: FockCutoff, tol: &ToleranceProfile) -> Result<FockPureVector> {
    let x = alpha.norm_sqr();
    if !x.is_finite() {
        return Err(GmmsError::domain("alpha", "must be finite"));
    }
    let tail = if x == 0.0 {
        0.0
    } else {
        regularized_lower_gamma(cutoff.n_max() as u64 + 1, x)?
    };
    if tail >= tol.trace {
        return Err(GmmsError::Truncation {
            n_max: cutoff.n_max(),
            required: coherent_cutoff(x, tol.trace)?.n_max(),
            tail,
        });
    }
    FockPureVector::new(coherent_amplitudes(alpha, cutoff.n_max()))
}

/// First `n_max + 1` amplitudes of `S(zeta) D(alpha)|0>` with `zeta = s e^{i phi}`.
///
/// With `nu = e^{i phi} sinh s` and `c = cosh s`, amplitude `n` is
/// `(nu / 2c)^{n/2} / sqrt(c n!) exp(-(|alpha|^2 - nu^* alpha^2 / c) / 2) H_n(alpha / sqrt(2 nu c))`,
/// where both square roots of `nu` take the same branch. The Hermite factor is
/// evaluated through [`normalized_hermite_sequence`], which stays regular at
/// `nu = 0`; `s = 0` still dispatches to [`coherent_amplitudes`].
pub fn sc_amplitudes(alpha: Complex64, s: f64, phi: f64, n_max: usize) -> Vec<Complex64> {
    if s == 0.0 {
        return coherent_amplitudes(alpha, n_max);
    }
    let c = s.cosh();
    let nu = Complex64::from_polar(s.sinh(), phi);
    let u = alpha / (2.0 * c);
    let v = nu / (2.0 * c);
    let prefactor = (-(alpha.norm_sqr() - nu.conj() * alpha * alpha / c) * 0.5).exp() / c.sqrt();
    normalized_hermite_sequence(n_max, u, v)
        .into_iter()
        .map(|g| prefactor * g)
        .collect()
}

fn sc_norm_deficit(alpha: Complex64, s: f64, phi: f64, n_max: usize) -> f64 {
    let norm: f64 = sc_amplitudes(alpha, s, phi, n_max).iter().map(|a| a.norm_sqr()).sum();
    1.0 - norm
}

/// Mean photon number of `S(zeta) D(alpha)|0>`, used to seed cutoff searches.
fn sc_mean_photon(alpha: Complex64, s: f64, phi: f64) -> f64 {
    let shifted = alpha * s.cosh() - alpha.conj() * Complex64::from_polar(s.sinh(), phi);
    shifted.norm_sqr() + s.sinh().powi(2)
}

/// Squeezed-coherent ket; fails when more than the truncation budget escapes the cutoff.
pub fn sc_ket(alpha: Complex64, s: f64, phi: f64, cutoff: FockCutoff, tol: &ToleranceProfile) -> Result<FockPureVector> {
    non_negative("s", s)?;
    if !phi.is_finite() || !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(GmmsError::domain("alpha", "alpha and phi must be finite"));
    }
    let amps = sc_amplitudes(alpha, s, phi, cutoff.n_max());
    let deficit = 1.0 - amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if deficit > tol.trace {
        let mut n = cutoff.n_max().max(sc_mean_photon(alpha, s, phi).ceil() as usize);
        while n < MAX_AUTO_CUTOFF && sc_norm_deficit(alpha, s, phi, n) > tol.trace {
            n = n + 1 + n / 8;
        }
        return Err(GmmsError::Truncation {
            n_max: cutoff.n_max(),
            required: n,
            tail: deficit,
        });
    }
    FockPureVector::new(amps)
}

// ---------------------------------------------------------------------------
// thermal

/// Smallest `n_max` with geometric tail `(nbar / (nbar + 1))^{n_max + 1} < tol`.
pub fn thermal_cutoff(nbar: f64, tol: f64) -> Result<FockCutoff> {
    non_negative("nbar", nbar)?;
    if nbar == 0.0 {
        return Ok(FockCutoff::new(0));
    }
    let ln_q = nbar.ln() - nbar.ln_1p();
    let mut n = ((tol.ln() / ln_q).ceil() as usize).saturating_sub(2);
    while ((n + 1) as f64 * ln_q).exp() >= tol {
        n += 1;
    }
    if n > MAX_AUTO_CUTOFF {
        return Err(GmmsError::Precondition(format!("nbar = {nbar} needs a cutoff above {MAX_AUTO_CUTOFF}")));
    }
    Ok(FockCutoff::new(n))
}

/// `rho_th = sum_n nbar^n / (nbar + 1)^{n+1} |n><n|`.
pub fn thermal_state(nbar: f64, cutoff: FockCutoff, tol: &ToleranceProfile) -> Result<FockDensityOperator> {
    non_negative("nbar", nbar)?;
    if nbar == 0.0 {
        return Ok(FockDensityOperator::vacuum(cutoff));
    }
    let ln_q = nbar.ln() - nbar.ln_1p();
    let tail = ((cutoff.n_max() + 1) as f64 * ln_q).exp();
    if tail >= tol.trace {
        return Err(GmmsError::Truncation {
            n_max: cutoff.n_max(),
            required: thermal_cutoff(nbar, tol.trace)?.n_max(),
            tail,
        });
    }
    let ln_norm = nbar.ln_1p();
    let weights: Vec<f64> = (0..cutoff.dim()).map(|n| (n as f64 * ln_q - ln_norm).exp()).collect();
    FockDensityOperator::from_diagonal(cutoff, &weights)
}

// ---------------------------------------------------------------------------
// CVMMS

/// Survival values `P(n+1, b^2)` for `n = 0..=n_max` plus the mass
/// `sum_{n > n_max} P(n+1, b^2) / b^2` lost above the cutoff.
fn cvmms_weights_and_tail(b: f64, n_max: usize) -> Result<(Vec<f64>, f64)> {
    let x = b * b;
    let mut horizon = n_max + (12.0 * x.sqrt()) as usize + 60;
    horizon = horizon.max(x.ceil() as usize + 60);
    let table = poisson_survival_table(x, horizon)?;
    let tail: f64 = table[n_max + 1..].iter().rev().sum::<f64>() / x;
    let mut weights = table;
    weights.truncate(n_max + 1);
    Ok((weights, tail))
}

/// Smallest `n_max` whose CVMMS trace deficit is below `tol`.
pub fn cvmms_cutoff(b: f64, tol: f64) -> Result<FockCutoff> {
    positive("b", b)?;
    let x = b * b;
    let horizon = (x + 12.0 * x.sqrt()) as usize + 80;
    if horizon > MAX_AUTO_CUTOFF {
        return Err(GmmsError::Precondition(format!("b = {b} needs a cutoff above {MAX_AUTO_CUTOFF}")));
    }
    let table = poisson_survival_table(x, horizon)?;
    let mut tail = 0.0;
    // walk down from the horizon; the first n whose tail exceeds tol fixes n_max = n
    for n in (0..horizon).rev() {
        tail += table[n + 1];
        if tail / x >= tol {
            return Ok(FockCutoff::new(n + 1));
        }
    }
    Ok(FockCutoff::new(0))
}

/// `(1 / pi b^2) int_{|alpha| <= b} |alpha><alpha| d^2 alpha`, with Fock weights
/// `P(n+1, b^2) / b^2`.
pub fn cvmms_state(b: f64, cutoff: FockCutoff, tol: &ToleranceProfile) -> Result<FockDensityOperator> {
    positive("b", b)?;
    let (survival, tail) = cvmms_weights_and_tail(b, cutoff.n_max())?;
    if tail >= tol.trace {
        let x = b * b;
        return Err(GmmsError::Truncation {
            n_max: cutoff.n_max(),
            required: cvmms_cutoff(b, tol.trace).map(|c| c.n_max()).unwrap_or((x + 10.0 * x.sqrt()) as usize),
            tail,
        });
    }
    let x = b * b;
    let weights: Vec<f64> = survival.iter().map(|p| p / x).collect();
    FockDensityOperator::from_diagonal(cutoff, &weights)
}

// ---------------------------------------------------------------------------
// disk quadrature

/// Sums matrices pairwise in a fixed tree so the result does not depend on
/// how the terms were produced.
pub(crate) fn pairwise_sum(mut terms: Vec<DMatrix<Complex64>>) -> Option<DMatrix<Complex64>> {
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop()
}

/// Accumulates `sum_k w |a_k><a_k|` into the upper triangle.
fn accumulate_upper(acc: &mut DMatrix<Complex64>, amps: &[Complex64], w: f64) {
    let d = amps.len();
    for i in 0..d {
        let ai = amps[i] * w;
        for j in i..d {
            acc[(i, j)] += ai * amps[j].conj();
        }
    }
}

/// `(1 / pi b^2) int_{|alpha| <= b} |alpha, zeta><alpha, zeta| d^2 alpha` on the
/// truncated space, integrated with the polar rule `quad`.
///
/// The trace is left as computed; its deficit is the mass that escapes the
/// cutoff. Use [`FockDensityOperator::normalized`] to renormalize explicitly.
pub fn quadrature_gmms(
    b: f64,
    s: f64,
    phi: f64,
    cutoff: FockCutoff,
    quad: QuadratureSpec,
    tol: &ToleranceProfile,
) -> Result<FockDensityOperator> {
    positive("b", b)?;
    non_negative("s", s)?;
    QuadratureSpec::new(quad.radial_order, quad.angular_order)?;
    let rings = polar_disk_rule(Complex64::new(0.0, 0.0), b, quad.radial_order, quad.angular_order);
    let dim = cutoff.dim();
    let partials: Vec<DMatrix<Complex64>> = rings
        .par_iter()
        .map(|ring| {
            let mut acc = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
            for &alpha in &ring.points {
                let amps = sc_amplitudes(alpha, s, phi, cutoff.n_max());
                accumulate_upper(&mut acc, &amps, ring.weight);
            }
            acc
        })
        .collect();
    let sum = pairwise_sum(partials).expect("at least one ring");
    let norm = 1.0 / (PI * b * b);
    let entries = hermitian_from_upper(dim, |i, j| sum[(i, j)] * norm);
    let op = FockDensityOperator::adopt(cutoff, entries);
    let min_ev = op.eigenvalues()[0];
    if min_ev < -tol.psd {
        return Err(GmmsError::Integrity(format!(
            "quadrature produced eigenvalue {min_ev:.3e} below -{:.1e}",
            tol.psd
        )));
    }
    Ok(op)
}

/// Result of refining the disk quadrature until successive operators agree.
#[derive(Debug, Clone)]
pub struct ConvergedQuadrature {
    pub operator: FockDensityOperator,
    /// Orders of the returned operator.
    pub quad: QuadratureSpec,
    /// Hilbert-Schmidt change between the last two refinement levels.
    pub last_change: f64,
    pub converged: bool,
}

/// Doubles both quadrature orders, starting from `start`, until the operator
/// changes by less than `tol.quadrature` in Hilbert-Schmidt norm.
pub fn quadrature_gmms_converged(
    b: f64,
    s: f64,
    phi: f64,
    cutoff: FockCutoff,
    start: QuadratureSpec,
    max_doublings: usize,
    tol: &ToleranceProfile,
) -> Result<ConvergedQuadrature> {
    let mut quad = start;
    let mut current = quadrature_gmms(b, s, phi, cutoff, quad, tol)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..max_doublings {
        let finer_quad = quad.doubled();
        let finer = quadrature_gmms(b, s, phi, cutoff, finer_quad, tol)?;
        last_change = hs_norm_of_difference(&current, &finer);
        quad = finer_quad;
        current = finer;
        if last_change < tol.quadrature {
            break;
        }
    }
    Ok(ConvergedQuadrature {
        operator: current,
        quad,
        last_change,
        converged: last_change < tol.quadrature,
    })
}

fn hs_norm_of_difference(a: &FockDensityOperator, b: &FockDensityOperator) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries().iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Smallest cutoff whose squeezed-disk trace deficit is below `tol`,
/// estimated on a coarse polar rule.
pub fn squeezed_cutoff(b: f64, s: f64, phi: f64, tol: f64) -> Result<FockCutoff> {
    positive("b", b)?;
    non_negative("s", s)?;
    if s == 0.0 {
        return cvmms_cutoff(b, tol);
    }
    let rings = polar_disk_rule(Complex64::new(0.0, 0.0), b, 24, 48);
    let worst = rings
        .last()
        .map(|ring| {
            ring.points
                .iter()
                .map(|&a| sc_mean_photon(a, s, phi))
                .fold(0.0, f64::max)
        })
        .unwrap_or(0.0);
    let mut horizon = (worst + 12.0 * worst.sqrt()) as usize + 60;
    loop {
        if horizon > MAX_AUTO_CUTOFF {
            return Err(GmmsError::Precondition(format!(
                "squeezed state (b = {b}, s = {s}) needs a cutoff above {MAX_AUTO_CUTOFF}"
            )));
        }
        // average photon-number distribution over the disk
        let mut dist = vec![0.0; horizon + 1];
        for ring in &rings {
            for &alpha in &ring.points {
                for (n, a) in sc_amplitudes(alpha, s, phi, horizon).iter().enumerate() {
                    dist[n] += ring.weight * a.norm_sqr();
                }
            }
        }
        let area = PI * b * b;
        dist.iter_mut().for_each(|p| *p /= area);
        let mut tail = 0.0;
        let mut found = None;
        for n in (0..horizon).rev() {
            tail += dist[n + 1];
            if tail >= tol {
                found = Some(n + 1);
                break;
            }
        }
        match found {
            Some(n) if n < horizon => return Ok(FockCutoff::new(n)),
            None => return Ok(FockCutoff::new(0)),
            _ => horizon *= 2,
        }
    }
}

/// Fock weights of the measured diagonal rescaled by `b^2 e^{K b^2}` with
/// `K = 1 - tanh(s) cos(phi)`.
pub fn kappa_report(op: &FockDensityOperator, b: f64, s: f64, phi: f64) -> Vec<f64> {
    let k = 1.0 - s.tanh() * phi.cos();
    let scale = b * b * (k * b * b).exp();
    op.diagonal().into_iter().map(|p| p * scale).collect()
}

// ---------------------------------------------------------------------------
// Riemann grid

/// Lattice points `(i delta, j delta)` with `|alpha| <= b`.
pub fn riemann_grid(b: f64, delta: f64) -> Result<Vec<Complex64>> {
    positive("b", b)?;
    positive("delta", delta)?;
    if delta >= b {
        return Err(GmmsError::domain("delta", format!("must be < b = {b}, got {delta}")));
    }
    let m = (b / delta).floor() as i64 + 1;
    let limit = b * b * (1.0 + 1e-12);
    let mut points = Vec::new();
    for i in -m..=m {
        for j in -m..=m {
            let z = Complex64::new(i as f64 * delta, j as f64 * delta);
            if z.norm_sqr() <= limit {
                points.push(z);
            }
        }
    }
    if points.is_empty() {
        return Err(GmmsError::domain("delta", "grid has no points inside the disk"));
    }
    Ok(points)
}

/// Equal-weight mixture of coherent states on a square lattice of spacing
/// `delta` clipped to the disk `|alpha| <= b`, normalized to unit trace.
pub fn riemann_gmms(b: f64, delta: f64, cutoff: FockCutoff) -> Result<FockDensityOperator> {
    let points = riemann_grid(b, delta)?;
    let dim = cutoff.dim();
    let rows: Vec<DMatrix<Complex64>> = points
        .par_chunks(64)
        .map(|chunk| {
            let mut acc = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
            for &alpha in chunk {
                accumulate_upper(&mut acc, &coherent_amplitudes(alpha, cutoff.n_max()), delta * delta);
            }
            acc
        })
        .collect();
    let sum = pairwise_sum(rows).expect("grid is non-empty");
    let k: f64 = (0..dim).map(|n| sum[(n, n)].re).sum();
    if k.is_nan() || k <= 0.0 {
        return Err(GmmsError::Integrity("Riemann sum has zero trace".into()));
    }
    let entries = hermitian_from_upper(dim, |i, j| sum[(i, j)] / k);
    Ok(FockDensityOperator::adopt(cutoff, entries))
}

// ---------------------------------------------------------------------------
// dispatch

/// Automatic cutoff for a candidate: the smallest `n_max` whose truncation
/// loss is below `tol`.
pub fn auto_cutoff(spec: &GmmsSpec, tol: f64) -> Result<FockCutoff> {
    match *spec {
        GmmsSpec::Thermal { nbar } => thermal_cutoff(nbar, tol),
        GmmsSpec::Cvmms { b } => cvmms_cutoff(b, tol),
        GmmsSpec::Squeezed { b, s, phi } => squeezed_cutoff(b, s, phi, tol),
        GmmsSpec::Riemann { b, .. } => coherent_cutoff(b * b, tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub cutoff: CutoffPolicy,
    pub tol: ToleranceProfile,
    pub quad: QuadratureSpec,
    /// Maximum quadrature doublings for squeezed candidates (0 = fixed orders).
    pub max_doublings: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            cutoff: CutoffPolicy::Auto,
            tol: ToleranceProfile::default(),
            quad: QuadratureSpec::default(),
            max_doublings: 0,
        }
    }
}

/// A constructed candidate together with how it was built.
#[derive(Debug, Clone)]
pub struct BuiltState {
    pub spec: GmmsSpec,
    pub cutoff: FockCutoff,
    pub operator: FockDensityOperator,
    /// Quadrature orders and final refinement change, for squeezed candidates.
    pub quadrature: Option<(QuadratureSpec, f64)>,
}

pub fn build_state(spec: &GmmsSpec, opts: &BuildOptions) -> Result<BuiltState> {
    let spec = spec.validated()?;
    let cutoff = match opts.cutoff {
        CutoffPolicy::Auto => auto_cutoff(&spec, opts.tol.trace)?,
        CutoffPolicy::Fixed(c) => c,
    };
    let mut quadrature = None;
    let operator = match spec {
        GmmsSpec::Thermal { nbar } => thermal_state(nbar, cutoff, &opts.tol)?,
        GmmsSpec::Cvmms { b } => cvmms_state(b, cutoff, &opts.tol)?,
        GmmsSpec::Squeezed { b, s, phi } => {
            let run = quadrature_gmms_converged(b, s, phi, cutoff, opts.quad, opts.max_doublings, &opts.tol)?;
            quadrature = Some((run.quad, run.last_change));
            run.operator
        }
        GmmsSpec::Riemann { b, delta } => riemann_gmms(b, delta, cutoff)?,
    };
    Ok(BuiltState {
        spec,
        cutoff,
        operator,
        quadrature,
    })
}
