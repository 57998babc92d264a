//! Special functions: Poisson log-weights, the regularized lower incomplete
//! gamma function at integer order, complex Hermite and Laguerre polynomials.
//!
//! `P(n+1, x)` is evaluated through the Poisson survival identity
//! `P(n+1, x) = 1 - sum_{k<=n} x^k e^{-x} / k! = sum_{k>n} x^k e^{-x} / k!`,
//! choosing whichever side of the identity avoids cancellation.

use num_complex::Complex64;

use crate::error::{GmmsError, Result};

/// Recurrence magnitude above which Hermite evaluation fails.
pub const HERMITE_MAGNITUDE_LIMIT: f64 = 1e300;

/// A positive weight stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    pub fn new(value: f64) -> Self {
        LogWeight(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn weight(self) -> f64 {
        self.0.exp()
    }
}

/// `ln(k!)` via the log-gamma function.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else {
        libm::lgamma(k as f64 + 1.0)
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(GmmsError::domain("x", format!("must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Err(GmmsError::domain("x", "must be finite"));
    }
    Ok(())
}

fn ln_pmf(k: u64, x: f64) -> f64 {
    if x == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * x.ln() - x - ln_factorial(k)
}

/// `ln(x^k e^{-x} / k!)`.
pub fn log_poisson_pmf(k: u64, x: f64) -> Result<LogWeight> {
    if x.is_nan() || x <= 0.0 || x.is_infinite() {
        return Err(GmmsError::domain("x", format!("must be finite and > 0, got {x}")));
    }
    Ok(LogWeight(ln_pmf(k, x)))
}

/// `sum_{k >= start} x^k e^{-x} / k!`, summed from `start` upward. Only used
/// when `start > x`, where successive terms shrink by at least `x / (k + 1)`.
fn poisson_upper_tail(start: u64, x: f64) -> f64 {
    let mut term = ln_pmf(start, x).exp();
    let mut sum = 0.0;
    let mut k = start;
    while term > 0.0 {
        sum += term;
        if term <= sum * 1e-18 {
            break;
        }
        k += 1;
        term *= x / k as f64;
    }
    sum
}

/// Regularized lower incomplete gamma `P(n+1, x) = gamma(n+1, x) / n!`.
pub fn regularized_lower_gamma(n_plus_1: u64, x: f64) -> Result<f64> {
    if n_plus_1 == 0 {
        return Err(GmmsError::domain("n_plus_1", "must be >= 1"));
    }
    check_x(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let n = n_plus_1 - 1;
    let p = if (n as f64) < x {
        let lower: f64 = (0..=n).map(|k| ln_pmf(k, x).exp()).sum();
        1.0 - lower
    } else {
        poisson_upper_tail(n + 1, x)
    };
    Ok(p.clamp(0.0, 1.0))
}

/// `P(n+1, x)` for every `n` in `0..=n_max`.
pub fn poisson_survival_table(x: f64, n_max: usize) -> Result<Vec<f64>> {
    check_x(x)?;
    if x == 0.0 {
        return Ok(vec![0.0; n_max + 1]);
    }
    let pmf: Vec<f64> = (0..=n_max as u64 + 1).map(|k| ln_pmf(k, x).exp()).collect();
    let mut out = vec![0.0; n_max + 1];
    // n < x: complement of the lower sum
    let mut lower = 0.0;
    let mut split = n_max + 1;
    for n in 0..=n_max {
        if (n as f64) >= x {
            split = n;
            break;
        }
        lower += pmf[n];
        out[n] = (1.0 - lower).clamp(0.0, 1.0);
    }
    // n >= x: tail sums accumulated backward from beyond the cutoff
    if split <= n_max {
        let mut tail = poisson_upper_tail(n_max as u64 + 2, x) + pmf[n_max + 1];
        out[n_max] = tail.min(1.0);
        for n in (split..n_max).rev() {
            tail += pmf[n + 1];
            out[n] = tail.min(1.0);
        }
    }
    Ok(out)
}

/// Physicists' Hermite polynomial `H_n(z)` by the three-term recurrence.
pub fn hermite_complex(n: usize, z: Complex64) -> Result<Complex64> {
    let mut h_prev = Complex64::new(1.0, 0.0);
    if n == 0 {
        return Ok(h_prev);
    }
    let mut h = z * 2.0;
    for k in 1..n {
        let next = z * h * 2.0 - h_prev * (2.0 * k as f64);
        h_prev = h;
        h = next;
        if h.norm().is_nan() || h.norm() > HERMITE_MAGNITUDE_LIMIT {
            return Err(GmmsError::Integrity(format!(
                "|H_{}({z})| exceeds {HERMITE_MAGNITUDE_LIMIT:e}",
                k + 1
            )));
        }
    }
    Ok(h)
}

/// Real-argument Hermite recurrence.
pub fn hermite_real(n: usize, x: f64) -> f64 {
    let mut h_prev = 1.0;
    if n == 0 {
        return h_prev;
    }
    let mut h = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * h - 2.0 * k as f64 * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

/// Normalized Hermite sequence `g_n = t^n H_n(z) / sqrt(n!)` for `n = 0..=n_max`,
/// parameterized by `u = t z` and `v = t^2`:
///
/// `g_{n+1} = (2 u g_n - 2 v sqrt(n) g_{n-1}) / sqrt(n + 1)`.
///
/// The normalization keeps the sequence bounded where `H_n` alone would overflow.
pub fn normalized_hermite_sequence(n_max: usize, u: Complex64, v: Complex64) -> Vec<Complex64> {
    let mut g = Vec::with_capacity(n_max + 1);
    g.push(Complex64::new(1.0, 0.0));
    if n_max == 0 {
        return g;
    }
    g.push(u * 2.0);
    for n in 1..n_max {
        let nf = n as f64;
        let next = (u * g[n] * 2.0 - v * g[n - 1] * (2.0 * nf.sqrt())) / (nf + 1.0).sqrt();
        g.push(next);
    }
    g
}

/// Laguerre polynomial `L_n(x)` via `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
pub fn laguerre(n: usize, x: f64) -> f64 {
    laguerre_sequence(n, x, 1.0)[n]
}

/// `scale * L_k(x)` for `k = 0..=n_max`. Passing `scale = e^{-x/2}` yields the
/// bounded functions `e^{-x/2} L_k(x)` without intermediate overflow.
pub fn laguerre_sequence(n_max: usize, x: f64, scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(scale);
    if n_max == 0 {
        return out;
    }
    out.push((1.0 - x) * scale);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * out[k] - kf * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_interval;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use proptest::prelude::*;

    fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// `ln(num / den)` for big positive integers, exact up to the final f64 rounding.
    fn ln_big_ratio(num: &BigInt, den: &BigInt) -> f64 {
        fn ln_big(v: &BigInt) -> f64 {
            let bits = v.bits();
            let shift = bits.saturating_sub(60);
            let top = (v >> shift).to_f64().unwrap();
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
        ln_big(num) - ln_big(den)
    }

    #[test]
    fn closed_forms() {
        let p = regularized_lower_gamma(1, 1.0).unwrap();
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-16);
        assert!((p - 0.632_120_558_828_557_7).abs() < 1e-15);
        for n in 1..50 {
            assert_eq!(regularized_lower_gamma(n, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn p5_matches_quadrature_oracle() {
        let f = |t: f64| t.powi(4) * (-t).exp() / 24.0;
        let oracle = adaptive_simpson(&f, 0.0, 4.2, 1e-15);
        let p = regularized_lower_gamma(5, 4.2).unwrap();
        assert!((p - oracle).abs() < 1e-12, "{p} vs {oracle}");
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(regularized_lower_gamma(3, -1.0), Err(GmmsError::Domain { .. })));
        assert!(matches!(regularized_lower_gamma(0, 1.0), Err(GmmsError::Domain { .. })));
        assert!(log_poisson_pmf(2, 0.0).is_err());
    }

    #[test]
    fn small_poisson_weights() {
        assert_eq!(log_poisson_pmf(0, 1.0).unwrap().value(), -1.0);
        let w = log_poisson_pmf(3, 2.0).unwrap().weight();
        let direct = 8.0 * (-2.0f64).exp() / 6.0;
        assert!((w - direct).abs() < 1e-15);
        assert!((w - 0.180_447).abs() < 1e-6);
    }

    #[test]
    fn ln_factorial_exact_for_small_k() {
        let mut fact: u64 = 1;
        for k in 0..=20u64 {
            if k > 0 {
                fact *= k;
            }
            let exact = (fact as f64).ln();
            assert!((ln_factorial(k) - exact).abs() <= 4.0 * f64::EPSILON * exact.max(1.0), "k = {k}");
        }
    }

    #[test]
    fn large_poisson_weight_matches_big_integer_oracle() {
        // 400^500 e^{-400} / 500!
        let num = BigInt::from(400u32).pow(500);
        let den = (1..=500u32).fold(BigInt::one(), |acc, k| acc * BigInt::from(k));
        let oracle = ln_big_ratio(&num, &den) - 400.0;
        let got = log_poisson_pmf(500, 400.0).unwrap();
        assert!(got.value().is_finite());
        let rel = (got.weight() - oracle.exp()).abs() / oracle.exp();
        assert!(rel < 1e-10, "relative error {rel:e}");
    }

    #[test]
    fn hermite_base_cases_and_hand_expansion() {
        let z = Complex64::new(0.7, -1.3);
        assert_eq!(hermite_complex(0, z).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(hermite_complex(1, z).unwrap(), z * 2.0);
        let h2 = hermite_complex(2, Complex64::new(1.0, 1.0)).unwrap();
        assert_eq!(h2, Complex64::new(-2.0, 8.0));
    }

    #[test]
    fn hermite_overflow_fails_loudly() {
        let r = hermite_complex(400, Complex64::new(1e3, 0.0));
        assert!(matches!(r, Err(GmmsError::Integrity(_))));
    }

    /// Exact H_n at a rational point, real and imaginary parts as rationals.
    fn hermite_exact(n: usize, re: f64, im: f64) -> (f64, f64) {
        let zr = BigRational::from_float(re).unwrap();
        let zi = BigRational::from_float(im).unwrap();
        let two = BigRational::from_integer(BigInt::from(2));
        let mut prev = (BigRational::one(), BigRational::zero());
        let mut cur = (&two * &zr, &two * &zi);
        for k in 1..n {
            let kk = BigRational::from_integer(BigInt::from(2 * k));
            // 2 z h
            let zr_h = &zr * &cur.0 - &zi * &cur.1;
            let zi_h = &zr * &cur.1 + &zi * &cur.0;
            let next = (&two * zr_h - &kk * &prev.0, &two * zi_h - &kk * &prev.1);
            prev = cur;
            cur = next;
        }
        (cur.0.to_f64().unwrap(), cur.1.to_f64().unwrap())
    }

    #[test]
    fn hermite_ten_matches_exact_rational_recurrence() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let re: f64 = rng.random_range(-3.0..3.0);
            let im: f64 = rng.random_range(-3.0..3.0);
            let (er, ei) = hermite_exact(10, re, im);
            let got = hermite_complex(10, Complex64::new(re, im)).unwrap();
            let exact = Complex64::new(er, ei);
            let rel = (got - exact).norm() / exact.norm();
            assert!(rel < 1e-9, "z = {re}+{im}i: rel {rel:e}");
        }
    }

    #[test]
    fn normalized_hermite_agrees_with_plain_recurrence() {
        let t = Complex64::new(0.4, 0.3);
        let z = Complex64::new(1.1, -0.6);
        let g = normalized_hermite_sequence(25, t * z, t * t);
        for (n, gn) in g.iter().enumerate() {
            let direct = t.powu(n as u32) * hermite_complex(n, z).unwrap() / (0.5 * ln_factorial(n as u64)).exp();
            assert!((gn - direct).norm() <= 1e-12 * direct.norm().max(1.0), "n = {n}");
        }
    }

    #[test]
    fn laguerre_values() {
        for x in [-1.0, 0.0, 0.3, 7.0] {
            assert_eq!(laguerre(0, x), 1.0);
            assert_eq!(laguerre(1, x), 1.0 - x);
        }
        assert!((laguerre(2, 2.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn laguerre_orthogonality_by_quadrature() {
        let mut nodes = Vec::new();
        for panel in 0..15 {
            let a = panel as f64 * 10.0;
            nodes.extend(gauss_legendre_interval(40, a, a + 10.0));
        }
        for m in 0..=5 {
            for n in 0..=5 {
                let integral: f64 = nodes
                    .iter()
                    .map(|&(x, w)| w * (-x).exp() * laguerre(m, x) * laguerre(n, x))
                    .sum();
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((integral - expected).abs() < 1e-12, "m={m} n={n}: {integral}");
            }
        }
    }

    #[test]
    fn survival_identity_sums_to_x() {
        for x in [0.25_f64, 1.0, 4.0, 25.0] {
            let n_max = (x + 12.0 * x.sqrt() + 40.0) as usize;
            let table = poisson_survival_table(x, n_max).unwrap();
            let total: f64 = table.iter().sum();
            assert!((total - x).abs() <= 1e-10 * x, "x = {x}: {total}");
        }
    }

    #[test]
    fn table_matches_pointwise_evaluation() {
        for x in [0.01, 0.5, 3.0, 17.5, 90.0] {
            let table = poisson_survival_table(x, 160).unwrap();
            for (n, &p) in table.iter().enumerate() {
                let direct = regularized_lower_gamma(n as u64 + 1, x).unwrap();
                assert!((p - direct).abs() <= 1e-14 + 1e-12 * direct, "x={x} n={n}: {p} vs {direct}");
            }
        }
    }

    proptest! {
        #[test]
        fn survival_plus_cdf_is_one(n in 0u64..=100, x in 0.001f64..=100.0) {
            let p = regularized_lower_gamma(n + 1, x).unwrap();
            let cdf: f64 = (0..=n).map(|k| log_poisson_pmf(k, x).unwrap().weight()).sum();
            prop_assert!((p + cdf - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotone_in_x_and_n(n in 0u64..60, x in 0.0f64..60.0, dx in 0.01f64..5.0) {
            let p = regularized_lower_gamma(n + 1, x).unwrap();
            prop_assert!(regularized_lower_gamma(n + 1, x + dx).unwrap() >= p);
            prop_assert!(regularized_lower_gamma(n + 2, x).unwrap() <= p);
        }

        #[test]
        fn complex_hermite_matches_real_on_real_axis(n in 0usize..40, x in -4.0f64..4.0) {
            let hc = hermite_complex(n, Complex64::new(x, 0.0)).unwrap();
            prop_assert_eq!(hc.re, hermite_real(n, x));
            prop_assert_eq!(hc.im, 0.0);
        }
    }
}
