//! Gauss-Legendre rules and the polar product rule used to integrate over disks.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be >= 1");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (mid + half * xi, half * wi))
        .collect()
}

/// One radial ring of a polar rule: all angular nodes at a fixed radius.
#[derive(Debug, Clone)]
pub struct Ring {
    pub radius: f64,
    /// Area weight of each node on this ring (`r dr dtheta`).
    pub weight: f64,
    pub points: Vec<Complex64>,
}

/// Product rule on the disk `|z - center| <= radius`: Gauss-Legendre in the
/// radius with the `r` area factor folded into the weights, and the uniform
/// trapezoid rule in the angle.
pub fn polar_disk_rule(center: Complex64, radius: f64, radial_order: usize, angular_order: usize) -> Vec<Ring> {
    assert!(radial_order >= 1 && angular_order >= 1);
    let dtheta = 2.0 * PI / angular_order as f64;
    let angles: Vec<Complex64> = (0..angular_order)
        .map(|k| Complex64::from_polar(1.0, k as f64 * dtheta))
        .collect();
    gauss_legendre_interval(radial_order, 0.0, radius)
        .into_iter()
        .map(|(r, w)| Ring {
            radius: r,
            weight: w * r * dtheta,
            points: angles.iter().map(|u| center + u * r).collect(),
        })
        .collect()
}
