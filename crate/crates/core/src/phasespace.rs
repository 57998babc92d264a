//! Husimi Q and Wigner functions, grids of them, and the Gaussian smoothing
//! identity `Q(beta) = (2/pi) int W(alpha) exp(-2|alpha - beta|^2) d^2 alpha`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GmmsError, Result};
use crate::fock::FockDensityOperator;
use crate::quadrature::polar_disk_rule;
use crate::special::{laguerre_sequence, log_poisson_pmf};
use crate::states::{coherent_amplitudes, QuadratureSpec};

/// Radius of the disk around `beta` used by [`smoothing_check`]; the kernel
/// `exp(-2 r^2)` is below 1e-31 at the rim.
pub const SMOOTHING_RADIUS: f64 = 6.0;

fn poisson_weights(x: f64, n_max: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut w = vec![0.0; n_max + 1];
        w[0] = 1.0;
        return w;
    }
    (0..=n_max as u64)
        .map(|k| log_poisson_pmf(k, x).map(|l| l.weight()).unwrap_or(0.0))
        .collect()
}

/// `(1/pi) <beta|rho|beta>`.
///
/// Only the first `n_max + 1` coherent amplitudes enter the overlap with a
/// truncated operator, so the value is exact for any `beta`.
pub fn husimi_point(rho: &FockDensityOperator, beta: Complex64) -> Result<f64> {
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(GmmsError::domain("beta", "must be finite"));
    }
    let n_max = rho.cutoff().n_max();
    if rho.is_diagonal() {
        let w = poisson_weights(beta.norm_sqr(), n_max);
        let q: f64 = rho.diagonal().iter().zip(&w).map(|(p, w)| p * w).sum();
        return Ok(q / PI);
    }
    let a = coherent_amplitudes(beta, n_max);
    let m = rho.entries();
    let mut total = Complex64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        let mut row = Complex64::new(0.0, 0.0);
        for (j, aj) in a.iter().enumerate() {
            row += m[(i, j)] * aj;
        }
        total += ai.conj() * row;
    }
    Ok(total.re / PI)
}

/// `(2/pi) sum_n p_n (-1)^n exp(-2|alpha|^2) L_n(4|alpha|^2)` for a
/// Fock-diagonal operator.
pub fn wigner_point(rho: &FockDensityOperator, alpha: Complex64) -> Result<f64> {
    if !rho.is_diagonal() {
        return Err(GmmsError::Precondition(
            "Wigner evaluation needs a Fock-diagonal operator".into(),
        ));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(GmmsError::domain("alpha", "must be finite"));
    }
    Ok(wigner_diagonal(&rho.diagonal(), alpha.norm_sqr()))
}

fn wigner_diagonal(p: &[f64], r2: f64) -> f64 {
    let x = 4.0 * r2;
    let l = laguerre_sequence(p.len() - 1, x, (-0.5 * x).exp());
    let s: f64 = p
        .iter()
        .zip(&l)
        .enumerate()
        .map(|(n, (pn, ln))| if n % 2 == 0 { pn * ln } else { -pn * ln })
        .sum();
    2.0 * s / PI
}

/// Values on a square lattice. Row-major with the imaginary part indexing
/// rows and the real part indexing columns, both ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub resolution: usize,
    pub values: Vec<f64>,
}

fn axis(min: f64, max: f64, res: usize, k: usize) -> f64 {
    if res == 1 {
        0.5 * (min + max)
    } else {
        min + (max - min) * k as f64 / (res - 1) as f64
    }
}

impl PhaseSpaceGrid {
    /// Evaluate `f` on the square `[-extent, extent]^2`.
    pub fn evaluate<F>(extent: f64, resolution: usize, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<f64> + Sync,
    {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(GmmsError::domain("extent", format!("must be finite and > 0, got {extent}")));
        }
        if resolution == 0 {
            return Err(GmmsError::domain("resolution", "must be >= 1"));
        }
        let mut grid = PhaseSpaceGrid {
            re_min: -extent,
            re_max: extent,
            im_min: -extent,
            im_max: extent,
            resolution,
            values: Vec::new(),
        };
        grid.values = (0..resolution * resolution)
            .into_par_iter()
            .map(|idx| f(grid.point(idx)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(grid)
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        let (row, col) = (idx / self.resolution, idx % self.resolution);
        Complex64::new(
            axis(self.re_min, self.re_max, self.resolution, col),
            axis(self.im_min, self.im_max, self.resolution, row),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, re_index: usize, im_index: usize) -> f64 {
        self.values[im_index * self.resolution + re_index]
    }

    pub fn center_index(&self) -> Option<usize> {
        (self.resolution % 2 == 1).then(|| (self.resolution * self.resolution) / 2)
    }

    pub fn argmax(&self) -> Option<usize> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid rule over the grid rectangle.
    pub fn integral(&self) -> f64 {
        let n = self.resolution;
        if n < 2 {
            return 0.0;
        }
        let hx = (self.re_max - self.re_min) / (n - 1) as f64;
        let hy = (self.im_max - self.im_min) / (n - 1) as f64;
        let edge = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut total = 0.0;
        for row in 0..n {
            let mut line = 0.0;
            for col in 0..n {
                line += edge(col) * self.values[row * n + col];
            }
            total += edge(row) * line;
        }
        total * hx * hy
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.len() + 16);
        out.push_str("re,im,value\n");
        for (idx, v) in self.values.iter().enumerate() {
            let p = self.point(idx);
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", p.re, p.im, v);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Parse the CSV written by [`PhaseSpaceGrid::to_csv`].
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "re,im,value" => {}
            _ => return Err(GmmsError::Parse("missing `re,im,value` header".into())),
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line.map_err(|e| GmmsError::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| GmmsError::Parse(format!("line {}: {e}", k + 2)))?;
            if fields.len() != 3 {
                return Err(GmmsError::Parse(format!("line {}: expected 3 fields", k + 2)));
            }
            rows.push((fields[0], fields[1], fields[2]));
        }
        let resolution = (rows.len() as f64).sqrt().round() as usize;
        if resolution == 0 || resolution * resolution != rows.len() {
            return Err(GmmsError::Parse(format!("{} rows is not a square grid", rows.len())));
        }
        let first = rows[0];
        let last = rows[rows.len() - 1];
        Ok(PhaseSpaceGrid {
            re_min: first.0,
            re_max: last.0,
            im_min: first.1,
            im_max: last.1,
            resolution,
            values: rows.into_iter().map(|r| r.2).collect(),
        })
    }
}

/// Husimi function on `[-extent, extent]^2` with `resolution` points per axis.
pub fn husimi_grid(rho: &FockDensityOperator, extent: f64, resolution: usize) -> Result<PhaseSpaceGrid> {
    if rho.is_diagonal() {
        let p = rho.diagonal();
        let n_max = rho.cutoff().n_max();
        return PhaseSpaceGrid::evaluate(extent, resolution, |beta| {
            let w = poisson_weights(beta.norm_sqr(), n_max);
            Ok(p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / PI)
        });
    }
    PhaseSpaceGrid::evaluate(extent, resolution, |beta| husimi_point(rho, beta))
}

pub fn wigner_grid(rho: &FockDensityOperator, extent: f64, resolution: usize) -> Result<PhaseSpaceGrid> {
    if !rho.is_diagonal() {
        return Err(GmmsError::Precondition(
            "Wigner evaluation needs a Fock-diagonal operator".into(),
        ));
    }
    let p = rho.diagonal();
    PhaseSpaceGrid::evaluate(extent, resolution, |alpha| Ok(wigner_diagonal(&p, alpha.norm_sqr())))
}

/// `int max(-W, 0) d^2 alpha` by the trapezoid rule on a Wigner grid.
pub fn negativity_volume(rho: &FockDensityOperator, extent: f64, resolution: usize) -> Result<f64> {
    let mut g = wigner_grid(rho, extent, resolution)?;
    for v in &mut g.values {
        *v = (-*v).max(0.0);
    }
    Ok(g.integral())
}

/// `|Q(beta) - (2/pi) int W(alpha) exp(-2|alpha - beta|^2) d^2 alpha|` with
/// the integral taken by a polar product rule on the disk of radius
/// [`SMOOTHING_RADIUS`] around `beta`.
pub fn smoothing_check(rho: &FockDensityOperator, beta: Complex64, quad: QuadratureSpec) -> Result<f64> {
    let q = husimi_point(rho, beta)?;
    if !rho.is_diagonal() {
        return Err(GmmsError::Precondition(
            "smoothing check needs a Fock-diagonal operator".into(),
        ));
    }
    let p = rho.diagonal();
    let rule = polar_disk_rule(beta, SMOOTHING_RADIUS, quad.radial_order, quad.angular_order);
    let per_ring: Vec<f64> = rule
        .par_iter()
        .map(|ring| {
            let kernel = (-2.0 * ring.radius * ring.radius).exp();
            let s: f64 = ring.points.iter().map(|a| wigner_diagonal(&p, a.norm_sqr())).sum();
            ring.weight * kernel * s
        })
        .collect();
    let smoothed = 2.0 / PI * per_ring.iter().sum::<f64>();
    Ok((q - smoothed).abs())
}
