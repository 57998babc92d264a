use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

use gmms_core::phasespace::{husimi_grid, smoothing_check};
use gmms_core::special::{normalized_hermite_sequence, poisson_survival_table, regularized_lower_gamma};
use gmms_core::states::{cvmms_cutoff, cvmms_state, quadrature_gmms, squeezed_cutoff};
use gmms_core::{QuadratureSpec, ToleranceProfile};

fn special(c: &mut Criterion) {
    c.bench_function("lower_gamma_n500_x400", |b| {
        b.iter(|| regularized_lower_gamma(black_box(501), black_box(400.0)))
    });
    c.bench_function("survival_table_x25_n80", |b| b.iter(|| poisson_survival_table(black_box(25.0), 80)));
    let u = Complex64::new(0.4, 0.1);
    let v = Complex64::new(0.05, 0.02);
    c.bench_function("hermite_sequence_200", |b| b.iter(|| normalized_hermite_sequence(200, black_box(u), black_box(v))));
}

fn quadrature(c: &mut Criterion) {
    let tol = ToleranceProfile::default();
    let cutoff = squeezed_cutoff(1.0, 0.2, 0.0, tol.trace).unwrap();
    let mut group = c.benchmark_group("quadrature_gmms");
    group.sample_size(10);
    group.bench_function("b1_s0.2_default", |b| {
        b.iter(|| quadrature_gmms(1.0, 0.2, 0.0, cutoff, QuadratureSpec::default(), &tol).unwrap())
    });
    group.finish();
}

fn phase_space(c: &mut Criterion) {
    let tol = ToleranceProfile::default();
    let rho = cvmms_state(1.0, cvmms_cutoff(1.0, tol.trace).unwrap(), &tol).unwrap();
    c.bench_function("husimi_grid_cvmms1_81", |b| b.iter(|| husimi_grid(&rho, 4.0, 81).unwrap()));
    c.bench_function("smoothing_check_cvmms1", |b| {
        b.iter(|| smoothing_check(&rho, Complex64::new(1.0, 0.5), QuadratureSpec::default()).unwrap())
    });
}

criterion_group!(benches, special, quadrature, phase_space);
criterion_main!(benches);
