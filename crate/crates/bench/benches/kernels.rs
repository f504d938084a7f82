use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pspin_core::evolve::{
    bohr_frequency_bound, build_decomposition, evolve_lindblad_prepared, initial_state, lindblad_max_dt,
    lindblad_rhs, LindbladOptions, DEFAULT_BIN_TOL,
};
use pspin_core::eigen::eig_tridiagonal;
use pspin_core::sector::{h_total, h_total_bands, instantaneous_eigen};
use pspin_core::thermal::{equilibrium_distribution, glauber_rhs};
use pspin_core::{
    eig_sorted, evolve_closed, AnnealSchedule, BathSpec, DensityMatrix, ModelParams, PreparedBath, SpinSector,
};

fn eigensolvers(c: &mut Criterion) {
    let params = ModelParams::with_unit_field(5).unwrap();
    let mut group = c.benchmark_group("eigen");
    for n in [8usize, 32, 128] {
        let sector = SpinSector::new(n).unwrap();
        let dense = h_total(&sector, &params, 0.4).unwrap();
        let (diag, off) = h_total_bands(&sector, &params, 0.4).unwrap();
        if n <= 32 {
            group.bench_with_input(BenchmarkId::new("jacobi", n), &dense, |b, h| b.iter(|| eig_sorted(black_box(h))));
        }
        group.bench_with_input(BenchmarkId::new("tridiagonal_ql", n), &(diag, off), |b, (d, o)| {
            b.iter(|| eig_tridiagonal(black_box(d), black_box(o)))
        });
    }
    group.finish();
}

fn generators(c: &mut Criterion) {
    let sector = SpinSector::new(8).unwrap();
    let params = ModelParams::with_unit_field(5).unwrap();
    let spec = BathSpec::ohmic(1e-2, 10.0, 10.0, true).unwrap();
    let bath = PreparedBath::new(spec, bohr_frequency_bound(&sector, &params)).unwrap();
    let eig = instantaneous_eigen(&sector, &params, 0.5).unwrap();
    let rho = DensityMatrix::from_pure(&initial_state(&sector));

    c.bench_function("lindblad_decomposition_n8", |b| {
        b.iter(|| build_decomposition(black_box(&eig), &sector, &bath, DEFAULT_BIN_TOL))
    });
    let decomp = build_decomposition(&eig, &sector, &bath, DEFAULT_BIN_TOL).unwrap();
    c.bench_function("lindblad_rhs_n8", |b| b.iter(|| lindblad_rhs(&decomp, black_box(&rho))));

    let dist = equilibrium_distribution(8, 5, 2.0).unwrap();
    c.bench_function("glauber_rhs_n8", |b| b.iter(|| glauber_rhs(black_box(&dist), 0.5, 8, 5)));
}

fn anneals(c: &mut Criterion) {
    let sector = SpinSector::new(8).unwrap();
    let params = ModelParams::with_unit_field(5).unwrap();
    let schedule = AnnealSchedule::linear(10.0).unwrap();
    let dt = lindblad_max_dt(10.0);
    let spec = BathSpec::ohmic(1e-2, 10.0, 10.0, true).unwrap();
    let bath = PreparedBath::new(spec, bohr_frequency_bound(&sector, &params)).unwrap();
    let options = LindbladOptions {
        dt,
        bin_tol: DEFAULT_BIN_TOL,
    };

    let mut group = c.benchmark_group("anneal_n8_tf10");
    group.sample_size(10);
    group.bench_function("closed", |b| b.iter(|| evolve_closed(&sector, &params, &schedule, dt)));
    group.bench_function("lindblad", |b| {
        b.iter(|| evolve_lindblad_prepared(&sector, &params, &schedule, &bath, options))
    });
    group.finish();
}

criterion_group!(benches, eigensolvers, generators, anneals);
criterion_main!(benches);
