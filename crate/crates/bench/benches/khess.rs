use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use khess::cones::{eigenvalues, in_sigma_k, s_k_op};
use khess::dirichlet::{solve_radial_dirichlet, SolverConfig, SourceTerm};
use khess::eigen::{estimate_lambda1, iterate_fixed_lambda, lower_bound, IterationConfig};
use khess::symfun::{in_gamma_k, in_gamma_k_korevaar, sigma_k};
use khess_bench::{random_matrices, random_spectra};

fn symmetric_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("sigma_k");
    for n in [4, 8, 16] {
        let spectra = random_spectra(n, 256, 1);
        g.bench_with_input(BenchmarkId::new("recurrence", n), &spectra, |b, s| {
            b.iter(|| s.iter().map(|l| sigma_k(l, n / 2).unwrap()).sum::<f64>())
        });
        g.bench_with_input(BenchmarkId::new("gamma_k", n), &spectra, |b, s| {
            b.iter(|| s.iter().filter(|l| in_gamma_k(l, n / 2, true).unwrap()).count())
        });
    }
    let spectra = random_spectra(8, 64, 2);
    g.bench_function("korevaar/8", |b| b.iter(|| spectra.iter().filter(|l| in_gamma_k_korevaar(l, 4).unwrap()).count()));
    g.finish();
}

fn matrices(c: &mut Criterion) {
    let mut g = c.benchmark_group("symmetric_matrix");
    for n in [3, 6, 12] {
        let ms = random_matrices(n, 64, 3);
        g.bench_with_input(BenchmarkId::new("eigenvalues", n), &ms, |b, ms| {
            b.iter(|| ms.iter().map(|m| eigenvalues(m).unwrap().max()).sum::<f64>())
        });
        g.bench_with_input(BenchmarkId::new("s_k_op", n), &ms, |b, ms| b.iter(|| ms.iter().map(|m| s_k_op(m, 2).unwrap()).sum::<f64>()));
        g.bench_with_input(BenchmarkId::new("in_sigma_k", n), &ms, |b, ms| {
            b.iter(|| ms.iter().filter(|m| in_sigma_k(m, 2, false).unwrap()).count())
        });
    }
    g.finish();
}

fn dirichlet(c: &mut Criterion) {
    let mut g = c.benchmark_group("dirichlet");
    let f = SourceTerm::closure(|r| 1.0 + r * r);
    for m in [256, 1024, 4096] {
        let cfg = SolverConfig { grid_size: m, ..Default::default() };
        g.bench_with_input(BenchmarkId::new("solve_3_2", m), &cfg, |b, cfg| {
            b.iter(|| solve_radial_dirichlet(black_box(&f), 1.0, 3, 2, cfg).unwrap())
        });
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    g.sample_size(10);
    let cfg = IterationConfig::default();
    let scfg = SolverConfig::default();
    g.bench_function("iterate_below_threshold_3_2", |b| {
        b.iter(|| iterate_fixed_lambda(0.9 * lower_bound(3, 2, 1.0), 1.0, 3, 2, &cfg, &scfg).unwrap())
    });
    g.bench_function("estimate_2_1", |b| b.iter(|| estimate_lambda1(1.0, 2, 1, &cfg, &scfg).unwrap()));
    g.finish();
}

criterion_group!(benches, symmetric_functions, matrices, dirichlet, eigen);
criterion_main!(benches);
