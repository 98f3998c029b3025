use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hartree_bench::{bubble, grid, reference_coupling};
use hartree_core::radial::dirichlet_seminorm;
use hartree_core::riesz::{angular_kernel, double_energy, kernel_table, KernelTable, CRITICAL_ALPHA};
use hartree_core::solver::{solve_limit_ground_state, FlowConfig};
use hartree_core::verify::{RunConfig, Verifier};
use std::hint::black_box;

fn kernels(c: &mut Criterion) {
    c.bench_function("angular_kernel near diagonal", |b| b.iter(|| angular_kernel(CRITICAL_ALPHA, black_box(1.0), black_box(1.001), 5)));

    let mut g = c.benchmark_group("kernel_table");
    g.sample_size(10);
    for m in [100, 200, 400] {
        let gr = grid(m);
        g.bench_with_input(BenchmarkId::from_parameter(m), &gr, |b, gr| b.iter(|| KernelTable::build(gr.clone(), CRITICAL_ALPHA)));
    }
    g.finish();
}

fn energies(c: &mut Criterion) {
    let gr = grid(400);
    let u = bubble(&gr);
    let u2 = u.square();
    kernel_table(&gr, CRITICAL_ALPHA).unwrap();
    c.bench_function("double_energy M=400", |b| b.iter(|| double_energy(black_box(&u2), &u2, CRITICAL_ALPHA)));
    c.bench_function("dirichlet_seminorm M=400", |b| b.iter(|| dirichlet_seminorm(black_box(&u))));
}

fn pipelines(c: &mut Criterion) {
    let cc = reference_coupling();
    let mut g = c.benchmark_group("pipelines");
    g.sample_size(10);
    g.bench_function("ground-state flow", |b| b.iter(|| solve_limit_ground_state(&cc, &FlowConfig::default())));
    g.bench_function("region scan", |b| {
        b.iter_batched(|| Verifier::new(RunConfig::default()).unwrap(), |v| v.scan().map(|s| s.found), criterion::BatchSize::PerIteration)
    });
    g.finish();
}

criterion_group!(benches, kernels, energies, pipelines);
criterion_main!(benches);
