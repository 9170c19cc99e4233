//! Operator application on one worker against the full rayon pool.
//!
//! Build with `--no-default-features` to bench the plain-loop fallback instead.

use adiabatic_sw::exec;
use adiabatic_sw::lattice::{self, LatticeSpec, SpinorField};
use adiabatic_sw::spectral;
use adiabatic_sw::geometry::BundleSpec;
use adiabatic_sw::sw::{self, Configuration, LinearizationOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn dirac(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_dirac");
    for n in [8usize, 16] {
        let lat = lattice::build_lattice(&LatticeSpec::cube(n, 1, 8.0)).unwrap();
        let g = lattice::reference_gauge(&lat);
        let phi = SpinorField::random(&lat, 7);
        for (label, threads) in [("serial", Some(1)), ("pool", None)] {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| exec::with_threads(threads, || lattice::apply_dirac(&lat, 8.0, &g, &phi).unwrap()))
            });
        }
    }
    group.finish();
}

fn gap(c: &mut Criterion) {
    let mut group = c.benchmark_group("gap_operator");
    let delta = 8.0;
    let bundle = BundleSpec::new(1, 1, delta, 0).unwrap();
    let (ctx, _) = spectral::gap_configuration(&bundle, [12; 3], delta).unwrap();
    let flat = Configuration::reducible(&ctx.lat, delta);
    let op = sw::gap_operator(&ctx, &flat, LinearizationOptions::default()).unwrap();
    let x = spectral::random_vector(op.dim(), 3);
    for (label, threads) in [("serial", Some(1)), ("pool", None)] {
        group.bench_function(label, |b| b.iter(|| exec::with_threads(threads, || op.apply(&x))));
    }
    group.finish();
}

criterion_group!(benches, dirac, gap);
criterion_main!(benches);
