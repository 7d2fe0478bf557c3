//! Benchmarks for the construction-heavy paths: building systems from
//! ideals and forbidden words, assembling the Fock shift blocks, and a
//! Poisson transform evaluation.

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use ndarray_linalg::c64;

use subprod_core::fock::FockOperators;
use subprod_core::kernel::RANK_TOL;
use subprod_core::ncpoly::{HomogeneousIdeal, Word};
use subprod_core::reps::{PoissonEvaluator, RepTuple};
use subprod_core::sps::SubproductSystem;

fn golden_mean(n_max: usize) -> SubproductSystem {
    let w = Word::new(vec![2, 2], 2).unwrap();
    SubproductSystem::from_forbidden_words(2, &[w], n_max, true, RANK_TOL).unwrap()
}

fn bench_construction(c: &mut Criterion) {
    c.bench_function("symmetric(2,8)", |b| {
        b.iter(|| SubproductSystem::symmetric(2, 8, RANK_TOL))
    });
    c.bench_function("symmetric(3,6)", |b| {
        b.iter(|| SubproductSystem::symmetric(3, 6, RANK_TOL))
    });
    let ideal = HomogeneousIdeal::parse(2, &["x1 x2 - x2 x1"]).unwrap();
    c.bench_function("from_ideal(commutator, N=8)", |b| {
        b.iter(|| SubproductSystem::from_ideal(&ideal, 8, RANK_TOL).unwrap())
    });
    c.bench_function("from_forbidden_words(22, N=12)", |b| {
        b.iter(|| golden_mean(12))
    });
}

fn bench_fock(c: &mut Criterion) {
    let sym = SubproductSystem::symmetric(2, 8, RANK_TOL);
    c.bench_function("fock_build(symmetric(2,8))", |b| {
        b.iter(|| FockOperators::build(&sym))
    });
    let gm = golden_mean(10);
    c.bench_function("fock_build(golden-mean(10))", |b| {
        b.iter(|| FockOperators::build(&gm))
    });
    let fock = FockOperators::build(&sym);
    c.bench_function("cuntz_defect(symmetric(2,8), k=1)", |b| {
        b.iter(|| fock.check_cuntz_defect(1).unwrap())
    });
}

fn bench_poisson(c: &mut Criterion) {
    let n_trunc = 10usize;
    let sym = SubproductSystem::symmetric(2, n_trunc, RANK_TOL);
    let fock = FockOperators::build(&sym);
    // Commuting pair (A, A^2) scaled to a strict row contraction.
    let a = Array2::from_shape_fn((3, 3), |(i, j)| {
        c64::new(((i * 3 + j) as f64).sin(), ((i + 2 * j) as f64).cos())
    });
    let t = RepTuple::new(vec![a.clone(), a.dot(&a)]).unwrap();
    let t = t.scaled(0.9 / t.row_norm());
    let alpha = Word::new(vec![1, 2], 2).unwrap();
    let beta = Word::new(vec![2], 2).unwrap();
    c.bench_function("poisson_transform(|alpha|=2,|beta|=1, N=10)", |b| {
        b.iter(|| {
            let mut eval = PoissonEvaluator::new(&fock, &t, n_trunc, 0.999).unwrap();
            eval.transform(&alpha, &beta).unwrap()
        })
    });
}

criterion_group!(benches, bench_construction, bench_fock, bench_poisson);
criterion_main!(benches);
