use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use quasiperm::rational::frac;
use quasiperm::{
    density_gradient, dependence, enumerate_permutations, gradient_polynomial, pattern_density,
    perturb, search_dependent_sets, step_density, DoublyStochasticMatrix, Permutation,
    PerturbationVector, SegmentPermuton,
};

fn bench_pattern_density(c: &mut Criterion) {
    let host: Permutation = "7,3,11,1,9,5,12,2,8,4,10,6".parse().unwrap();
    let pattern: Permutation = "2413".parse().unwrap();
    c.bench_function("pattern_density k4 n12", |b| {
        b.iter(|| pattern_density(black_box(&pattern), black_box(&host)))
    });
}

fn bench_step_density(c: &mut Criterion) {
    let x =
        PerturbationVector::from_flat(5, (0..16).map(|i| frac((i % 5) as i64 - 2, 40)).collect())
            .unwrap();
    let m = perturb(&x).unwrap();
    let pattern: Permutation = "2413".parse().unwrap();
    c.bench_function("step_density k4 n5", |b| {
        b.iter(|| step_density(black_box(&pattern), black_box(&m)))
    });
}

fn bench_density_gradient(c: &mut Criterion) {
    let pattern: Permutation = "231".parse().unwrap();
    c.bench_function("density_gradient k3 n12", |b| {
        b.iter(|| density_gradient(black_box(&pattern), black_box(12)).unwrap())
    });
}

fn bench_gradient_polynomial(c: &mut Criterion) {
    let pattern: Permutation = "246135".parse().unwrap();
    c.bench_function("gradient_polynomial k6", |b| {
        b.iter(|| gradient_polynomial(black_box(&pattern)).unwrap())
    });
}

fn bench_dependence(c: &mut Criterion) {
    let all4 = enumerate_permutations(4);
    c.bench_function("dependence all 4-permutations", |b| {
        b.iter(|| dependence(black_box(&all4)).unwrap())
    });
}

fn bench_search_pairs(c: &mut Criterion) {
    c.bench_function("search pairs order<=4", |b| {
        b.iter(|| search_dependent_sets(black_box(4), black_box(2)).unwrap())
    });
}

fn bench_sampling(c: &mut Criterion) {
    let family = SegmentPermuton::new(0.5).unwrap();
    c.bench_function("mc_density 123 segment 100k", |b| {
        let pattern: Permutation = "123".parse().unwrap();
        b.iter(|| quasiperm::mc_density(black_box(&pattern), &family, 100_000, 7))
    });
    let uniform = quasiperm::StepPermuton::new(&DoublyStochasticMatrix::constant(4));
    c.bench_function("sample_points step 100k", |b| {
        b.iter(|| quasiperm::sample_points(black_box(&uniform), 100_000, 7))
    });
}

criterion_group!(
    benches,
    bench_pattern_density,
    bench_step_density,
    bench_density_gradient,
    bench_gradient_polynomial,
    bench_dependence,
    bench_search_pairs,
    bench_sampling
);
criterion_main!(benches);
