use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use monadic_bench::{alphabet, single_rule_graph, two_root_graph, word};
use monadic_core::paths::maximal_variety_paths;
use monadic_core::smatrix::gates::cnot;
use monadic_core::smatrix::{
    gate_catalog, layer_system, recognize_gate, solve_unitary_weights, Mask, SolverOptions,
};
use monadic_core::stats::{ensemble_report, EnsembleSpec, DEFAULT_ENUM_CAP};
use monadic_core::strcore::{fractal_word, is_leibnizian, is_leibnizian_full_scan, variety};

fn strings(c: &mut Criterion) {
    let ab = alphabet("AB");
    let mut group = c.benchmark_group("leibnizian");
    for n in [4usize, 8, 16] {
        let w = fractal_word(ab.clone(), n).unwrap();
        group.bench_with_input(BenchmarkId::new("max_radius", w.len()), &w, |b, w| {
            b.iter(|| is_leibnizian(black_box(w)))
        });
        group.bench_with_input(BenchmarkId::new("full_scan", w.len()), &w, |b, w| {
            b.iter(|| is_leibnizian_full_scan(black_box(w)))
        });
        group.bench_with_input(BenchmarkId::new("variety", w.len()), &w, |b, w| {
            b.iter(|| variety(black_box(w)))
        });
    }
    group.finish();
    let s = word(&ab, "AABAABBABAB");
    c.bench_function("variety/AABAABBABAB", |b| b.iter(|| variety(black_box(&s))));
}

fn multiway(c: &mut Criterion) {
    let mut group = c.benchmark_group("multiway");
    for depth in [4usize, 8] {
        group.bench_with_input(BenchmarkId::new("build", depth), &depth, |b, &d| {
            b.iter(|| single_rule_graph(d))
        });
    }
    let g = single_rule_graph(8);
    group.bench_function("maximal_paths/8", |b| {
        b.iter(|| maximal_variety_paths(black_box(&g), 8).unwrap())
    });
    group.finish();
}

fn smatrix(c: &mut Criterion) {
    let g = two_root_graph();
    c.bench_function("smatrix/layer_system_2x2", |b| {
        b.iter(|| layer_system(black_box(&g), 0, 1, true).unwrap())
    });
    let opts = SolverOptions::default();
    let tall = Mask::from_element(3, 2, true);
    c.bench_function("solver/numerical_3x2", |b| {
        b.iter(|| solve_unitary_weights(black_box(&tall), &opts))
    });
    let banded = Mask::from_fn(4, 4, |j, i| j.abs_diff(i) <= 1);
    c.bench_function("solver/numerical_4x4_band", |b| {
        b.iter(|| solve_unitary_weights(black_box(&banded), &opts))
    });
    let catalog = gate_catalog();
    let u = cnot();
    c.bench_function("gates/recognize_4x4", |b| {
        b.iter(|| recognize_gate(black_box(&u), &catalog, 1e-9))
    });
}

fn statistics(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for n in [8usize, 10] {
        let spec = EnsembleSpec::new(alphabet("AB"), n);
        group.bench_with_input(BenchmarkId::new("report", n), &spec, |b, s| {
            b.iter(|| ensemble_report(black_box(s), DEFAULT_ENUM_CAP).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, strings, multiway, smatrix, statistics);
criterion_main!(benches);
