use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rehab_bench::{nervi, with_board};
use rehab_core::{
    candidate_space_size, check_agenda, compute_prune_tables, solve_agenda, solve_board, SolveConfig, Variant,
};

fn capped(nodes: u64) -> SolveConfig {
    SolveConfig {
        node_limit: Some(nodes),
        ..SolveConfig::anytime(30.0, 1)
    }
}

fn board(c: &mut Criterion) {
    let mut g = c.benchmark_group("board");
    g.sample_size(10);
    for (p, o) in [(20, 6), (40, 10)] {
        let inst = nervi(p, o, 7);
        g.bench_with_input(BenchmarkId::new("anytime_20k", format!("{p}x{o}")), &inst, |b, inst| {
            b.iter(|| solve_board(inst, &capped(20_000)).unwrap())
        });
    }
    g.finish();
}

fn agenda(c: &mut Criterion) {
    let mut g = c.benchmark_group("agenda");
    g.sample_size(10);
    let (inst, board) = with_board(20, 6, 7);
    for v in Variant::ALL {
        g.bench_function(BenchmarkId::new("anytime_20k", v), |b| {
            b.iter(|| solve_agenda(&inst, &board, &capped(20_000), v).unwrap())
        });
    }
    g.finish();
}

fn checks(c: &mut Criterion) {
    let (inst, board) = with_board(40, 10, 3);
    let agenda = solve_agenda(&inst, &board, &capped(5_000), Variant::Optimized)
        .unwrap()
        .best
        .unwrap_or_default();
    c.bench_function("check_agenda", |b| {
        b.iter(|| check_agenda(black_box(&inst), &board, black_box(&agenda)).unwrap())
    });
    c.bench_function("prune_tables", |b| b.iter(|| compute_prune_tables(black_box(&inst), &board).unwrap()));
    c.bench_function("candidate_space", |b| {
        b.iter(|| candidate_space_size(black_box(&inst), &board, Variant::Basic).unwrap())
    });
}

fn generator(c: &mut Criterion) {
    c.bench_function("generate_nervi_60x12", |b| b.iter(|| nervi(60, 12, black_box(5))));
}

criterion_group!(benches, board, agenda, checks, generator);
criterion_main!(benches);
