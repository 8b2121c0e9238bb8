//! Compares the rayon data-parallel path against the sequential fallback
//! on the three hot kernels: Monte Carlo replications, Gaussian-process
//! path sampling and circle-contour covariance quadrature.
//!
//! `SEQSPEC_THREADS` caps the parallel side's worker count.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use seqspec_core::datagen::{draw_sample, ChangePointScenario};
use seqspec_core::exec;
use seqspec_core::gp::GpSampler;
use seqspec_core::limits::{circle_cov, law_u, ContourConfig};
use seqspec_core::model::{Dimensions, SymmetryClass, TimeGrid};
use seqspec_core::monitor::u_trajectory;
use seqspec_core::mp::SpectralFn;

fn replication_batch(parallel: bool) -> f64 {
    let dims = Dimensions::new(100, 60).unwrap();
    let grid = TimeGrid::canonical(100, 0.2).unwrap();
    let scn = ChangePointScenario::null(60);
    let reps = 16;
    let run = |r: usize| {
        let seed = exec::derive_seed(&[42, r as u64]);
        let batch = draw_sample(&scn, dims, seed).unwrap();
        let traj = u_trajectory(&batch, dims, &grid).unwrap();
        traj.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let sups = if parallel {
        exec::map_indexed(reps, run)
    } else {
        exec::map_indexed_seq(reps, run)
    };
    sups.iter().sum()
}

fn bench_replications(c: &mut Criterion) {
    let mut g = c.benchmark_group("replications");
    g.sample_size(10);
    for (label, par) in [("parallel", true), ("sequential", false)] {
        g.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            b.iter(|| black_box(replication_batch(par)));
        });
    }
    g.finish();
}

fn gp_sup(parallel: bool) -> f64 {
    let dims = Dimensions::new(200, 120).unwrap();
    let grid = TimeGrid::canonical(80, 0.2).unwrap();
    let law = law_u(dims, grid.clone());
    let sampler = GpSampler::new(&law, grid, 7).unwrap();
    // both paths flow through the same chunked generator; the sequential
    // variant pins the pool to one worker
    if parallel {
        sampler.sample_sup(20_000).unwrap().iter().sum()
    } else {
        exec::with_threads(1, || sampler.sample_sup(20_000).unwrap().iter().sum())
    }
}

fn bench_gp(c: &mut Criterion) {
    let mut g = c.benchmark_group("gp_sup");
    g.sample_size(10);
    for (label, par) in [("parallel", true), ("sequential", false)] {
        g.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            b.iter(|| black_box(gp_sup(par)));
        });
    }
    g.finish();
}

fn circle_quadrature(parallel: bool) -> f64 {
    let mut cfg = ContourConfig::circle_default();
    cfg.nodes = 256;
    let run = || {
        circle_cov(
            SpectralFn::Square,
            SpectralFn::Square,
            1.0,
            0.7,
            0.3,
            SymmetryClass::Real,
            &cfg,
        )
        .unwrap()
    };
    if parallel {
        run()
    } else {
        exec::with_threads(1, run)
    }
}

fn bench_circle(c: &mut Criterion) {
    let mut g = c.benchmark_group("circle_cov");
    g.sample_size(10);
    for (label, par) in [("parallel", true), ("sequential", false)] {
        g.bench_with_input(BenchmarkId::from_parameter(label), &par, |b, &par| {
            b.iter(|| black_box(circle_quadrature(par)));
        });
    }
    g.finish();
}

criterion_group!(benches, bench_replications, bench_gp, bench_circle);
criterion_main!(benches);
