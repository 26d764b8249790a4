use std::f64::consts::PI;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use apcomp::completion::{dc_ie_with, CompletionConfig};
use apcomp::forward::{FarFieldMatrix, NystromSolver};
use apcomp::imaging::{dsm_with, fm_with, SamplingGrid, FM_DEFAULT_REG};
use apcomp::prolate::RegularizationSpec;
use apcomp::scene::{ApertureGrid, Boundary, BoundaryCondition};
use apcomp::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn solver() -> NystromSolver {
    NystromSolver::new(&Boundary::peanut(), BoundaryCondition::Dirichlet, 5.0, 128).unwrap()
}

fn full_data() -> FarFieldMatrix {
    solver().msr(&ApertureGrid::make(PI / 2.0, 128).unwrap(), true, Execution::Parallel).unwrap()
}

fn forward(c: &mut Criterion) {
    let s = solver();
    let grid = ApertureGrid::make(PI / 2.0, 128).unwrap();
    let mut g = c.benchmark_group("nystrom_msr_256");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| s.msr(&grid, true, exec).unwrap()));
    }
    g.finish();
}

fn completion(c: &mut Criterion) {
    let limited = full_data().measured_block();
    let cfg = CompletionConfig {
        j: 9,
        reg: RegularizationSpec::Spectral { epsilon: 1e-3 },
        ..Default::default()
    };
    let mut g = c.benchmark_group("dc_ie_128");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dc_ie_with(&limited, &cfg, None, exec).unwrap())
        });
    }
    g.finish();
}

fn imaging(c: &mut Criterion) {
    let f = full_data();
    let grid = SamplingGrid::square(4.0, 61);
    let mut g = c.benchmark_group("imaging_61x61");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("dsm", name), |b| b.iter(|| dsm_with(&f, &grid, exec).unwrap()));
        g.bench_function(BenchmarkId::new("fm", name), |b| {
            b.iter(|| fm_with(&f, &grid, &FM_DEFAULT_REG, 0.0, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, forward, completion, imaging);
criterion_main!(benches);
