use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use mevp::basis::{gauss_rule, psi_table};
use mevp::bench::ProblemSize;
use mevp::kernels::{
    precompute_inverse_maps, synth_fields, tensorized_stress_update, InverseMapTable, Scenario,
    TensorStrategy,
};
use mevp::{ExecPolicy, MapMode, Mesh, Scalar, StorageLayout, StressState, VPParams};

const SIZES: [usize; 2] = [4096, 65536];
const N_A: usize = 6;
const N_S: usize = 8;

fn setup<T: Scalar>(n: usize, layout: StorageLayout) -> (Mesh, StressState<T>, InverseMapTable<T>) {
    let mesh = ProblemSize::Elements(n).mesh(0.1).unwrap();
    let state = synth_fields::<f64>(&mesh, N_A, N_S, Scenario::SmoothVortex, layout)
        .unwrap()
        .cast();
    let maps = precompute_inverse_maps(&mesh, N_S, &gauss_rule(3).unwrap(), &psi_table(N_S, 3).unwrap())
        .unwrap();
    (mesh, state, maps)
}

fn exec_policies(c: &mut Criterion) {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let mut group = c.benchmark_group("exec");
    for n in SIZES {
        let (mesh, mut state, maps) = setup::<f64>(n, StorageLayout::RowMajor);
        group.throughput(Throughput::Elements(n as u64));
        for (name, exec) in [("serial", ExecPolicy::Serial), ("parallel", ExecPolicy::Parallel(workers))] {
            group.bench_function(BenchmarkId::new(name, n), |b| {
                b.iter(|| {
                    mevp::kernels::stress_update(
                        &mut state,
                        Some(&maps),
                        &mesh,
                        &VPParams::default(),
                        MapMode::Precomputed,
                        exec,
                    )
                    .unwrap()
                })
            });
        }
    }
    group.finish();
}

fn layouts_and_maps(c: &mut Criterion) {
    let n = SIZES[1];
    let mut group = c.benchmark_group("axes");
    group.throughput(Throughput::Elements(n as u64));
    for layout in [StorageLayout::RowMajor, StorageLayout::ColMajor] {
        let (mesh, mut state, maps) = setup::<f64>(n, layout);
        for mode in [MapMode::Precomputed, MapMode::OnTheFly] {
            let id = format!("{}-{}", layout.name(), mode.name());
            group.bench_function(id, |b| {
                b.iter(|| {
                    mevp::kernels::stress_update(
                        &mut state,
                        Some(&maps),
                        &mesh,
                        &VPParams::default(),
                        mode,
                        ExecPolicy::Serial,
                    )
                    .unwrap()
                })
            });
        }
    }
    let (mesh, mut state, maps) = setup::<f32>(n, StorageLayout::RowMajor);
    group.bench_function("row-pre-f32", |b| {
        b.iter(|| {
            mevp::kernels::stress_update(
                &mut state,
                Some(&maps),
                &mesh,
                &VPParams::default(),
                MapMode::Precomputed,
                ExecPolicy::Serial,
            )
            .unwrap()
        })
    });
    group.finish();
}

fn tensorized(c: &mut Criterion) {
    let n = SIZES[1];
    let (_, mut state, maps) = setup::<f64>(n, StorageLayout::RowMajor);
    let mut group = c.benchmark_group("tensorized");
    group.throughput(Throughput::Elements(n as u64));
    for strategy in [TensorStrategy::BatchedMatVec, TensorStrategy::MultiplyReduce] {
        group.bench_function(strategy.name(), |b| {
            b.iter(|| tensorized_stress_update(&mut state, &maps, &VPParams::default(), strategy).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = exec_policies, layouts_and_maps, tensorized
}
criterion_main!(benches);
