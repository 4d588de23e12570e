use bep::collapsed::{component_sum_pmf, dev_dist, draw_block_latents, draw_z0, power_dev_dist};
use bep::covering::{covering_report, default_grid};
use bep::delta::{estimate_delta, DeltaOptions, EstimatorMode};
use bep::metrics::MetricView;
use bep::process::{KindParams, ProcessSpec};
use bep::rng::SeedLineage;
use bep::sampling::sample_batch;
use bep::trees::build_skeleton;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_collapsed_kernel(c: &mut Criterion) {
    let spec = ProcessSpec::new(
        KindParams::BlockNu {
            block_size_override: None,
        },
        1 << 40,
    )
    .unwrap();
    let mut g = c.benchmark_group("collapsed_block_sup");
    for n in [16usize, 256, 1024] {
        let lineage = SeedLineage::new(7, 0);
        let z0 = draw_z0(n, lineage);
        let lat = draw_block_latents(&spec, 4, n, lineage).unwrap();
        let ln_m = spec.effective_block_size_ln(4).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                let pmf = component_sum_pmf(&spec, &z0, &lat).unwrap();
                let sup = power_dev_dist(&dev_dist(&pmf), ln_m);
                black_box(sup.expectation())
            })
        });
    }
    g.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let spec = ProcessSpec::new(
        KindParams::BlockNu {
            block_size_override: None,
        },
        1 << 30,
    )
    .unwrap();
    let indices: Vec<u64> = (1..=256).collect();
    c.bench_function("sample_batch_nu_256x256", |b| {
        let mut rep = 0u64;
        b.iter(|| {
            rep += 1;
            black_box(sample_batch(&spec, &indices, 256, SeedLineage::new(1, rep)).unwrap())
        })
    });
}

fn bench_tree_build_and_sample(c: &mut Criterion) {
    let levels: Vec<f64> = (1..=10).map(|k| 0.45 * f64::exp2(1.0 - k as f64)).collect();
    let counts: Vec<u64> = std::iter::once(1)
        .chain((2..=10).map(|k| 300u64 << (k - 2)))
        .collect();
    c.bench_function("build_skeleton_77k", |b| {
        b.iter(|| black_box(build_skeleton(&levels, &counts, None).unwrap()))
    });
    let spec = ProcessSpec::new(
        KindParams::WideTree {
            levels: levels.clone(),
            counts: counts.clone(),
        },
        1,
    )
    .unwrap();
    let spec = ProcessSpec {
        truncation: 4096,
        ..spec
    };
    c.bench_function("delta_widetree_n8_r20", |b| {
        let opts = DeltaOptions::default();
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            black_box(estimate_delta(&spec, 8, 20, EstimatorMode::Collapsed, seed, &opts).unwrap())
        })
    });
}

fn bench_covering(c: &mut Criterion) {
    let spec = ProcessSpec::new(KindParams::BlockSqrt, 128).unwrap();
    let idx: Vec<u64> = (1..=128).collect();
    let view = MetricView::closed_form(&spec, &idx).unwrap();
    let grid = default_grid(0.005);
    c.bench_function("covering_report_128", |b| {
        b.iter(|| black_box(covering_report(&view, &grid, None).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_collapsed_kernel,
    bench_sampling,
    bench_tree_build_and_sample,
    bench_covering
);
criterion_main!(benches);
