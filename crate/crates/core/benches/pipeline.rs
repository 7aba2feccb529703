// SPDX-License-Identifier: Apache-2.0

//! Pipeline throughput on the default rayon pool versus a single thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qfluct::models::{jc_reduced_map, weak_coupling_rates, JCParams, WeakCouplingParams};
use qfluct::phase_covariant::pc_trajectory;
use qfluct::pipeline::{run_pipeline, PipelineOptions};

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let all = rayon::current_num_threads();
    let mut v = vec![(
        "1 thread".to_string(),
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap(),
    )];
    if all > 1 {
        v.push((
            format!("{all} threads"),
            rayon::ThreadPoolBuilder::new()
                .num_threads(all)
                .build()
                .unwrap(),
        ));
    }
    v
}

fn bench(c: &mut Criterion) {
    let p = WeakCouplingParams::monotonic_ramp();
    let (pc, _) = pc_trajectory(&weak_coupling_rates(&p), p.t_f, 1001, 4).unwrap();
    let jc = JCParams::weak(0.5, 40.0, 1001);
    let opts = PipelineOptions {
        betas: vec![0.5, 1.0, 2.0, 5.0],
        ..Default::default()
    };

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(
            BenchmarkId::new("phase_covariant_4beta", &name),
            &pool,
            |b, pool| b.iter(|| pool.install(|| run_pipeline(&pc, &opts).unwrap())),
        );
        g.bench_with_input(BenchmarkId::new("jc_map", &name), &pool, |b, pool| {
            b.iter(|| pool.install(|| jc_reduced_map(&jc).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
