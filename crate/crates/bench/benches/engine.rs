use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use banditlab::{
    run_episode, rp_regret, EvalMode, PolicySpec, ReplicationVector, RewardModel, RewardTape,
    RunSpec,
};
use banditlab_bench::{flat_instance, hier_instance};

fn bench_episodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    let tape = RewardTape::new(7);
    for (name, instance, policy) in [
        ("ucb-8arm", flat_instance(), PolicySpec::Ucb { scale: 2.0 }),
        ("etc-8arm", flat_instance(), PolicySpec::Etc { explore_len: 64 }),
        (
            "hetc-2x2",
            hier_instance(),
            PolicySpec::HEtc {
                agent_explore: 256,
                arm_explore: 128,
                restart: 512,
            },
        ),
    ] {
        let spec = RunSpec::new(instance, policy, 4096);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(run_episode(&spec, &tape).unwrap()))
        });
    }
    group.finish();
}

fn bench_exact_rp_regret(c: &mut Criterion) {
    let means = [0.9, 0.7, 0.5, 0.3, 0.1];
    c.bench_function("rp-regret-exact-l5", |b| {
        b.iter(|| {
            black_box(
                rp_regret(
                    &means,
                    &ReplicationVector(vec![1, 0, 0, 0, 1]),
                    &PolicySpec::Etc { explore_len: 8 },
                    400,
                    RewardModel::Deterministic,
                    &EvalMode::Exact,
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(benches, bench_episodes, bench_exact_rp_regret);
criterion_main!(benches);
