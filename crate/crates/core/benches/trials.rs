use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use obnoma::analysis::sweep::{point_trials, SweepPoint};
use obnoma::exec::ExecMode;
use obnoma::params::SystemConfig;
use obnoma::turbo::TurboConfig;

fn monte_carlo(c: &mut Criterion) {
    let base = SystemConfig::desk();
    let point = SweepPoint::new(4.0, 5.0);
    let turbo = TurboConfig {
        outer_iters: 2,
        ..TurboConfig::default()
    };
    let trials = 8;
    let mut group = c.benchmark_group("desk_trials");
    group.sample_size(10);
    for (name, mode) in [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)] {
        group.bench_with_input(BenchmarkId::new(name, trials), &mode, |b, &mode| {
            b.iter(|| point_trials(&base, &point, &turbo, trials, 3, mode).expect("trials run"))
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo);
criterion_main!(benches);
