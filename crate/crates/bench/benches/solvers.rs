use bregman_bench::{ball_scenario, legendre_instances, polygon};
use bregman_core::{project_cutset, run, InnerMethod, InnerSettings};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_project_cutset(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_cutset");
    for m in [4, 16, 64] {
        let (cs, x0) = polygon(m);
        for method in [InnerMethod::InteriorPoint, InnerMethod::CoordinateAscent] {
            let settings = InnerSettings {
                method,
                ..InnerSettings::default()
            };
            for (name, f) in legendre_instances() {
                let id = BenchmarkId::new(format!("{method:?}/{name}"), m);
                group.bench_with_input(id, &m, |b, _| {
                    b.iter(|| {
                        project_cutset(f.as_ref(), black_box(&cs), black_box(&x0), &settings)
                            .unwrap()
                    })
                });
            }
        }
    }
    group.finish();
}

fn bench_driver(c: &mut Criterion) {
    let mut group = c.benchmark_group("driver");
    group.sample_size(20);
    for (name, f) in legendre_instances() {
        let (oracle, cfg) = ball_scenario(f.clone());
        group.bench_function(name, |b| {
            b.iter(|| run(f.as_ref(), &oracle, black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_project_cutset, bench_driver);
criterion_main!(benches);
