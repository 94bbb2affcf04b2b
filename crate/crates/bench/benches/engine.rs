use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use streamsubiso::{oracle, replay, Engine, EngineConfig};
use streamsubiso_bench::workload;

const UPDATES: usize = 20_000;

fn process_update(c: &mut Criterion) {
    let mut g = c.benchmark_group("process_update");
    g.throughput(Throughput::Elements(UPDATES as u64));
    g.sample_size(10);
    for vertices in [200, 2_000] {
        let (queries, stream) = workload(1, 10, vertices, UPDATES);
        for (name, pruning) in [("pruned", true), ("unpruned", false)] {
            g.bench_with_input(BenchmarkId::new(name, vertices), &stream, |b, stream| {
                b.iter_batched(
                    || {
                        let mut e = Engine::new(EngineConfig {
                            ordered_pruning: pruning,
                            ..EngineConfig::default()
                        });
                        for q in &queries {
                            e.register_query(q.clone()).unwrap();
                        }
                        e
                    },
                    |mut e| {
                        for u in stream {
                            e.process_update(u).unwrap();
                        }
                        e
                    },
                    BatchSize::LargeInput,
                )
            });
        }
    }
    g.finish();
}

fn oracle_search(c: &mut Criterion) {
    let (queries, stream) = workload(2, 10, 50, 2_000);
    let (engine, _) = replay(EngineConfig::default(), &queries, &stream).unwrap();
    let snap = engine.store().snapshot_latest();
    c.bench_function("oracle/find_all_matches", |b| {
        b.iter(|| queries.iter().map(|q| oracle::find_all_matches(q, &snap).len()).sum::<usize>())
    });
}

criterion_group!(benches, process_update, oracle_search);
criterion_main!(benches);
