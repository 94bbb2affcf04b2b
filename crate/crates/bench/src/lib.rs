//! Shared workloads for the criterion benches.

use streamsubiso::gen::{self, QueryGenConfig, StreamGenConfig};
use streamsubiso::{QueryGraph, StreamUpdate};

/// `queries` connected three-edge queries and a stream of `updates` inserts
/// over `vertices` vertices, all from `seed`.
pub fn workload(seed: u64, queries: usize, vertices: usize, updates: usize) -> (Vec<QueryGraph>, Vec<StreamUpdate>) {
    let mut rng = gen::rng(seed);
    let qcfg = QueryGenConfig::default();
    let qs = (0..queries)
        .map(|i| loop {
            let shapes: Vec<_> = (0..3).map(|_| gen::random_shape(&mut rng, &qcfg)).collect();
            let q = gen::query_from_shapes(&mut rng, &format!("q{i}"), &shapes, &qcfg);
            if q.validate().is_ok() {
                break q;
            }
        })
        .collect();
    let scfg = StreamGenConfig {
        vertices,
        updates,
        max_step: 1,
        ..StreamGenConfig::default()
    };
    (qs, gen::random_stream(&mut rng, &scfg))
}
