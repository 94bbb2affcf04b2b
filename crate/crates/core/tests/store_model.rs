use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use streamsubiso::{Endpoint, GraphStore, StreamUpdate, UpdateOp};

#[derive(Debug, Clone)]
enum Op {
    Insert { id: u8, src: u8, dst: u8 },
    Delete { id: u8 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        3 => (0u8..8, 0u8..6, 0u8..6).prop_map(|(id, src, dst)| Op::Insert { id, src, dst }),
        1 => (0u8..8).prop_map(|id| Op::Delete { id }),
    ]
}

fn vertex(v: u8) -> Endpoint {
    Endpoint::new(format!("v{v}"), if v % 2 == 0 { "Even" } else { "Odd" })
}

fn update(op: &Op, ts: u64) -> StreamUpdate {
    match *op {
        Op::Insert { id, src, dst } => StreamUpdate::insert(format!("e{id}"), vertex(src), "t", vertex(dst), ts),
        Op::Delete { id } => {
            let mut d = StreamUpdate::delete(format!("e{id}"), vertex(0), vertex(1), ts);
            d.edge_type = "t".into();
            d
        }
    }
}

/// Edge id -> (src, dst, inserted) from replaying accepted updates up to `as_of`.
fn naive(accepted: &[StreamUpdate], as_of: u64) -> (BTreeMap<String, (String, String, u64)>, BTreeSet<String>) {
    let mut edges = BTreeMap::new();
    let mut vertices = BTreeSet::new();
    for u in accepted.iter().filter(|u| u.timestamp <= as_of) {
        match u.op {
            UpdateOp::Insert => {
                vertices.insert(u.src.id.clone());
                vertices.insert(u.dst.id.clone());
                edges.insert(u.edge_id.clone(), (u.src.id.clone(), u.dst.id.clone(), u.timestamp));
            }
            UpdateOp::Delete => {
                edges.remove(&u.edge_id);
            }
        }
    }
    (edges, vertices)
}

proptest! {
    #[test]
    fn snapshots_agree_with_naive_replay(ops in proptest::collection::vec((op(), 0u64..3), 1..60)) {
        let mut store = GraphStore::new();
        let mut accepted = Vec::new();
        let mut live = BTreeSet::new();
        let mut ts = 0;
        for (op, step) in &ops {
            ts += step;
            let u = update(op, ts);
            let expect_ok = match op {
                Op::Insert { id, .. } => !live.contains(id),
                Op::Delete { id } => live.contains(id),
            };
            let got = store.apply_update(&u);
            prop_assert_eq!(got.is_ok(), expect_ok, "{:?}", got);
            if expect_ok {
                match *op {
                    Op::Insert { id, .. } => live.insert(id),
                    Op::Delete { id } => live.remove(&id),
                };
                accepted.push(u);
            }
        }
        prop_assert_eq!(store.live_edge_count(), live.len());
        for as_of in 0..=ts + 1 {
            let snap = store.snapshot(as_of);
            let (edges, vertices) = naive(&accepted, as_of);
            let got: BTreeMap<String, (String, String, u64)> = snap
                .edges
                .iter()
                .map(|e| (e.edge_id.clone(), (e.src.clone(), e.dst.clone(), e.timestamp)))
                .collect();
            prop_assert_eq!(got, edges);
            let got_v: BTreeSet<String> = snap.vertices.iter().map(|v| v.id.clone()).collect();
            prop_assert_eq!(got_v, vertices);
        }
    }
}
