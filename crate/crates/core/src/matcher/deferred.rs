//! Spawn gating.
//!
//! A gated query stores only partial matches that contain every gate edge.
//! Arrivals matching any of its edges are remembered here, one entry per
//! `(query edge, data edge)`, instead of being combined eagerly. When a gate
//! edge arrives, `derive` rebuilds every gate-complete partial match the
//! ungated engine would hold at that moment by choosing compatible earlier
//! arrivals, so emissions are identical with and without the gate.

use std::collections::{HashMap, VecDeque};

use super::partial::{ExpiryRule, MatchedEdge, PartialMatch};
use crate::graph_store::{EdgeKey, Timestamp, VertexKey};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Arrival {
    pub src: VertexKey,
    pub dst: VertexKey,
    pub m: MatchedEdge,
}

#[derive(Debug, Clone, Default)]
struct EdgeArrivals {
    all: VecDeque<Arrival>,
    by_src: HashMap<VertexKey, VecDeque<Arrival>>,
    by_dst: HashMap<VertexKey, VecDeque<Arrival>>,
}

/// How long an arrival can still take part in a chain ending now: a chain
/// of k edges spans at most k-1 cluster gaps, and at most one window.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Horizon {
    ts: Option<u64>,
    seq: Option<u64>,
}

impl Horizon {
    pub fn new(rule: &ExpiryRule, edges: usize) -> Self {
        let links = edges.saturating_sub(1) as u64;
        let gap_ts = rule.gap_time.map(|g| g.saturating_mul(links));
        let ts = match (gap_ts, rule.window) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Horizon {
            ts,
            seq: rule.gap_updates.map(|g| g.saturating_mul(links)),
        }
    }

    fn live(&self, a: &Arrival, now_ts: Timestamp, now_seq: u64) -> bool {
        self.ts.is_none_or(|h| now_ts.saturating_sub(a.m.timestamp) <= h)
            && self.seq.is_none_or(|h| now_seq.saturating_sub(a.m.seq) <= h)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DeferredStore {
    per_edge: Vec<EdgeArrivals>,
    horizon: Horizon,
    len: usize,
}

impl DeferredStore {
    pub fn new(edges: usize, horizon: Horizon) -> Self {
        DeferredStore {
            per_edge: vec![EdgeArrivals::default(); edges],
            horizon,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn set_horizon(&mut self, horizon: Horizon) {
        self.horizon = horizon;
    }

    pub fn push(&mut self, eid: usize, a: Arrival) {
        let e = &mut self.per_edge[eid];
        e.all.push_back(a);
        e.by_src.entry(a.src).or_default().push_back(a);
        e.by_dst.entry(a.dst).or_default().push_back(a);
        self.len += 1;
    }

    pub fn expire(&mut self, now_ts: Timestamp, now_seq: u64, ops: &mut u64) -> usize {
        let mut removed = 0;
        for e in &mut self.per_edge {
            while let Some(front) = e.all.front() {
                if self.horizon.live(front, now_ts, now_seq) {
                    break;
                }
                let a = e.all.pop_front().expect("front exists");
                // The oldest arrival overall is also the oldest for its endpoints.
                pop_front_of(&mut e.by_src, a.src);
                pop_front_of(&mut e.by_dst, a.dst);
                removed += 1;
            }
        }
        *ops += 1 + removed as u64;
        self.len -= removed;
        removed
    }

    pub fn remove_edge(&mut self, key: EdgeKey) {
        for e in &mut self.per_edge {
            let before = e.all.len();
            e.all.retain(|a| a.m.edge != key);
            let gone = before - e.all.len();
            if gone > 0 {
                for map in [&mut e.by_src, &mut e.by_dst] {
                    map.retain(|_, q| {
                        q.retain(|a| a.m.edge != key);
                        !q.is_empty()
                    });
                }
                self.len -= gone;
            }
        }
    }
}

fn pop_front_of(map: &mut HashMap<VertexKey, VecDeque<Arrival>>, v: VertexKey) {
    if let Some(q) = map.get_mut(&v) {
        q.pop_front();
        if q.is_empty() {
            map.remove(&v);
        }
    }
}

/// Static description of the query a derivation runs against.
pub(crate) struct DeriveParams<'a> {
    pub ends: &'a [(usize, usize)],
    pub preds: &'a [u64],
    pub order_pairs: &'a [(usize, usize)],
    pub gate: u64,
    pub pruning: bool,
    pub rule: ExpiryRule,
    /// Query edges visited gate-first, then outward by shared variables.
    pub visit_order: &'a [usize],
}

struct Search<'a> {
    params: &'a DeriveParams<'a>,
    store: &'a DeferredStore,
    seed_eid: usize,
    now_ts: Timestamp,
    now_seq: u64,
    out: &'a mut Vec<PartialMatch>,
    ops: &'a mut u64,
}

/// Every gate-complete partial containing `seed` (the just-arrived edge as
/// a gate edge) that an ungated engine would hold after this update.
pub(crate) fn derive(
    params: &DeriveParams<'_>,
    store: &DeferredStore,
    seed: PartialMatch,
    seed_eid: usize,
    now_ts: Timestamp,
    now_seq: u64,
    out: &mut Vec<PartialMatch>,
    ops: &mut u64,
) {
    let mut s = Search {
        params,
        store,
        seed_eid,
        now_ts,
        now_seq,
        out,
        ops,
    };
    s.extend(0, seed);
}

impl Search<'_> {
    fn extend(&mut self, idx: usize, p: PartialMatch) {
        let params = self.params;
        let Some(&eid) = params.visit_order.get(idx) else {
            if self.leaf_ok(&p) {
                self.out.push(p);
            }
            return;
        };
        if eid == self.seed_eid {
            return self.extend(idx + 1, p);
        }
        let required = params.gate & (1 << eid) != 0;
        if !required {
            self.extend(idx + 1, p.clone());
        }
        let (sv, dv) = params.ends[eid];
        let arrivals = &self.store.per_edge[eid];
        let pool: Option<&VecDeque<Arrival>> = match (p.vmap[sv], p.vmap[dv]) {
            (Some(s), _) => arrivals.by_src.get(&s),
            (None, Some(d)) => arrivals.by_dst.get(&d),
            (None, None) => Some(&arrivals.all),
        };
        let Some(pool) = pool else { return };
        for a in pool {
            *self.ops += 1;
            if a.m.seq >= self.now_seq
                || !self.store.horizon.live(a, self.now_ts, self.now_seq)
                || !p.accepts_endpoints(sv, a.src, dv, a.dst)
                || p.contains_data_edge(a.m.edge)
            {
                continue;
            }
            if let Some(w) = params.rule.window {
                if self.now_ts.saturating_sub(a.m.timestamp) > w {
                    continue;
                }
            }
            if params.pruning && !self.order_consistent(&p, eid, a.m.timestamp) {
                continue;
            }
            let mut next = p.clone();
            next.add(eid, sv, a.src, dv, a.dst, a.m);
            self.extend(idx + 1, next);
        }
    }

    fn order_consistent(&self, p: &PartialMatch, eid: usize, ts: Timestamp) -> bool {
        self.params.order_pairs.iter().all(|&(a, b)| {
            if a == eid {
                p.emap[b].is_none_or(|m| ts < m.timestamp)
            } else if b == eid {
                p.emap[a].is_none_or(|m| m.timestamp < ts)
            } else {
                true
            }
        })
    }

    fn leaf_ok(&self, p: &PartialMatch) -> bool {
        let params = self.params;
        if p.matched & params.gate != params.gate {
            return false;
        }
        if params.pruning {
            let mut bits = p.matched;
            while bits != 0 {
                let e = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                if params.preds[e] & !p.matched != 0 {
                    return false;
                }
            }
            for &(a, b) in params.order_pairs {
                if let (Some(x), Some(y)) = (p.emap[a], p.emap[b]) {
                    if x.timestamp >= y.timestamp {
                        return false;
                    }
                }
            }
        }
        let mut chain: Vec<MatchedEdge> = p.emap.iter().flatten().copied().collect();
        chain.sort_by_key(|m| m.seq);
        for w in chain.windows(2) {
            if let Some(g) = params.rule.gap_time {
                if w[1].timestamp - w[0].timestamp > g {
                    return false;
                }
            }
            if let Some(g) = params.rule.gap_updates {
                if w[1].seq - w[0].seq > g {
                    return false;
                }
            }
        }
        !params.rule.is_stale(p, self.now_ts, self.now_seq)
    }
}
