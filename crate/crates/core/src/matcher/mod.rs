//! Incremental matching engine.
//!
//! Each inserted edge is tested against the dispatch index, then used to
//! extend every compatible live partial match (the original is kept) and,
//! where allowed, to start a new singleton. Partials that fill the whole
//! query are emitted instead of stored. Stale partials are swept before
//! every update.

mod deferred;
mod partial;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use thiserror::Error;

pub use partial::{MatchedEdge, PartialMatch};

use crate::graph_store::{EdgeKey, GraphStore, StoreError, StreamUpdate, Timestamp, UpdateOp, VertexKey};
use crate::multiquery::{is_valid_gate, DispatchIndex, EdgeProbe};
use crate::oracle::Embedding;
use crate::query::{ClusterGap, GapUnit, QueryGraph, QueryId, Violation};
use crate::synopsis::{StreamSynopsis, SynopsisConfig, SynopsisError};
use deferred::{Arrival, DeferredStore, DeriveParams, Horizon};
use partial::{ExpiryRule, PartialStore};

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub ordered_pruning: bool,
    pub dedup: bool,
    /// Time units an update may arrive behind the newest one seen.
    pub reorder_slack: u64,
    /// Spawn gates by query name, applied at registration.
    pub spawn_gates: BTreeMap<String, BTreeSet<usize>>,
    pub synopsis: SynopsisConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ordered_pruning: true,
            dedup: true,
            reorder_slack: 0,
            spawn_gates: BTreeMap::new(),
            synopsis: SynopsisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptMode {
    /// Report the recommendation only.
    Advisory,
    /// Rewrite the query's cluster gap.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchResult {
    pub query: QueryId,
    /// Indexed by query variable.
    pub vmap: Vec<VertexKey>,
    /// Indexed by query edge id.
    pub emap: Vec<MatchedEdge>,
    pub completion_ts: Timestamp,
    pub emit_seq: u64,
}

impl MatchResult {
    pub fn first_ts(&self) -> Timestamp {
        self.emap.iter().map(|m| m.timestamp).min().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("timestamp {timestamp} is older than watermark {watermark}")]
    OutOfOrderTimestamp { timestamp: Timestamp, watermark: Timestamp },
    #[error("internal state inconsistency: {0}")]
    UnknownQueryState(String),
    #[error("a query named `{0}` is already registered")]
    DuplicateQueryName(String),
    #[error("query `{name}` is invalid: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidQuery { name: String, violations: Vec<Violation> },
    #[error("no registered query {0}")]
    UnknownQuery(QueryId),
    #[error("edges {edges:?} are not a valid spawn gate for `{query}`")]
    InvalidGate { query: String, edges: Vec<usize> },
    #[error("query `{0}` has already seen matching updates; gates must be set before")]
    GateAfterStart(String),
    #[error(transparent)]
    Synopsis(#[from] SynopsisError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub id: QueryId,
    pub name: String,
    pub live_partials: usize,
    pub peak_partials: usize,
    pub emitted: u64,
    pub expired: u64,
    pub spawns: u64,
    pub hits: u64,
    /// Arrivals held for gate derivation.
    pub deferred: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub updates: u64,
    pub live_partials: usize,
    pub peak_partials: usize,
    pub emitted: u64,
    pub expired: u64,
    pub predicate_evals: u64,
    pub spawns: u64,
    pub deferred: usize,
    /// Instrumented unit-work counter for the matching path.
    pub ops: u64,
    pub per_query: Vec<QueryStats>,
}

#[derive(Debug, Clone, Default)]
struct Counters {
    peak: usize,
    emitted: u64,
    expired: u64,
    spawns: u64,
    hits: u64,
}

#[derive(Debug, Clone)]
struct QueryPlan {
    id: QueryId,
    graph: QueryGraph,
    ends: Vec<(usize, usize)>,
    preds: Vec<u64>,
    succs: Vec<u64>,
    order_pairs: Vec<(usize, usize)>,
    spawn_mask: u64,
    full_mask: u64,
    gate: Option<u64>,
    /// Per gate edge: edges to visit when deriving from it.
    visit_orders: Vec<Vec<usize>>,
    store: PartialStore,
    deferred: Option<DeferredStore>,
    counters: Counters,
}

fn expiry_rule(q: &QueryGraph) -> ExpiryRule {
    let gap = q.constraints.cluster_gap;
    ExpiryRule {
        gap_time: gap.filter(|g| g.unit == GapUnit::Time).map(|g| g.amount),
        gap_updates: gap.filter(|g| g.unit == GapUnit::Updates).map(|g| g.amount),
        window: q.constraints.window,
    }
}

/// `start` first, then the rest of `gate`, then the remaining edges, each
/// group walked outward along shared variables.
fn visit_order(ends: &[(usize, usize)], start: usize, gate: u64) -> Vec<usize> {
    let m = ends.len();
    let mut order = vec![start];
    let mut taken = 1u64 << start;
    for phase_mask in [gate, !0u64] {
        loop {
            let touches = |e: usize| {
                order.iter().any(|&o| {
                    let (a, b) = ends[o];
                    let (c, d) = ends[e];
                    a == c || a == d || b == c || b == d
                })
            };
            let pick = (0..m)
                .filter(|&e| taken & (1 << e) == 0 && phase_mask & (1 << e) != 0)
                .min_by_key(|&e| (!touches(e), e));
            let Some(e) = pick else { break };
            order.push(e);
            taken |= 1 << e;
        }
    }
    order
}

impl QueryPlan {
    fn new(id: QueryId, graph: QueryGraph) -> Self {
        let ends: Vec<(usize, usize)> = graph
            .edges
            .iter()
            .map(|e| {
                (
                    graph.var_index(&e.src_var).expect("validated query"),
                    graph.var_index(&e.dst_var).expect("validated query"),
                )
            })
            .collect();
        let m = graph.edges.len();
        let rule = expiry_rule(&graph);
        QueryPlan {
            id,
            preds: graph.order_predecessors(),
            succs: graph.order_successors(),
            order_pairs: graph.constraints.arrival_order.iter().copied().collect(),
            spawn_mask: graph.spawn_eligible_edges().iter().fold(0, |a, &e| a | 1 << e),
            full_mask: if m == 64 { !0 } else { (1u64 << m) - 1 },
            gate: None,
            visit_orders: Vec::new(),
            store: PartialStore::new(graph.vertices.len(), rule),
            deferred: None,
            counters: Counters::default(),
            ends,
            graph,
        }
    }

    fn set_gate(&mut self, gate: Option<&BTreeSet<usize>>) {
        match gate {
            None => {
                self.gate = None;
                self.deferred = None;
                self.visit_orders.clear();
            }
            Some(edges) => {
                let mask = edges.iter().fold(0u64, |a, &e| a | 1 << e);
                self.gate = Some(mask);
                self.visit_orders = (0..self.ends.len()).map(|e| visit_order(&self.ends, e, mask)).collect();
                let horizon = Horizon::new(&self.store.rule, self.ends.len());
                self.deferred = Some(DeferredStore::new(self.ends.len(), horizon));
            }
        }
    }

    fn set_rule(&mut self, rule: ExpiryRule) {
        self.store.set_rule(rule);
        if let Some(d) = &mut self.deferred {
            d.set_horizon(Horizon::new(&rule, self.ends.len()));
        }
    }

    /// Pruning-mode admission of data edge `m` as query edge `eid` into `p`.
    fn order_admits(&self, p: &PartialMatch, eid: usize, m: &MatchedEdge) -> bool {
        if self.preds[eid] & !p.matched != 0 || self.succs[eid] & p.matched != 0 {
            return false;
        }
        let mut bits = self.preds[eid];
        while bits != 0 {
            let a = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if p.emap[a].is_none_or(|x| x.timestamp >= m.timestamp) {
                return false;
            }
        }
        true
    }

    fn on_insert(
        &mut self,
        eids: &[usize],
        src: VertexKey,
        dst: VertexKey,
        m: MatchedEdge,
        pruning: bool,
        ops: &mut u64,
    ) -> Result<Vec<PartialMatch>, EngineError> {
        self.counters.hits += eids.len() as u64;
        let mut fresh = Vec::new();
        if src == dst {
            return Ok(fresh);
        }
        for &eid in eids {
            let (sv, dv) = self.ends[eid];
            let gated_seed = self.gate.is_some_and(|g| g & (1 << eid) != 0);
            if gated_seed {
                let mut seed = PartialMatch::empty(self.id, self.graph.vertices.len(), self.ends.len());
                seed.add(eid, sv, src, dv, dst, m);
                let params = DeriveParams {
                    ends: &self.ends,
                    preds: &self.preds,
                    order_pairs: &self.order_pairs,
                    gate: self.gate.expect("gated"),
                    pruning,
                    rule: self.store.rule,
                    visit_order: &self.visit_orders[eid],
                };
                let before = fresh.len();
                let deferred = self.deferred.as_ref().ok_or_else(|| {
                    EngineError::UnknownQueryState(format!("gated query `{}` has no deferred store", self.graph.name))
                })?;
                deferred::derive(&params, deferred, seed, eid, m.timestamp, m.seq, &mut fresh, ops);
                self.counters.spawns += (fresh.len() - before) as u64;
                continue;
            }
            for pid in self.store.candidates(sv, src, dv, dst, ops) {
                let p = self
                    .store
                    .get(pid)
                    .ok_or_else(|| EngineError::UnknownQueryState(format!("dangling partial {pid}")))?;
                if p.has_edge(eid) || p.contains_data_edge(m.edge) || !p.accepts_endpoints(sv, src, dv, dst) {
                    continue;
                }
                if pruning && !self.order_admits(p, eid, &m) {
                    continue;
                }
                let mut next = p.clone();
                next.add(eid, sv, src, dv, dst, m);
                fresh.push(next);
            }
            if self.gate.is_none() && (!pruning || self.spawn_mask & (1 << eid) != 0) {
                let mut p = PartialMatch::empty(self.id, self.graph.vertices.len(), self.ends.len());
                p.add(eid, sv, src, dv, dst, m);
                self.counters.spawns += 1;
                fresh.push(p);
            }
        }
        if let Some(d) = &mut self.deferred {
            for &eid in eids {
                d.push(eid, Arrival { src, dst, m });
            }
        }
        let mut complete = Vec::new();
        for p in fresh {
            *ops += 1;
            if p.matched == self.full_mask {
                complete.push(p);
            } else {
                self.store.insert(p);
            }
        }
        self.counters.peak = self.counters.peak.max(self.store.len());
        Ok(complete)
    }

    /// Whether a complete embedding may be emitted at `now`.
    fn emittable(&self, p: &PartialMatch, now: Timestamp) -> bool {
        let order_ok = self.order_pairs.iter().all(|&(a, b)| match (p.emap[a], p.emap[b]) {
            (Some(x), Some(y)) => x.timestamp < y.timestamp,
            _ => false,
        });
        order_ok && self.store.rule.window.is_none_or(|w| now.saturating_sub(p.first_ts) <= w)
    }
}

/// The streaming engine: a graph store, registered queries and their
/// partial matches, the shared dispatch index and the stream synopsis.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    store: GraphStore,
    plans: BTreeMap<QueryId, QueryPlan>,
    names: HashMap<String, QueryId>,
    next_id: u32,
    dispatch: DispatchIndex,
    synopsis: StreamSynopsis,
    seq: u64,
    last_ts: Option<Timestamp>,
    edge_seq: HashMap<EdgeKey, u64>,
    reorder: BTreeMap<(Timestamp, u64), StreamUpdate>,
    max_seen: Option<Timestamp>,
    arrivals: u64,
    emitted_keys: HashSet<(QueryId, Vec<(EdgeKey, Timestamp)>)>,
    updates: u64,
    emitted: u64,
    expired: u64,
    predicate_evals: u64,
    ops: u64,
    peak: usize,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new(EngineConfig::default())
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Self {
        Engine {
            synopsis: StreamSynopsis::new(config.synopsis),
            config,
            store: GraphStore::new(),
            plans: BTreeMap::new(),
            names: HashMap::new(),
            next_id: 0,
            dispatch: DispatchIndex::default(),
            seq: 0,
            last_ts: None,
            edge_seq: HashMap::new(),
            reorder: BTreeMap::new(),
            max_seen: None,
            arrivals: 0,
            emitted_keys: HashSet::new(),
            updates: 0,
            emitted: 0,
            expired: 0,
            predicate_evals: 0,
            ops: 0,
            peak: 0,
        }
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn store(&self) -> &GraphStore {
        &self.store
    }

    pub fn synopsis(&self) -> &StreamSynopsis {
        &self.synopsis
    }

    pub fn dispatch_index(&self) -> &DispatchIndex {
        &self.dispatch
    }

    /// Sequence number of the last processed update; 0 before any.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn query(&self, id: QueryId) -> Option<&QueryGraph> {
        self.plans.get(&id).map(|p| &p.graph)
    }

    pub fn query_id(&self, name: &str) -> Option<QueryId> {
        self.names.get(name).copied()
    }

    pub fn queries(&self) -> impl Iterator<Item = (QueryId, &QueryGraph)> {
        self.plans.iter().map(|(id, p)| (*id, &p.graph))
    }

    /// Live partial matches of one query, in no particular order.
    pub fn partials(&self, id: QueryId) -> impl Iterator<Item = &PartialMatch> {
        self.plans.get(&id).into_iter().flat_map(|p| p.store.iter())
    }

    /// Sequence number of the update that inserted a live edge.
    pub fn edge_seq(&self, key: EdgeKey) -> Option<u64> {
        self.edge_seq.get(&key).copied()
    }

    pub fn register_query(&mut self, q: QueryGraph) -> Result<QueryId, EngineError> {
        let report = q.validate();
        if !report.is_ok() {
            return Err(EngineError::InvalidQuery {
                name: q.name.clone(),
                violations: report.violations,
            });
        }
        if self.names.contains_key(&q.name) {
            return Err(EngineError::DuplicateQueryName(q.name.clone()));
        }
        let gate = self.config.spawn_gates.get(&q.name).cloned();
        if let Some(g) = &gate {
            if !is_valid_gate(&q, g) {
                return Err(EngineError::InvalidGate {
                    query: q.name.clone(),
                    edges: g.iter().copied().collect(),
                });
            }
        }
        let id = QueryId(self.next_id);
        self.next_id += 1;
        let mut plan = QueryPlan::new(id, q);
        plan.set_gate(gate.as_ref());
        self.names.insert(plan.graph.name.clone(), id);
        self.plans.insert(id, plan);
        self.rebuild_dispatch();
        Ok(id)
    }

    pub fn unregister_query(&mut self, id: QueryId) -> Result<QueryGraph, EngineError> {
        let plan = self.plans.remove(&id).ok_or(EngineError::UnknownQuery(id))?;
        self.names.remove(&plan.graph.name);
        self.synopsis.forget_query(id);
        self.emitted_keys.retain(|(q, _)| *q != id);
        self.rebuild_dispatch();
        Ok(plan.graph)
    }

    fn rebuild_dispatch(&mut self) {
        self.dispatch = DispatchIndex::build(self.plans.iter().map(|(id, p)| (*id, &p.graph)));
    }

    fn plan_mut(&mut self, id: QueryId) -> Result<&mut QueryPlan, EngineError> {
        self.plans.get_mut(&id).ok_or(EngineError::UnknownQuery(id))
    }

    /// Install or clear a spawn gate. Only allowed before the query has
    /// seen any matching update.
    pub fn set_spawn_gate(&mut self, id: QueryId, gate: Option<BTreeSet<usize>>) -> Result<(), EngineError> {
        let plan = self.plan_mut(id)?;
        if plan.counters.hits > 0 {
            return Err(EngineError::GateAfterStart(plan.graph.name.clone()));
        }
        if let Some(g) = &gate {
            if !is_valid_gate(&plan.graph, g) {
                return Err(EngineError::InvalidGate {
                    query: plan.graph.name.clone(),
                    edges: g.iter().copied().collect(),
                });
            }
        }
        plan.set_gate(gate.as_ref());
        Ok(())
    }

    pub fn spawn_gate(&self, id: QueryId) -> Option<BTreeSet<usize>> {
        let mask = self.plans.get(&id)?.gate?;
        Some((0..64).filter(|e| mask & (1 << e) != 0).collect())
    }

    /// Replace a query's cluster gap. Already expired partials stay gone.
    pub fn set_cluster_gap(&mut self, id: QueryId, gap: Option<ClusterGap>) -> Result<(), EngineError> {
        let plan = self.plan_mut(id)?;
        plan.graph.constraints.cluster_gap = gap;
        let rule = expiry_rule(&plan.graph);
        plan.set_rule(rule);
        Ok(())
    }

    pub fn recommend_cluster_gap(&self, id: QueryId, quantile: f64) -> Result<u64, EngineError> {
        let plan = self.plans.get(&id).ok_or(EngineError::UnknownQuery(id))?;
        Ok(self.synopsis.recommend_cluster_gap(id, plan.graph.edges.len(), quantile)?)
    }

    /// Compute the recommended time gap and, in auto mode, install it. The
    /// new gap never exceeds the query's window. Returns `(old, new)`.
    pub fn apply_recommendation(
        &mut self,
        id: QueryId,
        quantile: f64,
        mode: AdaptMode,
    ) -> Result<(Option<ClusterGap>, ClusterGap), EngineError> {
        let rec = self.recommend_cluster_gap(id, quantile)?;
        let plan = self.plan_mut(id)?;
        let old = plan.graph.constraints.cluster_gap;
        let amount = plan.graph.constraints.window.map_or(rec, |w| rec.min(w)).max(1);
        let new = ClusterGap::time(amount);
        if mode == AdaptMode::Auto {
            self.set_cluster_gap(id, Some(new))?;
        }
        Ok((old, new))
    }

    /// Buffer an update for up to `reorder_slack` time units and process
    /// everything that can no longer be overtaken.
    pub fn ingest(&mut self, u: StreamUpdate) -> Result<Vec<MatchResult>, EngineError> {
        let slack = self.config.reorder_slack;
        if let Some(max) = self.max_seen {
            let watermark = max.saturating_sub(slack);
            if u.timestamp < watermark || self.last_ts.is_some_and(|l| u.timestamp < l) {
                return Err(EngineError::OutOfOrderTimestamp {
                    timestamp: u.timestamp,
                    watermark: watermark.max(self.last_ts.unwrap_or(0)),
                });
            }
        }
        let max = self.max_seen.map_or(u.timestamp, |m| m.max(u.timestamp));
        self.max_seen = Some(max);
        self.reorder.insert((u.timestamp, self.arrivals), u);
        self.arrivals += 1;
        let mut out = Vec::new();
        while let Some(entry) = self.reorder.first_entry() {
            if entry.key().0.saturating_add(slack) > max {
                break;
            }
            let u = entry.remove();
            out.extend(self.process_update(&u)?);
        }
        Ok(out)
    }

    /// Release every buffered update.
    pub fn flush(&mut self) -> Result<Vec<MatchResult>, EngineError> {
        let mut out = Vec::new();
        while let Some((_, u)) = self.reorder.pop_first() {
            out.extend(self.process_update(&u)?);
        }
        Ok(out)
    }

    /// Highest timestamp the engine has committed to.
    pub fn watermark(&self) -> Option<Timestamp> {
        self.max_seen.map(|m| m.saturating_sub(self.config.reorder_slack))
    }

    /// Apply one update to the store and the partial matches. Timestamps
    /// must not decrease.
    pub fn process_update(&mut self, u: &StreamUpdate) -> Result<Vec<MatchResult>, EngineError> {
        if let Some(last) = self.last_ts {
            if u.timestamp < last {
                return Err(EngineError::OutOfOrderTimestamp {
                    timestamp: u.timestamp,
                    watermark: last,
                });
            }
        }
        let receipt = self.store.apply_update(u)?;
        self.seq += 1;
        self.updates += 1;
        self.last_ts = Some(u.timestamp);
        self.max_seen = Some(self.max_seen.map_or(u.timestamp, |m| m.max(u.timestamp)));
        let seq = self.seq;
        self.expire(u.timestamp, seq);

        let key = receipt.edge;
        if u.op == UpdateOp::Delete {
            self.edge_seq.remove(&key);
            for plan in self.plans.values_mut() {
                for pid in plan.store.with_edge(key) {
                    plan.store.remove(pid);
                }
                if let Some(d) = &mut plan.deferred {
                    d.remove_edge(key);
                }
            }
            self.synopsis.observe(u, &[]);
            return Ok(Vec::new());
        }

        self.edge_seq.insert(key, seq);
        let edge = self
            .store
            .live_edge(key)
            .ok_or_else(|| EngineError::UnknownQueryState(format!("inserted edge `{}` is not live", u.edge_id)))?;
        let (src, dst) = (edge.src, edge.dst);
        let (sv, dv) = (self.store.vertex(src), self.store.vertex(dst));
        let probe = EdgeProbe {
            edge_type: edge.edge_type,
            src_label: &sv.label,
            dst_label: &dv.label,
            edge_attrs: edge.attributes,
            src_attrs: &sv.attributes,
            dst_attrs: &dv.attributes,
        };
        let hits = self.dispatch.dispatch(&probe, &mut self.predicate_evals);
        self.synopsis.observe(u, &hits);
        self.ops += 1;
        if hits.is_empty() {
            return Ok(Vec::new());
        }

        let m = MatchedEdge {
            edge: key,
            timestamp: u.timestamp,
            seq,
        };
        let mut grouped: BTreeMap<QueryId, Vec<usize>> = BTreeMap::new();
        for (q, eid) in hits {
            grouped.entry(q).or_default().push(eid);
        }
        let pruning = self.config.ordered_pruning;
        let mut results = Vec::new();
        for (qid, eids) in grouped {
            let plan = self
                .plans
                .get_mut(&qid)
                .ok_or_else(|| EngineError::UnknownQueryState(format!("dispatch names unknown {qid}")))?;
            let complete = plan.on_insert(&eids, src, dst, m, pruning, &mut self.ops)?;
            let mut batch = Vec::new();
            for p in complete {
                if !plan.emittable(&p, u.timestamp) {
                    continue;
                }
                if self.config.dedup && !self.emitted_keys.insert((qid, p.fingerprint())) {
                    continue;
                }
                batch.push(MatchResult {
                    query: qid,
                    vmap: p.vmap.iter().map(|v| v.expect("complete match")).collect(),
                    emap: p.emap.iter().map(|e| e.expect("complete match")).collect(),
                    completion_ts: u.timestamp,
                    emit_seq: seq,
                });
            }
            batch.sort();
            plan.counters.emitted += batch.len() as u64;
            self.emitted += batch.len() as u64;
            results.extend(batch);
        }
        let live: usize = self.plans.values().map(|p| p.store.len()).sum();
        self.peak = self.peak.max(live);
        Ok(results)
    }

    /// Drop every partial match that violates its cluster gap or window at
    /// `(now_ts, now_seq)`. Returns the number removed.
    pub fn expire(&mut self, now_ts: Timestamp, now_seq: u64) -> usize {
        let mut total = 0;
        for plan in self.plans.values_mut() {
            let n = plan.store.expire(now_ts, now_seq, &mut self.ops);
            plan.counters.expired += n as u64;
            total += n;
            if let Some(d) = &mut plan.deferred {
                d.expire(now_ts, now_seq, &mut self.ops);
            }
        }
        self.expired += total as u64;
        total
    }

    pub fn stats(&self) -> EngineStats {
        let per_query: Vec<QueryStats> = self
            .plans
            .values()
            .map(|p| QueryStats {
                id: p.id,
                name: p.graph.name.clone(),
                live_partials: p.store.len(),
                peak_partials: p.counters.peak,
                emitted: p.counters.emitted,
                expired: p.counters.expired,
                spawns: p.counters.spawns,
                hits: p.counters.hits,
                deferred: p.deferred.as_ref().map_or(0, DeferredStore::len),
            })
            .collect();
        EngineStats {
            updates: self.updates,
            live_partials: per_query.iter().map(|q| q.live_partials).sum(),
            peak_partials: self.peak,
            emitted: self.emitted,
            expired: self.expired,
            predicate_evals: self.predicate_evals,
            spawns: per_query.iter().map(|q| q.spawns).sum(),
            deferred: per_query.iter().map(|q| q.deferred).sum(),
            ops: self.ops,
            per_query,
        }
    }

    /// Describe a result by external ids.
    pub fn resolve(&self, r: &MatchResult) -> Option<Embedding> {
        let q = self.query(r.query)?;
        let mut vertices: Vec<(String, String)> = q
            .vertices
            .iter()
            .zip(&r.vmap)
            .map(|(qv, &v)| (qv.var.clone(), self.store.vertex(v).id.clone()))
            .collect();
        vertices.sort();
        let edges = q
            .edges
            .iter()
            .zip(&r.emap)
            .map(|(qe, m)| (qe.name.clone(), self.store.edge_name(m.edge).to_string(), m.timestamp))
            .collect();
        Some(Embedding {
            query: q.name.clone(),
            vertices,
            edges,
        })
    }
}

/// Replays `updates` through a fresh engine holding `queries`; returns the
/// engine and every result in emission order.
pub fn replay<'a>(
    config: EngineConfig,
    queries: impl IntoIterator<Item = &'a QueryGraph>,
    updates: impl IntoIterator<Item = &'a StreamUpdate>,
) -> Result<(Engine, Vec<MatchResult>), EngineError> {
    let mut engine = Engine::new(config);
    for q in queries {
        engine.register_query(q.clone())?;
    }
    let mut out = Vec::new();
    for u in updates {
        out.extend(engine.ingest(u.clone())?);
    }
    out.extend(engine.flush()?);
    Ok((engine, out))
}
