//! Seeded random streams and queries for tests, benchmarks and the CLI's
//! `generate` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph_store::{Endpoint, StreamUpdate, Timestamp};
use crate::query::{ClusterGap, QueryEdge, QueryGraph, QueryVertex};
use crate::value::{AttributePredicate, CmpOp};

pub const SEED_ENV: &str = "STREAMSUBISO_SEED";

pub const LABELS: [&str; 4] = ["A", "B", "C", "D"];

/// `STREAMSUBISO_SEED` if set and numeric, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamGenConfig {
    pub vertices: usize,
    pub updates: usize,
    /// Number of labels used, at most 4.
    pub labels: usize,
    pub edge_types: usize,
    /// Timestamps advance by a uniform step in `0..=max_step`.
    pub max_step: u64,
    /// Chance that an update deletes a random live edge.
    pub delete_prob: f64,
    /// Vertex attribute `w` and edge attribute `x` are drawn from `0..attr_range`.
    pub attr_range: i64,
}

impl Default for StreamGenConfig {
    fn default() -> Self {
        StreamGenConfig {
            vertices: 50,
            updates: 200,
            labels: 4,
            edge_types: 2,
            max_step: 2,
            delete_prob: 0.0,
            attr_range: 4,
        }
    }
}

/// A vertex universe: fixed label and attributes per id.
#[derive(Debug, Clone)]
pub struct Universe {
    endpoints: Vec<Endpoint>,
}

impl Universe {
    pub fn new(rng: &mut impl Rng, vertices: usize, labels: usize, attr_range: i64) -> Self {
        let labels = labels.clamp(1, LABELS.len());
        let endpoints = (0..vertices)
            .map(|i| {
                Endpoint::new(format!("v{i}"), LABELS[rng.gen_range(0..labels)])
                    .with_attr("w", rng.gen_range(0..attr_range.max(1)))
            })
            .collect();
        Universe { endpoints }
    }

    pub fn len(&self) -> usize {
        self.endpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.endpoints.is_empty()
    }

    pub fn endpoint(&self, i: usize) -> Endpoint {
        self.endpoints[i].clone()
    }
}

pub fn random_stream(rng: &mut impl Rng, cfg: &StreamGenConfig) -> Vec<StreamUpdate> {
    let universe = Universe::new(rng, cfg.vertices.max(2), cfg.labels, cfg.attr_range);
    let mut out = Vec::with_capacity(cfg.updates);
    let mut live: Vec<StreamUpdate> = Vec::new();
    let mut ts: Timestamp = 0;
    for i in 0..cfg.updates {
        ts += rng.gen_range(0..=cfg.max_step);
        if !live.is_empty() && rng.gen_bool(cfg.delete_prob.clamp(0.0, 1.0)) {
            let victim = live.swap_remove(rng.gen_range(0..live.len()));
            let mut d = StreamUpdate::delete(victim.edge_id, victim.src, victim.dst, ts);
            d.edge_type = victim.edge_type;
            out.push(d);
            continue;
        }
        let s = rng.gen_range(0..universe.len());
        let mut d = rng.gen_range(0..universe.len() - 1);
        if d >= s {
            d += 1;
        }
        let u = StreamUpdate::insert(
            format!("e{i}"),
            universe.endpoint(s),
            format!("t{}", rng.gen_range(0..cfg.edge_types.max(1))),
            universe.endpoint(d),
            ts,
        )
        .with_attr("x", rng.gen_range(0..cfg.attr_range.max(1)));
        live.push(u.clone());
        out.push(u);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryGenConfig {
    pub max_edges: usize,
    pub labels: usize,
    pub edge_types: usize,
    /// Chance that each pair of edges is ordered (along a random permutation).
    pub order_prob: f64,
    pub predicate_prob: f64,
    /// Windows are drawn from this range; every query gets a window or a
    /// time gap so partial-match growth stays bounded.
    pub window: (u64, u64),
    pub gap: (u64, u64),
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        QueryGenConfig {
            max_edges: 5,
            labels: 4,
            edge_types: 2,
            order_prob: 0.3,
            predicate_prob: 0.2,
            window: (4, 24),
            gap: (1, 8),
        }
    }
}

/// One query edge before variables are named.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeShape {
    pub src_label: String,
    pub edge_type: String,
    pub dst_label: String,
    pub predicates: Vec<AttributePredicate>,
}

pub fn random_shape(rng: &mut impl Rng, cfg: &QueryGenConfig) -> EdgeShape {
    let labels = cfg.labels.clamp(1, LABELS.len());
    let mut predicates = Vec::new();
    if rng.gen_bool(cfg.predicate_prob) {
        let cmp = *[CmpOp::Le, CmpOp::Ge, CmpOp::Ne].choose(rng).expect("non-empty");
        predicates.push(AttributePredicate::new("x", cmp, rng.gen_range(0..4i64)));
    }
    EdgeShape {
        src_label: LABELS[rng.gen_range(0..labels)].to_string(),
        edge_type: format!("t{}", rng.gen_range(0..cfg.edge_types.max(1))),
        dst_label: LABELS[rng.gen_range(0..labels)].to_string(),
        predicates,
    }
}

/// A connected query over `shapes`: each edge after the first reuses one
/// existing variable of a matching label where possible.
pub fn query_from_shapes(rng: &mut impl Rng, name: &str, shapes: &[EdgeShape], cfg: &QueryGenConfig) -> QueryGraph {
    let mut vars: Vec<(String, String)> = Vec::new();
    let mut q = QueryGraph::new(name);
    let fresh = |vars: &mut Vec<(String, String)>, label: &str| {
        let v = format!("v{}", vars.len());
        vars.push((v.clone(), label.to_string()));
        v
    };
    for (i, s) in shapes.iter().enumerate() {
        let (src, dst) = if i == 0 {
            (fresh(&mut vars, &s.src_label), fresh(&mut vars, &s.dst_label))
        } else {
            // Attach at the source or the destination, reusing a same-label variable.
            let attach_src = rng.gen_bool(0.5);
            let want = if attach_src { &s.src_label } else { &s.dst_label };
            let existing: Vec<String> = vars.iter().filter(|(_, l)| l == want).map(|(v, _)| v.clone()).collect();
            // Without a same-label variable the edge hangs off any variable,
            // whose label then wins over the shape's.
            let anchor = match existing.choose(rng) {
                Some(v) => v.clone(),
                None => vars.choose(rng).expect("non-empty").0.clone(),
            };
            let other_label = if attach_src { &s.dst_label } else { &s.src_label };
            let reuse: Vec<String> = vars
                .iter()
                .filter(|(v, l)| l == other_label && *v != anchor)
                .map(|(v, _)| v.clone())
                .collect();
            let other = match reuse.choose(rng) {
                Some(v) if rng.gen_bool(0.3) => v.clone(),
                _ => fresh(&mut vars, other_label),
            };
            if attach_src {
                (anchor, other)
            } else {
                (other, anchor)
            }
        };
        let mut e = QueryEdge::new(format!("e{i}"), src, s.edge_type.clone(), dst);
        e.predicates = s.predicates.clone();
        q = q.edge(e);
    }
    for (v, l) in &vars {
        q = q.vertex(QueryVertex::new(v.clone(), l.clone()));
    }
    q.vertices.sort_by(|a, b| natural(&a.var).cmp(&natural(&b.var)));
    let m = q.edges.len();
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    for i in 0..m {
        for j in i + 1..m {
            if rng.gen_bool(cfg.order_prob) {
                q = q.before(perm[i], perm[j]);
            }
        }
    }
    let window = rng.gen_bool(0.7).then(|| rng.gen_range(cfg.window.0..=cfg.window.1));
    let gap = match rng.gen_range(0..3) {
        0 if window.is_some() => None,
        2 => Some(ClusterGap::updates(rng.gen_range(cfg.gap.0..=cfg.gap.1 * 4))),
        _ => {
            let g = rng.gen_range(cfg.gap.0..=cfg.gap.1);
            Some(ClusterGap::time(window.map_or(g, |w| g.min(w))))
        }
    };
    if let Some(w) = window {
        q = q.window(w);
    }
    if let Some(g) = gap {
        q = q.cluster_gap(g);
    }
    q
}

fn natural(v: &str) -> usize {
    v[1..].parse().unwrap_or(usize::MAX)
}

/// A random valid query with `1..=max_edges` edges.
pub fn random_query(rng: &mut impl Rng, name: &str, cfg: &QueryGenConfig) -> QueryGraph {
    loop {
        let m = rng.gen_range(1..=cfg.max_edges.max(1));
        let shapes: Vec<EdgeShape> = (0..m).map(|_| random_shape(rng, cfg)).collect();
        let q = query_from_shapes(rng, name, &shapes, cfg);
        if q.validate().is_ok() {
            return q;
        }
    }
}

/// `n` queries drawing each edge from a small shared pool with probability
/// `overlap`, so that signatures repeat across queries.
pub fn random_query_set(rng: &mut impl Rng, n: usize, overlap: f64, cfg: &QueryGenConfig) -> Vec<QueryGraph> {
    let pool: Vec<EdgeShape> = (0..3).map(|_| random_shape(rng, cfg)).collect();
    (0..n)
        .map(|i| loop {
            let m = rng.gen_range(1..=cfg.max_edges.max(1));
            let mut shapes: Vec<EdgeShape> = (0..m)
                .map(|_| {
                    if rng.gen_bool(overlap) {
                        pool.choose(rng).expect("non-empty").clone()
                    } else {
                        random_shape(rng, cfg)
                    }
                })
                .collect();
            // Every query carries at least one pooled edge.
            shapes[0] = pool[i % pool.len()].clone();
            let q = query_from_shapes(rng, &format!("q{i}"), &shapes, cfg);
            if q.validate().is_ok() {
                break q;
            }
        })
        .collect()
}
