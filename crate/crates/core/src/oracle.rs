//! Exhaustive reference matcher over a static snapshot.
//!
//! Plain backtracking with no incremental state, used to check the streaming
//! engine. Variables are assigned in descending degree order (ties by name),
//! then query edges are assigned distinct data edges.

use std::collections::HashMap;

use thiserror::Error;

use crate::graph_store::{GraphSnapshot, SnapshotEdge, Timestamp, Vertex};
use crate::query::{GapUnit, QueryGraph};
use crate::value::all_hold;

/// A complete match described by external ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Embedding {
    pub query: String,
    /// `(variable, vertex id)`, sorted by variable.
    pub vertices: Vec<(String, String)>,
    /// `(query edge name, edge id, timestamp)` in query edge order.
    pub edges: Vec<(String, String, Timestamp)>,
}

impl Embedding {
    pub fn completion_ts(&self) -> Timestamp {
        self.edges.iter().map(|e| e.2).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("update-count cluster gaps need arrival sequence numbers")]
    ClusterGapUnitUnsupported,
}

/// Every embedding of `q` in `g`, ignoring temporal constraints. Sorted.
pub fn find_all_matches(q: &QueryGraph, g: &GraphSnapshot) -> Vec<Embedding> {
    let mut out = Vec::new();
    Search::new(q, g).run(&mut |e| out.push(e));
    out.sort();
    out
}

/// Embeddings that also satisfy arrival order, window and a time-unit
/// cluster gap.
pub fn find_all_matches_temporal(q: &QueryGraph, g: &GraphSnapshot) -> Result<Vec<Embedding>, OracleError> {
    if q.constraints.cluster_gap.is_some_and(|c| c.unit == GapUnit::Updates) {
        return Err(OracleError::ClusterGapUnitUnsupported);
    }
    Ok(find_all_matches_temporal_with(q, g, |_| None))
}

/// As `find_all_matches_temporal`, with `seq_of` giving the stream
/// sequence number of each edge id for update-count gaps.
pub fn find_all_matches_temporal_with(
    q: &QueryGraph,
    g: &GraphSnapshot,
    seq_of: impl Fn(&str) -> Option<u64>,
) -> Vec<Embedding> {
    find_all_matches(q, g)
        .into_iter()
        .filter(|e| satisfies_temporal(q, e, &seq_of))
        .collect()
}

pub fn satisfies_temporal(q: &QueryGraph, e: &Embedding, seq_of: &impl Fn(&str) -> Option<u64>) -> bool {
    let c = &q.constraints;
    if c.arrival_order.iter().any(|&(a, b)| e.edges[a].2 >= e.edges[b].2) {
        return false;
    }
    let mut ts: Vec<Timestamp> = e.edges.iter().map(|x| x.2).collect();
    ts.sort_unstable();
    if let Some(w) = c.window {
        if ts[ts.len() - 1] - ts[0] > w {
            return false;
        }
    }
    match c.cluster_gap {
        None => true,
        Some(gap) if gap.unit == GapUnit::Time => ts.windows(2).all(|w| w[1] - w[0] <= gap.amount),
        Some(gap) => {
            let Some(mut seqs) = e.edges.iter().map(|x| seq_of(&x.1)).collect::<Option<Vec<u64>>>() else {
                return false;
            };
            seqs.sort_unstable();
            seqs.windows(2).all(|w| w[1] - w[0] <= gap.amount)
        }
    }
}

struct Search<'a> {
    q: &'a QueryGraph,
    g: &'a GraphSnapshot,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    adjacency: HashMap<(usize, usize), Vec<usize>>,
    edge_ends: Vec<(usize, usize)>,
}

impl<'a> Search<'a> {
    fn new(q: &'a QueryGraph, g: &'a GraphSnapshot) -> Self {
        let mut order: Vec<usize> = (0..q.vertices.len()).collect();
        order.sort_by(|&a, &b| {
            let (va, vb) = (&q.vertices[a].var, &q.vertices[b].var);
            q.var_degree(vb).cmp(&q.var_degree(va)).then_with(|| va.cmp(vb))
        });
        let candidates = q
            .vertices
            .iter()
            .map(|qv| {
                g.vertices
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.label == qv.label && all_hold(&qv.predicates, &v.attributes))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let index: HashMap<&str, usize> = g.vertices.iter().enumerate().map(|(i, v)| (v.id.as_str(), i)).collect();
        let mut adjacency: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, e) in g.edges.iter().enumerate() {
            if let (Some(&s), Some(&d)) = (index.get(e.src.as_str()), index.get(e.dst.as_str())) {
                adjacency.entry((s, d)).or_default().push(i);
            }
        }
        let edge_ends = q
            .edges
            .iter()
            .map(|e| {
                (
                    q.var_index(&e.src_var).expect("validated query"),
                    q.var_index(&e.dst_var).expect("validated query"),
                )
            })
            .collect();
        Search {
            q,
            g,
            order,
            candidates,
            adjacency,
            edge_ends,
        }
    }

    fn edge_fits(&self, eid: usize, e: &SnapshotEdge) -> bool {
        let qe = &self.q.edges[eid];
        e.edge_type == qe.edge_type && all_hold(&qe.predicates, &e.attributes)
    }

    fn edge_options(&self, eid: usize, vmap: &[Option<usize>]) -> Vec<usize> {
        let (s, d) = self.edge_ends[eid];
        let (Some(s), Some(d)) = (vmap[s], vmap[d]) else {
            return Vec::new();
        };
        self.adjacency
            .get(&(s, d))
            .map(|v| v.iter().copied().filter(|&i| self.edge_fits(eid, &self.g.edges[i])).collect())
            .unwrap_or_default()
    }

    fn run(&self, emit: &mut dyn FnMut(Embedding)) {
        let mut vmap = vec![None; self.q.vertices.len()];
        let mut used = vec![false; self.g.vertices.len()];
        self.assign_vertex(0, &mut vmap, &mut used, emit);
    }

    fn assign_vertex(&self, depth: usize, vmap: &mut Vec<Option<usize>>, used: &mut [bool], emit: &mut dyn FnMut(Embedding)) {
        if depth == self.order.len() {
            let options: Vec<Vec<usize>> = (0..self.q.edges.len()).map(|e| self.edge_options(e, vmap)).collect();
            let mut chosen = Vec::with_capacity(options.len());
            self.assign_edge(&options, &mut chosen, vmap, emit);
            return;
        }
        let var = self.order[depth];
        for &v in &self.candidates[var] {
            if used[v] {
                continue;
            }
            vmap[var] = Some(v);
            // Prune as soon as an edge with both ends assigned has no data edge.
            let dead = (0..self.q.edges.len()).any(|e| {
                let (s, d) = self.edge_ends[e];
                (s == var || d == var) && vmap[s].is_some() && vmap[d].is_some() && self.edge_options(e, vmap).is_empty()
            });
            if !dead {
                used[v] = true;
                self.assign_vertex(depth + 1, vmap, used, emit);
                used[v] = false;
            }
            vmap[var] = None;
        }
    }

    fn assign_edge(&self, options: &[Vec<usize>], chosen: &mut Vec<usize>, vmap: &[Option<usize>], emit: &mut dyn FnMut(Embedding)) {
        let eid = chosen.len();
        if eid == options.len() {
            emit(self.embedding(vmap, chosen));
            return;
        }
        for &i in &options[eid] {
            if chosen.contains(&i) {
                continue;
            }
            chosen.push(i);
            self.assign_edge(options, chosen, vmap, emit);
            chosen.pop();
        }
    }

    fn embedding(&self, vmap: &[Option<usize>], chosen: &[usize]) -> Embedding {
        let vertex = |i: usize| -> &Vertex { &self.g.vertices[vmap[i].expect("complete")] };
        let mut vertices: Vec<(String, String)> = self
            .q
            .vertices
            .iter()
            .enumerate()
            .map(|(i, qv)| (qv.var.clone(), vertex(i).id.clone()))
            .collect();
        vertices.sort();
        let edges = chosen
            .iter()
            .enumerate()
            .map(|(eid, &i)| {
                let e = &self.g.edges[i];
                (self.q.edges[eid].name.clone(), e.edge_id.clone(), e.timestamp)
            })
            .collect();
        Embedding {
            query: self.q.name.clone(),
            vertices,
            edges,
        }
    }
}
