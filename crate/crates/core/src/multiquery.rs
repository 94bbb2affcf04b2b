//! Work shared across registered queries.
//!
//! Query edges with identical signatures (edge type, endpoint labels and
//! canonicalized predicates) are evaluated once per update and the result is
//! fanned out to every `(query, edge)` pair in the bucket. The same
//! signatures drive spawn-gate selection: small subpatterns that several
//! queries have in common are ranked first.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::query::{QueryGraph, QueryId};
use crate::synopsis::StreamSynopsis;
use crate::value::{all_hold, AttributePredicate, Attributes};

/// Everything that decides whether a single data edge can play a query edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeSignature {
    pub edge_type: String,
    pub src_label: String,
    pub dst_label: String,
    pub edge_predicates: Vec<AttributePredicate>,
    pub src_predicates: Vec<AttributePredicate>,
    pub dst_predicates: Vec<AttributePredicate>,
}

fn canonical(preds: &[AttributePredicate]) -> Vec<AttributePredicate> {
    let set: BTreeSet<AttributePredicate> = preds.iter().cloned().collect();
    set.into_iter().collect()
}

impl EdgeSignature {
    pub fn of(q: &QueryGraph, eid: usize) -> Self {
        let e = &q.edges[eid];
        let src = &q.vertices[q.var_index(&e.src_var).expect("validated query")];
        let dst = &q.vertices[q.var_index(&e.dst_var).expect("validated query")];
        EdgeSignature {
            edge_type: e.edge_type.clone(),
            src_label: src.label.clone(),
            dst_label: dst.label.clone(),
            edge_predicates: canonical(&e.predicates),
            src_predicates: canonical(&src.predicates),
            dst_predicates: canonical(&dst.predicates),
        }
    }

    fn shape(&self) -> (String, String, String) {
        (
            self.edge_type.clone(),
            self.src_label.clone(),
            self.dst_label.clone(),
        )
    }

    fn predicates_hold(&self, edge: &Attributes, src: &Attributes, dst: &Attributes) -> bool {
        all_hold(&self.edge_predicates, edge)
            && all_hold(&self.src_predicates, src)
            && all_hold(&self.dst_predicates, dst)
    }
}

/// The data-edge fields a signature is tested against.
#[derive(Debug, Clone, Copy)]
pub struct EdgeProbe<'a> {
    pub edge_type: &'a str,
    pub src_label: &'a str,
    pub dst_label: &'a str,
    pub edge_attrs: &'a Attributes,
    pub src_attrs: &'a Attributes,
    pub dst_attrs: &'a Attributes,
}

#[derive(Debug, Clone, Default)]
pub struct DispatchIndex {
    signatures: Vec<EdgeSignature>,
    entries: Vec<Vec<(QueryId, usize)>>,
    by_shape: HashMap<(String, String, String), Vec<usize>>,
}

impl DispatchIndex {
    pub fn build<'a>(queries: impl IntoIterator<Item = (QueryId, &'a QueryGraph)>) -> Self {
        let mut sig_index: BTreeMap<EdgeSignature, usize> = BTreeMap::new();
        let mut idx = DispatchIndex::default();
        for (id, q) in queries {
            for eid in 0..q.edges.len() {
                let sig = EdgeSignature::of(q, eid);
                let slot = *sig_index.entry(sig.clone()).or_insert_with(|| {
                    idx.signatures.push(sig.clone());
                    idx.entries.push(Vec::new());
                    idx.by_shape.entry(sig.shape()).or_default().push(idx.signatures.len() - 1);
                    idx.signatures.len() - 1
                });
                idx.entries[slot].push((id, eid));
            }
        }
        idx
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn bucket_count(&self) -> usize {
        self.signatures.len()
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&EdgeSignature, &[(QueryId, usize)])> {
        self.signatures.iter().zip(self.entries.iter().map(Vec::as_slice))
    }

    /// Every `(query, edge)` whose signature the probe satisfies. Only
    /// signatures with the probe's type and endpoint labels are tested;
    /// `evals` is incremented once per tested signature.
    pub fn dispatch(&self, probe: &EdgeProbe<'_>, evals: &mut u64) -> Vec<(QueryId, usize)> {
        let key = (
            probe.edge_type.to_string(),
            probe.src_label.to_string(),
            probe.dst_label.to_string(),
        );
        let mut out = Vec::new();
        if let Some(slots) = self.by_shape.get(&key) {
            for &s in slots {
                *evals += 1;
                if self.signatures[s].predicates_hold(probe.edge_attrs, probe.src_attrs, probe.dst_attrs) {
                    out.extend_from_slice(&self.entries[s]);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// How the two edges of a 2-edge subpattern touch: bits for
/// src1=src2, src1=dst2, dst1=src2, dst1=dst2.
fn touch_mask(q: &QueryGraph, a: usize, b: usize) -> u8 {
    let (ea, eb) = (&q.edges[a], &q.edges[b]);
    u8::from(ea.src_var == eb.src_var)
        | u8::from(ea.src_var == eb.dst_var) << 1
        | u8::from(ea.dst_var == eb.src_var) << 2
        | u8::from(ea.dst_var == eb.dst_var) << 3
}

fn swap_mask(m: u8) -> u8 {
    (m & 0b1001) | ((m & 0b0010) << 1) | ((m & 0b0100) >> 1)
}

/// Canonical identity of a 1- or 2-edge subpattern, comparable across queries.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GateKey {
    Single(EdgeSignature),
    Pair(EdgeSignature, EdgeSignature, u8),
}

impl GateKey {
    fn of(q: &QueryGraph, edges: &[usize]) -> Self {
        match *edges {
            [e] => GateKey::Single(EdgeSignature::of(q, e)),
            [a, b] => {
                let (sa, sb) = (EdgeSignature::of(q, a), EdgeSignature::of(q, b));
                let m = touch_mask(q, a, b);
                let fwd = (sa.clone(), sb.clone(), m);
                let rev = (sb, sa, swap_mask(m));
                let (x, y, m) = fwd.min(rev);
                GateKey::Pair(x, y, m)
            }
            _ => unreachable!("gates have one or two edges"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateCandidate {
    /// Query edge ids forming the gate, ascending.
    pub edges: Vec<usize>,
    pub key: GateKey,
    /// Number of queries (including this one) containing the same subpattern.
    pub shared_by: usize,
    /// Synopsis hit count of the gate's least frequent edge; lower is more selective.
    pub selectivity: u64,
}

/// Whether `edges` may gate spawning for `q`: connected, and closed under
/// arrival-order predecessors.
pub fn is_valid_gate(q: &QueryGraph, edges: &BTreeSet<usize>) -> bool {
    if edges.is_empty() || edges.iter().any(|&e| e >= q.edges.len()) {
        return false;
    }
    let preds = q.order_predecessors();
    let mask: u64 = edges.iter().fold(0, |m, &e| m | 1 << e);
    if edges.iter().any(|&e| preds[e] & !mask != 0) {
        return false;
    }
    match edges.len() {
        1 => true,
        2 => {
            let v: Vec<usize> = edges.iter().copied().collect();
            touch_mask(q, v[0], v[1]) != 0
        }
        _ => false,
    }
}

fn subpatterns(q: &QueryGraph) -> Vec<Vec<usize>> {
    let m = q.edges.len();
    let mut out = Vec::new();
    for a in 0..m {
        if is_valid_gate(q, &BTreeSet::from([a])) {
            out.push(vec![a]);
        }
    }
    if m > 2 {
        for a in 0..m {
            for b in a + 1..m {
                if is_valid_gate(q, &BTreeSet::from([a, b])) {
                    out.push(vec![a, b]);
                }
            }
        }
    }
    out
}

/// Rank gate candidates per query: most widely shared first, then most
/// selective, then smaller, then by canonical signature.
pub fn find_shared_gates<'a>(
    queries: impl IntoIterator<Item = (QueryId, &'a QueryGraph)>,
    synopsis: Option<&StreamSynopsis>,
) -> BTreeMap<QueryId, Vec<GateCandidate>> {
    let per_query: Vec<(QueryId, &QueryGraph, Vec<(Vec<usize>, GateKey)>)> = queries
        .into_iter()
        .map(|(id, q)| {
            let subs = subpatterns(q)
                .into_iter()
                .map(|edges| {
                    let key = GateKey::of(q, &edges);
                    (edges, key)
                })
                .collect();
            (id, q, subs)
        })
        .collect();

    let mut sharing: HashMap<&GateKey, BTreeSet<QueryId>> = HashMap::new();
    for (id, _, subs) in &per_query {
        for (_, key) in subs {
            sharing.entry(key).or_default().insert(*id);
        }
    }

    let mut out = BTreeMap::new();
    for (id, _, subs) in &per_query {
        let mut cands: Vec<GateCandidate> = subs
            .iter()
            .map(|(edges, key)| GateCandidate {
                edges: edges.clone(),
                key: key.clone(),
                shared_by: sharing[key].len(),
                selectivity: edges
                    .iter()
                    .map(|&e| synopsis.map_or(0, |s| s.predicate_hits(*id, e)))
                    .min()
                    .unwrap_or(0),
            })
            .collect();
        cands.sort_by(|a, b| {
            b.shared_by
                .cmp(&a.shared_by)
                .then(a.selectivity.cmp(&b.selectivity))
                .then(a.edges.len().cmp(&b.edges.len()))
                .then_with(|| a.key.cmp(&b.key))
                .then_with(|| a.edges.cmp(&b.edges))
        });
        out.insert(*id, cands);
    }
    out
}
