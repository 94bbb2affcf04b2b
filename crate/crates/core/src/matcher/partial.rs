use std::collections::{BTreeSet, HashMap};

use crate::graph_store::{EdgeKey, Timestamp, VertexKey};
use crate::query::QueryId;

/// One data edge assigned to a query edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MatchedEdge {
    pub edge: EdgeKey,
    pub timestamp: Timestamp,
    /// Stream sequence number of the update that inserted the edge.
    pub seq: u64,
}

/// An injective embedding of a proper, non-empty subset of a query's edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialMatch {
    pub query: QueryId,
    /// Indexed by query variable.
    pub vmap: Vec<Option<VertexKey>>,
    /// Indexed by query edge id.
    pub emap: Vec<Option<MatchedEdge>>,
    pub matched: u64,
    pub first_ts: Timestamp,
    pub last_ts: Timestamp,
    pub last_update_seq: u64,
}

impl PartialMatch {
    pub(crate) fn empty(query: QueryId, vars: usize, edges: usize) -> Self {
        PartialMatch {
            query,
            vmap: vec![None; vars],
            emap: vec![None; edges],
            matched: 0,
            first_ts: Timestamp::MAX,
            last_ts: 0,
            last_update_seq: 0,
        }
    }

    pub fn matched_count(&self) -> u32 {
        self.matched.count_ones()
    }

    pub fn has_edge(&self, eid: usize) -> bool {
        self.matched & (1 << eid) != 0
    }

    pub fn contains_data_edge(&self, key: EdgeKey) -> bool {
        self.emap.iter().flatten().any(|m| m.edge == key)
    }

    /// Whether `(src_var -> src, dst_var -> dst)` is consistent with the
    /// existing mapping and keeps it injective.
    pub(crate) fn accepts_endpoints(&self, src_var: usize, src: VertexKey, dst_var: usize, dst: VertexKey) -> bool {
        if src == dst {
            return false;
        }
        for (var, want) in [(src_var, src), (dst_var, dst)] {
            match self.vmap[var] {
                Some(have) if have != want => return false,
                Some(_) => {}
                None => {
                    if self.vmap.iter().enumerate().any(|(i, v)| i != var && *v == Some(want)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub(crate) fn add(&mut self, eid: usize, src_var: usize, src: VertexKey, dst_var: usize, dst: VertexKey, m: MatchedEdge) {
        self.vmap[src_var] = Some(src);
        self.vmap[dst_var] = Some(dst);
        self.emap[eid] = Some(m);
        self.matched |= 1 << eid;
        self.first_ts = self.first_ts.min(m.timestamp);
        self.last_ts = self.last_ts.max(m.timestamp);
        self.last_update_seq = self.last_update_seq.max(m.seq);
    }

    /// Identity of the embedding for duplicate detection.
    pub(crate) fn fingerprint(&self) -> Vec<(EdgeKey, Timestamp)> {
        self.emap
            .iter()
            .map(|m| m.map_or((EdgeKey(u32::MAX), 0), |m| (m.edge, m.timestamp)))
            .collect()
    }
}

/// Expiry deadlines derived from a query's constraints; `None` never expires.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct ExpiryRule {
    pub gap_time: Option<u64>,
    pub gap_updates: Option<u64>,
    pub window: Option<u64>,
}

impl ExpiryRule {
    /// Last timestamp at which the partial is still live.
    pub fn ts_deadline(&self, p: &PartialMatch) -> Option<u64> {
        let gap = self.gap_time.map(|g| p.last_ts.saturating_add(g));
        let win = self.window.map(|w| p.first_ts.saturating_add(w));
        match (gap, win) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Last sequence number at which the partial is still live.
    pub fn seq_deadline(&self, p: &PartialMatch) -> Option<u64> {
        self.gap_updates.map(|g| p.last_update_seq.saturating_add(g))
    }

    pub fn is_stale(&self, p: &PartialMatch, now_ts: Timestamp, now_seq: u64) -> bool {
        self.ts_deadline(p).is_some_and(|d| now_ts > d) || self.seq_deadline(p).is_some_and(|d| now_seq > d)
    }
}

/// Live partial matches of one query with the indexes the engine needs:
/// by mapped `(variable, data vertex)`, by unmapped variable, by data edge,
/// and by expiry deadline.
#[derive(Debug, Clone)]
pub(crate) struct PartialStore {
    slots: Vec<Option<PartialMatch>>,
    free: Vec<usize>,
    live: usize,
    by_vertex: HashMap<(usize, VertexKey), BTreeSet<usize>>,
    unmapped: Vec<BTreeSet<usize>>,
    by_edge: HashMap<EdgeKey, BTreeSet<usize>>,
    ts_deadlines: BTreeSet<(u64, usize)>,
    seq_deadlines: BTreeSet<(u64, usize)>,
    pub rule: ExpiryRule,
}

impl PartialStore {
    pub fn new(vars: usize, rule: ExpiryRule) -> Self {
        PartialStore {
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
            by_vertex: HashMap::new(),
            unmapped: vec![BTreeSet::new(); vars],
            by_edge: HashMap::new(),
            ts_deadlines: BTreeSet::new(),
            seq_deadlines: BTreeSet::new(),
            rule,
        }
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn get(&self, pid: usize) -> Option<&PartialMatch> {
        self.slots.get(pid).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PartialMatch> {
        self.slots.iter().flatten()
    }

    pub fn insert(&mut self, p: PartialMatch) -> usize {
        let pid = match self.free.pop() {
            Some(pid) => pid,
            None => {
                self.slots.push(None);
                self.slots.len() - 1
            }
        };
        for (var, v) in p.vmap.iter().enumerate() {
            match v {
                Some(vk) => {
                    self.by_vertex.entry((var, *vk)).or_default().insert(pid);
                }
                None => {
                    self.unmapped[var].insert(pid);
                }
            }
        }
        for m in p.emap.iter().flatten() {
            self.by_edge.entry(m.edge).or_default().insert(pid);
        }
        if let Some(d) = self.rule.ts_deadline(&p) {
            self.ts_deadlines.insert((d, pid));
        }
        if let Some(d) = self.rule.seq_deadline(&p) {
            self.seq_deadlines.insert((d, pid));
        }
        self.slots[pid] = Some(p);
        self.live += 1;
        pid
    }

    pub fn remove(&mut self, pid: usize) -> Option<PartialMatch> {
        let p = self.slots.get_mut(pid)?.take()?;
        for (var, v) in p.vmap.iter().enumerate() {
            match v {
                Some(vk) => {
                    if let Some(set) = self.by_vertex.get_mut(&(var, *vk)) {
                        set.remove(&pid);
                        if set.is_empty() {
                            self.by_vertex.remove(&(var, *vk));
                        }
                    }
                }
                None => {
                    self.unmapped[var].remove(&pid);
                }
            }
        }
        for m in p.emap.iter().flatten() {
            if let Some(set) = self.by_edge.get_mut(&m.edge) {
                set.remove(&pid);
                if set.is_empty() {
                    self.by_edge.remove(&m.edge);
                }
            }
        }
        if let Some(d) = self.rule.ts_deadline(&p) {
            self.ts_deadlines.remove(&(d, pid));
        }
        if let Some(d) = self.rule.seq_deadline(&p) {
            self.seq_deadlines.remove(&(d, pid));
        }
        self.free.push(pid);
        self.live -= 1;
        Some(p)
    }

    /// Candidates for adding a data edge `src -> dst` as a query edge
    /// between `src_var` and `dst_var`: partials mapping either variable to
    /// the matching endpoint, plus partials mapping neither. The three
    /// groups are disjoint.
    pub fn candidates(&self, src_var: usize, src: VertexKey, dst_var: usize, dst: VertexKey, ops: &mut u64) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(set) = self.by_vertex.get(&(src_var, src)) {
            out.extend(set.iter().copied());
        }
        if let Some(set) = self.by_vertex.get(&(dst_var, dst)) {
            out.extend(set.iter().copied().filter(|&pid| self.unmapped[src_var].contains(&pid)));
        }
        let (a, b) = (&self.unmapped[src_var], &self.unmapped[dst_var]);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        *ops += small.len() as u64;
        out.extend(small.iter().copied().filter(|pid| large.contains(pid)));
        *ops += out.len() as u64;
        out
    }

    pub fn with_edge(&self, key: EdgeKey) -> Vec<usize> {
        self.by_edge.get(&key).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Remove every partial whose deadline has passed.
    pub fn expire(&mut self, now_ts: Timestamp, now_seq: u64, ops: &mut u64) -> usize {
        let mut stale: Vec<usize> = Vec::new();
        for &(d, pid) in &self.ts_deadlines {
            if d >= now_ts {
                break;
            }
            stale.push(pid);
        }
        for &(d, pid) in &self.seq_deadlines {
            if d >= now_seq {
                break;
            }
            stale.push(pid);
        }
        *ops += 1 + stale.len() as u64;
        let mut removed = 0;
        for pid in stale {
            if self.remove(pid).is_some() {
                removed += 1;
            }
        }
        removed
    }

    /// Swap in a new expiry rule and rebuild the deadline indexes.
    pub fn set_rule(&mut self, rule: ExpiryRule) {
        self.rule = rule;
        self.ts_deadlines.clear();
        self.seq_deadlines.clear();
        for (pid, slot) in self.slots.iter().enumerate() {
            if let Some(p) = slot {
                if let Some(d) = rule.ts_deadline(p) {
                    self.ts_deadlines.insert((d, pid));
                }
                if let Some(d) = rule.seq_deadline(p) {
                    self.seq_deadlines.insert((d, pid));
                }
            }
        }
    }
}
