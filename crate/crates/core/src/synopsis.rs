//! Running stream statistics used to suggest cluster-gap settings.
//!
//! Per edge type: a hit count and an EWMA of inter-arrival gaps. Per query
//! edge predicate: a hit count and a fixed-capacity reservoir sample of the
//! gaps between consecutive hits. Everything updates in O(1) per observation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph_store::{StreamUpdate, Timestamp, UpdateOp};
use crate::query::QueryId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynopsisConfig {
    /// EWMA smoothing factor applied to each new gap.
    pub alpha: f64,
    /// Reservoir capacity per predicate.
    pub reservoir_capacity: usize,
    pub seed: u64,
}

impl Default for SynopsisConfig {
    fn default() -> Self {
        SynopsisConfig {
            alpha: 0.125,
            reservoir_capacity: 1024,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeStats {
    pub count: u64,
    pub last_ts: Option<Timestamp>,
    /// Defined once two hits have been seen.
    pub ewma_gap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredicateStats {
    pub hits: u64,
    pub last_ts: Option<Timestamp>,
    /// Total gaps offered to the reservoir.
    pub gaps_seen: u64,
    pub reservoir: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SynopsisError {
    #[error("no gap samples recorded for this query")]
    InsufficientData,
    #[error("quantile must lie in (0, 1]")]
    InvalidQuantile,
}

#[derive(Debug, Clone)]
pub struct StreamSynopsis {
    config: SynopsisConfig,
    rng: ChaCha8Rng,
    types: HashMap<String, TypeStats>,
    predicates: HashMap<(QueryId, usize), PredicateStats>,
    watermark: Option<Timestamp>,
    total_updates: u64,
    ops: u64,
}

impl Default for StreamSynopsis {
    fn default() -> Self {
        Self::new(SynopsisConfig::default())
    }
}

impl StreamSynopsis {
    pub fn new(config: SynopsisConfig) -> Self {
        StreamSynopsis {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            types: HashMap::new(),
            predicates: HashMap::new(),
            watermark: None,
            total_updates: 0,
            ops: 0,
        }
    }

    /// Record one update and the query edges whose predicates it satisfied.
    pub fn observe(&mut self, u: &StreamUpdate, hits: &[(QueryId, usize)]) {
        self.total_updates += 1;
        self.ops += 1;
        self.watermark = Some(self.watermark.map_or(u.timestamp, |w| w.max(u.timestamp)));
        if u.op != UpdateOp::Insert {
            return;
        }
        let alpha = self.config.alpha;
        let t = self.types.entry(u.edge_type.clone()).or_default();
        t.count += 1;
        if let Some(last) = t.last_ts {
            let gap = u.timestamp.saturating_sub(last) as f64;
            t.ewma_gap = Some(match t.ewma_gap {
                None => gap,
                Some(prev) => alpha * gap + (1.0 - alpha) * prev,
            });
        }
        t.last_ts = Some(u.timestamp);

        let cap = self.config.reservoir_capacity;
        for &key in hits {
            self.ops += 1;
            let p = self.predicates.entry(key).or_default();
            p.hits += 1;
            if let Some(last) = p.last_ts {
                let gap = u.timestamp.saturating_sub(last);
                p.gaps_seen += 1;
                if p.reservoir.len() < cap {
                    p.reservoir.push(gap);
                } else {
                    let j = self.rng.gen_range(0..p.gaps_seen);
                    if (j as usize) < cap {
                        p.reservoir[j as usize] = gap;
                    }
                }
            }
            p.last_ts = Some(u.timestamp);
        }
    }

    pub fn type_stats(&self, edge_type: &str) -> Option<&TypeStats> {
        self.types.get(edge_type)
    }

    pub fn predicate_stats(&self, query: QueryId, eid: usize) -> Option<&PredicateStats> {
        self.predicates.get(&(query, eid))
    }

    pub fn predicate_hits(&self, query: QueryId, eid: usize) -> u64 {
        self.predicate_stats(query, eid).map_or(0, |p| p.hits)
    }

    pub fn watermark(&self) -> Option<Timestamp> {
        self.watermark
    }

    pub fn total_updates(&self) -> u64 {
        self.total_updates
    }

    /// Instrumented work counter: one unit per update plus one per predicate hit.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn forget_query(&mut self, query: QueryId) {
        self.predicates.retain(|(q, _), _| *q != query);
    }

    /// Nearest-rank quantile of the gap samples pooled over every edge
    /// predicate of `query`.
    pub fn recommend_cluster_gap(
        &self,
        query: QueryId,
        edge_count: usize,
        quantile: f64,
    ) -> Result<u64, SynopsisError> {
        if !(quantile > 0.0 && quantile <= 1.0) {
            return Err(SynopsisError::InvalidQuantile);
        }
        let mut pooled: Vec<u64> = (0..edge_count)
            .filter_map(|e| self.predicates.get(&(query, e)))
            .flat_map(|p| p.reservoir.iter().copied())
            .collect();
        nearest_rank(&mut pooled, quantile).ok_or(SynopsisError::InsufficientData)
    }
}

/// Element at one-based rank `ceil(q * n)` of the sorted samples.
pub fn nearest_rank(samples: &mut [u64], quantile: f64) -> Option<u64> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_unstable();
    let n = samples.len();
    let rank = ((quantile * n as f64).ceil() as usize).clamp(1, n);
    Some(samples[rank - 1])
}
