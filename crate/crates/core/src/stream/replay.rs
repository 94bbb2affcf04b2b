//! Batch replay of a parsed stream through an engine, with per-epoch
//! statistics, optional adaptation and an optional oracle cross-check.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use thiserror::Error;

use crate::graph_store::{GraphStore, StoreError, StreamUpdate, Timestamp, UpdateOp};
use crate::matcher::{AdaptMode, Engine, EngineConfig, EngineError, EngineStats, MatchResult};
use crate::multiquery::find_shared_gates;
use crate::oracle::{find_all_matches_temporal_with, Embedding};
use crate::query::{QueryGraph, QueryId};
use crate::stream::wire::format_result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Batching {
    /// One batch holding the whole stream.
    #[default]
    Whole,
    /// A boundary after every `n` updates.
    Size(u64),
    /// A boundary whenever `ts / T` changes.
    Epoch(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub batching: Batching,
    pub ordered_pruning: bool,
    pub gates: bool,
    pub adapt: Option<AdaptMode>,
    pub adapt_quantile: f64,
    pub dedup: bool,
    pub reorder_slack: u64,
    pub oracle_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            batching: Batching::Whole,
            ordered_pruning: true,
            gates: false,
            adapt: None,
            adapt_quantile: 0.95,
            dedup: true,
            reorder_slack: 0,
            oracle_check: false,
        }
    }
}

/// Counters at one batch boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatsRow {
    pub epoch: u64,
    pub updates: u64,
    pub live_partials: usize,
    pub peak_partials: usize,
    pub emitted: u64,
    pub expired: u64,
    pub predicate_evals: u64,
}

impl StatsRow {
    pub const HEADER: &'static str = "epoch\tupdates\tlive_partials\tpeak_partials\temitted\texpired\tpredicate_evals";

    fn new(epoch: u64, s: &EngineStats) -> Self {
        StatsRow {
            epoch,
            updates: s.updates,
            live_partials: s.live_partials,
            peak_partials: s.peak_partials,
            emitted: s.emitted,
            expired: s.expired,
            predicate_evals: s.predicate_evals,
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.epoch,
            self.updates,
            self.live_partials,
            self.peak_partials,
            self.emitted,
            self.expired,
            self.predicate_evals
        )
    }
}

/// Differences between emitted results and the oracle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleReport {
    /// Oracle matches never emitted.
    pub missing: Vec<Embedding>,
    /// Emitted results the oracle does not produce.
    pub unexpected: Vec<Embedding>,
}

impl OracleReport {
    pub fn is_clean(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stats: Vec<StatsRow>,
    /// One line per adaptation decision.
    pub adaptations: Vec<String>,
    pub emitted: Vec<(Embedding, u64)>,
    pub oracle: Option<OracleReport>,
    pub final_stats: EngineStats,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("line {line}: {source}")]
    Stream { line: usize, source: EngineError },
    #[error(transparent)]
    Setup(EngineError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Runner<'a, W: Write> {
    engine: Engine,
    cfg: &'a RunConfig,
    out: &'a mut W,
    emitted: Vec<(Embedding, u64)>,
    stats: Vec<StatsRow>,
    adaptations: Vec<String>,
    epoch: u64,
}

impl<W: Write> Runner<'_, W> {
    fn emit(&mut self, results: Vec<MatchResult>) -> io::Result<()> {
        for r in results {
            let e = self.engine.resolve(&r).expect("results name registered queries");
            writeln!(self.out, "{}", format_result(&e, r.emit_seq))?;
            self.emitted.push((e, r.emit_seq));
        }
        Ok(())
    }

    fn boundary(&mut self) -> Result<(), RunError> {
        if let Some(mode) = self.cfg.adapt {
            let ids: Vec<(QueryId, String)> = self.engine.queries().map(|(id, q)| (id, q.name.clone())).collect();
            for (id, name) in ids {
                match self.engine.apply_recommendation(id, self.cfg.adapt_quantile, mode) {
                    Ok((old, new)) => {
                        let old = old.map_or("none".to_string(), |g| format!("{} {}", g.amount, g.unit));
                        let verb = if mode == AdaptMode::Auto { "set" } else { "recommend" };
                        self.adaptations.push(format!(
                            "epoch {}: {name}: cluster_gap {old} -> {verb} {} {}",
                            self.epoch, new.amount, new.unit
                        ));
                    }
                    Err(EngineError::Synopsis(_)) => {}
                    Err(e) => return Err(RunError::Setup(e)),
                }
            }
        }
        self.stats.push(StatsRow::new(self.epoch, &self.engine.stats()));
        Ok(())
    }
}

/// Engine configuration for `queries` under `cfg`, with automatic gates
/// chosen from the top-ranked shared candidate of each query.
pub fn engine_config(queries: &[QueryGraph], cfg: &RunConfig) -> EngineConfig {
    let mut spawn_gates = BTreeMap::new();
    if cfg.gates {
        let ranked = find_shared_gates(queries.iter().enumerate().map(|(i, q)| (QueryId(i as u32), q)), None);
        for (id, cands) in ranked {
            if let Some(top) = cands.first() {
                spawn_gates.insert(queries[id.0 as usize].name.clone(), top.edges.iter().copied().collect());
            }
        }
    }
    EngineConfig {
        ordered_pruning: cfg.ordered_pruning,
        dedup: cfg.dedup,
        reorder_slack: cfg.reorder_slack,
        spawn_gates,
        ..EngineConfig::default()
    }
}

/// Replay `updates` (with their source line numbers) and write one result
/// line per emission to `out` as soon as it is produced.
pub fn run(
    queries: &[QueryGraph],
    updates: &[(usize, StreamUpdate)],
    cfg: &RunConfig,
    out: &mut impl Write,
) -> Result<RunSummary, RunError> {
    let mut engine = Engine::new(engine_config(queries, cfg));
    for q in queries {
        engine.register_query(q.clone()).map_err(RunError::Setup)?;
    }
    let mut r = Runner {
        engine,
        cfg,
        out,
        emitted: Vec::new(),
        stats: Vec::new(),
        adaptations: Vec::new(),
        epoch: 0,
    };
    let mut in_batch = 0u64;
    let mut current_epoch: Option<u64> = None;
    for (line, u) in updates {
        if let Batching::Epoch(t) = cfg.batching {
            let e = u.timestamp / t.max(1);
            if current_epoch.is_some_and(|c| c != e) {
                r.boundary()?;
            }
            current_epoch = Some(e);
            r.epoch = e;
        }
        let results = r.engine.ingest(u.clone()).map_err(|source| RunError::Stream { line: *line, source })?;
        r.emit(results)?;
        in_batch += 1;
        if let Batching::Size(n) = cfg.batching {
            if in_batch == n.max(1) {
                r.boundary()?;
                r.epoch += 1;
                in_batch = 0;
            }
        }
    }
    let results = r.engine.flush().map_err(|source| RunError::Stream {
        line: updates.last().map_or(0, |u| u.0),
        source,
    })?;
    r.emit(results)?;
    let open_batch = match cfg.batching {
        Batching::Size(_) => in_batch > 0 || r.stats.is_empty(),
        Batching::Whole | Batching::Epoch(_) => true,
    };
    if open_batch {
        r.boundary()?;
    }
    r.out.flush()?;
    let oracle = cfg.oracle_check.then(|| oracle_report(&r.engine, queries, &r.emitted));
    Ok(RunSummary {
        stats: r.stats,
        adaptations: r.adaptations,
        emitted: r.emitted,
        oracle,
        final_stats: r.engine.stats(),
    })
}

/// Compare emissions whose edges are all still live against the oracle on
/// the engine's final snapshot.
pub fn oracle_report(engine: &Engine, queries: &[QueryGraph], emitted: &[(Embedding, u64)]) -> OracleReport {
    let store = engine.store();
    let snapshot = store.snapshot_latest();
    let seq = |id: &str| store.edge_key(id).and_then(|k| engine.edge_seq(k));
    let expected: BTreeSet<Embedding> = queries
        .iter()
        .flat_map(|q| find_all_matches_temporal_with(q, &snapshot, seq))
        .collect();
    let still_live = |e: &Embedding| {
        e.edges
            .iter()
            .all(|(_, id, ts)| snapshot.edge(id).is_some_and(|x| x.timestamp == *ts))
    };
    let got: BTreeSet<Embedding> = emitted.iter().map(|(e, _)| e).filter(|e| still_live(e)).cloned().collect();
    OracleReport {
        missing: expected.difference(&got).cloned().collect(),
        unexpected: got.difference(&expected).cloned().collect(),
    }
}

/// Matches present in the graph as of `as_of`, found from scratch. The
/// stream is applied in timestamp order (stable), mirroring the reorder
/// buffer; update-count gaps use the resulting sequence numbers.
pub fn backfill(
    queries: &[QueryGraph],
    updates: &[(usize, StreamUpdate)],
    as_of: Timestamp,
) -> Result<Vec<Embedding>, RunError> {
    let mut ordered: Vec<&(usize, StreamUpdate)> = updates.iter().filter(|(_, u)| u.timestamp <= as_of).collect();
    ordered.sort_by_key(|(_, u)| u.timestamp);
    let mut store = GraphStore::new();
    let mut seqs: BTreeMap<String, u64> = BTreeMap::new();
    for (i, (line, u)) in ordered.into_iter().enumerate() {
        store.apply_update(u).map_err(|e: StoreError| RunError::Stream {
            line: *line,
            source: e.into(),
        })?;
        if u.op == UpdateOp::Insert {
            seqs.insert(u.edge_id.clone(), i as u64 + 1);
        }
    }
    let snapshot = store.snapshot(as_of);
    let mut out = Vec::new();
    for q in queries {
        out.extend(find_all_matches_temporal_with(q, &snapshot, |id| seqs.get(id).copied()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_queries;
    use crate::stream::wire::parse_stream;
    use crate::testutil::FIG1;

    const FIG2: &str = "1\t+\tw1\talice\tAuthor\tauthored\tpaperA\tPaper\tdst.venue=ICDM;dst.year=2006
3\t+\tw2\talice\tAuthor\tauthored\tpaperB\tPaper\tdst.venue=ICDM;dst.year=2007
6\t+\tw3\talice\tAuthor\tauthored\tpaperC\tPaper\tdst.venue=KDD;dst.year=2008
";

    fn fig2() -> (Vec<QueryGraph>, Vec<(usize, StreamUpdate)>) {
        (parse_queries(FIG1).unwrap(), parse_stream(FIG2).unwrap())
    }

    #[test]
    fn fig2_run_emits_one_line() {
        let (q, s) = fig2();
        let mut out = Vec::new();
        let summary = run(&q, &s, &RunConfig { oracle_check: true, ..RunConfig::default() }, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "icdm\t6\t3\ta=alice\tp1=paperA\tp2=paperB\tp3=paperC\te1=w1@1\te2=w2@3\te3=w3@6\n"
        );
        assert!(summary.oracle.unwrap().is_clean());
        assert_eq!(summary.stats.len(), 1);
    }

    #[test]
    fn backfill_mirrors_incremental_run() {
        let (q, s) = fig2();
        assert!(backfill(&q, &s, 0).unwrap().is_empty());
        assert!(backfill(&q, &s, 3).unwrap().is_empty());
        let b = backfill(&q, &s, 6).unwrap();
        let mut out = Vec::new();
        let summary = run(&q, &s, &RunConfig::default(), &mut out).unwrap();
        assert_eq!(b, vec![summary.emitted[0].0.clone()]);
    }

    #[test]
    fn batch_and_epoch_rows() {
        let (q, s) = fig2();
        let sized = run(&q, &s, &RunConfig { batching: Batching::Size(1), ..RunConfig::default() }, &mut Vec::new()).unwrap();
        assert_eq!(sized.stats.iter().map(|r| (r.epoch, r.updates)).collect::<Vec<_>>(), [(0, 1), (1, 2), (2, 3)]);
        let epochs = run(&q, &s, &RunConfig { batching: Batching::Epoch(4), ..RunConfig::default() }, &mut Vec::new()).unwrap();
        assert_eq!(epochs.stats.iter().map(|r| (r.epoch, r.updates)).collect::<Vec<_>>(), [(0, 2), (1, 3)]);
        assert_eq!(epochs.stats[1].emitted, 1);
    }

    #[test]
    fn out_of_order_names_line() {
        let (q, mut s) = fig2();
        s[2].1.timestamp = 0;
        match run(&q, &s, &RunConfig::default(), &mut Vec::new()) {
            Err(RunError::Stream { line: 3, source: EngineError::OutOfOrderTimestamp { .. } }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn advisory_adaptation_is_reported() {
        let (q, s) = fig2();
        let cfg = RunConfig {
            adapt: Some(AdaptMode::Advisory),
            batching: Batching::Size(2),
            ..RunConfig::default()
        };
        // One hit per predicate: no gaps, nothing to recommend.
        assert!(run(&q, &s, &cfg, &mut Vec::new()).unwrap().adaptations.is_empty());
        let s = parse_stream(
            "1\t+\tx1\tal\tAuthor\tauthored\tpa\tPaper\tdst.venue=ICDM;dst.year=2006
3\t+\tx2\tal\tAuthor\tauthored\tpb\tPaper\tdst.venue=ICDM;dst.year=2006
7\t+\tx3\tal\tAuthor\tauthored\tpc\tPaper\tdst.venue=ICDM;dst.year=2006
",
        )
        .unwrap();
        let summary = run(&q, &s, &cfg, &mut Vec::new()).unwrap();
        assert_eq!(
            summary.adaptations,
            [
                "epoch 0: icdm: cluster_gap none -> recommend 2 time",
                "epoch 1: icdm: cluster_gap none -> recommend 4 time"
            ]
        );
    }
}
