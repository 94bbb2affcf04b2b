//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines reach stdout
//! uncaptured. Exits non-zero when a gating criterion fails; criterion 10
//! (throughput) is advisory and only reported.

use std::collections::BTreeSet;
use std::panic;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use streamsubiso::dsl::parse_bytes;
use streamsubiso::gen::{self, QueryGenConfig, StreamGenConfig, Universe};
use streamsubiso::oracle::{find_all_matches, find_all_matches_temporal_with};
use streamsubiso::stream::replay::{self, Batching, RunConfig};
use streamsubiso::synopsis::nearest_rank;
use streamsubiso::{
    parse, replay as replay_engine, unparse, AdaptMode, ClusterGap, Embedding, Endpoint, Engine, EngineConfig,
    GapUnit, MatchResult, PartialMatch, QueryGraph, StreamUpdate,
};

const DEFAULT_SEED: u64 = 0x5eed;

// Pinned limits.
const C1_TRIALS: u64 = 200;
const C1_TIME_LIMIT: Duration = Duration::from_secs(60);
const C3_SIZES: [usize; 4] = [4, 8, 16, 32];
const C3_MIN_GROWTH: f64 = 2.0;
const C3_GAP_UPDATES: u64 = 3;
const C5_TRIALS: u64 = 100;
const C6_QUERIES: usize = 10;
const C6_UPDATES: usize = 10_000;
const C6_OVERLAP: f64 = 0.6;
const C8_UPDATES: usize = 1_000;
const C8_MAX_GAP: u64 = 10;
const C8_QUANTILE: f64 = 0.5;
const C9_QUERIES: usize = 500;
const C9_FUZZ: usize = 100_000;
const C10_UPDATES: usize = 1_000_000;
const C10_SMALL: usize = 10_000;
const C10_VERTICES: usize = 200;
const C10_REFERENCE_RATE: f64 = 50_000.0;
const ADVISORY: u8 = 10;

const FIG1: &str = r#"query icdm {
  vertex a: Author;
  vertex p1: Paper(venue = "ICDM", year = 2006);
  vertex p2: Paper(venue = "ICDM", year = 2007);
  vertex p3: Paper(year >= 2008);
  edge e1: a -authored-> p1 order 1;
  edge e2: a -authored-> p2 order 2;
  edge e3: a -authored-> p3 order 3;
}"#;

const STAR: &str = "query star {
  vertex h: Hub; vertex x: Leaf; vertex y: Leaf; vertex z: Leaf;
  edge a: h -t0-> x; edge b: h -t1-> y; edge c: h -t2-> z;
}";

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn gate(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn author(id: &str) -> Endpoint {
    Endpoint::new(id, "Author")
}

fn paper(id: &str, venue: &str, year: i64) -> Endpoint {
    Endpoint::new(id, "Paper").with_attr("venue", venue).with_attr("year", year)
}

fn fig2_stream() -> Vec<StreamUpdate> {
    vec![
        StreamUpdate::insert("w1", author("alice"), "authored", paper("paperA", "ICDM", 2006), 1),
        StreamUpdate::insert("w2", author("alice"), "authored", paper("paperB", "ICDM", 2007), 3),
        StreamUpdate::insert("w3", author("alice"), "authored", paper("paperC", "KDD", 2008), 6),
    ]
}

/// Replays `stream` update by update, recording live partials after each.
fn drive(config: EngineConfig, queries: &[QueryGraph], stream: &[StreamUpdate]) -> (Engine, Vec<MatchResult>, Vec<usize>) {
    let mut e = Engine::new(config);
    for q in queries {
        e.register_query(q.clone()).expect("valid query");
    }
    let mut out = Vec::new();
    let mut live = Vec::with_capacity(stream.len());
    for u in stream {
        out.extend(e.process_update(u).expect("in-order stream"));
        live.push(e.stats().live_partials);
    }
    (e, out, live)
}

fn embeddings(e: &Engine, results: &[MatchResult]) -> BTreeSet<Embedding> {
    results.iter().map(|r| e.resolve(r).expect("registered query")).collect()
}

fn oracle(e: &Engine, q: &QueryGraph) -> BTreeSet<Embedding> {
    let store = e.store();
    find_all_matches_temporal_with(q, &store.snapshot_latest(), |id| {
        store.edge_key(id).and_then(|k| e.edge_seq(k))
    })
    .into_iter()
    .collect()
}

fn trial(seed: u64) -> (QueryGraph, Vec<StreamUpdate>) {
    let mut r = gen::rng(seed);
    let scfg = StreamGenConfig {
        vertices: r.gen_range(5..=50),
        updates: r.gen_range(20..=200),
        labels: 4,
        edge_types: 2,
        ..StreamGenConfig::default()
    };
    let qcfg = QueryGenConfig {
        max_edges: 5,
        labels: 4,
        edge_types: 2,
        ..QueryGenConfig::default()
    };
    let q = gen::random_query(&mut r, "q", &qcfg);
    (q, gen::random_stream(&mut r, &scfg))
}

fn unpruned() -> EngineConfig {
    EngineConfig {
        ordered_pruning: false,
        ..EngineConfig::default()
    }
}

fn c1_c2(seed: u64) -> (Outcome, Outcome) {
    let start = Instant::now();
    let (mut bad1, mut matches, mut bad_emit, mut bad_live) = (Vec::new(), 0, Vec::new(), Vec::new());
    let (mut live_on, mut live_off) = (0usize, 0usize);
    for t in 0..C1_TRIALS {
        let (q, s) = trial(seed.wrapping_add(t));
        let (e, out, on) = drive(EngineConfig::default(), std::slice::from_ref(&q), &s);
        let got = embeddings(&e, &out);
        let want = oracle(&e, &q);
        matches += want.len();
        if got != want || out.len() != got.len() {
            bad1.push(t);
        }
        let (e2, out2, off) = drive(unpruned(), std::slice::from_ref(&q), &s);
        if embeddings(&e2, &out2) != got {
            bad_emit.push(t);
        }
        if on.iter().zip(&off).any(|(a, b)| a > b) {
            bad_live.push(t);
        }
        live_on += on.iter().sum::<usize>();
        live_off += off.iter().sum::<usize>();
    }
    let elapsed = start.elapsed();
    let c1 = Outcome::gate(
        bad1.is_empty() && elapsed < C1_TIME_LIMIT,
        format!(
            "{C1_TRIALS} random trials, {matches} oracle matches, mismatching trials {bad1:?}, {:.1}s (limit {}s, includes the pruning-off replays)",
            elapsed.as_secs_f64(),
            C1_TIME_LIMIT.as_secs()
        ),
    );

    // Early-arriving edge that is not order-minimal.
    let q = parse(FIG1).expect("fig1");
    let early = [StreamUpdate::insert("b1", author("bob"), "authored", paper("pb", "ICDM", 2007), 1)];
    let (on, _, _) = drive(EngineConfig::default(), std::slice::from_ref(&q), &early);
    let (off, _, _) = drive(unpruned(), std::slice::from_ref(&q), &early);
    let (s_on, s_off) = (on.stats().spawns, off.stats().spawns);
    let c2 = Outcome::gate(
        bad_emit.is_empty() && bad_live.is_empty() && s_on == 0 && s_off >= 1,
        format!(
            "emissions differ in {bad_emit:?}, live(on) > live(off) in {bad_live:?}; summed live {live_on} vs {live_off}; early 2007 paper spawns {s_on} pruned vs {s_off} unpruned"
        ),
    );
    (c1, c2)
}

fn star_edge(i: usize) -> StreamUpdate {
    StreamUpdate::insert(
        format!("s{i}"),
        Endpoint::new("hub", "Hub"),
        format!("t{}", i % 3),
        Endpoint::new(format!("leaf{i}"), "Leaf"),
        i as u64,
    )
}

/// Every proper partial embedding of the star over the first `n` arrivals,
/// as sorted lists of arrival indexes. `keep` filters by arrival indexes.
fn star_subsets(n: usize, keep: impl Fn(&[usize]) -> bool) -> usize {
    let ty = |i: usize| i % 3;
    let mut count = 0;
    for i in 0..n {
        if keep(&[i]) {
            count += 1;
        }
        for j in i + 1..n {
            // Two arrivals need distinct query edges, so distinct types.
            if ty(i) != ty(j) && keep(&[i, j]) {
                count += 1;
            }
        }
    }
    count
}

fn c3() -> Outcome {
    let q = parse(STAR).expect("star");
    let mut counts = Vec::new();
    let mut exact = true;
    for &n in &C3_SIZES {
        let stream: Vec<StreamUpdate> = (0..n).map(star_edge).collect();
        let (_, _, live) = drive(EngineConfig::default(), std::slice::from_ref(&q), &stream);
        for (k, &l) in live.iter().enumerate() {
            exact &= l == star_subsets(k + 1, |_| true);
        }
        counts.push(*live.last().expect("non-empty"));
    }
    let growth: Vec<f64> = counts.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    let superlinear = growth.iter().all(|&g| g > C3_MIN_GROWTH);
    let unbounded = format!(
        "live partials {counts:?} at n={C3_SIZES:?}, equal to enumeration at every step: {exact}; growth per doubling {growth:.2?} (> {C3_MIN_GROWTH})"
    );

    // A partial survives while its newest edge is among the last
    // C3_GAP_UPDATES + 1 arrivals.
    let gated = {
        let mut g = q.clone();
        g.constraints.cluster_gap = Some(ClusterGap::updates(C3_GAP_UPDATES));
        g
    };
    let mut peaks = Vec::new();
    let mut model_peaks = Vec::new();
    for &n in &C3_SIZES {
        let stream: Vec<StreamUpdate> = (0..n).map(star_edge).collect();
        let (e, _, _) = drive(EngineConfig::default(), std::slice::from_ref(&gated), &stream);
        peaks.push(e.stats().peak_partials);
        // Declarative model: consecutive arrivals within the gap and the
        // newest within the gap of now (sequence numbers are 1-based).
        let model = (1..=n)
            .map(|now| {
                star_subsets(now, |ix| {
                    ix.windows(2).all(|w| (w[1] - w[0]) as u64 <= C3_GAP_UPDATES)
                        && (now - 1 - ix[ix.len() - 1]) as u64 <= C3_GAP_UPDATES
                })
            })
            .max()
            .unwrap_or(0);
        model_peaks.push(model);
    }
    let steady = peaks[1..].iter().all(|&p| p == peaks[1]) && peaks[0] <= peaks[1];
    let literal = peaks.iter().all(|&p| p == peaks[0]);
    Outcome::gate(
        exact && superlinear && steady && peaks == model_peaks,
        format!(
            "{unbounded}; with cluster_gap {C3_GAP_UPDATES} updates peaks {peaks:?} (model {model_peaks:?}), flat from n=8: {steady}, equal at every n including n=4: {literal}"
        ),
    )
}

fn c4() -> Outcome {
    let queries = vec![parse(FIG1).expect("fig1")];
    let updates: Vec<(usize, StreamUpdate)> = fig2_stream().into_iter().enumerate().map(|(i, u)| (i + 1, u)).collect();
    let cfg = RunConfig {
        batching: Batching::Size(1),
        ..RunConfig::default()
    };
    let mut out = Vec::new();
    let summary = replay::run(&queries, &updates, &cfg, &mut out).expect("fig2 replays");
    let text = String::from_utf8(out).expect("utf-8");
    let lines: Vec<&str> = text.lines().collect();
    let one_at_six = lines.len() == 1 && lines[0].starts_with("icdm\t6\t3\t") && summary.emitted.len() == 1;
    let mut earlier = Vec::new();
    for as_of in [0, 1, 3] {
        earlier.push(replay::backfill(&queries, &updates, as_of).expect("backfill").len());
    }
    let at_six = replay::backfill(&queries, &updates, 6).expect("backfill");
    let agree = at_six.len() == 1 && at_six[0] == summary.emitted[0].0;
    Outcome::gate(
        one_at_six && earlier.iter().all(|&n| n == 0) && agree,
        format!(
            "{} emission(s) {:?}; backfill sizes at t=0,1,3: {earlier:?}; backfill at t=6 agrees: {agree}",
            lines.len(),
            lines.first().map(|l| l.split('\t').take(3).collect::<Vec<_>>())
        ),
    )
}

type PartialKey = (Vec<Option<streamsubiso::MatchedEdge>>, Vec<Option<streamsubiso::VertexKey>>);

fn key(p: &PartialMatch) -> PartialKey {
    (p.emap.clone(), p.vmap.clone())
}

/// The expiry rule written out directly from the constraints.
fn survives(q: &QueryGraph, p: &PartialMatch, now_ts: u64, now_seq: u64) -> bool {
    let c = &q.constraints;
    if let Some(w) = c.window {
        if now_ts.saturating_sub(p.first_ts) > w {
            return false;
        }
    }
    match c.cluster_gap {
        Some(g) if g.unit == GapUnit::Time => now_ts.saturating_sub(p.last_ts) <= g.amount,
        Some(g) => now_seq.saturating_sub(p.last_update_seq) <= g.amount,
        None => true,
    }
}

fn c5(seed: u64) -> Outcome {
    let (mut calls, mut removed, mut bad) = (0u64, 0usize, BTreeSet::new());
    for t in 0..C5_TRIALS {
        let mut r = gen::rng(seed.wrapping_add(1_000 + t));
        let (mut q, s) = trial(seed.wrapping_add(1_000 + t));
        let w = r.gen_range(4..=24);
        let g = r.gen_range(1..=8);
        let (window, gap) = match r.gen_range(0..5) {
            0 => (Some(w), None),
            1 => (None, Some(ClusterGap::time(g))),
            2 => (None, Some(ClusterGap::updates(g * 3))),
            3 => (Some(w), Some(ClusterGap::time(g.min(w)))),
            _ => (Some(w), Some(ClusterGap::updates(g * 3))),
        };
        q.constraints.window = window;
        q.constraints.cluster_gap = gap;
        let mut e = Engine::default();
        let id = e.register_query(q.clone()).expect("valid");
        for u in &s {
            e.process_update(u).expect("in order");
            if e.partials(id).any(|p| !survives(&q, p, u.timestamp, e.seq())) {
                bad.insert(t);
            }
            if r.gen_bool(0.3) {
                let now_ts = u.timestamp + r.gen_range(0..=3);
                let now_seq = e.seq() + r.gen_range(0..=2);
                let before: Vec<PartialMatch> = e.partials(id).cloned().collect();
                let mut want: Vec<PartialKey> =
                    before.iter().filter(|p| survives(&q, p, now_ts, now_seq)).map(key).collect();
                let n = e.expire(now_ts, now_seq);
                let mut got: Vec<PartialKey> = e.partials(id).map(key).collect();
                want.sort();
                got.sort();
                calls += 1;
                removed += n;
                if got != want || n != before.len() - want.len() {
                    bad.insert(t);
                }
            }
        }
    }
    Outcome::gate(
        bad.is_empty(),
        format!("{C5_TRIALS} trials, {calls} explicit expire calls removing {removed} partials; disagreeing trials {bad:?}"),
    )
}

struct Suite {
    queries: Vec<QueryGraph>,
    stream: Vec<StreamUpdate>,
}

fn suite(seed: u64) -> Suite {
    let mut r = gen::rng(seed.wrapping_add(2_000));
    let qcfg = QueryGenConfig {
        max_edges: 4,
        ..QueryGenConfig::default()
    };
    let queries = gen::random_query_set(&mut r, C6_QUERIES, C6_OVERLAP, &qcfg);
    let scfg = StreamGenConfig {
        vertices: 40,
        updates: C6_UPDATES,
        max_step: 1,
        ..StreamGenConfig::default()
    };
    Suite {
        stream: gen::random_stream(&mut r, &scfg),
        queries,
    }
}

fn per_query(e: &Engine, results: &[MatchResult]) -> Vec<BTreeSet<Embedding>> {
    let all = embeddings(e, results);
    e.queries()
        .map(|(_, q)| all.iter().filter(|m| m.query == q.name).cloned().collect())
        .collect()
}

fn c6_c7(seed: u64) -> (Outcome, Outcome) {
    let s = suite(seed);
    let (shared, out) = replay_engine(EngineConfig::default(), &s.queries, &s.stream).expect("replays");
    let shared_sets = per_query(&shared, &out);
    let mut alone_sets = Vec::new();
    let mut alone_evals = 0;
    for q in &s.queries {
        let (e, out) = replay_engine(EngineConfig::default(), std::slice::from_ref(q), &s.stream).expect("replays");
        alone_evals += e.stats().predicate_evals;
        alone_sets.extend(per_query(&e, &out));
    }
    let st = shared.stats();
    let total: usize = shared_sets.iter().map(BTreeSet::len).sum();
    let c6 = Outcome::gate(
        shared_sets == alone_sets && st.predicate_evals < alone_evals,
        format!(
            "{} queries x {} updates: {total} matches, per-query sets identical: {}; predicate evaluations {} shared vs {alone_evals} standalone ({} signature buckets)",
            s.queries.len(),
            s.stream.len(),
            shared_sets == alone_sets,
            st.predicate_evals,
            shared.dispatch_index().bucket_count()
        ),
    );

    let cfg = replay::engine_config(
        &s.queries,
        &RunConfig {
            gates: true,
            ..RunConfig::default()
        },
    );
    let gated_queries = cfg.spawn_gates.len();
    let (gated, out) = replay_engine(cfg, &s.queries, &s.stream).expect("replays");
    let gated_sets = per_query(&gated, &out);
    let gs = gated.stats();
    let c7 = Outcome::gate(
        gated_sets == shared_sets && gated_queries > 0,
        format!(
            "gates on {gated_queries} queries; emissions identical: {}; peak partials {} vs {} ungated ({:+}); predicate evaluations {} vs {} ({:+}); deferred arrivals held at end {}",
            gated_sets == shared_sets,
            gs.peak_partials,
            st.peak_partials,
            gs.peak_partials as i64 - st.peak_partials as i64,
            gs.predicate_evals,
            st.predicate_evals,
            gs.predicate_evals as i64 - st.predicate_evals as i64,
            gs.deferred
        ),
    );
    (c6, c7)
}

fn c8(seed: u64) -> Outcome {
    let mut r = gen::rng(seed.wrapping_add(3_000));
    let chain = parse("query chain { vertex a: N; vertex b: N; vertex c: N; edge e1: a -t-> b; edge e2: b -t-> c; }")
        .expect("chain");
    let mut gaps = Vec::new();
    let mut ts = 0;
    let mut stream = Vec::new();
    for i in 0..C8_UPDATES {
        if i > 0 {
            let g = r.gen_range(1..=C8_MAX_GAP);
            gaps.push(g);
            ts += g;
        }
        stream.push(StreamUpdate::insert(
            format!("c{i}"),
            Endpoint::new(format!("n{i}"), "N"),
            "t",
            Endpoint::new(format!("n{}", i + 1), "N"),
            ts,
        ));
    }
    let (mut observer, _) = replay_engine(EngineConfig::default(), [&chain], &stream).expect("replays");
    let id = observer.query_id("chain").expect("registered");
    let at_max = observer.recommend_cluster_gap(id, 1.0).expect("enough data");
    let true_max = *gaps.iter().max().expect("gaps");
    let (old, set) = observer.apply_recommendation(id, C8_QUANTILE, AdaptMode::Auto).expect("enough data");
    let expected_set = nearest_rank(&mut gaps.clone(), C8_QUANTILE).expect("gaps");
    let installed = observer.query(id).and_then(|q| q.constraints.cluster_gap);

    let truth: BTreeSet<Embedding> = find_all_matches(&chain, &observer.store().snapshot_latest()).into_iter().collect();
    let max_gap = |m: &Embedding| {
        let mut t: Vec<u64> = m.edges.iter().map(|e| e.2).collect();
        t.sort_unstable();
        t.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    };
    let mut adapted = chain.clone();
    adapted.constraints.cluster_gap = installed;
    let (after, out) = replay_engine(EngineConfig::default(), [&adapted], &stream).expect("replays");
    let kept = embeddings(&after, &out);
    let lost: BTreeSet<Embedding> = truth.difference(&kept).cloned().collect();
    let predicted: BTreeSet<Embedding> = truth.iter().filter(|m| max_gap(m) > set.amount).cloned().collect();
    let frac = |n: usize| n as f64 / truth.len().max(1) as f64;
    Outcome::gate(
        at_max == true_max
            && old.is_none()
            && installed == Some(set)
            && set.amount == expected_set
            && kept.is_subset(&truth)
            && lost == predicted,
        format!(
            "q=1.0 recommends {at_max} (observed max {true_max}); q={C8_QUANTILE} installs {} {:?} (nearest rank {expected_set}); lost {}/{} = {:.4}, predicted by internal gap {:.4}",
            set.amount,
            set.unit,
            lost.len(),
            truth.len(),
            frac(lost.len()),
            frac(predicted.len())
        ),
    )
}

/// 0-based line and character column of byte `offset`.
fn position(bytes: &[u8], offset: usize) -> Option<(usize, usize)> {
    let prefix = std::str::from_utf8(bytes.get(..offset)?).ok()?;
    let line = prefix.matches('\n').count();
    let column = prefix.rsplit('\n').next().map_or(0, |l| l.chars().count());
    Some((line, column))
}

fn c9(seed: u64) -> Outcome {
    let mut r = gen::rng(seed.wrapping_add(4_000));
    let mut texts = Vec::new();
    let mut bad_rt = 0;
    for i in 0..C9_QUERIES {
        let cfg = QueryGenConfig {
            max_edges: r.gen_range(1..=8),
            labels: r.gen_range(1..=4),
            edge_types: r.gen_range(1..=3),
            predicate_prob: r.gen_range(0.0..0.8),
            ..QueryGenConfig::default()
        };
        let q = gen::random_query(&mut r, &format!("q{i}"), &cfg);
        let text = unparse(&q);
        if parse(&text).as_ref() != Ok(&q) {
            bad_rt += 1;
        }
        texts.push(text);
    }

    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let (mut panics, mut unspanned, mut accepted) = (0, 0, 0);
    for i in 0..C9_FUZZ {
        let bytes: Vec<u8> = if i % 2 == 0 {
            let len = r.gen_range(0..64);
            (0..len).map(|_| r.gen()).collect()
        } else {
            let mut b = texts.choose(&mut r).expect("texts").clone().into_bytes();
            for _ in 0..r.gen_range(1..=3) {
                let at = r.gen_range(0..=b.len());
                match r.gen_range(0..3) {
                    0 if at < b.len() => b[at] = r.gen(),
                    1 if at < b.len() => {
                        b.remove(at);
                    }
                    _ => b.insert(at, *b"{};:->=\"( ".choose(&mut r).expect("bytes")),
                }
            }
            b
        };
        match panic::catch_unwind(|| parse_bytes(&bytes)) {
            Err(_) => panics += 1,
            Ok(Ok(_)) => accepted += 1,
            Ok(Err(e)) => {
                if position(&bytes, e.span.offset) != Some((e.span.line, e.span.column)) {
                    unspanned += 1;
                }
            }
        }
    }
    panic::set_hook(hook);
    Outcome::gate(
        bad_rt == 0 && panics == 0 && unspanned == 0,
        format!(
            "{C9_QUERIES} generated queries, {bad_rt} round-trip failures; {C9_FUZZ} fuzz inputs: {panics} panics, {unspanned} errors with inconsistent spans, {accepted} accepted"
        ),
    )
}

fn c10(seed: u64) -> Outcome {
    let mut r = gen::rng(seed.wrapping_add(5_000));
    let qcfg = QueryGenConfig::default();
    let queries: Vec<QueryGraph> = (0..10)
        .map(|i| loop {
            let shapes: Vec<_> = (0..3).map(|_| gen::random_shape(&mut r, &qcfg)).collect();
            let mut q = gen::query_from_shapes(&mut r, &format!("q{i}"), &shapes, &qcfg);
            // Time-based expiry only, so a repeated timestamp expires nothing.
            if q.constraints.cluster_gap.is_some_and(|g| g.unit == GapUnit::Updates) {
                q.constraints.cluster_gap = None;
                q.constraints.window.get_or_insert(qcfg.window.1);
            }
            if q.validate().is_ok() {
                break q;
            }
        })
        .collect();
    let universe = Universe::new(&mut r, C10_VERTICES, qcfg.labels, 4);
    let mut e = Engine::default();
    for q in &queries {
        e.register_query(q.clone()).expect("valid");
    }
    let mut ts = 0;
    let idle_cost = |e: &mut Engine, ts: u64, tag: &str| {
        let noise = |i: usize| {
            StreamUpdate::insert(format!("noise-{tag}-{i}"), universe.endpoint(0), "unused", universe.endpoint(1), ts)
        };
        e.process_update(&noise(0)).expect("in order");
        let before = e.stats().ops;
        e.process_update(&noise(1)).expect("in order");
        e.stats().ops - before
    };
    let start = Instant::now();
    let mut small = 0;
    for i in 0..C10_UPDATES {
        ts += r.gen_range(0..=1);
        let (a, b) = (r.gen_range(0..universe.len()), r.gen_range(0..universe.len()));
        if a == b {
            continue;
        }
        let u = StreamUpdate::insert(
            format!("e{i}"),
            universe.endpoint(a),
            format!("t{}", r.gen_range(0..qcfg.edge_types)),
            universe.endpoint(b),
            ts,
        )
        .with_attr("x", r.gen_range(0..4i64));
        e.process_update(&u).expect("in order");
        if i + 1 == C10_SMALL {
            small = idle_cost(&mut e, ts, "small");
        }
    }
    let elapsed = start.elapsed();
    let large = idle_cost(&mut e, ts, "large");
    let st = e.stats();
    let rate = st.updates as f64 / elapsed.as_secs_f64();
    Outcome {
        pass: small == large && rate >= C10_REFERENCE_RATE,
        detail: format!(
            "(advisory) {} updates, 10 three-edge queries: {rate:.0} updates/s (reference {C10_REFERENCE_RATE:.0}), {} matches, peak partials {}; ops for a non-matching update {small} at {} edges vs {large} at {} edges",
            st.updates,
            st.emitted,
            st.peak_partials,
            C10_SMALL,
            e.store().live_edge_count()
        ),
    }
}

fn main() -> ExitCode {
    let seed = gen::seed_from_env(DEFAULT_SEED);
    println!("acceptance (seed {seed})");
    let mut results: Vec<(u8, Outcome)> = Vec::new();
    let (c1, c2) = c1_c2(seed);
    results.push((1, c1));
    results.push((2, c2));
    results.push((3, c3()));
    results.push((4, c4()));
    results.push((5, c5(seed)));
    let (c6, c7) = c6_c7(seed);
    results.push((6, c6));
    results.push((7, c7));
    results.push((8, c8(seed)));
    results.push((9, c9(seed)));
    results.push((10, c10(seed)));
    let mut failed = false;
    for (n, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {tag}  {}", o.detail);
        failed |= !o.pass && *n != ADVISORY;
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
