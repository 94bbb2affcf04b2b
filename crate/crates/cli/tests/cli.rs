use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const FIG1: &str = r#"query icdm {
  vertex a: Author;
  vertex p1: Paper(venue = "ICDM", year = 2006);
  vertex p2: Paper(venue = "ICDM", year = 2007);
  vertex p3: Paper(year >= 2008);
  edge e1: a -authored-> p1 order 1;
  edge e2: a -authored-> p2 order 2;
  edge e3: a -authored-> p3 order 3;
}
"#;

const FIG2: &str = "1\t+\tw1\talice\tAuthor\tauthored\tpaperA\tPaper\tdst.venue=ICDM;dst.year=2006
3\t+\tw2\talice\tAuthor\tauthored\tpaperB\tPaper\tdst.venue=ICDM;dst.year=2007
6\t+\tw3\talice\tAuthor\tauthored\tpaperC\tPaper\tdst.venue=KDD;dst.year=2008
";

const MATCH: &str = "a=alice\tp1=paperA\tp2=paperB\tp3=paperC\te1=w1@1\te2=w2@3\te3=w3@6";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_streamsubiso"))
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str], q: &Path, s: &Path) -> Output {
    bin()
        .arg("run")
        .arg("--queries")
        .arg(q)
        .arg("--stream")
        .arg(s)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn fig2_emits_one_record_at_six() {
    let f = Fixture::new();
    let o = run(&["--oracle-check"], &f.file("q", FIG1), &f.file("s", FIG2));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), format!("icdm\t6\t3\t{MATCH}\n"));
}

#[test]
fn decreasing_timestamp_exits_two_with_line() {
    let f = Fixture::new();
    let s = f.file("s", "5\t+\tx\ta\tA\tt\tb\tB\n# note\n4\t+\ty\ta\tA\tt\tb\tB\n");
    let o = run(&[], &f.file("q", FIG1), &s);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn slack_absorbs_small_disorder() {
    let f = Fixture::new();
    let s = f.file("s", "5\t+\tx\ta\tA\tt\tb\tB\n4\t+\ty\ta\tA\tt\tb\tB\n");
    let o = run(&["--reorder-slack", "1"], &f.file("q", FIG1), &s);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn duplicate_edge_id_exits_two() {
    let f = Fixture::new();
    let s = f.file("s", "1\t+\tx\ta\tA\tt\tb\tB\n2\t+\tx\ta\tA\tt\tb\tB\n");
    let o = run(&[], &f.file("q", FIG1), &s);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"));
}

#[test]
fn query_parse_error_names_position() {
    let f = Fixture::new();
    let q = f.file("bad.q", "query x {\n  vertex a: A;\n  edge e: a -t-> zz;\n}\n");
    let o = run(&[], &q, &f.file("s", FIG2));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.q:3:18:"), "{}", stderr(&o));
}

#[test]
fn malformed_stream_line_is_a_parse_error() {
    let f = Fixture::new();
    let s = f.file("bad.s", "1\t+\tx\ta\tA\tt\tb\tB\nnot a record\n");
    let o = run(&[], &f.file("q", FIG1), &s);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.s:2:1:"), "{}", stderr(&o));
}

#[test]
fn backfill_matches_incremental_run() {
    let f = Fixture::new();
    let (q, s) = (f.file("q", FIG1), f.file("s", FIG2));
    let at = |t: &str| {
        let o = bin()
            .args(["backfill", "--as-of", t, "--queries"])
            .arg(&q)
            .arg("--stream")
            .arg(&s)
            .output()
            .unwrap();
        assert!(o.status.success());
        stdout(&o)
    };
    assert_eq!(at("0"), "");
    assert_eq!(at("3"), "");
    assert_eq!(at("6"), format!("icdm\t6\t0\t{MATCH}\n"));
}

fn generate(f: &Fixture, seed: &str, extra: &[&str]) -> (PathBuf, PathBuf) {
    let qpath = f.path(&format!("gen{seed}.q"));
    let o = bin()
        .args(["generate", "--seed", seed, "--vertices", "20", "--updates", "400", "--queries", "4", "--queries-out"])
        .arg(&qpath)
        .args(extra)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    (qpath, f.file(&format!("gen{seed}.s"), &stdout(&o)))
}

#[test]
fn oracle_check_passes_on_random_replays() {
    let f = Fixture::new();
    for seed in ["1", "2", "3", "4", "5"] {
        let (q, s) = generate(&f, seed, &[]);
        for flags in [&[][..], &["--gates", "auto"], &["--ordered-pruning", "off"], &["--batch-size", "7"]] {
            let o = run(&[&["--oracle-check"][..], flags].concat(), &q, &s);
            assert_eq!(o.status.code(), Some(0), "seed {seed} {flags:?}: {}", stderr(&o));
        }
    }
}

#[test]
fn oracle_check_with_deletions() {
    let f = Fixture::new();
    let (q, s) = generate(&f, "9", &["--delete-prob", "0.2"]);
    let o = run(&["--oracle-check"], &q, &s);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn seed_env_is_honoured() {
    let out = |env: Option<&str>| {
        let mut c = bin();
        c.args(["generate", "--updates", "20"]);
        match env {
            Some(v) => c.env("STREAMSUBISO_SEED", v),
            None => c.env_remove("STREAMSUBISO_SEED"),
        };
        stdout(&c.output().unwrap())
    };
    assert_eq!(out(Some("42")), out(Some("42")));
    assert_ne!(out(Some("42")), out(Some("43")));
    assert_eq!(out(None), out(Some("0")));
}

#[test]
fn output_is_deterministic_and_batching_neutral() {
    let f = Fixture::new();
    let (q, s) = generate(&f, "6", &[]);
    let a = stdout(&run(&[], &q, &s));
    assert_eq!(a, stdout(&run(&[], &q, &s)));
    assert!(!a.is_empty());
    let set = |t: &str| t.lines().map(str::to_string).collect::<BTreeSet<_>>();
    assert_eq!(set(&a), set(&stdout(&run(&["--batch-size", "1"], &q, &s))));
    assert_eq!(set(&a), set(&stdout(&run(&["--epoch", "10"], &q, &s))));
}

#[test]
fn stats_file_has_one_row_per_batch() {
    let f = Fixture::new();
    let st = f.path("stats.tsv");
    let o = run(
        &["--batch-size", "1", "--stats-out", st.to_str().unwrap()],
        &f.file("q", FIG1),
        &f.file("s", FIG2),
    );
    assert!(o.status.success());
    let text = fs::read_to_string(st).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch\tupdates\tlive_partials\tpeak_partials\temitted\texpired\tpredicate_evals");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2\t3\t"));
}

#[test]
fn auto_adaptation_reports_changes() {
    let f = Fixture::new();
    let (q, s) = generate(&f, "8", &[]);
    let o = run(&["--adapt", "auto", "--batch-size", "100"], &q, &s);
    assert!(o.status.success());
    assert!(stderr(&o).contains("-> set "), "{}", stderr(&o));
}
