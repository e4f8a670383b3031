//! Runs the `dualmem` binary end to end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dualmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a small synthetic data set into `dir` via the `synth` command.
fn synth(dir: &Path, dispersion: f64) -> PathBuf {
    let spec = dir.join("spec.conf");
    fs::write(
        &spec,
        format!("corpus_size = 400\nclusters = 4\nqueries = 8\ndispersion = {dispersion}\n"),
    )
    .unwrap();
    let data = dir.join("data");
    let out = dualmem(&[
        "synth",
        "--spec",
        s(&spec),
        "--seed",
        "5",
        "--out",
        s(&data),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    data
}

#[test]
fn index_reports_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    fs::write(
        &good,
        "{\"id\":\"a\",\"embedding\":[3,4]}\n{\"id\":\"b\",\"embedding\":[1,0]}\n{\"id\":\"c\",\"embedding\":[0,2]}\n",
    )
    .unwrap();
    let out = dualmem(&["index", "--corpus", s(&good)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["records"], 3);
    assert_eq!(report["dimension"], 2);
    assert_eq!(report["input_norms"]["max"], 5.0);

    let dup = dir.path().join("dup.jsonl");
    fs::write(
        &dup,
        "{\"id\":\"a\",\"embedding\":[1,0]}\n{\"id\":\"a\",\"embedding\":[0,1]}\n",
    )
    .unwrap();
    let out = dualmem(&["index", "--corpus", s(&dup)]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("line 2") && stderr(&out).contains("`a`"),
        "{}",
        stderr(&out)
    );

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = dualmem(&["index", "--corpus", s(&empty)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("empty corpus"));

    let out = dualmem(&["index"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn query_routes_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 0.5);
    let corpus = data.join("corpus.jsonl");
    let queries = data.join("queries.jsonl");

    let out = dualmem(&[
        "query",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--trace",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 8);
    for (i, v) in lines.iter().enumerate() {
        assert_eq!(v["query_id"], format!("q{i}"));
        assert!(v["wall_time_us"].is_u64());
        assert_eq!(v["ranked"].as_array().unwrap().len(), 10);
    }

    let forced = dualmem(&[
        "query",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--theta-low",
        "1.0",
        "--theta-high",
        "1.0",
        "--trace",
    ]);
    assert_eq!(code(&forced), 0, "{}", stderr(&forced));
    for l in stdout(&forced).lines() {
        let v: Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["path"], "recollection");
        assert!(v["trace"]["rounds"]
            .as_array()
            .is_some_and(|r| !r.is_empty()));
    }

    // A huge entropy threshold sends every mid-band query to familiarity.
    let mid = dualmem(&[
        "query",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--theta-low",
        "-1",
        "--theta-high",
        "1.5",
        "--tau",
        "1e9",
    ]);
    assert_eq!(code(&mid), 0);
    assert!(stdout(&mid)
        .lines()
        .all(|l| l.contains("\"path\":\"familiarity\"")));
}

#[test]
fn query_output_is_reproducible_and_records_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 0.5);
    let config = dir.path().join("run.conf");
    fs::write(&config, "k = 7\nbeam = 2\nforce_path = recollection\n").unwrap();
    let run = |name: &str| {
        let out_file = dir.path().join(name);
        let out = dualmem(&[
            "query",
            "--corpus",
            s(&data.join("corpus.jsonl")),
            "--queries",
            s(&data.join("queries.jsonl")),
            "--config",
            s(&config),
            "--k",
            "5",
            "--seed",
            "9",
            "--no-timing",
            "--threads",
            "1",
            "--out",
            s(&out_file),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out_file
    };
    let a = run("a.jsonl");
    let b = run("b.jsonl");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let text = fs::read_to_string(&a).unwrap();
    assert!(!text.contains("wall_time_us"));
    assert!(text
        .lines()
        .all(|l| l.contains("\"path\":\"recollection\"")));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.manifest.json")).unwrap())
            .unwrap();
    // Flags win over the config file, which wins over defaults.
    assert_eq!(manifest["config"]["k"], 5);
    assert_eq!(manifest["config"]["beam"], 2);
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["config"]["fanout"], 2);
    assert_eq!(manifest["recollect"]["final_k"], 5);
    assert_eq!(manifest["succeeded"], 8);
}

#[test]
fn query_isolates_bad_lines() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    fs::write(
        &corpus,
        "{\"id\":\"a\",\"embedding\":[1,0]}\n{\"id\":\"b\",\"embedding\":[0,1]}\n",
    )
    .unwrap();
    let queries = dir.path().join("q.jsonl");
    fs::write(
        &queries,
        "{\"query_id\":\"ok\",\"embedding\":[1,1]}\nnot json\n{\"query_id\":\"wide\",\"embedding\":[1,0,0]}\n",
    )
    .unwrap();
    let out = dualmem(&["query", "--corpus", s(&corpus), "--queries", s(&queries)]);
    assert_eq!(code(&out), 0);
    let lines: Vec<Value> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["query_id"], "ok");
    assert_eq!(lines[1]["line"], 2);
    assert!(lines[1]["error"].is_string());
    assert_eq!(lines[2]["query_id"], "wide");
    assert!(lines[2]["error"].as_str().unwrap().contains("dimension"));

    fs::write(&queries, "{\"query_id\":\"wide\",\"embedding\":[1,0,0]}\n").unwrap();
    let out = dualmem(&["query", "--corpus", s(&corpus), "--queries", s(&queries)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn eval_writes_comparable_reports() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 0.0);
    let mut headers = Vec::new();
    for path in ["familiarity", "recollection", "gated"] {
        let out_dir = dir.path().join(path);
        let out = dualmem(&[
            "eval",
            "--corpus",
            s(&data.join("corpus.jsonl")),
            "--queries",
            s(&data.join("queries.jsonl")),
            "--gold",
            s(&data.join("gold.json")),
            "--force-path",
            path,
            "--recall-at",
            "6,10",
            "--out",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let metrics: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap())
                .unwrap();
        if path == "familiarity" {
            assert_eq!(metrics["overall"]["recall@6"], 1.0);
            assert_eq!(metrics["overall"]["recall@10"], 1.0);
        }
        let csv = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
        let mut rows = csv.lines();
        headers.push(rows.next().unwrap().to_string());
        assert!(rows.next().unwrap().starts_with(path));
        assert_eq!(
            fs::read_to_string(out_dir.join("results.jsonl"))
                .unwrap()
                .lines()
                .count(),
            8
        );
        let latency: Value =
            serde_json::from_str(&fs::read_to_string(out_dir.join("latency.json")).unwrap())
                .unwrap();
        assert_eq!(latency["counter_mismatches"].as_array().unwrap().len(), 0);
        assert!(out_dir.join("manifest.json").exists());
    }
    assert!(headers.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn eval_requires_gold() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    fs::write(&corpus, "{\"id\":\"a\",\"embedding\":[1,0]}\n").unwrap();
    let queries = dir.path().join("q.jsonl");
    fs::write(&queries, "{\"query_id\":\"q\",\"embedding\":[1,0]}\n").unwrap();
    let out = dualmem(&["eval", "--corpus", s(&corpus), "--queries", s(&queries)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing gold"));

    // Gold carried on the query line is enough; retrieving it gives recall 1.
    fs::write(
        &queries,
        "{\"query_id\":\"q\",\"embedding\":[1,0],\"gold\":[\"a\"]}\n",
    )
    .unwrap();
    let out = dualmem(&[
        "eval",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--recall-at",
        "1,5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let metrics: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(metrics["overall"]["recall@1"], 1.0);
    assert_eq!(metrics["overall"]["recall@5"], 1.0);
}

#[test]
fn sweep_emits_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), 0.5);
    let grid = dir.path().join("grid.conf");
    fs::write(&grid, "alpha = 0, 0.5, 1\ntau = 0.1, 0.3\n").unwrap();
    let out = dualmem(&[
        "sweep",
        "--corpus",
        s(&data.join("corpus.jsonl")),
        "--queries",
        s(&data.join("queries.jsonl")),
        "--grid",
        s(&grid),
        "--no-timing",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = stdout(&out);
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("alpha,tau,beam"));
    assert!(!csv.contains("mean_wall_us"));
}

#[test]
fn synth_is_deterministic_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.conf");
    fs::write(&spec, "corpus_size = 1000\ndimension = 32\nclusters = 8\n").unwrap();
    let gen = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = dualmem(&[
            "synth",
            "--spec",
            s(&spec),
            "--seed",
            "3",
            "--out",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        out_dir
    };
    let (a, b) = (gen("a"), gen("b"));
    for f in [
        "corpus.jsonl",
        "queries.jsonl",
        "gold.json",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(
        fs::read_to_string(a.join("corpus.jsonl"))
            .unwrap()
            .lines()
            .count(),
        1000
    );

    fs::write(&spec, "dispersion = 1.5\n").unwrap();
    let out = dualmem(&[
        "synth",
        "--spec",
        s(&spec),
        "--out",
        s(&dir.path().join("c")),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("dispersion"));
}

#[test]
fn gate_stats_rows_replay_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let same: String = (0..20)
        .map(|i| format!("{{\"id\":\"m{i:02}\",\"embedding\":[1,1,0]}}\n"))
        .collect();
    fs::write(&corpus, same).unwrap();
    let queries = dir.path().join("q.jsonl");
    fs::write(
        &queries,
        "{\"query_id\":\"a\",\"embedding\":[1,0,0]}\n{\"query_id\":\"b\",\"embedding\":[0,0,1]}\n{\"query_id\":\"c\",\"embedding\":[1,1,0.2]}\n",
    )
    .unwrap();
    let out_dir = dir.path().join("stats");
    let out = dualmem(&[
        "gate-stats",
        "--corpus",
        s(&corpus),
        "--queries",
        s(&queries),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let csv = fs::read_to_string(out_dir.join("gate_stats.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    let (theta_high, theta_low, tau) = (0.6, 0.3, 0.2);
    for row in &rows {
        let mean: f64 = row[1].parse().unwrap();
        let h: f64 = row[2].parse().unwrap();
        // Identical memories: every probe score equals the mean, so the distribution is uniform.
        assert!((h - 10f64.ln()).abs() < 1e-9);
        let expect = if mean >= theta_high || (mean > theta_low && h <= tau) {
            "familiarity"
        } else {
            "recollection"
        };
        assert_eq!(row[3], expect);
    }
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 0.0);

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let mut means: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    means.sort_by(f64::total_cmp);
    let median = summary["mean"]["median"].as_f64().unwrap();
    assert!((median - means[1]).abs() < 1e-8);
    assert_eq!(summary["queries"], 3);
}
