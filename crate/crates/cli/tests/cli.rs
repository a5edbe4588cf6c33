//! End-to-end runs of the `pbc` binary: determinism of the generate/build
//! pipeline, query ranking over a planted pair, format equivalence, and the
//! attack-cost presets.

use std::path::Path;
use std::process::{Command, Output};

fn pbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbc"))
        .args(args)
        .output()
        .expect("spawn pbc")
}

fn ok(args: &[&str]) -> String {
    let out = pbc(args);
    assert!(
        out.status.success(),
        "pbc {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_deterministic_and_rebuild_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = dir.path().join("a.jsonl");
    let c2 = dir.path().join("b.jsonl");
    for out in [&c1, &c2] {
        ok(&[
            "gen", "--out", path_str(out), "--docs", "80", "--pool", "800", "--seed", "7",
        ]);
    }
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());

    let i1 = dir.path().join("a.idx");
    let i2 = dir.path().join("b.idx");
    ok(&[
        "--threads", "1", "build", "--corpus", path_str(&c1), "--k", "2", "--out", path_str(&i1),
    ]);
    ok(&[
        "--threads", "4", "build", "--corpus", path_str(&c2), "--k", "2", "--out", path_str(&i2),
    ]);
    assert_eq!(std::fs::read(&i1).unwrap(), std::fs::read(&i2).unwrap());
}

#[test]
fn planted_copy_surfaces_its_source() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    ok(&[
        "gen", "--out", path_str(&corpus), "--docs", "100", "--pool", "2000",
        "--planted", "3", "--overlap", "8", "--seed", "5",
    ]);

    let index = dir.path().join("corpus.idx");
    ok(&[
        "build", "--corpus", path_str(&corpus), "--k", "2", "--out", path_str(&index),
    ]);

    // Query with the first planted copy; its source must be the top
    // candidate other than the copy itself.
    let text = std::fs::read_to_string(&corpus).unwrap();
    let plg = text
        .lines()
        .find(|l| l.contains("\"plg0000\""))
        .expect("planted record");
    let query = dir.path().join("query.jsonl");
    std::fs::write(&query, plg).unwrap();

    let report = ok(&[
        "query", "--index", path_str(&index), "--query", path_str(&query),
    ]);
    let top_other = report
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap())
        .find(|id| *id != "plg0000")
        .expect("a candidate besides the query doc");
    assert_eq!(top_other, "src0000", "report:\n{report}");
}

#[test]
fn query_json_and_text_agree_on_ranking() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    ok(&[
        "gen", "--out", path_str(&corpus), "--docs", "40", "--pool", "400", "--seed", "13",
    ]);
    let index = dir.path().join("corpus.idx");
    ok(&[
        "build", "--corpus", path_str(&corpus), "--k", "1", "--out", path_str(&index),
    ]);
    let text = std::fs::read_to_string(&corpus).unwrap();
    let query = dir.path().join("query.jsonl");
    std::fs::write(&query, text.lines().next().unwrap()).unwrap();

    let plain = ok(&[
        "query", "--index", path_str(&index), "--query", path_str(&query),
    ]);
    let json = ok(&[
        "query", "--index", path_str(&index), "--query", path_str(&query), "--json",
    ]);
    let plain_ids: Vec<&str> = plain
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap())
        .collect();
    let json_ids: Vec<String> = json
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["doc_id_b"].as_str().unwrap().to_string()
        })
        .collect();
    assert_eq!(plain_ids, json_ids);
    assert!(!plain_ids.is_empty());
}

#[test]
fn tei_directory_matches_equivalent_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let tei_dir = dir.path().join("tei");
    std::fs::create_dir(&tei_dir).unwrap();
    let xml = |titles: &[&str]| -> String {
        let bibls: String = titles
            .iter()
            .map(|t| format!("<biblStruct><analytic><title>{t}</title></analytic></biblStruct>"))
            .collect();
        format!("<TEI><text><back><listBibl>{bibls}</listBibl></back></text></TEI>")
    };
    std::fs::write(tei_dir.join("p1.xml"), xml(&["Alpha Beta", "Gamma"])).unwrap();
    std::fs::write(tei_dir.join("p2.xml"), xml(&["Gamma", "Delta Four"])).unwrap();

    let jsonl = dir.path().join("same.jsonl");
    std::fs::write(
        &jsonl,
        concat!(
            r#"{"id":"p1","refs":[{"title":"Alpha Beta"},{"title":"Gamma"}]}"#,
            "\n",
            r#"{"id":"p2","refs":[{"title":"Gamma"},{"title":"Delta Four"}]}"#,
            "\n",
        ),
    )
    .unwrap();

    let from_tei = dir.path().join("from_tei.jsonl");
    let from_jsonl = dir.path().join("from_jsonl.jsonl");
    let stats_tei = ok(&[
        "ingest", path_str(&tei_dir), "--format", "tei", "--k", "1",
        "--out", path_str(&from_tei),
    ]);
    let stats_jsonl = ok(&[
        "ingest", path_str(&jsonl), "--k", "1", "--out", path_str(&from_jsonl),
    ]);
    assert_eq!(stats_tei, stats_jsonl);
    assert!(stats_tei.contains("documents loaded:   2"));
    assert!(stats_tei.contains("unique references:  3"));

    // The normalized corpora must hash identically, so an index built from
    // either input is the same file.
    let i1 = dir.path().join("t.idx");
    let i2 = dir.path().join("j.idx");
    ok(&["build", "--corpus", path_str(&from_tei), "--k", "1", "--out", path_str(&i1)]);
    ok(&["build", "--corpus", path_str(&from_jsonl), "--k", "1", "--out", path_str(&i2)]);
    assert_eq!(std::fs::read(&i1).unwrap(), std::fs::read(&i2).unwrap());
}

#[test]
fn attack_dblp_preset_reproduces_reference_rows() {
    let json = ok(&["attack", "--dblp-preset", "--json"]);
    let rows: Vec<serde_json::Value> = serde_json::from_str(&json).unwrap();
    assert_eq!(rows.len(), 3);
    let by_k = |k: u64| {
        rows.iter()
            .find(|r| r["k"] == serde_json::json!(k))
            .unwrap()
            .clone()
    };
    let secs = |k: u64| by_k(k)["runtime_seconds"].as_f64().unwrap();
    assert!((secs(1) - 5_050.0).abs() / 5_050.0 < 0.01);
    let years2 = secs(2) / 31_557_600.0;
    assert!((years2 - 404.0).abs() / 404.0 < 0.01, "{years2}");
    let years3 = secs(3) / 31_557_600.0;
    assert!((years3 - 6.8e8).abs() / 6.8e8 < 0.01, "{years3}");
    assert!(by_k(1)["runtime_human"].as_str().unwrap().contains('h'));
}

#[test]
fn attack_budget_prints_crossover_per_k() {
    let out = ok(&["attack", "--budget-hours", "100", "--ks", "3"]);
    let n: u64 = out
        .split("universes of ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((1250..=1350).contains(&n), "{out}");
}

#[test]
fn collisions_at_full_width_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    ok(&[
        "gen", "--out", path_str(&corpus), "--docs", "30", "--pool", "300", "--seed", "3",
    ]);
    let out = ok(&[
        "collisions", "--corpus", path_str(&corpus), "--k", "2", "--width", "160",
    ]);
    assert_eq!(out.trim(), "0");
}

#[test]
fn malformed_corpus_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"id":"good","refs":[{"title":"a"}]}"#,
            "\n",
            "this is not json\n",
        ),
    )
    .unwrap();
    let out = pbc(&[
        "build", "--corpus", path_str(&corpus), "--k", "1",
        "--out", path_str(&dir.path().join("x.idx")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains('2'), "stderr should name line 2:\n{err}");
}
