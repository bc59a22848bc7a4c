use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn finsenti(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsenti"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = finsenti(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn copy_dir(from: &Path, to: &Path) {
    for f in files_under(from) {
        let dest = to.join(f.strip_prefix(from).unwrap());
        std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
        std::fs::copy(&f, dest).unwrap();
    }
}

#[test]
fn bundled_fixtures_match_the_generator() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&["synth", "--out", s(tmp.path())]);
    let bundled = files_under(&fixtures());
    let fresh = files_under(tmp.path());
    let rel = |v: &[PathBuf], base: &Path| -> Vec<PathBuf> {
        v.iter().map(|p| p.strip_prefix(base).unwrap().to_path_buf()).collect()
    };
    assert_eq!(rel(&bundled, &fixtures()), rel(&fresh, tmp.path()));
    for (a, b) in bundled.iter().zip(&fresh) {
        assert!(std::fs::read(a).unwrap() == std::fs::read(b).unwrap(), "{} differs", a.display());
    }
}

#[test]
fn single_stages_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures();
    let cfg = fx.join("config.toml");
    let out = |name: &str| tmp.path().join(name);
    let f = |name: &str| fx.join(name);

    ok(&["tokenize", "--config", s(&cfg), "--input", s(&f("corpus.jsonl")), "--out", s(&out("tokens.txt"))]);
    let tokens = std::fs::read_to_string(out("tokens.txt")).unwrap();
    assert!(tokens.lines().next().unwrap().contains('\t'));

    ok(&[
        "train", "--config", s(&cfg), "--epochs", "2", "--out", s(&out("model.txt")), "--loss-log",
        s(&out("loss.csv")),
    ]);
    let loss = std::fs::read_to_string(out("loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss,learning_rate\n"));
    assert_eq!(loss.lines().count(), 4);

    ok(&["score-words", "--config", s(&cfg), "--model", s(&out("model.txt")), "--out", s(&out("cache.tsv"))]);
    ok(&[
        "score-articles", "--config", s(&cfg), "--cache", s(&out("cache.tsv")), "--out",
        s(&out("scores.csv")),
    ]);
    assert!(std::fs::read_to_string(out("scores.csv"))
        .unwrap()
        .starts_with("id,date,score,scored_word_count,missed_word_count,degenerate\n"));

    ok(&["factor", "--scores", s(&out("scores.csv")), "--window", "5", "--out", s(&out("factor.csv"))]);
    let factor = std::fs::read_to_string(out("factor.csv")).unwrap();
    assert!(factor.starts_with("date,value,kind,window,n_articles\n"));
    assert!(factor.contains(",adjusted,5,"));

    let report = ok(&["analyze", "--config", s(&cfg), "--factor", s(&out("factor.csv")), "--returns", "--baselines", "temperature"]);
    let report = String::from_utf8(report.stdout).unwrap();
    assert!(report.starts_with("factor_kind,target,rho,slope,intercept,t,p,n\n"), "{report}");
    assert!(report.contains("\nadjusted_5,index_returns,"));
    assert!(report.contains("\ntemperature,index,"));

    ok(&[
        "baseline", "--config", s(&cfg), "--factor", s(&out("factor.csv")), "--trials", "50", "--baselines",
        "random", "--out", s(&out("baselines.csv")),
    ]);
    let baselines = std::fs::read_to_string(out("baselines.csv")).unwrap();
    assert_eq!(baselines.lines().count(), 3);
    assert!(baselines.contains("random_uniform,index,"));

    ok(&["plot", "--config", s(&cfg), "--factor", s(&out("factor.csv")), "--out", s(&out("chart.svg"))]);
    let svg = std::fs::read_to_string(out("chart.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn pipeline_manifest_reruns_and_detects_changed_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    copy_dir(&fixtures(), &data);
    let run = tmp.path().join("run");
    ok(&["pipeline", "--config", s(&data.join("config.toml")), "--out", s(&run), "--trials", "100"]);
    for f in [
        "tokens.txt", "model.txt", "train_loss.csv", "cache.tsv", "word_accuracy.json", "article_scores.csv",
        "factor.csv", "report.csv", "baselines.csv", "chart.svg", "config.toml", "manifest.json",
    ] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    let seeds = manifest["stage_seeds"].as_object().unwrap();
    assert!(seeds.contains_key("train") && seeds.contains_key("baseline"), "{seeds:?}");

    let factor = std::fs::read(run.join("factor.csv")).unwrap();
    ok(&["pipeline", "--from-manifest", s(&run.join("manifest.json")), "--stage", "factor"]);
    assert_eq!(std::fs::read(run.join("factor.csv")).unwrap(), factor);

    let market = data.join("market.csv");
    let mut text = std::fs::read_to_string(&market).unwrap();
    text.push_str("2031-01-02,1.0\n");
    std::fs::write(&market, text).unwrap();
    let out = finsenti(&["pipeline", "--from-manifest", s(&run.join("manifest.json")), "--stage", "analyze"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("market"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = finsenti(&["plot", "--factor", "/nonexistent/factor.csv", "--market", "/nonexistent/m.csv", "--out", s(&tmp.path().join("c.svg"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `plot` failed") && err.contains("/nonexistent/"), "{err}");

    assert_eq!(finsenti(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(finsenti(&["baseline", "--baselines", "lunar"]).status.code(), Some(2));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[score]\nn = 3\nm = 9\n").unwrap();
    let out = finsenti(&["pipeline", "--config", s(&bad), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn version_names_the_backend() {
    let out = ok(&["--version"]);
    let v = String::from_utf8(out.stdout).unwrap();
    assert!(v.contains("rayon") || v.contains("sequential"), "{v}");
}
