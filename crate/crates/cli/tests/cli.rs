use std::path::Path;
use std::process::{Command, Output};

fn fss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "synth",
        "--seed",
        "42",
        "--out",
        dir.to_str().unwrap(),
        "--n-udas",
        "2",
        "--professors",
        "8-14",
    ];
    args.extend_from_slice(extra);
    let o = fss(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_is_deterministic_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, &[]);
    synth(&b, &[]);
    for name in [
        "taxonomy.csv",
        "researchers.csv",
        "publications.csv",
        "authorships.csv",
        "config.toml",
    ] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn single_field_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    let o = fss(&[
        "synth",
        "--out",
        p(&dir),
        "--n-udas",
        "1",
        "--n-fields",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let taxonomy = std::fs::read_to_string(dir.join("taxonomy.csv")).unwrap();
    assert_eq!(taxonomy.lines().count(), 2);
}

#[test]
fn validate_clean_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let o = fss(&["validate", "--config", p(&tmp.path().join("config.toml"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("0 errors"));
    // the generator gives some professors only two active years
    assert!(stdout(&o).contains("below minimum active years"));
}

#[test]
fn validate_reports_dangling_authorship() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), &[]);
    let path = tmp.path().join("authorships.csv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("GHOST-PUB,R00001\n");
    std::fs::write(&path, text).unwrap();
    let o = fss(&["validate", "--data", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("GHOST-PUB"), "{}", stderr(&o));
}

#[test]
fn exit_codes_for_config_and_io_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[analysis]\nhca_percentiles = [10.0, 5.0]\n").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        fss(&["run", "--config", p(&bad), "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    std::fs::write(&bad, "[cost.salary]\nprofessor = 1.0\n").unwrap();
    assert_eq!(
        fss(&["run", "--config", p(&bad), "--out", p(&out)])
            .status
            .code(),
        Some(2)
    );
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        fss(&["run", "--config", p(&missing), "--out", p(&out)])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        fss(&["validate", "--data", p(&tmp.path().join("nowhere"))])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        fss(&["synth", "--out", p(&out), "--hca-fraction", "2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        fss(&["report", "--run", p(&tmp.path().join("nowhere"))])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn run_twice_gives_identical_manifests_and_report_rerenders() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &[]);
    let config = data.join("config.toml");
    let (r1, r2) = (tmp.path().join("r1"), tmp.path().join("r2"));
    for r in [&r1, &r2] {
        let o = fss(&[
            "--log-level",
            "error",
            "run",
            "--config",
            p(&config),
            "--out",
            p(r),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let m1 = std::fs::read(r1.join("run_manifest.json")).unwrap();
    assert_eq!(m1, std::fs::read(r2.join("run_manifest.json")).unwrap());
    for ext in ["csv", "json", "md"] {
        assert!(r1.join(format!("reports/summary.{ext}")).is_file());
    }

    let re = tmp.path().join("re");
    let o = fss(&[
        "report",
        "--run",
        p(&r1),
        "--out",
        p(&re),
        "--format",
        "markdown",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(re.join("fields.md")).unwrap(),
        std::fs::read(r1.join("reports/fields.md")).unwrap()
    );
    assert!(!re.join("fields.csv").exists());
}

#[test]
fn zero_hca_corpus_runs_to_zero_indicators() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &["--hca-fraction", "0"]);
    let out = tmp.path().join("run");
    let o = fss(&[
        "run",
        "--config",
        p(&data.join("config.toml")),
        "--out",
        p(&out),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("0 top scientists"));
    let board = std::fs::read_to_string(out.join("scoreboard.csv")).unwrap();
    for line in board.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert!(cols[4..10].iter().all(|c| *c == "0"), "{line}");
    }
}
