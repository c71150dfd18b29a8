use std::path::PathBuf;
use std::process::Command;

fn case(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/{name}.m"))
}

fn flier() -> Command {
    Command::new(env!("CARGO_BIN_EXE_flier"))
}

#[test]
fn completed_sweep_writes_reports() {
    let out = tempfile::tempdir().unwrap();
    let status = flier()
        .args(["run", "--case"])
        .arg(case("case57"))
        .args(["--pmus", "4,13,34", "--events", "merges", "--seed", "3", "--noise", "1e-4"])
        .args(["--filter", "lenient:2", "--timing-repeats", "1", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["records.csv", "cdf.csv", "scores.csv", "filter.csv", "summary.json", "timing.csv", "timing.json"] {
        assert!(out.path().join(name).is_file(), "{name}");
    }

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap()).unwrap();
    let events = summary["events"].as_f64().unwrap();
    let top1 = summary["top1"].as_f64().unwrap();
    assert_eq!(summary["filter"], "lenient:2");

    let mut cdf = csv::Reader::from_path(out.path().join("cdf.csv")).unwrap();
    let first = cdf.records().next().unwrap().unwrap();
    assert_eq!(&first[0], "1");
    assert!((first[1].parse::<f64>().unwrap() - top1 / events).abs() < 1e-12);

    let mut filter = csv::Reader::from_path(out.path().join("filter.csv")).unwrap();
    let headers = filter.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "skipped_fraction").unwrap();
    for row in filter.records() {
        let f: f64 = row.unwrap()[col].parse().unwrap();
        assert!((0.0..1.0).contains(&f));
    }
}

#[test]
fn config_errors_exit_nonzero() {
    let out = tempfile::tempdir().unwrap();
    let bad = [
        vec!["--pmus", "nowhere"],
        vec!["--events", "storms"],
        vec!["--filter", "lenient:0"],
        vec!["--noise=-1"],
        vec!["--pmus", "9999"],
    ];
    for extra in bad {
        let status = flier()
            .args(["run", "--case"])
            .arg(case("case57"))
            .args(&extra)
            .arg("--out")
            .arg(out.path())
            .status()
            .unwrap();
        assert!(!status.success(), "{extra:?}");
    }
    let missing = flier()
        .args(["run", "--case", "/nonexistent/case.m", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert!(!missing.success());
}
