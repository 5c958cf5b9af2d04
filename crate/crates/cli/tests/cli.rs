use std::path::Path;
use std::process::{Command, Output};

use dpsbound_core::{untrusted_point, AmplitudeDistribution, AttackParams};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn single_point_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&[
        "untrusted",
        "--mu",
        "0.2",
        "--pad",
        "500",
        "--m-max",
        "25",
        "--q-steps",
        "1",
        "--m-min",
        "5",
        "5",
        "--dist",
        "flat",
        "--out",
        out,
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let points = rows(&read(dir.path().join("untrusted_points.csv")));
    assert_eq!(points.len(), 1);
    let params = AttackParams::new(0.2, 5, 25, 1.0, 500).unwrap();
    let lib = untrusted_point(&params, &AmplitudeDistribution::flat(), None).unwrap();
    assert_eq!(points[0][0], "5");
    assert_eq!(points[0][2], format!("{:.11e}", lib.gain));
    assert_eq!(points[0][3], format!("{:.11e}", lib.qber));
    assert_eq!(points[0][5], "");
}

#[test]
fn preset_frontier_has_schema_and_distances_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&[
        "untrusted",
        "--preset",
        "fig-untrusted-mu0.2-d500",
        "--gamma",
        "0.2",
        "--out",
        out,
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let frontier = read(dir.path().join("untrusted_frontier.csv"));
    assert_eq!(
        frontier.lines().next().unwrap(),
        "m_min,q,gain,qber,dc_rate,distance_km,frontier_kind"
    );
    let body = rows(&frontier);
    assert!(body.len() > 100);
    assert!(body.iter().all(|r| r[6] == "min_qber" && !r[5].is_empty()));
    let manifest: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(manifest["command"], "untrusted");
    assert_eq!(manifest["config"]["dist"], "optimal");
}

#[test]
fn trusted_preset_writes_one_curve_per_photon_number() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = run(&[
        "trusted",
        "--preset",
        "fig-trusted-mu0.17-d50",
        "--q-steps",
        "11",
        "--out",
        out,
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for m in 1..=3 {
        let points = rows(&read(dir.path().join(format!("trusted_m{m}_points.csv"))));
        assert_eq!(points.len(), 49 * 11);
        for r in &points {
            let qber: f64 = r[3].parse().unwrap();
            assert!((0.0..=0.5 + 1e-9).contains(&qber), "{qber}");
        }
        let kinds: std::collections::BTreeSet<String> =
            rows(&read(dir.path().join(format!("trusted_m{m}_frontier.csv"))))
                .into_iter()
                .map(|r| r[6].clone())
                .collect();
        assert_eq!(kinds.into_iter().collect::<Vec<_>>(), ["min_dc", "min_qber"]);
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let res = run(&[
        "trusted",
        "--mu",
        "0.3",
        "--pad",
        "8",
        "--p-dark",
        "1e-4",
        "--eta-det",
        "0.2",
        "--photon-number",
        "2",
        "--q-steps",
        "5",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let second = dir.path().join("b");
    let config = first.join("trusted_config.toml");
    let res = run(&[
        "trusted",
        "--config",
        config.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["trusted_m2_points.csv", "trusted_m2_frontier.csv"] {
        assert_eq!(read(first.join(name)), read(second.join(name)));
    }
}

#[test]
fn m_max_beyond_dead_time_is_rejected() {
    let res = run(&[
        "trusted",
        "--mu",
        "0.2",
        "--pad",
        "5",
        "--m-max",
        "6",
        "--p-dark",
        "0",
        "--eta-det",
        "1",
    ]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("one click"));
}

#[test]
fn bad_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "mu = 0.2\npadding = 3\n").unwrap();
    let res = run(&["untrusted", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 2") && err.contains("padding"), "{err}");
}

#[test]
fn missing_inputs_and_unknown_names_are_config_errors() {
    assert_eq!(code(&run(&["untrusted", "--pad", "5"])), 2);
    assert_eq!(code(&run(&["untrusted", "--preset", "nope"])), 2);
    assert_eq!(
        code(&run(&["untrusted", "--mu", "0.2", "--pad", "5", "--dist", "zigzag"])),
        2
    );
    assert_eq!(code(&run(&["trusted", "--preset", "fig-untrusted-mu0.2-d50"])), 2);
}

#[test]
fn oracle_is_deterministic_and_agrees_at_low_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "oracle".to_string(),
            "--scenario".into(),
            "trusted".into(),
            "--eta-det".into(),
            "0.05".into(),
            "--p-dark".into(),
            "1e-3".into(),
            "--pad".into(),
            "5".into(),
            "--m-min".into(),
            "2".into(),
            "2".into(),
            "--pulses".into(),
            "200000".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let argv = args(out.to_str().unwrap());
        let res = run(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    }
    let report = |dir: &Path| -> serde_json::Value {
        let mut v: serde_json::Value = serde_json::from_str(&read(dir.join("oracle_report.json"))).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(report(&a), report(&b));
}

#[test]
fn oracle_untrusted_default_point_agrees() {
    let res = run(&["oracle", "--pulses", "200000"]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stdout));
    assert!(String::from_utf8_lossy(&res.stdout).contains("agree"));
}

#[test]
fn oracle_rejects_ranges() {
    assert_eq!(code(&run(&["oracle", "--m-min", "2", "4"])), 2);
}

#[test]
fn presets_list_and_show() {
    let list = run(&["presets", "list"]);
    assert_eq!(code(&list), 0);
    assert_eq!(String::from_utf8_lossy(&list.stdout).lines().count(), 8);
    let show = run(&["presets", "show", "fig-trusted-mu0.2-d500"]);
    assert_eq!(code(&show), 0);
    let text = String::from_utf8_lossy(&show.stdout);
    assert!(text.contains("p_dark") && text.contains("pad = 500"));
    assert_eq!(code(&run(&["presets", "show", "nope"])), 2);
}

#[test]
fn custom_distribution_file() {
    let dir = tempfile::tempdir().unwrap();
    let dist = dir.path().join("dist.toml");
    std::fs::write(
        &dist,
        "[coefficients]\n\"1\" = [1.0]\n\"2\" = [0.6, 0.8]\n\"3\" = [0.5, 0.70710678118654752, 0.5]\n",
    )
    .unwrap();
    let spec = format!("custom:{}", dist.display());
    let out = dir.path().join("out");
    let res = run(&[
        "untrusted",
        "--mu",
        "0.2",
        "--pad",
        "10",
        "--m-max",
        "3",
        "--dist",
        &spec,
        "--q-steps",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(rows(&read(out.join("untrusted_points.csv"))).len(), 6);
    let res = run(&[
        "untrusted",
        "--mu",
        "0.2",
        "--pad",
        "10",
        "--m-max",
        "4",
        "--dist",
        &spec,
    ]);
    assert_eq!(code(&res), 2);
}

#[test]
fn oracle_disagreement_exits_four() {
    // At unit efficiency the mean-field offset model overstates the gain by ~3%.
    let res = run(&["oracle", "--scenario", "trusted", "--pulses", "200000"]);
    assert_eq!(code(&res), 4, "{}", String::from_utf8_lossy(&res.stdout));
    assert!(String::from_utf8_lossy(&res.stdout).contains("DISAGREE"));
}
