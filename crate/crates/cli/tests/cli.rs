use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn sandwich(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sandwich"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("missing {key} in\n{report}"))
}

fn floats(s: &str) -> Vec<f64> {
    s.split(',').filter(|t| !t.is_empty()).map(|t| t.parse().unwrap()).collect()
}

fn json_lines(text: &str) -> Vec<serde_json::Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn lab_bundled_table() {
    let o = sandwich(&["lab", "--table", data("table_2x2.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lambda = floats(field(&out, "lambda"));
    assert_eq!(lambda.len(), 1);
    assert!((lambda[0] - 1.0 / 6.0).abs() < 1e-12);
    assert!(floats(field(&out, "lambda_star"))[0].abs() < 1e-12);
    assert_eq!(field(&out, "violations"), "0");
    assert_eq!(field(&out, "version"), env!("CARGO_PKG_VERSION"));
}

#[test]
fn lab_identity_keeps_spectrum() {
    let o = sandwich(&["lab", "--table", data("table_2x2_identity.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let (l, ls) = (floats(field(&out, "lambda")), floats(field(&out, "lambda_star")));
    assert_eq!(l.len(), ls.len());
    for (a, b) in l.iter().zip(&ls) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn lab_orbit_constant_table_keeps_trace() {
    let o = sandwich(&["lab", "--table", data("table_orbit_constant.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "shared_conditional"), "true");
    let (t, ts): (f64, f64) = (field(&out, "trace_K").parse().unwrap(), field(&out, "trace_Kstar").parse().unwrap());
    assert!((t - ts).abs() < 1e-12);
}

#[test]
fn lab_corrupted_table_reports_line() {
    let o = sandwich(&["lab", "--table", data("corrupted_2x2.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("corrupted_2x2.toml, line 5"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn lab_writes_out_file_and_config_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let o = sandwich(&[
        "lab",
        "--config",
        data("example.toml").to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(&out).unwrap();
    assert!(field(&report, "config.table").ends_with("table_pair_swap.toml"));
    assert_eq!(field(&report, "config.seed"), "9");
}

#[test]
fn lab_rejects_unknown_config_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[lab]\ntable = \"x.toml\"\ntabel = 3\n").unwrap();
    let o = sandwich(&["lab", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn qr_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = sandwich(&["qr", "--kind", "da", "--seed", "42", "--iters", "10000", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (
            fs::read(out.join("trace_0.csv")).unwrap(),
            fs::read(out.join("summary.jsonl")).unwrap(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a.0, b.0);
    assert!(a.0.starts_with(b"iteration,beta_1"));
    assert_eq!(String::from_utf8_lossy(&a.0).lines().count(), 10_001);
    let strip = |s: &[u8]| String::from_utf8_lossy(s).replace("/a\"", "").replace("/b\"", "");
    assert_eq!(strip(&a.1), strip(&b.1));
}

#[test]
fn qr_chains_use_distinct_streams() {
    let dir = tempfile::tempdir().unwrap();
    let o = sandwich(&[
        "qr", "--chains", "3", "--iters", "300", "--max-lag", "10", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traces: Vec<Vec<u8>> = (0..3).map(|k| fs::read(dir.path().join(format!("trace_{k}.csv"))).unwrap()).collect();
    assert_ne!(traces[0], traces[1]);
    assert_ne!(traces[1], traces[2]);
    let lines = json_lines(&fs::read_to_string(dir.path().join("summary.jsonl")).unwrap());
    let streams: Vec<u64> = lines.iter().filter_map(|v| v["chain"]["stream_id"].as_u64()).collect();
    assert_eq!(streams, vec![0, 1, 2]);
}

#[test]
fn qr_sandwich_rejects_non_median() {
    let o = sandwich(&["qr", "--kind", "sandwich", "--r", "0.25"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("r = 1/2"), "{}", stderr(&o));
}

#[test]
fn qr_rank_deficient_design_fails() {
    let o = sandwich(&["qr", "--data", data("rank_deficient.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("full column rank"), "{}", stderr(&o));
}

#[test]
fn qr_non_median_warns() {
    let o = sandwich(&["qr", "--r", "0.25", "--iters", "200", "--max-lag", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn qr_sandwich_matches_quadrature() {
    let o = sandwich(&[
        "qr", "--kind", "sandwich", "--seed", "42", "--iters", "20000", "--data", data("reference.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines = json_lines(&stdout(&o));
    let coord = &lines[0]["chain"]["coordinates"][0];
    let mean = coord["mean"].as_f64().unwrap();
    let se = coord["mcse"].as_f64().unwrap();
    let oracle = lines[1]["quadrature"]["mean"][0].as_f64().unwrap();
    assert!((mean - oracle).abs() < 3.0 * se, "mean {mean} oracle {oracle} se {se}");
    assert_eq!(lines[0]["config"]["kind"], "sandwich");
    assert_eq!(lines[0]["seed"], 42);
}

#[test]
fn qr_record_config_reproduces_output() {
    let first = sandwich(&["qr", "--seed", "5", "--iters", "400", "--max-lag", "20", "--thin", "2"]);
    assert_eq!(first.status.code(), Some(0));
    let rec = &json_lines(&stdout(&first))[0]["config"];
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("replay.toml");
    fs::write(
        &cfg,
        format!(
            "[qr]\nkind = {}\nr = {}\nseed = {}\nchains = {}\niters = {}\nburnin = {}\nthin = {}\nmax_lag = {}\n",
            rec["kind"], rec["r"], rec["seed"], rec["chains"], rec["iters"], rec["burnin"], rec["thin"], rec["max_lag"]
        ),
    )
    .unwrap();
    let second = sandwich(&["qr", "--config", cfg.to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0), "{}", stderr(&second));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn bounds_bundled_instance() {
    let o = sandwich(&["bounds", "--instance", data("bounds_p3n4.toml").to_str().unwrap(), "--samples", "20000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = &json_lines(&stdout(&o))[0];
    assert!(v["report"]["margin"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["config"]["mode"], "instance");
}

#[test]
fn bounds_zero_x1() {
    let o = sandwich(&["bounds", "--instance", data("bounds_x1_zero.toml").to_str().unwrap(), "--samples", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json_lines(&stdout(&o))[0]["report"];
    assert_eq!(r["recursive_bound"].as_f64(), Some(0.0));
    assert_eq!(r["empirical_sup"].as_f64(), Some(0.0));
}

#[test]
fn bounds_design_mode() {
    let o = sandwich(&["bounds", "--mode", "design", "--data", data("reference.csv").to_str().unwrap(), "--samples", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = &json_lines(&stdout(&o))[0]["report"];
    assert!(r["empirical_sup"].as_f64().unwrap() <= r["recursive_bound"].as_f64().unwrap());
}

#[test]
fn bounds_instance_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.toml");
    fs::write(&f, "x1 = [1.0, 2.0]\nothers = [[1.0]]\n").unwrap();
    let o = sandwich(&["bounds", "--instance", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(sandwich(&["bogus"]).status.code(), Some(1));
    assert_eq!(sandwich(&["qr", "--iters", "many"]).status.code(), Some(1));
    assert_eq!(sandwich(&[]).status.code(), Some(1));
    assert_eq!(sandwich(&["--help"]).status.code(), Some(0));
    assert_eq!(sandwich(&["--version"]).status.code(), Some(0));
}
