use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mdl-relu"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# generated: "));
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let text = std::fs::read_to_string(path).unwrap();
    let data: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(data.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            assert_eq!(rec.len(), headers.len());
            rec
        })
        .collect()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    let idx = header.split(',').position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows(path).iter().map(|r| r[idx].parse().unwrap()).collect()
}

const SMALL_CURVE: &str = r#"{
    "d": 2, "m": 60, "n_list": [50, 400], "alpha": 2.0, "trials": 12,
    "mc_samples": 5000, "renyi_samples": 2000
}"#;

#[test]
fn risk_curve_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "curve.json", SMALL_CURVE);
    let out = dir.path().join("curve.csv");
    let mut bodies = Vec::new();
    for threads in ["1", "1", "3"] {
        let o = run(&[
            "risk-curve",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "17",
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(body(&out));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0], bodies[2]);
    assert!(bodies[0].lines().next().unwrap().starts_with("# config: {"));
    assert!(bodies[0].contains("\"seed\":17"));
}

#[test]
fn risk_curve_rows_respect_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "curve.json", SMALL_CURVE);
    let out = dir.path().join("curve.csv");
    let o = run(&["risk-curve", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let risk = column(&out, "risk_mean");
    let thm3 = column(&out, "bound_thm3");
    let terms: Vec<Vec<f64>> =
        ["term_log", "term_c", "term_dim", "term_tail"].iter().map(|c| column(&out, c)).collect();
    assert_eq!(risk.len(), 2);
    for i in 0..risk.len() {
        assert!(risk[i] >= 0.0 && risk[i] <= thm3[i]);
        let sum: f64 = terms.iter().map(|t| t[i]).sum();
        assert!((sum - thm3[i]).abs() <= 1e-12 * thm3[i].abs().max(1.0));
    }
    assert_eq!(column(&out, "lambda_order"), vec![0.5, 0.5]);
}

#[test]
fn exact_basis_curve_uses_corollary_terms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "curve.json",
        r#"{"d": 2, "m": 40, "n_list": [200], "trials": 6, "mc_samples": 20000, "renyi_samples": 1000,
            "basis": "exact", "D_override": 6}"#,
    );
    let out = dir.path().join("exact.csv");
    let o = run(&["risk-curve", "--config", cfg.to_str().unwrap(), "--seed", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&out, "D"), vec![6.0]);
    assert_eq!(column(&out, "eps1"), vec![0.0]);
    let cor1 = column(&out, "bound_cor1")[0];
    let sum: f64 = ["term_log", "term_c", "term_dim", "term_tail"].iter().map(|c| column(&out, c)[0]).sum();
    assert!((sum - cor1).abs() <= 1e-12 * cor1.abs().max(1.0));
    assert!(column(&out, "risk_mean")[0] <= cor1);
}

#[test]
fn spectrum_share_and_side_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.csv");
    let cfg = write_config(dir.path(), "s.json", r#"{"d": 4, "m": 4000, "mc_samples": 100000, "save_fim": true}"#);
    let o = run(&["spectrum", "--config", cfg.to_str().unwrap(), "--seed", "8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec.json")).unwrap()).unwrap();
    assert_eq!(json["D"], 14);
    assert!(json["beta_at_D"].as_f64().unwrap() <= 0.05, "{}", json["beta_at_D"]);
    assert_eq!(json["config"]["seed"], 8);
    let cum = column(&out, "cumulative_share");
    assert!(cum[13] >= 0.95);
    let fimj = std::fs::read(dir.path().join("spec.fimj")).unwrap();
    assert_eq!(&fimj[..4], b"FIMJ");
    assert_eq!(fimj.len(), 16 + 8 * 4000 * 4000);
}

#[test]
fn code_table_kraft_and_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("code.csv");
    let o = run(&["code-table", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("code.json")).unwrap()).unwrap();
    assert!((json["kraft_sum"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(json["code"]["D"], 5);
    let q = column(&out, "q");
    let len = column(&out, "length_nats");
    for (q, l) in q.iter().zip(&len) {
        assert!((q.ln() - l).abs() < 1e-12);
    }
}

#[test]
fn estimate_dump_and_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.json");
    let cfg =
        write_config(dir.path(), "e.json", r#"{"m": 80, "n": 300, "mc_samples": 5000, "method": "nearest_plane"}"#);
    let o = run(&["estimate", "--config", cfg.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let est = &json["estimate"];
    for key in ["theta_hat", "theta_ddot", "objective", "neg_log_lik", "code_length_nats", "method", "clamped"] {
        assert!(!est[key].is_null(), "{key}");
    }
    assert_eq!(est["method"], "nearest_plane");
    let obj = est["objective"].as_f64().unwrap();
    let nll = est["neg_log_lik"].as_f64().unwrap();
    let len = est["code_length_nats"].as_f64().unwrap();
    assert_eq!(obj, nll + 2.0 * len);
    let model = mdl_relu::NetworkModel::from_json(&std::fs::read_to_string(dir.path().join("fit.model.json")).unwrap())
        .unwrap();
    assert_eq!(model.m(), 80);
    let data =
        mdl_relu::Dataset::read_csv(&model, std::fs::File::open(dir.path().join("fit.data.csv")).unwrap()).unwrap();
    assert_eq!(data.n(), 300);
}

#[test]
fn gram_check_sweeps_widths() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gram.csv");
    let cfg = write_config(dir.path(), "g.json", r#"{"d": 3, "m_list": [100, 400, 1600]}"#);
    let o = run(&["gram-check", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&out, "m"), vec![100.0, 400.0, 1600.0]);
    assert!(column(&out, "eps1").iter().all(|e| *e > 0.0 && e.is_finite()));
}

#[test]
fn redundancy_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("red.csv");
    let cfg =
        write_config(dir.path(), "r.json", r#"{"m": 60, "n_list": [100, 1000], "trials": 20, "mc_samples": 5000}"#);
    let o = run(&["redundancy", "--config", cfg.to_str().unwrap(), "--seed", "6", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mean = column(&out, "redundancy_mean");
    let se = column(&out, "redundancy_se");
    let thm3n = column(&out, "bound_thm3_times_n");
    for i in 0..2 {
        assert!(mean[i] + 3.0 * se[i] >= 0.0);
        assert!(mean[i] <= thm3n[i]);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();

    // Missing seed.
    assert_eq!(run(&["code-table", "--out", out]).status.code(), Some(2));
    // Malformed and invalid configs.
    let bad = write_config(dir.path(), "bad.json", "{ not json");
    assert_eq!(run(&["code-table", "--config", bad.to_str().unwrap(), "--seed", "1"]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "unknown.json", r#"{"alpah": 3}"#);
    assert_eq!(run(&["code-table", "--config", unknown.to_str().unwrap(), "--seed", "1"]).status.code(), Some(2));
    let alpha = write_config(dir.path(), "alpha.json", r#"{"alpha": 0.5}"#);
    assert_eq!(run(&["code-table", "--config", alpha.to_str().unwrap(), "--seed", "1"]).status.code(), Some(2));
    // Unreadable config and unwritable output.
    assert_eq!(run(&["code-table", "--config", "/nonexistent/c.json", "--seed", "1"]).status.code(), Some(4));
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let under_file = blocker.join("out.csv");
    assert_eq!(run(&["code-table", "--seed", "1", "--out", under_file.to_str().unwrap()]).status.code(), Some(4));
    // A noise variance this large overflows the bound terms.
    let huge = write_config(
        dir.path(),
        "huge.json",
        r#"{"m": 20, "sigma2": 1e308, "n_list": [10], "trials": 2, "mc_samples": 100}"#,
    );
    let o = run(&["redundancy", "--config", huge.to_str().unwrap(), "--seed", "1", "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn library_entry_point_validates() {
    let cfg = mdl_relu_cli::ExperimentConfig::default();
    let err = mdl_relu_cli::run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
