use std::fs;
use std::path::Path;
use std::process::Command;

use cellfree_irs::channel::Geometry;
use cellfree_irs::exp::{run, summarize, RunOptions};

const BIN: &str = env!("CARGO_BIN_EXE_cellfree-irs");

/// Scaled scenario spec: three BSs, two UEs, two IRSs with `n_h = 8`.
fn spec_json(sweep: &str, values: &str, schemes: &str, n_seeds: usize, n: usize) -> String {
    let geometry = serde_json::to_string(&Geometry::reference(3, 2, 200.0 / 3.0)).unwrap();
    format!(
        r#"{{
  "base": {{"l": 3, "k": 2, "r": 2, "m_b": 4, "m_u": 2, "n": {n}, "n_h": 8, "n_v": {nv}}},
  "geometry": {geometry},
  "sweep": "{sweep}",
  "sweep_values": {values},
  "schemes": {schemes},
  "n_seeds": {n_seeds},
  "master_seed": 7
}}"#,
        nv = n / 8
    )
}

fn write_spec(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, text).unwrap();
    path
}

fn options(out: &Path) -> RunOptions {
    RunOptions { out_dir: Some(out.to_path_buf()), ..RunOptions::default() }
}

#[test]
fn minimal_spec_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &spec_json("ue_center_x", "[66.6666666667]", r#"[{"solver": "ASO"}]"#, 1, 8));
    let report = run(&spec, options(&dir.path().join("out"))).unwrap();
    assert_eq!(report.rows.len(), 1);
    let text = fs::read_to_string(&report.results_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sweep_param,value,scheme,seed,sum_rate_bits,iterations,wall_ms,converged");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("ue_center_x,66.6666666667,ASO,0,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.manifest).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 7);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let schemes = r#"[{"solver": "ASO"}, {"solver": "DISCRETE", "levels": 2}, {"solver": "NONE"}]"#;
    let spec = write_spec(dir.path(), &spec_json("reflecting_efficiency", "[0.5, 1]", schemes, 3, 8));
    let a = run(&spec, RunOptions { threads: Some(1), ..options(&dir.path().join("a")) }).unwrap();
    let b = run(&spec, RunOptions { threads: Some(4), ..options(&dir.path().join("b")) }).unwrap();
    assert_eq!(a.rows.len(), 18);
    assert_eq!(fs::read(&a.results_csv).unwrap(), fs::read(&b.results_csv).unwrap());
}

#[test]
fn seed_override_changes_draws() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &spec_json("ue_center_x", "[60]", r#"[{"solver": "RANDOM"}]"#, 2, 8));
    let a = run(&spec, options(&dir.path().join("a"))).unwrap();
    let b = run(&spec, RunOptions { master_seed: Some(8), ..options(&dir.path().join("b")) }).unwrap();
    assert_ne!(a.rows[0].sum_rate_bits, b.rows[0].sum_rate_bits);
}

#[test]
fn adding_a_scheme_keeps_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let one = write_spec(dir.path(), &spec_json("ue_center_x", "[60]", r#"[{"solver": "ASO"}]"#, 2, 8));
    let a = run(&one, options(&dir.path().join("a"))).unwrap();
    let two = write_spec(dir.path(), &spec_json("ue_center_x", "[60]", r#"[{"solver": "NONE"}, {"solver": "ASO"}]"#, 2, 8));
    let b = run(&two, options(&dir.path().join("b"))).unwrap();
    let aso: Vec<f64> = b.rows.iter().filter(|r| r.scheme == "ASO").map(|r| r.sum_rate_bits).collect();
    assert_eq!(aso, a.rows.iter().map(|r| r.sum_rate_bits).collect::<Vec<_>>());
}

#[test]
fn phase_shift_sweep_trend() {
    let dir = tempfile::tempdir().unwrap();
    let schemes = r#"[{"solver": "ASO"}, {"solver": "RANDOM"}, {"solver": "NONE"}]"#;
    let spec = write_spec(dir.path(), &spec_json("n_phase_shifts", "[8, 16, 32]", schemes, 20, 8));
    let report = run(&spec, options(dir.path())).unwrap();
    assert_eq!(report.rows.len(), 180);
    let summary = summarize(fs::File::open(&report.results_csv).unwrap()).unwrap();
    let aso: Vec<f64> = summary.iter().filter(|r| r.scheme == "ASO").map(|r| r.mean_bits).collect();
    assert_eq!(aso.len(), 3);
    assert!(aso.windows(2).all(|w| w[1] > w[0]), "{aso:?}");
    assert!(summary.iter().all(|r| r.n_seeds == 20));
}

#[test]
fn efficiency_sweep_trend() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &spec_json("reflecting_efficiency", "[0.2, 0.6, 1]", r#"[{"solver": "ASO"}]"#, 20, 8));
    let report = run(&spec, options(dir.path())).unwrap();
    let summary = summarize(fs::File::open(&report.results_csv).unwrap()).unwrap();
    let means: Vec<f64> = summary.iter().map(|r| r.mean_bits).collect();
    assert!(means.windows(2).all(|w| w[1] > w[0]), "{means:?}");
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn cli_run_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), &spec_json("ue_center_x", "[60]", r#"[{"solver": "NONE"}]"#, 2, 8));
    let out = dir.path().join("out");
    let (code, _, err) = cli(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2", "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    let (code, summary, _) = cli(&["summarize", out.join("results.csv").to_str().unwrap()]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "sweep_param,value,scheme,mean_bits,stderr_bits,n_seeds");
    assert!(lines[1].starts_with("ue_center_x,60,NONE,") && lines[1].ends_with(",2"));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_spec(dir.path(), "{\n  \"sweep\": 3\n}");
    let (code, _, err) = cli(&["run", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("line 2"), "{err}");

    let invalid = write_spec(dir.path(), &spec_json("ue_center_x", "[]", r#"[{"solver": "ASO"}]"#, 1, 8));
    assert_eq!(cli(&["run", invalid.to_str().unwrap()]).0, 2);
    assert_eq!(cli(&["run", "/nonexistent/spec.json"]).0, 2);

    let good = write_spec(dir.path(), &spec_json("ue_center_x", "[60]", r#"[{"solver": "NONE"}]"#, 1, 8));
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let (code, _, _) = cli(&["run", good.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(code, 3);

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "sweep_param,value,scheme,seed,sum_rate_bits,iterations,wall_ms,converged\nx,1,A,zero,1,1,0,true\n").unwrap();
    let (code, _, err) = cli(&["summarize", broken.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("row 2"), "{err}");
}
