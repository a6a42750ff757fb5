use std::process::{Command, Output};

fn loopcft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loopcft"))
        .args(args)
        .env_remove("LOOPCFT_Q")
        .env_remove("LOOPCFT_Q_GRID")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn show_config_is_json() {
    let o = loopcft(&["show-config", "--ns", "41"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bootstrap"]["n_s"], 41);
    assert_eq!(v["bootstrap"]["n_t"], 12);
    assert_eq!(v["lattice_sizes"], serde_json::json!([5, 7, 9, 11]));
}

#[test]
fn bootstrap_ratio_row() {
    let o = loopcft(&["ratio", "bootstrap", "--q", "2", "--bc", "wired"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "q,bc,ratio_bootstrap,ratio_closed_form,ratio_lattice_per_L,ratio_extrapolated_deg2,ratio_extrapolated_deg3,crossing_residual,flag"
    );
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let closed: f64 = rows[0][3].parse().unwrap();
    let boot: f64 = rows[0][2].parse().unwrap();
    assert!((closed - 2f64.sqrt()).abs() < 1e-13);
    assert!((boot * closed - 1.0).abs() < 1e-6);
    assert_eq!(rows[0][8], "");
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("r{i}.csv"))).collect();
    for p in &paths {
        let o = loopcft(&["ratio", "bootstrap", "--q-grid", "2.5,1.5", "--bc", "both", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let (a, b) = (std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    // ordered by q, then bc
    let keys: Vec<&str> = text.lines().skip(1).map(|l| &l[..l.match_indices(',').nth(1).unwrap().0]).collect();
    assert_eq!(keys, ["1.50000000000000e0,free", "1.50000000000000e0,wired", "2.50000000000000e0,free", "2.50000000000000e0,wired"]);
}

#[test]
fn empty_grid_gives_empty_report() {
    let o = loopcft(&["ratio", "compare"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn near_four_is_flagged() {
    let o = loopcft(&["ratio", "bootstrap", "--q", "3.95", "--bc", "wired"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let flags = csv_rows(&o)[0][8].clone();
    assert_eq!(flags, "near-q4-log-corrections");
    let err = String::from_utf8(o.stderr).unwrap();
    let levels: Vec<serde_json::Value> =
        err.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["level"].clone()).collect();
    assert!(levels.contains(&serde_json::json!("warning")));
}

#[test]
fn lattice_ratio_with_extrapolation_as_json() {
    let o = loopcft(&["ratio", "compare", "--q", "2", "--bc", "wired", "--sizes", "3,5,7", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["ratio_lattice_per_L"].as_object().unwrap().len(), 3);
    let deg2 = v["ratio_extrapolated_deg2"].as_f64().unwrap();
    let boot = v["ratio_bootstrap"].as_f64().unwrap();
    assert!((deg2 / boot - 1.0).abs() < 0.02, "{deg2} vs {boot}");
    assert!(v["ratio_extrapolated_deg3"].is_null());
}

#[test]
fn environment_overrides() {
    let o = Command::new(env!("CARGO_BIN_EXE_loopcft"))
        .args(["ratio", "bootstrap", "--bc", "wired"])
        .env("LOOPCFT_Q_GRID", "1.5")
        .env("LOOPCFT_FORMAT", "json")
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["q"], 1.5);
}

#[test]
fn invalid_input_exits_with_error_record() {
    let o = loopcft(&["ratio", "lattice", "--q", "2", "--sizes", "4,6"]);
    assert_eq!(o.status.code(), Some(2));
    let rec: serde_json::Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(rec["level"], "error");
    let o = loopcft(&["ratio", "bootstrap", "--q", "4.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn checks_pass() {
    let o = loopcft(&["lattice-bruteforce", "-L", "3", "--rows", "2", "--q", "2", "--bc", "free"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("(pass)"));
    let o = loopcft(&["lattice-bruteforce", "-L", "3", "--rows", "3", "--q", "3.25", "--bc", "cylinder"]);
    assert!(o.status.success());
    let o = loopcft(&["blocks-check", "--q", "2.5"]);
    assert!(o.status.success());
}

#[test]
fn gfun_single_row() {
    let o = loopcft(&["gfun", "--bc", "wired", "--q", "2", "--sigma", "0.5"]);
    assert!(o.status.success());
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 1);
    let g: f64 = rows[0][1].parse().unwrap();
    // exact Ising: λ (σ(1-σ))^{-1/8} [√((1+s)/2) + √((1-s)/2)], s = √(1-σ)
    let s = 0.5f64.sqrt();
    let shape = 0.25f64.powf(-0.125) * (((1.0 + s) / 2.0).sqrt() + ((1.0 - s) / 2.0).sqrt());
    let lambda = 0.774833560;
    assert!((g / (lambda * shape) - 1.0).abs() < 1e-8, "{g}");
}
