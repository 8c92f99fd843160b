use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cfdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfdim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn empty_invocation_prints_usage() {
    let out = cfdim(&[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn predict_geometric_two() {
    let v = json_of(&cfdim(&[
        "predict",
        "--phi",
        "geometric:2",
        "--weights",
        "1,1",
    ]));
    assert_eq!(v["command"], "predict");
    assert_eq!(v["params"]["phi"], "geometric:2");
    let r = &v["results"];
    for key in ["dim_liminf", "dim_limsup"] {
        assert!((r[key].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
    assert!((r["dim_nd"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(r["A"].as_f64(), Some(1.0));
    assert!(v.get("seed").is_some());
    assert!(v["version"].is_string());
}

#[test]
fn infinite_exponents_are_strings() {
    let v = json_of(&cfdim(&["predict", "--phi", "superg:2"]));
    assert_eq!(v["results"]["B"], "inf");
    assert_eq!(v["results"]["dim_liminf"].as_f64(), Some(0.0));
}

#[test]
fn limsup_mode_rejects_decreasing_weights() {
    let out = cfdim(&[
        "construct",
        "--mode",
        "limsup",
        "--weights",
        "2,1",
        "--phi",
        "geom:2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("weights"));
}

#[test]
fn errors_name_keys_and_map_exit_codes() {
    let out = cfdim(&["construct", "--phi", "geom:2", "--epsilon", "abc"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epsilon"));

    let out = cfdim(&["predict"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("phi"));

    let out = cfdim(&["predict", "--phi", "cubic:2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("phi"));

    let out = cfdim(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cfdim(&["cover-exponent", "--plan", "const:1", "--depth", "8"]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    let out = cfdim(&[
        "predict",
        "--phi",
        "geom:2",
        "--out",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# limsup run\ncommand = construct\nphi = geom:3\nmode = limsup\nepsilon = 0.5\nhorizon = 30\n",
    )
    .unwrap();
    let from_file = cfdim(&["--config", cfg.to_str().unwrap()]);
    let from_flags = cfdim(&[
        "construct",
        "--phi",
        "geom:3",
        "--mode",
        "limsup",
        "--epsilon",
        "0.5",
        "--horizon",
        "30",
    ]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    assert_eq!(from_file.stdout, from_flags.stdout);

    // Flags override the file; a different command is a contradiction.
    let v = json_of(&cfdim(&[
        "construct",
        "--config",
        cfg.to_str().unwrap(),
        "--horizon",
        "20",
    ]));
    assert_eq!(v["params"]["horizon"], "20");
    let out = cfdim(&["predict", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("command"));
}

#[test]
fn mc_growth_writes_csv_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("growth.json");
    let out = cfdim(&[
        "mc-growth",
        "--trials",
        "3",
        "--depth",
        "60",
        "--seed",
        "11",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("growth.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("trial,n,ratio,running_max"));
    // Weights (1): m = 0, so n runs over 2..=60.
    assert_eq!(lines.count(), 3 * 59);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["seed"], 11);
    assert_eq!(v["results"]["running_max_monotone"], true);
    // No temporary files left behind.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn verify_mass_reports_pass_and_fail() {
    let v = json_of(&cfdim(&[
        "verify-mass",
        "--sampler",
        "random:200:100:10000",
        "--seed",
        "3",
    ]));
    assert_eq!(v["results"]["pass"], 200);
    assert_eq!(v["results"]["fail"], 0);
    assert_eq!(v["seed"], 3);
}

#[test]
fn table_rate_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("phi.csv");
    let rows: String = (1..=60)
        .map(|n| format!("{n},{}\n", 2f64.powi(n)))
        .collect();
    fs::write(&table, format!("n,phi\n{rows}")).unwrap();
    let spec = format!("table:{}", table.display());
    let v = json_of(&cfdim(&["predict", "--phi", &spec]));
    let flags: Vec<&str> = v["flags"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert!(flags.contains(&"window-estimate"), "{flags:?}");
    assert!((v["results"]["B"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn events_and_expand() {
    let v = json_of(&cfdim(&["events", "--digits", "2,5", "--tau", "2"]));
    assert_eq!(v["results"]["events"], serde_json::json!([1]));
    let v = json_of(&cfdim(&[
        "events",
        "--kind",
        "dirichlet",
        "--psi",
        "scaled:0.5",
        "--digits",
        "1,2,1,3",
    ]));
    assert_eq!(v["results"]["inner"], serde_json::json!([1, 2, 3]));
    let v = json_of(&cfdim(&["expand", "--x", "5/8", "--qmax", "20"]));
    assert_eq!(
        v["results"]["digits"],
        serde_json::json!(["1", "1", "1", "2"])
    );
    assert_eq!(v["results"]["classical_bounds_hold"], true);
}

#[test]
fn csv_to_stdout_requires_a_trace() {
    let out = cfdim(&["predict", "--phi", "geom:2", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cfdim(&["events", "--digits", "1,3,1", "--output", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("n,event\n"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = cfdim(&[
            "mc-bernstein",
            "--trials",
            "5",
            "--depth",
            "300",
            "--seed",
            "9",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (
            fs::read(&p).unwrap(),
            fs::read(p.with_extension("csv")).unwrap(),
        )
    };
    assert_eq!(run("a.json"), run("b.json"));
    assert!(Path::new(&dir.path().join("a.csv")).exists());
}
