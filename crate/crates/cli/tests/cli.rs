use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn aqrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aqrm"))
        .args(args)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).expect("stderr is JSON")
}

#[test]
fn predict_reports_two_atoms_and_constants() {
    let o = aqrm(&["predict", "--epsilon", "0.2"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let atoms = v["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 2);
    for (a, want) in atoms.iter().zip([0.4, 0.6]) {
        assert!((a["location"].as_f64().unwrap() - want).abs() < 1e-12);
        assert_eq!(a["weight"].as_f64().unwrap(), 0.5);
    }
    let c = v["constants"].as_array().unwrap();
    assert!((c[0].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((c[1].as_f64().unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn spectrum_output_is_deterministic_across_worker_counts() {
    let args = |jobs: &'static str| {
        vec![
            "--jobs", jobs, "spectrum", "--g", "1", "--delta", "1", "--levels", "30",
            "--parity", "merged",
        ]
    };
    let a = aqrm(&args("1"));
    let b = aqrm(&args("4"));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue,parity,converged"));
    assert_eq!(lines.count(), 30);
}

#[test]
fn zero_coupling_is_a_usage_error() {
    let o = aqrm(&["spectrum", "--g", "0", "--delta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "invalid_parameter");
    assert!(e["error"]["message"].as_str().unwrap().contains("g must be > 0"));
}

#[test]
fn bad_arguments_give_json_usage_error() {
    let o = aqrm(&["spectrum", "--g", "one", "--delta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");
}

#[test]
fn help_exits_cleanly() {
    let o = aqrm(&["density", "--help"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("bin_left,bin_right,density"));
}

#[test]
fn unconverged_run_writes_only_a_partial_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("levels.csv");
    let o = aqrm(&[
        "spectrum", "--g", "3", "--delta", "1", "--epsilon", "0.3", "--levels", "400",
        "--n-max", "300", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
    let partial = dir.path().join("levels.csv.partial");
    assert!(partial.exists());
    let e = stderr_json(&o);
    assert_eq!(e["error"]["kind"], "not_converged");
    let certified = e["error"]["certified"].as_u64().unwrap();
    assert!(certified > 0 && certified < 400);
    let text = std::fs::read_to_string(partial).unwrap();
    let flagged = text.lines().filter(|l| l.ends_with(",true")).count();
    assert_eq!(flagged as u64, certified);
}

#[test]
fn unconverged_run_to_stdout_writes_nothing() {
    let o = aqrm(&[
        "spacing", "--g", "3", "--delta", "1", "--epsilon", "0.3", "--levels", "400",
        "--n-max", "300",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(o.stdout.is_empty());
}

#[test]
fn flags_override_environment() {
    let run = |extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_aqrm"));
        cmd.env_clear()
            .env("RABI_G", "2")
            .env("RABI_DELTA", "1")
            .args(["spectrum", "--levels", "3"])
            .args(extra);
        stdout(&cmd.output().unwrap())
    };
    let from_env = run(&[]);
    let from_flag = run(&["--g", "1"]);
    let explicit = stdout(&aqrm(&["spectrum", "--levels", "3", "--g", "2", "--delta", "1"]));
    assert_eq!(from_env, explicit);
    assert_ne!(from_env, from_flag);
}

#[test]
fn missing_input_is_an_io_error() {
    let o = aqrm(&["fit-proportion", "--in", "/nonexistent/proportions.csv"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");
}

#[test]
fn proportions_feed_the_arctan_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let o = aqrm(&[
        "proportions", "--g", "1", "--delta", "1", "--levels", "400", "--n-points", "12",
        "--out", csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aqrm(&["fit-proportion", "--in", csv.to_str().unwrap(), "--intervals"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["fit"]["model"], "arctan_proportion");
    assert_eq!(v["fit"]["intervals"].as_array().unwrap().len(), 3);
    let limit = v["limit"].as_f64().unwrap();
    assert!((0.3..0.7).contains(&limit), "limit {limit}");
}

#[test]
fn sweep_covers_the_bias_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let dens = dir.path().join("dens.csv");
    let o = aqrm(&[
        "sweep-eps", "--g", "1", "--delta", "1", "--levels", "12", "--eps-from", "0",
        "--eps-to", "1.5", "--eps-step", "0.1", "--bins", "4", "--out",
        out.to_str().unwrap(), "--density-out", dens.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut eps: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    eps.dedup();
    assert_eq!(eps.len(), 16);
    assert_eq!(eps[3].parse::<f64>().unwrap(), 0.3);
    assert_eq!(std::fs::read_to_string(&dens).unwrap().lines().count(), 1 + 16 * 4);
}

#[test]
fn constraint_curves_in_both_conventions() {
    let base = [
        "constraint-curves", "--ell", "2", "--delta", "1", "--g-from", "2", "--g-to", "2.5",
        "--g-step", "0.25",
    ];
    let renorm = stdout(&aqrm(&base));
    let mut raw_args = base.to_vec();
    raw_args.push("--unrenormalized");
    let raw = stdout(&aqrm(&raw_args));
    assert!(renorm.starts_with("g,curve_id,renormalized_x\n"));
    assert!(raw.starts_with("g,curve_id,x\n"));
    for (a, b) in renorm.lines().skip(1).zip(raw.lines().skip(1)) {
        let fa: Vec<f64> = a.split(',').map(|x| x.parse().unwrap()).collect();
        let fb: Vec<f64> = b.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((fa[2] - fb[2] - fa[0] * fa[0]).abs() < 1e-12);
    }
}

#[test]
fn envelope_finds_peaks_with_asymptotic_levels() {
    let dir = tempfile::tempdir().unwrap();
    let peaks = dir.path().join("peaks.csv");
    let o = aqrm(&[
        "envelope", "--g", "1", "--delta", "1", "--parity", "plus", "--n-from", "500",
        "--n-to", "6000", "--use-asymptotic", "--crossover", "1000", "--peaks-out",
        peaks.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["asymptotic_from"], 1000);
    let n_peaks = v["peaks"].as_u64().unwrap();
    assert!(n_peaks > 10);
    let b = v["power_law"]["params"][1].as_f64().unwrap();
    assert!((b + 0.25).abs() < 0.05, "exponent {b}");
    let rows = std::fs::read_to_string(Path::new(&peaks)).unwrap();
    assert_eq!(rows.lines().count() as u64, n_peaks + 1);
}

#[test]
fn alpha0_map_is_row_major_in_g() {
    let o = aqrm(&[
        "alpha0-map", "--g-grid", "0.5,1", "--delta-grid", "1,2", "--levels", "100",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let gs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(gs, ["5.0000000000000000e-1", "5.0000000000000000e-1", "1.0000000000000000e0", "1.0000000000000000e0"]);
}

#[test]
fn schema_lists_every_subcommand() {
    let v: Value = serde_json::from_str(&stdout(&aqrm(&["schema"]))).unwrap();
    let cmds = v["commands"].as_object().unwrap();
    for name in [
        "spectrum", "spacing", "density", "cdf", "sweep-eps", "alpha0-map", "proportions",
        "constraint-curves", "envelope", "compare-asymptotic", "fit-proportion", "predict",
        "schema",
    ] {
        assert!(cmds.contains_key(name), "{name}");
    }
}
