//! End-to-end tests of the `spinframe` binary: schemas, values, exit codes,
//! determinism, and the manifest sidecar.

use std::path::Path;
use std::process::{Command, Output};

fn spinframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinframe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn field(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == name)
        .unwrap_or_else(|| panic!("column {name} in {header:?}"));
    let data: Vec<&str> = lines.nth(row).expect("data row").split(',').collect();
    data[idx].to_string()
}

#[test]
fn direction_solve_values_and_schema() {
    let out = spinframe(&["direction", "solve", "--N", "2", "--m", "0"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("N,m,fidelity,one_minus_F,mp_baseline,eq22_limit,ratio\n"));
    let fidelity: f64 = field(&text, 0, "fidelity").parse().unwrap();
    assert!((fidelity - 0.7886751345948129).abs() < 1e-12);
    let baseline: f64 = field(&text, 0, "mp_baseline").parse().unwrap();
    assert!((baseline - 0.75).abs() < 1e-15);

    let out = spinframe(&["direction", "solve", "--N", "2", "--m", "1"]);
    let text = stdout(&out);
    let fidelity: f64 = field(&text, 0, "fidelity").parse().unwrap();
    assert!((fidelity - 0.75).abs() < 1e-12);
}

#[test]
fn direction_sweep_row_counts() {
    let out = spinframe(&["direction", "sweep", "--N-min", "2", "--N-max", "10"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1 + 5); // header + even N

    let out = spinframe(&[
        "direction",
        "sweep",
        "--N-min",
        "2",
        "--N-max",
        "10",
        "--include-odd",
    ]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 9);
    // odd rows use m = 1/2
    assert_eq!(field(&text, 1, "m"), "1/2");
}

#[test]
fn direction_povm_check_runs_clean() {
    let out = spinframe(&[
        "direction",
        "povm-check",
        "--N",
        "2",
        "--m",
        "0",
        "--quad-order",
        "24",
        "--phi-points",
        "32",
    ]);
    assert!(out.status.success());
    let dev: f64 = field(&stdout(&out), 0, "max_abs_deviation").parse().unwrap();
    assert!(dev < 1e-10, "deviation {dev}");
}

#[test]
fn frame_optimize_values() {
    let out = spinframe(&["frame", "optimize", "--n", "2", "--merit", "z"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with(
        "n,merit_kind,merit,cos_wx,cos_wy,cos_wz,mse_total,iters,converged,restarts_used\n"
    ));
    let merit: f64 = field(&text, 0, "merit").parse().unwrap();
    assert!((merit - 0.5773502691896258).abs() < 1e-10);
    assert_eq!(field(&text, 0, "converged"), "true");

    let out = spinframe(&["frame", "optimize", "--n", "1", "--merit", "xyz"]);
    let merit: f64 = field(&stdout(&out), 0, "merit").parse().unwrap();
    assert_eq!(merit, 0.0);
}

#[test]
fn frame_compare_split_consistency() {
    let out = spinframe(&["frame", "compare-split", "--N", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let split: f64 = field(&text, 0, "split_per_axis_mse").parse().unwrap();

    let solve = spinframe(&["direction", "solve", "--N", "4", "--m", "0"]);
    let one_minus_f: f64 = field(&stdout(&solve), 0, "one_minus_F").parse().unwrap();
    assert_eq!(split, one_minus_f); // same solver, bit-identical
}

#[test]
fn simulate_direction_deterministic() {
    let args = [
        "simulate",
        "direction",
        "--N",
        "2",
        "--shots",
        "20000",
        "--seed",
        "7",
    ];
    let a = spinframe(&args);
    let b = spinframe(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout); // identical output bytes
    let text = stdout(&a);
    assert!(text.starts_with("mean,stderr,analytic,sigma_distance,shots,seed,flag\n"));
    let sigma: f64 = field(&text, 0, "sigma_distance").parse().unwrap();
    assert!(sigma < 6.0);

    // worker count must not change the numbers
    let c = spinframe(&[
        "simulate",
        "direction",
        "--N",
        "2",
        "--shots",
        "20000",
        "--seed",
        "7",
        "--workers",
        "4",
    ]);
    assert_eq!(field(&stdout(&c), 0, "mean"), field(&text, 0, "mean"));
}

#[test]
fn simulate_frame_matches_analytic() {
    let out = spinframe(&[
        "simulate", "frame", "--n", "2", "--merit", "z", "--shots", "20000", "--seed", "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mean: f64 = field(&text, 0, "mean").parse().unwrap();
    assert!((mean - 0.577).abs() < 0.02, "mean {mean}");
}

#[test]
fn json_format_matches_csv_values() {
    let csv = stdout(&spinframe(&["direction", "solve", "--N", "4"]));
    let json_out = spinframe(&["direction", "solve", "--N", "4", "--format", "json"]);
    let rows: serde_json::Value =
        serde_json::from_slice(&json_out.stdout).expect("valid json");
    let fidelity_json = rows[0]["fidelity"].as_f64().unwrap();
    let fidelity_csv: f64 = field(&csv, 0, "fidelity").parse().unwrap();
    assert_eq!(fidelity_json, fidelity_csv);
    assert_eq!(rows[0]["m"].as_str().unwrap(), "0");
}

#[test]
fn out_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = spinframe(&[
        "direction",
        "solve",
        "--N",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert!(written.starts_with("N,m,fidelity"));

    let manifest_path = dir.path().join("rows.csv.manifest.json");
    assert!(Path::new(&manifest_path).exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["command"], "direction solve");
    assert_eq!(manifest["parameters"]["N"], "2");
    assert!(manifest["timestamp"].as_str().unwrap().contains('T'));
}

#[test]
fn exit_codes() {
    // usage: missing required flag
    let out = spinframe(&["direction", "solve"]);
    assert_eq!(out.status.code(), Some(2));

    // usage: bad half-integer
    let out = spinframe(&["direction", "solve", "--N", "2", "--m", "x"]);
    assert_eq!(out.status.code(), Some(2));

    // usage: parity mismatch between N and m, message names the flag value
    let out = spinframe(&["direction", "solve", "--N", "2", "--m", "1/2"]);
    assert_eq!(out.status.code(), Some(2));

    // usage: bad merit name
    let out = spinframe(&["frame", "optimize", "--n", "2", "--merit", "w"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(msg.contains("--merit"), "stderr: {msg}");

    // unsupported: weighted directions with three distinct weights
    let dir = tempfile::tempdir().unwrap();
    let dirs = dir.path().join("dirs.txt");
    std::fs::write(&dirs, "1 0 0 3.0\n0 1 0 2.0\n0 0 1 1.0\n").unwrap();
    let out = spinframe(&[
        "frame",
        "weighted",
        "--dirs",
        dirs.to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn frame_weighted_reduction_and_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let dirs = dir.path().join("dirs.txt");
    // two orthogonal unit vectors in the xy-plane with equal weight: the
    // reducible two-axis situation
    std::fs::write(&dirs, "1 0 0 1.0\n0 1 0 1.0\n").unwrap();

    let out = spinframe(&["frame", "weighted", "--dirs", dirs.to_str().unwrap()]);
    assert!(out.status.success());
    let text = stdout(&out);
    let w1: f64 = field(&text, 0, "w1").parse().unwrap();
    let w3: f64 = field(&text, 0, "w3").parse().unwrap();
    assert!((w1 - 1.0).abs() < 1e-12 && w3.abs() < 1e-12);
    assert_eq!(field(&text, 0, "reducible"), "true");

    let out = spinframe(&[
        "frame",
        "weighted",
        "--dirs",
        dirs.to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // w_z = 0 here, so the weighted optimum is the pure two-axis optimum
    let merit: f64 = field(&text, 0, "merit").parse().unwrap();
    let xy = spinframe(&["frame", "optimize", "--n", "2", "--merit", "xy"]);
    let xy_merit: f64 = field(&stdout(&xy), 0, "merit").parse().unwrap();
    assert!((merit - xy_merit).abs() < 1e-7, "{merit} vs {xy_merit}");
}

#[test]
fn threads_env_caps_workers() {
    let out = Command::new(env!("CARGO_BIN_EXE_spinframe"))
        .args([
            "simulate",
            "direction",
            "--N",
            "2",
            "--shots",
            "1000",
            "--seed",
            "3",
            "--workers",
            "8",
        ])
        .env("SPINFRAME_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    // the run must produce the same numbers as any other worker count
    let reference = spinframe(&[
        "simulate",
        "direction",
        "--N",
        "2",
        "--shots",
        "1000",
        "--seed",
        "3",
    ]);
    assert_eq!(
        field(&stdout(&out), 0, "mean"),
        field(&stdout(&reference), 0, "mean")
    );
}

#[test]
fn golden_direction_solve_n2() {
    // full-byte golden row: the solver and the 17-digit formatting are both
    // deterministic
    let out = spinframe(&["direction", "solve", "--N", "2", "--m", "0"]);
    assert_eq!(
        stdout(&out),
        "N,m,fidelity,one_minus_F,mp_baseline,eq22_limit,ratio\n\
         2,0,7.8867513459481287e-1,2.1132486540518713e-1,7.5000000000000000e-1,\
         2.3132743851787138e-1,9.1353134223574206e-1\n"
    );
}

#[test]
fn csv_floats_are_round_trip_exact() {
    let text = stdout(&spinframe(&["direction", "solve", "--N", "6"]));
    let printed = field(&text, 0, "fidelity");
    let value: f64 = printed.parse().unwrap();
    assert_eq!(format!("{value:.16e}"), printed);
    // 17 significant digits
    let mantissa = printed.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17);
}
