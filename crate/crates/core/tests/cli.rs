//! The `dfpp` binary: outputs, determinism, resume and exit codes.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use dfpp::env::deterministic_environment;
use dfpp::geodesic::read_path_dump;

fn dfpp(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dfpp"));
    cmd.args(args).env_remove("DFPP_OUT").env_remove("DFPP_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

const GRID: &[&str] = &["simulate", "--alpha", "0.7,1.5", "--n", "16,32", "--samples", "3", "--seed", "5"];

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = GRID.to_vec();
    args.extend(["--out", out.to_str().unwrap()]);
    args.extend(extra);
    run(&mut dfpp(&args))
}

#[test]
fn simulate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let names: Vec<String> = files(dir.path()).into_keys().collect();
    for stem in ["alpha0.7_n16", "alpha0.7_n32", "alpha1.5_n16", "alpha1.5_n32"] {
        for ext in ["csv", "summary.json", "done"] {
            assert!(names.contains(&format!("{stem}.{ext}")), "{stem}.{ext} missing from {names:?}");
        }
    }
    assert!(names.contains(&"alpha0.7.exponents.json".to_string()));
    assert!(names.contains(&"alpha1.5.exponents.json".to_string()));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["cells"].as_array().unwrap().len(), 4);
    assert!(manifest["failed_cells"].as_array().unwrap().is_empty());

    let csv = std::fs::read_to_string(dir.path().join("alpha0.7_n32.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sample_id,seed,n,alpha,d,passage_time,max_jump,max_displacement,boundary_hit"
    );
    let ids: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["0", "1", "2"]);
    assert!(stderr(&out).contains("alpha=0.7 n=32: 3 samples"));
}

#[test]
fn simulate_is_reproducible_across_runs_and_thread_counts() {
    let one = tempfile::tempdir().unwrap();
    let again = tempfile::tempdir().unwrap();
    let eight = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(one.path(), &["--threads", "1"])), 0);
    assert_eq!(code(&simulate(again.path(), &["--threads", "1"])), 0);
    assert_eq!(code(&simulate(eight.path(), &["--threads", "8"])), 0);
    let reference = files(one.path());
    assert_eq!(files(again.path()), reference);
    assert_eq!(files(eight.path()), reference);
}

#[test]
fn interrupted_grids_resume() {
    let full = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(full.path(), &[])), 0);
    let reference = files(full.path());

    let partial = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(partial.path(), &[])), 0);
    // a crash after writing the records of one cell but before its marker
    std::fs::remove_file(partial.path().join("alpha1.5_n32.done")).unwrap();
    std::fs::remove_file(partial.path().join("alpha1.5_n32.summary.json")).unwrap();
    std::fs::write(partial.path().join("alpha1.5_n32.csv"), "truncated").unwrap();
    std::fs::remove_file(partial.path().join("manifest.json")).unwrap();

    let out = simulate(partial.path(), &[]);
    assert_eq!(code(&out), 0);
    let log = stderr(&out);
    assert_eq!(log.matches("complete, skipped").count(), 3, "{log}");
    assert!(log.contains("alpha=1.5 n=32: 3 samples"), "{log}");
    assert_eq!(files(partial.path()), reference);
}

#[test]
fn config_file_environment_and_flags_layer_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let from_file = dir.path().join("from_file");
    let from_env = dir.path().join("from_env");
    let from_flag = dir.path().join("from_flag");
    let config = dir.path().join("grid.toml");
    std::fs::write(
        &config,
        format!(
            "alphas = [0.9]\nns = [8]\nsamples_per_cell = 2\noutput_dir = {:?}\nthreads = 2\n",
            from_file.to_str().unwrap()
        ),
    )
    .unwrap();
    let cfg = config.to_str().unwrap();

    assert_eq!(code(&run(&mut dfpp(&["simulate", "--config", cfg]))), 0);
    assert!(from_file.join("alpha0.9_n8.csv").exists());

    let out = run(dfpp(&["simulate", "--config", cfg]).env("DFPP_OUT", &from_env));
    assert_eq!(code(&out), 0);
    assert!(from_env.join("alpha0.9_n8.csv").exists());

    let out = run(dfpp(&["simulate", "--config", cfg, "--out", from_flag.to_str().unwrap()])
        .env("DFPP_OUT", &from_env)
        .env("DFPP_THREADS", "1"));
    assert_eq!(code(&out), 0);
    assert!(from_flag.join("alpha0.9_n8.csv").exists());
    assert_eq!(
        std::fs::read(from_flag.join("alpha0.9_n8.csv")).unwrap(),
        std::fs::read(from_file.join("alpha0.9_n8.csv")).unwrap()
    );

    let out = run(dfpp(&["simulate", "--config", cfg]).env("DFPP_THREADS", "lots"));
    assert_eq!(code(&out), 2);
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "alpha = [1.0]\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    for args in [
        vec!["simulate", "--config", bad.to_str().unwrap(), "--out", out],
        vec!["simulate", "--alpha", "-1", "--out", out],
        vec!["simulate", "--n", "64,32", "--out", out],
        vec!["simulate", "--samples", "0", "--out", out],
        vec!["geodesic", "--alpha", "0", "--n", "8"],
        vec!["blackface", "--trials", "0"],
        vec!["blackface", "--grid-step", "0.9"],
        vec!["tunnel", "--epsilon", "0.01", "--c1", "0.9"],
    ] {
        let o = run(&mut dfpp(&args));
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
    let o = run(&mut dfpp(&["simulate", "--config", dir.path().join("missing.toml").to_str().unwrap()]));
    assert_eq!(code(&o), 1);
}

#[test]
fn unwritable_output_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = simulate(&blocker.join("sub"), &[]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
}

#[test]
fn failed_cells_exit_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), &["--jump-cap", "1e-9"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["failed_cells"].as_array().unwrap().len(), 4);
    // unreachable samples stay in the records
    let csv = std::fs::read_to_string(dir.path().join("alpha0.7_n16.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("inf"));
}

#[test]
fn geodesic_dump_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let out = run(&mut dfpp(&["geodesic", "--alpha", "0.6", "--n", "128", "--seed", "3", "--out", p.to_str().unwrap()]));
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let (header, steps) = read_path_dump(bytes.as_slice()).unwrap();
    assert_eq!(header.n, 128);
    assert_eq!(header.seed, 3);
    assert_eq!(steps.len(), 128);
    let jumps: Vec<f64> = std::iter::once(0.0)
        .chain(steps.iter().map(|s| s.x[0]))
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();
    assert_eq!(jumps.iter().cloned().fold(0.0, f64::max), header.max_jump);

    let stdout = run(&mut dfpp(&["geodesic", "--alpha", "0.6", "--n", "128", "--seed", "3"]));
    assert_eq!(stdout.stdout, bytes);
}

#[test]
fn disconnected_fixture_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let env = deterministic_environment(1, vec![vec![vec![0.5]], vec![vec![3.0]], vec![vec![3.5]]]).unwrap();
    let path = dir.path().join("env.jsonl");
    env.write_jsonl(std::fs::File::create(&path).unwrap()).unwrap();
    let p = path.to_str().unwrap();
    let ok = run(&mut dfpp(&["geodesic", "--env", p, "--alpha", "1", "--jump-cap", "3"]));
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let out = run(&mut dfpp(&["geodesic", "--env", p, "--alpha", "1", "--jump-cap", "2"]));
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn blackface_reports() {
    let out = run(&mut dfpp(&["blackface", "--c1", "1,1e-3,50", "--trials", "40"]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let est = report["estimates"].as_array().unwrap();
    let c1s: Vec<f64> = est.iter().map(|e| e["c1"].as_f64().unwrap()).collect();
    assert_eq!(c1s, [1e-3, 1.0, 50.0]);
    assert_eq!(est[2]["estimate"].as_f64().unwrap(), 0.0);
    assert_eq!(est[0]["L"].as_u64().unwrap(), 4);
    assert!(report["monotone"].as_bool().unwrap());
}

#[test]
fn tunnel_demo_writes_fixture_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&mut dfpp(&["tunnel", "--out", dir.path().to_str().unwrap()]));
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["is_tunneling"].as_bool().unwrap());
    assert!(report["within_tolerance"].as_bool().unwrap());
    let saved: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("tunnel_report.json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    let env = dfpp::env::Environment::read_jsonl(std::io::BufReader::new(
        std::fs::File::open(dir.path().join("tube.jsonl")).unwrap(),
    ))
    .unwrap();
    assert!(env.total_points() > 0);

    let drifted = run(&mut dfpp(&["tunnel", "--alpha", "1.5", "--drift", "0.3,-0.4"]));
    assert_eq!(code(&drifted), 0, "{}", stderr(&drifted));
    let report: serde_json::Value = serde_json::from_slice(&drifted.stdout).unwrap();
    assert!(report["within_tolerance"].as_bool().unwrap());

    let dirty = run(&mut dfpp(&["tunnel", "--contaminate"]));
    let report: serde_json::Value = serde_json::from_slice(&dirty.stdout).unwrap();
    assert!(!report["is_tunneling"].as_bool().unwrap());
}
