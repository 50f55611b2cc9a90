use std::process::{Command, Output};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_geomatch"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args, &[]).status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["verify-local", "--prime", "2", "--n-max", "1", "--precision", "4"]), 0);
    assert_eq!(code(&["verify-local", "--prime", "2", "--precision", "2"]), 2);
    assert_eq!(code(&["verify-local", "--prime", "7"]), 64);
    assert_eq!(code(&["classes", "--trace", "2"]), 64);
    assert_eq!(code(&["classes", "--trace", "-5", "--level", "7"]), 64);
    assert_eq!(code(&["relation", "--ramified", "2,3,5", "--x-max", "100"]), 64);
    assert_eq!(code(&["coverage", "--decomposition", "split-M", "--q", "5", "--precision", "6", "--samples", "10"]), 3);
    assert_eq!(code(&["no-such-command"]), 64);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn json_envelope_and_csv_header() {
    let out = run(&["classes", "--trace", "-3"], &[]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "classes");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["config"]["trace"], "-3");
    assert!(v["conventions"].as_array().unwrap().len() >= 3);
    let out = run(&["--format", "csv", "spectrum", "--x-max", "100", "--points", "4"], &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    let first_data = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(first_data, "x,psi,psi_minus_x,x_pow_7_10,pi,li_x,pi_minus_li");
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nx-max = 500\npoints=3\nlevel=2\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = run(&["spectrum", "--config", cfg, "--level", "3"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["level"], "3");
    assert_eq!(v["config"]["points"], "3");
    assert_eq!(v["result"]["table"].as_array().unwrap().len(), 3);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["coverage", "--decomposition", "split-J", "--q", "3", "--precision", "2", "--samples", "5000", "--seed", "11"];
    let a = run(&args, &[("GEOMATCH_THREADS", "1")]);
    let b = run(&args, &[("GEOMATCH_THREADS", "3")]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[&args[..8], &["--samples", "5000", "--seed", "12"]].concat(), &[]);
    assert_ne!(a.stdout, c.stdout);
}
