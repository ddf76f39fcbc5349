use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_decentprox");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path
}

fn cli(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

const MINIMAL: &str = "\
problem.kind = quadratic
problem.d = 3
problem.condition = 5
network.m = 4
network.topology = complete
algorithm.T = 1
algorithm.N = 25
output.dir = out
";

#[test]
fn minimal_run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINIMAL);
    let out = cli(&["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(dir.path().join("out/trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "k,gap,dist_sq,cons_err,beta,alpha,A,gamma,comm_rounds");
    assert_eq!(lines.len(), 1 + 26);
    assert!(lines[26].starts_with("25,") && lines[26].ends_with(",25"));
    // 17 significant digits
    let alpha = lines[1].split(',').nth(5).unwrap();
    assert_eq!(alpha.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);

    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    for key in ["spec_hash", "chi", "T", "N", "N_comm", "final_gap", "eta", "L_g", "mu_g", "L_l", "mu_l"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{key} = "))), "missing {key}");
    }
    assert!(summary.contains("N_comm = 25\n"));
}

#[test]
fn identical_bytes_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL.replace("network.topology = complete", "network.topology = ring\nnetwork.p_drop = 0.3");
    let cfg = write_config(dir.path(), &body);
    assert_eq!(cli(&["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    let first = fs::read(dir.path().join("out/trace.csv")).unwrap();
    assert_eq!(cli(&["run", cfg.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("out/trace.csv")).unwrap());
}

#[test]
fn unsupported_pair_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{MINIMAL}problem.regularizer = l1\nproblem.domain = ball\nproblem.ball_radius = 1\n");
    let out = cli(&["run", write_config(dir.path(), &body).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("l1") && err.contains("ball"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn invalid_value_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL.replace("network.m = 4", "network.m = four");
    let out = cli(&["run", write_config(dir.path(), &body).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.m"));
}

#[test]
fn divergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = "\
problem.d = 3
problem.condition = 4
problem.heterogeneity = 400
problem.seed = 11
network.m = 6
network.topology = path
algorithm.T = 0
algorithm.N = 5000
output.dir = out
";
    let out = cli(&["run", write_config(dir.path(), body).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k = ") && err.contains("T = 0") && err.contains("chi"), "{err}");
}

#[test]
fn io_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let body = MINIMAL.replace("output.dir = out", "output.dir = blocker/out");
    let out = cli(&["run", write_config(dir.path(), &body).to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let missing = cli(&["run", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn sweep_records_failed_values() {
    let dir = tempfile::tempdir().unwrap();
    let body = MINIMAL.replace("algorithm.N = 25", "algorithm.N = 200\nalgorithm.epsilon = 1e-6");
    let cfg = write_config(dir.path(), &body);
    let out = cli(&["sweep", cfg.to_str().unwrap(), "--key", "condition_target", "--values", "4,oops,16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "value,N_to_eps,comm_rounds,final_gap");
    assert!(lines[1].starts_with("4,"));
    assert_eq!(lines[2], "oops,NA,NA,NA");
    assert!(lines[3].starts_with("16,"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.condition"));
}

#[test]
fn check_suites() {
    let out = cli(&["check", "lemma3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "check_name,n_or_draw,margin,pass");
    // growth and ratio margins for four constant pairs
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4 && l.ends_with(",true")));

    let consensus = cli(&["check", "consensus"]);
    assert_eq!(consensus.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&consensus.stdout).contains("consensus_contraction,50,"));

    assert_eq!(cli(&["check", "bogus"]).status.code(), Some(1));
}
