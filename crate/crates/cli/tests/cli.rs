use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hartree-verify"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_all_passes_and_is_deterministic() {
    let dir = scratch("determinism");
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run(&["--out", out.to_str().unwrap(), "run-all"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let ja = std::fs::read(a.join("report.json")).unwrap();
    let jb = std::fs::read(b.join("report.json")).unwrap();
    assert_eq!(ja, jb);
    assert!(a.join("report.md").exists());
    assert!(a.join("ground-state_trace.csv").exists());
}

#[test]
fn single_check_writes_its_report() {
    let out = scratch("single");
    let o = run(&["--out", out.to_str().unwrap(), "--seed", "5", "verify", "barycenter"]);
    assert_eq!(o.status.code(), Some(0));
    let json = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(json.contains("\"id\": \"barycenter\""));
    assert!(json.contains("\"seed\": 5"));
}

#[test]
fn unknown_check_is_a_usage_error() {
    let o = run(&["verify", "no-such-check"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-check"));
}

#[test]
fn weak_coupling_is_rejected_up_front() {
    let dir = scratch("domain");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "[problem]\nbeta = 1.5\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "run-all"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain"));
    assert!(!dir.join("report.json").exists());
}

#[test]
fn missing_potential_file_names_the_path() {
    let dir = scratch("missing");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "[problem.v1]\nkind = \"csv\"\npath = \"/definitely/absent/v1.csv\"\ntail_coef = 0.0\ntail_exp = 4.0\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/absent/v1.csv"));
}

#[test]
fn missing_config_names_the_path() {
    let o = run(&["--config", "/definitely/absent/run.toml", "constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/absent/run.toml"));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = scratch("failing");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "[scan]\nrbar_candidates = [0.25]\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "verify", "region"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Fail"));
}

#[test]
fn csv_potential_round_trips() {
    let dir = scratch("csv");
    let csv = dir.join("v.csv");
    let mut text = String::from("r,value\n");
    for i in 0..=400 {
        let r = 40.0 * i as f64 / 400.0;
        text.push_str(&format!("{r},{}\n", 0.1 * (1.0 + r * r).powi(-2)));
    }
    std::fs::write(&csv, text).unwrap();
    let cfg = dir.join("run.toml");
    let spec = format!("kind = \"csv\"\npath = \"{}\"\ntail_coef = 0.1\ntail_exp = 4.0\n", csv.display());
    std::fs::write(&cfg, format!("[problem.v1]\n{spec}[problem.v2]\n{spec}")).unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap(), "verify", "admissibility"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
}
