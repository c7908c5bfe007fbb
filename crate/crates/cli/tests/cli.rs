use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twoscale-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_twoscale"))
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .args(args)
        .output()
        .unwrap()
}

const MACROSPIN: &str = r#"
[material]
alpha = 1.0
epsilon = 0.01

[field]
knots = [[0.0, 2.0], [1.0, 2.0]]
direction = [0.2, 0.1, 1.0]

[solver]
horizon = 0.5
"#;

#[test]
fn evolve_succeeds_and_writes_a_table() {
    let dir = scratch("evolve");
    let out = run(&dir, MACROSPIN, &["evolve"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(dir.join("out/run.csv")).unwrap();
    assert!(table.starts_with("t,lambda,mx,my,mz,energy,residual,dist_h2\n"));
    assert!(table.lines().count() > 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_flag_makes_scans_reproducible() {
    let dir = scratch("scan");
    let a = run(&dir, MACROSPIN, &["--seed", "5", "dissipation-scan"]);
    assert_eq!(a.status.code(), Some(0));
    let first = std::fs::read(dir.join("out/scan.csv")).unwrap();
    run(&dir, MACROSPIN, &["--seed", "5", "dissipation-scan"]);
    assert_eq!(std::fs::read(dir.join("out/scan.csv")).unwrap(), first);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_config_exits_with_one_and_names_the_key() {
    let dir = scratch("invalid");
    let out = run(&dir, "[material]\nalpha = 1.0\nepsilon = -1.0\n", &["relax"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("material.epsilon"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn blow_up_exits_with_two() {
    // a field large enough to overflow the first explicit step
    let config = r#"
[material]
alpha = 1.0
epsilon = 1.0

[field]
knots = [[0.0, 1e300], [1.0, 1e300]]
direction = [0.0, 0.0, 1.0]

[solver]
integrator = "explicit"
dt = 0.1

[experiment]
initial = [1.0, 0.0, 0.2]
"#;
    let dir = scratch("blowup");
    let out = run(&dir, config, &["evolve"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("out/run.csv").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}
