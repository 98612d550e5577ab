use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn percoscan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_percoscan"))
        .current_dir(dir)
        .env_remove("PERCOSCAN_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn checksum(o: &Output) -> String {
    stdout(o).lines().find(|l| l.starts_with("checksum")).expect("checksum line").to_string()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--d", "2", "--m", "32", "--family", "normal", "--theta", "0", "--seed", "7"];
    let a = percoscan(dir.path(), &args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(stdout(&a).contains("nodes 1024"));
    let b = percoscan(dir.path(), &args);
    assert_eq!(checksum(&a), checksum(&b));
    assert_eq!(fs::metadata(dir.path().join("field.pcsf")).unwrap().len(), 16 + 8 * 1024);

    let planted = percoscan(dir.path(), &["simulate", "--m", "32", "--shape", "hypercube:10@center", "--theta", "0.5"]);
    assert!(planted.status.success());
    assert_ne!(checksum(&planted), checksum(&a));
}

#[test]
fn detect_reports_values_and_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    assert!(percoscan(dir.path(), &["simulate", "--m", "16", "--out", "f.pcsf"]).status.success());

    let all_open = percoscan(dir.path(), &["detect", "--field", "f.pcsf", "--detector", "loc:t=-1e9"]);
    assert!(all_open.status.success());
    assert!(stdout(&all_open).starts_with("loc 256\n"));

    let empty = percoscan(dir.path(), &["detect", "--field", "f.pcsf", "--detector", "uls:t=0,kmin=1000"]);
    assert!(empty.status.success());
    assert!(stdout(&empty).starts_with("uls EMPTY\n"));

    let too_big = percoscan(dir.path(), &["detect", "--field", "f.pcsf", "--detector", "scan:side=17"]);
    assert_eq!(too_big.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&too_big.stderr).contains("hypercube side 17"));
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.pcsf"), b"not a field").unwrap();
    let junk = percoscan(dir.path(), &["detect", "--field", "junk.pcsf", "--detector", "loc:t=0"]);
    assert_eq!(junk.status.code(), Some(3));
    let missing = percoscan(dir.path(), &["detect", "--field", "absent.pcsf", "--detector", "loc:t=0"]);
    assert_eq!(missing.status.code(), Some(3));
    let flag = percoscan(dir.path(), &["simulate", "--bogus"]);
    assert_eq!(flag.status.code(), Some(2));
    let value = percoscan(dir.path(), &["simulate", "--m", "0"]);
    assert_eq!(value.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.conf"), "# field setup\nm = 8\nseed = 3\nout = c.pcsf\n").unwrap();
    let from_file = percoscan(dir.path(), &["simulate", "--config", "run.conf"]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert!(stdout(&from_file).contains("nodes 64"));
    let overridden = percoscan(dir.path(), &["simulate", "--config", "run.conf", "--m", "4"]);
    assert!(stdout(&overridden).contains("nodes 16"));
    fs::write(dir.path().join("bad.conf"), "colour = blue\n").unwrap();
    assert_eq!(percoscan(dir.path(), &["simulate", "--config", "bad.conf"]).status.code(), Some(2));
}

fn risk_body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# generated"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn risk_csv_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = percoscan(
            dir.path(),
            &[
                "risk",
                "--threads",
                threads,
                "--m",
                "24",
                "--detector",
                "loc:t=0;scan:side=4",
                "--shape",
                "hypercube:4",
                "--theta",
                "0.5,1.5",
                "--null-reps",
                "10",
                "--alt-reps",
                "10",
                "--out",
                out.to_str().unwrap(),
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push((risk_body(&out.join("risk_loc.csv")), risk_body(&out.join("risk_scan.csv"))));
    }
    assert_eq!(bodies[0], bodies[1]);
    let loc = &bodies[0].0;
    assert!(loc.contains("# seed 0"));
    assert_eq!(loc.lines().filter(|l| l.starts_with("risk,loc,")).count(), 2);
}

#[test]
fn reproduce_fig3_desk_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = percoscan(dir.path(), &["reproduce", "--figure", "fig3", "--scale", "desk", "--reps", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("fig3-desk_loc.csv")).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("experiment,"))
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3 * 19 * 18 / 2);
    for r in &rows {
        let risk: f64 = r[6].parse().unwrap();
        assert!((0.0..=1.0).contains(&risk));
        assert!(r[4].parse::<f64>().unwrap() > r[3].parse::<f64>().unwrap());
    }
}

#[test]
fn estimate_constant_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = percoscan(dir.path(), &["estimate-constant", "--constant", "zeta", "--d", "1", "--p", "0.5"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().last().unwrap().to_string();
    let est: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!((est - 2f64.ln()).abs() < 1e-12);
    let super_critical = percoscan(dir.path(), &["estimate-constant", "--constant", "zeta", "--d", "2", "--p", "0.7"]);
    assert_eq!(super_critical.status.code(), Some(2));
}
