use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubecert"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_plain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubecert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn certify_trucks_case1_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--scenario", "trucks-case1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("rho(F) = 0.572"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trucks-case1.certificate.json")).unwrap()).unwrap();
    assert_eq!(json["conclusion"], "CERTIFIED");
    assert!((json["global"]["rho"].as_f64().unwrap() - 0.572).abs() < 1e-3);
    assert!(dir.path().join("trucks-case1.certificate.txt").is_file());
}

#[test]
fn certify_negative_cases_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--scenario", "trucks-case2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trucks-case2.certificate.json")).unwrap()).unwrap();
    assert!(json["subsystems"][0]["state_margin"].as_f64().unwrap() < 0.0);

    let o = run(&["certify", "--scenario", "example1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("rho(F) = 1.2500"));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["certify", "--scenario", "no-such-scenario"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"subsystems\": [ }").unwrap();
    let o = run(&["certify", "--scenario", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["certify", "--scenario", "trucks-case1", "--eps", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scenario_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("pair.json");
    fs::write(
        &file,
        r#"{
            "subsystems": [
                {"A": [[0.5]], "B": [[1.0]], "X": {"A": [[1.0], [-1.0]], "b": [1.0, 1.0]}, "U": {"A": [[1.0], [-1.0]], "b": [1.0, 1.0]},
                 "couplings": {"2": {"A": [[0.1]]}}},
                {"A": [[0.4]], "B": [[1.0]], "X": {"A": [[1.0], [-1.0]], "b": [1.0, 1.0]}, "U": {"A": [[1.0], [-1.0]], "b": [1.0, 1.0]},
                 "couplings": {"1": {"A": [[0.1]]}}}
            ],
            "gains": [[[0.0]], [[0.0]]]
        }"#,
    )
    .unwrap();
    let o = run(&["certify", "--scenario", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("pair.certificate.json").is_file());
}

#[test]
fn squarepi_case3_is_not_found() {
    let o = run_plain(&["squarepi", "--scenario", "case3"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("NOT FOUND"));
    let rho: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho(|F|) = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rho > 1.0);
}

#[test]
fn rpi_writes_four_planar_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["rpi", "--scenario", "trucks-case1", "--svg"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("trucks-case1.rpi.csv")).unwrap();
    for i in 1..=4 {
        assert!(csv.contains(&format!("# set X{i}\n")));
        assert!(csv.contains(&format!("# set Z{i}\n")));
        let svg = fs::read_to_string(dir.path().join(format!("trucks-case1.rpi.{i}.svg"))).unwrap();
        assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
        assert!(svg.contains("pattern"));
    }
    // Every Z vertex lies in the X box [-2, 2] x [-8, 8].
    let mut in_z = false;
    for line in csv.lines() {
        if let Some(name) = line.strip_prefix("# set ") {
            in_z = name.starts_with('Z');
            continue;
        }
        if in_z {
            let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!(v[0].abs() <= 2.0 && v[1].abs() <= 8.0, "{line}");
        }
    }
}

#[test]
fn simulate_is_reproducible_and_admissible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["simulate", "--scenario", "trucks-case1", "--mode", "tmpc", "-T", "100", "--seed", "7"];
    let oa = run(&args, a.path());
    let ob = run(&args, b.path());
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(ob.status.code(), Some(0));
    for name in ["trucks-case1.tmpc.seed7.csv", "trucks-case1.tmpc.seed7.summary.json"] {
        let fa = fs::read(a.path().join(name)).unwrap();
        let fb = fs::read(b.path().join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between runs");
    }
    let csv = fs::read_to_string(a.path().join("trucks-case1.tmpc.seed7.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 400);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(&cols[8..11], &["1", "1", "1"], "{row}");
    }
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(a.path().join("trucks-case1.tmpc.seed7.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["all_in_tube"], true);
}

#[test]
fn simulate_linear_and_propagate_modes() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["linear", "tmpc-propagate"] {
        let o = run(
            &["simulate", "--scenario", "trucks-case1", "--mode", mode, "-T", "30", "--seed", "3"],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{mode}");
        assert!(dir.path().join(format!("trucks-case1.{mode}.seed3.csv")).is_file());
    }
    let o = run(&["simulate", "--scenario", "trucks-case1", "--mode", "bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
