use std::process::{Command, Output};

fn bestcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bestcell"))
        .args(args)
        .env_remove("BESTCELL_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn coverage_columns_and_header() {
    let o = bestcell(&[
        "coverage",
        "--eta",
        "3",
        "--sigma-db",
        "8",
        "--gamma-min-db",
        "-10",
        "--gamma-max-db",
        "20",
        "--samples",
        "50000",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("# seed = 5"));
    assert!(text.contains("# samples = 50000"));
    let (header, rows) = table(&text);
    assert_eq!(
        header,
        ["gamma_db", "coverage_analytic", "coverage_mc", "mc_stderr"]
    );
    assert_eq!(rows.len(), 31);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1] && w[1][2] <= w[0][2]);
    }
}

#[test]
fn pmax_monotone() {
    let o = bestcell(&[
        "pmax",
        "--eta",
        "3",
        "--sigma-db",
        "8",
        "--rc-list",
        "125,250,500,1000,2000",
    ]);
    assert!(o.status.success());
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, ["rc_m", "pmax_w", "power_density_w_per_km2"]);
    assert_eq!(rows.len(), 5);
    assert!(rows
        .windows(2)
        .all(|w| w[1][1] > w[0][1] && w[1][2] > w[0][2]));
}

#[test]
fn every_analytic_subcommand_runs() {
    for cmd in ["attach", "ocif", "iopr", "powerdensity", "ratedensity"] {
        let o = bestcell(&[cmd, "--no-mc"]);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let (_, rows) = table(&stdout(&o));
        assert!(!rows.is_empty(), "{cmd}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "eta = 3\nwhatever = 1\n").unwrap();
    let o = bestcell(&["pmax", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("whatever"));
    assert_eq!(bestcell(&["attach", "--eta", "2"]).status.code(), Some(2));
    assert_eq!(
        bestcell(&["coverage", "--sigma-db", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(bestcell(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn config_file_and_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(
        &path,
        "# reference run\nsigma-db = 12\nrc_list = 500,1000\nformat = json\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bestcell"))
        .args(["pmax", "--config", path.to_str().unwrap()])
        .env("BESTCELL_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pmax.json")).unwrap())
            .unwrap();
    assert_eq!(doc["config"]["sigma_db"], "1.2000000000000000e1");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_json_is_deterministic() {
    let run = |w: &str| {
        stdout(&bestcell(&[
            "simulate",
            "--samples",
            "30000",
            "--seed",
            "11",
            "--workers",
            w,
        ]))
    };
    let a = run("1");
    assert_eq!(a, run("3"));
    let doc: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(doc["result"]["total_samples"], 30000);
    assert_eq!(doc["result"]["bins"].as_array().unwrap().len(), 40);
}

#[test]
fn verify_exit_code_reflects_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.txt");
    let o = bestcell(&[
        "verify",
        "--samples",
        "20000",
        "--seed",
        "3",
        "--output",
        out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let failed = text.lines().any(|l| l.starts_with("[FAIL]"));
    assert_eq!(o.status.code(), Some(if failed { 4 } else { 0 }));
    assert_eq!(text.lines().filter(|l| l.starts_with('[')).count(), 9);
}
