use std::path::Path;
use std::process::{Command, Output};

fn squint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_squint"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const CONFIG: &str = r#"{"schema_version":1,"horizon":200,"seed":4,
    "game":{"mode":"experts","k":3,"algorithm":{"name":"squint_improper"}},
    "environment":{"generator":"stochastic","means":[0.2,0.5,0.7]}}"#;

#[test]
fn run_then_audit_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CONFIG);
    let csv = dir.path().join("out.csv");
    let summary = dir.path().join("out.json");
    let out = squint(&["run", &cfg, "--csv", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,loss_1,loss_2,loss_3,w_1,w_2,w_3,R_e1,V_e1,bound_e1"));
    assert_eq!(text.lines().count(), 201);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["bound_violation"], false);
    assert_eq!(json["rounds"], 200);

    let audit = squint(&["audit", csv.to_str().unwrap()]);
    assert_eq!(audit.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&audit.stdout).unwrap();
    assert_eq!(report["rows"], 200);
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", CONFIG);
    let mut bytes = Vec::new();
    for i in 0..2 {
        let csv = dir.path().join(format!("{i}.csv"));
        let summary = dir.path().join(format!("{i}.json"));
        let out = squint(&["run", &cfg, "--csv", csv.to_str().unwrap(), "--summary", summary.to_str().unwrap()]);
        assert!(out.status.success());
        bytes.push((std::fs::read(csv).unwrap(), std::fs::read(summary).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn tampered_csv_fails_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "bad.csv",
        "t,loss_1,loss_2,w_1,w_2,R_e1,V_e1,bound_e1,potential\n1,1,0,0.5,0.5,-0.5,0.25,-1,\n",
    );
    let out = squint(&["audit", &csv]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn enumerate_lists_concepts() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", r#"{"kind":"k_subsets","k":4,"m":2}"#);
    let out = squint(&["enumerate", &spec]);
    assert!(out.status.success());
    let lines: Vec<Vec<u8>> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert!(lines.iter().all(|v| v.iter().map(|&b| b as u32).sum::<u32>() == 2));
    let capped = squint(&["enumerate", &spec, "--cap", "3"]);
    assert_eq!(capped.status.code(), Some(2));
}

#[test]
fn grid_prints_the_rates() {
    let out = squint(&["grid", "8"]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "i,eta,gamma\n1,0.5,0.25\n2,0.25,0.25\n3,0.125,0.25\n4,0.0625,0.25\n"
    );
    assert_eq!(squint(&["grid", "0"]).status.code(), Some(2));
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", &CONFIG.replace("\"seed\":4", "\"seed\":4,\"extra\":1"));
    assert_eq!(squint(&["run", &cfg]).status.code(), Some(2));
}

#[test]
fn sample_configs_run_clean() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut runs = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if !text.contains("schema_version") {
            let out = squint(&["enumerate", path.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", path.display());
            continue;
        }
        let csv = dir.path().join("out.csv");
        let summary = dir.path().join("out.json");
        let out = squint(&[
            "run",
            path.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        let audit = squint(&["audit", csv.to_str().unwrap()]);
        assert_eq!(audit.status.code(), Some(0), "{}", path.display());
        runs += 1;
    }
    assert_eq!(runs, 3);
}
