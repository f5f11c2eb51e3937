use std::fs;
use std::process::Command;

const CHI: &str = r#"
task = "chi"
seed = 2

[system]
type = "toral-automorphism"
matrix = [[2, 1], [1, 1]]

[oracle]
type = "lebesgue-torus"

[chi]
r_schedule = [0.2, 0.1]
n_max = 8
sample_points = 20
probes = 8
"#;

const HAMMING: &str = r#"
task = "hamming-bounds"
seed = 0

[system]
type = "full-shift"
alphabet_size = 2
window = 8
metric = { kind = "dyadic" }

[oracle]
type = "bernoulli"
p = [0.5, 0.5]

[hamming]
n_min = 1
n_max = 20
eps = 0.04
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ergodim"))
}

#[test]
fn chi_writes_json_and_csv_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chi.toml");
    fs::write(&cfg, CHI).unwrap();
    let mut payloads = Vec::new();
    for (threads, sub) in [("1", "a"), ("4", "b")] {
        let out = dir.path().join(sub);
        let st = bin().args(["chi", "--config"]).arg(&cfg).arg("--out").arg(&out).args(["--threads", threads]).status().unwrap();
        assert!(st.code() == Some(0) || st.code() == Some(2));
        let csv = fs::read_to_string(out.join("chi.csv")).unwrap();
        assert!(csv.starts_with("r,n,phi_n_over_n,Lambda_r"));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        payloads.push(v["payload"].to_string());
    }
    assert_eq!(payloads[0], payloads[1]);
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("chi.toml");
    fs::write(&cfg, CHI).unwrap();
    let out = dir.path().join("s");
    bin().args(["chi", "--config"]).arg(&cfg).arg("--out").arg(&out).args(["--seed", "99", "--format", "json"]).status().unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 99);
    assert!(!out.join("chi.csv").exists());
}

#[test]
fn flagged_report_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.toml");
    fs::write(&cfg, HAMMING).unwrap();
    let st = bin().args(["hamming-bounds", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(dir.path().join("hamming.csv").exists());
}

#[test]
fn invalid_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, CHI.replace("[0.2, 0.1]", "[0.1, 0.2]")).unwrap();
    let out = bin().args(["chi", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("chi.r_schedule"));
    let mismatch = bin().args(["verify", "--config"]).arg(dir.path().join("bad.toml")).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(1));
}
