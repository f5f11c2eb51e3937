use ergodim::harness::{emit_report, run_experiment, ExperimentConfig, Format, Status, Task};
use ergodim::Error;

const CAT: &str = r#"
[system]
type = "toral-automorphism"
matrix = [[2, 1], [1, 1]]
[oracle]
type = "lebesgue-torus"
"#;

const COIN: &str = r#"
[system]
type = "full-shift"
alphabet_size = 2
window = 48
metric = { kind = "dyadic" }
[oracle]
type = "bernoulli"
p = [0.5, 0.5]
"#;

const MARKOV: &str = r#"
[system]
type = "full-shift"
alphabet_size = 2
window = 48
metric = { kind = "dyadic" }
[oracle]
type = "markov"
transition = [[0.9, 0.1], [0.4, 0.6]]
"#;

const HILBERT: &str = r#"
[system]
type = "full-shift"
alphabet_size = 2
window = 64
[system.metric]
kind = "weighted-l2"
[system.metric.weights]
rule = { kind = "inverse-power", power = 2.0 }
witness = { c = 2.0, rule = { kind = "polynomial", power = 2.0 } }
[oracle]
type = "bernoulli"
p = [0.5, 0.5]
"#;

fn config(task: &str, system: &str, section: &str) -> ExperimentConfig {
    let text = format!("task = \"{task}\"\nseed = 9\n{section}\n{system}");
    ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{task}: {e}"))
}

fn all_configs() -> Vec<ExperimentConfig> {
    vec![
        config("chi", CAT, "[chi]\nr_schedule = [0.2, 0.1]\nn_max = 10\nsample_points = 30\nprobes = 16"),
        config("entropy", MARKOV, "[entropy]\nn_schedule = [1, 4, 8, 30]\nmc_samples = 2000"),
        config("brin-katok", COIN, "[brin_katok]\neps_schedule = [0.5, 0.25]\nn_schedule = [2, 4, 6]\nmode = \"monte-carlo\"\nsamples = 20000\nbase_points = 2"),
        config("partition-build", COIN, "[partition]\ndelta = 0.5\nhorizon = 20\nsample_pairs = 20"),
        config("smb-check", MARKOV, "[smb]\nn_schedule = [10, 100, 400]\nsamples = 30\nshift_k = 3"),
        config("dimension", CAT, "[dimension]\ndelta = 0.05\nbudget = 2001\nscales = [0.01, 0.005, 0.0025, 0.00125]"),
        config(
            "verify",
            COIN,
            "[verify]\ndelta = 0.5\nbudget = 256\nbase_points = 3\nscales = [0.5, 0.25, 0.125, 0.0625]\n[verify.chi]\nr_schedule = [0.5, 0.25]\nn_max = 12\nsample_points = 20\nprobes = 16",
        ),
        config("appendix-hilbert", HILBERT, "[appendix_hilbert]\nk_values = [10, 50, 100, 200]\nwindow = 1024"),
        config("hamming-bounds", COIN, "[hamming]\nn_min = 2\nn_max = 30\neps = 0.04"),
    ]
}

#[test]
fn every_task_runs_and_is_reproducible_serial_vs_parallel() {
    let configs = all_configs();
    assert_eq!(configs.len(), Task::ALL.len());
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    for cfg in configs {
        let par = run_experiment(&cfg).unwrap();
        assert_ne!(par.status, Status::Failed, "{:?}: {:?}", cfg.task, par.error);
        let ser = serial.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(par.numeric_bytes(), ser.numeric_bytes(), "{:?}", cfg.task);
        assert_eq!(run_experiment(&cfg).unwrap().numeric_bytes(), par.numeric_bytes());
    }
}

#[test]
fn increasing_eps_schedule_is_rejected_by_name() {
    let cfg = config(
        "brin-katok",
        COIN,
        "[brin_katok]\neps_schedule = [0.25, 0.5]\nn_schedule = [4, 8]\nmode = \"exact-cylinder\"",
    );
    match run_experiment(&cfg) {
        Err(Error::ConfigInvalid { field, .. }) => assert_eq!(field, "brin_katok.eps_schedule"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_and_json_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let chi = run_experiment(&all_configs()[0]).unwrap();
    emit_report(&chi, dir.path(), &[Format::Json, Format::Csv]).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("chi.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "r,n,phi_n_over_n,Lambda_r");
    assert_eq!(csv.lines().count(), 21);

    let dim = run_experiment(&all_configs()[5]).unwrap();
    emit_report(&dim, dir.path(), &[Format::Csv]).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("dimension.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "scale,count,log_scale,log_count");

    let v = run_experiment(&all_configs()[6]).unwrap();
    let sub = tempfile::tempdir().unwrap();
    emit_report(&v, sub.path(), &[Format::Json]).unwrap();
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sub.path().join("report.json")).unwrap()).unwrap();
    let p = &json["payload"];
    assert!(p["dim"].is_f64() && p["h"].is_f64() && p["chi"].is_f64() && p["ratio"].is_f64() && p["slack"].is_f64());
    assert!(p["holds"].is_boolean());
    assert!(p["claim"].as_str().unwrap().contains("proxy"));
    assert_eq!(json["schema_version"], 1);
    assert!(json["parameters"]["chi_floor"].is_f64());
}

#[test]
fn hamming_report_is_flagged_for_the_crude_bound() {
    let r = run_experiment(&all_configs()[8]).unwrap();
    assert_eq!(r.status, Status::Flagged);
    assert_eq!(r.status.exit_code(), 2);
}
