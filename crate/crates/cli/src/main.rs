use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ergodim::harness::{emit_report, run_experiment, ExperimentConfig, Format, Task};

#[derive(Parser)]
#[command(name = "ergodim", version, about = "Run ergodim experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    task: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal Lyapunov exponent
    Chi(Common),
    /// Block entropy rates
    Entropy(Common),
    /// Local entropy from Bowen-ball masses
    BrinKatok(Common),
    /// Subordinate partition construction and atom check
    PartitionBuild(Common),
    /// Local Shannon-McMillan-Breiman check
    SmbCheck(Common),
    /// Unstable-set dimension estimates
    Dimension(Common),
    /// Dimension vs entropy/exponent ratio
    Verify(Common),
    /// Weighted-shift operator norms and exponent
    AppendixHilbert(Common),
    /// Hamming-ball counts against their bounds
    HammingBounds(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "json,csv")]
    format: Vec<String>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Task, Common) {
        match self {
            Command::Chi(c) => (Task::Chi, c),
            Command::Entropy(c) => (Task::Entropy, c),
            Command::BrinKatok(c) => (Task::BrinKatok, c),
            Command::PartitionBuild(c) => (Task::PartitionBuild, c),
            Command::SmbCheck(c) => (Task::SmbCheck, c),
            Command::Dimension(c) => (Task::Dimension, c),
            Command::Verify(c) => (Task::Verify, c),
            Command::AppendixHilbert(c) => (Task::AppendixHilbert, c),
            Command::HammingBounds(c) => (Task::HammingBounds, c),
        }
    }
}

fn run(task: Task, args: Common) -> ergodim::Result<i32> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if cfg.task != task {
        return Err(ergodim::Error::ConfigInvalid {
            field: "task".into(),
            message: format!("config is for {}, subcommand is {}", cfg.task.name(), task.name()),
        });
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let formats = args.format.iter().map(|f| f.parse()).collect::<ergodim::Result<Vec<Format>>>()?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ergodim::Error::ConfigInvalid { field: "threads".into(), message: e.to_string() })?;
    }
    let out = args.out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    let report = run_experiment(&cfg)?;
    for p in emit_report(&report, &out, &formats)? {
        println!("{}", p.display());
    }
    if let Some(e) = &report.error {
        eprintln!("task failed: {e}");
    }
    for d in &report.diagnostics {
        eprintln!("flag: {d}");
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let (task, args) = Cli::parse().task.split();
    match run(task, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
