//! Command-line front end: loads a scenario config (or writes a preset),
//! runs it, and writes the output files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use wsnsim::scenario::output::{ensure_writable, write_artifacts};
use wsnsim::scenario::preset::preset_by_name;
use wsnsim::scenario::{run_batch, run_scenario, ExecutionMode, RunOptions, ScenarioConfig};
use wsnsim::time::SimTime;

#[derive(Parser)]
#[command(
    name = "wsnsim",
    version,
    about = "Discrete-event simulator for energy-aware wireless sensor networks"
)]
struct Cli {
    /// Scenario configuration file.
    #[arg(long, value_name = "PATH", required_unless_present = "preset")]
    config: Option<PathBuf>,

    /// Override the config's random seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Override the simulation horizon, in seconds.
    #[arg(long, value_name = "SECONDS")]
    until: Option<f64>,

    /// Output directory for result files.
    #[arg(long, value_name = "DIR", default_value = "./out")]
    out: PathBuf,

    /// Also write the event dispatch trace (event_trace.csv).
    #[arg(long)]
    trace: bool,

    /// Write a built-in preset config (<name>.cfg in the current
    /// directory) and exit.
    #[arg(long, value_name = "static|mobile")]
    preset: Option<String>,

    /// Run one replication per seed, each into <out>/seed_<N>/.
    /// Replications execute in parallel when built with the `parallel`
    /// feature (the default).
    #[arg(long, value_name = "N1,N2,...", value_delimiter = ',', num_args = 1..)]
    seeds: Vec<u64>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(name) = &cli.preset {
        return match preset_by_name(name) {
            Some(text) => {
                let path = PathBuf::from(format!("{name}.cfg"));
                match std::fs::write(&path, text) {
                    Ok(()) => {
                        println!("wrote preset config to {}", path.display());
                        ExitCode::SUCCESS
                    }
                    Err(e) => {
                        eprintln!("cannot write {}: {e}", path.display());
                        ExitCode::from(EXIT_CONFIG)
                    }
                }
            }
            None => {
                eprintln!("unknown preset '{name}' (available: static, mobile)");
                ExitCode::from(EXIT_CONFIG)
            }
        };
    }

    let config_path = cli.config.as_ref().expect("clap enforces --config");
    let mut cfg = match ScenarioConfig::load(config_path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(until) = cli.until {
        if !(until >= 0.0) {
            eprintln!("config error: --until must be non-negative");
            return ExitCode::from(EXIT_CONFIG);
        }
        cfg.until = SimTime::from_secs_f64(until);
    }

    if let Err(e) = ensure_writable(&cli.out) {
        eprintln!("output directory {} is not writable: {e}", cli.out.display());
        return ExitCode::from(EXIT_CONFIG);
    }

    let opts = RunOptions {
        trace: cli.trace,
        record_receptions: false,
    };

    if !cli.seeds.is_empty() {
        let runs = match run_batch(&cfg, &cli.seeds, &opts, ExecutionMode::default()) {
            Ok(runs) => runs,
            Err(e) => {
                eprintln!("runtime fault: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
        };
        for run in &runs {
            let dir = cli.out.join(format!("seed_{}", run.seed));
            if let Err(e) = write_artifacts(&run.artifacts, &dir) {
                eprintln!("cannot write outputs to {}: {e}", dir.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
            print_summary(run.seed, &run.artifacts, &dir);
        }
        return ExitCode::SUCCESS;
    }

    match run_scenario(&cfg, &opts) {
        Ok(artifacts) => {
            if let Err(e) = write_artifacts(&artifacts, &cli.out) {
                eprintln!("cannot write outputs to {}: {e}", cli.out.display());
                return ExitCode::from(EXIT_RUNTIME);
            }
            print_summary(artifacts.seed, &artifacts, &cli.out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("runtime fault: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn print_summary(seed: u64, artifacts: &wsnsim::scenario::RunArtifacts, dir: &std::path::Path) {
    let s = &artifacts.summary;
    println!(
        "seed {seed}: {} events, {} frames sent, {} decoded, {} dropped, \
         {} rssi records, end {} s -> {}",
        s.events_dispatched,
        s.frames_sent,
        s.receptions_decoded,
        s.receptions_dropped,
        artifacts.rssi_log.len(),
        s.end_time.fmt_secs6(),
        dir.display()
    );
}
