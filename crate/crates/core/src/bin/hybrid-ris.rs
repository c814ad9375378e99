use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hybrid_ris::analysis::{analyze, SimpleScenario};
use hybrid_ris::sweep::{emit, load_spec, run_scenario, solve_instance, InstanceSpec, OutputFormat, ScenarioId, ScenarioSpec};
use hybrid_ris::Error;

#[derive(Parser)]
#[command(version, about = "Throughput optimization for RIS-aided downlinks with phase delivery overhead")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one channel realization and write the solution with its trace.
    Solve(Common),
    /// Run a Monte-Carlo sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Built-in scenario used when no --config is given.
        #[arg(long, value_enum, default_value = "fig2c")]
        scenario: Preset,
        /// Override the number of channel realizations.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Evaluate the single-user closed forms against their numerical oracles.
    Analyze(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    /// Worker threads for sweeps.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Both => OutputFormat::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig2a,
    Fig2b,
    Fig2c,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> hybrid_ris::Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn write(path: PathBuf, contents: String) -> hybrid_ris::Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(&path, contents).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn wants(format: Format, csv: bool) -> bool {
    matches!((format, csv), (Format::Both, _) | (Format::Csv, true) | (Format::Json, false))
}

fn run(cli: Cli) -> hybrid_ris::Result<Vec<PathBuf>> {
    match cli.command {
        Command::Solve(c) => {
            let mut spec: InstanceSpec = match &c.config {
                Some(p) => read_json(p)?,
                None => InstanceSpec::default(),
            };
            if let Some(seed) = c.seed {
                spec.seed = seed;
            }
            let report = solve_instance(&spec)?;
            println!(
                "sum throughput {:.4} bits at t = {:.4} s after {} iterations ({:?})",
                report.solution.objective, report.solution.t, report.trace.iterations, report.trace.status
            );
            let mut written = Vec::new();
            if wants(c.format, false) {
                written.push(write(c.out.join("solution.json"), serde_json::to_string_pretty(&report)?)?);
            }
            if wants(c.format, true) {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in &report.trace.records {
                    w.serialize(r)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
                written.push(write(c.out.join("trace.csv"), String::from_utf8_lossy(&bytes).into_owned())?);
            }
            Ok(written)
        }
        Command::Sweep {
            common: c,
            scenario,
            realizations,
        } => {
            let mut spec = match &c.config {
                Some(p) => load_spec(p)?,
                None => ScenarioSpec::preset(match scenario {
                    Preset::Fig2a => ScenarioId::Fig2a,
                    Preset::Fig2b => ScenarioId::Fig2b,
                    Preset::Fig2c => ScenarioId::Fig2c,
                })
                .expect("built-in scenario"),
            };
            if let Some(seed) = c.seed {
                spec.seed = seed;
            }
            if let Some(r) = realizations {
                spec.realizations = r;
            }
            let result = run_scenario(&spec, c.workers)?;
            for p in &result.points {
                println!(
                    "{:>8} {:<16} mean {:>10} feasible {}/{}",
                    p.grid_value,
                    p.baseline.to_string(),
                    p.mean_tput.map_or("-".into(), |m| format!("{m:.4}")),
                    p.n_feasible,
                    spec.realizations
                );
            }
            emit(&result, &c.out, c.format.into())
        }
        Command::Analyze(c) => {
            let scenario: SimpleScenario = match &c.config {
                Some(p) => read_json(p)?,
                None => default_scenario(),
            };
            let report = analyze(&scenario)?;
            if let Some(c1) = &report.case1 {
                println!("delivery-limited N* = {:.6} (integer {})", c1.n_star, c1.integer.best);
            }
            if let Some(c2) = &report.case2 {
                println!("energy-limited N* = {:.6} (integer {})", c2.n_star, c2.integer.best);
            }
            for n in &report.notes {
                println!("note: {n}");
            }
            Ok(vec![write(c.out.join("analysis.json"), serde_json::to_string_pretty(&report)?)?])
        }
    }
}

fn default_scenario() -> SimpleScenario {
    SimpleScenario {
        p_t: 0.5,
        p: 0.1,
        frame: 1.0,
        energy_budget: 0.4,
        bits_per_phase: 1,
        control_rate: 10.0,
        min_rate: 1.0,
        composite: 1.0,
        p_bar: 1e6,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
