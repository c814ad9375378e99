//! A small energy-budget sweep comparing the hybrid surface with its
//! baselines, written as CSV and JSON.
//!
//! ```text
//! cargo run --release --example baseline_sweep -- [realizations] [out_dir]
//! ```

use std::path::PathBuf;

use hybrid_ris::sweep::{emit, run_scenario, Baseline, OutputFormat, ScenarioId, ScenarioSpec};

fn main() -> hybrid_ris::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let realizations: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let out: PathBuf = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hybrid-ris-sweep"));

    let mut spec = ScenarioSpec::preset(ScenarioId::Fig2c).expect("built-in scenario");
    spec.realizations = realizations;
    spec.seed = 11;
    let result = run_scenario(&spec, None)?;

    print!("{:>8}", "E_max");
    for b in &spec.baselines {
        print!("{:>18}", b.to_string());
    }
    println!();
    let scores: Vec<Vec<f64>> = spec.baselines.iter().map(|&b| result.scores(b)).collect();
    for (g, e) in spec.grid.iter().enumerate() {
        print!("{e:>8}");
        for s in &scores {
            print!("{:>18.3}", s[g]);
        }
        println!();
    }
    let coherent = result.point(0, Baseline::FullyCoherent).map_or(0, |p| p.n_infeasible);
    println!("fully coherent surface infeasible in {coherent} of {realizations} draws at the lowest budget");

    for path in emit(&result, &out, OutputFormat::Both)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
