//! Solves one instance at the reference operating point and prints the convergence trace.
//!
//! ```text
//! cargo run --release --example solve_instance -- [seed]
//! ```

use hybrid_ris::channel::{generate, stream_rng, FadingParams, Geometry, Stream};
use hybrid_ris::model::check_feasibility;
use hybrid_ris::{solve, SolverOptions, SystemConfig};

fn main() -> hybrid_ris::Result<()> {
    env_logger::init();
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = SystemConfig::reference_point();
    let ch = generate(
        &Geometry::default(),
        &FadingParams::default(),
        &cfg,
        &mut stream_rng(seed, Stream::Channel, 0),
    )?;
    let opts = SolverOptions {
        seed,
        ..SolverOptions::default()
    };
    let (sol, trace) = solve(&cfg, &ch, &opts)?;

    println!("iter  surrogate    throughput   t       beam-trust  phase-trust  elapsed");
    for r in &trace.records {
        println!(
            "{:>4}  {:>11.6}  {:>11.6}  {:.4}  {:>10}  {:>11}  {:.2}s",
            r.iter,
            r.surrogate,
            r.throughput,
            r.t,
            r.beam_trust.map_or("-".into(), |v| v.to_string()),
            r.phase_trust.map_or("-".into(), |v| v.to_string()),
            r.elapsed_s
        );
    }
    let rep = check_feasibility(&sol, &cfg, &ch)?;
    println!("status {:?} after {} iterations", trace.status, trace.iterations);
    println!("sum throughput {:.4} bits, per user {:?}", sol.objective, sol.per_user_rate);
    println!(
        "energy slack {:.3e} J, min rate slack {:.3e} bits, feasible {}",
        rep.energy_slack,
        rep.min_rate_slack(),
        rep.feasible
    );
    Ok(())
}
