//! Evaluates rates, energy and constraint slacks at a hand-built point.
//!
//! ```text
//! cargo run --release --example system_model
//! ```

use hybrid_ris::ao::{initialize, SolverOptions};
use hybrid_ris::channel::{generate, stream_rng, FadingParams, Geometry, Stream};
use hybrid_ris::linalg::CVector;
use hybrid_ris::model::{check_feasibility, effective_channels, energy_used, sinr};
use hybrid_ris::{BeamformerSet, HybridPhaseConfig, Solution, SystemConfig};
use num_complex::Complex64;

fn main() -> hybrid_ris::Result<()> {
    let cfg = SystemConfig::reference_point();
    cfg.validate()?;
    println!(
        "M = {}, K = {}, N_coh = {}, N_fix = {}, delivery takes {} s of a {} s frame",
        cfg.antennas,
        cfg.users,
        cfg.n_coh,
        cfg.n_fix,
        cfg.min_delivery_time(),
        cfg.frame
    );
    let ch = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(1, Stream::Channel, 0))?;

    // All phases zero, matched-filter beams sharing the budget left after delivery.
    let phases = HybridPhaseConfig::new(vec![0.0; cfg.n_coh], vec![0.0; cfg.n_fix]);
    let t = cfg.min_delivery_time();
    let h = effective_channels(&ch, &phases)?;
    let per_user = cfg.available_power(t) / cfg.users as f64;
    let beams = BeamformerSet::new(
        h.iter()
            .map(|hk| {
                let v: CVector = hk.map(|z| z.conj());
                let n = v.norm();
                v * Complex64::new(per_user.sqrt() / n, 0.0)
            })
            .collect(),
    );

    let gamma = sinr(&h, &beams, &cfg.noise_power)?;
    let sol = Solution::evaluate(&cfg, &ch, phases, beams, t)?;
    for (k, (g, r)) in gamma.iter().zip(&sol.per_user_rate).enumerate() {
        println!("user {k}: SINR {:8.2} dB, throughput {r:.3} bits", 10.0 * g.log10());
    }
    println!("sum throughput {:.3} bits", sol.objective);
    println!("energy used {:.4} J of {}", energy_used(t, cfg.delivery_power, &sol.beams, cfg.frame)?, cfg.energy_budget);
    let rep = check_feasibility(&sol, &cfg, &ch)?;
    println!("rate slacks {:?}", rep.rate_slack);
    println!("feasible: {}", rep.feasible);

    // The optimizer's starting point meets every rate target.
    let (start, ..) = initialize(&cfg, &ch, &SolverOptions::default(), &mut stream_rng(1, Stream::Solver, 0))?;
    let rep = check_feasibility(&start, &cfg, &ch)?;
    println!(
        "initializer: sum throughput {:.3} bits, min rate slack {:.3} bits, feasible: {}",
        start.objective,
        rep.min_rate_slack(),
        rep.feasible
    );
    Ok(())
}
