//! One beamforming block and one phase block at a feasible start, with the
//! rank gap of each lifted solution and the value after rank-one extraction.
//!
//! ```text
//! cargo run --release --example lifted_blocks
//! ```

use hybrid_ris::ao::{initialize, SolverOptions};
use hybrid_ris::channel::{generate, stream_rng, FadingParams, Geometry, Stream};
use hybrid_ris::fp::{surrogate_at, FpAuxiliaries};
use hybrid_ris::model::{effective_channels, GainMatrix};
use hybrid_ris::subproblems::{extract_phases, solve_beamforming, solve_phase, LiftParams, LiftedPhase};
use hybrid_ris::{HybridPhaseConfig, SystemConfig};

fn main() -> hybrid_ris::Result<()> {
    let cfg = SystemConfig::reference_point();
    let ch = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(2, Stream::Channel, 0))?;
    let (start, ..) = initialize(&cfg, &ch, &SolverOptions::default(), &mut stream_rng(2, Stream::Solver, 0))?;
    let h = effective_channels(&ch, &start.phases)?;
    let aux = FpAuxiliaries::refresh(&GainMatrix::new(&h, &start.beams)?, &cfg.noise_power)?;
    let t = start.t;

    for trust in [1.0, 0.1, 0.01] {
        let params = LiftParams { trust, ..LiftParams::default() };
        let beam = solve_beamforming(&cfg, &h, t, &aux, &start.beams, &params)?;
        let extracted = beam.lifted.principal();
        let value = surrogate_at(&GainMatrix::new(&h, &extracted)?, &aux, &cfg.noise_power, cfg.frame, t)?;
        println!(
            "beams,  trust {trust:>5}: {:.4} -> lifted {:.4}, extracted {value:.4}, rank gap {:.2e} ({})",
            beam.prev_objective,
            beam.objective,
            beam.lifted.rank_gap(),
            beam.status
        );

        let prev = LiftedPhase::rank_one(&start.phases.theta_coh);
        let phase = solve_phase(&cfg, &ch, &start.phases.theta_fix, &start.beams, t, &aux, &prev, &params)?;
        let theta = extract_phases(&phase.lifted)?;
        let ph = HybridPhaseConfig::new(theta, start.phases.theta_fix.clone());
        let g = GainMatrix::new(&effective_channels(&ch, &ph)?, &start.beams)?;
        let value = surrogate_at(&g, &aux, &cfg.noise_power, cfg.frame, t)?;
        println!(
            "phases, trust {trust:>5}: {:.4} -> lifted {:.4}, extracted {value:.4}, rank gap {:.2e} ({})",
            phase.prev_objective,
            phase.objective,
            phase.lifted.rank_gap(),
            phase.status
        );
    }
    Ok(())
}
