//! The quadratic-transform surrogate: tight where its auxiliaries were
//! refreshed, below the throughput elsewhere.
//!
//! ```text
//! cargo run --release --example fp_surrogate
//! ```

use hybrid_ris::channel::{generate, stream_rng, FadingParams, Geometry, Stream};
use hybrid_ris::fp::{surrogate_at, FpAuxiliaries};
use hybrid_ris::linalg::CVector;
use hybrid_ris::model::{effective_channels, throughput, GainMatrix};
use hybrid_ris::{BeamformerSet, HybridPhaseConfig, SystemConfig};
use num_complex::Complex64;
use rand::Rng;

fn random_beams<R: Rng>(cfg: &SystemConfig, scale: f64, rng: &mut R) -> BeamformerSet {
    BeamformerSet::new(
        (0..cfg.users)
            .map(|_| CVector::from_fn(cfg.antennas, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale))
            .collect(),
    )
}

fn main() -> hybrid_ris::Result<()> {
    let cfg = SystemConfig::reference_point();
    let ch = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(4, Stream::Channel, 0))?;
    let mut rng = stream_rng(4, Stream::Solver, 0);
    let phases = HybridPhaseConfig::new(vec![0.5; cfg.n_coh], vec![1.5; cfg.n_fix]);
    let h = effective_channels(&ch, &phases)?;
    let t = cfg.min_delivery_time();

    let base = random_beams(&cfg, 1.0, &mut rng);
    let gains = GainMatrix::new(&h, &base)?;
    let aux = FpAuxiliaries::refresh(&gains, &cfg.noise_power)?;
    let exact: f64 = throughput(&gains.sinr(&cfg.noise_power)?, cfg.frame, t)?.iter().sum();
    let sur = surrogate_at(&gains, &aux, &cfg.noise_power, cfg.frame, t)?;
    println!("at the refresh point: throughput {exact:.6}, surrogate {sur:.6}");

    println!("moving away with the auxiliaries held:");
    for step in [0.01, 0.1, 0.5] {
        let delta = random_beams(&cfg, step, &mut rng);
        let moved = BeamformerSet::new(base.w.iter().zip(&delta.w).map(|(a, d)| a + d).collect());
        let g = GainMatrix::new(&h, &moved)?;
        let exact: f64 = throughput(&g.sinr(&cfg.noise_power)?, cfg.frame, t)?.iter().sum();
        let sur = surrogate_at(&g, &aux, &cfg.noise_power, cfg.frame, t)?;
        println!("  step {step:>4}: throughput {exact:10.6}, surrogate {sur:10.6}, gap {:.3e}", exact - sur);
    }
    Ok(())
}
