//! Draws channels from the geometry and compares the average received power
//! of each hop with its path loss.
//!
//! ```text
//! cargo run --release --example channel_draws -- [draws]
//! ```

use hybrid_ris::channel::{distance, generate, generate_stacked, path_loss, stream_rng, FadingParams, Geometry, Stream};
use hybrid_ris::SystemConfig;

fn main() -> hybrid_ris::Result<()> {
    let draws: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let cfg = SystemConfig::reference_point();
    let geom = Geometry::default();
    let fading = FadingParams::default();

    let expected = path_loss(distance(geom.bs_pos, geom.ris_pos), fading.alpha_br, fading.pl0_db)?;
    let mut mean = 0.0;
    for i in 0..draws {
        let ch = generate(&geom, &fading, &cfg, &mut stream_rng(0, Stream::Channel, i as u64))?;
        let (h, _) = ch.stacked();
        mean += h.iter().map(|z| z.norm_sqr()).sum::<f64>() / h.len() as f64;
    }
    mean /= draws as f64;
    println!("BS-RIS hop: mean |h|² {mean:.4e}, path loss {expected:.4e} (ratio {:.3})", mean / expected);

    // The same stream index gives the same draw, and a larger surface only
    // appends elements.
    let small = generate_stacked(&geom, &fading, cfg.antennas, cfg.users, 8, &mut stream_rng(9, Stream::Channel, 0))?;
    let large = generate_stacked(&geom, &fading, cfg.antennas, cfg.users, 16, &mut stream_rng(9, Stream::Channel, 0))?;
    let prefix = (0..8).all(|n| small.0.row(n) == large.0.row(n));
    println!("8-element surface is a prefix of the 16-element one: {prefix}");
    Ok(())
}
