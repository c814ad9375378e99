//! Which bound pins the delivery time as the beam power and rate targets vary.
//!
//! ```text
//! cargo run --release --example delivery_time
//! ```

use hybrid_ris::subproblems::solve_delivery_time;
use hybrid_ris::SystemConfig;

fn main() {
    // Two coherent elements, so the energy budget can bind before the control link.
    let mut cfg = SystemConfig::reference_point();
    cfg.n_coh = 2;
    println!("control link alone: t ≥ {} s", cfg.min_delivery_time());
    for power in [0.05, 0.1, 1.0, 1.1, 1.2, 1.25] {
        match solve_delivery_time(&cfg, &[1e3; 4], power) {
            Ok(t) => println!("beam power {power:>4} W: t = {t:.4} s"),
            Err(e) => println!("beam power {power:>4} W: {e}"),
        }
    }

    let mut strict = SystemConfig::reference_point();
    strict.min_rate = vec![3.0; 4];
    for gamma in [1e2, 1e4, 1e5, 1e6] {
        match solve_delivery_time(&strict, &[gamma; 4], 0.1) {
            Ok(t) => println!("R_min 3 bits at SINR {gamma:e}: t = {t:.4} s"),
            Err(e) => println!("R_min 3 bits at SINR {gamma:e}: {e}"),
        }
    }
}
