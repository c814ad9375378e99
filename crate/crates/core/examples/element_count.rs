//! Closed-form coherent element counts for a single-user link, checked
//! against brute-force search.
//!
//! ```text
//! cargo run --release --example element_count
//! ```

use hybrid_ris::analysis::{
    analyze, brute_force_n, integer_pair, lambert_w0, n_star_case1, Search, SimpleScenario, TimeRule,
};

fn main() -> hybrid_ris::Result<()> {
    println!("W0(1) = {:.15}, W0(e) = {:.15}", lambert_w0(1.0)?, lambert_w0(std::f64::consts::E)?);

    let mut s = SimpleScenario {
        p_t: 0.5,
        p: 0.1,
        frame: 1.0,
        energy_budget: 0.6,
        bits_per_phase: 1,
        control_rate: 10.0,
        min_rate: 1.0,
        composite: 1.0,
        p_bar: 1e4,
    };
    println!("delivery-limited optimum as the SNR grows:");
    for snr in [1e4, 1e6, 1e8] {
        s.p_bar = snr;
        let n = n_star_case1(&s)?;
        let bf = brute_force_n(&s, TimeRule::Delivery, (0.0, s.max_elements()), Search::Golden)?;
        let pair = integer_pair(&s, n, TimeRule::Delivery)?;
        println!(
            "  p̄C = {snr:e}: N* = {n:.4}, golden section {:.4}, exact-objective argmax {:.4}, best integer {}",
            bf.leading_argmax, bf.exact_argmax, pair.best
        );
    }

    // An energy budget below T·p_t pins t instead.
    s.energy_budget = 0.3;
    let report = analyze(&s)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}
