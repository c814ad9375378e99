//! The per-block programs of the alternating optimizer.
//!
//! * [`solve_delivery_time`]: a one-dimensional LP in `t`, solved in closed form.
//! * [`solve_beamforming`]: the lifted beamforming SDP.
//! * [`solve_phase`]: the lifted phase-shift SDP.
//! * [`min_power_beams`]: a min-power SOCP used to find a starting point that
//!   meets the rate constraints.
//!
//! Both lifted programs couple a PSD matrix `X` with a vector `x` through the
//! Schur block `[[X, x], [x^H, 1]] ⪰ 0` (i.e. `X ⪰ x x^H`) and pull `X` back
//! toward rank one with the linearized bound
//! `Tr X ≤ 2 Re⟨x_prev, x⟩ − ‖x_prev‖² + slack`. With `slack = 0` the two
//! constraints together admit only `x = x_prev`, since
//! `‖x‖² ≤ Tr X ≤ ‖x‖² − ‖x − x_prev‖²`. A positive slack turns the bound into
//! a trust region of radius `√slack` around the previous point; the optimizer
//! shrinks it when a step is rejected.

mod beam;
mod init;
mod phase;

pub use beam::{solve_beamforming, BeamOutcome, LiftedBeam};
pub use init::min_power_beams;
pub use phase::{build_h1, extract_phases, solve_phase, LiftedPhase, PhaseOutcome};

use crate::conic::{ComplexVecVar, LinExpr};
use crate::error::{Block, Error, Result};
use crate::linalg::{norm_sqr, CVector};
use crate::model::{SystemConfig, FEASIBILITY_TOL};

/// Default conic tolerance (gap and feasibility).
pub const CONIC_TOL: f64 = 1e-8;

/// Relative slack allowed when checking that a lifted program did not lose
/// objective value against its expansion point.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Settings shared by the lifted programs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftParams {
    /// Trust-region slack of the linearized trace bound, in units of the
    /// normalized variable's scale.
    pub trust: f64,
    pub conic_tol: f64,
}

impl Default for LiftParams {
    fn default() -> Self {
        LiftParams {
            trust: 1.0,
            conic_tol: CONIC_TOL,
        }
    }
}

/// Shortest delivery time compatible with the bit budget, the energy budget
/// and every user's minimum rate at the given SINRs and total beam power.
///
/// Lower bounds: `b·N_coh/R_F`, and `(E_max − T·P)/(p − P)` when `p < P`.
/// Upper bounds: `T`, `T − R_min,k / log₂(1 + γ_k)` for each user with a rate
/// requirement, and `(E_max − T·P)/(p − P)` when `p > P`. When `p = P` the
/// energy constraint does not involve `t`.
pub fn solve_delivery_time(cfg: &SystemConfig, gamma: &[f64], total_power: f64) -> Result<f64> {
    if gamma.len() != cfg.users {
        return Err(Error::Config(format!(
            "{} SINRs for {} users",
            gamma.len(),
            cfg.users
        )));
    }
    let frame = cfg.frame;
    let mut lower = cfg.min_delivery_time();
    let mut upper = frame;
    for (k, &g) in gamma.iter().enumerate() {
        if cfg.min_rate[k] > 0.0 {
            let bits_per_second = g.ln_1p() / std::f64::consts::LN_2;
            let bound = if bits_per_second > 0.0 {
                frame - cfg.min_rate[k] / bits_per_second
            } else {
                f64::NEG_INFINITY
            };
            upper = upper.min(bound);
        }
    }
    let (p, e) = (cfg.delivery_power, cfg.energy_budget);
    if p != total_power {
        let bound = (e - frame * total_power) / (p - total_power);
        if p < total_power {
            lower = lower.max(bound);
        } else {
            upper = upper.min(bound);
        }
    } else if frame * total_power > e {
        return Err(Error::SubproblemInfeasible {
            block: Block::DeliveryTime,
            lower: f64::INFINITY,
            upper,
        });
    }
    // Iterates are accepted at the feasibility tolerance, so a rate bound may
    // sit marginally below the delivery bound.
    if lower > upper + FEASIBILITY_TOL * frame {
        return Err(Error::SubproblemInfeasible {
            block: Block::DeliveryTime,
            lower,
            upper,
        });
    }
    Ok(lower.max(0.0))
}

/// First-order lower bound of `‖x‖²` around `x_prev`:
/// `2 Re⟨x_prev, x⟩ − ‖x_prev‖²`.
pub fn linearize_trace(x_prev: &CVector, x: &CVector) -> Result<f64> {
    if x_prev.len() != x.len() {
        return Err(Error::Config(format!(
            "linearization point has length {}, variable {}",
            x_prev.len(),
            x.len()
        )));
    }
    Ok(2.0 * x_prev.dotc(x).re - norm_sqr(x_prev))
}

/// The same bound as an affine expression in a vector variable.
pub(crate) fn linearized_trace_expr(x_prev: &CVector, x: &ComplexVecVar) -> LinExpr {
    let mut e = LinExpr::constant(-norm_sqr(x_prev));
    for (i, z) in x_prev.iter().enumerate() {
        let xi = x.entry(i);
        e.add_scaled(&xi.re, 2.0 * z.re);
        e.add_scaled(&xi.im, 2.0 * z.im);
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn delivery_time_at_reference_point() {
        let cfg = SystemConfig::reference_point();
        let t = solve_delivery_time(&cfg, &[1e3; 4], 0.1).unwrap();
        assert!((t - 0.8).abs() < 1e-15);
    }

    #[test]
    fn no_coherent_elements_no_delivery() {
        let mut cfg = SystemConfig::reference_point();
        cfg.n_coh = 0;
        assert_eq!(solve_delivery_time(&cfg, &[1e3; 4], 0.1).unwrap(), 0.0);
    }

    #[test]
    fn crossed_rate_bound_is_infeasible() {
        let mut cfg = SystemConfig::reference_point();
        cfg.min_rate = vec![5.0; 4];
        let err = solve_delivery_time(&cfg, &[3.0; 4], 0.1).unwrap_err();
        match err {
            Error::SubproblemInfeasible { lower, upper, .. } => {
                assert!((lower - 0.8).abs() < 1e-12);
                assert!((upper - (1.0 - 2.5)).abs() < 1e-12);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn energy_bound_binds_below_beam_power() {
        // p < P: t ≥ (E − T P)/(p − P) = (1 − 1.5)/(0.1 − 1.5)
        let mut cfg = SystemConfig::reference_point();
        cfg.n_coh = 1;
        let t = solve_delivery_time(&cfg, &[1e6; 4], 1.5).unwrap();
        assert!((t - 0.5 / 1.4).abs() < 1e-14);
        // p > P: energy becomes an upper bound that crosses the delivery bound
        cfg.n_coh = 8;
        cfg.delivery_power = 2.0;
        cfg.energy_budget = 1.0;
        assert!(solve_delivery_time(&cfg, &[1e6; 4], 0.5).is_err());
    }

    #[test]
    fn equal_powers_have_no_energy_bound() {
        let mut cfg = SystemConfig::reference_point();
        cfg.delivery_power = 0.5;
        let t = solve_delivery_time(&cfg, &[1e3; 4], 0.5).unwrap();
        assert!((t - 0.8).abs() < 1e-15);
    }

    #[test]
    fn linearization_touches() {
        let x = CVector::from_vec(vec![Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.1)]);
        assert!((linearize_trace(&x, &x).unwrap() - norm_sqr(&x)).abs() < 1e-12);
        let zero = CVector::zeros(2);
        assert_eq!(linearize_trace(&zero, &x).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn linearization_minorizes(v in proptest::collection::vec(-10.0f64..10.0, 12)) {
            let a = CVector::from_fn(3, |i, _| Complex64::new(v[2 * i], v[2 * i + 1]));
            let b = CVector::from_fn(3, |i, _| Complex64::new(v[6 + 2 * i], v[7 + 2 * i]));
            prop_assert!(linearize_trace(&a, &b).unwrap() <= norm_sqr(&b) + 1e-12);
        }
    }
}
