//! Quadratic transform of the multi-ratio sum-rate objective.
//!
//! With auxiliaries `ρ_k` and `η_k` the sum throughput is rewritten as
//!
//! ```text
//! R_sum = (T − t) [ Σ log₂(1 + ρ_k) + (Σ f_k − Σ ρ_k) / ln 2 ]
//! f_k   = 2 η_k √((1 + ρ_k) G_kk) − η_k² (Σ_i G_ki + δ_k²)
//! ```
//!
//! where `G_ki = |h_k^H w_i|²`. For fixed `(w, Θ, t)`, `R_sum` is concave in
//! each auxiliary; `ρ_k = γ_k` and `η_k = √((1+ρ_k)G_kk) / (Σ_i G_ki + δ_k²)`
//! are the blockwise maximizers, and at those values `R_sum` coincides with
//! `Σ (T − t) log₂(1 + γ_k)`.
//!
//! The linear terms carry the `1/ln 2` factor so that the log and the linear
//! parts are measured in the same unit. Without it `R_sum` is still tight at
//! `ρ = γ` but `ρ = γ` is no longer its maximizer. The factor does not change
//! the maximizer over `(w, Θ)` with the auxiliaries fixed.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::model::{
    effective_channels, BeamformerSet, ChannelRealization, GainMatrix, HybridPhaseConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpAuxiliaries {
    pub rho: Vec<f64>,
    pub eta: Vec<f64>,
}

impl FpAuxiliaries {
    /// Both closed-form updates at the point described by `gains`.
    pub fn refresh(gains: &GainMatrix, delta2: &[f64]) -> Result<Self> {
        let rho = update_rho(&gains.sinr(delta2)?)?;
        let eta = eta_from_gains(gains, &rho, delta2);
        Ok(FpAuxiliaries { rho, eta })
    }
}

/// `ρ_k = γ_k`.
pub fn update_rho(gamma: &[f64]) -> Result<Vec<f64>> {
    if let Some(g) = gamma.iter().find(|&&g| !(g >= 0.0)) {
        return Err(Error::Domain(format!("SINR must be nonnegative, got {g}")));
    }
    Ok(gamma.to_vec())
}

pub fn update_eta(
    ch: &ChannelRealization,
    ph: &HybridPhaseConfig,
    beams: &BeamformerSet,
    rho: &[f64],
    delta2: &[f64],
) -> Result<Vec<f64>> {
    let gains = gains_of(ch, ph, beams)?;
    Ok(eta_from_gains(&gains, rho, delta2))
}

pub fn eta_from_gains(gains: &GainMatrix, rho: &[f64], delta2: &[f64]) -> Vec<f64> {
    (0..gains.users())
        .map(|k| ((1.0 + rho[k]) * gains.signal(k)).sqrt() / (gains.total(k) + delta2[k]))
        .collect()
}

pub fn surrogate_f(
    ch: &ChannelRealization,
    ph: &HybridPhaseConfig,
    beams: &BeamformerSet,
    rho: &[f64],
    eta: &[f64],
    delta2: &[f64],
) -> Result<Vec<f64>> {
    let gains = gains_of(ch, ph, beams)?;
    Ok(f_from_gains(&gains, rho, eta, delta2))
}

pub fn f_from_gains(gains: &GainMatrix, rho: &[f64], eta: &[f64], delta2: &[f64]) -> Vec<f64> {
    (0..gains.users())
        .map(|k| {
            2.0 * eta[k] * ((1.0 + rho[k]) * gains.signal(k)).sqrt()
                - eta[k] * eta[k] * (gains.total(k) + delta2[k])
        })
        .collect()
}

pub fn surrogate_objective(rho: &[f64], f: &[f64], frame: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= frame) {
        return Err(Error::Domain(format!("delivery time {t} outside [0, {frame}]")));
    }
    let logs: f64 = rho.iter().map(|r| r.ln_1p()).sum::<f64>() / LN_2;
    let linear: f64 = f.iter().sum::<f64>() - rho.iter().sum::<f64>();
    Ok((frame - t) * (logs + linear / LN_2))
}

/// `R_sum` evaluated at the point described by `gains`.
pub fn surrogate_at(
    gains: &GainMatrix,
    aux: &FpAuxiliaries,
    delta2: &[f64],
    frame: f64,
    t: f64,
) -> Result<f64> {
    let f = f_from_gains(gains, &aux.rho, &aux.eta, delta2);
    surrogate_objective(&aux.rho, &f, frame, t)
}

fn gains_of(ch: &ChannelRealization, ph: &HybridPhaseConfig, beams: &BeamformerSet) -> Result<GainMatrix> {
    let h: Vec<CVector> = effective_channels(ch, ph)?;
    GainMatrix::new(&h, beams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sinr, throughput};
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gains(rng: &mut ChaCha8Rng, k: usize, m: usize) -> (Vec<CVector>, BeamformerSet) {
        let v = |rng: &mut ChaCha8Rng| {
            CVector::from_fn(m, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        };
        let h: Vec<CVector> = (0..k).map(|_| v(rng)).collect();
        let w = BeamformerSet::new((0..k).map(|_| v(rng)).collect());
        (h, w)
    }

    #[test]
    fn trivial_values() {
        assert_eq!(update_rho(&[0.0, 4.0]).unwrap(), vec![0.0, 4.0]);
        let g = GainMatrix::from_rows(vec![vec![0.0]]);
        assert_eq!(eta_from_gains(&g, &[0.0], &[1.0]), vec![0.0]);
        assert_eq!(f_from_gains(&g, &[3.0], &[0.0], &[1.0]), vec![0.0]);
        assert_eq!(surrogate_objective(&[0.0], &[0.0], 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn single_user_eta_substitution() {
        let (a, d) = (1.7f64, 0.3f64);
        let rho = a * a / d;
        let g = GainMatrix::from_rows(vec![vec![a * a]]);
        let eta = eta_from_gains(&g, &[rho], &[d])[0];
        let expect = ((1.0 + a * a / d) * a * a).sqrt() / (a * a + d);
        assert!((eta - expect).abs() < 1e-15);
    }

    #[test]
    fn unit_sinr_gives_one_bit() {
        let g = GainMatrix::from_rows(vec![vec![1.0]]);
        let aux = FpAuxiliaries::refresh(&g, &[1.0]).unwrap();
        let r = surrogate_at(&g, &aux, &[1.0], 1.0, 0.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn f_at_optimal_eta_matches_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (h, w) = random_gains(&mut rng, 4, 8);
        let d2 = [0.01, 0.02, 0.05, 0.1];
        let g = GainMatrix::new(&h, &w).unwrap();
        let gamma = g.sinr(&d2).unwrap();
        let rho: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 3.0).collect();
        let eta = eta_from_gains(&g, &rho, &d2);
        let f = f_from_gains(&g, &rho, &eta, &d2);
        for k in 0..4 {
            let closed = (1.0 + rho[k]) * gamma[k] / (1.0 + gamma[k]);
            assert!((f[k] - closed).abs() < 1e-12 * closed.max(1.0));
        }
    }

    #[test]
    fn rho_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (h, w) = random_gains(&mut rng, 4, 8);
        let d2 = [0.05; 4];
        let g = GainMatrix::new(&h, &w).unwrap();
        let aux = FpAuxiliaries::refresh(&g, &d2).unwrap();
        let step = 1e-5;
        for k in 0..4 {
            let eval = |dr: f64| {
                let mut a = aux.clone();
                a.rho[k] += dr;
                surrogate_at(&g, &a, &d2, 1.0, 0.3).unwrap()
            };
            let deriv = (eval(step) - eval(-step)) / (2.0 * step);
            assert!(deriv.abs() < 1e-8, "user {k}: {deriv}");
        }
    }

    #[test]
    fn eta_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (h, w) = random_gains(&mut rng, 3, 4);
        let d2 = [0.1; 3];
        let g = GainMatrix::new(&h, &w).unwrap();
        let aux = FpAuxiliaries::refresh(&g, &d2).unwrap();
        let f0 = f_from_gains(&g, &aux.rho, &aux.eta, &d2);
        for delta in [-1e-3, 1e-3] {
            let eta: Vec<f64> = aux.eta.iter().map(|e| e + delta).collect();
            let f1 = f_from_gains(&g, &aux.rho, &eta, &d2);
            for k in 0..3 {
                assert!(f1[k] < f0[k]);
            }
        }
        let below: Vec<f64> = aux.eta.iter().map(|e| e * rng.random::<f64>() * 0.9).collect();
        let f2 = f_from_gains(&g, &aux.rho, &below, &d2);
        assert!(f2.iter().zip(&f0).all(|(a, b)| a < b));
    }

    #[test]
    fn f_is_concave_in_eta() {
        let g = GainMatrix::from_rows(vec![vec![2.0, 0.5], vec![0.3, 1.0]]);
        let h = 0.01;
        for i in 1..200 {
            let e = i as f64 * h;
            let at = |x: f64| f_from_gains(&g, &[1.5, 0.7], &[x, x], &[0.2, 0.2]);
            let (a, b, c) = (at(e - h), at(e), at(e + h));
            for k in 0..2 {
                assert!(a[k] - 2.0 * b[k] + c[k] <= 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn tight_after_updates(seed in any::<u64>(), t in 0.0f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, w) = random_gains(&mut rng, 4, 8);
            let d2: Vec<f64> = (0..4).map(|_| 1e-3 + rng.random::<f64>()).collect();
            let gamma = sinr(&h, &w, &d2).unwrap();
            let truth: f64 = throughput(&gamma, 1.0, t).unwrap().iter().sum();
            let g = GainMatrix::new(&h, &w).unwrap();
            let aux = FpAuxiliaries::refresh(&g, &d2).unwrap();
            let r = surrogate_at(&g, &aux, &d2, 1.0, t).unwrap();
            prop_assert!((r - truth).abs() <= 1e-9 * truth.abs().max(1e-12));
        }

        #[test]
        fn updates_never_decrease(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (h, w) = random_gains(&mut rng, 3, 4);
            let d2 = vec![0.1; 3];
            let g = GainMatrix::new(&h, &w).unwrap();
            let mut aux = FpAuxiliaries {
                rho: (0..3).map(|_| rng.random::<f64>() * 5.0).collect(),
                eta: (0..3).map(|_| rng.random::<f64>()).collect(),
            };
            let r0 = surrogate_at(&g, &aux, &d2, 1.0, 0.2).unwrap();
            // η alone is an exact block maximizer for any ρ.
            aux.eta = eta_from_gains(&g, &aux.rho, &d2);
            let r1 = surrogate_at(&g, &aux, &d2, 1.0, 0.2).unwrap();
            // ρ = γ maximizes once η is re-optimized after it.
            aux.rho = update_rho(&g.sinr(&d2).unwrap()).unwrap();
            aux.eta = eta_from_gains(&g, &aux.rho, &d2);
            let r2 = surrogate_at(&g, &aux, &d2, 1.0, 0.2).unwrap();
            prop_assert!(r1 >= r0 - 1e-12 * r0.abs().max(1.0));
            prop_assert!(r2 >= r1 - 1e-12 * r1.abs().max(1.0));
        }
    }
}
