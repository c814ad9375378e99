//! Lifted beamforming program.
//!
//! Variables are expressed in noise-normalized units: beams are scaled by the
//! power `P = (E_max − p·t)/(T − t)` that exhausts the energy budget, and user
//! `k`'s received powers are divided by `δ_k²·σ_k`, where `σ_k` is the
//! signal-to-noise ratio at the expansion point. This keeps every coefficient of
//! the program near one regardless of the absolute SNR.

use num_complex::Complex64;

use super::{linearized_trace_expr, LiftParams, CONSISTENCY_TOL};
use crate::conic::{ComplexVecVar, HermitianVar, LinExpr, Program};
use crate::error::{Block, Error, Result};
use crate::fp::FpAuxiliaries;
use crate::linalg::{norm_sqr, outer_conj, principal_eigen, trace_product, CMatrix, CVector};
use crate::model::{BeamformerSet, GainMatrix, SystemConfig};

const SIGNAL_FLOOR: f64 = 1e-9;

/// Lifted beamformers: `W_k ⪰ w_k w_k^H`, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedBeam {
    pub big_w: Vec<CMatrix>,
    pub w: Vec<CVector>,
}

impl LiftedBeam {
    pub fn rank_one(beams: &BeamformerSet) -> Self {
        LiftedBeam {
            big_w: beams.w.iter().map(|w| w * w.adjoint()).collect(),
            w: beams.w.clone(),
        }
    }

    pub fn vectors(&self) -> BeamformerSet {
        BeamformerSet::new(self.w.clone())
    }

    /// `√λ_max · u_max` of each `W_k`.
    pub fn principal(&self) -> BeamformerSet {
        BeamformerSet::new(
            self.big_w
                .iter()
                .map(|m| {
                    let (lam, u) = principal_eigen(m);
                    u * Complex64::new(lam.max(0.0).sqrt(), 0.0)
                })
                .collect(),
        )
    }

    /// Rank-one candidates: the vector part and the scaled principal
    /// eigenvectors.
    pub fn candidates(&self) -> [BeamformerSet; 2] {
        [self.vectors(), self.principal()]
    }

    /// Largest `(Tr W_k − ‖w_k‖²) / Tr W_k`.
    pub fn rank_gap(&self) -> f64 {
        self.big_w
            .iter()
            .zip(&self.w)
            .map(|(m, w)| {
                let tr = m.trace().re;
                if tr > 0.0 {
                    (tr - norm_sqr(w)) / tr
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct BeamOutcome {
    pub lifted: LiftedBeam,
    /// Surrogate `R_sum` of the lifted solution, with `|h_k^H w_i|²` read as
    /// `Tr(h_k h_k^H W_i)`.
    pub objective: f64,
    /// Surrogate at the expansion point.
    pub prev_objective: f64,
    pub status: String,
}

/// Surrogate with received powers `G_ki = Tr(Q_k W_i)`.
fn lifted_surrogate(
    cfg: &SystemConfig,
    q: &[CMatrix],
    big_w: &[CMatrix],
    aux: &FpAuxiliaries,
    t: f64,
) -> f64 {
    let g: Vec<Vec<f64>> = q
        .iter()
        .map(|qk| big_w.iter().map(|wi| trace_product(qk, wi).max(0.0)).collect())
        .collect();
    let gains = GainMatrix::from_rows(g);
    crate::fp::surrogate_at(&gains, aux, &cfg.noise_power, cfg.frame, t).unwrap_or(f64::NAN)
}

/// Maximizes the quadratic-transform surrogate over lifted beams with `t`,
/// the phases (through the effective channels `h`) and the auxiliaries fixed.
///
/// Constraints: energy `p·t + (T − t) Σ Tr W_k ≤ E_max`; each user's rate
/// `Tr(Q_k W_k) ≥ τ_k (Σ_{i≠k} Tr(Q_k W_i) + δ_k²)` with
/// `τ_k = 2^{R_min,k/(T−t)} − 1`; the Schur block `[[W_k, w_k], [w_k^H, 1]] ⪰ 0`;
/// and the linearized trace bound around `prev`.
pub fn solve_beamforming(
    cfg: &SystemConfig,
    h: &[CVector],
    t: f64,
    aux: &FpAuxiliaries,
    prev: &BeamformerSet,
    params: &LiftParams,
) -> Result<BeamOutcome> {
    let k_users = cfg.users;
    let m = cfg.antennas;
    let span = cfg.frame - t;
    if !(span > 0.0) {
        return Err(Error::Domain(format!("no transmission time left at t = {t}")));
    }
    if h.len() != k_users || prev.w.len() != k_users {
        return Err(Error::Config("one channel and one beam per user required".into()));
    }
    let power = cfg.available_power(t);
    if !(power > 0.0) {
        return Err(Error::SubproblemInfeasible {
            block: Block::Beamforming,
            lower: cfg.delivery_power * t,
            upper: cfg.energy_budget,
        });
    }
    let d2 = &cfg.noise_power;
    let q: Vec<CMatrix> = h.iter().map(outer_conj).collect();
    let prev_gains = GainMatrix::new(h, prev)?;
    let sigma: Vec<f64> = (0..k_users)
        .map(|k| (prev_gains.signal(k) / d2[k]).max(SIGNAL_FLOOR))
        .collect();
    let scale = aux.rho.iter().map(|r| 1.0 + r).sum::<f64>() / k_users as f64;

    let mut prog = Program::new();
    let z: Vec<_> = (0..k_users).map(|_| prog.hermitian(m + 1)).collect();
    let s: Vec<usize> = (0..k_users).map(|_| prog.scalar()).collect();

    for zk in &z {
        prog.hermitian_var_psd(zk);
        let corner = zk.entry(m, m).re;
        prog.equal(corner.minus(&LinExpr::constant(1.0)));
    }

    // y[k][i] = Tr(Q_k W_i) / (δ_k² σ_k) in normalized units.
    let y: Vec<Vec<LinExpr>> = (0..k_users)
        .map(|k| {
            let qn = q[k].map(|c| c * (power / (d2[k] * sigma[k])));
            z.iter().map(|zi| zi.trace_with(&qn)).collect()
        })
        .collect();

    let mut objective = LinExpr::default();
    for k in 0..k_users {
        prog.square_below(LinExpr::var(s[k]), &y[k][k]);

        let tau = cfg.sinr_threshold(k, t);
        if tau > 0.0 {
            let mut c2 = y[k][k].clone();
            for i in (0..k_users).filter(|&i| i != k) {
                c2.add_scaled(&y[k][i], -tau);
            }
            c2.constant -= tau / sigma[k];
            prog.nonneg(c2);
        }

        let wp = &prev.w[k] * Complex64::new(power.sqrt().recip(), 0.0);
        let w_var = column_var(&z[k], m);
        let mut trust = linearized_trace_expr(&wp, &w_var);
        trust.constant += params.trust * norm_sqr(&wp).max(1.0 / k_users as f64);
        prog.nonneg(trust.minus(&z[k].trace_leading(m)));

        let eta_hat = aux.eta[k] * d2[k].sqrt();
        let lin = 2.0 * eta_hat * (1.0 + aux.rho[k]).sqrt() * sigma[k].sqrt() / scale;
        objective.add_term(s[k], lin);
        for yi in &y[k] {
            objective.add_scaled(yi, -eta_hat * eta_hat * sigma[k] / scale);
        }
    }
    let mut energy = LinExpr::constant(1.0);
    for zk in &z {
        energy.add_scaled(&zk.trace_leading(m), -1.0);
    }
    prog.nonneg(energy);
    prog.maximize(&objective);

    let sol = prog.solve(params.conic_tol, Block::Beamforming)?;
    let lifted = LiftedBeam {
        big_w: z
            .iter()
            .map(|zk| {
                let full = zk.value(&sol.x);
                full.view((0, 0), (m, m)).into_owned() * Complex64::new(power, 0.0)
            })
            .collect(),
        w: z
            .iter()
            .map(|zk| {
                let full = zk.value(&sol.x);
                full.view((0, m), (m, 1)).column(0).into_owned() * Complex64::new(power.sqrt(), 0.0)
            })
            .collect(),
    };

    let objective = lifted_surrogate(cfg, &q, &lifted.big_w, aux, t);
    let prev_objective = lifted_surrogate(cfg, &q, &LiftedBeam::rank_one(prev).big_w, aux, t);
    if prev_is_admissible(cfg, &prev_gains, prev, t, power)
        && objective < prev_objective - CONSISTENCY_TOL * prev_objective.abs().max(1.0)
    {
        return Err(Error::InternalConsistency {
            block: Block::Beamforming,
            detail: format!(
                "lifted objective {objective} fell below its expansion point {prev_objective}"
            ),
        });
    }
    Ok(BeamOutcome {
        lifted,
        objective,
        prev_objective,
        status: sol.status,
    })
}

/// Last column (without the corner) of a Schur-block variable.
pub(super) fn column_var(z: &HermitianVar, n: usize) -> ComplexVecVar {
    z.column_above(n)
}

fn prev_is_admissible(cfg: &SystemConfig, g: &GainMatrix, prev: &BeamformerSet, t: f64, power: f64) -> bool {
    if prev.total_power() > power * (1.0 + 1e-9) {
        return false;
    }
    (0..cfg.users).all(|k| {
        let tau = cfg.sinr_threshold(k, t);
        g.signal(k) >= tau * (g.interference(k) + cfg.noise_power[k]) * (1.0 - 1e-9)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::FpAuxiliaries;
    use crate::model::SystemConfig;

    fn single_user(e_max: f64, p: f64, noise: f64) -> SystemConfig {
        SystemConfig {
            antennas: 1,
            users: 1,
            n_coh: 2,
            n_fix: 0,
            bits_per_phase: 1,
            control_rate: 10.0,
            frame: 1.0,
            delivery_power: p,
            energy_budget: e_max,
            min_rate: vec![0.0],
            noise_power: vec![noise],
        }
    }

    fn run_to_fixed_point(cfg: &SystemConfig, h: &[CVector], t: f64, mut w: BeamformerSet, iters: usize) -> BeamformerSet {
        for _ in 0..iters {
            let g = GainMatrix::new(h, &w).unwrap();
            let aux = FpAuxiliaries::refresh(&g, &cfg.noise_power).unwrap();
            let out = solve_beamforming(cfg, h, t, &aux, &w, &LiftParams::default()).unwrap();
            let value = |b: &BeamformerSet| {
                let g = GainMatrix::new(h, b).unwrap();
                crate::fp::surrogate_at(&g, &aux, &cfg.noise_power, cfg.frame, t).unwrap()
            };
            let [a, b] = out.lifted.candidates();
            let best = if value(&a) >= value(&b) { a } else { b };
            if value(&best) >= value(&w) {
                w = best;
            }
        }
        w
    }

    #[test]
    fn single_antenna_transmits_at_energy_boundary() {
        let cfg = single_user(1.0, 0.1, 1.0);
        let h = vec![CVector::from_element(1, Complex64::new(0.8, 0.3))];
        let t = 0.2;
        let w0 = BeamformerSet::new(vec![CVector::from_element(1, Complex64::new(0.1, 0.0))]);
        let w = run_to_fixed_point(&cfg, &h, t, w0, 30);
        let boundary = (1.0 - 0.1 * t) / (1.0 - t);
        // 1-D grid oracle: throughput (T−t) log₂(1 + |h|²|w|²/δ²) over |w|² ∈ [0, boundary]
        let gain = h[0][0].norm_sqr();
        let best = (0..=10_000)
            .map(|i| boundary * i as f64 / 10_000.0)
            .max_by(|a, b| (gain * a).ln_1p().partial_cmp(&(gain * b).ln_1p()).unwrap())
            .unwrap();
        assert!((norm_sqr(&w.w[0]) - best).abs() < 1e-4 * boundary, "{} vs {}", norm_sqr(&w.w[0]), best);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let cfg = single_user(1.0, 0.1, 1.0);
        let h = vec![CVector::from_element(1, Complex64::new(0.5, -0.5))];
        let t = 0.2;
        let power = cfg.available_power(t);
        let w = BeamformerSet::new(vec![CVector::from_element(1, Complex64::new(power.sqrt(), 0.0))]);
        let g = GainMatrix::new(&h, &w).unwrap();
        let aux = FpAuxiliaries::refresh(&g, &cfg.noise_power).unwrap();
        let out = solve_beamforming(&cfg, &h, t, &aux, &w, &LiftParams::default()).unwrap();
        assert!((out.objective - out.prev_objective).abs() < 1e-7 * out.prev_objective.abs().max(1.0));
        // Without trust-region slack the linearized bound pins the lift to rank one.
        let tight = LiftParams { trust: 0.0, ..LiftParams::default() };
        let out = solve_beamforming(&cfg, &h, t, &aux, &w, &tight).unwrap();
        assert!(out.lifted.rank_gap() < 1e-5, "{}", out.lifted.rank_gap());
        assert!((out.objective - out.prev_objective).abs() < 1e-7 * out.prev_objective.abs().max(1.0));
    }

    #[test]
    fn lifted_solution_is_psd_and_meets_constraints() {
        let mut cfg = single_user(1.0, 0.1, 0.05);
        cfg.users = 2;
        cfg.antennas = 2;
        cfg.min_rate = vec![0.5, 0.5];
        cfg.noise_power = vec![0.05, 0.05];
        let h = vec![
            CVector::from_vec(vec![Complex64::new(1.0, 0.2), Complex64::new(0.3, -0.4)]),
            CVector::from_vec(vec![Complex64::new(-0.2, 0.5), Complex64::new(0.9, 0.1)]),
        ];
        let t = 0.2;
        let w0 = BeamformerSet::new(vec![
            CVector::from_vec(vec![Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0)]),
            CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0)]),
        ]);
        let g = GainMatrix::new(&h, &w0).unwrap();
        let aux = FpAuxiliaries::refresh(&g, &cfg.noise_power).unwrap();
        let out = solve_beamforming(&cfg, &h, t, &aux, &w0, &LiftParams::default()).unwrap();
        let total: f64 = out.lifted.big_w.iter().map(|m| m.trace().re).sum();
        assert!(cfg.delivery_power * t + (1.0 - t) * total <= cfg.energy_budget * (1.0 + 1e-7));
        for (wk, vk) in out.lifted.big_w.iter().zip(&out.lifted.w) {
            assert!((wk - wk.adjoint()).norm() < 1e-10);
            let gap = wk - vk * vk.adjoint();
            assert!(crate::linalg::min_eigenvalue(&gap) > -1e-8 * wk.trace().re.max(1.0));
        }
        assert!(out.objective >= out.prev_objective - 1e-7);
    }
}
