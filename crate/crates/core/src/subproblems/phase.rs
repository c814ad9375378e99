//! Lifted phase-shift program.
//!
//! With `o = [v; 1]`, `v_n = e^{jθ_n}` over the coherent elements, every
//! received amplitude is linear in `o`: `h_k^H w_i = o^T H_{1,k} w_i`, where the
//! top rows of `H_{1,k}` are `diag(conj(h_{r,k}^coh)) H^coh` and its last row is
//! the fixed sub-surface's contribution `(h_{r,k}^fix)^H Θ^fix H^fix`.
//! `|o^T b|² = o^H (conj(b) b^T) o`, so each received power becomes
//! `Tr(O A)` with `O ⪰ o o^H`.

use num_complex::Complex64;

use super::beam::column_var;
use super::{linearized_trace_expr, LiftParams, CONSISTENCY_TOL};
use crate::conic::{LinExpr, Program};
use crate::error::{Block, Error, Result};
use crate::fp::FpAuxiliaries;
use crate::linalg::{cis, norm_sqr, outer_conj, trace_product, wrap_angle, CMatrix, CVector};
use crate::model::{BeamformerSet, ChannelRealization, GainMatrix, SystemConfig};

const SIGNAL_FLOOR: f64 = 1e-9;
const ANCHOR_FLOOR: f64 = 1e-9;

/// Lifted phase vector: `O ⪰ o o^H`, both of size `N_coh + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPhase {
    pub big_o: CMatrix,
    pub o: CVector,
}

impl LiftedPhase {
    pub fn rank_one(theta_coh: &[f64]) -> Self {
        let n = theta_coh.len();
        let o = CVector::from_iterator(
            n + 1,
            theta_coh.iter().map(|&t| cis(t)).chain(std::iter::once(Complex64::new(1.0, 0.0))),
        );
        LiftedPhase {
            big_o: &o * o.adjoint(),
            o,
        }
    }

    /// `(Tr O − ‖o‖²) / Tr O`.
    pub fn rank_gap(&self) -> f64 {
        let tr = self.big_o.trace().re;
        (tr - norm_sqr(&self.o)) / tr
    }
}

#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub lifted: LiftedPhase,
    /// Surrogate with received powers read as `Tr(O A_ki)`.
    pub objective: f64,
    pub prev_objective: f64,
    pub status: String,
}

/// `(N_coh + 1) × M` stack mapping `o` to the effective channel of user `k`.
pub fn build_h1(ch: &ChannelRealization, theta_fix: &[f64], k: usize) -> Result<CMatrix> {
    let nc = ch.h_coh.nrows();
    let m = ch.antennas();
    if k >= ch.users() || theta_fix.len() != ch.h_fix.nrows() {
        return Err(Error::Config("user index or fixed-phase length mismatch".into()));
    }
    let mut h1 = CMatrix::zeros(nc + 1, m);
    for n in 0..nc {
        let c = ch.hr_coh[k][n].conj();
        for j in 0..m {
            h1[(n, j)] = c * ch.h_coh[(n, j)];
        }
    }
    for (n, &th) in theta_fix.iter().enumerate() {
        let c = ch.hr_fix[k][n].conj() * cis(th);
        for j in 0..m {
            h1[(nc, j)] += c * ch.h_fix[(n, j)];
        }
    }
    Ok(h1)
}

/// Coherent phases from a lifted solution: `v_n = o_n / o_last`, projected to
/// unit modulus. Entries with `|v_n| < 1e-9` get phase 0.
pub fn extract_phases(lp: &LiftedPhase) -> Result<Vec<f64>> {
    let n = lp.o.len();
    let anchor = lp.o[n - 1];
    if anchor.norm() < ANCHOR_FLOOR {
        return Err(Error::ExtractionDegenerate(anchor.norm()));
    }
    Ok((0..n - 1)
        .map(|i| {
            let v = lp.o[i] / anchor;
            if v.norm() < ANCHOR_FLOOR {
                0.0
            } else {
                wrap_angle(v.arg())
            }
        })
        .collect())
}

fn gains_from_a(a: &[Vec<CMatrix>], big_o: &CMatrix) -> GainMatrix {
    GainMatrix::from_rows(
        a.iter()
            .map(|row| row.iter().map(|aki| trace_product(aki, big_o).max(0.0)).collect())
            .collect(),
    )
}

/// Maximizes the surrogate over the lifted phase vector with `t`, the beams,
/// the fixed phases and the auxiliaries held.
///
/// Constraints: `[O]_nn ≤ 1` for coherent entries, `[O]_last = 1` and
/// `o_last = 1`; each user's rate at the current `t`; the Schur block
/// `[[O, o], [o^H, 1]] ⪰ 0`; and the linearized trace bound around `prev`.
pub fn solve_phase(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    theta_fix: &[f64],
    beams: &BeamformerSet,
    t: f64,
    aux: &FpAuxiliaries,
    prev: &LiftedPhase,
    params: &LiftParams,
) -> Result<PhaseOutcome> {
    let k_users = cfg.users;
    let n = cfg.n_coh + 1;
    if !(cfg.frame - t > 0.0) {
        return Err(Error::Domain(format!("no transmission time left at t = {t}")));
    }
    if prev.o.len() != n {
        return Err(Error::Config(format!(
            "expansion point has length {}, expected {n}",
            prev.o.len()
        )));
    }
    let d2 = &cfg.noise_power;
    let h1: Vec<CMatrix> = (0..k_users)
        .map(|k| build_h1(ch, theta_fix, k))
        .collect::<Result<_>>()?;
    // A[k][i] = conj(b) b^T with b = H_{1,k} w_i.
    let a: Vec<Vec<CMatrix>> = h1
        .iter()
        .map(|h| beams.w.iter().map(|w| outer_conj(&(h * w))).collect())
        .collect();
    // Expansion point: the rank-one lift of prev.o.
    let prev_point = LiftedPhase {
        big_o: &prev.o * prev.o.adjoint(),
        o: prev.o.clone(),
    };
    let prev_gains = gains_from_a(&a, &prev_point.big_o);
    let sigma: Vec<f64> = (0..k_users)
        .map(|k| (prev_gains.signal(k) / d2[k]).max(SIGNAL_FLOOR))
        .collect();
    let scale = aux.rho.iter().map(|r| 1.0 + r).sum::<f64>() / k_users as f64;

    let mut prog = Program::new();
    let z = prog.hermitian(n + 1);
    let s: Vec<usize> = (0..k_users).map(|_| prog.scalar()).collect();
    prog.hermitian_var_psd(&z);
    let one = LinExpr::constant(1.0);
    prog.equal(z.entry(n, n).re.minus(&one));
    prog.equal(z.entry(n - 1, n - 1).re.minus(&one));
    let o_last = z.entry(n - 1, n);
    prog.equal(o_last.re.minus(&one));
    prog.equal(o_last.im);
    for i in 0..n - 1 {
        prog.nonneg(one.clone().minus(&z.entry(i, i).re));
    }

    let y: Vec<Vec<LinExpr>> = (0..k_users)
        .map(|k| {
            a[k].iter()
                .map(|aki| z.trace_with(&aki.map(|c| c / (d2[k] * sigma[k]))))
                .collect()
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
        let eta_hat = aux.eta[k] * d2[k].sqrt();
        objective.add_term(s[k], 2.0 * eta_hat * (1.0 + aux.rho[k]).sqrt() * sigma[k].sqrt() / scale);
        for yi in &y[k] {
            objective.add_scaled(yi, -eta_hat * eta_hat * sigma[k] / scale);
        }
    }
    let mut trust = linearized_trace_expr(&prev_point.o, &column_var(&z, n));
    trust.constant += params.trust * n as f64;
    prog.nonneg(trust.minus(&z.trace_leading(n)));
    prog.maximize(&objective);

    let sol = prog.solve(params.conic_tol, Block::Phase)?;
    let full = z.value(&sol.x);
    let lifted = LiftedPhase {
        big_o: full.view((0, 0), (n, n)).into_owned(),
        o: full.view((0, n), (n, 1)).column(0).into_owned(),
    };

    let evaluate = |o: &CMatrix| {
        crate::fp::surrogate_at(&gains_from_a(&a, o), aux, d2, cfg.frame, t).unwrap_or(f64::NAN)
    };
    let objective = evaluate(&lifted.big_o);
    let prev_objective = evaluate(&prev_point.big_o);
    let admissible = (0..k_users).all(|k| {
        prev_gains.signal(k)
            >= cfg.sinr_threshold(k, t) * (prev_gains.interference(k) + d2[k]) * (1.0 - 1e-9)
    });
    if admissible && objective < prev_objective - CONSISTENCY_TOL * prev_objective.abs().max(1.0) {
        return Err(Error::InternalConsistency {
            block: Block::Phase,
            detail: format!(
                "lifted objective {objective} fell below its expansion point {prev_objective}"
            ),
        });
    }
    Ok(PhaseOutcome {
        lifted,
        objective,
        prev_objective,
        status: sol.status,
    })
}
