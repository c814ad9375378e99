//! Minimum-power beams meeting a common SINR target.
//!
//! `min Σ‖w_k‖²` subject to `|h_k^H w_k|² ≥ τ (Σ_{i≠k} |h_k^H w_i|² + δ_k²)`.
//! Fixing the phase of `h_k^H w_k` to be real and nonnegative (which loses
//! nothing, since each `w_k` may absorb a phase) turns every SINR constraint
//! into a second-order cone.

use super::CONIC_TOL;
use crate::conic::{LinExpr, Program};
use crate::error::{Block, Error, Result};
use crate::linalg::CVector;
use crate::model::BeamformerSet;
use num_complex::Complex64;

pub fn min_power_beams(h: &[CVector], tau: &[f64], delta2: &[f64]) -> Result<BeamformerSet> {
    let k_users = h.len();
    if tau.len() != k_users || delta2.len() != k_users || k_users == 0 {
        return Err(Error::Config("one SINR target and noise power per user required".into()));
    }
    let m = h[0].len();
    let mut prog = Program::new();
    let w: Vec<_> = (0..k_users).map(|_| prog.complex_vec(m)).collect();
    for wk in &w {
        for idx in wk.sum_squares_diag() {
            prog.minimize_square(idx, 1.0);
        }
    }
    for k in 0..k_users {
        let g = &h[k] * Complex64::new(delta2[k].sqrt().recip(), 0.0);
        let own = w[k].dot_const(&g);
        prog.equal(own.im.clone());
        let root = tau[k].max(0.0).sqrt();
        let mut cone = vec![own.re];
        for (i, wi) in w.iter().enumerate() {
            if i != k {
                let cross = wi.dot_const(&g);
                cone.push(cross.re.scaled(root));
                cone.push(cross.im.scaled(root));
            }
        }
        cone.push(LinExpr::constant(root));
        prog.soc(cone);
    }
    let sol = prog.solve(CONIC_TOL, Block::Initialization)?;
    Ok(BeamformerSet::new(w.iter().map(|wk| wk.value(&sol.x)).collect()))
}
