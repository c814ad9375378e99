//! System model of the hybrid-phase RIS downlink.
//!
//! A BS with `M` antennas serves `K` single-antenna users through a RIS whose
//! elements are split into a *coherent* sub-surface (phases optimized and then
//! delivered over a control link of rate `R_F`) and a *fixed* sub-surface
//! (random phases set locally, never delivered). Delivering `b` bits for each
//! coherent element takes at least `b·N_coh / R_F` seconds of the frame `T`;
//! information is sent during the remaining `T − t`.
//!
//! Bandwidth is normalized to 1 Hz, so a rate in bit/s/Hz multiplied by seconds
//! is a number of bits. All powers are in watts.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, norm_sqr, serde_complex, wrap_angle, CMatrix, CVector};

/// Default relative tolerance used by [`check_feasibility`].
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Scalar parameters of the throughput-maximization problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antennas `M`.
    pub antennas: usize,
    /// Users `K`.
    pub users: usize,
    /// Elements with optimized (delivered) phases.
    pub n_coh: usize,
    /// Elements with random, never-delivered phases.
    pub n_fix: usize,
    /// Quantization bits per coherent phase `b`.
    pub bits_per_phase: u32,
    /// Control-link delivery rate `R_F` in bit/s.
    pub control_rate: f64,
    /// Frame duration `T` in seconds.
    pub frame: f64,
    /// Delivery power `p` in watts.
    pub delivery_power: f64,
    /// BS energy budget `E_max` in joules.
    pub energy_budget: f64,
    /// Per-user minimum throughput `R_k^min` in bits.
    pub min_rate: Vec<f64>,
    /// Per-user noise power `δ_k²` in watts.
    pub noise_power: Vec<f64>,
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl SystemConfig {
    /// Default operating point: M = 8, K = 4, N_coh = 8, N_fix = 4, b = 1,
    /// R_F = 10 bit/s, T = 1 s, p = 20 dBm, E_max = 1 J, R_min = 1 bit,
    /// δ² = −80 dBm.
    pub fn reference_point() -> Self {
        let users = 4;
        SystemConfig {
            antennas: 8,
            users,
            n_coh: 8,
            n_fix: 4,
            bits_per_phase: 1,
            control_rate: 10.0,
            frame: 1.0,
            delivery_power: dbm_to_watts(20.0),
            energy_budget: 1.0,
            min_rate: vec![1.0; users],
            noise_power: vec![dbm_to_watts(-80.0); users],
        }
    }

    pub fn elements(&self) -> usize {
        self.n_coh + self.n_fix
    }

    /// Bits that must cross the control link, `b·N_coh`.
    pub fn delivery_bits(&self) -> f64 {
        self.bits_per_phase as f64 * self.n_coh as f64
    }

    /// Shortest delivery time allowed by the bit budget, `b·N_coh / R_F`.
    pub fn min_delivery_time(&self) -> f64 {
        self.delivery_bits() / self.control_rate
    }

    /// SINR needed by user `k` to carry `R_k^min` bits in `T − t` seconds.
    pub fn sinr_threshold(&self, k: usize, t: f64) -> f64 {
        let span = self.frame - t;
        if self.min_rate[k] <= 0.0 {
            return 0.0;
        }
        if span <= 0.0 {
            return f64::INFINITY;
        }
        (self.min_rate[k] / span).exp2() - 1.0
    }

    /// Transmit power available when the delivery phase lasts `t` seconds and
    /// the energy budget is exhausted.
    pub fn available_power(&self, t: f64) -> f64 {
        (self.energy_budget - self.delivery_power * t) / (self.frame - t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if self.antennas == 0 {
            return bad("antenna count must be at least 1");
        }
        if self.users == 0 {
            return bad("user count must be at least 1");
        }
        if self.bits_per_phase == 0 {
            return bad("quantization bits must be at least 1");
        }
        for (name, v) in [
            ("control rate", self.control_rate),
            ("frame duration", self.frame),
            ("delivery power", self.delivery_power),
            ("energy budget", self.energy_budget),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.min_rate.len() != self.users || self.noise_power.len() != self.users {
            return bad("per-user vectors must have one entry per user");
        }
        if self.min_rate.iter().any(|&r| !(r.is_finite() && r >= 0.0)) {
            return bad("minimum rates must be finite and nonnegative");
        }
        if self.noise_power.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return bad("noise powers must be positive");
        }
        if self.min_delivery_time() >= self.frame {
            return Err(Error::ScenarioInfeasible(format!(
                "delivering {} bits at {} bit/s takes {} s, leaving no transmission time in a {} s frame",
                self.delivery_bits(),
                self.control_rate,
                self.min_delivery_time(),
                self.frame
            )));
        }
        Ok(())
    }
}

/// One draw of the BS→RIS matrix and the per-user RIS→user vectors, split into
/// the coherent and fixed sub-surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `N_coh × M` block of the BS→RIS channel.
    #[serde(with = "serde_complex::matrix")]
    pub h_coh: CMatrix,
    /// `N_fix × M` block of the BS→RIS channel.
    #[serde(with = "serde_complex::matrix")]
    pub h_fix: CMatrix,
    /// RIS→user channels over the coherent elements, one per user.
    #[serde(with = "serde_complex::vecs")]
    pub hr_coh: Vec<CVector>,
    /// RIS→user channels over the fixed elements, one per user.
    #[serde(with = "serde_complex::vecs")]
    pub hr_fix: Vec<CVector>,
}

impl ChannelRealization {
    /// Splits stacked channels (`N × M` and `K` vectors of length `N`) so that
    /// the first `n_coh` elements form the coherent sub-surface.
    pub fn from_stacked(h: &CMatrix, hr: &[CVector], n_coh: usize) -> Result<Self> {
        let n = h.nrows();
        if n_coh > n {
            return Err(Error::Config(format!(
                "coherent count {n_coh} exceeds element count {n}"
            )));
        }
        if hr.iter().any(|v| v.len() != n) {
            return Err(Error::Config("RIS→user vectors must have N entries".into()));
        }
        let n_fix = n - n_coh;
        Ok(ChannelRealization {
            h_coh: h.rows(0, n_coh).into_owned(),
            h_fix: h.rows(n_coh, n_fix).into_owned(),
            hr_coh: hr.iter().map(|v| v.rows(0, n_coh).into_owned()).collect(),
            hr_fix: hr.iter().map(|v| v.rows(n_coh, n_fix).into_owned()).collect(),
        })
    }

    /// Inverse of [`from_stacked`](Self::from_stacked).
    pub fn stacked(&self) -> (CMatrix, Vec<CVector>) {
        let (nc, nf, m) = (self.h_coh.nrows(), self.h_fix.nrows(), self.antennas());
        let mut h = CMatrix::zeros(nc + nf, m);
        h.rows_mut(0, nc).copy_from(&self.h_coh);
        h.rows_mut(nc, nf).copy_from(&self.h_fix);
        let hr = self
            .hr_coh
            .iter()
            .zip(&self.hr_fix)
            .map(|(a, b)| {
                CVector::from_iterator(nc + nf, a.iter().chain(b.iter()).cloned())
            })
            .collect();
        (h, hr)
    }

    /// Same physical channels with a different coherent/fixed split.
    pub fn repartition(&self, n_coh: usize) -> Result<Self> {
        let (h, hr) = self.stacked();
        Self::from_stacked(&h, &hr, n_coh)
    }

    pub fn antennas(&self) -> usize {
        self.h_coh.ncols().max(self.h_fix.ncols())
    }

    pub fn users(&self) -> usize {
        self.hr_coh.len()
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        let m = cfg.antennas;
        if self.h_coh.shape() != (cfg.n_coh, m) || self.h_fix.shape() != (cfg.n_fix, m) {
            return Err(Error::Config(format!(
                "BS→RIS blocks are {:?}/{:?}, expected ({}, {m})/({}, {m})",
                self.h_coh.shape(),
                self.h_fix.shape(),
                cfg.n_coh,
                cfg.n_fix
            )));
        }
        if self.hr_coh.len() != cfg.users || self.hr_fix.len() != cfg.users {
            return Err(Error::Config("need one RIS→user channel per user".into()));
        }
        if self.hr_coh.iter().any(|v| v.len() != cfg.n_coh)
            || self.hr_fix.iter().any(|v| v.len() != cfg.n_fix)
        {
            return Err(Error::Config("RIS→user channel length mismatch".into()));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.h_coh.iter().all(finite)
            && self.h_fix.iter().all(finite)
            && self.hr_coh.iter().chain(&self.hr_fix).all(|v| v.iter().all(finite));
        if !all_finite {
            return Err(Error::Config("channel contains non-finite entries".into()));
        }
        Ok(())
    }
}

/// Coherent phases (optimized) and fixed phases (drawn once, frozen), radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridPhaseConfig {
    pub theta_coh: Vec<f64>,
    pub theta_fix: Vec<f64>,
}

impl HybridPhaseConfig {
    pub fn new(theta_coh: Vec<f64>, theta_fix: Vec<f64>) -> Self {
        HybridPhaseConfig {
            theta_coh: theta_coh.into_iter().map(wrap_angle).collect(),
            theta_fix: theta_fix.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn coh_phasors(&self) -> CVector {
        CVector::from_iterator(self.theta_coh.len(), self.theta_coh.iter().map(|&t| cis(t)))
    }

    pub fn fix_phasors(&self) -> CVector {
        CVector::from_iterator(self.theta_fix.len(), self.theta_fix.iter().map(|&t| cis(t)))
    }
}

/// Per-user transmit beamformers `w_k ∈ C^M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformerSet {
    #[serde(with = "serde_complex::vecs")]
    pub w: Vec<CVector>,
}

impl BeamformerSet {
    pub fn new(w: Vec<CVector>) -> Self {
        BeamformerSet { w }
    }

    /// `Σ_k ‖w_k‖²` in watts.
    pub fn total_power(&self) -> f64 {
        self.w.iter().map(norm_sqr).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BeamformerSet {
            w: self.w.iter().map(|v| v * Complex64::new(factor, 0.0)).collect(),
        }
    }
}

/// A point of the optimization problem together with its achieved rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub phases: HybridPhaseConfig,
    pub beams: BeamformerSet,
    /// Delivery time `t` in seconds.
    pub t: f64,
    /// Per-user throughput in bits.
    pub per_user_rate: Vec<f64>,
    /// Sum throughput in bits.
    pub objective: f64,
}

impl Solution {
    /// Builds a solution and evaluates its rates from the channel.
    pub fn evaluate(
        cfg: &SystemConfig,
        ch: &ChannelRealization,
        phases: HybridPhaseConfig,
        beams: BeamformerSet,
        t: f64,
    ) -> Result<Self> {
        let h = effective_channels(ch, &phases)?;
        let gamma = sinr(&h, &beams, &cfg.noise_power)?;
        let per_user_rate = throughput(&gamma, cfg.frame, t)?;
        let objective = per_user_rate.iter().sum();
        Ok(Solution {
            phases,
            beams,
            t,
            per_user_rate,
            objective,
        })
    }
}

/// Effective channel row `h_k^H` of user `k`:
/// `(h_{r,k}^coh)^H Θ^coh H^coh + (h_{r,k}^fix)^H Θ^fix H^fix`.
///
/// The returned vector `a` satisfies `h_k^H w = a^T w`.
pub fn effective_channel(
    ch: &ChannelRealization,
    ph: &HybridPhaseConfig,
    k: usize,
) -> Result<CVector> {
    if k >= ch.users() {
        return Err(Error::Config(format!("user index {k} out of range")));
    }
    let (hr_c, hr_f) = (&ch.hr_coh[k], &ch.hr_fix[k]);
    if ph.theta_coh.len() != ch.h_coh.nrows()
        || ph.theta_fix.len() != ch.h_fix.nrows()
        || hr_c.len() != ch.h_coh.nrows()
        || hr_f.len() != ch.h_fix.nrows()
    {
        return Err(Error::Config(format!(
            "dimension mismatch: {} coherent / {} fixed phases for a {}+{} element surface",
            ph.theta_coh.len(),
            ph.theta_fix.len(),
            ch.h_coh.nrows(),
            ch.h_fix.nrows()
        )));
    }
    let m = ch.antennas();
    let mut row = CVector::zeros(m);
    accumulate(&mut row, hr_c, &ph.theta_coh, &ch.h_coh);
    accumulate(&mut row, hr_f, &ph.theta_fix, &ch.h_fix);
    Ok(row)
}

fn accumulate(row: &mut CVector, hr: &CVector, theta: &[f64], h: &CMatrix) {
    for (n, &th) in theta.iter().enumerate() {
        let coef = hr[n].conj() * cis(th);
        for m in 0..h.ncols() {
            row[m] += coef * h[(n, m)];
        }
    }
}

pub fn effective_channels(ch: &ChannelRealization, ph: &HybridPhaseConfig) -> Result<Vec<CVector>> {
    (0..ch.users()).map(|k| effective_channel(ch, ph, k)).collect()
}

/// Received powers `G[k][i] = |h_k^H w_i|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    g: Vec<Vec<f64>>,
}

impl GainMatrix {
    pub fn new(h: &[CVector], beams: &BeamformerSet) -> Result<Self> {
        if h.len() != beams.w.len() {
            return Err(Error::Config(format!(
                "{} channels but {} beamformers",
                h.len(),
                beams.w.len()
            )));
        }
        if let Some(bad) = h
            .iter()
            .chain(&beams.w)
            .find(|v| v.len() != h.first().map_or(0, |f| f.len()))
        {
            return Err(Error::Config(format!(
                "vector of length {} does not match antenna count",
                bad.len()
            )));
        }
        let g = h
            .iter()
            .map(|hk| beams.w.iter().map(|wi| hk.dot(wi).norm_sqr()).collect())
            .collect();
        Ok(GainMatrix { g })
    }

    pub fn from_rows(g: Vec<Vec<f64>>) -> Self {
        GainMatrix { g }
    }

    pub fn users(&self) -> usize {
        self.g.len()
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.g[k][i]
    }

    pub fn signal(&self, k: usize) -> f64 {
        self.g[k][k]
    }

    /// `Σ_i G[k][i]`, signal plus interference at user `k`.
    pub fn total(&self, k: usize) -> f64 {
        self.g[k].iter().sum()
    }

    pub fn interference(&self, k: usize) -> f64 {
        self.total(k) - self.g[k][k]
    }

    pub fn sinr(&self, delta2: &[f64]) -> Result<Vec<f64>> {
        check_noise(delta2, self.users())?;
        Ok((0..self.users())
            .map(|k| self.signal(k) / (self.interference(k) + delta2[k]))
            .collect())
    }
}

fn check_noise(delta2: &[f64], users: usize) -> Result<()> {
    if delta2.len() != users {
        return Err(Error::Config(format!(
            "{} noise powers for {users} users",
            delta2.len()
        )));
    }
    if let Some(d) = delta2.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Config(format!("noise power must be positive, got {d}")));
    }
    Ok(())
}

/// Per-user SINR `|h_k^H w_k|² / (Σ_{i≠k} |h_k^H w_i|² + δ_k²)`.
pub fn sinr(h: &[CVector], beams: &BeamformerSet, delta2: &[f64]) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::Config("at least one user is required".into()));
    }
    GainMatrix::new(h, beams)?.sinr(delta2)
}

/// Per-user throughput `(T − t) log₂(1 + γ_k)` in bits.
pub fn throughput(gamma: &[f64], frame: f64, t: f64) -> Result<Vec<f64>> {
    check_time(frame, t)?;
    Ok(gamma.iter().map(|&g| (frame - t) * g.ln_1p() / std::f64::consts::LN_2).collect())
}

/// Energy spent by the BS over one frame, `p·t + (T − t) Σ_k ‖w_k‖²`.
pub fn energy_used(t: f64, delivery_power: f64, beams: &BeamformerSet, frame: f64) -> Result<f64> {
    check_time(frame, t)?;
    Ok(delivery_power * t + (frame - t) * beams.total_power())
}

fn check_time(frame: f64, t: f64) -> Result<()> {
    if !(t >= 0.0 && t <= frame) {
        return Err(Error::Domain(format!(
            "delivery time {t} outside [0, {frame}]"
        )));
    }
    Ok(())
}

/// Signed slacks of the four constraints; negative means violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `E_max − energy_used` (J).
    pub energy_slack: f64,
    /// `R_k − R_k^min` per user (bits).
    pub rate_slack: Vec<f64>,
    /// Largest `| |e^{jθ}| − 1 |` over coherent elements.
    pub unit_modulus_dev: f64,
    /// `t·R_F − b·N_coh` (bits).
    pub delivery_slack: f64,
    /// `t` lies in `[0, T]`.
    pub time_in_range: bool,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn min_rate_slack(&self) -> f64 {
        self.rate_slack.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn check_feasibility(
    sol: &Solution,
    cfg: &SystemConfig,
    ch: &ChannelRealization,
) -> Result<FeasibilityReport> {
    check_feasibility_with(sol, cfg, ch, FEASIBILITY_TOL)
}

/// Constraint report with relative tolerance `tol`: each slack is compared
/// against `−tol` times the magnitude of its constraint's right-hand side
/// (at least 1).
pub fn check_feasibility_with(
    sol: &Solution,
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    tol: f64,
) -> Result<FeasibilityReport> {
    let time_in_range = sol.t >= 0.0 && sol.t <= cfg.frame;
    let t = sol.t.clamp(0.0, cfg.frame);
    let energy = cfg.delivery_power * t + (cfg.frame - t) * sol.beams.total_power();
    let energy_slack = cfg.energy_budget - energy;

    let h = effective_channels(ch, &sol.phases)?;
    let gamma = sinr(&h, &sol.beams, &cfg.noise_power)?;
    let rates = throughput(&gamma, cfg.frame, t)?;
    let rate_slack: Vec<f64> = rates.iter().zip(&cfg.min_rate).map(|(r, m)| r - m).collect();

    let unit_modulus_dev = sol
        .phases
        .coh_phasors()
        .iter()
        .map(|z| (z.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let delivery_slack = sol.t * cfg.control_rate - cfg.delivery_bits();

    let feasible = time_in_range
        && energy_slack >= -tol * cfg.energy_budget.max(1.0)
        && rate_slack
            .iter()
            .zip(&cfg.min_rate)
            .all(|(s, m)| *s >= -tol * m.max(1.0))
        && unit_modulus_dev <= tol
        && delivery_slack >= -tol * cfg.delivery_bits().max(1.0);

    Ok(FeasibilityReport {
        energy_slack,
        rate_slack,
        unit_modulus_dev,
        delivery_slack,
        time_in_range,
        feasible,
    })
}
