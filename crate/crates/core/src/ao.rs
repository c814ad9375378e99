//! Alternating optimization of delivery time, beams and coherent phases.
//!
//! Each outer iteration refreshes the quadratic-transform auxiliaries `ρ` and
//! `η` at the current point, then improves `t`, the beams and the phases in
//! turn with the auxiliaries held. The surrogate evaluated right after the
//! refresh equals the true sum throughput, and every block update is accepted
//! only if it does not lower the surrogate, so the throughput sequence is
//! non-decreasing.
//!
//! The lifted programs are solved inside a trust region whose size is taken
//! from [`SolverOptions::trust_schedule`]: a step is tried with the first
//! radius, its rank-one candidates are checked against the exact surrogate
//! and the constraints, and on rejection the next (smaller) radius is tried.
//! If every radius is rejected the block keeps its previous value. Phases
//! rounded to unit modulus can lose what the lifted step gained, so the phase
//! block also tries shorter moves toward the rounded phases.
//!
//! The surrogate lower-bounds the throughput at any point, so a final step
//! that scales the beams onto the energy boundary keeps the sequence
//! non-decreasing.

use std::f64::consts::PI;
use std::time::Instant;

use log::{debug, warn};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{stream_rng, Stream};
use crate::error::{Block, Error, Result};
use crate::fp::{surrogate_at, FpAuxiliaries};
use crate::linalg::{norm_sqr, wrap_angle, CVector};
use crate::model::{
    check_feasibility_with, effective_channels, BeamformerSet, ChannelRealization, GainMatrix,
    HybridPhaseConfig, Solution, SystemConfig,
};
use crate::subproblems::{
    extract_phases, min_power_beams, solve_beamforming, solve_delivery_time, solve_phase,
    LiftParams, LiftedBeam, LiftedPhase,
};

/// Fractions of the extracted phase move tried by the phase block.
const PHASE_BACKTRACK: [f64; 6] = [1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    pub rel_tol: f64,
    pub conic_tol: f64,
    pub feasibility_tol: f64,
    pub init_retries: usize,
    pub seed: u64,
    /// Trust-region radii tried in order for each lifted block.
    pub trust_schedule: Vec<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer_iters: 50,
            rel_tol: 1e-4,
            conic_tol: 1e-8,
            feasibility_tol: 1e-6,
            init_retries: 10,
            seed: 0,
            trust_schedule: vec![1.0, 0.1, 0.01, 1e-3],
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.init_retries == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.conic_tol > 0.0 && self.feasibility_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.trust_schedule.is_empty() || self.trust_schedule.iter().any(|&r| !(r >= 0.0)) {
            return Err(Error::Config("trust schedule must be non-empty and nonnegative".into()));
        }
        Ok(())
    }

    fn lift(&self, trust: f64) -> LiftParams {
        LiftParams {
            trust,
            conic_tol: self.conic_tol,
        }
    }
}

/// The optimization variables between block updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoState {
    pub phases: HybridPhaseConfig,
    pub beams: BeamformerSet,
    pub t: f64,
}

/// What one call to [`step`] did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// Surrogate (equal to the throughput) at the input state.
    pub surrogate_in: f64,
    /// Surrogate with the input's auxiliaries at the output state.
    pub surrogate_out: f64,
    /// Trust radius of the accepted beam step, if any.
    pub beam_trust: Option<f64>,
    /// Trust radius of the accepted phase step, if any.
    pub phase_trust: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub surrogate: f64,
    pub throughput: f64,
    pub t: f64,
    pub energy_slack: f64,
    pub min_rate_slack: f64,
    pub beam_trust: Option<f64>,
    pub phase_trust: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub status: SolveStatus,
    /// Outer iterations (block cycles) performed.
    pub iterations: usize,
    pub init_attempts: usize,
}

impl SolveTrace {
    /// Largest relative drop of the surrogate between consecutive records.
    pub fn worst_decrease(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[0].surrogate - w[1].surrogate) / w[0].surrogate.abs().max(1e-12))
            .fold(0.0, f64::max)
    }
}

fn is_feasible(cfg: &SystemConfig, ch: &ChannelRealization, st: &AoState, tol: f64) -> Result<bool> {
    let sol = Solution::evaluate(cfg, ch, st.phases.clone(), st.beams.clone(), st.t)?;
    Ok(check_feasibility_with(&sol, cfg, ch, tol)?.feasible)
}

fn matched_filter(h: &[CVector], power: f64) -> BeamformerSet {
    let per_user = (power / h.len() as f64).sqrt();
    BeamformerSet::new(
        h.iter()
            .map(|hk| {
                let n = norm_sqr(hk).sqrt();
                if n > 0.0 {
                    hk.map(|z| z.conj()) * Complex64::new(per_user / n, 0.0)
                } else {
                    CVector::zeros(hk.len())
                }
            })
            .collect(),
    )
}

fn uniform_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect()
}

/// Feasible starting point.
///
/// The fixed phases are drawn once. For each attempt the coherent phases are
/// drawn uniformly, `t₀ = b·N_coh/R_F`, and the beams are matched filters
/// sharing `P₀ = 0.9 (E_max − p t₀)/(T − t₀)` equally. If that misses a rate
/// target, the min-power beams meeting every target are computed and, when
/// they need at most `P₀`, scaled up to `P₀`.
pub fn initialize<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<(Solution, LiftedBeam, LiftedPhase, usize)> {
    cfg.validate()?;
    ch.validate(cfg)?;
    let t0 = cfg.min_delivery_time();
    if t0 >= cfg.frame || cfg.energy_budget <= cfg.delivery_power * t0 {
        return Err(Error::InitializationInfeasible {
            attempts: 0,
            reason: format!(
                "delivery needs {t0} s and {} J of a {} s, {} J budget",
                cfg.delivery_power * t0,
                cfg.frame,
                cfg.energy_budget
            ),
        });
    }
    let p0 = 0.9 * cfg.available_power(t0);
    let theta_fix = uniform_phases(cfg.n_fix, rng);
    let tau: Vec<f64> = (0..cfg.users).map(|k| cfg.sinr_threshold(k, t0)).collect();
    let tol = opts.feasibility_tol / 10.0;
    let mut last_reason = String::new();

    for attempt in 1..=opts.init_retries {
        let phases = HybridPhaseConfig::new(uniform_phases(cfg.n_coh, rng), theta_fix.clone());
        let h = effective_channels(ch, &phases)?;
        let mut state = AoState {
            phases,
            beams: matched_filter(&h, p0),
            t: t0,
        };
        if !is_feasible(cfg, ch, &state, tol)? {
            match min_power_beams(&h, &tau, &cfg.noise_power) {
                Ok(w) if w.total_power() <= p0 && w.total_power() > 0.0 => {
                    state.beams = w.scaled((p0 / w.total_power()).sqrt());
                }
                Ok(w) => {
                    last_reason = format!("rate targets need {:.3e} W, {:.3e} W available", w.total_power(), p0);
                    continue;
                }
                Err(e) => {
                    last_reason = e.to_string();
                    continue;
                }
            }
        }
        if is_feasible(cfg, ch, &state, tol)? {
            let sol = Solution::evaluate(cfg, ch, state.phases.clone(), state.beams.clone(), state.t)?;
            let lb = LiftedBeam::rank_one(&sol.beams);
            let lp = LiftedPhase::rank_one(&sol.phases.theta_coh);
            return Ok((sol, lb, lp, attempt));
        }
        last_reason = "scaled min-power beams still miss a rate target".into();
    }
    Err(Error::InitializationInfeasible {
        attempts: opts.init_retries,
        reason: last_reason,
    })
}

fn surrogate_of(
    cfg: &SystemConfig,
    h: &[CVector],
    beams: &BeamformerSet,
    aux: &FpAuxiliaries,
    t: f64,
) -> Result<f64> {
    surrogate_at(&GainMatrix::new(h, beams)?, aux, &cfg.noise_power, cfg.frame, t)
}

/// Scales beams down onto the energy boundary when a solver overshoot put
/// them marginally above it.
fn clip_to_budget(cfg: &SystemConfig, beams: BeamformerSet, t: f64) -> BeamformerSet {
    let cap = cfg.available_power(t);
    let total = beams.total_power();
    if total > cap && total <= cap * (1.0 + 1e-6) {
        beams.scaled((cap / total).sqrt())
    } else {
        beams
    }
}

/// Scales the beams up onto the energy boundary. Growing every beam by the
/// same factor raises every SINR, so this never lowers the throughput or a
/// rate slack. It recovers power that the lifted program leaves unused when
/// its gain is below the conic solver's resolution, as happens at high SNR.
fn fill_budget(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    state: AoState,
    tol: f64,
) -> Result<AoState> {
    let cap = cfg.available_power(state.t);
    let total = state.beams.total_power();
    if !(total > 0.0 && total < cap) {
        return Ok(state);
    }
    let trial = AoState {
        beams: state.beams.scaled((cap / total).sqrt()),
        ..state.clone()
    };
    let before = Solution::evaluate(cfg, ch, state.phases.clone(), state.beams.clone(), state.t)?.objective;
    let after = Solution::evaluate(cfg, ch, trial.phases.clone(), trial.beams.clone(), trial.t)?.objective;
    if after >= before && is_feasible(cfg, ch, &trial, tol)? {
        Ok(trial)
    } else {
        Ok(state)
    }
}

/// One block cycle: `ρ`, `η`, `t`, beams, phases, then a power fill.
pub fn step(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    state: &AoState,
    opts: &SolverOptions,
) -> Result<(AoState, StepReport)> {
    let tol = opts.feasibility_tol / 10.0;
    let h = effective_channels(ch, &state.phases)?;
    let gains = GainMatrix::new(&h, &state.beams)?;
    let aux = FpAuxiliaries::refresh(&gains, &cfg.noise_power).map_err(|e| e.in_block(Block::Auxiliaries))?;
    let surrogate_in = surrogate_at(&gains, &aux, &cfg.noise_power, cfg.frame, state.t)?;

    let gamma = gains.sinr(&cfg.noise_power)?;
    let t = solve_delivery_time(cfg, &gamma, state.beams.total_power())
        .map_err(|e| e.in_block(Block::DeliveryTime))?;
    let mut next = AoState {
        phases: state.phases.clone(),
        beams: state.beams.clone(),
        t,
    };

    // Beams.
    let mut base = surrogate_of(cfg, &h, &next.beams, &aux, t)?;
    let mut beam_trust = None;
    for &trust in &opts.trust_schedule {
        let out = match solve_beamforming(cfg, &h, t, &aux, &next.beams, &opts.lift(trust)) {
            Ok(o) => o,
            Err(e) => {
                debug!("beam step at trust {trust} rejected: {e}");
                continue;
            }
        };
        let mut best: Option<(f64, BeamformerSet)> = None;
        for cand in out.lifted.candidates() {
            let cand = clip_to_budget(cfg, cand, t);
            let trial = AoState {
                beams: cand,
                ..next.clone()
            };
            if !is_feasible(cfg, ch, &trial, tol)? {
                continue;
            }
            let v = surrogate_of(cfg, &h, &trial.beams, &aux, t)?;
            if v >= base && best.as_ref().map_or(true, |b| v > b.0) {
                best = Some((v, trial.beams));
            }
        }
        if let Some((v, beams)) = best {
            next.beams = beams;
            base = v;
            beam_trust = Some(trust);
            break;
        }
    }

    // Phases.
    let mut phase_trust = None;
    if cfg.n_coh > 0 {
        let prev = LiftedPhase::rank_one(&next.phases.theta_coh);
        for &trust in &opts.trust_schedule {
            let out = match solve_phase(
                cfg,
                ch,
                &next.phases.theta_fix,
                &next.beams,
                t,
                &aux,
                &prev,
                &opts.lift(trust),
            ) {
                Ok(o) => o,
                Err(e) => {
                    debug!("phase step at trust {trust} rejected: {e}");
                    continue;
                }
            };
            let theta = match extract_phases(&out.lifted) {
                Ok(th) => th,
                Err(e) => {
                    debug!("phase extraction at trust {trust} failed: {e}");
                    continue;
                }
            };
            // Projection onto unit modulus can cost more than the block
            // gained, so shorter moves along the same angular direction are
            // tried before giving up on this radius.
            let from = &next.phases.theta_coh;
            let mut accepted = None;
            for &frac in &PHASE_BACKTRACK {
                let moved: Vec<f64> = from
                    .iter()
                    .zip(&theta)
                    .map(|(a, b)| wrap_angle(a + frac * (wrap_angle(b - a + PI) - PI)))
                    .collect();
                let trial = AoState {
                    phases: HybridPhaseConfig::new(moved, next.phases.theta_fix.clone()),
                    ..next.clone()
                };
                if !is_feasible(cfg, ch, &trial, tol)? {
                    continue;
                }
                let h_new = effective_channels(ch, &trial.phases)?;
                let v = surrogate_of(cfg, &h_new, &trial.beams, &aux, t)?;
                if v > base || (frac == 1.0 && v >= base) {
                    accepted = Some((v, trial));
                    break;
                }
            }
            if let Some((v, trial)) = accepted {
                next = trial;
                base = v;
                phase_trust = Some(trust);
                break;
            }
        }
    }

    let next = fill_budget(cfg, ch, next, tol)?;
    Ok((
        next,
        StepReport {
            surrogate_in,
            surrogate_out: base,
            beam_trust,
            phase_trust,
        },
    ))
}

fn record(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    st: &AoState,
    iter: usize,
    started: Instant,
    report: Option<&StepReport>,
) -> Result<IterationRecord> {
    let sol = Solution::evaluate(cfg, ch, st.phases.clone(), st.beams.clone(), st.t)?;
    let rep = check_feasibility_with(&sol, cfg, ch, 0.0)?;
    let h = effective_channels(ch, &st.phases)?;
    let gains = GainMatrix::new(&h, &st.beams)?;
    let aux = FpAuxiliaries::refresh(&gains, &cfg.noise_power)?;
    Ok(IterationRecord {
        iter,
        surrogate: surrogate_at(&gains, &aux, &cfg.noise_power, cfg.frame, st.t)?,
        throughput: sol.objective,
        t: st.t,
        energy_slack: rep.energy_slack,
        min_rate_slack: rep.min_rate_slack(),
        beam_trust: report.and_then(|r| r.beam_trust),
        phase_trust: report.and_then(|r| r.phase_trust),
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

/// Runs the alternating optimizer from a fresh initialization drawn with
/// `opts.seed`.
pub fn solve(cfg: &SystemConfig, ch: &ChannelRealization, opts: &SolverOptions) -> Result<(Solution, SolveTrace)> {
    let mut rng = stream_rng(opts.seed, Stream::Solver, 0);
    solve_with_rng(cfg, ch, opts, &mut rng)
}

pub fn solve_with_rng<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    opts: &SolverOptions,
    rng: &mut R,
) -> Result<(Solution, SolveTrace)> {
    opts.validate()?;
    let (init, _, _, attempts) = initialize(cfg, ch, opts, rng).map_err(|e| e.in_block(Block::Initialization))?;
    let state = AoState {
        phases: init.phases,
        beams: init.beams,
        t: init.t,
    };
    solve_from(cfg, ch, opts, state, attempts)
}

/// Runs the alternating optimizer from a given feasible state.
pub fn solve_from(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    opts: &SolverOptions,
    mut state: AoState,
    init_attempts: usize,
) -> Result<(Solution, SolveTrace)> {
    let started = Instant::now();
    let mut records = vec![record(cfg, ch, &state, 0, started, None)?];
    let mut status = SolveStatus::MaxIters;
    let mut iterations = 0;
    while iterations < opts.max_outer_iters {
        let (next, report) = step(cfg, ch, &state, opts)?;
        state = next;
        iterations += 1;
        let rec = record(cfg, ch, &state, iterations, started, Some(&report))?;
        let prev = records.last().map(|r| r.surrogate).unwrap_or(0.0);
        let change = (rec.surrogate - prev).abs() / rec.surrogate.abs().max(1e-12);
        debug!(
            "iter {iterations}: surrogate {:.6} throughput {:.6} t {:.4}",
            rec.surrogate, rec.throughput, rec.t
        );
        records.push(rec);
        if change < opts.rel_tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    if status == SolveStatus::MaxIters {
        warn!("alternating optimizer stopped at the iteration cap ({})", opts.max_outer_iters);
    }
    let sol = Solution::evaluate(cfg, ch, state.phases, state.beams, state.t)?;
    let report = check_feasibility_with(&sol, cfg, ch, opts.feasibility_tol)?;
    if !report.feasible {
        return Err(Error::InternalConsistency {
            block: Block::Beamforming,
            detail: format!("final iterate infeasible: {report:?}"),
        });
    }
    Ok((
        sol,
        SolveTrace {
            records,
            status,
            iterations,
            init_attempts,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate, FadingParams, Geometry};

    fn reference_point_instance(seed: u64) -> (SystemConfig, ChannelRealization) {
        let cfg = SystemConfig::reference_point();
        let ch = generate(
            &Geometry::default(),
            &FadingParams::default(),
            &cfg,
            &mut stream_rng(seed, Stream::Channel, 0),
        )
        .unwrap();
        (cfg, ch)
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions {
            rel_tol: 1.5,
            ..SolverOptions::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn initialization_is_feasible_and_deterministic() {
        let (cfg, ch) = reference_point_instance(42);
        let opts = SolverOptions::default();
        let (a, ..) = initialize(&cfg, &ch, &opts, &mut stream_rng(42, Stream::Solver, 0)).unwrap();
        let (b, ..) = initialize(&cfg, &ch, &opts, &mut stream_rng(42, Stream::Solver, 0)).unwrap();
        assert_eq!(a, b);
        let rep = crate::model::check_feasibility(&a, &cfg, &ch).unwrap();
        assert!(rep.feasible);
        assert!(rep.energy_slack > 0.0);
        assert!(rep.delivery_slack.abs() < 1e-12);
    }

    #[test]
    fn energy_cannot_cover_delivery() {
        let (mut cfg, ch) = reference_point_instance(1);
        cfg.energy_budget = 0.05;
        let err = initialize(&cfg, &ch, &SolverOptions::default(), &mut stream_rng(1, Stream::Solver, 0)).unwrap_err();
        assert!(matches!(err, Error::InitializationInfeasible { attempts: 0, .. }));
    }

    #[test]
    fn fixed_surface_single_user_needs_no_delivery() {
        let mut cfg = SystemConfig::reference_point();
        cfg.users = 1;
        cfg.n_coh = 0;
        cfg.n_fix = 4;
        cfg.min_rate = vec![1.0];
        // Moderate SNR, where the quadratic-transform steps are not vanishingly small.
        cfg.noise_power = vec![2e-5];
        let ch = generate(&Geometry::default(), &FadingParams::default(), &cfg, &mut stream_rng(3, Stream::Channel, 0)).unwrap();
        let opts = SolverOptions {
            rel_tol: 1e-9,
            max_outer_iters: 200,
            ..SolverOptions::default()
        };
        let (sol, trace) = solve(&cfg, &ch, &opts).unwrap();
        assert_eq!(sol.t, 0.0);
        let gamma = crate::model::sinr(&effective_channels(&ch, &sol.phases).unwrap(), &sol.beams, &cfg.noise_power).unwrap();
        assert!((sol.objective - cfg.frame * gamma[0].log2_1p()).abs() < 1e-12);
        // A single user on a fixed surface is best served by MRT at full power.
        let h = effective_channels(&ch, &sol.phases).unwrap();
        let snr = norm_sqr(&h[0]) * cfg.energy_budget / cfg.frame / cfg.noise_power[0];
        let expect = cfg.frame * snr.log2_1p();
        assert!((sol.objective - expect).abs() < 1e-3 * expect, "{} vs {}", sol.objective, expect);
        assert!(trace.worst_decrease() <= 1e-6);
    }

    trait Log2OnePlus {
        fn log2_1p(self) -> f64;
    }
    impl Log2OnePlus for f64 {
        fn log2_1p(self) -> f64 {
            self.ln_1p() / std::f64::consts::LN_2
        }
    }

    #[test]
    fn reference_point_first_step_improves() {
        let (cfg, ch) = reference_point_instance(7);
        let opts = SolverOptions::default();
        let (init, ..) = initialize(&cfg, &ch, &opts, &mut stream_rng(7, Stream::Solver, 0)).unwrap();
        let state = AoState {
            phases: init.phases,
            beams: init.beams,
            t: init.t,
        };
        let (next, rep) = step(&cfg, &ch, &state, &opts).unwrap();
        assert!(rep.surrogate_out > rep.surrogate_in);
        assert!(is_feasible(&cfg, &ch, &next, 1e-6).unwrap());
    }

    #[test]
    fn moderate_snr_accepts_phase_steps() {
        let (mut cfg, ch) = reference_point_instance(1);
        cfg.noise_power = vec![1e-7; 4];
        cfg.min_rate = vec![0.1; 4];
        let opts = SolverOptions::default();
        let (sol, trace) = solve_with_rng(&cfg, &ch, &opts, &mut stream_rng(1, Stream::Solver, 0)).unwrap();
        assert!(trace.records.iter().any(|r| r.phase_trust.is_some()));
        assert!(trace.worst_decrease() <= 1e-6);
        assert!(sol.objective > trace.records[0].throughput);
    }
}
