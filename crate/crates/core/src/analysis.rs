//! Closed-form guidance for a single-antenna, single-user link.
//!
//! The base station transmits at a fixed power `p_t` and every reflecting
//! element uses the coherent phase shift. The throughput is then
//! `(T − t)·log₂(1 + p̄ C N²)` with `N` the number of coherent elements, `C`
//! the product of the smallest squared cascade magnitudes and `p̄ = p_t/δ²`.
//! The delivery time is pinned either by the control link (`t = bN/R_F`) or by
//! the energy budget (`t = (E_max − T p_t)/(p − p_t)`), which gives the two
//! cases below.
//!
//! `N` is treated as continuous by the closed forms; [`integer_pair`] turns a
//! continuous optimum into the better of its two integer neighbours.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `p̄C` below which the large-SNR closed form is not offered.
pub const LARGE_SNR_GATE: f64 = 1e4;

const W_TOL: f64 = 1e-12;
const W_MAX_ITERS: usize = 50;

/// Principal branch of the Lambert W function: the `w ≥ −1` with `w·eʷ = x`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        return Err(Error::Domain(format!("W₀ is undefined below −1/e, got {x}")));
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let mut w = if x > E {
        let l = x.ln();
        l - l.ln()
    } else if x.abs() < 1e-3 {
        x - x * x + 1.5 * x * x * x
    } else if x < -0.25 {
        // expansion about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        x.ln_1p()
    };
    for _ in 0..W_MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if f == 0.0 || wp1 == 0.0 {
            return Ok(w);
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= W_TOL * (1.0 + w.abs()) {
            return Ok(w.max(-1.0));
        }
    }
    if (w * w.exp() - x).abs() <= 1e-10 * x.abs().max(1.0) {
        Ok(w.max(-1.0))
    } else {
        Err(Error::Domain(format!("Halley iteration for W₀({x}) did not settle")))
    }
}

/// The simplified single-user scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleScenario {
    /// Fixed transmit power of the base station.
    #[serde(rename = "p_t_watts")]
    pub p_t: f64,
    /// Control-link delivery power.
    #[serde(rename = "p_watts")]
    pub p: f64,
    #[serde(rename = "T_seconds")]
    pub frame: f64,
    #[serde(rename = "E_max_joules")]
    pub energy_budget: f64,
    #[serde(rename = "b_bits")]
    pub bits_per_phase: u32,
    #[serde(rename = "R_F_bits_per_second")]
    pub control_rate: f64,
    #[serde(rename = "R_min_bits")]
    pub min_rate: f64,
    /// `min|h_r,n|² · min|h_n|²` over the coherent elements.
    #[serde(rename = "C")]
    pub composite: f64,
    /// `p_t / δ²`.
    pub p_bar: f64,
}

impl SimpleScenario {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("T", self.frame),
            ("R_F", self.control_rate),
            ("C", self.composite),
            ("p̄", self.p_bar),
            ("E_max", self.energy_budget),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.p >= 0.0 && self.p_t > self.p) {
            return Err(Error::Config(format!(
                "need p_t > p ≥ 0, got p_t = {} and p = {}",
                self.p_t, self.p
            )));
        }
        if self.bits_per_phase == 0 {
            return Err(Error::Config("b must be at least one bit".into()));
        }
        if !(self.min_rate >= 0.0) {
            return Err(Error::Config(format!("R_min must be nonnegative, got {}", self.min_rate)));
        }
        Ok(())
    }

    fn b(&self) -> f64 {
        f64::from(self.bits_per_phase)
    }

    /// `√(p̄C)`.
    pub fn root_snr(&self) -> f64 {
        (self.p_bar * self.composite).sqrt()
    }

    /// `(E_max − T p_t)/(p − p_t)`: the shortest delivery time for which the
    /// budget covers transmission at `p_t` for the rest of the frame.
    pub fn energy_bound(&self) -> f64 {
        (self.energy_budget - self.frame * self.p_t) / (self.p - self.p_t)
    }

    /// `T R_F / b`: the element count whose delivery fills the whole frame.
    pub fn max_elements(&self) -> f64 {
        self.frame * self.control_rate / self.b()
    }
}

/// Smallest delivery time allowed by the control link and the energy budget.
pub fn t_star(s: &SimpleScenario, n_coh: f64) -> Result<f64> {
    s.validate()?;
    if !(n_coh >= 0.0) {
        return Err(Error::Domain(format!("element count must be nonnegative, got {n_coh}")));
    }
    let delivery = s.b() * n_coh / s.control_rate;
    let energy = s.energy_bound();
    let t = if energy > 0.0 { delivery.max(energy) } else { delivery };
    if t >= s.frame {
        return Err(Error::ScenarioInfeasible(format!(
            "delivery time {t} leaves no transmission time in a {} s frame",
            s.frame
        )));
    }
    Ok(t)
}

/// `p̄ C N²`, a lower bound on the SNR under optimal coherent phases.
pub fn snr_lower_bound(s: &SimpleScenario, n_coh: f64) -> f64 {
    s.p_bar * s.composite * n_coh * n_coh
}

/// `min|h_r,n|² · min|h_n|²`.
pub fn composite_constant(hr_mag: &[f64], h_mag: &[f64]) -> Result<f64> {
    if hr_mag.is_empty() || hr_mag.len() != h_mag.len() {
        return Err(Error::Config("need matching, non-empty magnitude lists".into()));
    }
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min(hr_mag).powi(2) * min(h_mag).powi(2))
}

/// `p̄ (Σ_n |h_r,n| |h_n|)²`, the SNR with every cascade term phase-aligned.
pub fn aligned_snr(p_bar: f64, hr_mag: &[f64], h_mag: &[f64]) -> f64 {
    let sum: f64 = hr_mag.iter().zip(h_mag).map(|(a, b)| a.abs() * b.abs()).sum();
    p_bar * sum * sum
}

/// How the delivery time depends on `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeRule {
    /// `t = bN/R_F`.
    #[serde(rename = "case-1")]
    Delivery,
    /// `t = (E_max − T p_t)/(p − p_t)`, independent of `N`.
    #[serde(rename = "case-2")]
    Energy,
}

fn time_for(s: &SimpleScenario, n: f64, rule: TimeRule) -> f64 {
    match rule {
        TimeRule::Delivery => s.b() * n / s.control_rate,
        TimeRule::Energy => s.energy_bound(),
    }
}

/// `(T − t(N))·log₂(1 + p̄ C N²)`.
pub fn exact_objective(s: &SimpleScenario, n: f64, rule: TimeRule) -> f64 {
    (s.frame - time_for(s, n, rule)) * (s.p_bar * s.composite * n * n).ln_1p() / LN_2
}

/// `(T − t(N))·log₂(p̄ C N²)`, the large-SNR leading term.
pub fn leading_objective(s: &SimpleScenario, n: f64, rule: TimeRule) -> f64 {
    (s.frame - time_for(s, n, rule)) * (s.p_bar * s.composite * n * n).log2()
}

/// Stationary point of the leading term when the control link pins `t`:
/// `T R_F / (b W₀(e T R_F √(p̄C) / b))`.
pub fn n_star_case1(s: &SimpleScenario) -> Result<f64> {
    s.validate()?;
    let snr = s.p_bar * s.composite;
    if snr < LARGE_SNR_GATE {
        return Err(Error::CaseInapplicable(format!(
            "p̄C = {snr:e} is below the large-SNR gate {LARGE_SNR_GATE:e}"
        )));
    }
    let arg = E * s.max_elements() * s.root_snr();
    Ok(s.max_elements() / lambert_w0(arg)?)
}

/// `T R_F / N − b − b·ln(√(p̄C) N)`, zero at a stationary point of the
/// case-1 leading term.
pub fn stationarity_residual(s: &SimpleScenario, n: f64) -> f64 {
    s.frame * s.control_rate / n - s.b() - s.b() * (s.root_snr() * n).ln()
}

/// Element count when the energy budget pins `t`:
/// `(E_max − T p_t) R_F / ((p − p_t) b)`.
pub fn n_star_case2(s: &SimpleScenario) -> Result<f64> {
    s.validate()?;
    let tp_t = s.frame * s.p_t;
    if !(s.energy_budget < tp_t) {
        return Err(Error::CaseInapplicable(format!(
            "E_max = {} is not below T·p_t = {tp_t}",
            s.energy_budget
        )));
    }
    let tp = s.frame * s.p;
    if !(tp < s.energy_budget) {
        return Err(Error::CaseInapplicable(format!(
            "E_max = {} does not exceed T·p = {tp}",
            s.energy_budget
        )));
    }
    Ok(s.energy_bound() * s.control_rate / s.b())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case1Feasibility {
    /// `N − (E_max − T p_t) R_F / ((p − p_t) b)`; must be positive.
    pub energy_residual: f64,
    /// `2(T R_F − bN)/(R_F ln 2) − R_min / ln(√(p̄C) N)`; must be nonnegative.
    pub rate_residual: f64,
    pub feasible: bool,
}

/// Whether the control link really pins `t` at `n` and the rate target holds.
pub fn feasible_case1(s: &SimpleScenario, n: f64) -> Result<Case1Feasibility> {
    s.validate()?;
    let energy_residual = n - s.energy_bound() * s.control_rate / s.b();
    let log_arg = s.root_snr() * n;
    if !(log_arg > 1.0) {
        return Err(Error::ConditionUndefined(format!(
            "√(p̄C)·N = {log_arg} must exceed one for the large-SNR rate condition"
        )));
    }
    let lhs = 2.0 * (s.frame * s.control_rate - s.b() * n) / (s.control_rate * LN_2);
    let rate_residual = lhs - s.min_rate / log_arg.ln();
    Ok(Case1Feasibility {
        energy_residual,
        rate_residual,
        feasible: energy_residual > 0.0 && rate_residual >= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Case2Feasibility {
    /// `N − √(2^{R_min (p − p_t)/(T p − E_max)} / (p̄C))`.
    pub residual: f64,
    pub feasible: bool,
}

/// Whether `n` coherent elements meet the rate target when the energy budget
/// pins `t`.
pub fn feasible_case2(s: &SimpleScenario, n: f64) -> Result<Case2Feasibility> {
    s.validate()?;
    let denom = s.frame * s.p - s.energy_budget;
    if denom == 0.0 {
        return Err(Error::Domain("condition undefined at T·p = E_max".into()));
    }
    let exponent = s.min_rate * (s.p - s.p_t) / denom;
    let rhs = (0.5 * (exponent * LN_2 - (s.p_bar * s.composite).ln())).exp();
    let residual = n - rhs;
    Ok(Case2Feasibility {
        residual,
        feasible: residual >= 0.0,
    })
}

/// How [`brute_force_n`] searches its range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Search {
    /// Golden-section search on the continuous range, compared against both
    /// endpoints.
    Golden,
    /// Evenly spaced points including both endpoints.
    Grid(usize),
    /// Every integer in the range.
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForce {
    /// Maximizer of the throughput with the exact `log₂(1 + ·)`.
    pub exact_argmax: f64,
    pub exact_value: f64,
    /// Maximizer of the large-SNR leading term.
    pub leading_argmax: f64,
    pub leading_value: f64,
}

fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(lo, f(lo)), (hi, f(hi)), (mid, f(mid))]
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .fold((mid, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

fn discrete_max(f: impl Fn(f64) -> f64, points: &[f64]) -> (f64, f64) {
    points
        .iter()
        .map(|&x| (x, f(x)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, cand| if cand.1 > best.1 { cand } else { best })
}

/// Maximizes the throughput in `N` over `range` numerically, with both the
/// exact and the leading-term objective.
pub fn brute_force_n(s: &SimpleScenario, rule: TimeRule, range: (f64, f64), search: Search) -> Result<BruteForce> {
    s.validate()?;
    let (lo, hi) = range;
    if !(lo >= 0.0 && lo < hi && hi <= s.max_elements()) {
        return Err(Error::Domain(format!(
            "search range [{lo}, {hi}] must be non-empty inside [0, {}]",
            s.max_elements()
        )));
    }
    let exact = |n: f64| exact_objective(s, n, rule);
    let leading = |n: f64| leading_objective(s, n, rule);
    let ((xa, va), (xl, vl)) = match search {
        Search::Golden => (golden_max(exact, lo, hi), golden_max(leading, lo, hi)),
        Search::Grid(steps) => {
            let steps = steps.max(1);
            let pts: Vec<f64> = (0..=steps)
                .map(|i| if i == steps { hi } else { lo + (hi - lo) * i as f64 / steps as f64 })
                .collect();
            (discrete_max(exact, &pts), discrete_max(leading, &pts))
        }
        Search::Integer => {
            let (first, last) = (lo.ceil() as u64, hi.floor() as u64);
            if first > last {
                return Err(Error::Domain(format!("no integer in [{lo}, {hi}]")));
            }
            let pts: Vec<f64> = (first..=last).map(|n| n as f64).collect();
            (discrete_max(exact, &pts), discrete_max(leading, &pts))
        }
    };
    Ok(BruteForce {
        exact_argmax: xa,
        exact_value: va,
        leading_argmax: xl,
        leading_value: vl,
    })
}

/// The integer neighbours of a continuous optimum, scored with the exact
/// objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegerPair {
    pub floor: u64,
    pub ceil: u64,
    pub floor_value: f64,
    pub ceil_value: f64,
    pub best: u64,
}

pub fn integer_pair(s: &SimpleScenario, n: f64, rule: TimeRule) -> Result<IntegerPair> {
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::Domain(format!("element count must be finite and nonnegative, got {n}")));
    }
    let score = |k: u64| {
        let k = k as f64;
        if time_for(s, k, rule) < s.frame && k <= s.max_elements() {
            exact_objective(s, k, rule)
        } else {
            f64::NEG_INFINITY
        }
    };
    let (floor, ceil) = (n.floor() as u64, n.ceil() as u64);
    let (floor_value, ceil_value) = (score(floor), score(ceil));
    Ok(IntegerPair {
        floor,
        ceil,
        floor_value,
        ceil_value,
        best: if ceil_value > floor_value { ceil } else { floor },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case1Report {
    pub n_star: f64,
    pub t_star: Option<f64>,
    pub stationarity_residual: f64,
    pub integer: IntegerPair,
    pub feasibility: Option<Case1Feasibility>,
    pub oracle: BruteForce,
    /// `|oracle leading argmax − N*| / N*`.
    pub leading_divergence: f64,
    /// `|oracle exact argmax − N*| / N*`.
    pub exact_divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case2Report {
    pub n_star: f64,
    pub t_star: f64,
    pub integer: IntegerPair,
    pub feasibility: Case2Feasibility,
    pub oracle: BruteForce,
}

/// Everything the closed forms say about one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub scenario: SimpleScenario,
    pub energy_bound_t: f64,
    pub case1: Option<Case1Report>,
    pub case2: Option<Case2Report>,
    /// Why a case or a check was skipped.
    pub notes: Vec<String>,
}

pub fn analyze(s: &SimpleScenario) -> Result<AnalysisReport> {
    s.validate()?;
    let mut notes = Vec::new();

    let case1 = match n_star_case1(s) {
        Ok(n) => {
            let oracle = brute_force_n(s, TimeRule::Delivery, (0.0, s.max_elements()), Search::Golden)?;
            let feasibility = feasible_case1(s, n)
                .map_err(|e| notes.push(format!("case 1 feasibility: {e}")))
                .ok();
            let t = t_star(s, n).map_err(|e| notes.push(format!("case 1 delivery time: {e}"))).ok();
            Some(Case1Report {
                n_star: n,
                t_star: t,
                stationarity_residual: stationarity_residual(s, n),
                integer: integer_pair(s, n, TimeRule::Delivery)?,
                feasibility,
                leading_divergence: (oracle.leading_argmax - n).abs() / n,
                exact_divergence: (oracle.exact_argmax - n).abs() / n,
                oracle,
            })
        }
        Err(e) => {
            notes.push(format!("case 1: {e}"));
            None
        }
    };

    let case2 = match n_star_case2(s) {
        Ok(n) if n > 0.0 => {
            let oracle = brute_force_n(s, TimeRule::Energy, (0.0, n.min(s.max_elements())), Search::Golden)?;
            Some(Case2Report {
                n_star: n,
                t_star: s.energy_bound(),
                integer: integer_pair(s, n, TimeRule::Energy)?,
                feasibility: feasible_case2(s, n)?,
                oracle,
            })
        }
        Ok(n) => {
            notes.push(format!("case 2: non-positive element count {n}"));
            None
        }
        Err(e) => {
            notes.push(format!("case 2: {e}"));
            None
        }
    };

    Ok(AnalysisReport {
        scenario: s.clone(),
        energy_bound_t: s.energy_bound(),
        case1,
        case2,
        notes,
    })
}
