//! Monte-Carlo sweeps over one system parameter.
//!
//! A [`ScenarioSpec`] names the swept parameter, its grid, the number of
//! channel realizations and the baselines to run. Realization `r` always uses
//! the channel stream `r` of the master seed, so every grid point and every
//! baseline sees the same draws wherever the dimensions agree (the generator
//! is element-major, so a larger surface extends a smaller one). Instances
//! are dispatched to a worker pool and reduced in (grid point, realization)
//! order, which makes the output independent of scheduling.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao::{solve_with_rng, SolverOptions};
use crate::channel::{generate_stacked, stream_rng, FadingParams, Geometry, Stream};
use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, ChannelRealization, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Fig2a,
    Fig2b,
    Fig2c,
    Custom,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::Fig2a => "fig2a",
            ScenarioId::Fig2b => "fig2b",
            ScenarioId::Fig2c => "fig2c",
            ScenarioId::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Parameter varied along the grid. Names carry their units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "N_coh")]
    NCoh,
    #[serde(rename = "N_fix")]
    NFix,
    #[serde(rename = "b_bits")]
    Bits,
    #[serde(rename = "R_F_bits_per_second")]
    ControlRate,
    #[serde(rename = "T_seconds")]
    Frame,
    #[serde(rename = "p_dbm")]
    DeliveryPowerDbm,
    #[serde(rename = "E_max_joules")]
    EnergyBudget,
    #[serde(rename = "R_min_bits")]
    MinRate,
    #[serde(rename = "noise_dbm")]
    NoiseDbm,
}

impl SweepParam {
    fn is_integer(self) -> bool {
        matches!(self, SweepParam::NCoh | SweepParam::NFix | SweepParam::Bits)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Hybrid surface with the configured coherent/fixed split.
    Proposed,
    /// Every element coherent.
    FullyCoherent,
    /// Every element fixed, so nothing is delivered.
    FullyFixed,
    /// Hybrid surface with a different number of bits per phase.
    BVariant(u32),
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Proposed => f.write_str("proposed"),
            Baseline::FullyCoherent => f.write_str("fully_coherent"),
            Baseline::FullyFixed => f.write_str("fully_fixed"),
            Baseline::BVariant(b) => write!(f, "b_variant_{b}"),
        }
    }
}

/// Rewrites the element split or the quantization for a baseline. The total
/// element count is preserved.
pub fn baseline_config(base: &SystemConfig, which: Baseline) -> SystemConfig {
    let mut cfg = base.clone();
    let n = base.elements();
    match which {
        Baseline::Proposed => {}
        Baseline::FullyCoherent => {
            cfg.n_coh = n;
            cfg.n_fix = 0;
        }
        Baseline::FullyFixed => {
            cfg.n_coh = 0;
            cfg.n_fix = n;
        }
        Baseline::BVariant(b) => cfg.bits_per_phase = b,
    }
    cfg
}

/// Settings that replace the defaults (the reference operating point, the
/// default geometry and fading). After [`ScenarioSpec::resolve`] every field
/// is present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(rename = "M_antennas", default, skip_serializing_if = "Option::is_none")]
    pub antennas: Option<usize>,
    #[serde(rename = "K_users", default, skip_serializing_if = "Option::is_none")]
    pub users: Option<usize>,
    #[serde(rename = "N_coh", default, skip_serializing_if = "Option::is_none")]
    pub n_coh: Option<usize>,
    #[serde(rename = "N_fix", default, skip_serializing_if = "Option::is_none")]
    pub n_fix: Option<usize>,
    #[serde(rename = "b_bits", default, skip_serializing_if = "Option::is_none")]
    pub bits_per_phase: Option<u32>,
    #[serde(rename = "R_F_bits_per_second", default, skip_serializing_if = "Option::is_none")]
    pub control_rate: Option<f64>,
    #[serde(rename = "T_seconds", default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<f64>,
    #[serde(rename = "p_dbm", default, skip_serializing_if = "Option::is_none")]
    pub delivery_power_dbm: Option<f64>,
    #[serde(rename = "E_max_joules", default, skip_serializing_if = "Option::is_none")]
    pub energy_budget: Option<f64>,
    /// Same target for every user.
    #[serde(rename = "R_min_bits", default, skip_serializing_if = "Option::is_none")]
    pub min_rate: Option<f64>,
    #[serde(rename = "noise_dbm", default, skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_br: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_ru: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rician_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pl0_db: Option<f64>,
    #[serde(rename = "bs_position_m", default, skip_serializing_if = "Option::is_none")]
    pub bs_pos: Option<[f64; 2]>,
    #[serde(rename = "ris_position_m", default, skip_serializing_if = "Option::is_none")]
    pub ris_pos: Option<[f64; 2]>,
    #[serde(rename = "user_center_m", default, skip_serializing_if = "Option::is_none")]
    pub user_center: Option<[f64; 2]>,
    #[serde(rename = "user_radius_m", default, skip_serializing_if = "Option::is_none")]
    pub user_radius: Option<f64>,
}

impl Overrides {
    fn filled(&self) -> Overrides {
        let cfg = SystemConfig::reference_point();
        let fading = FadingParams::default();
        let geom = Geometry::default();
        Overrides {
            antennas: self.antennas.or(Some(cfg.antennas)),
            users: self.users.or(Some(cfg.users)),
            n_coh: self.n_coh.or(Some(cfg.n_coh)),
            n_fix: self.n_fix.or(Some(cfg.n_fix)),
            bits_per_phase: self.bits_per_phase.or(Some(cfg.bits_per_phase)),
            control_rate: self.control_rate.or(Some(cfg.control_rate)),
            frame: self.frame.or(Some(cfg.frame)),
            delivery_power_dbm: self.delivery_power_dbm.or(Some(20.0)),
            energy_budget: self.energy_budget.or(Some(cfg.energy_budget)),
            min_rate: self.min_rate.or(Some(cfg.min_rate[0])),
            noise_dbm: self.noise_dbm.or(Some(-80.0)),
            alpha_br: self.alpha_br.or(Some(fading.alpha_br)),
            alpha_ru: self.alpha_ru.or(Some(fading.alpha_ru)),
            rician_k: self.rician_k.or(Some(fading.rician_k)),
            pl0_db: self.pl0_db.or(Some(fading.pl0_db)),
            bs_pos: self.bs_pos.or(Some(geom.bs_pos)),
            ris_pos: self.ris_pos.or(Some(geom.ris_pos)),
            user_center: self.user_center.or(Some(geom.user_circle_center)),
            user_radius: self.user_radius.or(Some(geom.user_circle_radius)),
        }
    }

    fn set(&mut self, param: SweepParam, v: f64) {
        match param {
            SweepParam::NCoh => self.n_coh = Some(v.round() as usize),
            SweepParam::NFix => self.n_fix = Some(v.round() as usize),
            SweepParam::Bits => self.bits_per_phase = Some(v.round() as u32),
            SweepParam::ControlRate => self.control_rate = Some(v),
            SweepParam::Frame => self.frame = Some(v),
            SweepParam::DeliveryPowerDbm => self.delivery_power_dbm = Some(v),
            SweepParam::EnergyBudget => self.energy_budget = Some(v),
            SweepParam::MinRate => self.min_rate = Some(v),
            SweepParam::NoiseDbm => self.noise_dbm = Some(v),
        }
    }

    /// The problem at these settings, with unset fields at their defaults.
    pub fn build(&self) -> Result<Instance> {
        let o = self.filled();
        let users = o.users.unwrap_or_default();
        let cfg = SystemConfig {
            antennas: o.antennas.unwrap_or_default(),
            users,
            n_coh: o.n_coh.unwrap_or_default(),
            n_fix: o.n_fix.unwrap_or_default(),
            bits_per_phase: o.bits_per_phase.unwrap_or_default(),
            control_rate: o.control_rate.unwrap_or_default(),
            frame: o.frame.unwrap_or_default(),
            delivery_power: dbm_to_watts(o.delivery_power_dbm.unwrap_or_default()),
            energy_budget: o.energy_budget.unwrap_or_default(),
            min_rate: vec![o.min_rate.unwrap_or_default(); users],
            noise_power: vec![dbm_to_watts(o.noise_dbm.unwrap_or_default()); users],
        };
        let fading = FadingParams {
            alpha_br: o.alpha_br.unwrap_or_default(),
            alpha_ru: o.alpha_ru.unwrap_or_default(),
            rician_k: o.rician_k.unwrap_or_default(),
            pl0_db: o.pl0_db.unwrap_or_default(),
        };
        let geometry = Geometry {
            bs_pos: o.bs_pos.unwrap_or_default(),
            ris_pos: o.ris_pos.unwrap_or_default(),
            user_circle_center: o.user_center.unwrap_or_default(),
            user_circle_radius: o.user_radius.unwrap_or_default(),
        };
        fading.validate()?;
        geometry.validate()?;
        Ok(Instance { cfg, fading, geometry })
    }
}

/// Everything needed to draw and solve one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub cfg: SystemConfig,
    pub fading: FadingParams,
    pub geometry: Geometry,
}

fn default_realizations() -> usize {
    100
}

fn default_baselines() -> Vec<Baseline> {
    vec![Baseline::Proposed]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scenario: ScenarioId,
    pub parameter: SweepParam,
    pub grid: Vec<f64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<Baseline>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl ScenarioSpec {
    /// Coherent-element sweep with four fixed elements and `R_F = 10` bit/s.
    pub fn fig2a() -> Self {
        ScenarioSpec {
            scenario: ScenarioId::Fig2a,
            parameter: SweepParam::NCoh,
            grid: vec![4.0, 8.0, 12.0, 16.0, 20.0],
            realizations: default_realizations(),
            seed: 0,
            baselines: default_baselines(),
            overrides: Overrides {
                n_fix: Some(4),
                control_rate: Some(10.0),
                ..Overrides::default()
            },
            solver: SolverOptions::default(),
        }
    }

    /// Delivery-power sweep from 10 to 30 dBm.
    pub fn fig2b() -> Self {
        ScenarioSpec {
            scenario: ScenarioId::Fig2b,
            parameter: SweepParam::DeliveryPowerDbm,
            grid: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            ..Self::fig2a()
        }
        .with_overrides(Overrides::default())
    }

    /// Energy-budget sweep comparing the hybrid surface with its baselines.
    pub fn fig2c() -> Self {
        ScenarioSpec {
            scenario: ScenarioId::Fig2c,
            parameter: SweepParam::EnergyBudget,
            grid: vec![0.6, 0.8, 1.0],
            baselines: vec![
                Baseline::Proposed,
                Baseline::FullyFixed,
                Baseline::FullyCoherent,
                Baseline::BVariant(2),
            ],
            ..Self::fig2a()
        }
        .with_overrides(Overrides::default())
    }

    pub fn preset(id: ScenarioId) -> Option<Self> {
        match id {
            ScenarioId::Fig2a => Some(Self::fig2a()),
            ScenarioId::Fig2b => Some(Self::fig2b()),
            ScenarioId::Fig2c => Some(Self::fig2c()),
            ScenarioId::Custom => None,
        }
    }

    fn with_overrides(mut self, o: Overrides) -> Self {
        self.overrides = o;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep grid has a non-finite value".into()));
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config("sweep grid must be strictly monotone".into()));
        }
        if self.parameter.is_integer() && self.grid.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config(format!(
                "{:?} takes nonnegative integer values",
                self.parameter
            )));
        }
        if self.realizations == 0 {
            return Err(Error::Config("need at least one realization".into()));
        }
        if self.baselines.is_empty() {
            return Err(Error::Config("need at least one baseline".into()));
        }
        for (i, b) in self.baselines.iter().enumerate() {
            if self.baselines[..i].contains(b) {
                return Err(Error::Config(format!("baseline {b} listed twice")));
            }
        }
        self.solver.validate()
    }

    /// Copy with every override filled in, as written to the JSON output.
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        self.validate()?;
        Ok(ScenarioSpec {
            overrides: self.overrides.filled(),
            ..self.clone()
        })
    }

    /// The problem at grid point `value`.
    pub fn instance_at(&self, value: f64) -> Result<Instance> {
        let mut o = self.overrides.clone();
        o.set(self.parameter, value);
        o.build()
    }
}

/// One instance to solve: settings plus solver options.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// Report of a single solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub spec: InstanceSpec,
    pub config: SystemConfig,
    pub solution: crate::model::Solution,
    pub trace: crate::ao::SolveTrace,
    pub feasibility: crate::model::FeasibilityReport,
}

/// Draws the channel of realization 0 for `spec.seed` and solves it.
pub fn solve_instance(spec: &InstanceSpec) -> Result<SolveReport> {
    let resolved = InstanceSpec {
        overrides: spec.overrides.filled(),
        ..spec.clone()
    };
    let inst = resolved.overrides.build()?;
    inst.cfg.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Channel, 0);
    let ch = crate::channel::generate(&inst.geometry, &inst.fading, &inst.cfg, &mut rng)?;
    let solver = SolverOptions {
        seed: spec.seed,
        ..spec.solver.clone()
    };
    let (solution, trace) = crate::ao::solve(&inst.cfg, &ch, &solver)?;
    let feasibility = crate::model::check_feasibility_with(&solution, &inst.cfg, &ch, solver.feasibility_tol)?;
    Ok(SolveReport {
        spec: resolved,
        config: inst.cfg,
        solution,
        trace,
        feasibility,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Feasible { throughput: f64, t: f64, iterations: usize },
    Infeasible { reason: String },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub grid_index: usize,
    pub realization: usize,
    pub baseline: Baseline,
    #[serde(flatten)]
    pub outcome: Outcome,
}

/// Aggregate over the realizations of one (grid point, baseline) pair.
/// Means and the standard error are over feasible instances only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub grid_value: f64,
    pub baseline: Baseline,
    pub mean_tput: Option<f64>,
    pub stderr: Option<f64>,
    pub n_feasible: usize,
    pub n_infeasible: usize,
    pub n_failed: usize,
    pub mean_t: Option<f64>,
    pub mean_iters: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// The resolved spec that produced this result.
    pub spec: ScenarioSpec,
    /// Grid-major, baselines in spec order.
    pub points: Vec<PointResult>,
    pub instances: Vec<InstanceRecord>,
}

impl SweepResult {
    pub fn point(&self, grid_index: usize, baseline: Baseline) -> Option<&PointResult> {
        let nb = self.spec.baselines.len();
        let j = self.spec.baselines.iter().position(|&b| b == baseline)?;
        self.points.get(grid_index * nb + j)
    }

    /// Mean throughput per grid point for one baseline, scoring a grid point
    /// with no feasible instance as zero.
    pub fn scores(&self, baseline: Baseline) -> Vec<f64> {
        (0..self.spec.grid.len())
            .map(|g| self.point(g, baseline).and_then(|p| p.mean_tput).unwrap_or(0.0))
            .collect()
    }
}

fn run_one(inst: &Instance, baseline: Baseline, stacked: &Stacked, solver: &SolverOptions, seed: u64, r: usize) -> Outcome {
    let cfg = baseline_config(&inst.cfg, baseline);
    let attempt = || -> Result<Outcome> {
        cfg.validate()?;
        let ch = ChannelRealization::from_stacked(&stacked.h, &stacked.hr, cfg.n_coh)?;
        let mut rng = stream_rng(seed, Stream::Solver, r as u64);
        let (sol, trace) = solve_with_rng(&cfg, &ch, solver, &mut rng)?;
        Ok(Outcome::Feasible {
            throughput: sol.objective,
            t: sol.t,
            iterations: trace.iterations,
        })
    };
    match attempt() {
        Ok(o) => o,
        Err(e) if e.is_infeasibility() => Outcome::Infeasible { reason: e.to_string() },
        Err(e) => {
            warn!("realization {r}, baseline {baseline}: {e}");
            Outcome::Failed { reason: e.to_string() }
        }
    }
}

struct Stacked {
    h: crate::linalg::CMatrix,
    hr: Vec<crate::linalg::CVector>,
}

fn aggregate(grid_value: f64, baseline: Baseline, outcomes: &[&Outcome]) -> PointResult {
    let mut tput = Vec::new();
    let mut ts = Vec::new();
    let mut iters = Vec::new();
    let (mut n_infeasible, mut n_failed) = (0, 0);
    for o in outcomes {
        match o {
            Outcome::Feasible { throughput, t, iterations } => {
                tput.push(*throughput);
                ts.push(*t);
                iters.push(*iterations as f64);
            }
            Outcome::Infeasible { .. } => n_infeasible += 1,
            Outcome::Failed { .. } => n_failed += 1,
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mean_tput = mean(&tput);
    let stderr = match (mean_tput, tput.len()) {
        (Some(m), n) if n >= 2 => {
            let var = tput.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            Some((var / n as f64).sqrt())
        }
        _ => None,
    };
    PointResult {
        grid_value,
        baseline,
        mean_tput,
        stderr,
        n_feasible: tput.len(),
        n_infeasible,
        n_failed,
        mean_t: mean(&ts),
        mean_iters: mean(&iters),
    }
}

/// Runs every (grid point, realization, baseline) instance. `workers` caps
/// the thread count; `None` uses the global pool.
pub fn run_scenario(spec: &ScenarioSpec, workers: Option<usize>) -> Result<SweepResult> {
    let spec = spec.resolve()?;
    let instances = spec
        .grid
        .iter()
        .map(|&v| spec.instance_at(v))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.realizations).map(move |r| (g, r)))
        .collect();

    let work = |&(g, r): &(usize, usize)| -> Vec<Outcome> {
        let inst = &instances[g];
        let cfg = &inst.cfg;
        let mut rng = stream_rng(spec.seed, Stream::Channel, r as u64);
        let stacked = generate_stacked(&inst.geometry, &inst.fading, cfg.antennas, cfg.users, cfg.elements(), &mut rng)
            .map(|(h, hr, _)| Stacked { h, hr });
        spec.baselines
            .iter()
            .map(|&b| match &stacked {
                Ok(s) => run_one(inst, b, s, &spec.solver, spec.seed, r),
                Err(e) => Outcome::Failed { reason: e.to_string() },
            })
            .collect()
    };
    let results: Vec<Vec<Outcome>> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| tasks.par_iter().map(work).collect()),
        None => tasks.par_iter().map(work).collect(),
    };

    let mut records = Vec::with_capacity(tasks.len() * spec.baselines.len());
    for (&(g, r), outs) in tasks.iter().zip(results) {
        for (&baseline, outcome) in spec.baselines.iter().zip(outs) {
            records.push(InstanceRecord {
                grid_index: g,
                realization: r,
                baseline,
                outcome,
            });
        }
    }
    let mut points = Vec::new();
    for (g, &value) in spec.grid.iter().enumerate() {
        for &b in &spec.baselines {
            let outs: Vec<&Outcome> = records
                .iter()
                .filter(|rec| rec.grid_index == g && rec.baseline == b)
                .map(|rec| &rec.outcome)
                .collect();
            let p = aggregate(value, b, &outs);
            info!(
                "{} {:?} = {value}, {b}: mean {:?} over {} feasible",
                spec.scenario, spec.parameter, p.mean_tput, p.n_feasible
            );
            points.push(p);
        }
    }
    Ok(SweepResult {
        spec,
        points,
        instances: records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV table, one row per (grid point, baseline).
pub fn to_csv(result: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["grid_value", "baseline", "mean_tput", "stderr", "n_feasible", "mean_t", "mean_iters"])?;
    for p in &result.points {
        w.write_record([
            p.grid_value.to_string(),
            p.baseline.to_string(),
            opt(p.mean_tput),
            opt(p.stderr),
            p.n_feasible.to_string(),
            opt(p.mean_t),
            opt(p.mean_iters),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("CSV buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

/// Writes `<scenario>.csv` and/or `<scenario>.json` into `dir` and returns
/// the paths written.
pub fn emit(result: &SweepResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let stem = result.spec.scenario.to_string();
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, to_csv(result)?).map_err(io_err(&path))?;
        written.push(path);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(result)?).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Reads and validates a spec file.
pub fn load_spec(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let spec: ScenarioSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}
