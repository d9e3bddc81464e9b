//! The semi-discrete rational logit dynamic and its vanishing-noise limit.
//!
//! On a grid of `N` cells the dynamic reads
//!
//! ```text
//! dμ_i/dt = w_i(U(μ)) − μ_i
//! ```
//!
//! with `w` either the κ-exponential softmax `e_κ(U_i/η) / Σ_j e_κ(U_j/η)`
//! (noise `η > 0`) or the limit weights `max{U_i, 0}^{1/κ} / Σ_j …`
//! (`η → 0`, `κ > 0`). Time integration is explicit Euler with a fixed
//! step `Δt ≤ 1`, so each step is a convex combination of two points of the
//! simplex and mass is conserved up to roundoff.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kexp::Kappa;
use crate::measure::{max_pdf_distance, Grid, GridMeasure};
use crate::utility::UtilityModel;

/// Noise regime of the dynamic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    /// Noise intensity `η > 0`.
    Positive(f64),
    /// The `η → 0` limit equation; requires `κ > 0`.
    VanishingLimit,
}

impl NoiseMode {
    pub fn eta(self) -> Option<f64> {
        match self {
            NoiseMode::Positive(eta) => Some(eta),
            NoiseMode::VanishingLimit => None,
        }
    }
}

/// Everything needed to step the dynamic on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicConfig {
    pub grid: Grid,
    pub kappa: Kappa,
    pub noise: NoiseMode,
    /// Euler time step, `0 < dt ≤ 1`.
    pub dt: f64,
    /// Stationarity threshold on the per-step change of the cell PDF.
    pub delta: f64,
}

impl DynamicConfig {
    pub const DEFAULT_DT: f64 = 1e-3;
    pub const DEFAULT_DELTA: f64 = 1e-11;
    pub const DEFAULT_CELLS: usize = 500;

    /// Config with the default `dt` and `delta`.
    pub fn new(grid: Grid, kappa: Kappa, noise: NoiseMode) -> Result<Self> {
        let config = DynamicConfig {
            grid,
            kappa,
            noise,
            dt: Self::DEFAULT_DT,
            delta: Self::DEFAULT_DELTA,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_dt(self, dt: f64) -> Result<Self> {
        let config = DynamicConfig { dt, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        let config = DynamicConfig { delta, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn with_noise(self, noise: NoiseMode) -> Result<Self> {
        let config = DynamicConfig { noise, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn with_kappa(self, kappa: Kappa) -> Result<Self> {
        let config = DynamicConfig { kappa, ..self };
        config.validate()?;
        Ok(config)
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            out.push(format!("dynamic.dt: {} must lie in (0, 1]", self.dt));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            out.push(format!("dynamic.delta: {} must be positive", self.delta));
        }
        match self.noise {
            NoiseMode::Positive(eta) if !(eta > 0.0 && eta.is_finite()) => {
                out.push(format!("dynamic.eta: {eta} must be positive"));
            }
            NoiseMode::VanishingLimit if self.kappa.is_zero() => {
                out.push("dynamic.eta: the limit equation requires kappa > 0".to_string());
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Nearest step index to time `t`.
    fn step_of(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

fn check_utilities(config: &DynamicConfig, u: &[f64]) -> Result<()> {
    if u.len() != config.grid.n_cells() {
        return Err(Error::GridMismatch { left: config.grid.n_cells(), right: u.len() });
    }
    if let Some(bad) = u.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid("utility", format!("non-finite value {bad}")));
    }
    Ok(())
}

/// κ-exponential softmax, evaluated through `ln e_κ` and a max shift.
fn logit_weights_into(kappa: Kappa, eta: f64, u: &[f64], out: &mut [f64]) {
    let mut top = f64::NEG_INFINITY;
    for (o, &v) in out.iter_mut().zip(u) {
        *o = kappa.ln_exp(v / eta);
        top = top.max(*o);
    }
    let mut total = 0.0;
    for o in out.iter_mut() {
        *o = (*o - top).exp();
        total += *o;
    }
    // total >= 1 because the arg-max entry contributes exp(0).
    for o in out.iter_mut() {
        *o /= total;
    }
}

fn limit_weights_into(kappa: Kappa, u: &[f64], out: &mut [f64]) -> Result<()> {
    let power = 1.0 / kappa.value();
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(u) {
        *o = if v > 0.0 { v.powf(power) } else { 0.0 };
        total += *o;
    }
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateWeights { step: None });
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(())
}

fn weights_into(config: &DynamicConfig, u: &[f64], out: &mut [f64]) -> Result<()> {
    match config.noise {
        NoiseMode::Positive(eta) => {
            logit_weights_into(config.kappa, eta, u, out);
            Ok(())
        }
        NoiseMode::VanishingLimit => limit_weights_into(config.kappa, u, out),
    }
}

/// `p_i = e_κ(U_i/η) / Σ_j e_κ(U_j/η)`.
pub fn logit_weights(config: &DynamicConfig, u: &[f64]) -> Result<GridMeasure> {
    config.validate()?;
    let NoiseMode::Positive(eta) = config.noise else {
        return Err(Error::invalid("noise", "logit weights need a positive eta"));
    };
    check_utilities(config, u)?;
    let mut out = vec![0.0; u.len()];
    logit_weights_into(config.kappa, eta, u, &mut out);
    Ok(GridMeasure::from_raw_parts(config.grid, out))
}

/// `p_i = max{U_i, 0}^{1/κ} / Σ_j max{U_j, 0}^{1/κ}`.
pub fn limit_weights(config: &DynamicConfig, u: &[f64]) -> Result<GridMeasure> {
    config.validate()?;
    if config.noise != NoiseMode::VanishingLimit {
        return Err(Error::invalid("noise", "limit weights need the vanishing-noise mode"));
    }
    check_utilities(config, u)?;
    let mut out = vec![0.0; u.len()];
    limit_weights_into(config.kappa, u, &mut out)?;
    Ok(GridMeasure::from_raw_parts(config.grid, out))
}

/// Target distribution `w(U(μ))` for the configured noise mode.
pub fn weights(config: &DynamicConfig, u: &[f64]) -> Result<GridMeasure> {
    match config.noise {
        NoiseMode::Positive(_) => logit_weights(config, u),
        NoiseMode::VanishingLimit => limit_weights(config, u),
    }
}

/// Right-hand side `w(U(μ)) − μ`.
pub fn rhs(config: &DynamicConfig, model: &dyn UtilityModel, mu: &GridMeasure) -> Result<Vec<f64>> {
    config.validate()?;
    config.grid.ensure_same(mu.grid())?;
    model.grid().ensure_same(mu.grid())?;
    let target = weights(config, &model.evaluate(mu)?)?;
    Ok(target.masses().iter().zip(mu.masses()).map(|(w, m)| w - m).collect())
}

/// Reusable buffers for repeated Euler steps.
struct Stepper<'a> {
    config: DynamicConfig,
    model: &'a dyn UtilityModel,
    utility: Vec<f64>,
    target: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(config: &DynamicConfig, model: &'a dyn UtilityModel, init: &GridMeasure) -> Result<Self> {
        config.validate()?;
        config.grid.ensure_same(model.grid())?;
        config.grid.ensure_same(init.grid())?;
        let n = config.grid.n_cells();
        Ok(Stepper { config: *config, model, utility: vec![0.0; n], target: vec![0.0; n] })
    }

    /// `next = (1 − Δt)·current + Δt·w(U(current))`.
    fn step(&mut self, current: &[f64], next: &mut [f64]) -> Result<()> {
        self.model.evaluate_into(current, &mut self.utility);
        weights_into(&self.config, &self.utility, &mut self.target)?;
        let dt = self.config.dt;
        let keep = 1.0 - dt;
        for ((n, &m), &w) in next.iter_mut().zip(current).zip(&self.target) {
            *n = keep * m + dt * w;
        }
        Ok(())
    }
}

/// One forward-Euler step.
pub fn euler_step(
    config: &DynamicConfig,
    model: &dyn UtilityModel,
    mu: &GridMeasure,
) -> Result<GridMeasure> {
    let mut stepper = Stepper::new(config, model, mu)?;
    let mut next = vec![0.0; mu.masses().len()];
    stepper.step(mu.masses(), &mut next)?;
    Ok(GridMeasure::from_raw_parts(config.grid, next))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub measure: GridMeasure,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedFinalTime,
    /// The step `k` taking `μ_k` to `μ_{k+1}` changed every cell PDF by at
    /// most `δ`; the recorded state is `μ_{k+1}`.
    Stationary { step: usize },
}

/// Recorded states of a run, first one at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    /// Number of Euler steps taken.
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory always holds the initial state")
    }

    pub fn final_measure(&self) -> &GridMeasure {
        &self.last().measure
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.termination, Termination::Stationary { .. })
    }

    /// Snapshot whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

/// Integrates to `t_final` with fixed steps, recording the initial state
/// and every requested time (snapped to the nearest step).
pub fn run_until(
    config: &DynamicConfig,
    model: &dyn UtilityModel,
    init: &GridMeasure,
    t_final: f64,
    record_times: &[f64],
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(config, model, init)?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid("t_final", format!("{t_final} must be positive")));
    }
    let total = config.step_of(t_final).max(1);
    let mut record: Vec<usize> = Vec::with_capacity(record_times.len() + 1);
    record.push(0);
    for &t in record_times {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid("record_times", format!("{t} is not a valid time")));
        }
        let k = config.step_of(t);
        if k > total {
            return Err(Error::invalid("record_times", format!("{t} lies beyond t_final = {t_final}")));
        }
        record.push(k);
    }
    record.sort_unstable();
    record.dedup();

    let mut current = init.masses().to_vec();
    let mut next = vec![0.0; current.len()];
    let mut snapshots = Vec::with_capacity(record.len());
    let mut pending = record.iter().peekable();
    for k in 0..=total {
        if pending.next_if_eq(&&k).is_some() {
            snapshots.push(Snapshot {
                time: k as f64 * config.dt,
                measure: GridMeasure::from_raw_parts(config.grid, current.clone()),
            });
        }
        if k == total {
            break;
        }
        stepper
            .step(&current, &mut next)
            .map_err(|e| with_step(e, k))?;
        std::mem::swap(&mut current, &mut next);
    }
    Ok(Trajectory { snapshots, termination: Termination::ReachedFinalTime, steps: total })
}

/// Steps until `max_i N·|μ_{k+1,i} − μ_{k,i}| ≤ δ`, or `max_steps` steps.
///
/// The trajectory holds the initial state and the last computed state.
pub fn run_to_stationary(
    config: &DynamicConfig,
    model: &dyn UtilityModel,
    init: &GridMeasure,
    max_steps: usize,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(config, model, init)?;
    if max_steps == 0 {
        return Err(Error::invalid("max_steps", "must be at least 1"));
    }
    let n = config.grid.n_cells() as f64;
    let mut current = init.masses().to_vec();
    let mut next = vec![0.0; current.len()];
    let mut termination = Termination::ReachedFinalTime;
    let mut steps = 0;
    for k in 0..max_steps {
        stepper.step(&current, &mut next).map_err(|e| with_step(e, k))?;
        steps = k + 1;
        let change = current
            .iter()
            .zip(&next)
            .map(|(a, b)| n * (b - a).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut current, &mut next);
        if change <= config.delta {
            termination = Termination::Stationary { step: k };
            break;
        }
    }
    let snapshots = vec![
        Snapshot { time: 0.0, measure: init.clone() },
        Snapshot {
            time: steps as f64 * config.dt,
            measure: GridMeasure::from_raw_parts(config.grid, current),
        },
    ];
    Ok(Trajectory { snapshots, termination, steps })
}

fn with_step(e: Error, k: usize) -> Error {
    match e {
        Error::DegenerateWeights { step: None } => Error::DegenerateWeights { step: Some(k) },
        other => other,
    }
}

/// One row of an η-convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub eta: f64,
    pub time: f64,
    /// `max_i |pdf_η,i − pdf_0,i|` at `time`.
    pub error: f64,
    /// `ln(err_prev / err) / ln(η_prev / η)` against the next larger η;
    /// `None` for the largest η.
    pub rate: Option<f64>,
}

/// Max-norm PDF error of the `η > 0` dynamic against the limit equation,
/// per η and time, with observed convergence rates.
///
/// `etas` must be strictly decreasing. Rows are ordered by time, then by
/// the order of `etas`. All runs execute in parallel.
pub fn eta_convergence_table(
    base: &DynamicConfig,
    model: &dyn UtilityModel,
    init: &GridMeasure,
    etas: &[f64],
    times: &[f64],
) -> Result<Vec<ConvergenceRow>> {
    if base.kappa.is_zero() {
        return Err(Error::invalid("kappa", "the limit reference requires kappa > 0"));
    }
    if etas.is_empty() || etas.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("etas", "need at least one positive eta"));
    }
    if etas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("etas", "must be strictly decreasing"));
    }
    if times.is_empty() {
        return Err(Error::invalid("times", "need at least one time"));
    }
    let t_final = times.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let modes: Vec<NoiseMode> = std::iter::once(NoiseMode::VanishingLimit)
        .chain(etas.iter().map(|&e| NoiseMode::Positive(e)))
        .collect();
    let runs: Vec<Trajectory> = modes
        .par_iter()
        .map(|&noise| {
            let config = base.with_noise(noise)?;
            run_until(&config, model, init, t_final, times)
        })
        .collect::<Result<_>>()?;
    let (reference, perturbed) = runs.split_first().expect("reference run present");

    let mut rows = Vec::with_capacity(etas.len() * times.len());
    for &t in times {
        let at = |traj: &Trajectory| traj.at(t).map(|s| s.measure.clone()).expect("recorded time");
        let limit = at(reference);
        let mut previous: Option<(f64, f64)> = None;
        for (&eta, traj) in etas.iter().zip(perturbed) {
            let error = max_pdf_distance(&at(traj), &limit)?;
            let rate = previous.map(|(e_prev, err_prev)| (err_prev / error).ln() / (e_prev / eta).ln());
            rows.push(ConvergenceRow { eta, time: t, error, rate });
            previous = Some((eta, error));
        }
    }
    Ok(rows)
}
