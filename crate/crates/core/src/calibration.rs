//! Moment-matching calibration of the competition model.
//!
//! The empirical target is the pooled, per-year-normalized catch sample.
//! The model side is the stationary state of the dynamic started from the
//! uniform measure. The objective is the sum of squared relative errors of
//! mean and standard deviation, minimized by a deterministic multi-level
//! grid search.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{run_to_stationary, DynamicConfig, NoiseMode, Termination};
use crate::error::{Error, Result};
use crate::kexp::Kappa;
use crate::measure::{Grid, GridMeasure};
use crate::utility::{CompetitionParams, CompetitionUtility};

/// Pooled normalized efforts, all in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    per_year_max: BTreeMap<String, u64>,
}

impl EmpiricalSample {
    pub fn new(values: Vec<f64>, per_year_max: BTreeMap<String, u64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid("values", format!("{v} is outside [0, 1]")));
        }
        Ok(EmpiricalSample { values, per_year_max })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn per_year_max(&self) -> &BTreeMap<String, u64> {
        &self.per_year_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Population mean and standard deviation (divisor `M`, not `M − 1`).
pub fn empirical_stats(sample: &EmpiricalSample) -> Result<(f64, f64)> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let m = sample.len() as f64;
    let mean = sample.values.iter().sum::<f64>() / m;
    let var = sample.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
    Ok((mean, var.sqrt()))
}

/// Histogram density on `bins` uniform cells of `[0, 1]`; the value `1.0`
/// falls in the last bin.
pub fn empirical_pdf(sample: &EmpiricalSample, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::invalid("bins", format!("need at least 2 bins, got {bins}")));
    }
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0usize; bins];
    for &v in &sample.values {
        counts[((v * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let scale = bins as f64 / sample.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 * scale).collect())
}

/// Target moments of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentTarget {
    pub mean: f64,
    pub std: f64,
}

/// Discretization and stopping settings shared by every fit evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub grid: Grid,
    pub dt: f64,
    pub delta: f64,
    pub max_steps: usize,
}

impl SolverSettings {
    pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

    pub fn new(grid: Grid) -> Self {
        SolverSettings {
            grid,
            dt: DynamicConfig::DEFAULT_DT,
            delta: DynamicConfig::DEFAULT_DELTA,
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }
}

/// Outcome of one objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitEvaluation {
    pub objective: f64,
    pub mean: f64,
    pub std: f64,
    pub steps: usize,
}

/// Runs the stationary solver from the uniform measure and scores its
/// moments: `((m − m̂)/m̂)² + ((s − ŝ)/ŝ)²`.
pub fn fit_objective(
    params: &CompetitionParams,
    kappa: Kappa,
    noise: NoiseMode,
    target: MomentTarget,
    solver: &SolverSettings,
) -> Result<FitEvaluation> {
    let config = DynamicConfig::new(solver.grid, kappa, noise)?
        .with_dt(solver.dt)?
        .with_delta(solver.delta)?;
    let model = CompetitionUtility::new(*params, solver.grid)?;
    let traj = run_to_stationary(&config, &model, &GridMeasure::uniform(solver.grid), solver.max_steps)?;
    if traj.termination == Termination::ReachedFinalTime {
        return Err(Error::NotStationary { max_steps: solver.max_steps });
    }
    let (mean, std) = traj.final_measure().mean_and_std();
    let objective = ((mean - target.mean) / target.mean).powi(2) + ((std - target.std) / target.std).powi(2);
    Ok(FitEvaluation { objective, mean, std, steps: traj.steps })
}

/// A calibratable quantity; the declaration order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitParameter {
    A,
    B,
    Eta,
    Kappa,
}

impl FitParameter {
    pub const ALL: [FitParameter; 4] = [FitParameter::A, FitParameter::B, FitParameter::Eta, FitParameter::Kappa];

    pub fn name(self) -> &'static str {
        match self {
            FitParameter::A => "a",
            FitParameter::B => "b",
            FitParameter::Eta => "eta",
            FitParameter::Kappa => "kappa",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Values of the four calibrated quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitPoint {
    pub a: f64,
    pub b: f64,
    pub eta: f64,
    pub kappa: f64,
}

impl FitPoint {
    /// Calibrated values `a = 0.27`, `b = 0.23`, `η = 0.01`, `κ = 1`.
    pub const FITTED: FitPoint = FitPoint { a: 0.27, b: 0.23, eta: 0.01, kappa: 1.0 };

    pub fn get(&self, p: FitParameter) -> f64 {
        match p {
            FitParameter::A => self.a,
            FitParameter::B => self.b,
            FitParameter::Eta => self.eta,
            FitParameter::Kappa => self.kappa,
        }
    }

    pub fn set(&mut self, p: FitParameter, v: f64) {
        match p {
            FitParameter::A => self.a = v,
            FitParameter::B => self.b = v,
            FitParameter::Eta => self.eta = v,
            FitParameter::Kappa => self.kappa = v,
        }
    }

    fn key(&self) -> [u64; 4] {
        [self.a.to_bits(), self.b.to_bits(), self.eta.to_bits(), self.kappa.to_bits()]
    }

    fn lex_less(&self, other: &FitPoint) -> bool {
        let (x, y) = ([self.a, self.b, self.eta, self.kappa], [other.a, other.b, other.eta, other.kappa]);
        x.iter().zip(&y).find(|(p, q)| p != q).is_some_and(|(p, q)| p < q)
    }
}

/// What to calibrate and how.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    /// Values used for every parameter that is not free.
    pub start: FitPoint,
    /// `c`, `d`, `α` and `ε`; `a` and `b` here are overridden by the point.
    pub utility: CompetitionParams,
    pub free: BTreeMap<FitParameter, (f64, f64)>,
    /// Grid points per free axis and level, endpoints included.
    pub points_per_axis: usize,
    /// Number of zoom-in levels after the coarse grid.
    pub refinements: usize,
    /// Each refinement shrinks every axis by this factor around the best point.
    pub shrink: f64,
    pub solver: SolverSettings,
}

impl FitSpec {
    pub fn new(solver: SolverSettings) -> Self {
        FitSpec {
            start: FitPoint::FITTED,
            utility: CompetitionParams::FITTED,
            free: BTreeMap::new(),
            points_per_axis: 5,
            refinements: 2,
            shrink: 0.4,
            solver,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (&p, &(lo, hi)) in &self.free {
            let name = p.name();
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                out.push(format!("fit.free.{name}: bounds [{lo}, {hi}] must have positive length"));
                continue;
            }
            let ok = match p {
                FitParameter::A | FitParameter::B => lo >= 0.0,
                FitParameter::Eta => lo > 0.0,
                FitParameter::Kappa => lo >= 0.0 && hi <= 1.0,
            };
            if !ok {
                out.push(format!("fit.free.{name}: bounds [{lo}, {hi}] leave the admissible range"));
            }
        }
        if self.points_per_axis < 2 {
            out.push(format!("fit.points: {} must be at least 2", self.points_per_axis));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            out.push(format!("fit.shrink: {} must lie in (0, 1)", self.shrink));
        }
        out
    }

    fn evaluate(&self, point: &FitPoint, target: MomentTarget) -> Result<FitEvaluation> {
        let params = CompetitionParams { a: point.a, b: point.b, ..self.utility };
        let kappa = Kappa::new(point.kappa)?;
        fit_objective(&params, kappa, NoiseMode::Positive(point.eta), target, &self.solver)
    }
}

/// One logged evaluation; `error` is set when the solver failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoggedEvaluation {
    pub level: usize,
    pub point: FitPoint,
    pub evaluation: Option<FitEvaluation>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub best: FitPoint,
    pub evaluation: FitEvaluation,
    /// Best objective seen after each level; non-increasing.
    pub trace: Vec<f64>,
    pub log: Vec<LoggedEvaluation>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

/// Multi-level coordinate grid search.
///
/// Level 0 evaluates the full tensor grid over the declared bounds; each of
/// the `refinements` further levels shrinks every axis around the best point
/// (clipped to the declared bounds) and evaluates a fresh grid. Points
/// already evaluated are not re-run. Candidates are evaluated in parallel
/// and merged in parameter order, so ties go to the lexicographically
/// smallest `(a, b, η, κ)`.
pub fn fit_search(spec: &FitSpec, target: MomentTarget) -> Result<FitResult> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    let axes: Vec<FitParameter> = spec.free.keys().copied().collect();
    let mut bounds: Vec<(f64, f64)> = spec.free.values().copied().collect();
    let mut seen = HashSet::new();
    let mut log = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<(FitPoint, FitEvaluation)> = None;
    let levels = if axes.is_empty() { 1 } else { spec.refinements + 1 };

    for level in 0..levels {
        let mut candidates = vec![spec.start];
        for (&p, &(lo, hi)) in axes.iter().zip(&bounds) {
            let values = linspace(lo, hi, spec.points_per_axis);
            candidates = candidates
                .iter()
                .flat_map(|c| {
                    values.iter().map(move |&v| {
                        let mut c = *c;
                        c.set(p, v);
                        c
                    })
                })
                .collect();
        }
        candidates.retain(|c| seen.insert(c.key()));

        let outcomes: Vec<Result<FitEvaluation>> =
            candidates.par_iter().map(|c| spec.evaluate(c, target)).collect();
        for (point, outcome) in candidates.into_iter().zip(outcomes) {
            match outcome {
                Ok(eval) => {
                    let better = match &best {
                        None => true,
                        Some((bp, be)) => {
                            eval.objective < be.objective
                                || (eval.objective == be.objective && point.lex_less(bp))
                        }
                    };
                    if better {
                        best = Some((point, eval));
                    }
                    log.push(LoggedEvaluation { level, point, evaluation: Some(eval), error: None });
                }
                Err(e) => {
                    log.push(LoggedEvaluation { level, point, evaluation: None, error: Some(e.to_string()) })
                }
            }
        }
        let Some((bp, be)) = &best else {
            return Err(Error::AllEvaluationsFailed { evaluations: log.len() });
        };
        trace.push(be.objective);

        for ((&p, b), &(lo0, hi0)) in axes.iter().zip(bounds.iter_mut()).zip(spec.free.values()) {
            let half = (b.1 - b.0) * spec.shrink / 2.0;
            let center = bp.get(p);
            *b = ((center - half).max(lo0), (center + half).min(hi0));
        }
    }
    let (best, evaluation) = best.expect("at least one successful evaluation");
    Ok(FitResult { best, evaluation, trace, log })
}
