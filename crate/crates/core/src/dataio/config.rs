//! JSON run configuration.
//!
//! ```json
//! {
//!   "grid": { "n": 500 },
//!   "dynamic": { "kappa": 1.0, "eta": 0.01, "dt": 0.001, "delta": 1e-11, "max_steps": 2000000 },
//!   "utility": { "a": 0.27, "b": 0.23, "c": 1, "d": 1, "alpha": 0.2 },
//!   "init": "uniform",
//!   "record_times": [1, 10],
//!   "fit": { "free": { "a": [0.1, 0.5] }, "points": 5, "refinements": 2, "shrink": 0.4, "bins": 20 }
//! }
//! ```
//!
//! `dynamic.kappa`, `dynamic.eta` (a number or `"limit"`), `utility.a` and
//! `utility.b` are required; everything else has a default. Validation
//! collects every problem before reporting.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::calibration::{FitParameter, FitPoint, FitSpec, SolverSettings};
use crate::dynamics::{DynamicConfig, NoiseMode};
use crate::error::{Error, Result};
use crate::kexp::Kappa;
use crate::measure::{Grid, GridMeasure};
use crate::utility::{CompetitionParams, CompetitionUtility};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub free: BTreeMap<FitParameter, (f64, f64)>,
    pub points: usize,
    pub refinements: usize,
    pub shrink: f64,
    /// Histogram bins for the empirical PDF.
    pub bins: usize,
}

/// A fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dynamic: DynamicConfig,
    pub max_steps: usize,
    pub utility: CompetitionParams,
    pub init: InitialCondition,
    pub record_times: Vec<f64>,
    pub fit: Option<FitSettings>,
}

struct Reader {
    errors: Vec<String>,
}

impl Reader {
    fn section<'v>(&mut self, root: &'v Map<String, Value>, name: &str, keys: &[&str]) -> Option<&'v Map<String, Value>> {
        match root.get(name) {
            None => None,
            Some(Value::Object(m)) => {
                for k in m.keys().filter(|k| !keys.contains(&k.as_str())) {
                    self.errors.push(format!("{name}.{k}: unknown key"));
                }
                Some(m)
            }
            Some(_) => {
                self.errors.push(format!("{name}: expected an object"));
                None
            }
        }
    }

    fn number(&mut self, sec: Option<&Map<String, Value>>, path: (&str, &str), default: Option<f64>) -> f64 {
        let full = format!("{}.{}", path.0, path.1);
        match sec.and_then(|m| m.get(path.1)) {
            Some(v) => v.as_f64().unwrap_or_else(|| {
                self.errors.push(format!("{full}: expected a number, found {v}"));
                f64::NAN
            }),
            None => default.unwrap_or_else(|| {
                self.errors.push(format!("{full}: missing required field"));
                f64::NAN
            }),
        }
    }

    fn count(&mut self, sec: Option<&Map<String, Value>>, path: (&str, &str), default: usize) -> usize {
        match sec.and_then(|m| m.get(path.1)) {
            Some(v) => v.as_u64().map(|n| n as usize).unwrap_or_else(|| {
                self.errors.push(format!("{}.{}: expected a nonnegative integer, found {v}", path.0, path.1));
                default
            }),
            None => default,
        }
    }
}

impl RunConfig {
    pub const DEFAULT_RECORD_TIMES: [f64; 2] = [1.0, 10.0];

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("not valid JSON: {e}")]))?;
        let Value::Object(root) = root else {
            return Err(Error::Config(vec!["top level must be an object".into()]));
        };
        let mut r = Reader { errors: Vec::new() };
        for k in root.keys() {
            if !["grid", "dynamic", "utility", "init", "record_times", "fit"].contains(&k.as_str()) {
                r.errors.push(format!("{k}: unknown key"));
            }
        }

        let grid_sec = r.section(&root, "grid", &["n"]);
        let n = r.count(grid_sec, ("grid", "n"), DynamicConfig::DEFAULT_CELLS);
        let grid = Grid::new(n).map_err(|e| r.errors.push(e.to_string())).ok();

        let dyn_sec = r.section(&root, "dynamic", &["kappa", "eta", "dt", "delta", "max_steps"]);
        let kappa_raw = r.number(dyn_sec, ("dynamic", "kappa"), None);
        let kappa = if kappa_raw.is_nan() {
            None
        } else {
            Kappa::new(kappa_raw).map_err(|_| r.errors.push(format!("dynamic.kappa: {kappa_raw} is outside [0, 1]"))).ok()
        };
        let noise = match dyn_sec.and_then(|m| m.get("eta")) {
            Some(Value::String(s)) if s == "limit" => Some(NoiseMode::VanishingLimit),
            Some(v) if v.is_number() => Some(NoiseMode::Positive(v.as_f64().unwrap_or(f64::NAN))),
            Some(v) => {
                r.errors.push(format!("dynamic.eta: expected a number or \"limit\", found {v}"));
                None
            }
            None => {
                r.errors.push("dynamic.eta: missing required field".into());
                None
            }
        };
        let dt = r.number(dyn_sec, ("dynamic", "dt"), Some(DynamicConfig::DEFAULT_DT));
        let delta = r.number(dyn_sec, ("dynamic", "delta"), Some(DynamicConfig::DEFAULT_DELTA));
        let max_steps = r.count(dyn_sec, ("dynamic", "max_steps"), SolverSettings::DEFAULT_MAX_STEPS);
        if max_steps == 0 {
            r.errors.push("dynamic.max_steps: must be at least 1".into());
        }

        let util_sec = r.section(&root, "utility", &["a", "b", "c", "d", "alpha", "epsilon"]);
        let f = CompetitionParams::FITTED;
        let utility = CompetitionParams {
            a: r.number(util_sec, ("utility", "a"), None),
            b: r.number(util_sec, ("utility", "b"), None),
            c: r.number(util_sec, ("utility", "c"), Some(f.c)),
            d: r.number(util_sec, ("utility", "d"), Some(f.d)),
            alpha: r.number(util_sec, ("utility", "alpha"), Some(f.alpha)),
            epsilon: util_sec
                .and_then(|m| m.get("epsilon"))
                .map(|_| r.number(util_sec, ("utility", "epsilon"), None)),
        };
        r.errors.extend(utility.violations().into_iter().filter(|v| !v.contains("NaN")));

        match root.get("init") {
            None => {}
            Some(Value::String(s)) if s == "uniform" => {}
            Some(v) => r.errors.push(format!("init: only \"uniform\" is supported, found {v}")),
        }

        let record_times = match root.get("record_times") {
            None => Self::DEFAULT_RECORD_TIMES.to_vec(),
            Some(Value::Array(items)) => {
                let times: Vec<f64> = items.iter().filter_map(Value::as_f64).collect();
                if times.len() != items.len() || times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
                    r.errors.push("record_times: expected a list of nonnegative numbers".into());
                } else if !times.iter().any(|&t| t > 0.0) {
                    r.errors.push("record_times: need at least one positive time".into());
                }
                times
            }
            Some(v) => {
                r.errors.push(format!("record_times: expected a list, found {v}"));
                Vec::new()
            }
        };

        let fit = r.section(&root, "fit", &["free", "points", "refinements", "shrink", "bins"]).map(|sec| {
            let sec = Some(sec);
            let mut free = BTreeMap::new();
            match sec.and_then(|m| m.get("free")) {
                None => {}
                Some(Value::Object(m)) => {
                    for (k, v) in m {
                        let Some(p) = FitParameter::from_name(k) else {
                            r.errors.push(format!("fit.free.{k}: not a fittable parameter (a, b, eta, kappa)"));
                            continue;
                        };
                        match v.as_array().map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<_>>()) {
                            Some(b) if b.len() == 2 => {
                                free.insert(p, (b[0], b[1]));
                            }
                            _ => r.errors.push(format!("fit.free.{k}: expected [lower, upper]")),
                        }
                    }
                }
                Some(_) => r.errors.push("fit.free: expected an object".into()),
            }
            FitSettings {
                free,
                points: r.count(sec, ("fit", "points"), 5),
                refinements: r.count(sec, ("fit", "refinements"), 2),
                shrink: r.number(sec, ("fit", "shrink"), Some(0.4)),
                bins: r.count(sec, ("fit", "bins"), 20),
            }
        });

        let dynamic = match (grid, kappa, noise) {
            (Some(grid), Some(kappa), Some(noise)) => {
                let d = DynamicConfig { grid, kappa, noise, dt, delta };
                r.errors.extend(d.violations());
                Some(d)
            }
            _ => None,
        };
        let mut config = dynamic.map(|dynamic| RunConfig {
            dynamic,
            max_steps,
            utility,
            init: InitialCondition::Uniform,
            record_times,
            fit,
        });
        if let Some(c) = &config {
            if let Some(fit) = &c.fit {
                if c.dynamic.noise == NoiseMode::VanishingLimit {
                    r.errors.push("fit: calibration needs a numeric dynamic.eta".into());
                }
                if fit.bins < 2 {
                    r.errors.push(format!("fit.bins: {} must be at least 2", fit.bins));
                }
                if let Some(spec) = c.fit_spec() {
                    r.errors.extend(spec.violations());
                }
            }
        }
        if r.errors.is_empty() {
            Ok(config.take().expect("complete config when no errors"))
        } else {
            Err(Error::Config(r.errors))
        }
    }

    pub fn grid(&self) -> Grid {
        self.dynamic.grid
    }

    pub fn model(&self) -> Result<CompetitionUtility> {
        CompetitionUtility::new(self.utility, self.grid())
    }

    pub fn initial_measure(&self) -> GridMeasure {
        match self.init {
            InitialCondition::Uniform => GridMeasure::uniform(self.grid()),
        }
    }

    pub fn t_final(&self) -> f64 {
        self.record_times.iter().cloned().fold(0.0, f64::max)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings { grid: self.grid(), dt: self.dynamic.dt, delta: self.dynamic.delta, max_steps: self.max_steps }
    }

    /// The calibration problem described by the `fit` section, starting
    /// from this config's `a`, `b`, `η`, `κ`.
    pub fn fit_spec(&self) -> Option<FitSpec> {
        let fit = self.fit.as_ref()?;
        let eta = self.dynamic.noise.eta()?;
        Some(FitSpec {
            start: FitPoint { a: self.utility.a, b: self.utility.b, eta, kappa: self.dynamic.kappa.value() },
            utility: self.utility,
            free: fit.free.clone(),
            points_per_axis: fit.points,
            refinements: fit.refinements,
            shrink: fit.shrink,
            solver: self.solver_settings(),
        })
    }

    /// The resolved configuration, defaults filled in, in the input schema.
    pub fn to_json(&self) -> Value {
        let eta = match self.dynamic.noise {
            NoiseMode::Positive(e) => json!(e),
            NoiseMode::VanishingLimit => json!("limit"),
        };
        let u = &self.utility;
        let mut utility = json!({ "a": u.a, "b": u.b, "c": u.c, "d": u.d, "alpha": u.alpha });
        if let Some(e) = u.epsilon {
            utility["epsilon"] = json!(e);
        }
        let mut out = json!({
            "grid": { "n": self.grid().n_cells() },
            "dynamic": {
                "kappa": self.dynamic.kappa.value(),
                "eta": eta,
                "dt": self.dynamic.dt,
                "delta": self.dynamic.delta,
                "max_steps": self.max_steps,
            },
            "utility": utility,
            "init": "uniform",
            "record_times": self.record_times,
        });
        if let Some(fit) = &self.fit {
            let free: Map<String, Value> =
                fit.free.iter().map(|(p, (lo, hi))| (p.name().to_string(), json!([lo, hi]))).collect();
            out["fit"] = json!({
                "free": free,
                "points": fit.points,
                "refinements": fit.refinements,
                "shrink": fit.shrink,
                "bins": fit.bins,
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FITTED: &str = r#"{
        "dynamic": { "kappa": 1.0, "eta": 0.01 },
        "utility": { "a": 0.27, "b": 0.23 }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json_str(FITTED).unwrap();
        assert_eq!(c.grid().n_cells(), 500);
        assert_eq!(c.dynamic.dt, 1e-3);
        assert_eq!(c.dynamic.delta, 1e-11);
        assert_eq!(c.utility, CompetitionParams::FITTED);
        assert_eq!(c.record_times, vec![1.0, 10.0]);
        assert_eq!(c.t_final(), 10.0);
        assert!(c.fit.is_none());
    }

    #[test]
    fn resolved_json_round_trips() {
        let text = r#"{
            "grid": {"n": 40},
            "dynamic": {"kappa": 0.5, "eta": "limit", "dt": 0.01, "delta": 1e-9, "max_steps": 100},
            "utility": {"a": 0.1, "b": 0.2, "c": 2, "d": 0.5, "alpha": 0.3, "epsilon": 0.05},
            "record_times": [0.5]
        }"#;
        let c = RunConfig::from_json_str(text).unwrap();
        assert_eq!(c.dynamic.noise, NoiseMode::VanishingLimit);
        assert_eq!(RunConfig::from_json_str(&c.to_json().to_string()).unwrap(), c);

        let with_fit = text.replace(r#""limit""#, "0.02").replace(
            r#""record_times": [0.5]"#,
            r#""record_times": [0.5], "fit": {"free": {"b": [0.1, 0.3]}, "points": 3}"#,
        );
        let c = RunConfig::from_json_str(&with_fit).unwrap();
        assert_eq!(c.fit.as_ref().unwrap().points, 3);
        assert_eq!(RunConfig::from_json_str(&c.to_json().to_string()).unwrap(), c);
    }

    #[test]
    fn fit_needs_numeric_eta() {
        let text = r#"{
            "dynamic": {"kappa": 0.5, "eta": "limit"},
            "utility": {"a": 0.1, "b": 0.2},
            "fit": {"free": {"b": [0.1, 0.3]}}
        }"#;
        let err = RunConfig::from_json_str(text).unwrap_err();
        assert!(err.to_string().contains("numeric dynamic.eta"));
    }

    #[test]
    fn limit_with_kappa_zero_rejected() {
        let err = RunConfig::from_json_str(r#"{"dynamic": {"kappa": 0, "eta": "limit"}, "utility": {"a": 0, "b": 0}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("kappa > 0"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn every_problem_is_listed() {
        let text = r#"{
            "grid": {"n": 1},
            "dynamic": {"kappa": 2, "eta": "big", "dt": 5},
            "utility": {"a": -1, "c": "one", "alpha": 1.5, "zeta": 1},
            "init": "point",
            "record_times": [],
            "extra": true
        }"#;
        let Error::Config(errors) = RunConfig::from_json_str(text).unwrap_err() else { panic!() };
        for needle in [
            "grid.n",
            "dynamic.kappa",
            "dynamic.eta",
            "utility.a",
            "utility.b: missing",
            "utility.c",
            "utility.alpha",
            "utility.zeta",
            "init",
            "record_times",
            "extra",
        ] {
            assert!(errors.iter().any(|e| e.contains(needle)), "missing {needle} in {errors:#?}");
        }
    }

    #[test]
    fn fit_section_checked() {
        let text = r#"{
            "dynamic": {"kappa": 1, "eta": 0.01},
            "utility": {"a": 0.27, "b": 0.23},
            "fit": {"free": {"kappa": [0.5, 2.0], "gamma": [0, 1], "a": [0.3]}, "bins": 1}
        }"#;
        let Error::Config(errors) = RunConfig::from_json_str(text).unwrap_err() else { panic!() };
        assert!(errors.iter().any(|e| e.contains("fit.free.kappa")));
        assert!(errors.iter().any(|e| e.contains("fit.free.gamma")));
        assert!(errors.iter().any(|e| e.contains("fit.free.a")));
        assert!(errors.iter().any(|e| e.contains("fit.bins")));
    }

    #[test]
    fn bad_json() {
        assert!(matches!(RunConfig::from_json_str("{"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_json_str("[]"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::load("/no/such/config.json"), Err(Error::Io { .. })));
    }
}
