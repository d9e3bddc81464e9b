//! Utility models `U(x; μ)` evaluated at every cell midpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{variational_distance, Grid, GridMeasure};

/// A utility evaluated on the midpoints of a fixed grid.
///
/// Implementations are immutable after construction and deterministic.
pub trait UtilityModel: Sync {
    fn grid(&self) -> Grid;

    /// Writes `U(x_j; μ)` for every cell `j` into `out`. Both slices have
    /// `grid().n_cells()` entries; callers guarantee the lengths.
    fn evaluate_into(&self, mass: &[f64], out: &mut [f64]);

    fn evaluate(&self, mu: &GridMeasure) -> Result<Vec<f64>> {
        self.grid().ensure_same(mu.grid())?;
        let mut out = vec![0.0; mu.grid().n_cells()];
        self.evaluate_into(mu.masses(), &mut out);
        Ok(out)
    }
}

/// `U(x; μ) = ∫ f(x, y) μ(dy)` with `f` sampled on midpoint pairs.
#[derive(Debug, Clone)]
pub struct BilinearKernel {
    grid: Grid,
    // Row-major: entry [j * n + k] = f(x_j, x_k).
    matrix: Vec<f64>,
}

impl BilinearKernel {
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let n = grid.n_cells();
        let mut matrix = Vec::with_capacity(n * n);
        for j in 0..n {
            let x = grid.midpoint(j);
            for k in 0..n {
                let v = f(x, grid.midpoint(k));
                if !v.is_finite() {
                    return Err(Error::invalid("kernel", format!("f({x}, {}) = {v}", grid.midpoint(k))));
                }
                matrix.push(v);
            }
        }
        Ok(BilinearKernel { grid, matrix })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::from_fn(grid, |_, _| value)
    }

    pub fn entry(&self, j: usize, k: usize) -> f64 {
        self.matrix[j * self.grid.n_cells() + k]
    }

    /// Largest `|f|` over the sampled midpoint pairs.
    pub fn sup_norm(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl UtilityModel for BilinearKernel {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn evaluate_into(&self, mass: &[f64], out: &mut [f64]) {
        let n = self.grid.n_cells();
        for (row, u) in self.matrix.chunks_exact(n).zip(out.iter_mut()) {
            *u = dot(row, mass);
        }
    }
}

/// Matrix-vector products are the solver's inner loop; four independent
/// accumulators let the compiler vectorize without reassociating.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (a4, a_rest) = a.split_at(a.len() / 4 * 4);
    let (b4, b_rest) = b.split_at(a4.len());
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = a_rest.iter().zip(b_rest).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `max{0, min{1, (y − x + ε)/ε}}`, the continuous stand-in for `1{y > x}`.
#[inline]
fn ramp(y: f64, x: f64, epsilon: f64) -> f64 {
    ((y - x + epsilon) / epsilon).clamp(0.0, 1.0)
}

/// Regularized upper-tail mass `∫ ramp(y; x, ε) μ(dy)` under the midpoint
/// rule.
pub fn ramp_tail_mass(mu: &GridMeasure, x: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must be positive")));
    }
    let grid = mu.grid();
    Ok(mu
        .masses()
        .iter()
        .enumerate()
        .map(|(k, &m)| ramp(grid.midpoint(k), x, epsilon) * m)
        .sum())
}

/// Parameters of the fishing-competition utility
///
/// ```text
/// U(x; μ) = ∫ (−a x² + b |x − y|^c) μ(dy) + d · max{α − T_ε(x; μ), 0}
/// ```
///
/// where `T_ε` is the ramp-regularized tail mass above `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompetitionParams {
    /// Quadratic effort cost.
    pub a: f64,
    /// Weight of the difference reward.
    pub b: f64,
    /// Exponent of the difference reward.
    pub c: f64,
    /// Award weight.
    pub d: f64,
    /// Awarded upper-tier fraction.
    pub alpha: f64,
    /// Ramp width; `None` means one cell width.
    pub epsilon: Option<f64>,
}

impl CompetitionParams {
    /// The calibrated Toami values: `a = 0.27`, `b = 0.23`, `c = d = 1`,
    /// `α = 0.2`, `ε = 1/N`.
    pub const FITTED: CompetitionParams =
        CompetitionParams { a: 0.27, b: 0.23, c: 1.0, d: 1.0, alpha: 0.2, epsilon: None };

    pub fn epsilon_for(&self, grid: Grid) -> f64 {
        self.epsilon.unwrap_or_else(|| grid.cell_width())
    }

    /// Field-by-field validation; returns every violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("utility.{name}: {v} must be a finite nonnegative number"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(format!("utility.alpha: {} must lie in (0, 1)", self.alpha));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                out.push(format!("utility.epsilon: {e} must be positive"));
            }
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
}

/// Competition utility with a cached kernel and ramp band.
#[derive(Debug, Clone)]
pub struct CompetitionUtility {
    params: CompetitionParams,
    epsilon: f64,
    kernel: BilinearKernel,
    // For row j: every cell k >= full_from[j] has ramp weight exactly 1,
    // and band[j] lists the cells below it with a weight strictly in (0, 1).
    full_from: Vec<usize>,
    band: Vec<Vec<(usize, f64)>>,
}

impl CompetitionUtility {
    pub fn new(params: CompetitionParams, grid: Grid) -> Result<Self> {
        params.validate()?;
        let CompetitionParams { a, b, c, .. } = params;
        let kernel = BilinearKernel::from_fn(grid, |x, y| {
            // powf(0, 0) is 1, which is the convention we want for |0|^0.
            -a * x * x + b * (x - y).abs().powf(c)
        })?;
        let epsilon = params.epsilon_for(grid);
        let n = grid.n_cells();
        let mut full_from = Vec::with_capacity(n);
        let mut band = Vec::with_capacity(n);
        for j in 0..n {
            let x = grid.midpoint(j);
            // The ramp is nondecreasing in the cell index.
            let first_full = (0..n).find(|&k| ramp(grid.midpoint(k), x, epsilon) >= 1.0).unwrap_or(n);
            let partial = (0..first_full)
                .filter_map(|k| {
                    let w = ramp(grid.midpoint(k), x, epsilon);
                    (w > 0.0).then_some((k, w))
                })
                .collect();
            full_from.push(first_full);
            band.push(partial);
        }
        Ok(CompetitionUtility { params, epsilon, kernel, full_from, band })
    }

    pub fn params(&self) -> &CompetitionParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The interaction part `−a x² + b |x − y|^c` as a standalone kernel.
    pub fn interaction_kernel(&self) -> &BilinearKernel {
        &self.kernel
    }
}

impl UtilityModel for CompetitionUtility {
    fn grid(&self) -> Grid {
        self.kernel.grid
    }

    fn evaluate_into(&self, mass: &[f64], out: &mut [f64]) {
        self.kernel.evaluate_into(mass, out);
        let CompetitionParams { d, alpha, .. } = self.params;
        if d == 0.0 {
            return;
        }
        let n = mass.len();
        let mut suffix = vec![0.0; n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] + mass[k];
        }
        for (j, u) in out.iter_mut().enumerate() {
            let tail = suffix[self.full_from[j]]
                + self.band[j].iter().map(|&(k, w)| w * mass[k]).sum::<f64>();
            *u += d * (alpha - tail).max(0.0);
        }
    }
}

/// `max_j |U_j(μ) − U_j(ν)| / ‖μ − ν‖`, an empirical Lipschitz ratio.
pub fn lipschitz_ratio_sample(
    model: &dyn UtilityModel,
    mu: &GridMeasure,
    nu: &GridMeasure,
) -> Result<f64> {
    let dist = variational_distance(mu, nu)?;
    if dist == 0.0 {
        return Err(Error::invalid("nu", "the two measures coincide"));
    }
    let (u, v) = (model.evaluate(mu)?, model.evaluate(nu)?);
    let sup = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(sup / dist)
}
