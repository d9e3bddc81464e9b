//! Probability measures on the uniform grid of `[0, 1]`.
//!
//! A [`GridMeasure`] stores the mass of each of the `N` cells
//! `[(i−1)/N, i/N)` (the last cell closed). Its density is piecewise
//! constant, `N · mass_i` on cell `i`, and every integral against it is
//! taken with the midpoint rule.

use crate::error::{Error, Result};

/// Tolerance on the total mass accepted at construction.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Uniform partition of `[0, 1]` into `n_cells ≥ 2` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n_cells: usize,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::invalid("grid.n", format!("need at least 2 cells, got {n_cells}")));
        }
        Ok(Grid { n_cells })
    }

    pub fn n_cells(self) -> usize {
        self.n_cells
    }

    pub fn cell_width(self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Midpoint of the zero-based cell `i`, `(i + 1/2) / N`.
    #[inline]
    pub fn midpoint(self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_cells as f64
    }

    pub fn midpoints(self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.midpoint(i)).collect()
    }

    /// Zero-based index of the cell containing `x ∈ [0, 1]`; `x = 1`
    /// belongs to the last cell.
    pub fn cell_of(self, x: f64) -> Option<usize> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        Some(((x * self.n_cells as f64) as usize).min(self.n_cells - 1))
    }

    pub(crate) fn ensure_same(self, other: Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: self.n_cells, right: other.n_cells })
        }
    }
}

/// Cell masses of a probability measure on a [`Grid`].
///
/// Immutable once built: every entry is nonnegative and the entries sum to
/// one within [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    grid: Grid,
    mass: Vec<f64>,
}

impl GridMeasure {
    pub fn uniform(grid: Grid) -> Self {
        let n = grid.n_cells();
        GridMeasure { grid, mass: vec![1.0 / n as f64; n] }
    }

    /// All mass in the zero-based cell `cell`.
    pub fn point_mass(grid: Grid, cell: usize) -> Result<Self> {
        if cell >= grid.n_cells() {
            return Err(Error::invalid("cell", format!("{cell} is out of range")));
        }
        let mut mass = vec![0.0; grid.n_cells()];
        mass[cell] = 1.0;
        Ok(GridMeasure { grid, mass })
    }

    /// Normalizes nonnegative weights by their sum.
    pub fn from_masses(grid: Grid, raw: Vec<f64>) -> Result<Self> {
        grid.ensure_same(Grid { n_cells: raw.len() })?;
        if raw.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::DegenerateMasses);
        }
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateMasses);
        }
        let mass = raw.into_iter().map(|m| m / total).collect();
        Ok(GridMeasure { grid, mass })
    }

    /// Accepts masses that already lie on the simplex, without rescaling.
    pub fn from_probabilities(grid: Grid, mass: Vec<f64>) -> Result<Self> {
        grid.ensure_same(Grid { n_cells: mass.len() })?;
        if mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::DegenerateMasses);
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid("mass", format!("total mass {total} is not 1")));
        }
        Ok(GridMeasure { grid, mass })
    }

    /// Wraps masses produced by a simplex-preserving update. The solver
    /// observes the invariant rather than enforcing it, so no check here.
    pub(crate) fn from_raw_parts(grid: Grid, mass: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n_cells(), mass.len());
        GridMeasure { grid, mass }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.mass
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Piecewise-constant density `N · mass_i`.
    pub fn pdf_values(&self) -> Vec<f64> {
        let n = self.grid.n_cells() as f64;
        self.mass.iter().map(|m| n * m).collect()
    }

    /// Inverse of [`pdf_values`](Self::pdf_values).
    pub fn from_pdf_values(grid: Grid, pdf: &[f64]) -> Result<Self> {
        let n = grid.n_cells() as f64;
        Self::from_probabilities(grid, pdf.iter().map(|p| p / n).collect())
    }

    /// Midpoint-rule mean and population standard deviation.
    pub fn mean_and_std(&self) -> (f64, f64) {
        let (mut m1, mut m2) = (0.0, 0.0);
        for (i, &w) in self.mass.iter().enumerate() {
            let x = self.grid.midpoint(i);
            m1 += x * w;
            m2 += x * x * w;
        }
        (m1, (m2 - m1 * m1).max(0.0).sqrt())
    }

    /// Splits every cell into `factor` equal sub-cells, keeping the density.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("factor", "refinement factor must be positive"));
        }
        let grid = Grid::new(self.grid.n_cells() * factor)?;
        let share = 1.0 / factor as f64;
        let mass = self
            .mass
            .iter()
            .flat_map(|&m| std::iter::repeat_n(m * share, factor))
            .collect();
        Ok(GridMeasure { grid, mass })
    }
}

/// `Σ_i |μ_i − ν_i|`, the variational norm of `μ − ν` for measures with
/// piecewise-constant densities on a shared grid.
///
/// The supremum over test functions `|g| ≤ 1` is attained by the sign
/// pattern of the cell differences, so the sum is exact.
pub fn variational_distance(mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    mu.grid.ensure_same(nu.grid)?;
    Ok(mu.mass.iter().zip(&nu.mass).map(|(a, b)| (a - b).abs()).sum())
}

/// Variational distance between measures on different grids, computed
/// exactly on their least-common-multiple refinement.
pub fn variational_distance_across(mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    let (n, m) = (mu.grid.n_cells(), nu.grid.n_cells());
    let lcm = n / gcd(n, m) * m;
    variational_distance(&mu.refine(lcm / n)?, &nu.refine(lcm / m)?)
}

/// `max_i |pdf_i(μ) − pdf_i(ν)|` on a shared grid.
pub fn max_pdf_distance(mu: &GridMeasure, nu: &GridMeasure) -> Result<f64> {
    mu.grid.ensure_same(nu.grid)?;
    let n = mu.grid.n_cells() as f64;
    Ok(mu
        .mass
        .iter()
        .zip(&nu.mass)
        .map(|(a, b)| n * (a - b).abs())
        .fold(0.0, f64::max))
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
