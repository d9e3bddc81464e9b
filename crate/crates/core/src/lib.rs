//! Rational logit dynamics for population decisions on `[0, 1]`.
//!
//! The logit dynamic moves a population distribution `μ` toward the softmax
//! of a utility `U(x; μ)`. This crate replaces the exponential in that
//! softmax by the κ-exponential, whose polynomial tail models heavier-tailed
//! noise, and provides:
//!
//! - [`kexp`]: stable evaluation of `e_κ`, its logarithm and derivative;
//! - [`measure`]: cell-mass measures on a uniform grid, the variational
//!   distance, PDFs and moments;
//! - [`utility`]: bilinear-kernel utilities and the fishing-competition
//!   utility with a regularized award term;
//! - [`dynamics`]: the semi-discrete dynamic, its vanishing-noise limit,
//!   explicit Euler stepping, stationarity detection and η-convergence
//!   tables;
//! - [`calibration`]: empirical moments and a grid-search fit of the
//!   stationary moments;
//! - [`dataio`]: the bundled catch dataset, run configs and CSV output;
//! - [`cli`]: the `ratlogit` command-line tool.
//!
//! ```
//! use ratlogit::prelude::*;
//!
//! let grid = Grid::new(50)?;
//! let model = CompetitionUtility::new(CompetitionParams::FITTED, grid)?;
//! let config = DynamicConfig::new(grid, Kappa::new(1.0)?, NoiseMode::Positive(0.01))?;
//! let traj = run_until(&config, &model, &GridMeasure::uniform(grid), 0.5, &[0.5])?;
//! let (mean, _std) = traj.final_measure().mean_and_std();
//! assert!(mean > 0.0 && mean < 1.0);
//! # Ok::<(), ratlogit::Error>(())
//! ```

pub mod calibration;
pub mod cli;
pub mod dataio;
pub mod dynamics;
mod error;
pub mod kexp;
pub mod measure;
pub mod utility;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::calibration::{
        empirical_pdf, empirical_stats, fit_objective, fit_search, EmpiricalSample, FitParameter, FitPoint,
        FitSpec, MomentTarget, SolverSettings,
    };
    pub use crate::dataio::{normalize, CatchDataset, RunConfig};
    pub use crate::dynamics::{
        euler_step, eta_convergence_table, limit_weights, logit_weights, rhs, run_to_stationary, run_until,
        DynamicConfig, NoiseMode, Termination, Trajectory,
    };
    pub use crate::kexp::{d_e_kappa, e_kappa, log_e_kappa, scaled_limit_residual, Kappa};
    pub use crate::measure::{variational_distance, variational_distance_across, Grid, GridMeasure};
    pub use crate::utility::{
        lipschitz_ratio_sample, ramp_tail_mass, BilinearKernel, CompetitionParams, CompetitionUtility,
        UtilityModel,
    };
    pub use crate::Error;
}

// Compile and run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kappa-exponential.md")]
    mod kappa_exponential {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/utilities.md")]
    mod utilities {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/vanishing-noise.md")]
    mod vanishing_noise {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
