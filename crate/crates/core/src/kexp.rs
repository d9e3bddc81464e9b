//! The κ-exponential function and its companions.
//!
//! For `κ ∈ (0, 1]` the κ-exponential is
//!
//! ```text
//! e_κ(z) = (κz + √(κ²z² + 1))^(1/κ)
//! ```
//!
//! and `e_0 = exp`. Everything here is evaluated through its logarithm,
//! `ln e_κ(z) = asinh(κz) / κ`, which never overflows and has no
//! cancellation for negative `z`. The softmax code in [`crate::dynamics`]
//! only ever consumes the logarithm.

use crate::error::{Error, Result};

/// Shape parameter of the κ-exponential, restricted to `[0, 1]`.
///
/// `κ = 0` is the classical exponential; larger `κ` gives a heavier,
/// polynomial tail `e_κ(z) ~ (2κz)^(1/κ)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Kappa(f64);

impl Kappa {
    pub const ZERO: Kappa = Kappa(0.0);
    pub const ONE: Kappa = Kappa(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid("kappa", format!("{value} is outside [0, 1]")));
        }
        Ok(Kappa(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `ln e_κ(z)` without input validation; the hot path of the solver.
    #[inline]
    pub(crate) fn ln_exp(self, z: f64) -> f64 {
        if self.0 == 0.0 {
            z
        } else {
            // f64::asinh is odd-symmetric and uses hypot internally, so
            // large |κz| neither overflows nor cancels.
            (self.0 * z).asinh() / self.0
        }
    }
}

impl std::fmt::Display for Kappa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn check_finite(name: &'static str, z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{z} is not finite")))
    }
}

/// `ln e_κ(z)`. Strictly increasing in `z`, zero at `z = 0`.
pub fn log_e_kappa(kappa: Kappa, z: f64) -> Result<f64> {
    check_finite("z", z)?;
    Ok(kappa.ln_exp(z))
}

/// `e_κ(z)`. Overflows to `+∞` for large arguments at small `κ`; use
/// [`log_e_kappa`] when the value feeds a normalization.
pub fn e_kappa(kappa: Kappa, z: f64) -> Result<f64> {
    Ok(log_e_kappa(kappa, z)?.exp())
}

/// Derivative `e_κ(z) / √(κ²z² + 1)`.
pub fn d_e_kappa(kappa: Kappa, z: f64) -> Result<f64> {
    let e = e_kappa(kappa, z)?;
    Ok(e / (kappa.value() * z).hypot(1.0))
}

/// `|(η/(2κ))^(1/κ) e_κ(u/η) − u^(1/κ)|`.
///
/// This is the gap between the rescaled κ-exponential and the power law it
/// approaches as `η → 0`; it is `O(η)` uniformly for `u` bounded away from
/// zero. Requires `κ > 0`, `η > 0`, `u > 0`.
pub fn scaled_limit_residual(kappa: Kappa, eta: f64, u: f64) -> Result<f64> {
    if kappa.is_zero() {
        return Err(Error::invalid("kappa", "the η-scaling is undefined at κ = 0"));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::invalid("eta", format!("{eta} must be positive")));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::invalid("u", format!("{u} must be positive")));
    }
    let k = kappa.value();
    let log_scaled = ((eta / (2.0 * k)).ln() + kappa.ln_exp(u / eta) * k) / k;
    Ok((log_scaled.exp() - u.powf(1.0 / k)).abs())
}
