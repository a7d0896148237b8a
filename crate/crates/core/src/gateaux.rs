//! One-sided finite-difference estimates of Gâteaux (directional) derivatives.
//!
//! `D_u φ(x) = lim_{t↓0} (φ(x + t·u) − φ(x)) / t`. Every closed-form
//! infinitesimal part in this crate is checked against these quotients. Only
//! forward differences are taken: central differences are wrong at the
//! nonsmooth points (zero entries, repeated singular values) that matter most.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SCHEDULE: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];
pub const DEFAULT_RTOL: f64 = 1e-3;

/// Points that can be moved along a direction: `x + t·u`.
pub trait Perturb {
    fn perturbed(&self, u: &Self, t: f64) -> Self;
}

impl Perturb for f64 {
    fn perturbed(&self, u: &Self, t: f64) -> Self {
        self + t * u
    }
}

impl Perturb for DVector<f64> {
    fn perturbed(&self, u: &Self, t: f64) -> Self {
        self + u * t
    }
}

impl Perturb for DMatrix<f64> {
    fn perturbed(&self, u: &Self, t: f64) -> Self {
        self + u * t
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FdEstimate {
    /// Difference quotient at the smallest step.
    pub value: f64,
    /// `(t, quotient)` pairs in schedule order.
    pub steps: Vec<(f64, f64)>,
    /// Whether the last two quotients agree to `rtol·max(1, |value|)`.
    pub converged: bool,
}

/// Forward-difference estimate of `D_u f(x)` over a strictly decreasing step schedule.
pub fn try_fd_directional<X, F, E>(
    f: F,
    x: &X,
    u: &X,
    schedule: &[f64],
    rtol: f64,
) -> std::result::Result<FdEstimate, E>
where
    X: Perturb,
    F: Fn(&X) -> std::result::Result<f64, E>,
    E: From<Error>,
{
    validate_schedule(schedule)?;
    let base = f(x)?;
    let mut steps = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let moved = f(&x.perturbed(u, t))?;
        steps.push((t, (moved - base) / t));
    }
    let value = steps.last().map(|s| s.1).unwrap_or(0.0);
    let converged = match steps.len() {
        0 | 1 => false,
        n => (steps[n - 1].1 - steps[n - 2].1).abs() <= rtol * value.abs().max(1.0),
    };
    Ok(FdEstimate {
        value,
        steps,
        converged,
    })
}

/// [`try_fd_directional`] for infallible functions.
pub fn fd_directional<X, F>(f: F, x: &X, u: &X, schedule: &[f64], rtol: f64) -> Result<FdEstimate>
where
    X: Perturb,
    F: Fn(&X) -> f64,
{
    try_fd_directional(|y: &X| Ok::<f64, Error>(f(y)), x, u, schedule, rtol)
}

/// [`fd_directional`] with the default schedule and tolerance.
pub fn fd_default<X, F>(f: F, x: &X, u: &X) -> Result<FdEstimate>
where
    X: Perturb,
    F: Fn(&X) -> f64,
{
    fd_directional(f, x, u, &DEFAULT_SCHEDULE, DEFAULT_RTOL)
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::Domain("empty step schedule".into()));
    }
    if schedule.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::Domain("step sizes must be positive and finite".into()));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("step schedule must be strictly decreasing".into()));
    }
    Ok(())
}

/// Acceptance band used throughout the test suites: `max(1e-4, 1e-3·|value|)`.
pub fn agreement_tolerance(value: f64) -> f64 {
    (1e-3 * value.abs()).max(1e-4)
}
