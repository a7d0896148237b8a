//! Dual-valued vector p-norms, `1 ≤ p ≤ ∞`.
//!
//! The standard part is the real p-norm of `x_s`. The infinitesimal part is the
//! directional derivative of that norm at `x_s` along `x_i`: the largest inner
//! product of `x_i` with a subgradient. When `x_s = 0` every subgradient of the
//! unit dual ball is available and the infinitesimal part becomes `‖x_i‖_p`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dual::{DualScalar, DualVector};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum VectorNormKind {
    One,
    /// Finite `p` strictly between 1 and ∞.
    P(f64),
    Infinity,
}

impl VectorNormKind {
    /// Maps `p = 1` to [`VectorNormKind::One`], `p = ∞` to
    /// [`VectorNormKind::Infinity`] and `1 < p < ∞` to [`VectorNormKind::P`].
    pub fn from_p(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(VectorNormKind::One)
        } else if p == f64::INFINITY {
            Ok(VectorNormKind::Infinity)
        } else if p > 1.0 && p.is_finite() {
            Ok(VectorNormKind::P(p))
        } else {
            Err(Error::out_of_range("p", p, "[1, ∞]"))
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            VectorNormKind::One => 1.0,
            VectorNormKind::P(p) => p,
            VectorNormKind::Infinity => f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            VectorNormKind::P(p) if !(p > 1.0 && p.is_finite()) => {
                Err(Error::out_of_range("p", p, "(1, ∞)"))
            }
            _ => Ok(()),
        }
    }
}

/// Relative gap below which two standard parts count as tied for the maximum.
pub const TIE_RTOL: f64 = 1e-12;

/// `value` is within [`TIE_RTOL`] of the maximum `max`.
pub(crate) fn is_tied(value: f64, max: f64) -> bool {
    value >= max - TIE_RTOL * max.abs()
}

/// Real p-norm, computed on the max-scaled vector to avoid overflow.
pub fn real_norm(x: &DVector<f64>, kind: VectorNormKind) -> f64 {
    match kind {
        VectorNormKind::One => x.iter().map(|v| v.abs()).sum(),
        VectorNormKind::Infinity => x.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        VectorNormKind::P(p) => {
            let scale = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = x.iter().map(|v| (v.abs() / scale).powf(p)).sum();
            scale * sum.powf(1.0 / p)
        }
    }
}

/// Closed-form dual-valued vector norm.
pub fn dvnorm(x: &DualVector, kind: VectorNormKind) -> Result<DualScalar> {
    kind.validate()?;
    let (xs, xi) = (x.s(), x.i());
    let standard = real_norm(xs, kind);
    if kind != VectorNormKind::One && xs.iter().all(|&v| v == 0.0) {
        return DualScalar::new(0.0, real_norm(xi, kind));
    }
    let infinitesimal = match kind {
        VectorNormKind::One => xs
            .iter()
            .zip(xi.iter())
            .map(|(&s, &i)| if s == 0.0 { i.abs() } else { s.signum() * i })
            .sum(),
        VectorNormKind::P(p) => {
            // the gradient |x|^{p-2} x / ‖x‖^{p-1} is homogeneous of degree 0,
            // so evaluate it on x / max|x| in log space
            let scale = xs.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            let mut inner = 0.0;
            let mut norm_p = 0.0;
            for (&s, &i) in xs.iter().zip(xi.iter()) {
                if s == 0.0 {
                    continue;
                }
                let log_y = (s.abs() / scale).ln();
                inner += s.signum() * ((p - 1.0) * log_y).exp() * i;
                norm_p += (p * log_y).exp();
            }
            inner / norm_p.powf((p - 1.0) / p)
        }
        VectorNormKind::Infinity => xs
            .iter()
            .zip(xi.iter())
            .filter(|(s, _)| is_tied(s.abs(), standard))
            .map(|(&s, &i)| s.signum() * i)
            .fold(f64::NEG_INFINITY, f64::max),
    };
    DualScalar::new(standard, infinitesimal)
}

/// Dual norm evaluated entrywise in dual-scalar arithmetic: dual absolute
/// values, dual powers, their sum and the dual p-th root (dual maximum for ∞).
///
/// Agrees with [`dvnorm`] whenever `x_s ≠ 0`; an all-zero standard part has no
/// dual root and is reported as a domain error.
pub fn dvnorm_elementwise(x: &DualVector, kind: VectorNormKind) -> Result<DualScalar> {
    kind.validate()?;
    match kind {
        VectorNormKind::One => Ok(x.iter().map(|v| v.abs()).sum()),
        VectorNormKind::Infinity => Ok(x
            .iter()
            .map(|v| v.abs())
            .fold(DualScalar::ZERO, DualScalar::max)),
        VectorNormKind::P(p) => {
            let mut sum = DualScalar::ZERO;
            for v in x.iter() {
                sum += v.abs().pow(p)?;
            }
            sum.root(p)
        }
    }
}

/// Entries with `|x| < tau` set to exact zero. Branches on the zero set of the
/// standard part use exact comparisons; callers with noisy data quantize first.
pub fn quantize(x: &DVector<f64>, tau: f64) -> DVector<f64> {
    x.map(|v| if v.abs() < tau { 0.0 } else { v })
}
