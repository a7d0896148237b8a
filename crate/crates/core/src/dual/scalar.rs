use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dual number `s + i·ε` with `ε² = 0`.
///
/// `s` is the standard part and `i` the infinitesimal part. Both are finite;
/// [`DualScalar::new`] rejects NaN and infinities. Ordering is the
/// lexicographic total order on `(s, i)`.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct DualScalar {
    s: f64,
    i: f64,
}

impl DualScalar {
    pub const ZERO: DualScalar = DualScalar { s: 0.0, i: 0.0 };
    pub const ONE: DualScalar = DualScalar { s: 1.0, i: 0.0 };
    /// The infinitesimal unit `ε`.
    pub const EPS: DualScalar = DualScalar { s: 0.0, i: 1.0 };

    pub fn new(s: f64, i: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::NonFinite(s));
        }
        if !i.is_finite() {
            return Err(Error::NonFinite(i));
        }
        Ok(DualScalar { s, i })
    }

    /// Builds a dual number from parts already known to be finite.
    ///
    /// Panics in debug builds if a part is not finite.
    #[inline]
    pub(crate) fn raw(s: f64, i: f64) -> Self {
        debug_assert!(s.is_finite() && i.is_finite(), "non-finite dual ({s}, {i})");
        DualScalar { s, i }
    }

    /// A real number embedded with zero infinitesimal part.
    pub fn real(s: f64) -> Self {
        Self::raw(s, 0.0)
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    #[inline]
    pub fn i(&self) -> f64 {
        self.i
    }

    pub fn is_zero(&self) -> bool {
        self.s == 0.0 && self.i == 0.0
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::raw(self.s * c, self.i * c)
    }

    /// Dual absolute value: `|s| + sign(s)·i·ε` for `s ≠ 0`, and `|i|·ε` at `s = 0`.
    pub fn abs(&self) -> Self {
        if self.s == 0.0 {
            Self::raw(0.0, self.i.abs())
        } else {
            Self::raw(self.s.abs(), self.s.signum() * self.i)
        }
    }

    /// Dual power `(s + iε)^p` for `p ≥ 1`.
    ///
    /// At `s = 0` the result is `iε` for `p = 1` and `0` for `p > 1`.
    pub fn pow(&self, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if self.s < 0.0 {
            return Err(Error::Domain(format!(
                "power of dual number with negative standard part {}",
                self.s
            )));
        }
        if self.s == 0.0 {
            return Ok(if p == 1.0 {
                Self::raw(0.0, self.i)
            } else {
                Self::ZERO
            });
        }
        let sp = self.s.powf(p);
        DualScalar::new(sp, p * self.s.powf(p - 1.0) * self.i)
    }

    /// Dual p-th root `(s + iε)^(1/p)` for `p ≥ 1`; requires `s > 0`.
    pub fn root(&self, p: f64) -> Result<Self> {
        check_exponent(p)?;
        if self.s <= 0.0 {
            return Err(Error::Domain(format!(
                "root of dual number requires positive standard part, got {}",
                self.s
            )));
        }
        let r = self.s.powf(1.0 / p);
        DualScalar::new(r, r / (p * self.s) * self.i)
    }

    /// Dual base-2 logarithm with the effective-information conventions:
    /// `log2(0 + iε) = log2(i)·ε` for `i > 0` and `log2(0) = 0`.
    pub fn log2(&self) -> Result<Self> {
        if self.s > 0.0 {
            Ok(Self::raw(
                self.s.log2(),
                self.i / (self.s * std::f64::consts::LN_2),
            ))
        } else if self.s == 0.0 && self.i > 0.0 {
            Ok(Self::raw(0.0, self.i.log2()))
        } else if self.s == 0.0 && self.i == 0.0 {
            Ok(Self::ZERO)
        } else {
            Err(Error::Domain(format!(
                "log2 undefined at {} + {}ε",
                self.s, self.i
            )))
        }
    }

    /// Larger of two duals under the total order.
    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::out_of_range("p", p, "[1, ∞)"))
    }
}

impl PartialEq for DualScalar {
    fn eq(&self, other: &Self) -> bool {
        self.s == other.s && self.i == other.i
    }
}

impl Eq for DualScalar {}

impl PartialOrd for DualScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DualScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        // parts are finite, so partial_cmp only fails if arithmetic produced a NaN
        let by = |a: f64, b: f64| a.partial_cmp(&b).unwrap_or_else(|| a.total_cmp(&b));
        by(self.s, other.s).then_with(|| by(self.i, other.i))
    }
}

impl Add for DualScalar {
    type Output = DualScalar;
    fn add(self, rhs: Self) -> Self {
        DualScalar::raw(self.s + rhs.s, self.i + rhs.i)
    }
}

impl AddAssign for DualScalar {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for DualScalar {
    type Output = DualScalar;
    fn sub(self, rhs: Self) -> Self {
        DualScalar::raw(self.s - rhs.s, self.i - rhs.i)
    }
}

impl Mul for DualScalar {
    type Output = DualScalar;
    fn mul(self, rhs: Self) -> Self {
        DualScalar::raw(self.s * rhs.s, self.s * rhs.i + self.i * rhs.s)
    }
}

impl Neg for DualScalar {
    type Output = DualScalar;
    fn neg(self) -> Self {
        DualScalar::raw(-self.s, -self.i)
    }
}

impl std::iter::Sum for DualScalar {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(DualScalar::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for DualScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.i < 0.0 {
            write!(f, "{} - {}ε", self.s, -self.i)
        } else {
            write!(f, "{} + {}ε", self.s, self.i)
        }
    }
}
