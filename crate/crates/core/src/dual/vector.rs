use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::DualScalar;
use crate::error::{Error, Result};

/// Dual vector `x_s + x_i ε` with equal-length standard and infinitesimal parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    s: DVector<f64>,
    i: DVector<f64>,
}

impl DualVector {
    pub fn new(s: DVector<f64>, i: DVector<f64>) -> Result<Self> {
        if s.len() != i.len() {
            return Err(Error::Dimension(format!(
                "standard part has length {}, infinitesimal part {}",
                s.len(),
                i.len()
            )));
        }
        if let Some(bad) = s.iter().chain(i.iter()).find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(DualVector { s, i })
    }

    pub fn from_slices(s: &[f64], i: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(s), DVector::from_column_slice(i))
    }

    pub fn from_real(s: DVector<f64>) -> Result<Self> {
        let n = s.len();
        Self::new(s, DVector::zeros(n))
    }

    pub fn from_duals(xs: &[DualScalar]) -> Self {
        DualVector {
            s: DVector::from_iterator(xs.len(), xs.iter().map(|x| x.s())),
            i: DVector::from_iterator(xs.len(), xs.iter().map(|x| x.i())),
        }
    }

    pub fn zeros(n: usize) -> Self {
        DualVector {
            s: DVector::zeros(n),
            i: DVector::zeros(n),
        }
    }

    pub(crate) fn raw(s: DVector<f64>, i: DVector<f64>) -> Self {
        debug_assert_eq!(s.len(), i.len());
        DualVector { s, i }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s(&self) -> &DVector<f64> {
        &self.s
    }

    pub fn i(&self) -> &DVector<f64> {
        &self.i
    }

    pub fn get(&self, k: usize) -> DualScalar {
        DualScalar::raw(self.s[k], self.i[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = DualScalar> + '_ {
        self.s
            .iter()
            .zip(self.i.iter())
            .map(|(&s, &i)| DualScalar::raw(s, i))
    }

    /// Leading `k` entries.
    pub fn head(&self, k: usize) -> DualVector {
        DualVector::raw(self.s.rows(0, k).into_owned(), self.i.rows(0, k).into_owned())
    }

    pub fn add(&self, other: &DualVector) -> Result<DualVector> {
        if self.len() != other.len() {
            return Err(Error::Dimension(format!(
                "cannot add vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(DualVector::raw(&self.s + &other.s, &self.i + &other.i))
    }

    /// Dual-scalar multiple `c·x`.
    pub fn scale(&self, c: DualScalar) -> DualVector {
        DualVector::raw(&self.s * c.s(), &self.i * c.s() + &self.s * c.i())
    }

    /// Dual inner product `⟨x, y⟩`.
    pub fn dot(&self, other: &DualVector) -> DualScalar {
        DualScalar::raw(
            self.s.dot(&other.s),
            self.s.dot(&other.i) + self.i.dot(&other.s),
        )
    }
}
