use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DualScalar, DualVector};
use crate::error::{Error, Result};
use crate::linalg;

/// Largest condition number of the standard part accepted by [`DualMatrix::inverse`].
pub const MAX_INVERSE_CONDITION: f64 = 1e12;

/// Dual matrix `A_s + A_i ε` with equal-shape standard and infinitesimal parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualMatrix {
    s: DMatrix<f64>,
    i: DMatrix<f64>,
}

impl DualMatrix {
    pub fn new(s: DMatrix<f64>, i: DMatrix<f64>) -> Result<Self> {
        if s.shape() != i.shape() {
            return Err(Error::Dimension(format!(
                "standard part is {:?}, infinitesimal part {:?}",
                s.shape(),
                i.shape()
            )));
        }
        if let Some(bad) = s.iter().chain(i.iter()).find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(DualMatrix { s, i })
    }

    pub fn from_real(s: DMatrix<f64>) -> Result<Self> {
        let (m, n) = s.shape();
        Self::new(s, DMatrix::zeros(m, n))
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        DualMatrix {
            s: DMatrix::zeros(m, n),
            i: DMatrix::zeros(m, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        DualMatrix {
            s: DMatrix::identity(n, n),
            i: DMatrix::zeros(n, n),
        }
    }

    pub(crate) fn raw(s: DMatrix<f64>, i: DMatrix<f64>) -> Self {
        debug_assert_eq!(s.shape(), i.shape());
        DualMatrix { s, i }
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn i(&self) -> &DMatrix<f64> {
        &self.i
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.s, self.i)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.s.shape()
    }

    pub fn nrows(&self) -> usize {
        self.s.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.s.ncols()
    }

    pub fn get(&self, r: usize, c: usize) -> DualScalar {
        DualScalar::raw(self.s[(r, c)], self.i[(r, c)])
    }

    pub fn column(&self, c: usize) -> DualVector {
        DualVector::raw(self.s.column(c).into_owned(), self.i.column(c).into_owned())
    }

    pub fn row(&self, r: usize) -> DualVector {
        DualVector::raw(
            self.s.row(r).transpose(),
            self.i.row(r).transpose(),
        )
    }

    /// Leading `k` columns.
    pub fn columns(&self, start: usize, k: usize) -> DualMatrix {
        DualMatrix::raw(
            self.s.columns(start, k).into_owned(),
            self.i.columns(start, k).into_owned(),
        )
    }

    pub fn transpose(&self) -> DualMatrix {
        DualMatrix::raw(self.s.transpose(), self.i.transpose())
    }

    pub fn add(&self, other: &DualMatrix) -> Result<DualMatrix> {
        self.same_shape(other, "add")?;
        Ok(DualMatrix::raw(&self.s + &other.s, &self.i + &other.i))
    }

    pub fn sub(&self, other: &DualMatrix) -> Result<DualMatrix> {
        self.same_shape(other, "subtract")?;
        Ok(DualMatrix::raw(&self.s - &other.s, &self.i - &other.i))
    }

    fn same_shape(&self, other: &DualMatrix, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot {op} {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Dual-scalar multiple `c·A`.
    pub fn scale(&self, c: DualScalar) -> DualMatrix {
        DualMatrix::raw(&self.s * c.s(), &self.i * c.s() + &self.s * c.i())
    }

    /// Dual product `(A_s B_s, A_s B_i + A_i B_s)`.
    pub fn matmul(&self, other: &DualMatrix) -> Result<DualMatrix> {
        if self.ncols() != other.nrows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(DualMatrix::raw(
            &self.s * &other.s,
            &self.s * &other.i + &self.i * &other.s,
        ))
    }

    pub fn matvec(&self, x: &DualVector) -> Result<DualVector> {
        if self.ncols() != x.len() {
            return Err(Error::Dimension(format!(
                "cannot multiply {:?} by vector of length {}",
                self.shape(),
                x.len()
            )));
        }
        Ok(DualVector::raw(
            &self.s * x.s(),
            &self.s * x.i() + &self.i * x.s(),
        ))
    }

    /// Dual inverse `A_s⁻¹ − A_s⁻¹ A_i A_s⁻¹ ε`.
    ///
    /// Fails with [`Error::Singular`] when the condition number of `A_s`
    /// exceeds [`MAX_INVERSE_CONDITION`].
    pub fn inverse(&self) -> Result<DualMatrix> {
        let (m, n) = self.shape();
        if m != n {
            return Err(Error::Dimension(format!("cannot invert {m}×{n} matrix")));
        }
        let cond = linalg::condition_number(&self.s);
        if !(cond <= MAX_INVERSE_CONDITION) {
            return Err(Error::Singular { cond });
        }
        let inv = self
            .s
            .clone()
            .try_inverse()
            .ok_or(Error::Singular { cond })?;
        let inf = -(&inv * &self.i * &inv);
        DualMatrix::new(inv, inf)
    }

    /// Whether `A` is dual-orthogonal: `A_sᵀA_s = I` and `A_sᵀA_i` skew-symmetric,
    /// both within `tol` in Frobenius norm.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let (m, n) = self.shape();
        if m != n {
            return false;
        }
        let gram = self.s.transpose() * &self.s - DMatrix::identity(n, n);
        let cross = linalg::sym(&(self.s.transpose() * &self.i));
        gram.norm() <= tol && cross.norm() <= tol
    }

    /// Deterministic random dual-orthogonal matrix `Q + QKε` with `Q` from the
    /// QR factorization of a Gaussian matrix and `K` a random skew-symmetric matrix.
    pub fn random_orthogonal(n: usize, seed: u64) -> Result<DualMatrix> {
        if n == 0 {
            return Err(Error::out_of_range("n", n, "n ≥ 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        let w: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        let k = linalg::skew(&w) * 2.0;
        let qk = &q * k;
        DualMatrix::new(q, qk)
    }

    /// Diagonal dual matrix with the given dual entries.
    pub fn from_diagonal(d: &DualVector) -> DualMatrix {
        DualMatrix::raw(
            DMatrix::from_diagonal(d.s()),
            DMatrix::from_diagonal(d.i()),
        )
    }

    pub fn frobenius_residual(&self, other: &DualMatrix) -> (f64, f64) {
        ((&self.s - &other.s).norm(), (&self.i - &other.i).norm())
    }

    /// Column sums as a dual vector.
    pub fn column_sums(&self) -> DualVector {
        let ones = DVector::from_element(self.nrows(), 1.0);
        DualVector::raw(self.s.tr_mul(&ones), self.i.tr_mul(&ones))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(n: usize, s: &[f64], i: &[f64]) -> DualMatrix {
        DualMatrix::new(
            DMatrix::from_row_slice(n, n, s),
            DMatrix::from_row_slice(n, n, i),
        )
        .unwrap()
    }

    #[test]
    fn product_with_identity_and_nilpotent() {
        let a = dm(2, &[1.0, 2.0, 3.0, 4.0], &[0.5, -1.0, 2.0, 0.0]);
        assert_eq!(DualMatrix::identity(2).matmul(&a).unwrap(), a);
        let e = DualMatrix::new(DMatrix::zeros(3, 3), DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.matmul(&e).unwrap(), DualMatrix::zeros(3, 3));
        assert!(a.matmul(&DualMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn inverse_formulas() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let a = DualMatrix::new(DMatrix::identity(2, 2), k.clone()).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(inv.s(), &DMatrix::identity(2, 2));
        assert_eq!(inv.i(), &(-k));

        let d = dm(2, &[2.0, 0.0, 0.0, 4.0], &[0.0; 4]).inverse().unwrap();
        assert_eq!(d.s(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]));
        assert_eq!(d.i(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn inverse_rejects_singular() {
        let a = dm(2, &[1.0, 2.0, 2.0, 4.0], &[0.0; 4]);
        assert!(matches!(a.inverse(), Err(Error::Singular { .. })));
        assert!(DualMatrix::zeros(2, 3).inverse().is_err());
    }

    #[test]
    fn orthogonality_predicate() {
        assert!(DualMatrix::identity(3).is_orthogonal(1e-12));
        let q = DualMatrix::random_orthogonal(3, 7).unwrap();
        let qs = q.s().clone();
        assert!(q.is_orthogonal(1e-10));
        let bad = DualMatrix::new(qs.clone(), qs).unwrap();
        assert!(!bad.is_orthogonal(1e-10));
    }

    #[test]
    fn random_orthogonal_edge_and_determinism() {
        let one = DualMatrix::random_orthogonal(1, 3).unwrap();
        assert_eq!(one.s()[(0, 0)].abs(), 1.0);
        assert_eq!(one.i()[(0, 0)], 0.0);
        assert_eq!(
            DualMatrix::random_orthogonal(4, 11).unwrap(),
            DualMatrix::random_orthogonal(4, 11).unwrap()
        );
        assert!(DualMatrix::random_orthogonal(0, 1).is_err());
    }
}
