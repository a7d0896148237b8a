//! Dual-valued matrix norms, dual trace and dual determinant.
//!
//! Each norm `‖A‖ = ‖A_s‖ + D_{A_i}‖A_s‖ ε` pairs the real norm with its
//! directional derivative, taken as the maximum of `⟨G, A_i⟩` over the
//! subdifferential at `A_s`. At `A_s = O` the infinitesimal part is `‖A_i‖`.
//!
//! For the Ky Fan family the singular values around `σ_k` are split into the
//! `t` copies inside the leading `k` and the `s` copies after it, using the
//! same block grouping as [`crate::svd`] so that norms and CDSVD agree.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dual::{DualMatrix, DualScalar, DualVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Svd};
use crate::svd::{group_singular_values, numerical_rank, BlockGrouping, DEFAULT_RANK_TOL};
use crate::vector_norms::{dvnorm, is_tied, VectorNormKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MatrixNormKind {
    /// `p`-norm of the `k` largest singular values, `1 < p < ∞`.
    KyFanPK { k: usize, p: f64 },
    /// Sum of the `k` largest singular values.
    KyFanK { k: usize },
    Spectral,
    SchattenP { p: f64 },
    Nuclear,
    Frobenius,
    /// Maximum column 1-norm.
    OperatorOne,
    /// Maximum row 1-norm.
    OperatorInf,
}

impl MatrixNormKind {
    fn validate(&self, n: usize) -> Result<()> {
        let check_k = |k: usize| {
            if k == 0 || k > n {
                Err(Error::out_of_range("k", k, format!("1..={n}")))
            } else {
                Ok(())
            }
        };
        let check_p = |p: f64| {
            if p > 1.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::out_of_range("p", p, "(1, ∞)"))
            }
        };
        match *self {
            MatrixNormKind::KyFanPK { k, p } => check_k(k).and(check_p(p)),
            MatrixNormKind::KyFanK { k } => check_k(k),
            MatrixNormKind::SchattenP { p } => check_p(p),
            _ => Ok(()),
        }
    }
}

/// How the singular values around `σ_k` were split for a Ky Fan evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KyFanSplit {
    /// Copies of `σ_k` among the leading `k`.
    pub t: usize,
    /// Copies of `σ_k` after position `k`.
    pub s: usize,
    /// `σ_k` is (numerically) zero, i.e. `k > rank(A_s)`.
    pub zero_branch: bool,
}

/// Closed-form dual-valued matrix norm.
pub fn dmnorm(a: &DualMatrix, kind: MatrixNormKind, group_tol: f64) -> Result<DualScalar> {
    match kind {
        MatrixNormKind::OperatorOne => Ok(operator_one(a)),
        MatrixNormKind::OperatorInf => Ok(operator_one(&a.transpose())),
        _ => NormEvaluator::new(a, group_tol).eval(kind),
    }
}

/// A dual matrix with the SVD of its standard part cached, for evaluating many
/// unitarily invariant norms of the same matrix.
#[derive(Clone, Debug)]
pub struct NormEvaluator {
    /// Tall orientation of the input (`m ≥ n`).
    a: DualMatrix,
    svd: Svd,
    rank: usize,
    grouping: BlockGrouping,
    /// `u_jᵀ A_i v_j` for `j < rank`.
    diag: Vec<f64>,
    zero_standard: bool,
}

impl NormEvaluator {
    pub fn new(a: &DualMatrix, group_tol: f64) -> Self {
        let a = if a.nrows() < a.ncols() {
            a.transpose()
        } else {
            a.clone()
        };
        let zero_standard = a.s().iter().all(|&x| x == 0.0);
        let svd = linalg::svd_sorted(a.s());
        let rank = numerical_rank(&svd.sigma, DEFAULT_RANK_TOL);
        let sig: Vec<f64> = svd.sigma.iter().take(rank).copied().collect();
        let grouping = group_singular_values(&sig, group_tol);
        let diag = (0..rank)
            .map(|j| svd.u.column(j).dot(&(a.i() * svd.v.column(j))))
            .collect();
        NormEvaluator {
            a,
            svd,
            rank,
            grouping,
            diag,
            zero_standard,
        }
    }

    /// `min(m, n)`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn singular_values(&self) -> &DVector<f64> {
        &self.svd.sigma
    }

    pub fn grouping(&self) -> &BlockGrouping {
        &self.grouping
    }

    pub fn eval(&self, kind: MatrixNormKind) -> Result<DualScalar> {
        kind.validate(self.n())?;
        match kind {
            MatrixNormKind::KyFanPK { k, p } => self.ky_fan_pk(k, p).map(|(v, _)| v),
            MatrixNormKind::KyFanK { k } => self.ky_fan_k(k).map(|(v, _)| v),
            MatrixNormKind::Spectral => self.ky_fan_k(1).map(|(v, _)| v),
            MatrixNormKind::SchattenP { p } => self.schatten(p),
            MatrixNormKind::Nuclear => self.nuclear(),
            MatrixNormKind::Frobenius => self.frobenius(),
            MatrixNormKind::OperatorOne => Ok(operator_one(&self.a)),
            MatrixNormKind::OperatorInf => Ok(operator_one(&self.a.transpose())),
        }
    }

    fn split(&self, k: usize) -> KyFanSplit {
        if k > self.rank {
            return KyFanSplit {
                t: k - self.rank,
                s: self.n() - k,
                zero_branch: true,
            };
        }
        let block = &self.grouping.ranges[self.grouping.block_of(k - 1).expect("k ≤ rank")];
        KyFanSplit {
            t: k - block.start,
            s: block.end - k,
            zero_branch: false,
        }
    }

    /// Sum of the `t` largest eigenvalues of `sym(U₂ᵀ A_i V₂)` for the block of `σ_k`.
    fn block_eigen_sum(&self, split: KyFanSplit, k: usize) -> f64 {
        let start = k - split.t;
        let len = split.t + split.s;
        let u2 = self.svd.u.columns(start, len);
        let v2 = self.svd.v.columns(start, len);
        let m = u2.transpose() * self.a.i() * v2;
        let (vals, _) = linalg::sym_eigen_desc(&m);
        vals.iter().take(split.t).sum()
    }

    /// Sum of the `t` largest singular values of `ŨᵀA_iV₂`, with `Ũ` and `V₂`
    /// spanning the complements of the leading `rank` singular vectors.
    fn null_block_singular_sum(&self, t: usize) -> f64 {
        let (u_tail, v_tail) = self.complements();
        let nmat = u_tail.transpose() * self.a.i() * v_tail;
        if nmat.is_empty() {
            return 0.0;
        }
        linalg::singular_values(&nmat).iter().take(t).sum()
    }

    fn complements(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let u_r = self.svd.u.columns(0, self.rank).into_owned();
        let v_r = self.svd.v.columns(0, self.rank).into_owned();
        (linalg::orth_complement(&u_r), linalg::orth_complement(&v_r))
    }

    fn real_ky_fan_pk(sigma: &DVector<f64>, k: usize, p: f64) -> f64 {
        let scale = sigma[0];
        if scale == 0.0 {
            return 0.0;
        }
        let sum: f64 = sigma.iter().take(k).map(|s| (s / scale).powf(p)).sum();
        scale * sum.powf(1.0 / p)
    }

    fn real_singular_values(m: &DMatrix<f64>) -> DVector<f64> {
        linalg::singular_values(m)
    }

    /// Dual Ky Fan p-k norm together with the multiplicity split used.
    pub fn ky_fan_pk(&self, k: usize, p: f64) -> Result<(DualScalar, KyFanSplit)> {
        MatrixNormKind::KyFanPK { k, p }.validate(self.n())?;
        let split = self.split(k);
        if self.zero_standard {
            let sv = Self::real_singular_values(self.a.i());
            return Ok((DualScalar::new(0.0, Self::real_ky_fan_pk(&sv, k, p))?, split));
        }
        let sigma = &self.svd.sigma;
        let norm = Self::real_ky_fan_pk(sigma, k, p);
        let lead = k - split.t;
        let mut inner: f64 = (0..lead)
            .map(|j| sigma[j].powf(p - 1.0) * self.diag[j])
            .sum();
        // σ_k = 0 leaves a singleton subdifferential: the block term drops out
        if !split.zero_branch {
            inner += sigma[k - 1].powf(p - 1.0) * self.block_eigen_sum(split, k);
        }
        Ok((DualScalar::new(norm, inner / norm.powf(p - 1.0))?, split))
    }

    /// Dual Ky Fan k-norm together with the multiplicity split used.
    pub fn ky_fan_k(&self, k: usize) -> Result<(DualScalar, KyFanSplit)> {
        MatrixNormKind::KyFanK { k }.validate(self.n())?;
        let split = self.split(k);
        if self.zero_standard {
            let sv = Self::real_singular_values(self.a.i());
            return Ok((DualScalar::new(0.0, sv.iter().take(k).sum())?, split));
        }
        let sigma = &self.svd.sigma;
        let norm: f64 = sigma.iter().take(k).sum();
        let lead = k - split.t;
        let mut inner: f64 = self.diag[..lead].iter().sum();
        inner += if split.zero_branch {
            self.null_block_singular_sum(split.t)
        } else {
            self.block_eigen_sum(split, k)
        };
        Ok((DualScalar::new(norm, inner)?, split))
    }

    fn schatten(&self, p: f64) -> Result<DualScalar> {
        let n = self.n();
        if self.zero_standard {
            let sv = Self::real_singular_values(self.a.i());
            return DualScalar::new(0.0, Self::real_ky_fan_pk(&sv, n, p));
        }
        let sigma = &self.svd.sigma;
        let norm = Self::real_ky_fan_pk(sigma, n, p);
        let inner: f64 = (0..self.rank)
            .map(|j| sigma[j].powf(p - 1.0) * self.diag[j])
            .sum();
        DualScalar::new(norm, inner / norm.powf(p - 1.0))
    }

    fn nuclear(&self) -> Result<DualScalar> {
        if self.zero_standard {
            return DualScalar::new(0.0, linalg::nuclear_norm(self.a.i()));
        }
        let norm: f64 = self.svd.sigma.iter().sum();
        let (u_tail, v_tail) = self.complements();
        let tail = linalg::nuclear_norm(&(u_tail.transpose() * self.a.i() * v_tail));
        DualScalar::new(norm, self.diag.iter().sum::<f64>() + tail)
    }

    fn frobenius(&self) -> Result<DualScalar> {
        let (s, i) = (self.a.s(), self.a.i());
        let norm = s.norm();
        if self.zero_standard {
            return DualScalar::new(0.0, i.norm());
        }
        DualScalar::new(norm, s.dot(i) / norm)
    }
}

/// Largest column dual 1-norm under the dual total order, with standard
/// parts within [`TIE_RTOL`](crate::vector_norms::TIE_RTOL) of the maximum treated as tied.
fn operator_one(a: &DualMatrix) -> DualScalar {
    let norms: Vec<DualScalar> = (0..a.ncols())
        .map(|c| dvnorm(&a.column(c), VectorNormKind::One).expect("1-norm is total"))
        .collect();
    let Some(max) = norms.iter().map(|v| v.s()).reduce(f64::max) else {
        return DualScalar::ZERO;
    };
    let inf = norms
        .iter()
        .filter(|v| is_tied(v.s(), max))
        .map(|v| v.i())
        .fold(f64::NEG_INFINITY, f64::max);
    DualScalar::new(max, inf).expect("finite")
}

/// Dual trace `tr(A_s) + tr(A_i)ε`.
pub fn dm_trace(a: &DualMatrix) -> Result<DualScalar> {
    let (m, n) = a.shape();
    if m != n {
        return Err(Error::Dimension(format!("trace of non-square {m}×{n} matrix")));
    }
    DualScalar::new(a.s().trace(), a.i().trace())
}

/// Condition number up to which the adjugate is formed as `det(A)·A⁻¹`.
pub const ADJUGATE_INVERSE_COND: f64 = 1e8;

/// Adjugate of a real square matrix, valid also for singular input.
pub fn adjugate(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    if linalg::condition_number(a) <= ADJUGATE_INVERSE_COND {
        if let Some(inv) = a.clone().try_inverse() {
            return inv * a.determinant();
        }
    }
    // A = UΣVᵀ ⇒ adj(A) = det(U)det(V)·V adj(Σ) Uᵀ, adj(Σ)_jj = ∏_{l≠j} σ_l
    let Svd { u, sigma, v } = linalg::svd_sorted(a);
    let sign = u.determinant().signum() * v.determinant().signum();
    let adj_sigma = DVector::from_fn(n, |j, _| {
        (0..n).filter(|&l| l != j).map(|l| sigma[l]).product::<f64>()
    });
    v * DMatrix::from_diagonal(&adj_sigma) * u.transpose() * sign
}

/// Dual determinant `det(A_s) + ⟨adj(A_s)ᵀ, A_i⟩ε`.
pub fn dm_det(a: &DualMatrix) -> Result<DualScalar> {
    let (m, n) = a.shape();
    if m != n {
        return Err(Error::Dimension(format!(
            "determinant of non-square {m}×{n} matrix"
        )));
    }
    if n == 0 {
        return Ok(DualScalar::ONE);
    }
    let adj = adjugate(a.s());
    DualScalar::new(a.s().determinant(), adj.transpose().dot(a.i()))
}

/// Outcome of sampling the operator-norm inequality `‖Ax‖_α ≤ ‖A‖·‖x‖_β`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorNormCheck {
    pub norm: DualScalar,
    pub trials: usize,
    /// Samples where `‖Ax‖_α > ‖A‖·‖x‖_β` under the dual order.
    pub violations: usize,
    /// Maximizer with zero infinitesimal part.
    pub witness: DualVector,
    /// `‖A·witness‖_α / ‖witness‖_β` (the denominator is exactly 1).
    pub witness_ratio: DualScalar,
    pub witness_attains: bool,
}

/// Checks the operator 1-norm (`α = β = One`) or ∞-norm (`α = β = Infinity`)
/// against random dual vectors and the maximizing witness.
pub fn operator_norm_ratio_check(
    a: &DualMatrix,
    alpha: VectorNormKind,
    beta: VectorNormKind,
    trials: usize,
    seed: u64,
) -> Result<OperatorNormCheck> {
    let kind = match (alpha, beta) {
        (VectorNormKind::One, VectorNormKind::One) => MatrixNormKind::OperatorOne,
        (VectorNormKind::Infinity, VectorNormKind::Infinity) => MatrixNormKind::OperatorInf,
        _ => {
            return Err(Error::Domain(format!(
                "operator norm induced by ({alpha:?}, {beta:?}) is not implemented"
            )))
        }
    };
    let norm = dmnorm(a, kind, crate::svd::DEFAULT_GROUP_TOL)?;
    let n = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut done = 0;
    while done < trials {
        let zero_standard = rng.random_bool(0.2);
        let xs = DVector::from_fn(n, |_, _| {
            if zero_standard || rng.random_bool(0.15) {
                0.0
            } else {
                rng.sample(StandardNormal)
            }
        });
        let xi = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = DualVector::new(xs, xi)?;
        let xn = dvnorm(&x, beta)?;
        if xn.is_zero() {
            continue;
        }
        done += 1;
        let lhs = dvnorm(&a.matvec(&x)?, alpha)?;
        if !dual_le_approx(lhs, norm * xn, 1e-10) {
            violations += 1;
        }
    }

    let witness = operator_witness(a, kind);
    let image = dvnorm(&a.matvec(&witness)?, alpha)?;
    let wn = dvnorm(&witness, beta)?;
    debug_assert_eq!(wn, DualScalar::ONE);
    let witness_attains = approx_eq(image, norm, 1e-10);
    Ok(OperatorNormCheck {
        norm,
        trials,
        violations,
        witness,
        witness_ratio: image,
        witness_attains,
    })
}

fn operator_witness(a: &DualMatrix, kind: MatrixNormKind) -> DualVector {
    let n = a.ncols();
    match kind {
        MatrixNormKind::OperatorOne => {
            let best = (0..n)
                .max_by_key(|&c| dvnorm(&a.column(c), VectorNormKind::One).expect("total"))
                .unwrap_or(0);
            let mut xs = DVector::zeros(n);
            if n > 0 {
                xs[best] = 1.0;
            }
            DualVector::from_real(xs).expect("finite")
        }
        _ => {
            let best = (0..a.nrows())
                .max_by_key(|&r| dvnorm(&a.row(r), VectorNormKind::One).expect("total"))
                .unwrap_or(0);
            let row = a.row(best);
            let xs = DVector::from_fn(n, |k, _| {
                let (s, i) = (row.s()[k], row.i()[k]);
                if s != 0.0 {
                    s.signum()
                } else if i != 0.0 {
                    i.signum()
                } else {
                    1.0
                }
            });
            DualVector::from_real(xs).expect("finite")
        }
    }
}

/// `a ≤ b` under the dual order, with standard parts treated as equal when
/// within `tol·(1 + |b_s|)`.
pub fn dual_le_approx(a: DualScalar, b: DualScalar, tol: f64) -> bool {
    let ts = tol * (1.0 + b.s().abs());
    if a.s() < b.s() - ts {
        true
    } else if a.s() > b.s() + ts {
        false
    } else {
        a.i() <= b.i() + tol * (1.0 + b.i().abs())
    }
}

/// Both parts equal within `tol` relative to `1 + |value|`.
pub fn approx_eq(a: DualScalar, b: DualScalar, tol: f64) -> bool {
    (a.s() - b.s()).abs() <= tol * (1.0 + b.s().abs())
        && (a.i() - b.i()).abs() <= tol * (1.0 + b.i().abs())
}
