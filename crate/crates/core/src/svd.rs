//! Compact dual singular value decomposition (CDSVD).
//!
//! For `A = A_s + A_i ε` with `rank(A_s) = r` the factors satisfy
//! `A = U Σ Vᵀ` to first order, with `U` (m×r) and `V` (n×r) having dual
//! orthonormal columns and `Σ = Σ_s + Σ_i ε` diagonal positive.
//!
//! Construction:
//! 1. thin SVD of `A_s`, truncated at `rank_tol·σ₁`;
//! 2. singular values within `group_tol·σ₁` of each other form blocks;
//! 3. inside each block the basis is rotated to diagonalize
//!    `sym(U_gᵀ A_i V_g)`; its descending eigenvalues are the block's
//!    infinitesimal singular values;
//! 4. `U_i = U_s Ω_U + (I − U_sU_sᵀ) A_i V_s Σ_s⁻¹` and
//!    `V_i = V_s Ω_V + (I − V_sV_sᵀ) A_iᵀ U_s Σ_s⁻¹`, with skew `Ω_U, Ω_V` solving
//!    the first-order coupling equations between blocks and splitting the
//!    in-block skew part of `U_sᵀA_iV_s` evenly;
//! 5. the part of `A_i` that no first-order factor can carry,
//!    `(I − U_sU_sᵀ) A_i (I − V_sV_sᵀ)`, shows up in `residual`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dual::{DualMatrix, DualVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Svd};

pub const DEFAULT_GROUP_TOL: f64 = 1e-8;
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// Partition of the leading singular values into blocks of (numerically) equal value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGrouping {
    pub ranges: Vec<Range<usize>>,
    /// Block means, strictly decreasing.
    pub distinct_values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Absolute tolerance `group_tol·σ₁` used to chain neighbours.
    pub tolerance: f64,
}

impl BlockGrouping {
    /// Index of the block containing position `j` (0-based).
    pub fn block_of(&self, j: usize) -> Option<usize> {
        self.ranges.iter().position(|r| r.contains(&j))
    }

    pub fn len(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }
}

/// Groups a nonincreasing sequence: neighbours closer than `group_tol·σ₁` share a block.
pub fn group_singular_values(sigma: &[f64], group_tol: f64) -> BlockGrouping {
    let tolerance = group_tol * sigma.first().copied().unwrap_or(0.0);
    let mut ranges = Vec::new();
    let mut start = 0;
    for j in 1..=sigma.len() {
        if j == sigma.len() || (sigma[j - 1] - sigma[j]).abs() > tolerance {
            if j > start {
                ranges.push(start..j);
            }
            start = j;
        }
    }
    let distinct_values = ranges
        .iter()
        .map(|r| sigma[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    let multiplicities = ranges.iter().map(|r| r.len()).collect();
    BlockGrouping {
        ranges,
        distinct_values,
        multiplicities,
        tolerance,
    }
}

/// Numerical rank: singular values above `rank_tol·σ₁`.
pub fn numerical_rank(sigma: &DVector<f64>, rank_tol: f64) -> usize {
    let Some(&top) = sigma.as_slice().first() else {
        return 0;
    };
    if top == 0.0 {
        return 0;
    }
    sigma.iter().take_while(|&&s| s > rank_tol * top).count()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CdsvdResult {
    pub u: DualMatrix,
    /// Dual singular values `σ_s + σ_i ε`.
    pub s: DualVector,
    pub v: DualMatrix,
    pub grouping: BlockGrouping,
    /// `‖A_i − U_iΣ_sV_sᵀ − U_sΣ_iV_sᵀ − U_sΣ_sV_iᵀ‖_F`.
    pub residual: f64,
    /// `‖A_s − U_sΣ_sV_sᵀ‖_F`.
    pub standard_error: f64,
}

impl CdsvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Rebuilds `U Σ Vᵀ` in dual arithmetic.
    pub fn reconstruct(&self) -> DualMatrix {
        let sigma = DualMatrix::from_diagonal(&self.s);
        self.u
            .matmul(&sigma)
            .and_then(|us| us.matmul(&self.v.transpose()))
            .expect("factor shapes agree")
    }
}

/// CDSVD with the default rank tolerance.
pub fn cdsvd(a: &DualMatrix, group_tol: f64) -> CdsvdResult {
    cdsvd_with_rank_tol(a, group_tol, DEFAULT_RANK_TOL)
}

pub fn cdsvd_with_rank_tol(a: &DualMatrix, group_tol: f64, rank_tol: f64) -> CdsvdResult {
    let (m, n) = a.shape();
    if m < n {
        let t = cdsvd_tall(&a.transpose(), group_tol, rank_tol);
        return CdsvdResult {
            u: t.v,
            s: t.s,
            v: t.u,
            grouping: t.grouping,
            residual: t.residual,
            standard_error: t.standard_error,
        };
    }
    cdsvd_tall(a, group_tol, rank_tol)
}

fn cdsvd_tall(a: &DualMatrix, group_tol: f64, rank_tol: f64) -> CdsvdResult {
    let (m, n) = a.shape();
    let (a_s, a_i) = (a.s(), a.i());
    let Svd { u, sigma, v } = linalg::svd_sorted(a_s);
    let r = numerical_rank(&sigma, rank_tol);

    let mut u_s = u.columns(0, r).into_owned();
    let mut v_s = v.columns(0, r).into_owned();
    let sig: Vec<f64> = sigma.iter().take(r).copied().collect();
    let grouping = group_singular_values(&sig, group_tol);

    // rotate each block onto the eigenbasis of its symmetrized projection of A_i
    let mut sigma_i = vec![0.0; r];
    let b0 = u_s.transpose() * a_i * &v_s;
    for range in &grouping.ranges {
        let (start, len) = (range.start, range.len());
        let block = b0.view((start, start), (len, len)).into_owned();
        let (vals, q) = linalg::sym_eigen_desc(&block);
        let ug = u_s.columns(start, len) * &q;
        let vg = v_s.columns(start, len) * &q;
        u_s.columns_mut(start, len).copy_from(&ug);
        v_s.columns_mut(start, len).copy_from(&vg);
        sigma_i[start..start + len].copy_from_slice(vals.as_slice());
    }
    linalg::fix_signs(&mut u_s, &mut v_s);

    let b = u_s.transpose() * a_i * &v_s;
    let mut omega_u = DMatrix::zeros(r, r);
    let mut omega_v = DMatrix::zeros(r, r);
    for j in 0..r {
        for k in (j + 1)..r {
            let (sj, sk) = (sig[j], sig[k]);
            if grouping.block_of(j) == grouping.block_of(k) {
                let skew = 0.5 * (b[(j, k)] - b[(k, j)]);
                let mean = 0.5 * (sj + sk);
                let w = skew / (2.0 * mean);
                omega_u[(j, k)] = w;
                omega_u[(k, j)] = -w;
                omega_v[(j, k)] = -w;
                omega_v[(k, j)] = w;
            } else {
                let denom = sk * sk - sj * sj;
                let wu = (sk * b[(j, k)] + sj * b[(k, j)]) / denom;
                let wv = (sj * b[(j, k)] + sk * b[(k, j)]) / denom;
                omega_u[(j, k)] = wu;
                omega_u[(k, j)] = -wu;
                omega_v[(j, k)] = wv;
                omega_v[(k, j)] = -wv;
            }
        }
    }

    let inv_sigma = DMatrix::from_diagonal(&DVector::from_iterator(r, sig.iter().map(|s| 1.0 / s)));
    let a_i_v = a_i * &v_s;
    let a_i_t_u = a_i.transpose() * &u_s;
    let u_perp = &a_i_v - &u_s * (u_s.transpose() * &a_i_v);
    let v_perp = &a_i_t_u - &v_s * (v_s.transpose() * &a_i_t_u);
    let u_i = &u_s * &omega_u + u_perp * &inv_sigma;
    let v_i = &v_s * &omega_v + v_perp * &inv_sigma;

    let sig_s = DMatrix::from_diagonal(&DVector::from_column_slice(&sig));
    let sig_i = DMatrix::from_diagonal(&DVector::from_column_slice(&sigma_i));
    let standard_error = (a_s - &u_s * &sig_s * v_s.transpose()).norm();
    let residual = (a_i
        - &u_i * &sig_s * v_s.transpose()
        - &u_s * &sig_i * v_s.transpose()
        - &u_s * &sig_s * v_i.transpose())
        .norm();

    debug_assert_eq!(u_s.nrows(), m);
    debug_assert_eq!(v_s.nrows(), n);
    CdsvdResult {
        u: DualMatrix::raw(u_s, u_i),
        s: DualVector::raw(DVector::from_vec(sig), DVector::from_vec(sigma_i)),
        v: DualMatrix::raw(v_s, v_i),
        grouping,
        residual,
        standard_error,
    }
}

/// The leading `k` dual singular values, `1 ≤ k ≤ rank(A_s)`.
pub fn dual_singular_values(a: &DualMatrix, k: usize, group_tol: f64) -> Result<DualVector> {
    let f = cdsvd(a, group_tol);
    if k == 0 || k > f.rank() {
        return Err(Error::out_of_range("k", k, format!("1..={}", f.rank())));
    }
    Ok(f.s.head(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag_dual(s: &[f64], i: &[f64]) -> DualMatrix {
        DualMatrix::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(s)),
            DMatrix::from_diagonal(&DVector::from_column_slice(i)),
        )
        .unwrap()
    }

    #[test]
    fn grouping_chains_close_values() {
        let g = group_singular_values(&[3.0, 3.0, 2.0, 1.0, 1.0, 1.0], 1e-8);
        assert_eq!(g.ranges, vec![0..2, 2..3, 3..6]);
        assert_eq!(g.multiplicities, vec![2, 1, 3]);
        assert_eq!(g.distinct_values, vec![3.0, 2.0, 1.0]);
        assert_eq!(g.block_of(4), Some(2));
    }

    #[test]
    fn identity_with_diagonal_perturbation() {
        let f = cdsvd(&diag_dual(&[1.0, 1.0], &[2.0, 5.0]), DEFAULT_GROUP_TOL);
        assert_eq!(f.grouping.multiplicities, vec![2]);
        assert!((f.s.i()[0] - 5.0).abs() < 1e-14 && (f.s.i()[1] - 2.0).abs() < 1e-14);
        assert!(f.residual < 1e-14);
        assert!(f.u.i().norm() < 1e-14 && f.v.i().norm() < 1e-14);
    }

    #[test]
    fn real_diagonal() {
        let f = cdsvd(&diag_dual(&[3.0, 1.0], &[0.0, 0.0]), DEFAULT_GROUP_TOL);
        assert_eq!(f.s.s().as_slice(), &[3.0, 1.0]);
        assert_eq!(f.s.i().as_slice(), &[0.0, 0.0]);
        assert!((f.u.s() - DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
        assert!(f.u.i().norm() == 0.0 && f.v.i().norm() == 0.0);
    }

    #[test]
    fn zero_matrix_has_empty_factors() {
        let a = DualMatrix::new(DMatrix::zeros(3, 2), DMatrix::from_element(3, 2, 1.0)).unwrap();
        let f = cdsvd(&a, DEFAULT_GROUP_TOL);
        assert_eq!(f.rank(), 0);
        assert!((f.residual - 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn wide_input_is_transposed() {
        let a = DualMatrix::new(
            DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.5, -1.0, 3.0]),
            DMatrix::from_row_slice(2, 3, &[0.2, 0.1, -0.3, 1.0, 0.0, 0.4]),
        )
        .unwrap();
        let f = cdsvd(&a, DEFAULT_GROUP_TOL);
        assert_eq!(f.u.shape(), (2, 2));
        assert_eq!(f.v.shape(), (3, 2));
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn leading_values_and_range_check() {
        let a = diag_dual(&[1.0, 1.0], &[5.0, -1.0]);
        let s = dual_singular_values(&a, 1, DEFAULT_GROUP_TOL).unwrap();
        assert!((s.s()[0] - 1.0).abs() < 1e-15 && (s.i()[0] - 5.0).abs() < 1e-14);
        assert!(dual_singular_values(&a, 0, DEFAULT_GROUP_TOL).is_err());
        assert!(dual_singular_values(&a, 3, DEFAULT_GROUP_TOL).is_err());
    }
}
