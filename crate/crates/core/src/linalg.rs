//! Dense real linear-algebra helpers shared by the dual modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Thin SVD `A = U diag(σ) Vᵀ` with `σ` sorted in nonincreasing order.
///
/// Each singular pair is sign-fixed so that the largest-magnitude entry of the
/// left vector is positive (first index wins ties), which makes the factors
/// reproducible.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd_sorted(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let p = m.min(n);
    if p == 0 {
        return Svd {
            u: DMatrix::zeros(m, 0),
            sigma: DVector::zeros(0),
            v: DMatrix::zeros(n, 0),
        };
    }
    let svd = to_faer(a).thin_svd().expect("SVD of a finite matrix");
    let u = from_faer(svd.U());
    let v = from_faer(svd.V());
    let sv = DVector::from_fn(p, |j, _| svd.S()[j]);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]).then(x.cmp(&y)));

    let mut out_u = DMatrix::zeros(m, p);
    let mut out_v = DMatrix::zeros(n, p);
    let mut sigma = DVector::zeros(p);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = sv[src];
        out_u.set_column(dst, &u.column(src));
        out_v.set_column(dst, &v.column(src));
    }
    fix_signs(&mut out_u, &mut out_v);
    Svd {
        u: out_u,
        sigma,
        v: out_v,
    }
}

fn to_faer(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(a: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    let sv = to_faer(a).singular_values().expect("SVD of a finite matrix");
    DVector::from_vec(sv)
}

/// Flips column pairs so the largest-magnitude entry of each `u` column is positive.
pub fn fix_signs(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let mut best = 0;
        for r in 1..col.len() {
            if col[r].abs() > col[best].abs() {
                best = r;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            u.column_mut(j).neg_mut();
            if j < v.ncols() {
                v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Symmetric part `(A + Aᵀ)/2`.
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Skew-symmetric part `(A − Aᵀ)/2`.
pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// Eigenpairs of a symmetric matrix with eigenvalues in nonincreasing order.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(sym(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .total_cmp(&eig.eigenvalues[x])
            .then(x.cmp(&y))
    });
    let mut vals = DVector::zeros(n);
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `q` (an `m×r` matrix); returns `m×(m−r)`.
pub fn orth_complement(q: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, r) = q.shape();
    if r >= m {
        return DMatrix::zeros(m, 0);
    }
    // Householder QR of [Q | I]: the leading r columns of the orthogonal factor
    // span range(Q), the remaining m − r columns its complement.
    let mut aug = DMatrix::zeros(m, r + m);
    aug.view_mut((0, 0), (m, r)).copy_from(q);
    aug.view_mut((0, r), (m, m)).fill_with_identity();
    let full_q = aug.qr().q();
    let mut comp = full_q.columns(r, m - r).into_owned();
    // drop any component along q that rounding left behind, then re-orthonormalize
    let proj = q * (q.transpose() * &comp);
    comp -= proj;
    let qr = comp.qr();
    qr.q()
}

pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

pub fn nuclear_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a).sum()
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a)[0]
}

/// 2-norm condition number `σ_max/σ_min` (infinite for singular input).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 1.0;
    }
    let sv = singular_values(a);
    let max = sv[0];
    let min = sv[sv.len() - 1];
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
pub fn power_iteration(a: &DMatrix<f64>, max_iter: usize, rtol: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 1e-3);
    x /= x.norm();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = a * &x;
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = x.dot(&y);
        x = y / norm;
        if (next - lambda).abs() <= rtol * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

/// Entries with magnitude below `tau` replaced by exact zeros.
pub fn quantize_matrix(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    a.map(|x| if x.abs() < tau { 0.0 } else { x })
}
