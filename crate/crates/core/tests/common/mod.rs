#![allow(dead_code)]

use dualce::markov::Dtpm;
use dualce::DualMatrix;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gauss_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gauss(rng))
}

pub fn gauss_mat(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| gauss(rng))
}

/// Haar-ish orthogonal matrix from the QR of a Gaussian matrix.
pub fn orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let qr = gauss_mat(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `m×n` matrix `U diag(sigma) Vᵀ` with random orthogonal factors.
pub fn with_singular_values(rng: &mut ChaCha8Rng, m: usize, n: usize, sigma: &[f64]) -> DMatrix<f64> {
    let u = orthogonal(rng, m);
    let v = orthogonal(rng, n);
    let mut d = DMatrix::zeros(m, n);
    for (j, &s) in sigma.iter().enumerate() {
        d[(j, j)] = s;
    }
    u * d * v.transpose()
}

/// Descending singular values with repeated blocks (multiplicity up to 3)
/// and, when `zeros > 0`, that many trailing zeros. Distinct levels are at
/// least 0.3 apart.
pub fn engineered_sigma(rng: &mut ChaCha8Rng, len: usize, zeros: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut level = 1.0 + 0.5 * rng.random::<f64>();
    while out.len() < len - zeros {
        let mult = rng.random_range(1..=3).min(len - zeros - out.len());
        for _ in 0..mult {
            out.push(level);
        }
        level += 0.3 + rng.random::<f64>();
    }
    out.reverse();
    out.extend(std::iter::repeat_n(0.0, zeros));
    out
}

pub fn random_dual(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DualMatrix {
    DualMatrix::new(gauss_mat(rng, m, n), gauss_mat(rng, m, n)).unwrap()
}

/// Dual matrix whose standard part has repeated and possibly zero singular values.
pub fn engineered_dual(rng: &mut ChaCha8Rng, m: usize, n: usize, zeros: usize) -> DualMatrix {
    let sigma = engineered_sigma(rng, m.min(n), zeros);
    DualMatrix::new(with_singular_values(rng, m, n, &sigma), gauss_mat(rng, m, n) * 0.5).unwrap()
}

/// Like [`engineered_dual`], with the part of `A_i` that maps the null space of
/// `A_s` into the orthogonal complement of its range removed, so that a compact
/// dual SVD exists.
pub fn engineered_dual_compact(rng: &mut ChaCha8Rng, m: usize, n: usize, zeros: usize) -> DualMatrix {
    let sigma = engineered_sigma(rng, m.min(n), zeros);
    let r = sigma.iter().filter(|&&s| s > 0.0).count();
    let u = orthogonal(rng, m);
    let v = orthogonal(rng, n);
    let mut d = DMatrix::zeros(m, n);
    for (j, &s) in sigma.iter().enumerate() {
        d[(j, j)] = s;
    }
    let a_s = &u * d * v.transpose();
    let (uz, vz) = (u.columns(r, m - r), v.columns(r, n - r));
    let mut a_i = gauss_mat(rng, m, n) * 0.5;
    a_i -= &uz * (uz.transpose() * &a_i * &vz) * vz.transpose();
    DualMatrix::new(a_s, a_i).unwrap()
}

/// Column-stochastic matrix; each entry is zeroed with probability `sparsity`
/// (at least one entry per column survives).
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for c in 0..n {
        let keep = rng.random_range(0..n);
        for r in 0..n {
            if r == keep || rng.random::<f64>() >= sparsity {
                p[(r, c)] = rng.random::<f64>() + 1e-3;
            }
        }
        let s = p.column(c).sum();
        p.column_mut(c).unscale_mut(s);
    }
    p
}

/// Admissible infinitesimal part for `ps`: nonnegative where `ps` vanishes,
/// zero column sums.
pub fn admissible_infinitesimal(rng: &mut ChaCha8Rng, ps: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    admissible(rng, ps, scale, false)
}

/// Admissible infinitesimal part that is also zero wherever `ps` is.
pub fn supported_infinitesimal(rng: &mut ChaCha8Rng, ps: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    admissible(rng, ps, scale, true)
}

fn admissible(rng: &mut ChaCha8Rng, ps: &DMatrix<f64>, scale: f64, on_support: bool) -> DMatrix<f64> {
    let n = ps.nrows();
    let mut pi = DMatrix::zeros(n, ps.ncols());
    for c in 0..ps.ncols() {
        let free: Vec<usize> = (0..n).filter(|&r| ps[(r, c)] > 0.0).collect();
        let mut total = 0.0;
        for r in 0..n {
            let v = scale * gauss(rng);
            pi[(r, c)] = if ps[(r, c)] > 0.0 {
                v
            } else if on_support {
                0.0
            } else {
                v.abs()
            };
            total += pi[(r, c)];
        }
        let shift = total / free.len() as f64;
        for &r in &free {
            pi[(r, c)] -= shift;
        }
    }
    pi
}

pub fn random_dtpm(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> Dtpm {
    let ps = random_stochastic(rng, n, sparsity);
    let pi = admissible_infinitesimal(rng, &ps, 0.1);
    Dtpm::from_parts(ps, pi).unwrap()
}

pub fn random_permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Singular values of a real matrix, descending, straight from faer.
pub fn sigma_of(a: &DMatrix<f64>) -> Vec<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
        .singular_values()
        .unwrap()
}

/// EI as the entropy of the mean column minus the mean column entropy.
pub fn ei_entropy_form(p: &DMatrix<f64>) -> f64 {
    let n = p.ncols() as f64;
    let h = |it: &mut dyn Iterator<Item = f64>| -> f64 {
        it.filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
    };
    let mean: Vec<f64> = (0..p.nrows()).map(|r| p.row(r).sum() / n).collect();
    let avg_h: f64 = (0..p.ncols()).map(|c| h(&mut p.column(c).iter().copied())).sum::<f64>() / n;
    h(&mut mean.into_iter()) - avg_h
}
