//! k-means clustering and coarse-graining of a DTPM into `k` macro-states.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{Dtpm, Tpm};
use crate::svd::cdsvd;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub seed: u64,
    pub max_iter: usize,
    /// Fresh initializations tried when a cluster ends up empty.
    pub retries: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            seed: 0,
            max_iter: 300,
            retries: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Cluster of every point, numbered in order of first appearance.
    pub labels: Vec<usize>,
    pub centroids: DMatrix<f64>,
    pub iterations: usize,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

/// k-means++ seeding followed by Lloyd iterations on the columns of `points`.
pub fn kmeans(points: &DMatrix<f64>, k: usize, opts: &KMeansOptions) -> Result<KMeansResult> {
    let count = points.ncols();
    if k == 0 || k > count {
        return Err(Error::out_of_range("k", k, format!("1..={count}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..=opts.retries {
        let centroids = plus_plus(points, k, &mut rng);
        if let Some(result) = lloyd(points, centroids, opts.max_iter) {
            return Ok(result);
        }
    }
    Err(Error::Clustering(format!(
        "empty cluster persisted after {} retries",
        opts.retries
    )))
}

fn sq_dist(points: &DMatrix<f64>, j: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    points
        .column(j)
        .iter()
        .zip(centroids.column(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let count = points.ncols();
    let mut centroids = DMatrix::zeros(points.nrows(), k);
    centroids.set_column(0, &points.column(rng.random_range(0..count)));
    let mut d2: Vec<f64> = (0..count).map(|j| sq_dist(points, j, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = count - 1;
            for (j, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = j;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..count)
        };
        centroids.set_column(c, &points.column(pick));
        for (j, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, j, &centroids, c));
        }
    }
    centroids
}

/// `None` when a cluster becomes empty.
fn lloyd(points: &DMatrix<f64>, mut centroids: DMatrix<f64>, max_iter: usize) -> Option<KMeansResult> {
    let (dim, count) = points.shape();
    let k = centroids.ncols();
    let assign = |centroids: &DMatrix<f64>| -> Vec<usize> {
        (0..count)
            .map(|j| {
                let mut best = 0;
                let mut best_d = f64::INFINITY;
                for c in 0..k {
                    let d = sq_dist(points, j, centroids, c);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };
    let mut labels = assign(&centroids);
    let mut iterations = 0;
    loop {
        let mut sums = DMatrix::zeros(dim, k);
        let mut sizes = vec![0usize; k];
        for (j, &c) in labels.iter().enumerate() {
            let mut col = sums.column_mut(c);
            col += points.column(j);
            sizes[c] += 1;
        }
        if sizes.contains(&0) {
            return None;
        }
        for c in 0..k {
            centroids.set_column(c, &(sums.column(c) / sizes[c] as f64));
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let next = assign(&centroids);
        if next == labels {
            break;
        }
        labels = next;
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(j, &c)| sq_dist(points, j, &centroids, c))
        .sum();
    // renumber clusters by first appearance
    let mut order = vec![usize::MAX; k];
    let mut next_id = 0;
    for &c in &labels {
        if order[c] == usize::MAX {
            order[c] = next_id;
            next_id += 1;
        }
    }
    let mut ordered = DMatrix::zeros(dim, k);
    for c in 0..k {
        ordered.set_column(order[c], &centroids.column(c));
    }
    Some(KMeansResult {
        labels: labels.iter().map(|&c| order[c]).collect(),
        centroids: ordered,
        iterations,
        inertia,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoarseGrainMethod {
    /// Cluster `Q₁ = [U_{s,k}ᵀP_s; U_{s,k}ᵀP_i + U_{i,k}ᵀP_s]`.
    WithInfinitesimal,
    /// Cluster `Q₂ = U_{s,k}ᵀP_s`, zero-padded to `2k` rows.
    WithoutInfinitesimal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoarseGrainOptions {
    pub kmeans: KMeansOptions,
    /// Scale applied to the infinitesimal rows of `Q₁`.
    pub infinitesimal_weight: f64,
    pub group_tol: f64,
}

impl Default for CoarseGrainOptions {
    fn default() -> Self {
        CoarseGrainOptions {
            kmeans: KMeansOptions::default(),
            infinitesimal_weight: 1.0,
            group_tol: crate::svd::DEFAULT_GROUP_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseGraining {
    /// `n×k` projection with one 1 per row.
    pub phi: DMatrix<f64>,
    /// Reduced chain, column-normalized `ΦᵀP_sΦ`.
    pub upsilon: Tpm,
    pub method: CoarseGrainMethod,
    pub labels: Vec<usize>,
}

/// The matrix whose columns are clustered.
pub fn feature_matrix(
    p: &Dtpm,
    k: usize,
    method: CoarseGrainMethod,
    opts: &CoarseGrainOptions,
) -> Result<DMatrix<f64>> {
    let f = cdsvd(p.dual(), opts.group_tol);
    if k == 0 || k > f.rank() {
        return Err(Error::out_of_range("k", k, format!("1..={}", f.rank())));
    }
    let us = f.u.s().columns(0, k);
    let n = p.n();
    let mut q = DMatrix::zeros(2 * k, n);
    q.rows_mut(0, k).copy_from(&(us.transpose() * p.s()));
    if method == CoarseGrainMethod::WithInfinitesimal {
        let ui = f.u.i().columns(0, k);
        let lower = (us.transpose() * p.i() + ui.transpose() * p.s()) * opts.infinitesimal_weight;
        q.rows_mut(k, k).copy_from(&lower);
    }
    Ok(q)
}

/// Clusters the `n` states into `k` macro-states and reduces `P_s`.
pub fn coarse_grain(
    p: &Dtpm,
    k: usize,
    method: CoarseGrainMethod,
    opts: &CoarseGrainOptions,
) -> Result<CoarseGraining> {
    let q = feature_matrix(p, k, method, opts)?;
    let labels = kmeans(&q, k, &opts.kmeans)?.labels;
    let phi = projection(&labels, k);
    let upsilon = reduce(p.s(), &phi)?;
    Ok(CoarseGraining {
        phi,
        upsilon,
        method,
        labels,
    })
}

/// Binary `n×k` matrix with `Φ[j, labels[j]] = 1`.
pub fn projection(labels: &[usize], k: usize) -> DMatrix<f64> {
    let mut phi = DMatrix::zeros(labels.len(), k);
    for (j, &c) in labels.iter().enumerate() {
        phi[(j, c)] = 1.0;
    }
    phi
}

/// `(ΦᵀPΦ)` with every column divided by its sum.
pub fn reduce(p: &DMatrix<f64>, phi: &DMatrix<f64>) -> Result<Tpm> {
    Tpm::from_weights(phi.transpose() * p * phi)
}
