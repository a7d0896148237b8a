//! Estimation of a DTPM from a trajectory of probability vectors.
//!
//! The standard part solves `min ‖Y_s − P_s X_s‖_F` over column-stochastic
//! `P_s`; the infinitesimal part then solves `min ‖Y_i − P_s X_i − P_i X_s‖_F`
//! over `P_i` with zero column sums and `[P_i]_{jk} ≥ 0` wherever `P_s` is
//! (numerically) zero. Both are solved by accelerated projected gradient with
//! exact column projections, so every iterate is feasible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dual::DualMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::markov::{Dtpm, Tpm};

/// Snapshot matrices `X = X_s + X_i ε`, `Y = Y_s + Y_i ε`, each `n×T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPair {
    pub x: DualMatrix,
    pub y: DualMatrix,
}

impl SnapshotPair {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn t(&self) -> usize {
        self.x.ncols()
    }
}

/// `X_s = x(1:T)`, `X_i = x(2:T+1) − x(1:T)`, `Y_s = x(2:T+1)`,
/// `Y_i = x(3:T+2) − x(2:T+1)` from `x₁, …, x_{T+2}`.
pub fn build_snapshots(xs: &[DVector<f64>]) -> Result<SnapshotPair> {
    if xs.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 states for T ≥ 1, got {}",
            xs.len()
        )));
    }
    let n = xs[0].len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::Dimension("trajectory states differ in length".into()));
    }
    let t = xs.len() - 2;
    let window = |start: usize| DMatrix::from_fn(n, t, |r, c| xs[start + c][r]);
    let (x0, x1, x2) = (window(0), window(1), window(2));
    let xi = &x1 - &x0;
    let yi = &x2 - &x1;
    Ok(SnapshotPair {
        x: DualMatrix::new(x0, xi)?,
        y: DualMatrix::new(x1, yi)?,
    })
}

/// Euclidean projection onto the probability simplex `{u ≥ 0, 𝟙ᵀu = 1}`.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        prefix += x;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Euclidean projection onto `{u : 𝟙ᵀu = 0, u_j ≥ 0 for j ∈ S}`, where
/// `in_s[j]` marks membership of `S`.
///
/// The solution is `u_j = max(v_j − λ, 0)` on `S` and `v_j − λ` elsewhere,
/// with `λ` the root of the monotone piecewise-linear sum, located exactly
/// by scanning the sorted breakpoints.
pub fn project_zero_sum_masked(v: &DVector<f64>, in_s: &[bool]) -> DVector<f64> {
    assert_eq!(v.len(), in_s.len(), "mask length must match vector length");
    let free = in_s.iter().filter(|&&b| !b).count();
    if free == 0 {
        // 𝟙ᵀu = 0 with u ≥ 0 leaves only u = 0
        return DVector::zeros(v.len());
    }
    let free_sum: f64 = v.iter().zip(in_s).filter(|(_, &b)| !b).map(|(x, _)| x).sum();
    let mut masked: Vec<f64> = v.iter().zip(in_s).filter(|(_, &b)| b).map(|(x, _)| *x).collect();
    masked.sort_by(|a, b| b.total_cmp(a));
    // with the m largest masked entries active, λ = (free_sum + prefix_m) / (free + m);
    // the right m has λ in [masked[m], masked[m-1]]
    let mut prefix = 0.0;
    let mut lambda = free_sum / free as f64;
    for m in 0..=masked.len() {
        lambda = (free_sum + prefix) / (free + m) as f64;
        let below_next = m == masked.len() || masked[m] <= lambda;
        if below_next {
            break;
        }
        prefix += masked[m];
    }
    DVector::from_fn(v.len(), |j, _| {
        let u = v[j] - lambda;
        if in_s[j] {
            u.max(0.0)
        } else {
            u
        }
    })
}

/// Which entries of `P_i` are constrained to be non-negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroPatternMask {
    /// `columns[k][j]` is true when `[P_s]_{jk} < threshold`.
    pub columns: Vec<Vec<bool>>,
    pub threshold: f64,
}

impl ZeroPatternMask {
    pub fn from_standard(ps: &DMatrix<f64>, threshold: f64) -> Self {
        let columns = ps
            .column_iter()
            .map(|c| c.iter().map(|&x| x < threshold).collect())
            .collect();
        ZeroPatternMask { columns, threshold }
    }

    pub fn count(&self) -> usize {
        self.columns.iter().flatten().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Entries of `P_s` below this form the mask of the second problem.
    pub zero_threshold: f64,
    /// Stationarity required at a converged point, relative to `1 + ‖∇f‖`.
    pub kkt_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-10,
            max_iter: 20_000,
            zero_threshold: 1e-13,
            kkt_tol: 1e-6,
        }
    }
}

/// Solver diagnostics for one of the two problems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    /// `½‖C − P X‖_F²` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `L·‖P − proj(P − ∇f(P)/L)‖_F`.
    pub projected_gradient: f64,
    pub gradient_norm: f64,
    /// Objective after every accepted iterate, starting at the initial point.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Condition numbers above this mark the least-squares problems as having
/// many minimizers.
pub const ILL_CONDITIONED: f64 = 1e10;

/// Quadratic `f(P) = ½‖C − P X‖_F²` with the data compressed by a thin QR of `Xᵀ`.
struct LeastSquares {
    g2: DMatrix<f64>,
    cxt: DMatrix<f64>,
    cq: DMatrix<f64>,
    rt: DMatrix<f64>,
    offset: f64,
    lipschitz: f64,
}

impl LeastSquares {
    fn new(c: &DMatrix<f64>, x: &DMatrix<f64>) -> Self {
        let qr = x.transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let cq = c * &q;
        let offset = (c.norm_squared() - cq.norm_squared()).max(0.0);
        let g2 = x * x.transpose();
        let lipschitz = linalg::power_iteration(&g2, 10_000, 1e-14);
        LeastSquares {
            cxt: c * x.transpose(),
            g2,
            cq,
            rt: r.transpose(),
            offset,
            lipschitz,
        }
    }

    fn objective(&self, p: &DMatrix<f64>) -> f64 {
        0.5 * ((&self.cq - p * &self.rt).norm_squared() + self.offset)
    }

    fn gradient(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        p * &self.g2 - &self.cxt
    }
}

fn project_columns<F>(m: &DMatrix<f64>, proj: &F) -> DMatrix<f64>
where
    F: Fn(usize, &DVector<f64>) -> DVector<f64>,
{
    let mut out = m.clone();
    for c in 0..m.ncols() {
        let col = proj(c, &m.column(c).into_owned());
        out.set_column(c, &col);
    }
    out
}

/// FISTA with restart whenever the objective would increase.
fn fista<F>(ls: &LeastSquares, p0: DMatrix<f64>, proj: F, opts: &FitOptions) -> (DMatrix<f64>, SolveInfo)
where
    F: Fn(usize, &DVector<f64>) -> DVector<f64>,
{
    let l = ls.lipschitz;
    let mut p = p0;
    let mut f = ls.objective(&p);
    let mut history = vec![f];
    let stationarity = |p: &DMatrix<f64>| {
        let g = ls.gradient(p);
        let step = if l > 0.0 { 1.0 / l } else { 0.0 };
        let moved = project_columns(&(p - &g * step), &proj);
        ((p - moved).norm() * l, g.norm())
    };
    if l <= 0.0 {
        // X = O: every feasible point is optimal
        let (pg, gn) = stationarity(&p);
        let info = SolveInfo {
            objective: f,
            iterations: 0,
            converged: true,
            projected_gradient: pg,
            gradient_norm: gn,
            history,
        };
        return (p, info);
    }
    let mut y = p.clone();
    let mut theta = 1.0_f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut next = project_columns(&(&y - ls.gradient(&y) / l), &proj);
        let mut f_next = ls.objective(&next);
        if f_next > f {
            theta = 1.0;
            next = project_columns(&(&p - ls.gradient(&p) / l), &proj);
            f_next = ls.objective(&next);
            y = next.clone();
        } else {
            let theta_next = (1.0 + (1.0 + 4.0 * theta * theta).sqrt()) / 2.0;
            y = &next + (&next - &p) * ((theta - 1.0) / theta_next);
            theta = theta_next;
        }
        let decrease = (f - f_next) / f.abs().max(f64::MIN_POSITIVE);
        p = next;
        f = f_next;
        history.push(f);
        if (0.0..opts.tol).contains(&decrease) {
            let (pg, gn) = stationarity(&p);
            if pg <= opts.kkt_tol * (1.0 + gn) {
                converged = true;
                break;
            }
        }
    }
    let (projected_gradient, gradient_norm) = stationarity(&p);
    let info = SolveInfo {
        objective: f,
        iterations,
        converged,
        projected_gradient,
        gradient_norm,
        history,
    };
    (p, info)
}

/// Column-stochastic least-squares fit of `Y_s ≈ P X_s`, started from `(1/n)𝟙𝟙ᵀ`.
pub fn fit_standard(
    xs: &DMatrix<f64>,
    ys: &DMatrix<f64>,
    opts: &FitOptions,
) -> Result<(Tpm, SolveInfo)> {
    if xs.shape() != ys.shape() {
        return Err(Error::Dimension(format!(
            "X_s is {:?}, Y_s is {:?}",
            xs.shape(),
            ys.shape()
        )));
    }
    let n = xs.nrows();
    let ls = LeastSquares::new(ys, xs);
    let p0 = Tpm::uniform(n).into_matrix();
    let (p, info) = fista(&ls, p0, |_, v| project_simplex(v), opts);
    Ok((Tpm::new(p)?, info))
}

/// Sets entries below `threshold` to exact zeros and renormalizes each column.
pub fn quantize_tpm(p: &Tpm, threshold: f64) -> Result<Tpm> {
    Tpm::from_weights(linalg::quantize_matrix(p.matrix(), threshold))
}

/// Fits `P_i` given `P_s`, returning the DTPM and the mask used.
///
/// `P_s` is quantized at the mask threshold first, so the mask coincides with
/// the exact zero pattern of the returned standard part.
pub fn fit_infinitesimal(
    snap: &SnapshotPair,
    ps: &Tpm,
    opts: &FitOptions,
) -> Result<(Dtpm, ZeroPatternMask, SolveInfo)> {
    let n = snap.n();
    if ps.n() != n {
        return Err(Error::Dimension(format!(
            "P_s has {} states, snapshots have {n}",
            ps.n()
        )));
    }
    let ps = quantize_tpm(ps, opts.zero_threshold)?;
    let mask = ZeroPatternMask::from_standard(ps.matrix(), opts.zero_threshold);
    let residual = snap.y.i() - ps.matrix() * snap.x.i();
    let ls = LeastSquares::new(&residual, snap.x.s());
    let (pi, info) = fista(
        &ls,
        DMatrix::zeros(n, n),
        |c, v| project_zero_sum_masked(v, &mask.columns[c]),
        opts,
    );
    let dtpm = Dtpm::new(DualMatrix::new(ps.into_matrix(), pi)?)?;
    Ok((dtpm, mask, info))
}

/// Outcome of fitting both parts of a DTPM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub p: Dtpm,
    pub objective_s: f64,
    pub objective_i: f64,
    pub iterations: (usize, usize),
    pub converged: (bool, bool),
    pub kkt_residual: (f64, f64),
    /// Condition number of `X_s X_sᵀ`.
    pub condition_estimate: f64,
    /// The condition estimate exceeds [`ILL_CONDITIONED`]: the fit is one of many minimizers.
    pub ill_conditioned: bool,
    pub masked_entries: usize,
    pub options: FitOptions,
}

/// Solves the standard problem, then the infinitesimal problem.
pub fn fit_dtpm(snap: &SnapshotPair, opts: &FitOptions) -> Result<FitReport> {
    let (ps, info_s) = fit_standard(snap.x.s(), snap.y.s(), opts)?;
    let (p, mask, info_i) = fit_infinitesimal(snap, &ps, opts)?;
    let g2 = snap.x.s() * snap.x.s().transpose();
    let condition_estimate = linalg::condition_number(&g2);
    Ok(FitReport {
        objective_s: 0.5 * (snap.y.s() - p.s() * snap.x.s()).norm_squared(),
        objective_i: info_i.objective,
        iterations: (info_s.iterations, info_i.iterations),
        converged: (info_s.converged, info_i.converged),
        kkt_residual: (info_s.projected_gradient, info_i.projected_gradient),
        condition_estimate,
        ill_conditioned: condition_estimate > ILL_CONDITIONED,
        masked_entries: mask.count(),
        options: opts.clone(),
        p,
    })
}
