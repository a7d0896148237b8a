//! Column-stochastic transition matrices, their dual extensions, effective
//! information and the dumbbell benchmark chain.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dual::{DualMatrix, DualScalar};
use crate::error::{Error, Result};
use crate::io::MatrixFile;
use crate::linalg;

/// Column sums of a TPM must equal 1 (and those of `P_i` equal 0) to this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Column-stochastic transition matrix: `P ≥ O`, `𝟙ᵀP = 𝟙ᵀ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct Tpm {
    p: DMatrix<f64>,
}

impl Tpm {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        check_tpm(&p, STOCHASTIC_TOL)?;
        Ok(Tpm { p })
    }

    /// Normalizes every column to sum 1. Fails on negative entries or zero columns.
    pub fn from_weights(mut w: DMatrix<f64>) -> Result<Self> {
        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidTpm("weights must be finite and non-negative".into()));
        }
        for mut col in w.column_iter_mut() {
            let sum: f64 = col.sum();
            if sum == 0.0 {
                return Err(Error::InvalidTpm("zero weight column".into()));
            }
            col /= sum;
        }
        Tpm::new(w)
    }

    pub fn uniform(n: usize) -> Self {
        Tpm {
            p: DMatrix::from_element(n, n, 1.0 / n as f64),
        }
    }

    pub fn identity(n: usize) -> Self {
        Tpm {
            p: DMatrix::identity(n, n),
        }
    }

    /// Permutation matrix sending state `j` to `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut p = DMatrix::zeros(n, n);
        for (j, &r) in perm.iter().enumerate() {
            if r >= n || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidTpm(format!("{perm:?} is not a permutation")));
            }
            p[(r, j)] = 1.0;
        }
        Ok(Tpm { p })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.p
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }
}

impl TryFrom<DMatrix<f64>> for Tpm {
    type Error = Error;

    fn try_from(p: DMatrix<f64>) -> Result<Self> {
        Tpm::new(p)
    }
}

impl From<Tpm> for DMatrix<f64> {
    fn from(t: Tpm) -> Self {
        t.p
    }
}

impl TryFrom<MatrixFile> for Tpm {
    type Error = Error;

    fn try_from(f: MatrixFile) -> Result<Self> {
        Tpm::new(f.standard()?)
    }
}

impl From<Tpm> for MatrixFile {
    fn from(t: Tpm) -> Self {
        MatrixFile::real(&t.p)
    }
}

fn check_tpm(p: &DMatrix<f64>, tol: f64) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::InvalidTpm(format!(
            "not square: {}×{}",
            p.nrows(),
            p.ncols()
        )));
    }
    if let Some(x) = p.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidTpm(format!("entry {x} is not a probability")));
    }
    for (c, col) in p.column_iter().enumerate() {
        let sum = col.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidTpm(format!("column {c} sums to {sum}")));
        }
    }
    Ok(())
}

/// Dual transition matrix `P_s + P_i ε`: `P_s` is a TPM, the columns of `P_i`
/// sum to 0 and `[P_i]_{jk} ≥ 0` wherever `[P_s]_{jk} = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct Dtpm {
    p: DualMatrix,
}

impl Dtpm {
    pub fn new(p: DualMatrix) -> Result<Self> {
        Self::with_tolerance(p, STOCHASTIC_TOL)
    }

    /// Validates with column-sum and sign slack `tol`.
    pub fn with_tolerance(p: DualMatrix, tol: f64) -> Result<Self> {
        check_dtpm(&p, tol)?;
        Ok(Dtpm { p })
    }

    pub fn from_parts(s: DMatrix<f64>, i: DMatrix<f64>) -> Result<Self> {
        Dtpm::new(DualMatrix::new(s, i)?)
    }

    /// `P_s` with a zero infinitesimal part.
    pub fn from_tpm(t: &Tpm) -> Self {
        Dtpm {
            p: DualMatrix::from_real(t.p.clone()).expect("TPM entries are finite"),
        }
    }

    pub fn dual(&self) -> &DualMatrix {
        &self.p
    }

    pub fn s(&self) -> &DMatrix<f64> {
        self.p.s()
    }

    pub fn i(&self) -> &DMatrix<f64> {
        self.p.i()
    }

    pub fn standard(&self) -> Tpm {
        Tpm { p: self.p.s().clone() }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }
}

impl TryFrom<DualMatrix> for Dtpm {
    type Error = Error;

    fn try_from(p: DualMatrix) -> Result<Self> {
        Dtpm::new(p)
    }
}

impl From<Dtpm> for DualMatrix {
    fn from(d: Dtpm) -> Self {
        d.p
    }
}

impl TryFrom<MatrixFile> for Dtpm {
    type Error = Error;

    fn try_from(f: MatrixFile) -> Result<Self> {
        Dtpm::new(f.to_dual()?)
    }
}

impl From<Dtpm> for MatrixFile {
    fn from(d: Dtpm) -> Self {
        MatrixFile::dual(&d.p)
    }
}

fn check_dtpm(p: &DualMatrix, tol: f64) -> Result<()> {
    check_tpm(p.s(), tol)?;
    for (c, col) in p.i().column_iter().enumerate() {
        let sum = col.sum();
        if sum.abs() > tol {
            return Err(Error::InvalidTpm(format!(
                "infinitesimal column {c} sums to {sum}"
            )));
        }
    }
    for (idx, (&s, &i)) in p.s().iter().zip(p.i().iter()).enumerate() {
        if s == 0.0 && i < -tol {
            let (r, c) = (idx % p.nrows(), idx / p.nrows());
            return Err(Error::InvalidTpm(format!(
                "negative infinitesimal entry {i} at zero standard entry ({r}, {c})"
            )));
        }
    }
    Ok(())
}

/// Effective information `EI(P) = (1/n)⟨P, log₂P − log₂((1/n)P𝟙𝟙ᵀ)⟩` in bits.
pub fn ei(p: &Tpm) -> f64 {
    ei_matrix(&p.p)
}

/// [`ei`] on an unvalidated non-negative square matrix; zero entries contribute 0.
pub fn ei_matrix(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let nf = n as f64;
    let rows: Vec<f64> = p.row_iter().map(|r| r.sum()).collect();
    let mut total = 0.0;
    for c in 0..p.ncols() {
        for r in 0..n {
            let x = p[(r, c)];
            if x > 0.0 {
                total += x * (x.log2() - (rows[r] / nf).log2());
            }
        }
    }
    total / nf
}

/// Dual effective information `EI_ds + EI_di ε` of a DTPM.
pub fn ei_d(p: &Dtpm) -> DualScalar {
    let (ps, pi) = (p.s(), p.i());
    let n = p.n();
    let nf = n as f64;
    let rows_s: Vec<f64> = ps.row_iter().map(|r| r.sum()).collect();
    let rows_i: Vec<f64> = pi.row_iter().map(|r| r.sum()).collect();
    let mut first = 0.0;
    let mut second = 0.0;
    for c in 0..n {
        for r in 0..n {
            let (s, i) = (ps[(r, c)], pi[(r, c)]);
            if s > 0.0 {
                first += i / LN_2 + i * s.log2() - (s / LN_2) * rows_i[r] / rows_s[r];
            }
            if rows_s[r] > 0.0 {
                second += i * (rows_s[r] / nf).log2();
            }
        }
    }
    DualScalar::new(ei(&p.standard()), (first - second) / nf)
        .expect("EI of a valid DTPM is finite")
}

/// Both characterizations of dynamical reversibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reversibility {
    /// `P⁻¹` exists and is itself a DTPM.
    pub via_inverse: bool,
    /// `P_s` is a permutation matrix and `P_i = O`.
    pub via_permutation: bool,
}

pub fn reversibility(p: &Dtpm, tol: f64) -> Reversibility {
    let via_inverse = match p.dual().inverse() {
        Ok(inv) => inverse_is_dtpm(&inv, tol),
        Err(_) => false,
    };
    let via_permutation = is_permutation(p.s(), tol) && p.i().iter().all(|x| x.abs() <= tol);
    Reversibility {
        via_inverse,
        via_permutation,
    }
}

/// Whether `P⁻¹` is also a DTPM. Computed from the inverse and cross-checked
/// against the permutation characterization.
pub fn is_dynamically_reversible(p: &Dtpm, tol: f64) -> bool {
    let r = reversibility(p, tol);
    debug_assert_eq!(
        r.via_inverse, r.via_permutation,
        "reversibility routes disagree"
    );
    r.via_inverse
}

fn inverse_is_dtpm(inv: &DualMatrix, tol: f64) -> bool {
    let (s, i) = (inv.s(), inv.i());
    let stochastic = s.iter().all(|&x| x >= -tol)
        && s.column_iter().all(|c| (c.sum() - 1.0).abs() <= tol)
        && i.column_iter().all(|c| c.sum().abs() <= tol);
    stochastic && s.iter().zip(i.iter()).all(|(&a, &b)| a.abs() > tol || b >= -tol)
}

fn is_permutation(p: &DMatrix<f64>, tol: f64) -> bool {
    let n = p.nrows();
    if p.iter().any(|&x| x.abs() > tol && (x - 1.0).abs() > tol) {
        return false;
    }
    let ones = |it: &mut dyn Iterator<Item = f64>| it.filter(|x| (x - 1.0).abs() <= tol).count();
    (0..n).all(|c| ones(&mut p.column(c).iter().copied()) == 1)
        && (0..n).all(|r| ones(&mut p.row(r).iter().copied()) == 1)
}

/// Five blocks `far – near – bar – near – far` coupled in a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DumbbellConfig {
    pub far_weight: usize,
    pub near_weight: usize,
    pub bar: usize,
    pub seed: u64,
    /// Fraction of entries between adjacent blocks that are nonzero.
    pub coupling_density: f64,
    /// Nonzero couplings are `Uniform(0, coupling_scale)` before normalization.
    pub coupling_scale: f64,
}

impl Default for DumbbellConfig {
    fn default() -> Self {
        DumbbellConfig {
            far_weight: 25,
            near_weight: 15,
            bar: 5,
            seed: 0,
            coupling_density: 0.1,
            coupling_scale: 0.05,
        }
    }
}

impl DumbbellConfig {
    pub fn block_sizes(&self) -> [usize; 5] {
        [
            self.far_weight,
            self.near_weight,
            self.bar,
            self.near_weight,
            self.far_weight,
        ]
    }

    pub fn n(&self) -> usize {
        self.block_sizes().iter().sum()
    }

    /// Block index of every state.
    pub fn block_labels(&self) -> Vec<usize> {
        self.block_sizes()
            .iter()
            .enumerate()
            .flat_map(|(b, &len)| std::iter::repeat(b).take(len))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_sizes().contains(&0) {
            return Err(Error::Domain("dumbbell block sizes must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.coupling_density) {
            return Err(Error::out_of_range(
                "coupling_density",
                self.coupling_density,
                "[0, 1]",
            ));
        }
        if !(self.coupling_scale >= 0.0 && self.coupling_scale.is_finite()) {
            return Err(Error::out_of_range(
                "coupling_scale",
                self.coupling_scale,
                "[0, ∞)",
            ));
        }
        Ok(())
    }
}

/// Random dumbbell chain: dense `Uniform(0, 1)` transitions inside each block,
/// sparse weak couplings between adjacent blocks, columns normalized.
pub fn dumbbell_generate(cfg: &DumbbellConfig) -> Result<Tpm> {
    cfg.validate()?;
    let sizes = cfg.block_sizes();
    let mut starts = vec![0];
    for s in sizes {
        starts.push(starts.last().unwrap() + s);
    }
    let n = cfg.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = DMatrix::zeros(n, n);
    for b in 0..5 {
        for c in starts[b]..starts[b + 1] {
            for r in starts[b]..starts[b + 1] {
                w[(r, c)] = rng.random::<f64>();
            }
        }
    }
    for b in 0..4 {
        let (lo, mid, hi) = (starts[b], starts[b + 1], starts[b + 2]);
        for (rows, cols) in [(lo..mid, mid..hi), (mid..hi, lo..mid)] {
            for c in cols {
                for r in rows.clone() {
                    if rng.random_bool(cfg.coupling_density) {
                        w[(r, c)] = cfg.coupling_scale * rng.random::<f64>();
                    }
                }
            }
        }
    }
    for c in 0..n {
        if w.column(c).sum() == 0.0 {
            w[(c, c)] = 1.0;
        }
    }
    Tpm::from_weights(w)
}

/// `Uniform(0, 1)` weights normalized to a probability vector.
pub fn random_probability_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let sum = x.sum();
    if sum == 0.0 {
        x.fill(1.0 / n as f64);
    } else {
        x /= sum;
    }
    x
}

/// `x₁, …, x_{T+2}` with `x_{t+1} = M x_t`.
pub fn simulate(m: &Tpm, x1: &DVector<f64>, t: usize) -> Result<Vec<DVector<f64>>> {
    if x1.len() != m.n() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, chain has {} states",
            x1.len(),
            m.n()
        )));
    }
    if x1.iter().any(|&x| !(x >= 0.0 && x.is_finite())) || (x1.sum() - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Domain("initial state is not a probability vector".into()));
    }
    let mut xs = Vec::with_capacity(t + 2);
    xs.push(x1.clone());
    for _ in 0..t + 1 {
        let next = m.matrix() * xs.last().unwrap();
        xs.push(next);
    }
    Ok(xs)
}

/// Degree of vague causal emergence
/// `ΔΓ_p(k) = (1/k)‖P‖_{(k,p)}^p − (1/n)‖P‖_{S_p}^p`.
pub fn delta_gamma(p: &Tpm, k: usize, pw: f64) -> Result<f64> {
    let sigma = linalg::svd_sorted(p.matrix()).sigma;
    delta_gamma_from_sigma(sigma.as_slice(), k, pw)
}

/// [`delta_gamma`] from precomputed singular values in descending order.
pub fn delta_gamma_from_sigma(sigma: &[f64], k: usize, pw: f64) -> Result<f64> {
    let n = sigma.len();
    if k == 0 || k > n {
        return Err(Error::out_of_range("k", k, format!("1..={n}")));
    }
    if !(1.0..2.0).contains(&pw) {
        return Err(Error::out_of_range("p", pw, "[1, 2)"));
    }
    let lead: f64 = sigma[..k].iter().map(|s| s.powf(pw)).sum();
    let all: f64 = sigma.iter().map(|s| s.powf(pw)).sum();
    Ok(lead / k as f64 - all / n as f64)
}
