//! `(k, p)` sweeps of the dual Ky Fan norms of a DTPM and detection of the
//! classification number `k` at which the infinitesimal part peaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{delta_gamma_from_sigma, Dtpm};
use crate::matrix_norms::NormEvaluator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub k: usize,
    pub p: f64,
    pub standard: f64,
    pub infinitesimal: f64,
    pub delta_gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    /// Ordered by `p` (in `p_list` order), then by `k`.
    pub records: Vec<SweepRecord>,
    pub p_list: Vec<f64>,
    /// Numerical rank of `P_s`; `k` runs over `1..=rank`.
    pub rank: usize,
    pub group_tol: f64,
    #[serde(default)]
    pub provenance: serde_json::Value,
}

impl SweepTable {
    /// Records for one `p`, ordered by `k`.
    pub fn column(&self, p: f64) -> Vec<SweepRecord> {
        self.records.iter().filter(|r| r.p == p).copied().collect()
    }
}

/// Dual Ky Fan norms `‖P‖_{(k,p)}` for every `k ≤ rank(P_s)` and `p` in
/// `p_list` (the Ky Fan k-norm for `p = 1`), with `ΔΓ_p(k)` of `P_s`.
pub fn norm_sweep(p: &Dtpm, p_list: &[f64], group_tol: f64) -> Result<SweepTable> {
    if p_list.is_empty() {
        return Err(Error::Domain("empty p list".into()));
    }
    for (j, &pw) in p_list.iter().enumerate() {
        if !(1.0..2.0).contains(&pw) {
            return Err(Error::out_of_range("p", pw, "[1, 2)"));
        }
        if p_list[..j].contains(&pw) {
            return Err(Error::Domain(format!("p = {pw} listed twice")));
        }
    }
    let ev = NormEvaluator::new(p.dual(), group_tol);
    let sigma = ev.singular_values().as_slice().to_vec();
    let rank = ev.rank();
    let mut records = Vec::with_capacity(rank * p_list.len());
    for &pw in p_list {
        for k in 1..=rank {
            let (value, _) = if pw == 1.0 {
                ev.ky_fan_k(k)?
            } else {
                ev.ky_fan_pk(k, pw)?
            };
            records.push(SweepRecord {
                k,
                p: pw,
                standard: value.s(),
                infinitesimal: value.i(),
                delta_gamma: delta_gamma_from_sigma(&sigma, k, pw)?,
            });
        }
    }
    Ok(SweepTable {
        records,
        p_list: p_list.to_vec(),
        rank,
        group_tol,
        provenance: serde_json::Value::Null,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Most frequent per-`p` argmax (smallest `k` among equally frequent ones).
    pub k_star: usize,
    /// `(p, argmax_k)` in `p_list` order.
    pub per_p: Vec<(f64, usize)>,
    pub unanimous: bool,
    /// Some infinitesimal column is constant in `k`, so its argmax is only a tie-break.
    pub degenerate: bool,
}

/// Per-`p` argmax over `k` of the infinitesimal part (ties to the smallest
/// `k`) and their mode.
pub fn detect_k(table: &SweepTable) -> Result<Detection> {
    if table.records.is_empty() {
        return Err(Error::Domain("empty sweep table".into()));
    }
    let mut per_p = Vec::with_capacity(table.p_list.len());
    let mut degenerate = false;
    for &pw in &table.p_list {
        let col = table.column(pw);
        if col.is_empty() {
            return Err(Error::Domain(format!("sweep has no records for p = {pw}")));
        }
        let mut best = col[0];
        for r in &col[1..] {
            if r.infinitesimal > best.infinitesimal {
                best = *r;
            }
        }
        let lo = col.iter().map(|r| r.infinitesimal).fold(f64::INFINITY, f64::min);
        let scale = 1.0 + best.infinitesimal.abs().max(lo.abs());
        degenerate |= best.infinitesimal - lo <= 1e-12 * scale;
        per_p.push((pw, best.k));
    }
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &(_, k) in &per_p {
        match counts.iter_mut().find(|(kk, _)| *kk == k) {
            Some(entry) => entry.1 += 1,
            None => counts.push((k, 1)),
        }
    }
    let k_star = counts
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|&(k, _)| k)
        .expect("nonempty");
    Ok(Detection {
        k_star,
        unanimous: counts.len() == 1,
        per_p,
        degenerate,
    })
}
