mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::*;
use dualce::fit::{
    build_snapshots, fit_dtpm, fit_standard, project_simplex, project_zero_sum_masked, FitOptions,
};
use dualce::markov::{simulate, Tpm};

fn vector(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0f64..5.0, len).prop_map(DVector::from_vec)
}

fn masked() -> impl Strategy<Value = (DVector<f64>, Vec<bool>)> {
    (1usize..=8).prop_flat_map(|n| {
        (
            prop::collection::vec(-5.0f64..5.0, n).prop_map(DVector::from_vec),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

proptest! {
    #[test]
    fn simplex_projection_is_feasible_idempotent_and_nonexpansive(v in vector(1..=8), w in vector(1..=8)) {
        let u = project_simplex(&v);
        prop_assert!((u.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(u.iter().all(|&x| x >= 0.0));
        prop_assert!((project_simplex(&u) - &u).amax() <= 1e-12);
        if v.len() == w.len() {
            let d = (project_simplex(&w) - &u).norm();
            prop_assert!(d <= (&w - &v).norm() + 1e-12);
        }
    }

    #[test]
    fn simplex_projection_satisfies_optimality(v in vector(1..=8)) {
        // u − v = −λ𝟙 + μ with μ ≥ 0 vanishing on the support of u
        let u = project_simplex(&v);
        let support: Vec<usize> = (0..u.len()).filter(|&j| u[j] > 0.0).collect();
        let lambda = v[support[0]] - u[support[0]];
        for j in 0..u.len() {
            if u[j] > 0.0 {
                prop_assert!((v[j] - u[j] - lambda).abs() <= 1e-10);
            } else {
                prop_assert!(v[j] <= lambda + 1e-10);
            }
        }
    }

    #[test]
    fn masked_projection_is_feasible_idempotent_and_nonexpansive((v, mask) in masked(), shift in -1.0f64..1.0) {
        let u = project_zero_sum_masked(&v, &mask);
        prop_assert!(u.sum().abs() <= 1e-12);
        prop_assert!(u.iter().zip(&mask).all(|(&x, &m)| !m || x >= 0.0));
        prop_assert!((project_zero_sum_masked(&u, &mask) - &u).amax() <= 1e-12);
        let w = v.map(|x| x + shift * x.sin());
        let d = (project_zero_sum_masked(&w, &mask) - &u).norm();
        prop_assert!(d <= (&w - &v).norm() + 1e-12);
    }

    #[test]
    fn unmasked_projection_subtracts_the_mean(v in vector(1..=8)) {
        let u = project_zero_sum_masked(&v, &vec![false; v.len()]);
        let mean = v.mean();
        prop_assert!((u - v.map(|x| x - mean)).amax() <= 1e-12);
    }
}

fn trajectory(m: &Tpm, seed: u64, t: usize) -> Vec<DVector<f64>> {
    let mut rng = rng(seed);
    let x1 = DVector::from_fn(m.n(), |_, _| rng.random_range(0.1..1.0));
    let x1 = &x1 / x1.sum();
    simulate(m, &x1, t).unwrap()
}

use rand::Rng;

#[test]
fn objective_history_never_increases() {
    for seed in 0..8 {
        let mut rng = rng(seed);
        let m = Tpm::new(random_stochastic(&mut rng, 6, 0.3)).unwrap();
        let snap = build_snapshots(&trajectory(&m, seed, 30)).unwrap();
        let (_, info) = fit_standard(snap.x.s(), snap.y.s(), &FitOptions::default()).unwrap();
        for w in info.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-18, "seed {seed}: {} → {}", w[0], w[1]);
        }
    }
}

#[test]
fn recovers_generating_chain_from_exciting_data() {
    // Independent starts make X_s full rank, so M is the unique minimizer.
    let mut rng = rng(3);
    let n = 4;
    let m = Tpm::new(random_stochastic(&mut rng, n, 0.0)).unwrap();
    let mut xs = DMatrix::zeros(n, 3 * n);
    for c in 0..3 * n {
        let x = DVector::from_fn(n, |_, _| rng.random_range(0.0..1.0));
        xs.set_column(c, &(&x / x.sum()));
    }
    let ys = m.matrix() * &xs;
    let (p, info) = fit_standard(&xs, &ys, &FitOptions::default()).unwrap();
    assert!(info.converged);
    assert!((p.matrix() - m.matrix()).amax() < 1e-6, "{}", (p.matrix() - m.matrix()).amax());
}

#[test]
fn two_state_fit_matches_grid_search() {
    for seed in 0..10 {
        let mut rng = rng(100 + seed);
        let xs = DMatrix::from_fn(2, 2, |_, _| rng.random_range(0.0..1.0));
        let ys = DMatrix::from_fn(2, 2, |_, _| rng.random_range(0.0..1.0));
        let (p, info) = fit_standard(&xs, &ys, &FitOptions::default()).unwrap();
        let objective = |p: &DMatrix<f64>| 0.5 * (&ys - p * &xs).norm_squared();
        let mut best = f64::INFINITY;
        for a in 0..=1000 {
            for b in 0..=1000 {
                let (a, b) = (a as f64 * 1e-3, b as f64 * 1e-3);
                let q = DMatrix::from_row_slice(2, 2, &[a, b, 1.0 - a, 1.0 - b]);
                best = best.min(objective(&q));
            }
        }
        assert!(objective(p.matrix()) <= best + 1e-12, "seed {seed}");
        assert!(info.projected_gradient <= 1e-6 * (1.0 + info.gradient_norm));
    }
}

#[test]
fn dtpm_fit_satisfies_stationarity_and_admissibility() {
    let mut rng = rng(8);
    let m = Tpm::new(random_stochastic(&mut rng, 7, 0.5)).unwrap();
    let snap = build_snapshots(&trajectory(&m, 8, 40)).unwrap();
    let rep = fit_dtpm(&snap, &FitOptions::default()).unwrap();
    let (s, i) = (rep.p.s(), rep.p.i());
    for c in 0..7 {
        assert!(i.column(c).sum().abs() <= 1e-12);
        for r in 0..7 {
            if s[(r, c)] == 0.0 {
                assert!(i[(r, c)] >= 0.0);
            }
        }
    }
    if rep.converged.0 && rep.converged.1 {
        assert!(rep.kkt_residual.0 <= 1e-4 && rep.kkt_residual.1 <= 1e-4);
    }
}
