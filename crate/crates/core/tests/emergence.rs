mod common;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use common::*;
use dualce::cluster::{coarse_grain, CoarseGrainMethod, CoarseGrainOptions};
use dualce::markov::{delta_gamma, ei, ei_d, is_dynamically_reversible, DumbbellConfig, Dtpm, Tpm};
use dualce::pipeline::{analyze, PipelineConfig};
use dualce::svd::{dual_singular_values, DEFAULT_GROUP_TOL as TOL};
use dualce::sweep::{detect_k, norm_sweep, SweepRecord, SweepTable};
use dualce::vector_norms::{dvnorm, VectorNormKind};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ei_is_bounded_and_matches_entropy_form(seed in any::<u64>(), n in 1usize..=10, sparsity in 0.0f64..0.9) {
        let mut rng = rng(seed);
        let p = Tpm::new(random_stochastic(&mut rng, n, sparsity)).unwrap();
        let v = ei(&p);
        prop_assert!(v >= -1e-12 && v <= (n as f64).log2() + 1e-12);
        prop_assert!((v - ei_entropy_form(p.matrix())).abs() <= 1e-12);
    }

    #[test]
    fn ei_d_standard_part_is_ei(seed in any::<u64>(), n in 2usize..=8, sparsity in 0.0f64..0.9) {
        let mut rng = rng(seed);
        let q = random_dtpm(&mut rng, n, sparsity);
        prop_assert!((ei_d(&q).s() - ei(&q.standard())).abs() <= 1e-12);
    }

    #[test]
    fn perturbed_permutations_are_not_reversible(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = rng(seed);
        let ps = Tpm::permutation(&random_permutation(&mut rng, n)).unwrap().into_matrix();
        prop_assert!(is_dynamically_reversible(&Dtpm::from_parts(ps.clone(), DMatrix::zeros(n, n)).unwrap(), 1e-12));
        let pi = admissible_infinitesimal(&mut rng, &ps, 0.2);
        prop_assert!(!is_dynamically_reversible(&Dtpm::from_parts(ps, pi).unwrap(), 1e-12));
    }
}

#[test]
fn sweep_agrees_with_dual_singular_values() {
    for seed in 0..6 {
        let mut rng = rng(seed);
        let q = random_dtpm(&mut rng, 8, 0.0);
        let table = norm_sweep(&q, &[1.0, 1.3, 1.9], TOL).unwrap();
        for p in [1.0, 1.3, 1.9] {
            let col = table.column(p);
            assert!(col.windows(2).all(|w| w[1].standard >= w[0].standard - 1e-12));
            for r in &col {
                let sigma = dual_singular_values(q.dual(), r.k, TOL).unwrap();
                let kind = if p == 1.0 { VectorNormKind::One } else { VectorNormKind::P(p) };
                let v = dvnorm(&sigma, kind).unwrap();
                assert!((v.s() - r.standard).abs() < 1e-10 && (v.i() - r.infinitesimal).abs() < 1e-9);
                let dg = delta_gamma(&q.standard(), r.k, p).unwrap();
                assert!((dg - r.delta_gamma).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn detection_ignores_the_scale_of_the_infinitesimal_part() {
    for seed in 0..6 {
        let mut rng = rng(seed);
        let q = random_dtpm(&mut rng, 8, 0.2);
        let base = detect_k(&norm_sweep(&q, &[1.3, 1.6, 1.9], TOL).unwrap()).unwrap();
        for c in [0.25, 4.0] {
            let scaled = Dtpm::from_parts(q.s().clone(), q.i() * c).unwrap();
            let d = detect_k(&norm_sweep(&scaled, &[1.3, 1.6, 1.9], TOL).unwrap()).unwrap();
            assert_eq!(d.per_p, base.per_p, "seed {seed}, c = {c}");
        }
    }
}

#[test]
fn detection_finds_an_engineered_peak() {
    let infinitesimal = [0.1, 0.4, 0.9, 0.3, -0.2, 0.0];
    let p_list = vec![1.3, 1.6, 1.9];
    let mut records = Vec::new();
    for &p in &p_list {
        for (j, &v) in infinitesimal.iter().enumerate() {
            records.push(SweepRecord { k: j + 1, p, standard: (j + 1) as f64, infinitesimal: v * p, delta_gamma: 0.0 });
        }
    }
    let table = SweepTable { records, p_list, rank: 6, group_tol: TOL, provenance: serde_json::Value::Null };
    let d = detect_k(&table).unwrap();
    assert_eq!(d.k_star, 3);
    assert!(d.unanimous && !d.degenerate);
}

#[test]
fn delta_gamma_extremes() {
    let perm = Tpm::permutation(&[2, 0, 1, 3]).unwrap();
    let uniform = Tpm::uniform(4);
    for p in [1.0, 1.3, 1.9] {
        for k in 1..=4 {
            assert!(delta_gamma(&perm, k, p).unwrap().abs() < 1e-12);
        }
        assert!((delta_gamma(&uniform, 1, p).unwrap() - 0.75).abs() < 1e-12);
    }
}

fn block_diagonal(rng: &mut rand_chacha::ChaCha8Rng, sizes: &[usize]) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut w = DMatrix::zeros(n, n);
    let mut start = 0;
    for &b in sizes {
        for c in start..start + b {
            for r in start..start + b {
                w[(r, c)] = 1.0 + 0.1 * rng.random::<f64>();
            }
        }
        start += b;
    }
    Tpm::from_weights(w).unwrap().into_matrix()
}

#[test]
fn block_diagonal_chain_is_grouped_by_block() {
    let mut rng = rng(21);
    let sizes = [3, 4, 3];
    let ps = block_diagonal(&mut rng, &sizes);
    let pi = supported_infinitesimal(&mut rng, &ps, 0.01);
    let q = Dtpm::from_parts(ps, pi).unwrap();
    let expected: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &s)| std::iter::repeat_n(b, s)).collect();
    for method in [CoarseGrainMethod::WithInfinitesimal, CoarseGrainMethod::WithoutInfinitesimal] {
        let cg = coarse_grain(&q, 3, method, &CoarseGrainOptions::default()).unwrap();
        assert_eq!(cg.labels, expected, "{method:?}");
        assert!((cg.upsilon.matrix() - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((ei(&cg.upsilon) - 3f64.log2()).abs() < 1e-12);
    }
}

#[test]
fn methods_agree_without_infinitesimal_part() {
    for seed in 0..5 {
        let mut rng = rng(seed);
        let ps = random_stochastic(&mut rng, 9, 0.3);
        let q = Dtpm::from_parts(ps, DMatrix::zeros(9, 9)).unwrap();
        let opts = CoarseGrainOptions::default();
        let with = coarse_grain(&q, 3, CoarseGrainMethod::WithInfinitesimal, &opts).unwrap();
        let without = coarse_grain(&q, 3, CoarseGrainMethod::WithoutInfinitesimal, &opts).unwrap();
        assert_eq!(with.labels, without.labels, "seed {seed}");
    }
}

#[test]
fn tiny_configuration_runs_quickly() {
    let cfg = PipelineConfig {
        dumbbell: DumbbellConfig { far_weight: 2, near_weight: 2, bar: 1, ..Default::default() },
        t: 50,
        ..Default::default()
    };
    let start = Instant::now();
    let a = analyze(&cfg).unwrap();
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
    assert_eq!(a.chain.n(), 9);
    assert!(a.k >= 1 && a.k <= a.sweep.rank);
    assert_eq!(a.with_infinitesimal.labels.len(), 9);
}

#[test]
fn dumbbell_chain_shape() {
    let cfg = DumbbellConfig::default();
    let chain = dualce::markov::dumbbell_generate(&cfg).unwrap();
    assert_eq!(chain.n(), 85);
    assert_eq!(cfg.block_sizes(), [25, 15, 5, 15, 25]);
    let labels = cfg.block_labels();
    // no transitions between non-adjacent blocks
    for c in 0..85 {
        for r in 0..85 {
            if labels[r].abs_diff(labels[c]) > 1 {
                assert_eq!(chain.matrix()[(r, c)], 0.0);
            }
        }
    }
    assert_eq!(dualce::markov::dumbbell_generate(&cfg).unwrap(), chain);
}
