mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use common::*;
use dualce::markov::{Dtpm, Tpm};
use dualce::matrix_norms::{dmnorm, dual_le_approx, MatrixNormKind, NormEvaluator};
use dualce::svd::{cdsvd, DEFAULT_GROUP_TOL as TOL};
use dualce::vector_norms::{dvnorm, dvnorm_elementwise, VectorNormKind};
use dualce::{DualMatrix, DualVector};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn dual_matrix(seed: u64, m: usize, n: usize, family: u8) -> DualMatrix {
    let mut rng = rng(seed);
    match family % 3 {
        0 => random_dual(&mut rng, m, n),
        1 => engineered_dual(&mut rng, m, n, 0),
        _ => engineered_dual(&mut rng, m, n, 1.min(m.min(n) - 1)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unitary_invariance(seed in any::<u64>(), m in 2usize..=7, n in 2usize..=6, family in 0u8..3, p in 1.05f64..4.0) {
        let x = dual_matrix(seed, m, n, family);
        let u = DualMatrix::random_orthogonal(m, seed ^ 1).unwrap();
        let v = DualMatrix::random_orthogonal(n, seed ^ 2).unwrap();
        let y = u.matmul(&x).unwrap().matmul(&v).unwrap();
        let k = 1 + (seed as usize) % m.min(n);
        for kind in [
            MatrixNormKind::KyFanPK { k, p },
            MatrixNormKind::KyFanK { k },
            MatrixNormKind::Spectral,
            MatrixNormKind::SchattenP { p },
            MatrixNormKind::Nuclear,
            MatrixNormKind::Frobenius,
        ] {
            let a = dmnorm(&x, kind, TOL).unwrap();
            let b = dmnorm(&y, kind, TOL).unwrap();
            prop_assert!(close(a.s(), b.s(), 1e-9) && close(a.i(), b.i(), 1e-9), "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn ky_fan_is_norm_of_leading_dual_singular_values(seed in any::<u64>(), m in 2usize..=7, n in 2usize..=6, p in 1.05f64..4.0) {
        let mut rng = rng(seed);
        let a = engineered_dual_compact(&mut rng, m, n, (seed % 2) as usize);
        let f = cdsvd(&a, TOL);
        prop_assert!(f.residual <= 1e-8);
        for k in 1..=f.rank() {
            let head = f.s.head(k);
            let kf = dmnorm(&a, MatrixNormKind::KyFanPK { k, p }, TOL).unwrap();
            let v = dvnorm(&head, VectorNormKind::P(p)).unwrap();
            prop_assert!(close(kf.s(), v.s(), 1e-10) && close(kf.i(), v.i(), 1e-10));
            let kf1 = dmnorm(&a, MatrixNormKind::KyFanK { k }, TOL).unwrap();
            let v1 = dvnorm(&head, VectorNormKind::One).unwrap();
            prop_assert!(close(kf1.s(), v1.s(), 1e-10) && close(kf1.i(), v1.i(), 1e-10));
        }
    }

    #[test]
    fn ky_fan_standard_part_grows_with_k(seed in any::<u64>(), m in 2usize..=7, n in 2usize..=6, p in 1.05f64..4.0) {
        let a = dual_matrix(seed, m, n, (seed % 3) as u8);
        let ev = NormEvaluator::new(&a, TOL);
        let mut last = 0.0;
        for k in 1..=m.min(n) {
            let (v, _) = ev.ky_fan_pk(k, p).unwrap();
            prop_assert!(v.s() >= last - 1e-12);
            last = v.s();
        }
        let schatten = ev.eval(MatrixNormKind::SchattenP { p }).unwrap();
        prop_assert!(close(last, schatten.s(), 1e-12));
    }

    #[test]
    fn closed_form_matches_elementwise_dual_arithmetic(xs in prop::collection::vec(0.1f64..3.0, 1..8), signs in any::<u8>(), seed in any::<u64>(), p in 1.05f64..4.0) {
        let mut rng = rng(seed);
        let s = DVector::from_fn(xs.len(), |j, _| if signs >> (j % 8) & 1 == 1 { -xs[j] } else { xs[j] });
        let x = DualVector::new(s, gauss_vec(&mut rng, xs.len())).unwrap();
        for kind in [VectorNormKind::One, VectorNormKind::P(p), VectorNormKind::Infinity] {
            let a = dvnorm(&x, kind).unwrap();
            let b = dvnorm_elementwise(&x, kind).unwrap();
            prop_assert!(close(a.s(), b.s(), 1e-12) && close(a.i(), b.i(), 1e-10), "{kind:?}: {a} vs {b}");
        }
    }

    #[test]
    fn dtpm_schatten_norm_bounded_by_permutation_value(seed in any::<u64>(), n in 2usize..=9, sparsity in 0.0f64..0.9, p in 1.0f64..=2.0) {
        let mut rng = rng(seed);
        let q = random_dtpm(&mut rng, n, sparsity);
        let kind = if p == 1.0 { MatrixNormKind::Nuclear } else { MatrixNormKind::SchattenP { p } };
        let v = dmnorm(q.dual(), kind, TOL).unwrap();
        let bound = dualce::DualScalar::real((n as f64).powf(1.0 / p));
        prop_assert!(dual_le_approx(v, bound, 1e-10), "{v} > {bound}");
    }
}

#[test]
fn permutation_with_admissible_direction_has_nonpositive_infinitesimal_norm() {
    let mut rng = rng(5);
    for n in 2..=9 {
        let ps = Tpm::permutation(&random_permutation(&mut rng, n)).unwrap().into_matrix();
        let pi = admissible_infinitesimal(&mut rng, &ps, 0.3);
        let q = Dtpm::from_parts(ps, pi).unwrap();
        for p in [1.3, 1.9, 2.0] {
            let v = dmnorm(q.dual(), MatrixNormKind::SchattenP { p }, TOL).unwrap();
            assert!((v.s() - (n as f64).powf(1.0 / p)).abs() < 1e-12);
            assert!(v.i() <= 1e-12, "n={n} p={p}: {v}");
        }
    }
}

#[test]
fn rank_deficient_ky_fan_uses_null_block() {
    // A_s = diag(2, 0), A_i = [[0, 0], [0, -3]]: σ(A_s + tA_i) = (2, 3t)
    let a = DualMatrix::new(
        nalgebra::DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]),
        nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -3.0]),
    )
    .unwrap();
    let v = dmnorm(&a, MatrixNormKind::KyFanK { k: 2 }, TOL).unwrap();
    assert!(v.s() == 2.0 && (v.i() - 3.0).abs() < 1e-14);
    let ev = NormEvaluator::new(&a, TOL);
    let (w, split) = ev.ky_fan_pk(2, 1.5).unwrap();
    assert!(split.zero_branch);
    assert_eq!(w.s(), 2.0);
    assert!(w.i().abs() < 1e-15);
}
