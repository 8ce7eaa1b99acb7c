mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use qrfh::linalg::{
    column_norms, frobenius_error, pivoted_qr_approx, qr_approx_with_basis, qr_reconstruct, truncated_svd,
};
use qrfh::{Error, IQMatrix, C64};

fn orthonormality_error(q: &IQMatrix) -> f64 {
    let g = q.adjoint().matmul(q).unwrap();
    g.sub(&IQMatrix::identity(q.cols())).unwrap().frobenius_norm()
}

#[test]
fn exact_rank_matrices_reconstruct() {
    let mut r = rng(11);
    for (rows, cols, rank) in [(96, 64, 4), (512, 64, 12), (30, 8, 8), (12, 12, 1)] {
        let a = exact_rank(&mut r, rows, cols, rank);
        let f = pivoted_qr_approx(&a, rank).unwrap();
        let err = frobenius_error(&a, &qr_reconstruct(&f).unwrap()).unwrap();
        assert!(err < 1e-10, "{rows}x{cols} rank {rank}: {err:e}");
        assert!(orthonormality_error(&f.q) < 1e-12);
    }
}

#[test]
fn rank_deficiency_is_reported() {
    let mut r = rng(12);
    let a = exact_rank(&mut r, 40, 10, 3);
    match pivoted_qr_approx(&a, 5) {
        Err(Error::RankDeficient { step, .. }) => assert_eq!(step, 3),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn singular_values_match_reference() {
    let mut r = rng(13);
    for (rows, cols) in [(50, 20), (20, 50), (64, 64), (548, 16)] {
        let a = random_matrix(&mut r, rows, cols);
        let k = rows.min(cols);
        let f = truncated_svd(&a, k).unwrap();
        let reference = reference_singular_values(&a);
        for (got, want) in f.s.iter().zip(&reference) {
            assert!((got - want).abs() <= 1e-10 * reference[0], "{rows}x{cols}: {got} vs {want}");
        }
        assert!(orthonormality_error(&f.u) < 1e-10);
        assert!(orthonormality_error(&f.v) < 1e-10);
        assert!(frobenius_error(&a, &f.reconstruct()).unwrap() < 1e-10);
    }
}

/// Eigenvalues of `A^H A` via the real symmetric embedding `[[X, -Y], [Y, X]]`,
/// where `A^H A = X + jY`. Each eigenvalue appears twice.
fn gram_eigenvalues(a: &IQMatrix) -> Vec<f64> {
    let g = a.adjoint().matmul(a).unwrap();
    let n = g.rows();
    let emb = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = g.get(i % n, j % n);
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(emb).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev.into_iter().step_by(2).collect()
}

#[test]
fn singular_values_match_gram_eigenvalues() {
    let mut r = rng(14);
    let a = random_matrix(&mut r, 40, 12);
    let f = truncated_svd(&a, 12).unwrap();
    for (s, ev) in f.s.iter().zip(gram_eigenvalues(&a)) {
        assert!((s * s - ev).abs() < 1e-9 * ev.max(1.0), "{} vs {ev}", s * s);
    }
}

#[test]
fn pivot_follows_original_column_norms() {
    let mut r = rng(15);
    let a = random_matrix(&mut r, 30, 10);
    let norms = column_norms(&a).unwrap();
    let f = pivoted_qr_approx(&a, 4).unwrap();
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    assert_eq!(&f.perm[..4], &order[..4]);
    // the rest keep original order
    let mut rest: Vec<usize> = order[4..].to_vec();
    rest.sort();
    assert_eq!(&f.perm[4..], &rest[..]);
}

#[test]
fn explicit_basis_matches_pivoted_choice() {
    let mut r = rng(16);
    let a = random_matrix(&mut r, 30, 10);
    let f = pivoted_qr_approx(&a, 3).unwrap();
    let g = qr_approx_with_basis(&a, &f.perm[..3]).unwrap();
    let (x, y) = (qr_reconstruct(&f).unwrap(), qr_reconstruct(&g).unwrap());
    assert!(frobenius_error(&x, &y).unwrap() < 1e-13);
    assert!(qr_approx_with_basis(&a, &[1, 1]).is_err());
}

fn matrix_strategy() -> impl Strategy<Value = (IQMatrix, usize)> {
    (2usize..40, 2usize..16, any::<u64>()).prop_flat_map(|(rows, cols, seed)| {
        let max = rows.min(cols);
        (Just(random_matrix(&mut rng(seed), rows, cols)), 1..=max)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_factors_are_well_formed((a, l) in matrix_strategy()) {
        let f = pivoted_qr_approx(&a, l).unwrap();
        prop_assert_eq!(f.q.shape(), (a.rows(), l));
        prop_assert_eq!(f.r.shape(), (l, a.cols()));
        prop_assert!(orthonormality_error(&f.q) < 1e-12);
        let mut p = f.perm.clone();
        p.sort();
        prop_assert_eq!(p, (0..a.cols()).collect::<Vec<_>>());
        // R restricted to the basis columns is upper triangular
        for i in 0..l {
            for j in 0..i {
                prop_assert!(f.r.get(i, j).norm() < 1e-12 * a.frobenius_norm());
            }
        }
    }

    #[test]
    fn qr_error_is_bounded_by_svd_and_monotone((a, _l) in matrix_strategy()) {
        let s = reference_singular_values(&a);
        let max = a.rows().min(a.cols());
        let mut prev = f64::INFINITY;
        for l in 1..=max {
            let err = frobenius_error(&a, &qr_reconstruct(&pivoted_qr_approx(&a, l).unwrap()).unwrap()).unwrap();
            prop_assert!(err >= eckart_young_error(&s, l) - 1e-12);
            prop_assert!(err <= prev + 1e-12);
            prev = err;
        }
        prop_assert!(prev < 1e-10);
    }

    #[test]
    fn qr_is_scale_equivariant((a, l) in matrix_strategy(), scale in 1e-3f64..1e3) {
        let x = qr_reconstruct(&pivoted_qr_approx(&a, l).unwrap()).unwrap();
        let y = qr_reconstruct(&pivoted_qr_approx(&a.scale(scale), l).unwrap()).unwrap();
        prop_assert!(frobenius_error(&x.scale(scale), &y).unwrap() < 1e-10);
    }

    #[test]
    fn svd_truncation_is_optimal((a, k) in matrix_strategy()) {
        let s = reference_singular_values(&a);
        let f = truncated_svd(&a, k).unwrap();
        let err = frobenius_error(&a, &f.reconstruct()).unwrap();
        prop_assert!((err - eckart_young_error(&s, k)).abs() < 1e-9);
    }
}

#[test]
fn zero_matrix_is_rank_deficient_not_nan() {
    let a = IQMatrix::zeros(5, 3);
    assert!(matches!(pivoted_qr_approx(&a, 1), Err(Error::RankDeficient { step: 0, .. })));
    let f = truncated_svd(&a, 2).unwrap();
    assert!(f.s.iter().all(|&v| v == 0.0));
    assert!(f.reconstruct().is_finite());
}

#[test]
fn non_finite_input_rejected() {
    let mut a = IQMatrix::identity(3);
    a.set(1, 1, C64::new(f64::NAN, 0.0));
    assert!(pivoted_qr_approx(&a, 1).is_err());
}
