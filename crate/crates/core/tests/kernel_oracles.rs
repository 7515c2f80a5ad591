mod common;

use common::*;
use kite_core::kernel::{
    alignment, center_checked, center_kernel, cka, compute_kernel, hsic, resolve_bandwidth, target_kernel, Bandwidth,
    KernelKind,
};
use kite_core::Error;
use rand::Rng;

#[test]
fn linear_on_identity_rows() {
    let k = compute_kernel(&features(&vec![vec![1.0, 0.0], vec![0.0, 1.0]]), KernelKind::Linear).unwrap();
    assert_eq!(dense(&k), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
}

#[test]
fn distance_kernels_on_identical_rows_are_ones() {
    let x = vec![vec![0.3, -1.2, 4.0]; 5];
    for kind in [
        KernelKind::Gaussian(Bandwidth::Fixed(0.7)),
        KernelKind::Gaussian(Bandwidth::Median),
        KernelKind::GaussianUnsquared(Bandwidth::Fixed(2.0)),
        KernelKind::Laplacian(Bandwidth::Median),
    ] {
        let k = compute_kernel(&features(&x), kind).unwrap();
        assert!(k.as_slice().iter().all(|&v| v == 1.0), "{kind}");
    }
}

#[test]
fn linear_random_8x3_double_loop() {
    let x = normal_rows(&mut rng(1), 8, 3);
    let k = compute_kernel(&features(&x), KernelKind::Linear).unwrap();
    assert!(max_abs_diff(&dense(&k), &linear_kernel(&x)) < 1e-12);
}

#[test]
fn kernels_match_double_loop_with_fixed_bandwidth() {
    let mut r = rng(2);
    for _ in 0..100 {
        let n = r.random_range(1..=16);
        let d = r.random_range(1..=8);
        let sigma = r.random_range(0.2..5.0);
        let x = normal_rows(&mut r, n, d);
        let f = features(&x);
        let cases = [
            (KernelKind::Linear, linear_kernel(&x)),
            (KernelKind::Gaussian(Bandwidth::Fixed(sigma)), gaussian_kernel(&x, sigma)),
            (KernelKind::GaussianUnsquared(Bandwidth::Fixed(sigma)), gaussian_unsquared_kernel(&x, sigma)),
            (KernelKind::Laplacian(Bandwidth::Fixed(sigma)), laplacian_kernel(&x, sigma)),
        ];
        for (kind, want) in cases {
            let got = dense(&compute_kernel(&f, kind).unwrap());
            assert!(max_abs_diff(&got, &want) < 1e-12, "{kind} n={n} d={d}");
        }
    }
}

#[test]
fn median_bandwidth() {
    let mut r = rng(3);
    for n in [2, 3, 7, 12] {
        let x = normal_rows(&mut r, n, 4);
        let m = median_distance(&x);
        let f = features(&x);
        let g = resolve_bandwidth(&f, KernelKind::Gaussian(Bandwidth::Median)).unwrap().unwrap();
        assert!((g - m).abs() < 1e-12);
        let k = compute_kernel(&f, KernelKind::Gaussian(Bandwidth::Median)).unwrap();
        assert!(max_abs_diff(&dense(&k), &gaussian_kernel(&x, m)) < 1e-12);
    }
    assert_eq!(resolve_bandwidth(&features(&vec![vec![1.0]]), KernelKind::Linear).unwrap(), None);
}

#[test]
fn invalid_bandwidth() {
    let f = features(&vec![vec![0.0], vec![1.0]]);
    for s in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(
            compute_kernel(&f, KernelKind::Laplacian(Bandwidth::Fixed(s))),
            Err(Error::InvalidBandwidth(_))
        ));
    }
}

#[test]
fn kernel_matrix_invariants() {
    let mut r = rng(4);
    let x = normal_rows(&mut r, 10, 3);
    let f = features(&x);
    for kind in [
        KernelKind::Linear,
        KernelKind::Gaussian(Bandwidth::Median),
        KernelKind::GaussianUnsquared(Bandwidth::Median),
        KernelKind::Laplacian(Bandwidth::Median),
    ] {
        let k = compute_kernel(&f, kind).unwrap();
        let n = k.n();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(k.get(i, j), k.get(j, i));
            }
            if kind != KernelKind::Linear {
                assert_eq!(k.get(i, i), 1.0);
            }
        }
        let c = center_kernel(&k);
        assert!(c.is_centered());
        let tol = 1e-8 * c.frobenius_norm();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| c.get(i, j)).sum();
            let col: f64 = (0..n).map(|j| c.get(j, i)).sum();
            assert!(row.abs() <= tol && col.abs() <= tol);
        }
    }
}

#[test]
fn custom_kernels_are_symmetrised() {
    let k = kernel(&vec![vec![1.0, 2.0], vec![0.0, 1.0]]);
    assert_eq!(dense(&k), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
}

#[test]
fn all_ones_centers_to_zero() {
    let ones = kernel(&vec![vec![1.0; 4]; 4]);
    assert!(center_kernel(&ones).as_slice().iter().all(|&v| v.abs() < 1e-15));
    assert_eq!(center_checked(&ones), Err(Error::DegenerateKernel));
}

#[test]
fn centering_matches_triple_product_and_is_idempotent() {
    let mut r = rng(5);
    let a = normal_rows(&mut r, 6, 6);
    let sym: Mat = (0..6).map(|i| (0..6).map(|j| a[i][j] + a[j][i]).collect()).collect();
    let c = center_kernel(&kernel(&sym));
    assert!(max_abs_diff(&dense(&c), &hkh(&sym)) < 1e-12);
    let cc = center_kernel(&kernel(&dense(&c)));
    assert!(max_abs_diff(&dense(&cc), &dense(&c)) < 1e-12);
}

#[test]
fn alignment_examples() {
    let mut r = rng(6);
    let a = random_psd(&mut r, 5);
    let b = random_psd(&mut r, 5);
    let ka = kernel(&a);
    assert!((alignment(&ka, &ka).unwrap() - 1.0).abs() < 1e-15);
    let scaled: Mat = a.iter().map(|row| row.iter().map(|v| 3.5 * v).collect()).collect();
    assert!((alignment(&ka, &kernel(&scaled)).unwrap() - 1.0).abs() < 1e-15);
    assert!((alignment(&ka, &kernel(&b)).unwrap() - common::alignment(&a, &b)).abs() < 1e-12);
}

#[test]
fn cka_of_perfect_clusters_is_one() {
    let f = features(&vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]);
    let ks = compute_kernel(&f, KernelKind::Linear).unwrap();
    let ky = target_kernel(&labels(&[0, 0, 1, 1]));
    assert!((cka(&ks, &ky).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn cka_equals_normalised_hsic() {
    let mut r = rng(7);
    let a = random_psd(&mut r, 20);
    let b = random_psd(&mut r, 20);
    let (ka, kb) = (kernel(&a), kernel(&b));
    assert!((cka(&ka, &ka).unwrap() - 1.0).abs() < 1e-12);
    assert!((cka(&ka, &kb).unwrap() - common::cka(&a, &b)).abs() < 1e-10);
}

#[test]
fn cka_errors() {
    let ones = kernel(&vec![vec![1.0; 3]; 3]);
    let id = kernel(&vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    assert_eq!(cka(&ones, &id), Err(Error::DegenerateKernel));
    assert!(matches!(cka(&id, &kernel(&vec![vec![1.0; 2]; 2])), Err(Error::ShapeMismatch { .. })));
    assert!(cka(&kernel(&vec![vec![1.0]]), &kernel(&vec![vec![1.0]])).is_err());
}

#[test]
fn hsic_examples() {
    let id2 = kernel(&vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    assert!((hsic(&id2, &id2).unwrap() - 1.0).abs() < 1e-15);
    let mut r = rng(8);
    let k = random_psd(&mut r, 10);
    let l = random_psd(&mut r, 10);
    assert!(hsic(&kernel(&k), &kernel(&vec![vec![1.0; 10]; 10])).unwrap().abs() < 1e-12);
    let got = hsic(&kernel(&k), &kernel(&l)).unwrap();
    let want = common::hsic(&k, &l);
    assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
    assert!(hsic(&kernel(&k), &kernel(&k)).unwrap() >= 0.0);
}

#[test]
fn target_kernel_examples() {
    assert_eq!(dense(&target_kernel(&labels(&[0, 0, 1, 1]))), label_kernel(&[0, 0, 1, 1]));
    assert!(target_kernel(&labels(&[2, 2, 2])).as_slice().iter().all(|&v| v == 1.0));
    assert_eq!(
        dense(&target_kernel(&labels(&[0, 1, 2]))),
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]
    );
}
