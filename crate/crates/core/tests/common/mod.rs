//! Independent reference implementations used as test oracles. Everything
//! here is written from the textbook definitions with dense `Vec<Vec<f64>>`
//! matrices and no shortcuts.

#![allow(dead_code)]

use kite_core::kernel::KernelMatrix;
use kite_core::{FeatureMatrix, LabelVector, Provenance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Mat {
    (0..n).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect()
}

pub fn features(rows: &Mat) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows, Provenance::Raw).unwrap()
}

pub fn rows_of(f: &FeatureMatrix) -> Mat {
    f.iter_rows().map(<[f64]>::to_vec).collect()
}

pub fn labels(l: &[u32]) -> LabelVector {
    LabelVector::from_labels(l.to_vec()).unwrap()
}

pub fn kernel(m: &Mat) -> KernelMatrix {
    let n = m.len();
    KernelMatrix::from_raw(n, m.iter().flatten().copied().collect()).unwrap()
}

pub fn dense(k: &KernelMatrix) -> Mat {
    let n = k.n();
    (0..n).map(|i| (0..n).map(|j| k.get(i, j)).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for j in 0..p {
            let mut s = 0.0;
            for t in 0..m {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn trace(a: &Mat) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// `A Aᵀ` for a Gaussian `n x r` matrix `A`, `r` drawn in `1..=n`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let r = rng.random_range(1..=n);
    let a = normal_rows(rng, n, r);
    matmul(&a, &transpose(&a))
}

pub fn centering(n: usize) -> Mat {
    let nf = n as f64;
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 - 1.0 / nf } else { -1.0 / nf }).collect()).collect()
}

pub fn hkh(k: &Mat) -> Mat {
    let h = centering(k.len());
    matmul(&matmul(&h, k), &h)
}

/// `Tr(K H L H) / (n - 1)^2` from four explicit products.
pub fn hsic(k: &Mat, l: &Mat) -> f64 {
    let n = k.len();
    let h = centering(n);
    let p = matmul(&matmul(&matmul(k, &h), l), &h);
    trace(&p) / ((n - 1) * (n - 1)) as f64
}

pub fn cka(k: &Mat, l: &Mat) -> f64 {
    hsic(k, l) / (hsic(k, k) * hsic(l, l)).sqrt()
}

pub fn alignment(a: &Mat, b: &Mat) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            ab += a[i][j] * b[i][j];
            aa += a[i][j] * a[i][j];
            bb += b[i][j] * b[i][j];
        }
    }
    ab / (aa * bb).sqrt()
}

pub fn linear_kernel(x: &Mat) -> Mat {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for t in 0..x[i].len() {
                s += x[i][t] * x[j][t];
            }
            k[i][j] = s;
        }
    }
    k
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..a.len() {
        s += (a[t] - b[t]) * (a[t] - b[t]);
    }
    s
}

fn l1_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for t in 0..a.len() {
        s += (a[t] - b[t]).abs();
    }
    s
}

fn pairwise(x: &Mat, f: impl Fn(&[f64], &[f64]) -> f64) -> Mat {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = f(&x[i], &x[j]);
        }
    }
    k
}

pub fn gaussian_kernel(x: &Mat, sigma: f64) -> Mat {
    pairwise(x, |a, b| (-sq_dist(a, b) / (2.0 * sigma * sigma)).exp())
}

pub fn gaussian_unsquared_kernel(x: &Mat, sigma: f64) -> Mat {
    pairwise(x, |a, b| (-sq_dist(a, b).sqrt() / (2.0 * sigma * sigma)).exp())
}

pub fn laplacian_kernel(x: &Mat, sigma: f64) -> Mat {
    pairwise(x, |a, b| (-l1_dist(a, b) / sigma).exp())
}

/// Median of the pairwise Euclidean distances over `i < j`.
pub fn median_distance(x: &Mat) -> f64 {
    let mut d = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            d.push(sq_dist(&x[i], &x[j]).sqrt());
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = d.len();
    if m % 2 == 1 {
        d[m / 2]
    } else {
        (d[m / 2 - 1] + d[m / 2]) / 2.0
    }
}

pub fn label_kernel(y: &[u32]) -> Mat {
    let n = y.len();
    (0..n).map(|i| (0..n).map(|j| f64::from(y[i] == y[j])).collect()).collect()
}

/// Leave-one-out k-NN accuracy: full sort of every distance list, ties in
/// distance by index, ties in vote to the smallest class.
pub fn knn_loo(x: &Mat, y: &[u32], k: usize) -> f64 {
    let n = x.len();
    let classes = *y.iter().max().unwrap() as usize + 1;
    let mut correct = 0;
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (sq_dist(&x[i], &x[j]), j)).collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0; classes];
        for &(_, j) in &others[..k] {
            votes[y[j] as usize] += 1;
        }
        let top = *votes.iter().max().unwrap();
        let pred = votes.iter().position(|&v| v == top).unwrap();
        if pred as u32 == y[i] {
            correct += 1;
        }
    }
    correct as f64 / n as f64
}

/// Weighted tau by enumerating pairs. Rank of item `i` is the number of
/// strictly larger truths plus half the number of other equal truths.
pub fn weighted_tau(s: &[f64], t: &[f64]) -> f64 {
    let n = s.len();
    let rank: Vec<f64> = (0..n)
        .map(|i| {
            let above = (0..n).filter(|&j| t[j] > t[i]).count();
            let tied = (0..n).filter(|&j| j != i && t[j] == t[i]).count();
            above as f64 + tied as f64 / 2.0
        })
        .collect();
    let sgn = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (sgn(s[i] - s[j]), sgn(t[i] - t[j]));
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let w = 1.0 / (1.0 + rank[i]) + 1.0 / (1.0 + rank[j]);
            num += w * a * b;
            den += w;
        }
    }
    num / den
}

/// Computational form `(n Σxy - Σx Σy) / sqrt((n Σx² - (Σx)²)(n Σy² - (Σy)²))`.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Product of Givens rotations, an orthogonal `d x d` matrix.
pub fn orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Mat {
    let mut q: Mat = (0..d).map(|i| (0..d).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..3 * d * d {
        if d < 2 {
            break;
        }
        let i = rng.random_range(0..d);
        let j = (i + rng.random_range(1..d)) % d;
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let (c, s) = (th.cos(), th.sin());
        for row in q.iter_mut() {
            let (a, b) = (row[i], row[j]);
            row[i] = c * a - s * b;
            row[j] = s * a + c * b;
        }
    }
    q
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
