use alloc::vec::Vec;

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Linear-interpolation quantile of already sorted data, `p` in `[0, 1]`.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted(x: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = x.collect();
    v.sort_unstable_by(f64::total_cmp);
    v
}

// Terms are scaled so the largest has magnitude below 2^FIXED_BITS; with i128
// accumulation that leaves room for 2^26 terms.
const FIXED_BITS: i32 = 100;

/// Sum that does not depend on the order of `x`, so that permuting samples
/// leaves results bit-identical.
///
/// Every term is rounded to a multiple of `2^-FIXED_BITS` times the largest
/// magnitude and the rounded terms are added exactly in integer arithmetic.
/// The rounding error per term is far below an f64 ulp of the result.
pub(crate) fn order_free_sum<I>(x: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let mut max = 0.0f64;
    for v in x.clone() {
        if !v.is_finite() {
            return x.sum();
        }
        max = max.max(libm::fabs(v));
    }
    if max == 0.0 {
        return 0.0;
    }
    let (_, e) = libm::frexp(max);
    let shift = FIXED_BITS - e;
    let total: i128 = x.map(|v| libm::round(libm::scalbn(v, shift)) as i128).sum();
    libm::scalbn(total as f64, -shift)
}
