//! Direct convolutions of nonnegative sequences.
//!
//! Kept direct rather than FFT-based so that tiny tail probabilities keep
//! their relative accuracy.

/// `c[n] = sum_{m=0}^{n} a[m] b[n-m]` for `n < len`.
pub fn conv_trunc(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == 0.0 {
            continue;
        }
        let upto = (len - i).min(b.len());
        for (cj, &bj) in c[i..i + upto].iter_mut().zip(&b[..upto]) {
            *cj += ai * bj;
        }
    }
    c
}

/// Running sums `s[n] = a[0] + .. + a[n]`.
pub fn cumsum(a: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    a.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}
