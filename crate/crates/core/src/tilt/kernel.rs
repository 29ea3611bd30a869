use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `M_ij = c_M / (sqrt(L ln L) sqrt|i-j|)` off the diagonal.
    LongRange { c_m: f64 },
    /// `M_ij = amplitude / sqrt(L)` when `|i-j| = p0`, zero otherwise.
    Bandwidth { p0: usize, amplitude: f64 },
}

/// Symmetric Toeplitz kernel on one block of length `L`, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltKernel {
    l: usize,
    kind: KernelKind,
    /// `lag[k] = M_{i,i+k}`, `lag[0] = 0`.
    lag: Vec<f64>,
}

impl TiltKernel {
    pub fn long_range(l: usize, c_m: f64) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidArgument(format!("block length {l} < 2")));
        }
        let scale = c_m / ((l as f64) * (l as f64).ln()).sqrt();
        let lag = (0..l).map(|k| if k == 0 { 0.0 } else { scale / (k as f64).sqrt() }).collect();
        Ok(Self { l, kind: KernelKind::LongRange { c_m }, lag })
    }

    /// Long-range kernel whose squared Frobenius norm equals `target`.
    pub fn long_range_with_frobenius_sq(l: usize, target: f64) -> Result<Self> {
        let unit = Self::long_range(l, 1.0)?.frobenius_sq();
        Self::long_range(l, (target / unit).sqrt())
    }

    pub fn bandwidth(l: usize, p0: usize, amplitude: f64) -> Result<Self> {
        if l < 2 || p0 == 0 || p0 >= l {
            return Err(Error::InvalidArgument(format!("bandwidth kernel needs 1 <= p0 < L, got p0 = {p0}, L = {l}")));
        }
        let mut lag = vec![0.0; l];
        lag[p0] = amplitude / (l as f64).sqrt();
        Ok(Self { l, kind: KernelKind::Bandwidth { p0, amplitude }, lag })
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn lag(&self) -> &[f64] {
        &self.lag
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.lag[i.abs_diff(j)]
    }

    /// `sum_{i,j} M_ij^2 = 2 sum_k (L - k) m_k^2`.
    pub fn frobenius_sq(&self) -> f64 {
        let terms: Vec<f64> = (1..self.l).map(|k| 2.0 * (self.l - k) as f64 * self.lag[k] * self.lag[k]).collect();
        crate::stats::pairwise_sum(&terms)
    }

    /// The Frobenius norm dominates the spectral radius.
    pub fn operator_bound(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn negated(&self) -> Self {
        let kind = match self.kind {
            KernelKind::LongRange { c_m } => KernelKind::LongRange { c_m: -c_m },
            KernelKind::Bandwidth { p0, amplitude } => KernelKind::Bandwidth { p0, amplitude: -amplitude },
        };
        Self { l: self.l, kind, lag: self.lag.iter().map(|v| -v).collect() }
    }
}

/// `(c^2 / (L ln L)) 2 sum_{k<L} (L-k)/k` in closed form via harmonic numbers.
pub fn long_range_frobenius_closed_form(l: usize, c_m: f64) -> f64 {
    let lf = l as f64;
    let h: f64 = (1..l).map(|k| 1.0 / k as f64).sum();
    c_m * c_m / (lf * lf.ln()) * 2.0 * (lf * h - (lf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_symmetric_zero_diagonal() {
        let k = TiltKernel::long_range(50, 0.3).unwrap();
        for i in 0..50 {
            assert_eq!(k.entry(i, i), 0.0);
            for j in 0..50 {
                assert_eq!(k.entry(i, j), k.entry(j, i));
            }
        }
        let direct: f64 = (0..50).flat_map(|i| (0..50).map(move |j| (i, j))).map(|(i, j)| k.entry(i, j).powi(2)).sum();
        assert!((direct - k.frobenius_sq()).abs() < 1e-14);
    }

    #[test]
    fn closed_form_and_limit() {
        let c = 0.2;
        let mut last_gap = f64::INFINITY;
        for l in [1_000usize, 10_000, 100_000] {
            let k = TiltKernel::long_range(l, c).unwrap();
            let f = k.frobenius_sq();
            assert!((f - long_range_frobenius_closed_form(l, c)).abs() < 1e-12 * f);
            let gap = (f / (2.0 * c * c) - 1.0).abs();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        // The finite-L correction is of order 1/ln L: within 5% from L = 10^4 on.
        assert!(last_gap < 0.05);
    }

    #[test]
    fn bandwidth_norm_counts_entries() {
        let k = TiltKernel::bandwidth(100, 7, 0.5).unwrap();
        assert!((k.frobenius_sq() - 2.0 * 0.25 * 93.0 / 100.0).abs() < 1e-14);
        assert!(TiltKernel::bandwidth(10, 10, 1.0).is_err());
    }

    #[test]
    fn calibrated_norm() {
        let k = TiltKernel::long_range_with_frobenius_sq(1000, 0.05).unwrap();
        assert!((k.frobenius_sq() - 0.05).abs() < 1e-15);
        assert!((k.operator_bound() - 0.05f64.sqrt()).abs() < 1e-15);
    }
}
