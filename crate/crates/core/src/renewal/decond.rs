use super::{mass_sequence, RenewalLaw};
use crate::conv::conv_trunc;
use crate::error::Result;

/// Nonnegative functions of `tau ∩ {1..N}` with exact expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFn {
    One,
    /// `1{R_N >= k}`
    AtLeast(usize),
    /// `sqrt(tau_1) 1{R_N >= 2}`
    SqrtFirstTwo,
    /// `1{n in tau}`
    Visits(usize),
}

impl std::fmt::Display for TestFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestFn::One => write!(f, "one"),
            TestFn::AtLeast(k) => write!(f, "R_N>={k}"),
            TestFn::SqrtFirstTwo => write!(f, "sqrt(tau1)*1{{R_N>=2}}"),
            TestFn::Visits(n) => write!(f, "1{{{n} in tau}}"),
        }
    }
}

/// Built-in family used for horizon `N`.
pub fn default_family(n: usize) -> Vec<TestFn> {
    let s = (n as f64).sqrt().ceil() as usize;
    vec![
        TestFn::One,
        TestFn::AtLeast(1),
        TestFn::AtLeast(2),
        TestFn::AtLeast(s),
        TestFn::SqrtFirstTwo,
        TestFn::Visits(n / 2),
        TestFn::Visits(n),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub f: TestFn,
    /// `None` when `E[f] = 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub n: usize,
    pub entries: Vec<RatioEntry>,
}

impl RatioReport {
    pub fn max_ratio(&self) -> f64 {
        self.entries.iter().filter_map(|e| e.ratio).fold(f64::NAN, f64::max)
    }

    pub fn skipped(&self) -> Vec<TestFn> {
        self.entries.iter().filter(|e| e.ratio.is_none()).map(|e| e.f).collect()
    }
}

/// `E[f | 2N in tau] / E[f]` for each test function.
///
/// Conditioning on the last renewal `g <= N`: with
/// `phi(g) = E[f; g in tau]` (f evaluated on `tau ∩ {1..g}`),
/// `E[f] = sum_g phi(g) P(tau_1 > N - g)` and
/// `E[f; 2N in tau] = sum_g phi(g) h(g)`,
/// `h(g) = sum_{m=N+1}^{2N} K(m - g) u_{2N-m}`.
pub fn conditioning_ratio(law: &RenewalLaw, n: usize, family: &[TestFn]) -> Result<RatioReport> {
    law.check_horizon(2 * n)?;
    let u = mass_sequence(law, 2 * n)?.u;
    let surv = law.survival();
    let h: Vec<f64> = (0..=n)
        .map(|g| (n + 1..=2 * n).map(|m| law.k[m - g] * u[2 * n - m]).sum())
        .collect();
    let len = n + 1;
    let mut entries = Vec::with_capacity(family.len());
    for &f in family {
        let phi: Vec<f64> = match f {
            TestFn::One | TestFn::AtLeast(0) => u[..len].to_vec(),
            TestFn::AtLeast(k) => {
                let qk = kernel_power(&law.k[..len], k, len);
                conv_trunc(&qk, &u[..len], len)
            }
            TestFn::SqrtFirstTwo => {
                let w: Vec<f64> = (0..len).map(|t| (t as f64).sqrt() * law.k[t]).collect();
                let mut tail = u[..len].to_vec();
                tail[0] = 0.0;
                conv_trunc(&w, &tail, len)
            }
            TestFn::Visits(m) => (0..len).map(|g| if g >= m && m <= n { u[m] * u[g - m] } else { 0.0 }).collect(),
        };
        let plain: f64 = (0..=n).map(|g| phi[g] * surv[n - g]).sum();
        let joint: f64 = (0..=n).map(|g| phi[g] * h[g]).sum();
        let ratio = (plain > 0.0).then(|| joint / (u[2 * n] * plain));
        entries.push(RatioEntry { f, ratio });
    }
    Ok(RatioReport { n, entries })
}

/// `K^{*k}` truncated to `len` entries, by binary powering.
fn kernel_power(k: &[f64], mut e: usize, len: usize) -> Vec<f64> {
    let mut result = vec![0.0; len];
    result[0] = 1.0;
    let mut base = k.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = conv_trunc(&result, &base, len);
        }
        e >>= 1;
        if e > 0 {
            base = conv_trunc(&base, &base, len);
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::lazy3_law;

    #[test]
    fn constant_and_visit_identities() {
        let law = lazy3_law();
        let n = 100;
        let rep = conditioning_ratio(law, n, &[TestFn::One, TestFn::Visits(n), TestFn::Visits(37)]).unwrap();
        let u = mass_sequence(law, 2 * n).unwrap().u;
        assert!((rep.entries[0].ratio.unwrap() - 1.0).abs() < 1e-12);
        let want = u[n] * u[n] / (u[2 * n] * u[n]);
        assert!((rep.entries[1].ratio.unwrap() - want).abs() < 1e-12);
        let want = u[2 * n - 37] / u[2 * n];
        assert!((rep.entries[2].ratio.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn at_least_one_matches_complement() {
        // E[1{R_N >= 1} | 2N in tau] = 1 - P(no point in 1..N | 2N in tau).
        let law = lazy3_law();
        let n = 50;
        let u = mass_sequence(law, 2 * n).unwrap().u;
        let none_joint: f64 = (n + 1..=2 * n).map(|m| law.k[m] * u[2 * n - m]).sum();
        let surv = law.survival();
        let want = (1.0 - none_joint / u[2 * n]) / (1.0 - surv[n]);
        let rep = conditioning_ratio(law, n, &[TestFn::AtLeast(1)]).unwrap();
        assert!((rep.entries[0].ratio.unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn zero_expectation_is_skipped() {
        let law = lazy3_law();
        let rep = conditioning_ratio(law, 10, &[TestFn::AtLeast(11)]).unwrap();
        assert_eq!(rep.skipped(), vec![TestFn::AtLeast(11)]);
    }

    #[test]
    fn kernel_power_matches_repeated_convolution() {
        let law = lazy3_law();
        let len = 60;
        let mut direct = vec![0.0; len];
        direct[0] = 1.0;
        for _ in 0..5 {
            direct = conv_trunc(&direct, &law.k[..len], len);
        }
        let fast = kernel_power(&law.k[..len], 5, len);
        for i in 0..len {
            assert!((direct[i] - fast[i]).abs() <= 1e-15 * direct[i].max(1e-300));
        }
    }
}
