use statrs::function::erf::erf;

use super::{mass_sequence, RenewalLaw};
use crate::conv::{conv_trunc, cumsum};
use crate::error::Result;

/// Probabilities below this are treated as exhausted when extending the
/// contact-count table.
const NEGLIGIBLE: f64 = 1e-300;

/// Exact law of `R_N = |tau ∩ {1..N}|`.
#[derive(Debug, Clone)]
pub struct ContactLaw {
    pub n: usize,
    /// `pmf[k] = P(R_N = k)`; entries beyond the table are below 1e-300.
    pub pmf: Vec<f64>,
}

impl ContactLaw {
    /// `P(R_N >= k)`, summed from the tail for relative accuracy.
    pub fn survival(&self, k: usize) -> f64 {
        self.pmf.get(k..).map_or(0.0, |t| t.iter().rev().sum())
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    pub fn total(&self) -> f64 {
        crate::stats::pairwise_sum(&self.pmf)
    }
}

/// Exact distribution of the number of renewals in `{1..N}`.
///
/// `P(R_N = k) = sum_n P(tau_k = n) P(tau_1 > N - n)`. The convolution
/// powers `K^{*k}` are assembled in blocks of size `b ~ sqrt(k_max)`, so
/// the cost is about `3 sqrt(k_max)` truncated convolutions of length `N`.
pub fn contact_count_dist(law: &RenewalLaw, n: usize) -> Result<ContactLaw> {
    law.check_horizon(n)?;
    let len = n + 1;
    let surv = law.survival();
    let surv = &surv[..len];
    let kernel: Vec<f64> = law.k[..len].to_vec();
    let kmax_guess = 40.0 * (n as f64).sqrt() + 2.0;
    let b = (kmax_guess.sqrt().ceil() as usize).clamp(1, len);
    // powers[i] = K^{*i}, between[i](t) = P(tau_i <= t < tau_{i+1}).
    let mut powers = vec![delta(len)];
    for i in 1..=b {
        let next = conv_trunc(&powers[i - 1], &kernel, len);
        powers.push(next);
    }
    let between: Vec<Vec<f64>> = powers[..b].iter().map(|p| conv_trunc(p, surv, len)).collect();
    let mut pmf = Vec::new();
    let mut block = delta(len);
    let mut base = 0usize;
    loop {
        let mut block_max = 0.0f64;
        for (i, g) in between.iter().enumerate() {
            let k = base + i;
            if k > n {
                break;
            }
            let p: f64 = (0..len).map(|m| block[m] * g[n - m]).sum();
            block_max = block_max.max(p);
            pmf.push(p);
        }
        base += b;
        if base > n || block_max < NEGLIGIBLE {
            break;
        }
        block = conv_trunc(&block, &powers[b], len);
    }
    while pmf.len() > 1 && *pmf.last().unwrap() == 0.0 {
        pmf.pop();
    }
    Ok(ContactLaw { n, pmf })
}

fn delta(len: usize) -> Vec<f64> {
    let mut v = vec![0.0; len];
    v[0] = 1.0;
    v
}

/// Kolmogorov-Smirnov distance between the law of `c_K R_N / sqrt(N)` and
/// that of `|Z| / sqrt(2 pi)`, whose CDF is `erf(x sqrt(pi))`.
pub fn ks_halfnormal(law: &RenewalLaw, n: usize) -> Result<f64> {
    let dist = contact_count_dist(law, n)?;
    Ok(ks_from_pmf(&dist.pmf, law.ck / (n as f64).sqrt()))
}

pub(crate) fn ks_from_pmf(pmf: &[f64], scale: f64) -> f64 {
    let target = |x: f64| erf(x * std::f64::consts::PI.sqrt());
    let cdf = cumsum(pmf);
    let mut d = 0.0f64;
    let mut before = 0.0;
    for (k, &after) in cdf.iter().enumerate() {
        let g = target(k as f64 * scale);
        d = d.max((after - g).abs()).max((before - g).abs());
        before = after;
    }
    d.max((1.0 - before).abs())
}

/// `E[R_N | N in tau]` from `v_n = sum_m K(m) (v_{n-m} + u_{n-m})`.
pub fn conditional_mean_contacts(law: &RenewalLaw, n: usize) -> Result<f64> {
    let u = mass_sequence(law, n)?.u;
    let mut v = vec![0.0; n + 1];
    for i in 1..=n {
        let mut s = 0.0;
        for m in 1..=i {
            s += law.k[m] * (v[i - m] + u[i - m]);
        }
        v[i] = s;
    }
    Ok(v[n] / u[n])
}

/// `(alpha, ln P(R_N >= alpha sqrt(N)))` for each `alpha`.
pub fn chernoff_profile(dist: &ContactLaw, alphas: &[f64]) -> Vec<(f64, f64)> {
    let rn = (dist.n as f64).sqrt();
    alphas.iter().map(|&a| (a, dist.survival((a * rn).ceil() as usize).ln())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::lazy3_law;

    /// Plain `(position, count)` dynamic programme.
    fn naive(law: &RenewalLaw, n: usize) -> Vec<f64> {
        let surv = law.survival();
        // q[k][m] = P(tau_k = m)
        let mut q = vec![vec![0.0; n + 1]];
        q[0][0] = 1.0;
        for k in 1..=n {
            let mut row = vec![0.0; n + 1];
            for m in k..=n {
                row[m] = (k - 1..m).map(|j| q[k - 1][j] * law.k[m - j]).sum();
            }
            q.push(row);
        }
        (0..=n).map(|k| (0..=n).map(|m| q[k][m] * surv[n - m]).sum()).collect()
    }

    #[test]
    fn small_cases_match_naive_dp() {
        let law = lazy3_law();
        let d1 = contact_count_dist(law, 1).unwrap();
        assert!((d1.pmf[1] - law.k(1)).abs() < 1e-16);
        assert!((d1.pmf[0] - (1.0 - law.k(1))).abs() < 1e-15);
        for n in [2usize, 7, 30] {
            let fast = contact_count_dist(law, n).unwrap();
            let slow = naive(law, n);
            for (k, p) in fast.pmf.iter().enumerate() {
                assert!((p - slow[k]).abs() <= 1e-13 * slow[k].max(1e-300) + 1e-300, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn normalisation_and_mean() {
        let law = lazy3_law();
        let n = 2000;
        let d = contact_count_dist(law, n).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-10);
        let u = mass_sequence(law, n).unwrap().u;
        let mean: f64 = u[1..].iter().sum();
        assert!((d.mean() - mean).abs() < 1e-10);
    }

    #[test]
    fn degenerate_ks() {
        let law = lazy3_law();
        let d = ks_halfnormal(law, 1).unwrap();
        assert!(d.is_finite() && d > 0.0 && d <= 1.0);
    }

    #[test]
    fn ks_of_exact_halfnormal_grid_is_small() {
        // Fine discretisation of the target itself.
        let h = 1e-3f64;
        let pi = std::f64::consts::PI;
        let pmf: Vec<f64> = (0..5000)
            .map(|k| {
                let a = if k == 0 { 0.0 } else { erf((k as f64 - 0.5) * h * pi.sqrt()) };
                erf((k as f64 + 0.5) * h * pi.sqrt()) - a
            })
            .collect();
        assert!(ks_from_pmf(&pmf, h) < 2e-3);
    }
}
