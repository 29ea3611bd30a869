//! Coarse-graining of `{1..N}` into `m` blocks of length `L`: partition
//! functions restricted to a set of visited blocks, the matching renewal
//! probabilities and the homogeneous envelope that dominates them.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice;
use crate::pinning::{CouplingParams, PinningSystem};
use crate::renewal::{RenewalLaw, TailFit};
use crate::stats::least_squares;
use crate::walks::Environment;

/// Blocks `B_i = {(i-1)L+1, .., iL}`, `i = 1..m`, and a visited subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockScheme {
    l: usize,
    m: usize,
    subset: Vec<usize>,
}

impl BlockScheme {
    /// `subset` holds 1-based block indices; it is sorted and deduplicated.
    pub fn new(l: usize, m: usize, subset: &[usize]) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidArgument("block length and count must be positive".into()));
        }
        let mut subset = subset.to_vec();
        subset.sort_unstable();
        subset.dedup();
        if subset.iter().any(|&i| i == 0 || i > m) {
            return Err(Error::InvalidArgument(format!("block indices must lie in 1..={m}")));
        }
        Ok(BlockScheme { l, m, subset })
    }

    /// Subset given as a bitmask, bit `i-1` for block `i`.
    pub fn from_mask(l: usize, m: usize, mask: u64) -> Result<Self> {
        if m > 63 {
            return Err(Error::InvalidArgument("bitmask subsets need m <= 63".into()));
        }
        let subset: Vec<usize> = (1..=m).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        Self::new(l, m, &subset)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.l * self.m
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn mask(&self) -> u64 {
        self.subset.iter().fold(0, |acc, i| acc | 1 << (i - 1))
    }

    /// `Z^I` and `P_I` vanish unless the last block is visited.
    pub fn contains_last(&self) -> bool {
        self.subset.last() == Some(&self.m)
    }

    /// Block of position `n >= 1`; position 0 sits in block 0.
    #[inline]
    fn block_of(&self, n: usize) -> usize {
        n.div_ceil(self.l)
    }

    /// Sum of `log(i_j - i_{j-1})` over the subset with `i_0 = 0`.
    pub fn log_gap_sum(&self) -> f64 {
        let mut prev = 0;
        let mut s = 0.0;
        for &i in &self.subset {
            s += ((i - prev) as f64).ln();
            prev = i;
        }
        s
    }
}

/// Paper coupling of block length and pinning strength, `L = 1/(z-1)`
/// rounded up.
pub fn block_length_for(z: f64) -> Result<usize> {
    if !(z > 1.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!("L = 1/(z-1) needs z > 1, got {z}")));
    }
    Ok((1.0 / (z - 1.0)).ceil().max(1.0) as usize)
}

/// Renewal-point DP over `0 < τ_1 < .. < N` restricted to the event that
/// the set of blocks hit by `τ` is exactly the subset, with `N ∈ τ`.
/// A jump `a -> c` is legal when the block of `c` is in the subset and
/// every block strictly between is outside it.
fn constrained_dp(scheme: &BlockScheme, weight: impl Fn(usize, usize) -> f64) -> f64 {
    if !scheme.contains_last() {
        return 0.0;
    }
    let n = scheme.n();
    let mut inside = vec![false; scheme.m + 1];
    for &i in &scheme.subset {
        inside[i] = true;
    }
    // next_in[b]: first subset block strictly after b
    let mut next_in = vec![usize::MAX; scheme.m + 1];
    for b in (0..scheme.m).rev() {
        next_in[b] = if inside[b + 1] { b + 1 } else { next_in[b + 1] };
    }
    let mut v = vec![0.0f64; n + 1];
    v[0] = 1.0;
    for c in 1..=n {
        let bc = scheme.block_of(c);
        if !inside[bc] {
            continue;
        }
        let mut s = 0.0;
        for a in 0..c {
            if v[a] == 0.0 {
                continue;
            }
            let ba = scheme.block_of(a);
            if ba == bc || next_in[ba] == bc {
                s += v[a] * weight(a, c);
            }
        }
        v[c] = s;
    }
    v[n]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockValue {
    pub log_value: f64,
    /// Set when the subset misses the last block, so the value is exactly 0.
    pub vanishes: bool,
}

impl BlockValue {
    fn from_linear(scheme: &BlockScheme, v: f64) -> Self {
        BlockValue { log_value: v.ln(), vanishes: !scheme.contains_last() }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// `log Z^I`: the quenched partition function restricted to the blocks of
/// the subset.
pub fn block_partition(
    sys: &PinningSystem,
    params: &CouplingParams,
    env: &Environment,
    scheme: &BlockScheme,
) -> Result<BlockValue> {
    let n = scheme.n();
    if env.len() < n {
        return Err(Error::InvalidArgument(format!("environment has {} steps, scheme needs {n}", env.len())));
    }
    if let Ok(law) = sys.law() {
        law.check_horizon(n)?;
    }
    let pos = env.positions();
    let tables = sys.x_tables();
    let v = constrained_dp(scheme, |a, c| params.z_prime * tables.prob(c - a, &lattice::sub(&pos[c], &pos[a])));
    Ok(BlockValue::from_linear(scheme, v))
}

/// Same DP with the weight of a gap `n` replaced by its disorder mean
/// `z K(n)`; `z = 1` gives `P_I`.
pub fn block_annealed(law: &RenewalLaw, z: f64, scheme: &BlockScheme) -> Result<BlockValue> {
    law.check_horizon(scheme.n())?;
    let v = constrained_dp(scheme, |a, c| z * law.k(c - a));
    Ok(BlockValue::from_linear(scheme, v))
}

/// `P_I = P(E_I, N ∈ τ)`.
pub fn block_visit_prob(law: &RenewalLaw, scheme: &BlockScheme) -> Result<BlockValue> {
    block_annealed(law, 1.0, scheme)
}

/// Evaluates `f` on every nonempty subset of `{1..m}`, in mask order.
pub fn sweep_subsets<T: Send>(
    l: usize,
    m: usize,
    f: impl Fn(&BlockScheme) -> Result<T> + Sync,
) -> Result<Vec<(u64, T)>> {
    if m > 20 {
        return Err(Error::InvalidArgument(format!("subset sweep over 2^{m} subsets refused")));
    }
    (1..1u64 << m)
        .into_par_iter()
        .map(|mask| {
            let s = BlockScheme::from_mask(l, m, mask)?;
            Ok((mask, f(&s)?))
        })
        .collect()
}

/// Default gap ladders: `{m}`, `{g, 2g}` and `{g, 2g, 3g}`. Gaps of one
/// block are left out since the first block then sits next to the origin.
pub fn default_ladders() -> Vec<(usize, Vec<usize>)> {
    let mut out = Vec::new();
    for m in [2, 4, 8, 16, 32] {
        out.push((m, vec![m]));
    }
    for g in [2, 4, 8, 16] {
        out.push((2 * g, vec![g, 2 * g]));
    }
    for g in [2, 4, 8] {
        out.push((3 * g, vec![g, 2 * g, 3 * g]));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitFit {
    /// Coefficient of `Σ log(i_j - i_{j-1})`.
    pub slope: f64,
    pub c1: f64,
    /// Per-visited-block constant.
    pub c2: f64,
    /// `(m, subset, log P_I)` for every ladder entry.
    pub points: Vec<(usize, Vec<usize>, f64)>,
}

/// Fits `log P_I = log C_1 + |I| log C_2 + slope · Σ log gaps`.
pub fn fit_visit_exponent(law: &RenewalLaw, l: usize, ladders: &[(usize, Vec<usize>)]) -> Result<VisitFit> {
    let points: Vec<(usize, Vec<usize>, f64)> = ladders
        .par_iter()
        .map(|(m, subset)| {
            let s = BlockScheme::new(l, *m, subset)?;
            Ok((*m, s.subset().to_vec(), block_visit_prob(law, &s)?.log_value))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|(m, sub, _)| {
            let s = BlockScheme::new(l, *m, sub).expect("validated above");
            vec![1.0, sub.len() as f64, s.log_gap_sum()]
        })
        .collect();
    let y: Vec<f64> = points.iter().map(|p| p.2).collect();
    let coef = least_squares(&rows, &y).ok_or(Error::Singular)?;
    Ok(VisitFit { slope: coef[2], c1: coef[0].exp(), c2: coef[1].exp(), points })
}

const ENVELOPE_EXPONENT: f64 = 1.2;

/// `Σ_{i >= 1} i^{-6/5}`.
pub fn c_tilde() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let n0 = 2000usize;
        let head: Vec<f64> = (1..=n0).map(|i| (i as f64).powf(-ENVELOPE_EXPONENT)).collect();
        let tail = TailFit { exponent: ENVELOPE_EXPONENT, c: 1.0, c1: 0.0 }.sum_beyond(n0);
        head.iter().rev().sum::<f64>() + tail
    })
}

/// `K̃(n) = 1 / (c̃ n^{6/5})`.
pub fn k_tilde(n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (n as f64).powf(-ENVELOPE_EXPONENT) / c_tilde()
    }
}

/// `η = 1 / (4 C_2 c̃^{1/γ})`.
pub fn paper_eta(c2: f64, gamma: f64) -> f64 {
    1.0 / (4.0 * c2 * c_tilde().powf(1.0 / gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub m: usize,
    /// Pinning weight `(3 C_2 η)^γ`.
    pub weight: f64,
    /// `log E[weight^{|τ̃ ∩ {1..m}|}; m ∈ τ̃]`.
    pub log_value: f64,
    /// Weight above which the envelope grows exponentially in `m`.
    pub threshold_weight: f64,
}

/// Homogeneous pinning DP of size `m` under `K̃` with weight
/// `(3 C_2 η)^γ`, endpoint pinned.
pub fn coarse_envelope(eta: f64, gamma: f64, c2: f64, m: usize) -> Result<Envelope> {
    if !(eta > 0.0) || !(gamma > 0.0 && gamma < 1.0) || !(c2 > 0.0) {
        return Err(Error::InvalidArgument(format!("envelope needs eta > 0, 0 < gamma < 1, C2 > 0; got {eta}, {gamma}, {c2}")));
    }
    let weight = (3.0 * c2 * eta).powf(gamma);
    let k: Vec<f64> = (0..=m).map(k_tilde).collect();
    let mut v = vec![0.0; m + 1];
    v[0] = 1.0;
    for i in 1..=m {
        v[i] = weight * (1..=i).map(|j| k[j] * v[i - j]).sum::<f64>();
    }
    Ok(Envelope { m, weight, log_value: v[m].ln(), threshold_weight: 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{lazy3_law, mass_sequence};
    use crate::rng::{tag, StreamId};
    use crate::stats::{pairwise_sum, Estimate};
    use crate::walks::{model_by_id, sample_path};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn scheme_basics() {
        let s = BlockScheme::new(8, 3, &[3, 1, 3]).unwrap();
        assert_eq!(s.subset(), &[1, 3]);
        assert_eq!(s.mask(), 0b101);
        assert_eq!(BlockScheme::from_mask(8, 3, 0b101).unwrap(), s);
        assert_eq!((s.block_of(8), s.block_of(9), s.block_of(0)), (1, 2, 0));
        assert!(BlockScheme::new(8, 3, &[4]).is_err());
        assert_eq!(block_length_for(1.1).unwrap(), 10);
        assert!(block_length_for(1.0).is_err());
    }

    #[test]
    fn visit_probs_partition_mass() {
        let law = lazy3_law();
        let u = mass_sequence(law, 24).unwrap().u;
        let all = sweep_subsets(8, 3, |s| block_visit_prob(law, s)).unwrap();
        let total = pairwise_sum(&all.iter().map(|(_, b)| b.value()).collect::<Vec<_>>());
        assert!(rel(total, u[24]) < 1e-12);
        for (mask, b) in &all {
            assert_eq!(b.vanishes, mask & 0b100 == 0);
        }
        let single = block_visit_prob(law, &BlockScheme::new(24, 1, &[1]).unwrap()).unwrap();
        assert!(rel(single.value(), u[24]) < 1e-14);
    }

    #[test]
    fn block_partitions_sum_to_full() {
        let sys = &crate::pinning::tests::lazy3_system();
        let my = model_by_id("lazy3").unwrap();
        for e in 0..10 {
            let env = sample_path(&my, 24, StreamId::new(9, tag("coarse"), e));
            for z in [0.5, 2.0] {
                let params = sys.params_from_z(z).unwrap();
                let full = sys.quenched_partition_direct(params.z_prime, &env)[24];
                let all = sweep_subsets(8, 3, |s| block_partition(sys, &params, &env, s)).unwrap();
                let total = pairwise_sum(&all.iter().map(|(_, b)| b.value()).collect::<Vec<_>>());
                assert!(rel(total, full) < 1e-10, "{total} vs {full}");
                let one = block_partition(sys, &params, &env, &BlockScheme::new(24, 1, &[1]).unwrap()).unwrap();
                assert!(rel(one.value(), full) < 1e-12);
            }
        }
    }

    #[test]
    fn disorder_mean_matches_annealed_dp() {
        let sys = &crate::pinning::tests::lazy3_system();
        let my = model_by_id("lazy3").unwrap();
        let scheme = BlockScheme::new(4, 3, &[1, 3]).unwrap();
        let params = sys.params_from_z(1.0).unwrap();
        let vals: Vec<f64> = (0..20_000)
            .into_par_iter()
            .map(|e| {
                let env = sample_path(&my, 12, StreamId::new(2, tag("mean"), e));
                block_partition(sys, &params, &env, &scheme).unwrap().value()
            })
            .collect();
        let est = Estimate::from_samples(&vals);
        let exact = block_visit_prob(sys.law().unwrap(), &scheme).unwrap().value();
        assert!((est.mean - exact).abs() < 4.0 * est.stderr, "{est:?} vs {exact}");
    }

    #[test]
    fn visit_exponent_fit() {
        let fit = fit_visit_exponent(lazy3_law(), 64, &default_ladders()).unwrap();
        assert!(fit.slope <= -1.2, "slope {}", fit.slope);
        assert!(fit.slope > -2.0, "slope {}", fit.slope);
        assert!(fit.c2 > 0.0 && fit.c1 > 0.0);
    }

    #[test]
    fn c_tilde_value() {
        assert!((c_tilde() - 5.591_582_441_177_75).abs() < 1e-8, "{}", c_tilde());
        let mass: f64 = (1..=100_000).map(k_tilde).sum();
        assert!(mass < 1.0 && mass > 0.9);
    }

    #[test]
    fn envelope_properties() {
        // weight 1 reproduces the renewal mass of K̃
        let unit = coarse_envelope(1.0 / 3.0, 0.5, 1.0, 64).unwrap();
        assert!((unit.weight - 1.0).abs() < 1e-15);
        assert!(unit.log_value < 0.0);
        let gamma = 6.0 / 7.0;
        let c2 = 2.0;
        let eta = paper_eta(c2, gamma);
        let scan: Vec<f64> =
            (4..=10).map(|k| coarse_envelope(eta, gamma, c2, 1 << k).unwrap().log_value).collect();
        assert!(scan.iter().all(|&v| v <= 0.0));
        let a = coarse_envelope(eta, gamma, c2, 100).unwrap().log_value;
        let b = coarse_envelope(2.0 * eta, gamma, c2, 100).unwrap().log_value;
        assert!(b >= a);
        assert!(coarse_envelope(eta, 1.0, c2, 4).is_err());
    }
}
