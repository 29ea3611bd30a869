use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{self, Point};
use crate::rng::StreamId;
use crate::stats::Estimate;
use crate::walks::{StepSampler, WalkModel};

/// Longest interval handled by exhaustive path enumeration.
pub fn r_enum_max(dim: usize) -> usize {
    match dim {
        1 => 10,
        2 => 6,
        3 => 4,
        _ => 3,
    }
}

fn endpoint_histogram(m: &WalkModel, r: usize) -> HashMap<Point, f64> {
    fn rec(depth: usize, x: Point, w: f64, m: &WalkModel, r: usize, out: &mut HashMap<Point, f64>) {
        if depth == r {
            *out.entry(x).or_insert(0.0) += w;
            return;
        }
        for (s, p) in m.support() {
            rec(depth + 1, lattice::add(&x, s), w * p, m, r, out);
        }
    }
    let mut out = HashMap::new();
    rec(0, lattice::ORIGIN, 1.0, m, r, &mut out);
    out
}

/// Exhaustive sum over all path pairs `(X, Y)` of length `r` with
/// `X_r = Y_r`: the paths of `X` are enumerated into an endpoint
/// histogram, then every path of `Y` is weighted by the number of
/// meeting `X`-paths. Returns `E[f_q(Δ) | X_r = Y_r]` for each `q`.
pub fn enumerate_expectations(
    mx: &WalkModel,
    my: &WalkModel,
    r: usize,
    fs: &[&PathStat],
) -> Result<Vec<f64>> {
    if mx.dim() != my.dim() {
        return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
    }
    if r == 0 || r > r_enum_max(mx.dim()) {
        return Err(Error::InvalidArgument(format!(
            "enumeration supports 1 <= r <= {} in d = {}",
            r_enum_max(mx.dim()),
            mx.dim()
        )));
    }
    let hist = endpoint_histogram(mx, r);
    struct Acc<'a> {
        hist: &'a HashMap<Point, f64>,
        fs: &'a [&'a PathStat],
        num: Vec<f64>,
        den: f64,
        steps: Vec<Point>,
    }
    fn rec(acc: &mut Acc, depth: usize, y: Point, w: f64, my: &WalkModel, r: usize) {
        if depth == r {
            let h = acc.hist.get(&y).copied().unwrap_or(0.0);
            if h > 0.0 {
                acc.den += w * h;
                for (q, f) in acc.fs.iter().enumerate() {
                    acc.num[q] += f(&acc.steps) * w * h;
                }
            }
            return;
        }
        for (s, p) in my.support() {
            acc.steps[depth] = *s;
            rec(acc, depth + 1, lattice::add(&y, s), w * p, my, r);
        }
    }
    let mut acc = Acc { hist: &hist, fs, num: vec![0.0; fs.len()], den: 0.0, steps: vec![lattice::ORIGIN; r] };
    rec(&mut acc, 0, lattice::ORIGIN, 1.0, my, r);
    Ok(acc.num.iter().map(|n| n / acc.den).collect())
}

/// `E_tau[Δ_i · Δ_j]` for every pair `i < j` by enumeration.
pub fn enumerate_pair_table(mx: &WalkModel, my: &WalkModel, r: usize) -> Result<Vec<((usize, usize), f64)>> {
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (i + 1..r).map(move |j| (i, j))).collect();
    let closures: Vec<Box<PathStat>> = pairs
        .iter()
        .map(|&(i, j)| Box::new(move |s: &[Point]| lattice::dot(&s[i], &s[j]) as f64) as Box<PathStat>)
        .collect();
    let refs: Vec<&PathStat> = closures.iter().map(|b| b.as_ref()).collect();
    let vals = enumerate_expectations(mx, my, r, &refs)?;
    Ok(pairs.into_iter().map(|(i, j)| (i + 1, j + 1)).zip(vals).collect())
}

/// Statistic of the increments of `Y` over one interval.
pub type PathStat = dyn Fn(&[Point]) -> f64 + Sync;

const CHUNK: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionEstimate {
    pub estimate: Estimate,
    pub accepted: usize,
    pub proposals: usize,
}

/// Rejection sampler for the tilted law: draw independent paths of `X` and
/// `Y` of length `r` and keep `f(ΔY)` whenever `X_r = Y_r`.
pub fn mc_rejection(
    mx: &WalkModel,
    my: &WalkModel,
    r: usize,
    f: &PathStat,
    proposals: usize,
    stream: StreamId,
) -> Result<RejectionEstimate> {
    if mx.dim() != my.dim() {
        return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
    }
    let (sx, sy) = (StepSampler::new(mx), StepSampler::new(my));
    let chunks = proposals.div_ceil(CHUNK);
    let vals: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream.child(c as u64).rng();
            let take = CHUNK.min(proposals - c * CHUNK);
            let mut out = Vec::new();
            let mut ys = vec![lattice::ORIGIN; r];
            for _ in 0..take {
                let mut x = lattice::ORIGIN;
                let mut y = lattice::ORIGIN;
                for slot in ys.iter_mut() {
                    x = lattice::add(&x, &sx.sample(&mut rng));
                    *slot = sy.sample(&mut rng);
                    y = lattice::add(&y, slot);
                }
                if x == y {
                    out.push(f(&ys));
                }
            }
            out
        })
        .collect();
    Ok(RejectionEstimate { accepted: vals.len(), estimate: Estimate::from_samples(&vals), proposals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::tag;
    use crate::tilt::TiltedInterval;
    use crate::walks::model_by_id;

    #[test]
    fn enumeration_matches_exact_conv() {
        let m = model_by_id("lazy3").unwrap();
        for r in 2..=4 {
            let table = enumerate_pair_table(&m, &m, r).unwrap();
            let exact = TiltedInterval::new(&m, &m, r).unwrap().pair_correlation().unwrap();
            for (_, v) in &table {
                assert!((v - exact).abs() < 1e-12, "r={r}: {v} vs {exact}");
            }
        }
        let one = model_by_id("lazy1").unwrap();
        let table = enumerate_pair_table(&one, &one, 10).unwrap();
        let exact = TiltedInterval::new(&one, &one, 10).unwrap().pair_correlation().unwrap();
        assert!(table.iter().all(|(_, v)| (v - exact).abs() < 1e-12));
        assert!(enumerate_pair_table(&m, &m, 5).is_err());
    }

    #[test]
    fn rejection_agrees_with_enumeration() {
        let m = model_by_id("lazy3").unwrap();
        let f = |s: &[Point]| (lattice::dot(&s[0], &s[1]) * lattice::dot(&s[0], &s[2])) as f64;
        let exact = enumerate_expectations(&m, &m, 3, &[&f]).unwrap()[0];
        let mc = mc_rejection(&m, &m, 3, &f, 400_000, StreamId::new(1, tag("rej"), 0)).unwrap();
        assert!((mc.estimate.mean - exact).abs() < 4.0 * mc.estimate.stderr, "{mc:?} vs {exact}");
        assert!(mc.accepted > 1000);
    }
}
