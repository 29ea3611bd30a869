use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::TiltKernel;
use crate::error::{Error, Result};
use crate::lattice::{self, Point};
use crate::rng::StreamId;
use crate::stats::Estimate;
use crate::walks::{StepSampler, WalkModel};

/// `F = -sum_{i != j} M_ij Δ_i · Δ_j` by the direct double sum.
pub fn penalty_direct(kernel: &TiltKernel, increments: &[Point]) -> Result<f64> {
    check_len(kernel, increments)?;
    let lag = kernel.lag();
    let mut s = 0.0;
    for i in 0..increments.len() {
        for j in i + 1..increments.len() {
            s += lag[j - i] * lattice::dot(&increments[i], &increments[j]) as f64;
        }
    }
    Ok(-2.0 * s)
}

/// Screened penalty keeping only `|i - j| <= window`. Approximate.
pub fn penalty_screened(kernel: &TiltKernel, increments: &[Point], window: usize) -> Result<f64> {
    check_len(kernel, increments)?;
    let lag = kernel.lag();
    let mut s = 0.0;
    for i in 0..increments.len() {
        for j in i + 1..increments.len().min(i + window + 1) {
            s += lag[j - i] * lattice::dot(&increments[i], &increments[j]) as f64;
        }
    }
    Ok(-2.0 * s)
}

fn check_len(kernel: &TiltKernel, increments: &[Point]) -> Result<()> {
    if increments.len() != kernel.len() {
        return Err(Error::InvalidArgument(format!(
            "block has {} increments, kernel length is {}",
            increments.len(),
            kernel.len()
        )));
    }
    Ok(())
}

/// Exact penalty in `O(L log L)`: with the Toeplitz kernel embedded in a
/// circulant of size `P >= 2L`, `x^T M x = (1/P) sum_f Ŵ_f |X̂_f|^2`.
/// Two coordinates are packed into one complex transform; since `Ŵ` is
/// even the cross terms cancel in the sum.
#[derive(Clone)]
pub struct SpectralPenalty {
    l: usize,
    p: usize,
    w_hat: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPenalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPenalty").field("l", &self.l).field("p", &self.p).finish()
    }
}

impl SpectralPenalty {
    pub fn new(kernel: &TiltKernel) -> Self {
        let l = kernel.len();
        let p = (2 * l).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(p);
        let mut w = vec![Complex::new(0.0, 0.0); p];
        for (k, &m) in kernel.lag().iter().enumerate().skip(1) {
            w[k].re = m;
            w[p - k].re = m;
        }
        fft.process(&mut w);
        Self { l, p, w_hat: w.iter().map(|c| c.re).collect(), fft }
    }

    pub fn penalty(&self, increments: &[Point], dim: usize, buf: &mut Vec<Complex<f64>>) -> f64 {
        assert_eq!(increments.len(), self.l);
        let mut total = 0.0;
        let mut c = 0;
        while c < dim {
            buf.clear();
            buf.resize(self.p, Complex::new(0.0, 0.0));
            for (i, x) in increments.iter().enumerate() {
                buf[i] = Complex::new(x[c] as f64, if c + 1 < dim { x[c + 1] as f64 } else { 0.0 });
            }
            self.fft.process(buf);
            total += buf.iter().zip(&self.w_hat).map(|(z, w)| w * z.norm_sqr()).sum::<f64>();
            c += 2;
        }
        -total / self.p as f64
    }
}

/// `prod_k exp(-F_k 1{F_k >= 0})` over the blocks of `I`.
pub fn g_factor(kernel: &TiltKernel, blocks: &[&[Point]]) -> Result<f64> {
    let mut g = 1.0;
    for b in blocks {
        let f = penalty_direct(kernel, b)?;
        if f >= 0.0 {
            g *= (-f).exp();
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorneMReport {
    /// Estimate of `E[exp(gamma/(1-gamma) F^+)]`.
    pub estimate: Estimate,
    /// Upper end of the two-sided 99% confidence interval.
    pub upper99: f64,
    /// `(u, P(F >= u))` on a grid of thresholds.
    pub tail: Vec<(f64, f64)>,
    pub frobenius_sq: f64,
}

const CHUNK: usize = 1000;

/// Monte Carlo for `E[exp(gamma/(1-gamma) F_1 1{F_1 >= 0})]` over blocks of
/// i.i.d. increments of `model`.
pub fn borne_m_check(
    kernel: &TiltKernel,
    model: &WalkModel,
    gamma: f64,
    samples: usize,
    stream: StreamId,
) -> Result<BorneMReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} outside (0, 1)")));
    }
    let spec = SpectralPenalty::new(kernel);
    let sampler = StepSampler::new(model);
    let dim = model.dim();
    let chunks = samples.div_ceil(CHUNK);
    let f_values: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = stream.child(c as u64).rng();
            let mut buf = Vec::new();
            let take = CHUNK.min(samples - c * CHUNK);
            let mut out = Vec::with_capacity(take);
            for _ in 0..take {
                let inc = sampler.path(kernel.len(), &mut rng);
                out.push(spec.penalty(&inc, dim, &mut buf));
            }
            out
        })
        .collect();
    let a = gamma / (1.0 - gamma);
    let vals: Vec<f64> = f_values.iter().map(|&f| if f >= 0.0 { (a * f).exp() } else { 1.0 }).collect();
    let estimate = Estimate::from_samples(&vals);
    let upper99 = estimate.mean + 2.575_829_303_548_901 * estimate.stderr;
    let fmax = f_values.iter().cloned().fold(0.0, f64::max);
    let tail = (0..=20)
        .map(|i| {
            let u = fmax * i as f64 / 20.0;
            (u, f_values.iter().filter(|&&f| f >= u).count() as f64 / f_values.len() as f64)
        })
        .collect();
    Ok(BorneMReport { estimate, upper99, tail, frobenius_sq: kernel.frobenius_sq() })
}
