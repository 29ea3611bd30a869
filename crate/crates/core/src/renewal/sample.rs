use rand::Rng;

use super::{mass_sequence, RenewalLaw};
use crate::error::Result;
use crate::rng::StreamId;

/// Sampler for `tau ∩ {1..N}`, optionally conditioned on `N in tau`.
#[derive(Debug, Clone)]
pub struct RenewalSampler {
    n: usize,
    k: Vec<f64>,
    cum_k: Vec<f64>,
    u: Vec<f64>,
}

impl RenewalSampler {
    pub fn new(law: &RenewalLaw, n: usize) -> Result<Self> {
        let u = mass_sequence(law, n)?.u;
        let k = law.k[..=n].to_vec();
        let cum_k = crate::conv::cumsum(&k);
        Ok(Self { n, k, cum_k, u })
    }

    /// Renewal points in `1..=N` from i.i.d. jumps.
    pub fn unconditioned<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::new();
        let mut pos = 0usize;
        loop {
            let x: f64 = rng.random();
            // First j with cum_k[j] > x; beyond the table means the jump leaves 1..N.
            let j = self.cum_k.partition_point(|&c| c <= x);
            if j > self.n || pos + j > self.n {
                return out;
            }
            pos += j;
            out.push(pos);
        }
    }

    /// Exact forward sampling under `P(. | N in tau)`: from position `p`
    /// with `r = N - p` steps left the next jump is `j` with probability
    /// `K(j) u_{r-j} / u_r`.
    pub fn conditioned<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::new();
        let mut pos = 0usize;
        while pos < self.n {
            let rem = self.n - pos;
            let target = rng.random::<f64>() * self.u[rem];
            let mut acc = 0.0;
            let mut pick = rem;
            for j in 1..=rem {
                acc += self.k[j] * self.u[rem - j];
                if acc > target {
                    pick = j;
                    break;
                }
            }
            pos += pick;
            out.push(pos);
        }
        out
    }
}

/// One sample of `tau ∩ {1..N}` from the given stream.
pub fn sample_renewal(law: &RenewalLaw, n: usize, stream: StreamId, conditioned: bool) -> Result<Vec<usize>> {
    let s = RenewalSampler::new(law, n)?;
    let mut rng = stream.rng();
    Ok(if conditioned { s.conditioned(&mut rng) } else { s.unconditioned(&mut rng) })
}
