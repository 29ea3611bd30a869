//! Quenched and annealed partition functions of the pinning model.
//!
//! With `z' = e^beta - 1` and `z = z' G`, expanding `e^{beta L_N}` over
//! contact sets gives
//! `Ž_n = sum_{m<n} Ž_m K(n-m) w(z, n-m, Y_n - Y_m)`, `Ž_0 = 1`, where
//! `K(k) w(z, k, x) = z' p^X_k(x)`. The DP below runs on that product, so
//! it needs neither `G` nor the renewal table and works in any dimension.

mod annealed;
mod estimate;

pub use annealed::{annealed_beta_c, annealed_free_energy, annealed_log_partition, AnnealedRoot};
pub use estimate::{
    fractional_moment_estimate, fractional_moment_ladder, quenched_free_energy_estimate, FractionalMoment,
    FreeEnergyEstimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Point};
use crate::renewal::RenewalLaw;
use crate::rng::StreamId;
use crate::walks::{Environment, Parity, StepTables, WalkModel};

/// Exact tables are used for gaps up to this length, the local limit
/// approximation beyond.
pub const DEFAULT_CROSSOVER: usize = 128;

const RESCALE_HI: f64 = 1e150;
const RESCALE_LO: f64 = 1e-150;

/// `beta`, `z' = e^beta - 1` and `z = z' G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub beta: f64,
    pub z_prime: f64,
    pub z: f64,
    pub green: f64,
}

impl CouplingParams {
    pub fn from_beta(beta: f64, green: f64) -> Self {
        let z_prime = beta.exp_m1();
        Self { beta, z_prime, z: z_prime * green, green }
    }

    pub fn from_z_prime(z_prime: f64, green: f64) -> Self {
        Self { beta: z_prime.ln_1p(), z_prime, z: z_prime * green, green }
    }

    pub fn from_z(z: f64, green: f64) -> Self {
        let z_prime = z / green;
        Self { beta: z_prime.ln_1p(), z_prime, z, green }
    }

    /// `ln((1 + z') / z')`, the offset between `ln Z^beta` and `ln Ž`.
    pub fn log_check_to_beta(&self) -> f64 {
        self.z_prime.ln_1p() - self.z_prime.ln()
    }
}

/// `ln Ž_n` for `n = 0..=N` on one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTable {
    pub log_values: Vec<f64>,
    pub params: CouplingParams,
    pub env_stream: Option<StreamId>,
    /// True when some gap used the local limit approximation.
    pub approximate: bool,
}

impl PartitionTable {
    pub fn horizon(&self) -> usize {
        self.log_values.len() - 1
    }

    pub fn log_check(&self, n: usize) -> f64 {
        self.log_values[n]
    }

    /// `ln Z^beta_n = ln Ž_n + ln((1 + z') / z')`.
    pub fn log_z_beta(&self, n: usize) -> f64 {
        self.log_values[n] + self.params.log_check_to_beta()
    }
}

/// The walks, their renewal law and the step tables of `X`.
#[derive(Debug, Clone)]
pub struct PinningSystem {
    mx: WalkModel,
    my: WalkModel,
    law: Option<RenewalLaw>,
    x_tables: StepTables,
}

impl PinningSystem {
    pub fn new(mx: &WalkModel, my: &WalkModel, law: Option<RenewalLaw>, crossover: usize) -> Result<Self> {
        if mx.dim() != my.dim() {
            return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
        }
        if let Some(l) = &law {
            if l.dim != mx.dim() {
                return Err(Error::DimensionMismatch(l.dim, mx.dim()));
            }
        }
        Ok(Self { mx: mx.clone(), my: my.clone(), law, x_tables: StepTables::new(mx, crossover) })
    }

    pub fn model_x(&self) -> &WalkModel {
        &self.mx
    }

    pub fn model_y(&self) -> &WalkModel {
        &self.my
    }

    pub fn law(&self) -> Result<&RenewalLaw> {
        self.law.as_ref().ok_or_else(|| Error::InvalidArgument("no renewal law attached".into()))
    }

    pub fn crossover(&self) -> usize {
        self.x_tables.n_exact()
    }

    pub fn x_tables(&self) -> &StepTables {
        &self.x_tables
    }

    pub fn params_from_z(&self, z: f64) -> Result<CouplingParams> {
        Ok(CouplingParams::from_z(z, self.law()?.green))
    }

    /// `w(z, n, x) = z p^X_n(x) / p^{X-Y}_n(0)`.
    pub fn weight(&self, z: f64, n: usize, x: &Point) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("weight needs n >= 1".into()));
        }
        let law = self.law()?;
        law.check_horizon(n)?;
        Ok(z * self.x_tables.prob(n, x) / law.return_prob(n))
    }

    /// Log-space DP for `Ž_n`, `n <= N`, rescaled whenever values leave
    /// `[1e-150, 1e150]`.
    pub fn quenched_partition(&self, params: &CouplingParams, env: &Environment) -> Result<PartitionTable> {
        if let Some(law) = &self.law {
            law.check_horizon(env.len())?;
        }
        let n = env.len();
        let pos = env.positions();
        let kern = GapKernel::new(&self.x_tables, n);
        let mut v = vec![0.0f64; n + 1];
        let mut log_values = vec![0.0f64; n + 1];
        v[0] = 1.0;
        let mut shift = 0.0f64;
        let mut max_v = 1.0f64;
        for i in 1..=n {
            let yi = pos[i];
            let mut s = 0.0;
            for m in 0..i {
                if v[m] != 0.0 {
                    s += v[m] * kern.prob(i - m, &lattice::sub(&yi, &pos[m]));
                }
            }
            let val = params.z_prime * s;
            v[i] = val;
            log_values[i] = val.ln() + shift;
            max_v = max_v.max(val);
            if max_v > RESCALE_HI || (max_v < RESCALE_LO && max_v > 0.0) {
                let f = 1.0 / max_v;
                for x in &mut v[..=i] {
                    *x *= f;
                }
                shift += max_v.ln();
                max_v = 1.0;
            }
        }
        Ok(PartitionTable {
            log_values,
            params: *params,
            env_stream: env.stream,
            approximate: n > self.x_tables.n_exact(),
        })
    }

    /// Same recursion without rescaling; overflows for long strongly
    /// pinned systems.
    pub fn quenched_partition_direct(&self, z_prime: f64, env: &Environment) -> Vec<f64> {
        let n = env.len();
        let pos = env.positions();
        let mut v = vec![0.0f64; n + 1];
        v[0] = 1.0;
        for i in 1..=n {
            let s: f64 = (0..i).map(|m| v[m] * self.x_tables.prob(i - m, &lattice::sub(&pos[i], &pos[m]))).sum();
            v[i] = z_prime * s;
        }
        v
    }
}

/// `p^X_k(x)` with the Gaussian prefactors precomputed for the gaps
/// beyond the exact tables.
struct GapKernel<'a> {
    tables: &'a StepTables,
    prefactor: Vec<f64>,
    fast_llt: bool,
}

impl<'a> GapKernel<'a> {
    fn new(tables: &'a StepTables, n: usize) -> Self {
        let fast_llt = tables.model().parity() == Parity::None;
        let prefactor = if fast_llt && n > tables.n_exact() {
            (0..=n)
                .map(|k| if k == 0 { 0.0 } else { crate::walks::llt_estimate(tables.model(), k, &lattice::ORIGIN) })
                .collect()
        } else {
            Vec::new()
        };
        Self { tables, prefactor, fast_llt }
    }

    #[inline]
    fn prob(&self, k: usize, x: &Point) -> f64 {
        if k <= self.tables.n_exact() || !self.fast_llt {
            return self.tables.prob(k, x);
        }
        let m = self.tables.model();
        let inv = m.covariance_inverse();
        let d = m.dim();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] as f64 * inv[(i, j)] * x[j] as f64;
            }
        }
        self.prefactor[k] * (-q / (2.0 * k as f64)).exp()
    }
}

/// `(z'/(1+z')) E^X[(1+z')^{L_N} 1{X_N = Y_N}]` over all paths of `X`; exponential
/// in `N`, meant as an oracle for tiny systems.
pub fn brute_force_partition(mx: &WalkModel, z_prime: f64, env: &Environment) -> f64 {
    let ys = env.positions();
    let n = env.len();
    fn rec(depth: usize, x: Point, w: f64, mx: &WalkModel, ys: &[Point], n: usize, zp: f64) -> f64 {
        if depth == n {
            return if x == ys[n] { w } else { 0.0 };
        }
        mx.support()
            .iter()
            .map(|(s, p)| {
                let y = lattice::add(&x, s);
                let hit = if y == ys[depth + 1] { 1.0 + zp } else { 1.0 };
                rec(depth + 1, y, w * p * hit, mx, ys, n, zp)
            })
            .sum()
    }
    z_prime / (1.0 + z_prime) * rec(0, lattice::ORIGIN, 1.0, mx, &ys, n, z_prime)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::renewal::lazy3_law;
    use crate::rng::tag;
    use crate::walks::{model_by_id, n_step_pmf, sample_path};

    pub(crate) fn lazy3_system() -> PinningSystem {
        let m = model_by_id("lazy3").unwrap();
        PinningSystem::new(&m, &m, Some(lazy3_law().clone()), DEFAULT_CROSSOVER).unwrap()
    }

    #[test]
    fn params_are_consistent() {
        let g = 0.15;
        let a = CouplingParams::from_beta(0.3, g);
        for b in [CouplingParams::from_z(a.z, g), CouplingParams::from_z_prime(a.z_prime, g)] {
            assert!((a.beta - b.beta).abs() < 1e-12 && (a.z - b.z).abs() < 1e-12 && (a.z_prime - b.z_prime).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_has_mean_z() {
        let sys = lazy3_system();
        let my = sys.model_y().clone();
        let z = 1.7;
        for n in 1..=12 {
            let mean: f64 = n_step_pmf(&my, n).entries().iter().map(|(x, p)| p * sys.weight(z, n, x).unwrap()).sum();
            assert!((mean - z).abs() < 1e-12, "n={n}: {mean}");
        }
        let w0 = sys.weight(z, 3, &lattice::ORIGIN).unwrap();
        let want = z * n_step_pmf(sys.model_x(), 3).prob(&lattice::ORIGIN) / (sys.law().unwrap().green * sys.law().unwrap().k(3));
        assert!((w0 - want).abs() < 1e-12);
    }

    #[test]
    fn weight_is_bounded() {
        let sys = lazy3_system();
        let mut worst = 0.0f64;
        for i in 0..20 {
            let env = sample_path(sys.model_y(), 1000, StreamId::new(5, tag("wb"), i));
            let pos = env.positions();
            for n in (1..=1000).step_by(7) {
                worst = worst.max(sys.weight(2.0, n, &pos[n]).unwrap());
            }
        }
        assert!(worst < 2.0 * 3.0, "sup w = {worst}");
    }

    #[test]
    fn matches_path_enumeration() {
        let sys = lazy3_system();
        for i in 0..5 {
            let env = sample_path(sys.model_y(), 4, StreamId::new(9, tag("bf"), i));
            for z in [0.5, 1.0, 2.0] {
                let p = sys.params_from_z(z).unwrap();
                let table = sys.quenched_partition(&p, &env).unwrap();
                for n in 1..=4 {
                    let sub = Environment::new(3, env.increments[..n].to_vec());
                    let bf = brute_force_partition(sys.model_x(), p.z_prime, &sub);
                    let dp = table.log_check(n).exp();
                    assert!((dp / bf - 1.0).abs() < 1e-10, "n={n} z={z}: {dp} vs {bf}");
                }
            }
        }
    }

    #[test]
    fn one_dimensional_direct_dp() {
        let m = model_by_id("lazy1").unwrap();
        let sys = PinningSystem::new(&m, &m, None, DEFAULT_CROSSOVER).unwrap();
        let p = CouplingParams::from_z_prime(0.8, f64::NAN);
        for i in 0..3 {
            let env = sample_path(&m, 10, StreamId::new(1, tag("d1"), i));
            let t = sys.quenched_partition(&p, &env).unwrap();
            let bf = brute_force_partition(&m, 0.8, &env);
            assert!((t.log_check(10).exp() / bf - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn first_step_and_zero_coupling() {
        let sys = lazy3_system();
        let env = sample_path(sys.model_y(), 8, StreamId::new(2, 0, 0));
        let p = sys.params_from_z(1.3).unwrap();
        let t = sys.quenched_partition(&p, &env).unwrap();
        let law = sys.law().unwrap();
        let want = law.k(1) * sys.weight(1.3, 1, &env.increments[0]).unwrap();
        assert!((t.log_check(1).exp() - want).abs() < 1e-14);
        assert_eq!(t.log_check(0), 0.0);
        let zero = sys.quenched_partition(&sys.params_from_z(0.0).unwrap(), &env).unwrap();
        assert!(zero.log_values[1..].iter().all(|v| *v == f64::NEG_INFINITY));
    }

    #[test]
    fn rescaling_matches_direct_space() {
        let sys = lazy3_system();
        let env = sample_path(sys.model_y(), 128, StreamId::new(4, tag("scale"), 0));
        let p = sys.params_from_z(4.0).unwrap();
        let t = sys.quenched_partition(&p, &env).unwrap();
        let direct = sys.quenched_partition_direct(p.z_prime, &env);
        assert!(direct[128].is_finite());
        for n in [1usize, 10, 64, 128] {
            assert!((t.log_check(n) - direct[n].ln()).abs() < 1e-10, "n={n}");
        }
        // Long enough to leave the double range without rescaling.
        let env = sample_path(sys.model_y(), 2500, StreamId::new(4, tag("scale"), 1));
        let t = sys.quenched_partition(&sys.params_from_z(40.0).unwrap(), &env).unwrap();
        assert!(t.log_check(2500).is_finite() && t.log_check(2500) > 750.0, "{}", t.log_check(2500));
    }
}
