//! The renewal process whose inter-arrival law is the normalised return
//! probability of `X - Y`.

mod contacts;
mod decond;
mod sample;

pub use contacts::{
    chernoff_profile, conditional_mean_contacts, contact_count_dist, ks_halfnormal, ContactLaw,
};
pub use decond::{conditioning_ratio, default_family, RatioEntry, RatioReport, TestFn};
pub use sample::{sample_renewal, RenewalSampler};

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::linear_fit;
use crate::walks::{return_probabilities, WalkModel};

/// Bumped whenever the serialised layout or the construction changes.
pub const LAW_VERSION: u32 = 1;

/// Power-law tail `P(X_n = Y_n) ~ c n^{-a} + c1 n^{-a-1}` with `a = d/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub c: f64,
    pub c1: f64,
}

impl TailFit {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.c * x.powf(-self.exponent) + self.c1 * x.powf(-self.exponent - 1.0)
    }

    /// `sum_{n > n0} eval(n)` by Euler-Maclaurin.
    pub fn sum_beyond(&self, n0: usize) -> f64 {
        let x = n0 as f64;
        let term = |c: f64, a: f64| {
            let integral = c * x.powf(1.0 - a) / (a - 1.0);
            let f = c * x.powf(-a);
            let f1 = -a * c * x.powf(-a - 1.0);
            let f3 = -a * (a + 1.0) * (a + 2.0) * c * x.powf(-a - 3.0);
            integral - f / 2.0 - f1 / 12.0 + f3 / 720.0
        };
        term(self.c, self.exponent) + term(self.c1, self.exponent + 1.0)
    }

    /// `sum_{n > n0} eval(n) e^{-f n}`: Euler-Maclaurin with the integral
    /// done by quadrature in the variable `ln(x / n0)`.
    pub fn damped_sum_beyond(&self, n0: usize, f: f64) -> f64 {
        if f == 0.0 {
            return self.sum_beyond(n0);
        }
        let x0 = n0 as f64;
        let g = |x: f64| self.eval(x) * (-f * x).exp();
        let upper = (60.0 / (self.exponent - 1.0)).min((1.0 + 800.0 / (f * x0)).ln() + 1.0);
        let steps = 4000usize;
        let h = upper / steps as f64;
        let mut s = 0.0;
        for i in 0..=steps {
            let u = i as f64 * h;
            let x = x0 * u.exp();
            let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(x) * x;
        }
        let integral = s * h / 3.0;
        let d1 = {
            let e = 1e-4 * x0;
            (g(x0 + e) - g(x0 - e)) / (2.0 * e)
        };
        integral - g(x0) / 2.0 - d1 / 12.0
    }
}

/// Truncated inter-arrival law with its analytic tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalLaw {
    pub version: u32,
    pub model_x: String,
    pub model_y: String,
    pub dim: usize,
    pub n_max: usize,
    /// `k[n] = K(n)` for `1 <= n <= n_max`; `k[0] = 0`.
    pub k: Vec<f64>,
    pub green: f64,
    /// `K(n) n^{d/2} -> ck`.
    pub ck: f64,
    /// Fit of the return probabilities, before division by `green`.
    pub tail: TailFit,
    /// `1 - sum_{n <= n_max} K(n)`.
    pub tail_mass: f64,
    /// Return probabilities beyond this index are local limit values.
    pub exact_upto: usize,
}

impl RenewalLaw {
    #[inline]
    pub fn k(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else if n <= self.n_max {
            self.k[n]
        } else {
            self.tail.eval(n as f64) / self.green
        }
    }

    /// Return probability `P(X_n = Y_n) = G K(n)`.
    pub fn return_prob(&self, n: usize) -> f64 {
        self.green * self.k(n)
    }

    /// `P(tau_1 > n)` including the analytic tail.
    pub fn survival(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_max + 1];
        let mut acc = self.tail_mass;
        for n in (0..=self.n_max).rev() {
            s[n] = acc;
            acc += self.k[n];
        }
        s
    }

    /// `log(1 + 1/G)`, the annealed critical coupling.
    pub fn annealed_beta_c(&self) -> f64 {
        (1.0 / self.green).ln_1p()
    }

    /// Relative spread of `K(n) n^{d/2}` over the last decade of the table.
    pub fn tail_fluctuation(&self) -> f64 {
        let a = self.tail.exponent;
        let vals: Vec<f64> = (self.n_max / 10..=self.n_max).map(|n| self.k[n] * (n as f64).powf(a)).collect();
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / self.ck
    }

    pub fn check_horizon(&self, n: usize) -> Result<()> {
        if n > self.n_max {
            Err(Error::Horizon { requested: n, n_max: self.n_max })
        } else {
            Ok(())
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        serde_json::to_writer(std::io::BufWriter::new(std::fs::File::create(&tmp)?), self)?;
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let law: Self = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
        if law.version != LAW_VERSION {
            return Err(Error::Cache(format!("{} has version {}, expected {LAW_VERSION}", path.display(), law.version)));
        }
        Ok(law)
    }

    /// Two-column CSV `n,K`.
    pub fn write_k_csv<W: Write>(&self, out: W) -> Result<()> {
        write_two_column(out, "K", self.k.iter().enumerate().skip(1))
    }
}

fn write_two_column<'a, W: Write>(out: W, name: &str, rows: impl Iterator<Item = (usize, &'a f64)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", name])?;
    for (n, v) in rows {
        w.write_record([n.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Builds `K(n) = P(X_n = Y_n) / G` for `n <= n_max`.
pub fn build_renewal(mx: &WalkModel, my: &WalkModel, n_max: usize) -> Result<RenewalLaw> {
    if mx.dim() != my.dim() {
        return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
    }
    let d = mx.dim();
    if d < 3 {
        return Err(Error::Recurrent(d));
    }
    if n_max < 100 {
        return Err(Error::InvalidArgument(format!("n_max = {n_max} is too short for a tail fit")));
    }
    let ret = return_probabilities(mx, my, n_max)?;
    let p = &ret.values;
    let a = d as f64 / 2.0;
    // p_n n^a = c + c1 / n on the last decade.
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        (n_max / 10..=n_max).map(|n| (1.0 / n as f64, p[n] * (n as f64).powf(a))).unzip();
    let (c, c1) = linear_fit(&xs, &ys);
    let tail = TailFit { exponent: a, c, c1 };
    let tail_sum = tail.sum_beyond(n_max);
    let partial = crate::stats::pairwise_sum(&p[1..]);
    let green = partial + tail_sum;
    let mut k = vec![0.0; n_max + 1];
    for n in 1..=n_max {
        k[n] = p[n] / green;
    }
    let tail_mass = tail_sum / green;
    log::info!(
        "renewal {}/{}: G = {green:.12}, c_K = {:.6}, tail mass = {tail_mass:.3e}",
        mx.name(),
        my.name(),
        c / green
    );
    Ok(RenewalLaw {
        version: LAW_VERSION,
        model_x: mx.name().to_string(),
        model_y: my.name().to_string(),
        dim: d,
        n_max,
        k,
        green,
        ck: c / green,
        tail,
        tail_mass,
        exact_upto: ret.exact_upto,
    })
}

/// Canonical cache location for a law.
pub fn cache_path(dir: &Path, mx: &str, my: &str, n_max: usize) -> PathBuf {
    dir.join(format!("renewal-{mx}-{my}-{n_max}-v{LAW_VERSION}.json"))
}

/// Loads the cached law or builds and stores it.
pub fn load_or_build(dir: &Path, mx: &WalkModel, my: &WalkModel, n_max: usize) -> Result<RenewalLaw> {
    let path = cache_path(dir, mx.name(), my.name(), n_max);
    if path.exists() {
        match RenewalLaw::load(&path) {
            Ok(law) => return Ok(law),
            Err(e) => log::warn!("ignoring cache {}: {e}", path.display()),
        }
    }
    log::info!("building renewal law {}/{} up to n = {n_max}", mx.name(), my.name());
    let law = build_renewal(mx, my, n_max)?;
    law.save(&path)?;
    Ok(law)
}

/// `u_n = P(n in tau)` for `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSequence {
    pub u: Vec<f64>,
}

impl MassSequence {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Largest `|u_n - sum_m K(m) u_{n-m}|` for `n >= 1`.
    pub fn recursion_residual(&self, law: &RenewalLaw) -> f64 {
        (1..self.u.len())
            .map(|n| {
                let s: f64 = (1..=n).map(|m| law.k[m] * self.u[n - m]).sum();
                (self.u[n] - s).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Two-column CSV `n,u`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_two_column(out, "u", self.u.iter().enumerate())
    }
}

/// Renewal equation `u_n = sum_{m=1}^{n} K(m) u_{n-m}`, `u_0 = 1`.
pub fn mass_sequence(law: &RenewalLaw, n: usize) -> Result<MassSequence> {
    law.check_horizon(n)?;
    let mut u = vec![0.0; n + 1];
    u[0] = 1.0;
    for i in 1..=n {
        let mut s = 0.0;
        for m in 1..=i {
            s += law.k[m] * u[i - m];
        }
        u[i] = s;
    }
    Ok(MassSequence { u })
}

/// Test helper: lazy3 pair law, built once per process.
#[cfg(test)]
pub(crate) fn lazy3_law() -> &'static RenewalLaw {
    use std::sync::OnceLock;
    static LAW: OnceLock<RenewalLaw> = OnceLock::new();
    LAW.get_or_init(|| {
        let m = crate::walks::model_by_id("lazy3").unwrap();
        build_renewal(&m, &m, 100_000).unwrap()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::model_by_id;

    #[test]
    fn normalisation_and_first_value() {
        let law = lazy3_law();
        let total = crate::stats::pairwise_sum(&law.k) + law.tail_mass;
        assert!((total - 1.0).abs() < 1e-12);
        assert!((law.k(1) * law.green - 27.0 / 512.0).abs() < 1e-15);
        assert!(law.tail_fluctuation() < 0.02);
        assert!((law.green - 0.1511883624).abs() < 1e-8, "G = {}", law.green);
        let c = (2.0 * std::f64::consts::PI).powf(-1.5);
        assert!((law.tail.c - c).abs() < 1e-4 * c);
    }

    #[test]
    fn green_is_stable_under_longer_truncation() {
        let m = model_by_id("lazy3").unwrap();
        let long = build_renewal(&m, &m, 200_000).unwrap();
        assert!((long.green - lazy3_law().green).abs() < 1e-6);
    }

    #[test]
    fn low_dimensions_rejected() {
        let m = model_by_id("lazy2").unwrap();
        assert!(matches!(build_renewal(&m, &m, 1000), Err(Error::Recurrent(2))));
    }

    #[test]
    fn mass_sequence_first_terms_and_residual() {
        let law = lazy3_law();
        let u = mass_sequence(law, 300).unwrap();
        assert_eq!(u.u[0], 1.0);
        assert!((u.u[1] - law.k(1)).abs() < 1e-16);
        assert!((u.u[2] - (law.k(2) + law.k(1) * law.k(1))).abs() < 1e-16);
        assert!(u.recursion_residual(law) <= 1e-14);
        assert!(mass_sequence(law, law.n_max + 1).is_err());
    }

    #[test]
    fn doney_constant() {
        let law = lazy3_law();
        let u = mass_sequence(law, 10_000).unwrap();
        let err = |n: usize| (u.u[n] * 2.0 * std::f64::consts::PI * law.ck * (n as f64).sqrt() - 1.0).abs();
        assert!(err(10_000) <= 0.1);
        assert!(err(100) > err(1000) && err(1000) > err(10_000));
    }

    #[test]
    fn tail_sums() {
        let t = TailFit { exponent: 1.5, c: 1.0, c1: 0.0 };
        // sum_{n > 1000} n^{-3/2} from the Hurwitz zeta value.
        let direct: f64 = (1001..2_000_000).map(|n| (n as f64).powf(-1.5)).sum::<f64>() + 2.0 / 2_000_000f64.sqrt();
        assert!((t.sum_beyond(1000) - direct).abs() < 1e-9);
        assert!((t.damped_sum_beyond(1000, 1e-20) - t.sum_beyond(1000)).abs() < 1e-9);
        let f = 1e-4;
        let damped: f64 = (1001..400_000).map(|n| (n as f64).powf(-1.5) * (-f * n as f64).exp()).sum();
        assert!((t.damped_sum_beyond(1000, f) - damped).abs() < 1e-10, "{} vs {damped}", t.damped_sum_beyond(1000, f));
    }

    #[test]
    fn json_round_trip() {
        let m = model_by_id("lazy3").unwrap();
        let law = build_renewal(&m, &m, 1000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = cache_path(dir.path(), "lazy3", "lazy3", 1000);
        law.save(&path).unwrap();
        assert_eq!(RenewalLaw::load(&path).unwrap(), law);
        let again = load_or_build(dir.path(), &m, &m, 1000).unwrap();
        assert_eq!(again, law);
    }
}
