use crate::error::Result;
use crate::renewal::RenewalLaw;

/// `ln a_n`, `n = 0..=N`, for `a_n = z sum_m K(m) a_{n-m}`, `a_0 = 1`.
pub fn annealed_log_partition(z: f64, law: &RenewalLaw, n: usize) -> Result<Vec<f64>> {
    law.check_horizon(n)?;
    let mut a = vec![0.0f64; n + 1];
    let mut out = vec![0.0f64; n + 1];
    a[0] = 1.0;
    let mut shift = 0.0;
    let mut max_a = 1.0f64;
    for i in 1..=n {
        let mut s = 0.0;
        for m in 1..=i {
            s += law.k[m] * a[i - m];
        }
        a[i] = z * s;
        out[i] = a[i].ln() + shift;
        max_a = max_a.max(a[i]);
        if max_a > 1e150 || (max_a < 1e-150 && max_a > 0.0) {
            let f = 1.0 / max_a;
            for x in &mut a[..=i] {
                *x *= f;
            }
            shift += max_a.ln();
            max_a = 1.0;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealedRoot {
    pub free_energy: f64,
    /// `z sum_n K(n) e^{-F n} - 1` at the returned root, tail included.
    pub residual: f64,
}

/// `sum_n K(n) e^{-f n}` with the tail beyond the table done analytically.
pub fn laplace_k(law: &RenewalLaw, f: f64) -> f64 {
    let mut s = 0.0;
    let q = (-f).exp();
    let mut w = 1.0;
    for n in 1..=law.n_max {
        w *= q;
        s += law.k[n] * w;
    }
    s + law.tail.damped_sum_beyond(law.n_max, f) / law.green
}

/// Free energy of the homogeneous model with renewal `K` and weight `z`:
/// 0 for `z <= 1`, else the root of `z sum_n K(n) e^{-F n} = 1`, found by
/// bisection on `[0, ln z + 1]`.
pub fn annealed_free_energy(z: f64, law: &RenewalLaw) -> AnnealedRoot {
    if z <= 1.0 {
        return AnnealedRoot { free_energy: 0.0, residual: z * laplace_k(law, 0.0) - 1.0 };
    }
    let g = |f: f64| z * laplace_k(law, f) - 1.0;
    let (mut lo, mut hi) = (0.0f64, z.ln() + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (g(lo), g(hi));
    let (free_energy, residual) = if rl.abs() <= rh.abs() { (lo, rl) } else { (hi, rh) };
    AnnealedRoot { free_energy, residual }
}

/// `ln(1 + 1/G)`.
pub fn annealed_beta_c(law: &RenewalLaw) -> f64 {
    law.annealed_beta_c()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{lazy3_law, mass_sequence};

    #[test]
    fn reduces_to_mass_sequence() {
        let law = lazy3_law();
        let a = annealed_log_partition(1.0, law, 200).unwrap();
        let u = mass_sequence(law, 200).unwrap().u;
        for n in [1usize, 2, 50, 200] {
            assert!((a[n] - u[n].ln()).abs() < 1e-12);
        }
        let b = annealed_log_partition(0.7, law, 1).unwrap();
        assert!((b[1] - (0.7 * law.k(1)).ln()).abs() < 1e-14);
    }

    #[test]
    fn critical_point() {
        let law = lazy3_law();
        let bc = annealed_beta_c(law);
        assert!(bc > 0.0);
        assert!((bc.exp_m1() * law.green - 1.0).abs() < 1e-12);
        // beta_c = -ln(1 - P(never return)) with P(ever return) = G / (1 + G).
        let p_never = 1.0 / (1.0 + law.green);
        assert!((bc + (1.0 - p_never).ln()).abs() < 1e-12);
    }

    #[test]
    fn free_energy_root() {
        let law = lazy3_law();
        assert_eq!(annealed_free_energy(1.0, law).free_energy, 0.0);
        assert_eq!(annealed_free_energy(0.5, law).free_energy, 0.0);
        for z in [1.2, 1.5, 3.0] {
            let r = annealed_free_energy(z, law);
            assert!(r.free_energy > 1e-3 && r.residual.abs() <= 1e-10, "{z}: {r:?}");
        }
        assert!(annealed_free_energy(1.0, law).residual.abs() < 1e-12);
    }

    #[test]
    fn growth_rate_matches_root() {
        let law = lazy3_law();
        let n = 2000;
        let f = annealed_free_energy(1.5, law).free_energy;
        let a = annealed_log_partition(1.5, law, n).unwrap();
        let rate = a[n] / n as f64;
        assert!((rate - f).abs() < 2.0 * (n as f64).ln() / n as f64, "{rate} vs {f}");
    }
}
