use std::f64::consts::PI;

use super::{Parity, WalkModel};
use crate::lattice::{self, Point};

/// Gaussian local limit approximation of `P(S_n = x)`.
///
/// Walks confined to a sublattice of index two get the factor 2 on the
/// reachable points and 0 elsewhere.
pub fn llt_estimate(model: &WalkModel, n: usize, x: &Point) -> f64 {
    assert!(n >= 1, "local limit estimate needs n >= 1");
    let d = model.dim();
    let factor = match model.parity() {
        Parity::None => 1.0,
        Parity::Alternating => {
            if (lattice::coord_sum(x) - n as i64).rem_euclid(2) != 0 {
                return 0.0;
            }
            2.0
        }
        Parity::EvenSublattice => {
            if lattice::coord_sum(x).rem_euclid(2) != 0 {
                return 0.0;
            }
            2.0
        }
    };
    let inv = model.covariance_inverse();
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            q += x[i] as f64 * inv[(i, j)] * x[j] as f64;
        }
    }
    let nf = n as f64;
    factor * (2.0 * PI * nf).powf(-(d as f64) / 2.0) * model.covariance_det().powf(-0.5) * (-q / (2.0 * nf)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{point, ORIGIN};
    use crate::walks::{model_by_id, n_step_pmf};

    #[test]
    fn origin_ratio_lazy3() {
        let m = model_by_id("lazy3").unwrap();
        let exact = n_step_pmf(&m, 50).prob(&ORIGIN);
        let ratio = llt_estimate(&m, 50, &ORIGIN) / exact;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn parity_gate() {
        let m = model_by_id("srw3").unwrap();
        assert_eq!(llt_estimate(&m, 5, &ORIGIN), 0.0);
        assert!(llt_estimate(&m, 6, &ORIGIN) > 0.0);
        let exact = n_step_pmf(&m, 40).prob(&point(&[2, 0, 0]));
        let ratio = llt_estimate(&m, 40, &point(&[2, 0, 0])) / exact;
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn scaled_peak_is_bounded() {
        let m = model_by_id("lazy3").unwrap();
        let peaks: Vec<f64> = [1usize, 10, 50, 100, 200]
            .iter()
            .map(|&n| n_step_pmf(&m, n).prob(&ORIGIN) * (n as f64).powf(1.5))
            .collect();
        let c = peaks.iter().cloned().fold(0.0, f64::max);
        assert!(c < 0.2, "{peaks:?}");
    }

    #[test]
    fn relative_error_shrinks_on_the_moderate_ball() {
        let m = model_by_id("lazy3").unwrap();
        let mut last = f64::INFINITY;
        for n in [25usize, 50, 100, 200] {
            let pmf = n_step_pmf(&m, n);
            let r = (n as f64).powf(0.6);
            let ri = r.floor() as i32;
            let mut worst = 0.0f64;
            for a in 0..=ri {
                for b in 0..=a {
                    for c in 0..=b {
                        let x = point(&[a, b, c]);
                        if (lattice::norm2(&x) as f64) <= r * r {
                            let e = pmf.prob(&x) / llt_estimate(&m, n, &x) - 1.0;
                            worst = worst.max(e.abs());
                        }
                    }
                }
            }
            assert!(worst < last, "n={n}: {worst} !< {last}");
            last = worst;
        }
    }
}
