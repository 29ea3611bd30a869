use std::collections::HashMap;

use super::QuarticPattern;
use crate::error::{Error, Result};
use crate::lattice::{self, Point};
use crate::walks::{n_step_pmf, LatticePmf, WalkModel};

/// `h_k(t) = sum_x p^Y_{r-k}(x - t) p^X_r(x)`: the weight of `k` given
/// increments with sum `t` under the meeting constraint `X_r = Y_r`.
enum HTable {
    /// Per coordinate, indexed by `t + offset`.
    Product { offset: i32, per_coord: Vec<Vec<f64>> },
    Sparse(HashMap<Point, f64>),
}

impl HTable {
    #[inline]
    fn get(&self, t: &Point, dim: usize) -> f64 {
        match self {
            HTable::Product { offset, per_coord } => {
                let mut p = 1.0;
                for (c, v) in per_coord.iter().enumerate().take(dim) {
                    p *= v[(t[c] + offset) as usize];
                }
                p
            }
            HTable::Sparse(m) => m.get(t).copied().unwrap_or(0.0),
        }
    }
}

/// Law of the increments of `Y` on one renewal interval of length `r`,
/// i.e. `Y` conditioned to meet an independent `X` at time `r`. All
/// expectations are exact finite sums over the step tables.
pub struct TiltedInterval {
    r: usize,
    dim: usize,
    my: WalkModel,
    pmf_x: LatticePmf,
    pmf_y: LatticePmf,
    z: f64,
}

impl TiltedInterval {
    pub fn new(mx: &WalkModel, my: &WalkModel, r: usize) -> Result<Self> {
        if mx.dim() != my.dim() {
            return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
        }
        if r == 0 {
            return Err(Error::InvalidArgument("interval length must be >= 1".into()));
        }
        let pmf_x = n_step_pmf(mx, r);
        let pmf_y = n_step_pmf(my, r);
        let z = pmf_x.overlap(&pmf_y);
        Ok(Self { r, dim: mx.dim(), my: my.clone(), pmf_x, pmf_y, z })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `P(X_r = Y_r)`.
    pub fn meeting_prob(&self) -> f64 {
        self.z
    }

    fn h_table(&self, k: usize) -> HTable {
        let rest = n_step_pmf(&self.my, self.r - k);
        if let (Some(hx), Some(hy), Some(fy)) = (self.pmf_x.halves(), rest.halves(), self.my.factors()) {
            let offset = k as i32 * fy.iter().map(|q| q.len() as i32 - 1).max().unwrap_or(0);
            let per_coord = (0..self.dim)
                .map(|c| {
                    let at = |v: &[f64], a: i32| v.get(a.unsigned_abs() as usize).copied().unwrap_or(0.0);
                    let rx = hx[c].len() as i32 - 1;
                    (-offset..=offset)
                        .map(|t| (-rx..=rx).map(|a| at(&hy[c], a - t) * at(&hx[c], a)).sum())
                        .collect()
                })
                .collect();
            return HTable::Product { offset, per_coord };
        }
        let mut sums: Vec<Point> = vec![lattice::ORIGIN];
        for _ in 0..k {
            let mut next: Vec<Point> =
                sums.iter().flat_map(|t| self.my.support().iter().map(move |(s, _)| lattice::add(t, s))).collect();
            next.sort();
            next.dedup();
            sums = next;
        }
        let xs = self.pmf_x.entries();
        let m = sums
            .into_iter()
            .map(|t| (t, xs.iter().map(|(x, p)| p * rest.prob(&lattice::sub(x, &t))).sum()))
            .collect();
        HTable::Sparse(m)
    }

    /// `E_tau[f(Δ_1, .., Δ_k)]` for the first `k` increments of the interval
    /// (any `k` distinct indices by exchangeability).
    pub fn expectation(&self, k: usize, f: impl Fn(&[Point]) -> f64) -> Result<f64> {
        if k == 0 || k > self.r {
            return Err(Error::InvalidArgument(format!("need 1 <= k <= r, got k = {k}, r = {}", self.r)));
        }
        let h = self.h_table(k);
        let support = self.my.support();
        let mut steps = vec![lattice::ORIGIN; k];
        let mut total = 0.0;
        let mut idx = vec![0usize; k];
        let n = support.len();
        'outer: loop {
            let mut w = 1.0;
            let mut t = lattice::ORIGIN;
            for (i, &j) in idx.iter().enumerate() {
                let (s, q) = &support[j];
                steps[i] = *s;
                w *= q;
                t = lattice::add(&t, s);
            }
            let hv = h.get(&t, self.dim);
            if hv != 0.0 {
                total += f(&steps) * w * hv;
            }
            for pos in (0..k).rev() {
                idx[pos] += 1;
                if idx[pos] < n {
                    continue 'outer;
                }
                idx[pos] = 0;
            }
            break;
        }
        Ok(total / self.z)
    }

    /// `E[‖Δ_1‖^2 | X_r = Y_r]`.
    pub fn delta_sq_given_meet(&self) -> f64 {
        self.expectation(1, |s| lattice::norm2(&s[0]) as f64).expect("k = 1 is valid")
    }

    /// `B(r) = sum_x (‖x‖^2 / r) p^X_r(x) p^Y_r(x) / sum_x p^X_r(x) p^Y_r(x)`.
    pub fn b_of_r(&self) -> f64 {
        let r = self.r as f64;
        if let (Some(hx), Some(hy)) = (self.pmf_x.halves(), self.pmf_y.halves()) {
            return (0..self.dim)
                .map(|c| {
                    let n = hx[c].len().min(hy[c].len());
                    let w = |a: usize| hx[c][a] * hy[c][a];
                    let num: f64 = (1..n).map(|a| 2.0 * (a * a) as f64 * w(a)).sum();
                    let den: f64 = w(0) + (1..n).map(|a| 2.0 * w(a)).sum::<f64>();
                    num / den
                })
                .sum::<f64>()
                / r;
        }
        let num: f64 =
            self.pmf_x.entries().iter().map(|(x, p)| lattice::norm2(x) as f64 * p * self.pmf_y.prob(x)).sum();
        num / self.z / r
    }

    /// `E_tau[Δ_i · Δ_j]` for `i != j` in the interval, via
    /// `(B(r) - E[‖Δ_1‖^2 | X_r = Y_r]) / (r - 1)`.
    pub fn pair_correlation(&self) -> Result<f64> {
        if self.r < 2 {
            return Err(Error::InvalidArgument("pair correlation needs r >= 2".into()));
        }
        Ok((self.b_of_r() - self.delta_sq_given_meet()) / (self.r - 1) as f64)
    }

    /// Same quantity from the two-increment sum.
    pub fn pair_correlation_direct(&self) -> Result<f64> {
        if self.r < 2 {
            return Err(Error::InvalidArgument("pair correlation needs r >= 2".into()));
        }
        self.expectation(2, |s| lattice::dot(&s[0], &s[1]) as f64)
    }

    /// `A(r) = -E_tau[Δ_i · Δ_j]`.
    pub fn a_of_r(&self) -> Result<f64> {
        self.pair_correlation().map(|v| -v)
    }

    /// Tilted mean of one increment; zero for symmetric laws.
    pub fn mean(&self) -> Vec<f64> {
        (0..self.dim).map(|c| self.expectation(1, |s| s[0][c] as f64).expect("k = 1")).collect()
    }

    /// `C[nu][mu] = E_tau[Δ_1^nu Δ_2^mu]`.
    pub fn cross_covariance(&self) -> Result<Vec<Vec<f64>>> {
        if self.r < 2 {
            return Err(Error::InvalidArgument("cross covariance needs r >= 2".into()));
        }
        let d = self.dim;
        let mut out = vec![vec![0.0; d]; d];
        for (nu, row) in out.iter_mut().enumerate() {
            for (mu, v) in row.iter_mut().enumerate() {
                *v = self.expectation(2, |s| (s[0][nu] * s[1][mu]) as f64)?;
            }
        }
        Ok(out)
    }

    /// Fourth-order correlations within one interval.
    pub fn quartic(&self, pattern: QuarticPattern) -> Result<f64> {
        match pattern {
            QuarticPattern::IijL => {
                if self.r < 3 {
                    return Err(Error::InvalidArgument("pattern iij_l needs r >= 3".into()));
                }
                self.expectation(3, |s| (lattice::dot(&s[0], &s[1]) * lattice::dot(&s[0], &s[2])) as f64)
            }
            QuarticPattern::IjKlSame => {
                if self.r < 4 {
                    return Err(Error::InvalidArgument("pattern ij_kl_same needs r >= 4".into()));
                }
                self.expectation(4, |s| (lattice::dot(&s[0], &s[1]) * lattice::dot(&s[2], &s[3])) as f64)
            }
            QuarticPattern::IjKlCross { .. } => Err(Error::InvalidArgument(
                "cross-interval pattern needs two intervals; use cross_interval_quartic".into(),
            )),
        }
    }
}

/// `E_tau[(Δ_i·Δ_j)(Δ_k·Δ_l)]` with `i, k` in an interval of length `r` and
/// `j, l` in one of length `s`: `sum_{nu,mu} C_r[nu][mu] C_s[nu][mu]`.
pub fn cross_interval_quartic(a: &TiltedInterval, b: &TiltedInterval) -> Result<f64> {
    let (ca, cb) = (a.cross_covariance()?, b.cross_covariance()?);
    Ok(ca.iter().zip(&cb).flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| x * y)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::model_by_id;

    fn lazy(r: usize) -> TiltedInterval {
        let m = model_by_id("lazy3").unwrap();
        TiltedInterval::new(&m, &m, r).unwrap()
    }

    #[test]
    fn two_routes_agree() {
        for r in [2usize, 3, 7, 20] {
            let t = lazy(r);
            let a = t.pair_correlation().unwrap();
            let b = t.pair_correlation_direct().unwrap();
            assert!((a - b).abs() < 1e-13, "r={r}: {a} vs {b}");
        }
        assert!((lazy(2).a_of_r().unwrap() - 3.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn generic_path_matches_product_path() {
        let m = model_by_id("srw3").unwrap();
        let t = TiltedInterval::new(&m, &m, 6).unwrap();
        let a = t.pair_correlation().unwrap();
        let b = t.pair_correlation_direct().unwrap();
        assert!((a - b).abs() < 1e-13);
        let s1 = TiltedInterval::new(&m, &m, 1).unwrap();
        // r = 1: only the step itself; E[‖Δ‖^2] = 1 for the simple walk.
        assert!((s1.delta_sq_given_meet() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_step_moment() {
        let m = model_by_id("lazy3").unwrap();
        let t = lazy(1);
        let num: f64 = m.support().iter().map(|(x, p)| lattice::norm2(x) as f64 * p * p).sum();
        let den: f64 = m.support().iter().map(|(_, p)| p * p).sum();
        assert!((t.delta_sq_given_meet() - num / den).abs() < 1e-14);
    }

    #[test]
    fn means_vanish_and_cross_factorises() {
        let t = lazy(5);
        assert!(t.mean().iter().all(|v| v.abs() < 1e-15));
        let (a, b) = (lazy(6), lazy(9));
        let cross = cross_interval_quartic(&a, &b).unwrap();
        let want = a.a_of_r().unwrap() * b.a_of_r().unwrap() / 3.0;
        assert!((cross - want).abs() < 1e-14, "{cross} vs {want}");
        let c = a.cross_covariance().unwrap();
        assert!(c[0][1].abs() < 1e-15 && (c[0][0] - c[2][2]).abs() < 1e-15);
    }
}
