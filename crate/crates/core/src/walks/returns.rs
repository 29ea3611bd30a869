use super::pmf::Grid;
use super::{difference_model, llt_estimate, WalkModel};
use crate::error::{Error, Result};
use crate::lattice::ORIGIN;

/// Entries of a 1-d table below this fraction of its peak are dropped.
const TRUNCATION: f64 = 1e-30;
/// Exact horizon for laws that do not factorise over coordinates.
const GRID_HORIZON: usize = 64;
const GRID_CELLS: usize = 4_000_000;

/// `P(X_n = Y_n)` for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct ReturnSequence {
    pub values: Vec<f64>,
    /// Values at `n <= exact_upto` come from exact convolution, the rest
    /// from the local limit approximation of `X - Y`.
    pub exact_upto: usize,
}

/// Return probabilities of `X - Y` at the origin up to `n_max`.
pub fn return_probabilities(mx: &WalkModel, my: &WalkModel, n_max: usize) -> Result<ReturnSequence> {
    if mx.dim() != my.dim() {
        return Err(Error::DimensionMismatch(mx.dim(), my.dim()));
    }
    let diff = difference_model(mx, my)?;
    if let Some(f) = diff.factors() {
        let mut per_coord: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
        for q in f {
            if !per_coord.iter().any(|(k, _)| k == q) {
                per_coord.push((q.clone(), origin_sequence_1d(q, n_max)));
            }
        }
        let mut values = vec![1.0; n_max + 1];
        for q in f {
            let seq = &per_coord.iter().find(|(k, _)| k == q).unwrap().1;
            for (v, s) in values.iter_mut().zip(seq) {
                *v *= s;
            }
        }
        return Ok(ReturnSequence { values, exact_upto: n_max });
    }
    let mut values = vec![1.0];
    let same = mx.support() == my.support();
    let (mut gx, mut gy) = (Grid::delta(mx.dim()), Grid::delta(my.dim()));
    while values.len() <= n_max.min(GRID_HORIZON) {
        let side = 2 * (gx.radius.max(gy.radius) + mx.radius().max(my.radius())) as usize + 1;
        if side.pow(mx.dim() as u32) > GRID_CELLS {
            break;
        }
        gx = gx.step(mx);
        gy = if same { gx.clone() } else { gy.step(my) };
        let overlap: f64 = gx.data.iter().enumerate().map(|(i, p)| p * gy.get(&gx.point(i))).sum();
        values.push(overlap);
    }
    let exact_upto = values.len() - 1;
    for n in values.len()..=n_max {
        values.push(llt_estimate(&diff, n, &ORIGIN));
    }
    Ok(ReturnSequence { values, exact_upto })
}

/// `q^{*n}(0)` for a symmetric 1-d law, `n = 0..=n_max`, by streaming
/// convolution with tail truncation.
fn origin_sequence_1d(q: &[f64], n_max: usize) -> Vec<f64> {
    let k = q.len() - 1;
    let mut out = Vec::with_capacity(n_max + 1);
    let mut half = vec![1.0f64];
    out.push(1.0);
    let mut next = Vec::new();
    for _ in 1..=n_max {
        let len = half.len();
        next.clear();
        next.resize(len + k, 0.0);
        for (a, slot) in next.iter_mut().enumerate() {
            let mut s = 0.0;
            for (b, &qb) in q.iter().enumerate() {
                let right = a + b;
                if right < len {
                    s += qb * half[right];
                }
                if b > 0 {
                    let left = a.abs_diff(b);
                    if left < len {
                        s += qb * half[left];
                    }
                }
            }
            *slot = s;
        }
        let peak = next.iter().cloned().fold(0.0, f64::max);
        while next.len() > 1 && *next.last().unwrap() < TRUNCATION * peak {
            next.pop();
        }
        std::mem::swap(&mut half, &mut next);
        out.push(half[0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::{model_by_id, n_step_pmf};

    #[test]
    fn product_sequence_matches_exact_pmf() {
        let m = model_by_id("lazy3").unwrap();
        let d = difference_model(&m, &m).unwrap();
        let seq = return_probabilities(&m, &m, 40).unwrap();
        assert_eq!(seq.exact_upto, 40);
        for n in [0usize, 1, 2, 17, 40] {
            let want = n_step_pmf(&d, n).prob(&ORIGIN);
            assert!((seq.values[n] - want).abs() <= 1e-14 * want, "n={n}");
        }
        assert!((seq.values[1] - 27.0 / 512.0).abs() < 1e-16);
    }

    #[test]
    fn grid_sequence_matches_pmf_then_llt() {
        let m = model_by_id("srw3").unwrap();
        let d = difference_model(&m, &m).unwrap();
        let seq = return_probabilities(&m, &m, 80).unwrap();
        assert_eq!(seq.exact_upto, 64);
        for n in [1usize, 2, 7] {
            assert!((seq.values[n] - n_step_pmf(&d, n).prob(&ORIGIN)).abs() < 1e-15);
        }
        let r = seq.values[64] / llt_estimate(&d, 64, &ORIGIN);
        assert!((r - 1.0).abs() < 0.03, "{r}");
    }
}
