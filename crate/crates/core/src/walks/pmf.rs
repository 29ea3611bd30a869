use std::collections::HashMap;
use std::io::Write;

use super::WalkModel;
use crate::error::Result;
use crate::lattice::{self, Point};

/// Convolution of two symmetric 1-d laws given as half tables.
pub(crate) fn conv_sym(a: &[f64], b: &[f64]) -> Vec<f64> {
    let (ha, hb) = (a.len() as i64 - 1, b.len() as i64 - 1);
    let at = |t: i64| a[t.unsigned_abs() as usize];
    let mut out = vec![0.0; (ha + hb + 1) as usize];
    for (k, o) in out.iter_mut().enumerate() {
        let k = k as i64;
        let mut s = 0.0;
        for j in -hb..=hb {
            let t = k - j;
            if t.abs() <= ha {
                s += at(t) * b[j.unsigned_abs() as usize];
            }
        }
        *o = s;
    }
    out
}

/// Half tables of `q^{*n}` for `n = 0..=n_max`.
pub(crate) fn power_tables(q: &[f64], n_max: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(vec![1.0]);
    for n in 1..=n_max {
        let next = conv_sym(&out[n - 1], q);
        out.push(next);
    }
    out
}

/// Dense box of side `2 * radius + 1` holding a d-dimensional law.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub dim: usize,
    pub radius: i32,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn delta(dim: usize) -> Self {
        Self { dim, radius: 0, data: vec![1.0] }
    }

    fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    #[inline]
    pub fn index(&self, x: &Point) -> Option<usize> {
        let s = self.side();
        let mut idx = 0usize;
        for c in 0..self.dim {
            let v = x[c] + self.radius;
            if v < 0 || v as usize >= s {
                return None;
            }
            idx = idx * s + v as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> Point {
        let s = self.side();
        let mut p = lattice::ORIGIN;
        for c in (0..self.dim).rev() {
            p[c] = (idx % s) as i32 - self.radius;
            idx /= s;
        }
        p
    }

    pub fn get(&self, x: &Point) -> f64 {
        self.index(x).map_or(0.0, |i| self.data[i])
    }

    /// One more step of the walk.
    pub fn step(&self, model: &WalkModel) -> Grid {
        let r = self.radius + model.radius();
        let side = 2 * r as usize + 1;
        let mut next = Grid { dim: self.dim, radius: r, data: vec![0.0; side.pow(self.dim as u32)] };
        for (i, &p) in self.data.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let x = self.point(i);
            for (s, q) in model.support() {
                let y = lattice::add(&x, s);
                let j = next.index(&y).expect("step stays in enlarged box");
                next.data[j] += p * q;
            }
        }
        next
    }
}

#[derive(Debug, Clone)]
enum Repr {
    /// Per-coordinate half tables; the probability of `x` is the product.
    Product(Vec<Vec<f64>>),
    Grid(Grid),
}

/// Exact n-step distribution of a walk.
#[derive(Debug, Clone)]
pub struct LatticePmf {
    dim: usize,
    steps: usize,
    repr: Repr,
}

impl LatticePmf {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub(crate) fn from_halves(steps: usize, halves: Vec<Vec<f64>>) -> Self {
        Self { dim: halves.len(), steps, repr: Repr::Product(halves) }
    }

    pub(crate) fn from_grid(steps: usize, grid: Grid) -> Self {
        Self { dim: grid.dim, steps, repr: Repr::Grid(grid) }
    }

    pub fn prob(&self, x: &Point) -> f64 {
        match &self.repr {
            Repr::Product(h) => {
                let mut p = 1.0;
                for (c, half) in h.iter().enumerate() {
                    match half.get(x[c].unsigned_abs() as usize) {
                        Some(v) => p *= v,
                        None => return 0.0,
                    }
                }
                p
            }
            Repr::Grid(g) => g.get(x),
        }
    }

    /// Per-coordinate half tables, when the law factorises.
    pub fn halves(&self) -> Option<&[Vec<f64>]> {
        match &self.repr {
            Repr::Product(h) => Some(h),
            Repr::Grid(_) => None,
        }
    }

    /// Largest absolute coordinate that can carry mass.
    pub fn radius(&self) -> i32 {
        match &self.repr {
            Repr::Product(h) => h.iter().map(|v| v.len() as i32 - 1).max().unwrap_or(0),
            Repr::Grid(g) => g.radius,
        }
    }

    /// All points with positive probability. Materialises the full support.
    pub fn entries(&self) -> Vec<(Point, f64)> {
        match &self.repr {
            Repr::Grid(g) => g
                .data
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| (g.point(i), p))
                .collect(),
            Repr::Product(h) => {
                let mut out = vec![(lattice::ORIGIN, 1.0)];
                for (c, half) in h.iter().enumerate() {
                    let r = half.len() as i32 - 1;
                    let mut next = Vec::with_capacity(out.len() * (2 * r as usize + 1));
                    for (x, p) in &out {
                        for a in -r..=r {
                            let q = half[a.unsigned_abs() as usize];
                            if q > 0.0 {
                                let mut y = *x;
                                y[c] = a;
                                next.push((y, p * q));
                            }
                        }
                    }
                    out = next;
                }
                out
            }
        }
    }

    pub fn to_map(&self) -> HashMap<Point, f64> {
        self.entries().into_iter().collect()
    }

    pub fn total_mass(&self) -> f64 {
        match &self.repr {
            Repr::Product(h) => h
                .iter()
                .map(|half| half[0] + 2.0 * half[1..].iter().sum::<f64>())
                .product(),
            Repr::Grid(g) => crate::stats::pairwise_sum(&g.data),
        }
    }

    /// `sum_x p(x) q(x)` over the common support.
    pub fn overlap(&self, other: &LatticePmf) -> f64 {
        if let (Some(a), Some(b)) = (self.halves(), other.halves()) {
            return a
                .iter()
                .zip(b)
                .map(|(u, v)| {
                    let n = u.len().min(v.len());
                    u[0] * v[0] + 2.0 * (1..n).map(|k| u[k] * v[k]).sum::<f64>()
                })
                .product();
        }
        self.entries().iter().map(|(x, p)| p * other.prob(x)).sum()
    }

    /// CSV rows `x1,..,xd,probability` in lexicographic order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim).map(|c| format!("x{c}")).collect();
        header.push("probability".into());
        w.write_record(&header)?;
        let mut rows = self.entries();
        rows.sort_by_key(|a| a.0);
        for (x, p) in rows {
            let mut rec: Vec<String> = x[..self.dim].iter().map(|c| c.to_string()).collect();
            rec.push(p.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact law of the position after `n` steps.
pub fn n_step_pmf(model: &WalkModel, n: usize) -> LatticePmf {
    if let Some(f) = model.factors() {
        let halves = f.iter().map(|q| power_tables(q, n).pop().unwrap()).collect();
        return LatticePmf::from_halves(n, halves);
    }
    let mut g = Grid::delta(model.dim());
    for _ in 0..n {
        g = g.step(model);
    }
    LatticePmf::from_grid(n, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{point, ORIGIN};
    use crate::walks::{difference_model, model_by_id};

    #[test]
    fn zero_steps_is_delta() {
        for id in ["lazy3", "srw2"] {
            let p = n_step_pmf(&model_by_id(id).unwrap(), 0);
            assert_eq!(p.prob(&ORIGIN), 1.0);
            assert_eq!(p.entries().len(), 1);
        }
    }

    #[test]
    fn lazy_two_step_return() {
        let p = n_step_pmf(&model_by_id("lazy3").unwrap(), 2);
        assert!((p.prob(&ORIGIN) - 27.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn simple_walk_parity_and_mass() {
        let m = model_by_id("srw3").unwrap();
        let p = n_step_pmf(&m, 5);
        assert_eq!(p.prob(&ORIGIN), 0.0);
        assert!((p.total_mass() - 1.0).abs() < 1e-12);
        assert!(p.prob(&point(&[1, 2, 2])) > 0.0);
        assert!(p.prob(&point(&[6, 0, 0])) == 0.0);
    }

    #[test]
    fn exhaustive_six_step_enumeration() {
        // Every one of the 27^6 increment sequences, accumulated in a dense box.
        let m = model_by_id("lazy3").unwrap();
        let n = 6usize;
        let side = 2 * n + 1;
        let mut acc = vec![0.0f64; side * side * side];
        let steps: Vec<(Point, f64)> = m.support().to_vec();
        fn walk(depth: usize, x: Point, p: f64, steps: &[(Point, f64)], n: usize, side: usize, acc: &mut [f64]) {
            if depth == n {
                let idx = ((x[0] + n as i32) as usize * side + (x[1] + n as i32) as usize) * side + (x[2] + n as i32) as usize;
                acc[idx] += p;
                return;
            }
            for (s, q) in steps {
                walk(depth + 1, lattice::add(&x, s), p * q, steps, n, side, acc);
            }
        }
        walk(0, ORIGIN, 1.0, &steps, n, side, &mut acc);
        let pmf = n_step_pmf(&m, n);
        let r = n as i32;
        let mut max_err = 0.0f64;
        for a in -r..=r {
            for b in -r..=r {
                for c in -r..=r {
                    let idx = ((a + r) as usize * side + (b + r) as usize) * side + (c + r) as usize;
                    max_err = max_err.max((acc[idx] - pmf.prob(&point(&[a, b, c]))).abs());
                }
            }
        }
        assert!(max_err < 1e-15, "max error {max_err}");
    }

    #[test]
    fn grid_and_product_agree_in_d1() {
        let m = model_by_id("lazy1").unwrap();
        let prod = n_step_pmf(&m, 9);
        let mut g = Grid::delta(1);
        for _ in 0..9 {
            g = g.step(&m);
        }
        for a in -10..=10 {
            assert!((prod.prob(&point(&[a])) - g.get(&point(&[a]))).abs() < 1e-15);
        }
    }

    #[test]
    fn difference_return_mass_is_overlap() {
        for id in ["lazy3", "srw3"] {
            let m = model_by_id(id).unwrap();
            let d = difference_model(&m, &m).unwrap();
            for n in 1..=8 {
                let lhs = n_step_pmf(&d, n).prob(&ORIGIN);
                let pn = n_step_pmf(&m, n);
                assert!((lhs - pn.overlap(&pn)).abs() < 1e-12, "{id} n={n}");
            }
        }
    }

    #[test]
    fn csv_export_has_one_row_per_entry() {
        let p = n_step_pmf(&model_by_id("lazy2").unwrap(), 1);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x1,x2,probability");
        assert_eq!(text.lines().count(), 10);
    }
}
