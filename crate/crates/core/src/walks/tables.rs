use super::pmf::{power_tables, Grid};
use super::{llt_estimate, LatticePmf, WalkModel};
use crate::lattice::Point;

/// Total number of cells allowed across dense tables of a non-product law.
const GRID_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone)]
enum Exact {
    /// `[coordinate][n][|a|]`
    Product(Vec<Vec<Vec<f64>>>),
    Grid(Vec<Grid>),
}

/// `P(S_n = x)` for all `n`: exact tables up to `n_exact`, local limit
/// approximation beyond.
#[derive(Debug, Clone)]
pub struct StepTables {
    model: WalkModel,
    n_exact: usize,
    exact: Exact,
}

impl StepTables {
    /// Exact tables up to `crossover` steps. For laws that do not factorise
    /// over coordinates the horizon is further capped by a memory budget.
    pub fn new(model: &WalkModel, crossover: usize) -> Self {
        let (n_exact, exact) = match model.factors() {
            Some(f) => (crossover, Exact::Product(f.iter().map(|q| power_tables(q, crossover)).collect())),
            None => {
                let mut grids = vec![Grid::delta(model.dim())];
                let mut cells = 1usize;
                while grids.len() <= crossover {
                    let side = 2 * (grids.last().unwrap().radius + model.radius()) as usize + 1;
                    cells += side.pow(model.dim() as u32);
                    if cells > GRID_BUDGET {
                        break;
                    }
                    let next = grids.last().unwrap().step(model);
                    grids.push(next);
                }
                (grids.len() - 1, Exact::Grid(grids))
            }
        };
        if n_exact < crossover {
            log::debug!("{}: exact tables capped at n = {n_exact}", model.name());
        }
        Self { model: model.clone(), n_exact, exact }
    }

    pub fn model(&self) -> &WalkModel {
        &self.model
    }

    pub fn n_exact(&self) -> usize {
        self.n_exact
    }

    pub fn is_exact(&self, n: usize) -> bool {
        n <= self.n_exact
    }

    #[inline]
    pub fn prob(&self, n: usize, x: &Point) -> f64 {
        if n > self.n_exact {
            return llt_estimate(&self.model, n, x);
        }
        match &self.exact {
            Exact::Product(t) => {
                let mut p = 1.0;
                for (c, tab) in t.iter().enumerate() {
                    match tab[n].get(x[c].unsigned_abs() as usize) {
                        Some(v) => p *= v,
                        None => return 0.0,
                    }
                }
                p
            }
            Exact::Grid(g) => g[n].get(x),
        }
    }

    /// Exact pmf at `n <= n_exact`.
    pub fn pmf(&self, n: usize) -> Option<LatticePmf> {
        if n > self.n_exact {
            return None;
        }
        Some(match &self.exact {
            Exact::Product(t) => LatticePmf::from_halves(n, t.iter().map(|tab| tab[n].clone()).collect()),
            Exact::Grid(g) => LatticePmf::from_grid(n, g[n].clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::point;
    use crate::walks::{model_by_id, n_step_pmf};

    #[test]
    fn tables_match_direct_pmf() {
        for id in ["lazy3", "srw2"] {
            let m = model_by_id(id).unwrap();
            let t = StepTables::new(&m, 12);
            assert_eq!(t.n_exact(), 12);
            for n in [0usize, 1, 5, 12] {
                let p = n_step_pmf(&m, n);
                for (x, v) in p.entries() {
                    assert!((t.prob(n, &x) - v).abs() < 1e-15);
                }
            }
            assert!(!t.is_exact(13));
            assert!(t.prob(13, &point(&[1, 0])) >= 0.0);
        }
    }

    #[test]
    fn convolution_consistency() {
        let m = model_by_id("lazy3").unwrap();
        let t = StepTables::new(&m, 12);
        for (a, b) in [(1usize, 1usize), (3, 4), (5, 7), (6, 6)] {
            let pa = t.pmf(a).unwrap().entries();
            let pb = t.pmf(b).unwrap().entries();
            let mut acc = std::collections::HashMap::new();
            for (x, p) in &pa {
                for (y, q) in &pb {
                    *acc.entry(crate::lattice::add(x, y)).or_insert(0.0) += p * q;
                }
            }
            for (x, v) in acc {
                assert!((t.prob(a + b, &x) - v).abs() < 1e-12);
            }
        }
    }
}
