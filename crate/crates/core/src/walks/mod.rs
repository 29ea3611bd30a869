//! Increment laws on `Z^d` and their n-step distributions.

mod llt;
mod pmf;
mod returns;
mod sample;
mod tables;

pub use llt::llt_estimate;
pub use pmf::{n_step_pmf, LatticePmf};
pub use returns::{return_probabilities, ReturnSequence};
pub use sample::{sample_path, Environment, StepSampler};
pub use tables::StepTables;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lattice::{self, Point, MAX_DIM};

const MASS_TOL: f64 = 1e-12;

/// Arithmetic structure of the support, used to gate the local limit
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Aperiodic walk on the full lattice.
    None,
    /// Every step flips the parity of the coordinate sum (simple walk).
    Alternating,
    /// Every step keeps the coordinate sum even (difference of two simple walks).
    EvenSublattice,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    SimpleWalk(usize),
    LazyProduct(usize),
    Custom { dim: usize, support: Vec<(Point, f64)> },
}

/// A symmetric, finitely supported increment law.
#[derive(Debug, Clone)]
pub struct WalkModel {
    name: String,
    dim: usize,
    support: Vec<(Point, f64)>,
    covariance: DMatrix<f64>,
    cov_inv: DMatrix<f64>,
    cov_det: f64,
    parity: Parity,
    /// Per-coordinate symmetric 1-d laws as half tables `q[|a|]`, present
    /// when the law is a product over coordinates.
    factors: Option<Vec<Vec<f64>>>,
    radius: i32,
}

impl WalkModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &[(Point, f64)] {
        &self.support
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn covariance_inverse(&self) -> &DMatrix<f64> {
        &self.cov_inv
    }

    pub fn covariance_det(&self) -> f64 {
        self.cov_det
    }

    /// True when the walk lives on a sublattice or alternates parity.
    pub fn periodic(&self) -> bool {
        self.parity != Parity::None
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn factors(&self) -> Option<&[Vec<f64>]> {
        self.factors.as_deref()
    }

    pub fn is_product(&self) -> bool {
        self.factors.is_some()
    }

    /// Largest absolute coordinate of a single increment.
    pub fn radius(&self) -> i32 {
        self.radius
    }

    pub fn trace_covariance(&self) -> f64 {
        self.covariance.trace()
    }

    /// One-step probability of `x`.
    pub fn step_prob(&self, x: &Point) -> f64 {
        if let Some(f) = &self.factors {
            return (0..self.dim)
                .map(|c| f[c].get(x[c].unsigned_abs() as usize).copied().unwrap_or(0.0))
                .product();
        }
        self.support.iter().find(|(p, _)| p == x).map_or(0.0, |(_, q)| *q)
    }

    fn build(name: String, dim: usize, support: Vec<(Point, f64)>, factors: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidModel(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        let mut merged: BTreeMap<Point, f64> = BTreeMap::new();
        for (x, p) in support {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidModel(format!("probability {p} at {x:?}")));
            }
            if x[dim..].iter().any(|&c| c != 0) {
                return Err(Error::InvalidModel(format!("point {x:?} has coordinates beyond d = {dim}")));
            }
            if p > 0.0 {
                *merged.entry(x).or_insert(0.0) += p;
            }
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidModel(format!("probabilities sum to {total}")));
        }
        for (x, p) in &merged {
            let q = merged.get(&lattice::neg(x)).copied().unwrap_or(0.0);
            if (p - q).abs() > MASS_TOL {
                return Err(Error::InvalidModel(format!(
                    "not symmetric: p({}) = {p} but p(-x) = {q}",
                    lattice::format_point(x, dim)
                )));
            }
        }
        let support: Vec<(Point, f64)> = merged.into_iter().collect();
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for (x, p) in &support {
            for i in 0..dim {
                for j in 0..dim {
                    cov[(i, j)] += p * x[i] as f64 * x[j] as f64;
                }
            }
        }
        let det = cov.determinant();
        let inv = cov.clone().try_inverse().filter(|_| det > 1e-12).ok_or_else(|| {
            Error::InvalidModel("covariance matrix is singular".into())
        })?;
        let sums: Vec<i64> = support.iter().map(|(x, _)| lattice::coord_sum(x).rem_euclid(2)).collect();
        let parity = if sums.iter().all(|&s| s == 1) {
            Parity::Alternating
        } else if sums.iter().all(|&s| s == 0) {
            Parity::EvenSublattice
        } else {
            Parity::None
        };
        let radius = support.iter().flat_map(|(x, _)| x[..dim].iter().map(|c| c.abs())).max().unwrap_or(0);
        let factors = factors.or_else(|| (dim == 1).then(|| {
            let mut half = vec![0.0; radius as usize + 1];
            for (x, p) in &support {
                if x[0] >= 0 {
                    half[x[0] as usize] = *p;
                }
            }
            vec![half]
        }));
        Ok(Self { name, dim, support, covariance: cov, cov_inv: inv, cov_det: det, parity, factors, radius })
    }

    /// Product law with the given per-coordinate half tables.
    fn product(name: String, factors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = factors.len();
        let mut support = vec![(lattice::ORIGIN, 1.0)];
        for (c, half) in factors.iter().enumerate() {
            let h = half.len() as i32 - 1;
            let mut next = Vec::new();
            for (x, p) in &support {
                for a in -h..=h {
                    let q = half[a.unsigned_abs() as usize];
                    if q > 0.0 {
                        let mut y = *x;
                        y[c] = a;
                        next.push((y, p * q));
                    }
                }
            }
            support = next;
        }
        Self::build(name, dim, support, Some(factors))
    }
}

/// Builds a model from the catalogue kinds.
pub fn make_model(kind: ModelKind) -> Result<WalkModel> {
    match kind {
        ModelKind::LazyProduct(d) => {
            check_dim(d)?;
            WalkModel::product(format!("lazy{d}"), vec![vec![0.5, 0.25]; d])
        }
        ModelKind::SimpleWalk(d) => {
            check_dim(d)?;
            let p = 1.0 / (2 * d) as f64;
            let support = (0..d)
                .flat_map(|c| {
                    let mut e = lattice::ORIGIN;
                    e[c] = 1;
                    [(e, p), (lattice::neg(&e), p)]
                })
                .collect();
            WalkModel::build(format!("srw{d}"), d, support, None)
        }
        ModelKind::Custom { dim, support } => WalkModel::build("custom".into(), dim, support, None),
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        Err(Error::InvalidModel(format!("dimension {d} outside 1..={MAX_DIM}")))
    } else {
        Ok(())
    }
}

/// Catalogue ids: `lazy1`..`lazy4` and `srw1`..`srw4`.
pub fn model_by_id(id: &str) -> Result<WalkModel> {
    let parse = |rest: &str| rest.parse::<usize>().map_err(|_| Error::InvalidModel(format!("unknown model id {id:?}")));
    if let Some(rest) = id.strip_prefix("lazy") {
        make_model(ModelKind::LazyProduct(parse(rest)?))
    } else if let Some(rest) = id.strip_prefix("srw") {
        make_model(ModelKind::SimpleWalk(parse(rest)?))
    } else {
        Err(Error::InvalidModel(format!("unknown model id {id:?}")))
    }
}

pub fn catalogue_ids() -> Vec<String> {
    (1..=MAX_DIM).flat_map(|d| [format!("lazy{d}"), format!("srw{d}")]).collect()
}

/// Law of one step of `X - Y` for independent `X ~ mx`, `Y ~ my`.
pub fn difference_model(mx: &WalkModel, my: &WalkModel) -> Result<WalkModel> {
    if mx.dim != my.dim {
        return Err(Error::DimensionMismatch(mx.dim, my.dim));
    }
    let name = format!("{}-{}", mx.name, my.name);
    if let (Some(fx), Some(fy)) = (&mx.factors, &my.factors) {
        let factors = fx.iter().zip(fy).map(|(a, b)| pmf::conv_sym(a, b)).collect();
        return WalkModel::product(name, factors);
    }
    let mut acc: BTreeMap<Point, f64> = BTreeMap::new();
    for (x, p) in &mx.support {
        for (y, q) in &my.support {
            *acc.entry(lattice::sub(x, y)).or_insert(0.0) += p * q;
        }
    }
    WalkModel::build(name, mx.dim, acc.into_iter().collect(), None)
}
