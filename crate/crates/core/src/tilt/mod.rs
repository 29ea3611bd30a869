//! Change of measure on the disorder and tilted increment correlations.

mod enumerate;
mod interval;
mod kernel;
mod penalty;

pub use enumerate::{enumerate_expectations, enumerate_pair_table, mc_rejection, r_enum_max, PathStat, RejectionEstimate};
pub use interval::{cross_interval_quartic, TiltedInterval};
pub use kernel::{long_range_frobenius_closed_form, KernelKind, TiltKernel};
pub use penalty::{borne_m_check, g_factor, penalty_direct, penalty_screened, BorneMReport, SpectralPenalty};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::walks::WalkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiltMethod {
    ExactConv,
    Enumeration,
    McRejection,
}

impl std::fmt::Display for TiltMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TiltMethod::ExactConv => "exact_conv",
            TiltMethod::Enumeration => "enumeration",
            TiltMethod::McRejection => "mc_rejection",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticPattern {
    /// `E[(Δ_i·Δ_j)(Δ_i·Δ_l)]`, distinct `i, j, l`.
    IijL,
    /// `E[(Δ_i·Δ_j)(Δ_k·Δ_l)]`, four distinct indices in one interval.
    IjKlSame,
    /// `i, k` in an interval of length `r`, `j, l` in one of length `s`.
    IjKlCross { r: usize, s: usize },
}

/// `C_{X,Y} = tr Σ_Y - tr((Σ_X^{-1} + Σ_Y^{-1})^{-1})`.
pub fn cxy_constant(sigma_x: &DMatrix<f64>, sigma_y: &DMatrix<f64>) -> Result<f64> {
    if sigma_x.shape() != sigma_y.shape() || !sigma_x.is_square() {
        return Err(Error::InvalidArgument("covariances must be square and of equal size".into()));
    }
    let inv = |m: &DMatrix<f64>| {
        if (m - m.transpose()).amax() > 1e-12 {
            return Err(Error::Singular);
        }
        m.clone().cholesky().map(|c| c.inverse()).ok_or(Error::Singular)
    };
    let sum = inv(sigma_x)? + inv(sigma_y)?;
    let harmonic = sum.cholesky().ok_or(Error::Singular)?.inverse();
    let c = sigma_y.trace() - harmonic.trace();
    assert!(c > 0.0, "C_XY must be positive for positive definite inputs, got {c}");
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct D4Scan {
    /// First `r` with `A(r) > 0`.
    pub p0: usize,
    /// `(r, A(r))` for every scanned `r`.
    pub table: Vec<(usize, f64)>,
}

/// Scans `A(r)`, `r = 2..=cap`, and returns the first positive entry.
pub fn d4_pick_p0(mx: &WalkModel, my: &WalkModel, cap: usize) -> Result<D4Scan> {
    if mx.dim() != 4 || my.dim() != 4 {
        return Err(Error::InvalidArgument(format!("d4 scan needs d = 4 models, got {} and {}", mx.dim(), my.dim())));
    }
    let table: Vec<(usize, f64)> =
        (2..=cap).map(|r| Ok((r, TiltedInterval::new(mx, my, r)?.a_of_r()?))).collect::<Result<_>>()?;
    let p0 = table.iter().find(|(_, a)| *a > 0.0).map(|(r, _)| *r).ok_or(Error::NoPositiveCorrelation(cap))?;
    Ok(D4Scan { p0, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::model_by_id;

    #[test]
    fn cxy_values() {
        let id = |v: f64| DMatrix::<f64>::identity(3, 3) * v;
        assert!((cxy_constant(&id(1.0 / 3.0), &id(1.0 / 3.0)).unwrap() - 0.5).abs() < 1e-14);
        assert!((cxy_constant(&id(0.5), &id(0.5)).unwrap() - 0.75).abs() < 1e-14);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 3.0]);
        assert!(cxy_constant(&a, &b).unwrap() > 0.0);
        assert!(matches!(cxy_constant(&id(0.0), &id(1.0)), Err(Error::Singular)));
    }

    #[test]
    fn d4_scan_finds_positive_lag() {
        let m = model_by_id("lazy4").unwrap();
        let scan = d4_pick_p0(&m, &m, 40).unwrap();
        assert!(TiltedInterval::new(&m, &m, scan.p0).unwrap().a_of_r().unwrap() > 0.0);
        assert_eq!(scan.table.len(), 39);
        assert!(d4_pick_p0(&model_by_id("lazy3").unwrap(), &m, 10).is_err());
    }
}
