//! Acceptance thresholds applied to a results file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::record::{read_records, ResultRecord};
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: String,
    pub measured: String,
    pub threshold: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub criteria: Vec<CriterionReport>,
    /// Problems with the input itself; any entry makes the verdict `error`.
    pub errors: Vec<String>,
}

impl VerifyReport {
    pub fn verdict(&self) -> Verdict {
        if !self.errors.is_empty() || self.criteria.is_empty() || self.criteria.iter().any(|c| c.verdict == Verdict::Error) {
            Verdict::Error
        } else if self.criteria.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    /// 0 pass, 1 fail, 2 error.
    pub fn exit_code(&self) -> i32 {
        match self.verdict() {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Error => 2,
        }
    }

    pub fn get(&self, criterion: &str) -> Option<&CriterionReport> {
        self.criteria.iter().find(|c| c.criterion == criterion)
    }
}

fn error_report(errors: Vec<String>) -> VerifyReport {
    VerifyReport { criteria: Vec::new(), errors }
}

/// Reads and checks a results file. `compare`, when given, is a second run
/// with the same config that must match byte for byte.
pub fn verify_file(path: &Path, compare: Option<&Path>) -> VerifyReport {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return error_report(vec![format!("{}: {e}", path.display())]),
    };
    let mut report = match read_records(&bytes[..]) {
        Ok(recs) => verify(&recs),
        Err(Error::Records(list)) => return error_report(list),
        Err(e) => return error_report(vec![e.to_string()]),
    };
    if let Some(other) = compare {
        let entry = match std::fs::read(other) {
            Ok(b) => {
                let same = b == bytes;
                CriterionReport {
                    criterion: "C12".into(),
                    measured: if same { "identical".into() } else { "differs".into() },
                    threshold: "byte-identical".into(),
                    verdict: if same { Verdict::Pass } else { Verdict::Fail },
                }
            }
            Err(e) => {
                report.errors.push(format!("{}: {e}", other.display()));
                return report;
            }
        };
        report.criteria.push(entry);
    }
    report
}

/// Applies every criterion that has records.
pub fn verify(records: &[ResultRecord]) -> VerifyReport {
    let mut groups: BTreeMap<u32, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        if let Some(k) = r.criterion.strip_prefix('C').and_then(|s| s.parse().ok()) {
            groups.entry(k).or_default().push(r);
        }
    }
    let criteria = groups
        .into_iter()
        .map(|(k, recs)| {
            let id = format!("C{k}");
            match check(k, &recs) {
                Ok((measured, threshold, pass)) => CriterionReport {
                    criterion: id,
                    measured,
                    threshold: threshold.into(),
                    verdict: if pass { Verdict::Pass } else { Verdict::Fail },
                },
                Err(msg) => CriterionReport { criterion: id, measured: msg, threshold: String::new(), verdict: Verdict::Error },
            }
        })
        .collect();
    let errors = if records.is_empty() { vec!["no records".into()] } else { Vec::new() };
    VerifyReport { criteria, errors }
}

type Check = std::result::Result<(String, &'static str, bool), String>;

fn by_quantity<'a>(recs: &[&'a ResultRecord], q: &str) -> Vec<&'a ResultRecord> {
    recs.iter().copied().filter(|r| r.quantity() == q).collect()
}

fn one<'a>(recs: &[&'a ResultRecord], q: &str) -> std::result::Result<&'a ResultRecord, String> {
    match by_quantity(recs, q).as_slice() {
        [r] => Ok(r),
        [] => Err(format!("missing `{q}` record")),
        _ => Err(format!("duplicate `{q}` records")),
    }
}

fn nonempty<'a>(recs: &[&'a ResultRecord], q: &str) -> std::result::Result<Vec<&'a ResultRecord>, String> {
    let v = by_quantity(recs, q);
    if v.is_empty() {
        Err(format!("missing `{q}` records"))
    } else {
        Ok(v)
    }
}

fn key_f64(r: &ResultRecord, key: &str) -> std::result::Result<f64, String> {
    r.param_f64(key).ok_or_else(|| format!("record without numeric `{key}`"))
}

/// Values sorted by the numeric parameter `key`.
fn ladder(recs: &[&ResultRecord], key: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut v = recs.iter().map(|r| Ok((key_f64(r, key)?, r.value))).collect::<std::result::Result<Vec<_>, String>>()?;
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(v)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Pairs the `mc` records of `mc_q` with the `ref_q` record of equal
/// remaining parameters.
fn paired<'a>(
    recs: &[&'a ResultRecord],
    mc_q: &str,
    ref_q: &str,
) -> std::result::Result<Vec<(&'a ResultRecord, &'a ResultRecord)>, String> {
    let rest = |r: &ResultRecord| r.params.iter().filter(|(k, _)| k != "quantity").cloned().collect::<Vec<_>>();
    let refs = nonempty(recs, ref_q)?;
    nonempty(recs, mc_q)?
        .into_iter()
        .map(|m| {
            let key = rest(m);
            refs.iter()
                .find(|r| rest(r) == key)
                .map(|r| (m, *r))
                .ok_or_else(|| format!("no `{ref_q}` record for {}", m.params_string()))
        })
        .collect()
}

fn check(k: u32, recs: &[&ResultRecord]) -> Check {
    match k {
        1 => {
            let worst = nonempty(recs, "max_rel_err")?.iter().map(|r| r.value).fold(0.0, f64::max);
            Ok((format!("max rel err {worst:e}"), "<= 1e-10", worst <= 1e-10))
        }
        2 => {
            let mut worst = 0.0f64;
            for (m, e) in paired(recs, "mc_mean", "exact")? {
                let se = m.stderr.ok_or("mc record without stderr")?;
                worst = worst.max((m.value - e.value).abs() / se);
            }
            Ok((format!("max |mc - exact| / se = {worst:.3}"), "<= 3", worst <= 3.0))
        }
        3 => {
            let g = one(recs, "green_identity")?.value;
            let mut pass = (g - 1.0).abs() <= 1e-12;
            let mut msg = format!("(e^beta_c - 1) G - 1 = {:e}", g - 1.0);
            for r in nonempty(recs, "free_energy")? {
                let z = key_f64(r, "z")?;
                if z <= 1.0 {
                    pass &= r.value == 0.0;
                } else if (z - 1.2).abs() < 1e-12 {
                    pass &= r.value > 1e-3;
                }
                msg.push_str(&format!("; F({z}) = {:e}", r.value));
            }
            for r in by_quantity(recs, "root_residual") {
                pass &= r.value.abs() <= 1e-10;
            }
            Ok((msg, "identity <= 1e-12; F = 0 for z <= 1; F(1.2) > 1e-3; residual <= 1e-10", pass))
        }
        4 => {
            let v = ladder(&nonempty(recs, "doney_err")?, "n")?;
            let errs: Vec<f64> = v.iter().map(|x| x.1).collect();
            let last = *errs.last().expect("nonempty");
            Ok((format!("errors {errs:?}"), "largest N <= 0.1, decreasing in N", last <= 0.1 && strictly_decreasing(&errs)))
        }
        5 => {
            let diff = nonempty(recs, "enum_diff")?.iter().map(|r| r.value).fold(0.0, f64::max);
            let c = one(recs, "cxy")?.value;
            let v: Vec<(f64, f64)> = ladder(&nonempty(recs, "r_a_of_r")?, "r")?.into_iter().filter(|x| x.0 >= 50.0).collect();
            let at200 = v.iter().find(|x| x.0 == 200.0).ok_or("missing r = 200")?.1;
            let gaps: Vec<f64> = v.iter().map(|x| (x.1 - c).abs()).collect();
            let rel = (at200 - c).abs() / c;
            Ok((
                format!("enum diff {diff:e}; r A(r) at 200 = {at200:.6} (rel {rel:.4}); gaps {gaps:?}"),
                "enum diff <= 1e-12; rel <= 0.15; decreasing from r = 50",
                diff <= 1e-12 && rel <= 0.15 && strictly_decreasing(&gaps),
            ))
        }
        6 => {
            let s2 = one(recs, "sigma_y_sq")?.value;
            let c = one(recs, "cxy")?.value;
            let d = nonempty(recs, "delta_sq")?.into_iter().find(|r| r.param_f64("r") == Some(200.0)).ok_or("missing r = 200")?;
            let b = nonempty(recs, "b_of_r")?.into_iter().find(|r| r.param_f64("r") == Some(200.0)).ok_or("missing r = 200")?;
            let (rd, rb) = ((d.value - s2).abs() / s2, (b.value - c).abs() / c);
            Ok((format!("|D|^2 rel {rd:.4}; B rel {rb:.4}"), "<= 0.05; <= 0.10", rd <= 0.05 && rb <= 0.10))
        }
        7 => {
            let u = one(recs, "upper99")?.value;
            Ok((format!("upper 99% bound {u:.4}"), "<= 4", u <= 4.0))
        }
        8 => {
            let z = nonempty(recs, "z_sum_rel_err")?.iter().map(|r| r.value).fold(0.0, f64::max);
            let p = one(recs, "p_sum_rel_err")?.value;
            Ok((format!("Z^I sum rel err {z:e}; P_I sum rel err {p:e}"), "<= 1e-10", z <= 1e-10 && p <= 1e-10))
        }
        9 => {
            let v = ladder(&nonempty(recs, "ks")?, "n")?;
            let ks: Vec<f64> = v.iter().map(|x| x.1).collect();
            let last = *ks.last().expect("nonempty");
            Ok((format!("KS {ks:?}"), "largest N < 0.05, decreasing in N", last < 0.05 && strictly_decreasing(&ks)))
        }
        10 => {
            let mut worst = f64::NEG_INFINITY;
            for (qn, an) in paired(recs, "quenched", "annealed")? {
                let se = qn.stderr.ok_or("mc record without stderr")?;
                worst = worst.max(qn.value - an.value - 3.0 * se);
            }
            Ok((format!("max (quenched - annealed - 3 se) = {worst:e}"), "<= 0", worst <= 0.0))
        }
        11 => {
            let v = ladder(&nonempty(recs, "log_tail")?, "alpha")?;
            if v.len() < 3 {
                return Err("need at least three alpha values".into());
            }
            let slopes: Vec<f64> = v.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0.powi(2) - w[0].0.powi(2))).collect();
            let pass = slopes.iter().all(|s| *s < 0.0) && strictly_decreasing(&slopes);
            Ok((format!("slopes vs alpha^2 {slopes:?}"), "negative and steepening", pass))
        }
        _ => Err(format!("no threshold defined for C{k}")),
    }
}
