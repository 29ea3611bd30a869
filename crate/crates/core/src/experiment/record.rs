use std::cmp::Ordering;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Header row; the leading tag versions the schema.
pub const CSV_HEADER: [&str; 7] = ["v1:experiment", "criterion", "params", "value", "stderr", "method", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
    Enumeration,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Mc => "mc",
            Method::Enumeration => "enumeration",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "exact" => Ok(Method::Exact),
            "mc" => Ok(Method::Mc),
            "enumeration" => Ok(Method::Enumeration),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// One measured quantity. `params` is an ordered list of `key=value`
/// pairs, written as `k1=v1;k2=v2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    /// `C1`..`C12`, or `-` for records outside the acceptance suite.
    pub criterion: String,
    pub params: Vec<(String, String)>,
    pub value: f64,
    pub stderr: Option<f64>,
    pub method: Method,
    /// Stream the record was drawn from, `-` for deterministic values.
    pub seed: String,
}

impl ResultRecord {
    pub fn exact(experiment: &str, criterion: &str, params: Vec<(String, String)>, value: f64) -> Self {
        ResultRecord {
            experiment: experiment.into(),
            criterion: criterion.into(),
            params,
            value,
            stderr: None,
            method: Method::Exact,
            seed: "-".into(),
        }
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn param_f64(&self, key: &str) -> Option<f64> {
        self.param(key).and_then(|v| v.parse().ok())
    }

    pub fn quantity(&self) -> &str {
        self.param("quantity").unwrap_or("")
    }

    pub fn params_string(&self) -> String {
        self.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }

    fn fields(&self) -> [String; 7] {
        [
            self.experiment.clone(),
            self.criterion.clone(),
            self.params_string(),
            fmt_f64(self.value),
            self.stderr.map(fmt_f64).unwrap_or_default(),
            self.method.to_string(),
            self.seed.clone(),
        ]
    }

    fn from_fields(f: &csv::StringRecord) -> std::result::Result<Self, String> {
        if f.len() != CSV_HEADER.len() {
            return Err(format!("expected {} fields, found {}", CSV_HEADER.len(), f.len()));
        }
        let params = if f[2].is_empty() {
            Vec::new()
        } else {
            f[2].split(';')
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| format!("bad parameter `{kv}`"))
                })
                .collect::<std::result::Result<_, _>>()?
        };
        let value = f[3].parse().map_err(|_| format!("bad value `{}`", &f[3]))?;
        let stderr = if f[4].is_empty() {
            None
        } else {
            Some(f[4].parse().map_err(|_| format!("bad stderr `{}`", &f[4]))?)
        };
        let method: Method = f[5].parse()?;
        if method == Method::Exact && stderr.is_some() {
            return Err("exact record carries a standard error".into());
        }
        Ok(ResultRecord {
            experiment: f[0].to_string(),
            criterion: f[1].to_string(),
            params,
            value,
            stderr,
            method,
            seed: f[6].to_string(),
        })
    }
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn cmp_value(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.total_cmp(&y),
        _ => a.cmp(b),
    }
}

/// Canonical row order: experiment, criterion, then the parameter tuple
/// compared entrywise (numerically where both sides are numbers).
pub fn canonical_cmp(a: &ResultRecord, b: &ResultRecord) -> Ordering {
    a.experiment
        .cmp(&b.experiment)
        .then_with(|| a.criterion.cmp(&b.criterion))
        .then_with(|| {
            for (x, y) in a.params.iter().zip(&b.params) {
                let o = x.0.cmp(&y.0).then_with(|| cmp_value(&x.1, &y.1));
                if o != Ordering::Equal {
                    return o;
                }
            }
            a.params.len().cmp(&b.params.len())
        })
        .then_with(|| a.method.cmp(&b.method))
}

pub fn write_records<W: Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a results file. Malformed rows are collected into
/// [`Error::Records`] rather than skipped.
pub fn read_records<R: Read>(input: R) -> Result<Vec<ResultRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut rows = rd.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::Records(vec![format!("header: {e}")]))?,
        None => return Err(Error::Records(vec!["empty input".into()])),
    };
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Records(vec![format!("unrecognised header `{}`", header.iter().collect::<Vec<_>>().join(","))]));
    }
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for (i, row) in rows.enumerate() {
        match row.map_err(|e| e.to_string()).and_then(|r| ResultRecord::from_fields(&r)) {
            Ok(r) => out.push(r),
            Err(e) => bad.push(format!("row {}: {e}", i + 2)),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Records(bad));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<ResultRecord> {
        vec![
            ResultRecord::exact("doney", "C4", vec![("n".into(), "100".into())], 0.1 + 0.2),
            ResultRecord {
                experiment: "jensen".into(),
                criterion: "C10".into(),
                params: vec![("quantity".into(), "quenched".into()), ("z".into(), "2".into())],
                value: -1.234567890123e-300,
                stderr: Some(3.5e-7),
                method: Method::Mc,
                seed: "1/2/3".into(),
            },
        ]
    }

    #[test]
    fn rows_round_trip_exactly() {
        let recs = sample();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("v1:experiment,criterion,params,value,stderr,method,seed\n"));
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }

    #[test]
    fn malformed_rows_are_listed() {
        let text = "v1:experiment,criterion,params,value,stderr,method,seed\na,C1,x=1,oops,,exact,-\nb,C1,x=1,1,0.1,exact,-\nc,C1,x=1,1,,mc,-\n";
        let Err(Error::Records(bad)) = read_records(text.as_bytes()) else { panic!() };
        assert_eq!(bad.len(), 2);
        assert!(read_records("".as_bytes()).is_err());
        assert!(read_records("x,y\n".as_bytes()).is_err());
    }

    #[test]
    fn numeric_parameter_order() {
        let mk = |n: &str| ResultRecord::exact("e", "C4", vec![("n".into(), n.into())], 0.0);
        let mut v = [mk("1000"), mk("2"), mk("100")];
        v.sort_by(canonical_cmp);
        assert_eq!(v.iter().map(|r| r.param("n").unwrap()).collect::<Vec<_>>(), ["2", "100", "1000"]);
    }
}
