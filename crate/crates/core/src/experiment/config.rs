//! Flat `key = value` configuration. Grids are built from repeated keys:
//!
//! ```text
//! experiment = jensen
//! z = 0.5
//! z = 2
//! n = 128
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Experiment ids understood by [`super::run`].
pub const EXPERIMENTS: &[&str] = &[
    "oracle",
    "annealed-identity",
    "critical-point",
    "doney",
    "a-of-r",
    "tilt-moments",
    "borne-m",
    "coarse",
    "halfnormal",
    "jensen",
    "chernoff",
    "annealed",
    "free-energy",
    "frac-moment",
];

const SCALAR_KEYS: &[&str] = &[
    "model_x", "model_y", "seed", "out", "workers", "n_max", "cache_dir", "l", "m", "gamma", "c_m",
    "frobenius_sq", "envs", "samples",
];
const GRID_KEYS: &[&str] = &["experiment", "z", "beta", "n", "r", "alpha"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Experiment ids or recipe names, run in order.
    pub experiments: Vec<String>,
    pub model_x: String,
    pub model_y: String,
    pub z: Vec<f64>,
    pub beta: Vec<f64>,
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub alpha: Vec<f64>,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub gamma: Option<f64>,
    pub c_m: Option<f64>,
    pub frobenius_sq: Option<f64>,
    pub envs: Option<usize>,
    pub samples: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub n_max: usize,
    pub cache_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiments: Vec::new(),
            model_x: "lazy3".into(),
            model_y: "lazy3".into(),
            z: Vec::new(),
            beta: Vec::new(),
            n: Vec::new(),
            r: Vec::new(),
            alpha: Vec::new(),
            l: None,
            m: None,
            gamma: None,
            c_m: None,
            frobenius_sq: None,
            envs: None,
            samples: None,
            seed: 1,
            out: PathBuf::from("results.csv"),
            workers: None,
            n_max: 100_000,
            cache_dir: PathBuf::from("rwpm-cache"),
        }
    }
}

impl ExperimentConfig {
    pub fn for_experiment(id: &str) -> Self {
        ExperimentConfig { experiments: vec![id.to_string()], ..Default::default() }
    }

    /// Parses the text format; every offending line is reported at once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim().to_ascii_lowercase();
                    if !SCALAR_KEYS.contains(&k.as_str()) && !GRID_KEYS.contains(&k.as_str()) {
                        errors.push(format!("line {}: unknown key `{k}`", i + 1));
                    } else {
                        entries.entry(k).or_default().push((i + 1, v.trim().to_string()));
                    }
                }
                None => errors.push(format!("line {}: expected `key = value`", i + 1)),
            }
        }
        let mut cfg = ExperimentConfig::default();
        for (key, vals) in &entries {
            if SCALAR_KEYS.contains(&key.as_str()) && vals.len() > 1 {
                errors.push(format!("line {}: `{key}` given more than once", vals[1].0));
                continue;
            }
            for (line, v) in vals {
                if let Err(e) = cfg.set(key, v) {
                    errors.push(format!("line {line}: {e}"));
                }
            }
        }
        if let Err(Error::Config(mut more)) = cfg.validate() {
            errors.append(&mut more);
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Applies one `key = value` pair; grids append.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        match key {
            "experiment" => self.experiments.push(value.to_string()),
            "model_x" => self.model_x = value.to_string(),
            "model_y" => self.model_y = value.to_string(),
            "z" => self.z.push(num(key, value)?),
            "beta" => self.beta.push(num(key, value)?),
            "n" => self.n.push(num(key, value)?),
            "r" => self.r.push(num(key, value)?),
            "alpha" => self.alpha.push(num(key, value)?),
            "l" => self.l = Some(num(key, value)?),
            "m" => self.m = Some(num(key, value)?),
            "gamma" => self.gamma = Some(num(key, value)?),
            "c_m" => self.c_m = Some(num(key, value)?),
            "frobenius_sq" => self.frobenius_sq = Some(num(key, value)?),
            "envs" => self.envs = Some(num(key, value)?),
            "samples" => self.samples = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "workers" => self.workers = Some(num(key, value)?),
            "n_max" => self.n_max = num(key, value)?,
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Field-level checks that do not depend on the experiment defaults.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.experiments.is_empty() {
            errors.push("`experiment`: at least one experiment or recipe is required".to_string());
        }
        for e in &self.experiments {
            if !EXPERIMENTS.contains(&e.as_str()) && super::recipe(e).is_none() {
                errors.push(format!("`experiment`: unknown id `{e}`"));
            }
        }
        for (key, m) in [("model_x", &self.model_x), ("model_y", &self.model_y)] {
            if crate::walks::model_by_id(m).is_err() {
                errors.push(format!("`{key}`: unknown model `{m}`"));
            }
        }
        if self.z.iter().any(|&z| !(z >= 0.0) || !z.is_finite()) {
            errors.push("`z`: values must be finite and >= 0".into());
        }
        if self.beta.iter().any(|&b| !b.is_finite()) {
            errors.push("`beta`: values must be finite".into());
        }
        if self.n.contains(&0) {
            errors.push("`n`: values must be >= 1".into());
        }
        if self.r.contains(&0) {
            errors.push("`r`: values must be >= 1".into());
        }
        if self.alpha.iter().any(|&a| !(a > 0.0)) {
            errors.push("`alpha`: values must be > 0".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                errors.push(format!("`gamma`: {g} outside (0, 1)"));
            }
        }
        for (key, v) in [("l", self.l), ("m", self.m), ("envs", self.envs), ("samples", self.samples), ("workers", self.workers)] {
            if v == Some(0) {
                errors.push(format!("`{key}`: must be >= 1"));
            }
        }
        if self.envs == Some(1) {
            errors.push("`envs`: at least two environments are needed".into());
        }
        if let Some(f) = self.frobenius_sq {
            if !(f >= 0.0) {
                errors.push("`frobenius_sq`: must be >= 0".into());
            }
        }
        if self.n_max < 100 {
            errors.push("`n_max`: must be >= 100".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        for e in &self.experiments {
            put("experiment", e.clone());
        }
        put("model_x", self.model_x.clone());
        put("model_y", self.model_y.clone());
        self.z.iter().for_each(|v| put("z", v.to_string()));
        self.beta.iter().for_each(|v| put("beta", v.to_string()));
        self.n.iter().for_each(|v| put("n", v.to_string()));
        self.r.iter().for_each(|v| put("r", v.to_string()));
        self.alpha.iter().for_each(|v| put("alpha", v.to_string()));
        for (k, v) in [("l", self.l), ("m", self.m), ("envs", self.envs), ("samples", self.samples), ("workers", self.workers)] {
            if let Some(v) = v {
                put(k, v.to_string());
            }
        }
        for (k, v) in [("gamma", self.gamma), ("c_m", self.c_m), ("frobenius_sq", self.frobenius_sq)] {
            if let Some(v) = v {
                put(k, v.to_string());
            }
        }
        put("seed", self.seed.to_string());
        put("out", self.out.display().to_string());
        put("n_max", self.n_max.to_string());
        put("cache_dir", self.cache_dir.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grids_and_scalars() {
        let cfg = ExperimentConfig::parse("experiment = jensen\n# comment\nz = 0.5\nz = 2 # trailing\nn=128\nseed = 9\ngamma = 0.8\n").unwrap();
        assert_eq!(cfg.experiments, vec!["jensen"]);
        assert_eq!(cfg.z, vec![0.5, 2.0]);
        assert_eq!(cfg.n, vec![128]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn reports_every_bad_field() {
        let err = ExperimentConfig::parse("experiment = nope\nz = x\ngamma = 1.5\nseed = 1\nseed = 2\nwhat\nfoo = 3\n").unwrap_err();
        let Error::Config(list) = err else { panic!("wrong error kind") };
        let joined = list.join("\n");
        for needle in ["unknown id `nope`", "`z`", "`gamma`", "`seed` given more than once", "line 6", "unknown key `foo`"] {
            assert!(joined.contains(needle), "missing {needle} in {joined}");
        }
        assert!(matches!(ExperimentConfig::parse(""), Err(Error::Config(_))));
    }
}
