//! One function per experiment id. Each returns its records in a fixed
//! order; randomness comes from streams keyed by experiment and
//! parameter tuple.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::{Method, ResultRecord};
use crate::coarse::{block_partition, block_visit_prob, default_ladders, fit_visit_exponent, sweep_subsets};
use crate::error::{Error, Result};
use crate::pinning::{
    annealed_free_energy, annealed_log_partition, brute_force_partition, fractional_moment_ladder,
    quenched_free_energy_estimate, CouplingParams, PinningSystem, DEFAULT_CROSSOVER,
};
use crate::renewal::{chernoff_profile, contact_count_dist, ks_halfnormal, load_or_build, mass_sequence, RenewalLaw};
use crate::rng::{tag, StreamId};
use crate::stats::{pairwise_sum, Estimate};
use crate::tilt::{
    borne_m_check, cxy_constant, enumerate_pair_table, r_enum_max, TiltKernel, TiltedInterval,
};
use crate::walks::{model_by_id, sample_path, WalkModel};

pub(super) struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    mx: WalkModel,
    my: WalkModel,
    sys: Option<PinningSystem>,
}

type Params = Vec<(String, String)>;

fn p(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn q(name: &str) -> (String, String) {
    p("quantity", name)
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

impl<'a> Ctx<'a> {
    pub(super) fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        Ok(Ctx { cfg, mx: model_by_id(&cfg.model_x)?, my: model_by_id(&cfg.model_y)?, sys: None })
    }

    fn sys(&mut self) -> Result<&PinningSystem> {
        if self.sys.is_none() {
            let law = load_or_build(&self.cfg.cache_dir, &self.mx, &self.my, self.cfg.n_max)?;
            self.sys = Some(PinningSystem::new(&self.mx, &self.my, Some(law), DEFAULT_CROSSOVER)?);
        }
        Ok(self.sys.as_ref().expect("initialised above"))
    }

    fn law(&mut self) -> Result<&RenewalLaw> {
        self.sys()?.law()
    }

    fn stream(&self, experiment: &str, params: &Params) -> StreamId {
        let key: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        StreamId::new(self.cfg.seed, tag(&format!("{experiment}:{}", key.join(";"))), 0)
    }

    fn grid<T: Copy>(given: &[T], default: &[T]) -> Vec<T> {
        if given.is_empty() {
            default.to_vec()
        } else {
            given.to_vec()
        }
    }

    /// Couplings from the `beta` grid when present, else the `z` grid.
    fn couplings(&mut self, default_z: &[f64]) -> Result<Vec<((String, String), CouplingParams)>> {
        let green = self.law()?.green;
        if !self.cfg.beta.is_empty() {
            return Ok(self.cfg.beta.iter().map(|&b| (p("beta", b), CouplingParams::from_beta(b, green))).collect());
        }
        Ok(Self::grid(&self.cfg.z, default_z).into_iter().map(|z| (p("z", z), CouplingParams::from_z(z, green))).collect())
    }

    fn required<T: Copy>(&self, id: &str, key: &str, grid: &[T]) -> Result<Vec<T>> {
        if grid.is_empty() {
            return Err(Error::Config(vec![format!("`{key}`: experiment `{id}` needs a nonempty grid")]));
        }
        Ok(grid.to_vec())
    }

    pub(super) fn run(&mut self, id: &str) -> Result<Vec<ResultRecord>> {
        match id {
            "oracle" => self.oracle(),
            "annealed-identity" => self.annealed_identity(),
            "critical-point" => self.critical_point(),
            "doney" => self.doney(),
            "a-of-r" => self.a_of_r(),
            "tilt-moments" => self.tilt_moments(),
            "borne-m" => self.borne_m(),
            "coarse" => self.coarse(),
            "halfnormal" => self.halfnormal(),
            "jensen" => self.free_energy("jensen", "C10", &[0.5, 1.0, 1.5, 2.0, 3.0], &[128, 512]),
            "chernoff" => self.chernoff(),
            "annealed" => self.annealed(),
            "free-energy" => {
                if self.cfg.beta.is_empty() {
                    self.required(id, "z", &self.cfg.z)?;
                }
                let n = self.required(id, "n", &self.cfg.n)?;
                self.free_energy(id, "-", &[], &n)
            }
            "frac-moment" => self.frac_moment(),
            _ => Err(Error::Config(vec![format!("`experiment`: unknown id `{id}`")])),
        }
    }

    fn oracle(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, &[1, 2, 3, 4]);
        if let Some(&n) = ns.iter().find(|&&n| n > 6) {
            return Err(Error::InvalidArgument(format!("oracle enumerates all paths; N = {n} is too long")));
        }
        let envs = self.cfg.envs.unwrap_or(20) as u64;
        let mut out = Vec::new();
        for (zkey, params) in self.couplings(&[0.5, 1.0, 2.0])? {
            for &n in &ns {
                let key = vec![q("max_rel_err"), p("n", n), zkey.clone()];
                let stream = self.stream("oracle", &key);
                let sys = self.sys()?;
                let errs: Vec<f64> = (0..envs)
                    .into_par_iter()
                    .map(|e| {
                        let env = sample_path(sys.model_y(), n, stream.child(e));
                        let dp = sys.quenched_partition_direct(params.z_prime, &env)[n];
                        rel_err(dp, brute_force_partition(sys.model_x(), params.z_prime, &env))
                    })
                    .collect();
                let worst = errs.iter().cloned().fold(0.0, f64::max);
                out.push(ResultRecord {
                    seed: stream.to_string(),
                    method: Method::Enumeration,
                    ..ResultRecord::exact("oracle", "C1", key, worst)
                });
            }
        }
        Ok(out)
    }

    fn annealed_identity(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, &[64]);
        let envs = self.cfg.envs.unwrap_or(10_000) as u64;
        let mut out = Vec::new();
        for (zkey, params) in self.couplings(&[0.8, 1.0, 1.3])? {
            for &n in &ns {
                let key = vec![q("mc_mean"), p("n", n), zkey.clone()];
                let stream = self.stream("annealed-identity", &key);
                let sys = self.sys()?;
                let vals: Vec<f64> = (0..envs)
                    .into_par_iter()
                    .map(|e| {
                        let env = sample_path(sys.model_y(), n, stream.child(e));
                        sys.quenched_partition(&params, &env).map(|t| t.log_check(n).exp())
                    })
                    .collect::<Result<_>>()?;
                let est = Estimate::from_samples(&vals);
                let exact = annealed_log_partition(params.z, sys.law()?, n)?[n].exp();
                out.push(mc_record("annealed-identity", "C2", key, &est, stream));
                out.push(ResultRecord::exact("annealed-identity", "C2", vec![q("exact"), p("n", n), zkey.clone()], exact));
            }
        }
        Ok(out)
    }

    fn critical_point(&mut self) -> Result<Vec<ResultRecord>> {
        let law = self.law()?.clone();
        let beta_c = law.annealed_beta_c();
        let mut out = vec![
            ResultRecord::exact("critical-point", "C3", vec![q("green_identity")], beta_c.exp_m1() * law.green),
            ResultRecord::exact("critical-point", "C3", vec![q("beta_c_ann")], beta_c),
        ];
        for z in Self::grid(&self.cfg.z, &[0.5, 1.0, 1.2]) {
            let root = annealed_free_energy(z, &law);
            out.push(ResultRecord::exact("critical-point", "C3", vec![q("free_energy"), p("z", z)], root.free_energy));
            if z > 1.0 {
                out.push(ResultRecord::exact("critical-point", "C3", vec![q("root_residual"), p("z", z)], root.residual));
            }
        }
        Ok(out)
    }

    fn doney(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, &[100, 1000, 10_000]);
        let law = self.law()?;
        let u = mass_sequence(law, *ns.iter().max().expect("nonempty"))?.u;
        Ok(ns
            .iter()
            .map(|&n| {
                let scaled = u[n] * 2.0 * std::f64::consts::PI * law.ck * (n as f64).sqrt();
                ResultRecord::exact("doney", "C4", vec![q("doney_err"), p("n", n)], (scaled - 1.0).abs())
            })
            .collect())
    }

    fn cxy(&self) -> Result<f64> {
        cxy_constant(self.mx.covariance(), self.my.covariance())
    }

    fn a_of_r(&mut self) -> Result<Vec<ResultRecord>> {
        let rs = Self::grid(&self.cfg.r, &[2, 3, 4, 50, 100, 200]);
        let mut out = vec![ResultRecord::exact("a-of-r", "C5", vec![q("cxy")], self.cxy()?)];
        for &r in &rs {
            let t = TiltedInterval::new(&self.mx, &self.my, r)?;
            let a = t.a_of_r()?;
            if r >= 2 && r <= r_enum_max(self.mx.dim()) {
                let table = enumerate_pair_table(&self.mx, &self.my, r)?;
                let exact = t.pair_correlation()?;
                let diff = table.iter().map(|(_, v)| (v - exact).abs()).fold(0.0, f64::max);
                out.push(ResultRecord {
                    method: Method::Enumeration,
                    ..ResultRecord::exact("a-of-r", "C5", vec![q("enum_diff"), p("r", r)], diff)
                });
            }
            out.push(ResultRecord::exact("a-of-r", "C5", vec![q("r_a_of_r"), p("r", r)], r as f64 * a));
        }
        Ok(out)
    }

    fn tilt_moments(&mut self) -> Result<Vec<ResultRecord>> {
        let mut out = vec![
            ResultRecord::exact("tilt-moments", "C6", vec![q("cxy")], self.cxy()?),
            ResultRecord::exact("tilt-moments", "C6", vec![q("sigma_y_sq")], self.my.trace_covariance()),
        ];
        for r in Self::grid(&self.cfg.r, &[200]) {
            let t = TiltedInterval::new(&self.mx, &self.my, r)?;
            out.push(ResultRecord::exact("tilt-moments", "C6", vec![q("delta_sq"), p("r", r)], t.delta_sq_given_meet()));
            out.push(ResultRecord::exact("tilt-moments", "C6", vec![q("b_of_r"), p("r", r)], t.b_of_r()));
        }
        Ok(out)
    }

    fn borne_m(&mut self) -> Result<Vec<ResultRecord>> {
        let l = self.cfg.l.unwrap_or(1000);
        let gamma = self.cfg.gamma.unwrap_or(6.0 / 7.0);
        let samples = self.cfg.samples.unwrap_or(100_000);
        let (kernel, kkey) = match self.cfg.c_m {
            Some(c) => (TiltKernel::long_range(l, c)?, p("c_m", c)),
            None => {
                let f = self.cfg.frobenius_sq.unwrap_or(0.05);
                (TiltKernel::long_range_with_frobenius_sq(l, f)?, p("frobenius_sq", f))
            }
        };
        let base = vec![p("gamma", gamma), p("l", l), kkey];
        let with = |name: &str| {
            let mut v = vec![q(name)];
            v.extend(base.iter().cloned());
            v
        };
        let stream = self.stream("borne-m", &base);
        let rep = borne_m_check(&kernel, &self.my, gamma, samples, stream)?;
        Ok(vec![
            mc_record("borne-m", "C7", with("estimate"), &rep.estimate, stream),
            ResultRecord { method: Method::Mc, seed: stream.to_string(), ..ResultRecord::exact("borne-m", "C7", with("upper99"), rep.upper99) },
            ResultRecord::exact("borne-m", "C7", with("frobenius_sq_actual"), rep.frobenius_sq),
        ])
    }

    fn coarse(&mut self) -> Result<Vec<ResultRecord>> {
        let l = self.cfg.l.unwrap_or(8);
        let m = self.cfg.m.unwrap_or(3);
        let envs = self.cfg.envs.unwrap_or(10) as u64;
        let n = l * m;
        let mut out = Vec::new();
        {
            let law = self.law()?;
            let u = mass_sequence(law, n)?.u[n];
            let all = sweep_subsets(l, m, |s| block_visit_prob(law, s))?;
            let total = pairwise_sum(&all.iter().map(|(_, b)| b.value()).collect::<Vec<_>>());
            out.push(ResultRecord::exact("coarse", "C8", vec![q("p_sum_rel_err"), p("l", l), p("m", m)], rel_err(total, u)));
            let fit = fit_visit_exponent(law, 64, &default_ladders())?;
            out.push(ResultRecord::exact("coarse", "-", vec![q("visit_slope"), p("l", 64)], fit.slope));
            out.push(ResultRecord::exact("coarse", "-", vec![q("visit_c2"), p("l", 64)], fit.c2));
        }
        for (zkey, params) in self.couplings(&[0.5, 1.0, 2.0])? {
            let key = vec![q("z_sum_rel_err"), p("l", l), p("m", m), zkey];
            let stream = self.stream("coarse", &key);
            let sys = self.sys()?;
            let errs: Vec<f64> = (0..envs)
                .into_par_iter()
                .map(|e| {
                    let env = sample_path(sys.model_y(), n, stream.child(e));
                    let full = sys.quenched_partition_direct(params.z_prime, &env)[n];
                    let parts = sweep_subsets(l, m, |s| block_partition(sys, &params, &env, s))?;
                    let total = pairwise_sum(&parts.iter().map(|(_, b)| b.value()).collect::<Vec<_>>());
                    Ok(rel_err(total, full))
                })
                .collect::<Result<_>>()?;
            let worst = errs.iter().cloned().fold(0.0, f64::max);
            out.push(ResultRecord { seed: stream.to_string(), ..ResultRecord::exact("coarse", "C8", key, worst) });
        }
        Ok(out)
    }

    fn halfnormal(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, &[100, 1000, 10_000]);
        let law = self.law()?;
        ns.par_iter()
            .map(|&n| Ok(ResultRecord::exact("halfnormal", "C9", vec![q("ks"), p("n", n)], ks_halfnormal(law, n)?)))
            .collect()
    }

    fn free_energy(&mut self, id: &str, criterion: &str, default_z: &[f64], default_n: &[usize]) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, default_n);
        let envs = self.cfg.envs.unwrap_or(32);
        let mut out = Vec::new();
        for (zkey, params) in self.couplings(default_z)? {
            for &n in &ns {
                let key = vec![q("quenched"), p("n", n), zkey.clone()];
                let stream = self.stream(id, &key);
                let est = quenched_free_energy_estimate(self.sys()?, &params, n, envs, stream)?;
                out.push(mc_record(id, criterion, key, &est.quenched, stream));
                out.push(ResultRecord::exact(id, criterion, vec![q("annealed"), p("n", n), zkey.clone()], est.annealed));
            }
        }
        Ok(out)
    }

    fn chernoff(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = Self::grid(&self.cfg.n, &[10_000]);
        let alphas = Self::grid(&self.cfg.alpha, &[2.0, 4.0, 8.0]);
        let mut out = Vec::new();
        for n in ns {
            let dist = contact_count_dist(self.law()?, n)?;
            for (a, lp) in chernoff_profile(&dist, &alphas) {
                out.push(ResultRecord::exact("chernoff", "C11", vec![q("log_tail"), p("n", n), p("alpha", a)], lp));
            }
        }
        Ok(out)
    }

    fn annealed(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = self.required("annealed", "n", &self.cfg.n)?;
        let mut out = Vec::new();
        for (zkey, params) in self.couplings(&[])? {
            let table = annealed_log_partition(params.z, self.law()?, *ns.iter().max().expect("nonempty"))?;
            for &n in &ns {
                out.push(ResultRecord::exact("annealed", "-", vec![q("log_annealed"), p("n", n), zkey.clone()], table[n]));
            }
        }
        if out.is_empty() {
            return Err(Error::Config(vec!["`z`: experiment `annealed` needs a nonempty `z` or `beta` grid".into()]));
        }
        Ok(out)
    }

    fn frac_moment(&mut self) -> Result<Vec<ResultRecord>> {
        let ns = self.required("frac-moment", "n", &self.cfg.n)?;
        let gamma = self.cfg.gamma.unwrap_or(6.0 / 7.0);
        let envs = self.cfg.envs.unwrap_or(64);
        let mut out = Vec::new();
        for (zkey, params) in self.couplings(&[])? {
            let key = vec![p("gamma", gamma), zkey.clone()];
            let stream = self.stream("frac-moment", &key);
            for fm in fractional_moment_ladder(self.sys()?, params.z, gamma, &ns, envs, stream)? {
                let with = |name: &str| vec![q(name), p("gamma", gamma), p("n", fm.n), zkey.clone()];
                out.push(mc_record("frac-moment", "-", with("frac_moment"), &fm.moment, stream));
                out.push(mc_record("frac-moment", "-", with("first_moment"), &fm.first_moment, stream));
                out.push(ResultRecord::exact("frac-moment", "-", with("annealed"), fm.annealed));
            }
        }
        if out.is_empty() {
            return Err(Error::Config(vec!["`z`: experiment `frac-moment` needs a nonempty `z` or `beta` grid".into()]));
        }
        Ok(out)
    }
}

fn mc_record(id: &str, criterion: &str, params: Params, est: &Estimate, stream: StreamId) -> ResultRecord {
    ResultRecord {
        stderr: Some(est.stderr),
        method: Method::Mc,
        seed: stream.to_string(),
        ..ResultRecord::exact(id, criterion, params, est.mean)
    }
}
