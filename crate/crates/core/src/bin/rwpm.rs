use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rwpm::coarse::{block_partition, block_visit_prob, sweep_subsets, BlockScheme, BlockValue};
use rwpm::experiment::{self, write_records, ExperimentConfig, Verdict, RECIPES};
use rwpm::pinning::{PinningSystem, DEFAULT_CROSSOVER};
use rwpm::renewal::load_or_build;
use rwpm::rng::{tag, StreamId};
use rwpm::tilt::{
    cross_interval_quartic, d4_pick_p0, long_range_frobenius_closed_form, QuarticPattern, TiltKernel, TiltedInterval,
};
use rwpm::walks::{model_by_id, sample_path};

#[derive(Parser)]
#[command(name = "rwpm", version, about = "Random walk pinning model experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value = "lazy3")]
    model_x: String,
    #[arg(long, default_value = "lazy3")]
    model_y: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "rwpm-cache")]
    cache_dir: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n_max: usize,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn config(&self, experiment: &str) -> ExperimentConfig {
        ExperimentConfig {
            model_x: self.model_x.clone(),
            model_y: self.model_y.clone(),
            seed: self.seed,
            cache_dir: self.cache_dir.clone(),
            n_max: self.n_max,
            workers: self.workers,
            ..ExperimentConfig::for_experiment(experiment)
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config file or a list of experiments/recipes.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Experiment id or recipe; repeatable, overrides the config's list.
        #[arg(long)]
        experiment: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a results file against the acceptance thresholds.
    Verify {
        #[arg(long)]
        results: PathBuf,
        /// Second run of the same config, compared byte for byte.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Build (or load) the renewal law for a pair of walks.
    CacheBuild {
        #[command(flatten)]
        common: Common,
    },
    ListRecipes,
    /// Quenched and annealed free energy at finite N.
    FreeEnergy {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        z: Vec<f64>,
        #[arg(long, required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 32)]
        envs: usize,
    },
    /// Exact annealed log partition function.
    Annealed {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        z: Vec<f64>,
        #[arg(long, required = true)]
        n: Vec<usize>,
    },
    /// Fractional moment of the partition function along an N ladder.
    FracMoment {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        z: Vec<f64>,
        #[arg(long, required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 6.0 / 7.0)]
        gamma: f64,
        #[arg(long, default_value_t = 64)]
        envs: usize,
    },
    #[command(subcommand)]
    Tilt(TiltCmd),
    /// Block-restricted partition functions or visit probabilities.
    Coarse {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
        #[arg(long = "L")]
        l: usize,
        /// Quenched `Z^I` on one sampled environment; `P_I` when absent.
        #[arg(long)]
        z: Option<f64>,
        /// Comma-separated 1-based block indices.
        #[arg(long, conflicts_with = "sweep_all")]
        subset: Option<String>,
        #[arg(long)]
        sweep_all: bool,
    },
}

#[derive(Subcommand)]
enum TiltCmd {
    /// Frobenius norm and operator bound of the long-range kernel.
    KernelNorms {
        #[arg(long = "L", required = true)]
        l: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        c_m: f64,
    },
    BorneM {
        #[command(flatten)]
        common: Common,
        #[arg(long = "L", default_value_t = 1000)]
        l: usize,
        #[arg(long, default_value_t = 0.05)]
        frobenius_sq: f64,
        #[arg(long, default_value_t = 6.0 / 7.0)]
        gamma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    AOfR {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true)]
        r: Vec<usize>,
    },
    Quartic {
        #[arg(long, default_value = "lazy3")]
        model_x: String,
        #[arg(long, default_value = "lazy3")]
        model_y: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: Option<usize>,
    },
    D4Scan {
        #[arg(long, default_value = "lazy4")]
        model_x: String,
        #[arg(long, default_value = "lazy4")]
        model_y: String,
        #[arg(long, default_value_t = 200)]
        cap: usize,
    },
}

fn print_records(cfg: &ExperimentConfig) -> rwpm::Result<()> {
    let out = experiment::run(cfg)?;
    write_records(std::io::stdout().lock(), &out.records)
}

fn fmt_block(v: &BlockValue) -> String {
    if v.vanishes {
        "-inf".into()
    } else {
        v.log_value.to_string()
    }
}

fn run(cmd: Cmd) -> rwpm::Result<ExitCode> {
    match cmd {
        Cmd::Run { config, experiment: ids, seed, workers, out } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?)?,
                None => ExperimentConfig::default(),
            };
            if !ids.is_empty() {
                cfg.experiments = ids;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            let output = experiment::run(&cfg)?;
            experiment::write_outputs(&cfg, &output)?;
            eprintln!("wrote {} records to {}", output.records.len(), cfg.out.display());
        }
        Cmd::Verify { results, compare, report } => {
            let rep = experiment::verify_file(&results, compare.as_deref());
            let mut out = std::io::stdout().lock();
            writeln!(out, "criterion,verdict,measured,threshold")?;
            for c in &rep.criteria {
                let v = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Error => "error",
                };
                writeln!(out, "{},{v},\"{}\",\"{}\"", c.criterion, c.measured.replace('"', "'"), c.threshold)?;
            }
            for e in &rep.errors {
                eprintln!("error: {e}");
            }
            if let Some(path) = report {
                std::fs::write(path, serde_json::to_string_pretty(&rep)?)?;
            }
            return Ok(ExitCode::from(rep.exit_code() as u8));
        }
        Cmd::CacheBuild { common } => {
            let (mx, my) = (model_by_id(&common.model_x)?, model_by_id(&common.model_y)?);
            let law = load_or_build(&common.cache_dir, &mx, &my, common.n_max)?;
            println!("G = {:e}, c_K = {:e}, tail mass = {:e}", law.green, law.ck, law.tail_mass);
        }
        Cmd::ListRecipes => {
            for (name, what, ids) in RECIPES {
                println!("{name}: {what}\n    {}", ids.join(", "));
            }
        }
        Cmd::FreeEnergy { common, z, n, envs } => {
            print_records(&ExperimentConfig { z, n, envs: Some(envs), ..common.config("free-energy") })?;
        }
        Cmd::Annealed { common, z, n } => {
            print_records(&ExperimentConfig { z, n, ..common.config("annealed") })?;
        }
        Cmd::FracMoment { common, z, n, gamma, envs } => {
            print_records(&ExperimentConfig { z, n, gamma: Some(gamma), envs: Some(envs), ..common.config("frac-moment") })?;
        }
        Cmd::Tilt(t) => match t {
            TiltCmd::KernelNorms { l, c_m } => {
                println!("L,frobenius_sq,closed_form,operator_bound");
                for l in l {
                    let k = TiltKernel::long_range(l, c_m)?;
                    println!("{l},{},{},{}", k.frobenius_sq(), long_range_frobenius_closed_form(l, c_m), k.operator_bound());
                }
            }
            TiltCmd::BorneM { common, l, frobenius_sq, gamma, samples } => {
                print_records(&ExperimentConfig {
                    l: Some(l),
                    frobenius_sq: Some(frobenius_sq),
                    gamma: Some(gamma),
                    samples: Some(samples),
                    ..common.config("borne-m")
                })?;
            }
            TiltCmd::AOfR { common, r } => print_records(&ExperimentConfig { r, ..common.config("a-of-r") })?,
            TiltCmd::Quartic { model_x, model_y, r, s } => {
                let (mx, my) = (model_by_id(&model_x)?, model_by_id(&model_y)?);
                let a = TiltedInterval::new(&mx, &my, r)?;
                println!("pattern,value");
                if r >= 3 {
                    println!("iij_l,{}", a.quartic(QuarticPattern::IijL)?);
                }
                if r >= 4 {
                    println!("ij_kl_same,{}", a.quartic(QuarticPattern::IjKlSame)?);
                }
                if let Some(s) = s {
                    let b = TiltedInterval::new(&mx, &my, s)?;
                    println!("ij_kl_cross,{}", cross_interval_quartic(&a, &b)?);
                }
            }
            TiltCmd::D4Scan { model_x, model_y, cap } => {
                let scan = d4_pick_p0(&model_by_id(&model_x)?, &model_by_id(&model_y)?, cap)?;
                println!("r,a_of_r");
                for (r, a) in &scan.table {
                    println!("{r},{a}");
                }
                eprintln!("p0 = {}", scan.p0);
            }
        },
        Cmd::Coarse { common, m, l, z, subset, sweep_all } => {
            let (mx, my) = (model_by_id(&common.model_x)?, model_by_id(&common.model_y)?);
            let law = load_or_build(&common.cache_dir, &mx, &my, common.n_max)?;
            let sys = PinningSystem::new(&mx, &my, Some(law), DEFAULT_CROSSOVER)?;
            let env = sample_path(&my, l * m, StreamId::new(common.seed, tag("coarse-cli"), 0));
            let eval = |s: &BlockScheme| -> rwpm::Result<BlockValue> {
                match z {
                    Some(z) => block_partition(&sys, &sys.params_from_z(z)?, &env, s),
                    None => block_visit_prob(sys.law()?, s),
                }
            };
            let rows: Vec<(u64, BlockValue)> = if sweep_all {
                sweep_subsets(l, m, eval)?
            } else {
                let list = subset.unwrap_or_else(|| m.to_string());
                let idx: Vec<usize> = list
                    .split(',')
                    .map(|t| t.trim().parse().map_err(|_| rwpm::Error::InvalidArgument(format!("bad block index `{t}`"))))
                    .collect::<rwpm::Result<_>>()?;
                let s = BlockScheme::new(l, m, &idx)?;
                vec![(s.mask(), eval(&s)?)]
            };
            println!("mask,{}", if z.is_some() { "log_z_i" } else { "log_p_i" });
            for (mask, v) in rows {
                println!("{mask:#b},{}", fmt_block(&v));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let rwpm::Error::Config(list) | rwpm::Error::Records(list) = &e {
                for item in list {
                    eprintln!("  {item}");
                }
            }
            ExitCode::from(2)
        }
    }
}
