use rayon::prelude::*;

use super::{annealed_log_partition, CouplingParams, PinningSystem};
use crate::error::{Error, Result};
use crate::rng::StreamId;
use crate::stats::Estimate;
use crate::walks::sample_path;

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergyEstimate {
    pub n: usize,
    /// Sample mean and standard error of `(1/N) ln Z^beta_{N,Y}`.
    pub quenched: Estimate,
    /// `(1/N) ln E^Y[Z^beta_{N,Y}]`.
    pub annealed: f64,
}

/// Per-environment `(1/N) ln Z^beta` over `envs` independent environments.
pub fn quenched_free_energy_estimate(
    sys: &PinningSystem,
    params: &CouplingParams,
    n: usize,
    envs: usize,
    stream: StreamId,
) -> Result<FreeEnergyEstimate> {
    if envs < 2 {
        return Err(Error::InvalidArgument("at least two environments are needed".into()));
    }
    let law = sys.law()?;
    let per_env: Vec<f64> = (0..envs as u64)
        .into_par_iter()
        .map(|i| {
            let env = sample_path(sys.model_y(), n, stream.child(i));
            sys.quenched_partition(params, &env).map(|t| t.log_z_beta(n) / n as f64)
        })
        .collect::<Result<_>>()?;
    let annealed = (annealed_log_partition(params.z, law, n)?[n] + params.log_check_to_beta()) / n as f64;
    Ok(FreeEnergyEstimate { n, quenched: Estimate::from_samples(&per_env), annealed })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionalMoment {
    pub n: usize,
    pub gamma: f64,
    /// Estimate of `E^Y[Ž_N^gamma]`.
    pub moment: Estimate,
    /// Estimate of `E^Y[Ž_N]` on the same environments.
    pub first_moment: Estimate,
    /// Exact `E^Y[Ž_N]`.
    pub annealed: f64,
}

/// `E^Y[Ž_N^gamma]` at every `N` of `ladder`, from one DP per environment
/// of length `max(ladder)`.
pub fn fractional_moment_ladder(
    sys: &PinningSystem,
    z: f64,
    gamma: f64,
    ladder: &[usize],
    envs: usize,
    stream: StreamId,
) -> Result<Vec<FractionalMoment>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} outside (0, 1)")));
    }
    let n_max = *ladder.iter().max().ok_or_else(|| Error::InvalidArgument("empty N ladder".into()))?;
    let params = sys.params_from_z(z)?;
    let logs: Vec<Vec<f64>> = (0..envs as u64)
        .into_par_iter()
        .map(|i| {
            let env = sample_path(sys.model_y(), n_max, stream.child(i));
            sys.quenched_partition(&params, &env).map(|t| ladder.iter().map(|&n| t.log_check(n)).collect())
        })
        .collect::<Result<_>>()?;
    let annealed = annealed_log_partition(z, sys.law()?, n_max)?;
    Ok(ladder
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let frac: Vec<f64> = logs.iter().map(|l| (gamma * l[j]).exp()).collect();
            let first: Vec<f64> = logs.iter().map(|l| l[j].exp()).collect();
            FractionalMoment {
                n,
                gamma,
                moment: Estimate::from_samples(&frac),
                first_moment: Estimate::from_samples(&first),
                annealed: annealed[n].exp(),
            }
        })
        .collect())
}

pub fn fractional_moment_estimate(
    sys: &PinningSystem,
    z: f64,
    gamma: f64,
    n: usize,
    envs: usize,
    stream: StreamId,
) -> Result<FractionalMoment> {
    Ok(fractional_moment_ladder(sys, z, gamma, &[n], envs, stream)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinning::tests::lazy3_system;
    use crate::rng::tag;

    #[test]
    fn localized_and_jensen() {
        let sys = lazy3_system();
        let p = sys.params_from_z(4.0).unwrap();
        let s = StreamId::new(11, tag("fe"), 0);
        let e = quenched_free_energy_estimate(&sys, &p, 512, 16, s).unwrap();
        assert!(e.quenched.mean > 5.0 * e.quenched.stderr, "{e:?}");
        assert!(e.quenched.mean <= e.annealed + 3.0 * e.quenched.stderr);
        let again = quenched_free_energy_estimate(&sys, &p, 512, 16, s).unwrap();
        assert_eq!(e.quenched.mean.to_bits(), again.quenched.mean.to_bits());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let sys = lazy3_system();
        let p = sys.params_from_z(1.3).unwrap();
        let s = StreamId::new(12, tag("fe"), 0);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| quenched_free_energy_estimate(&sys, &p, 64, 40, s).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn fractional_moment_properties() {
        let sys = lazy3_system();
        let s = StreamId::new(13, tag("fm"), 0);
        let near_one = fractional_moment_estimate(&sys, 1.0, 0.999, 64, 4000, s).unwrap();
        assert!((near_one.moment.mean - near_one.annealed).abs() < 4.0 * near_one.first_moment.stderr + 1e-3 * near_one.annealed);
        let ladder = fractional_moment_ladder(&sys, 1.0, 6.0 / 7.0, &[64, 128, 256], 500, s).unwrap();
        for fm in &ladder {
            assert!(fm.moment.mean.powf(1.0 / fm.gamma) <= fm.first_moment.mean + 3.0 * fm.first_moment.stderr);
            assert!(fm.moment.mean <= fm.annealed.powf(fm.gamma) * 1.01, "{fm:?}");
        }
        assert!(fractional_moment_estimate(&sys, 1.0, 1.0, 8, 4, s).is_err());
    }
}
