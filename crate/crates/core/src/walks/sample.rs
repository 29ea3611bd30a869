use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::WalkModel;
use crate::lattice::{self, Point};
use crate::rng::StreamId;

/// One quenched trajectory, stored as its increments.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub dim: usize,
    pub increments: Vec<Point>,
    pub stream: Option<StreamId>,
}

impl Environment {
    pub fn new(dim: usize, increments: Vec<Point>) -> Self {
        Self { dim, increments, stream: None }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Positions `Y_0 = 0, Y_1, .., Y_N`.
    pub fn positions(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut y = lattice::ORIGIN;
        out.push(y);
        for s in &self.increments {
            y = lattice::add(&y, s);
            out.push(y);
        }
        out
    }

    pub fn endpoint(&self) -> Point {
        self.increments.iter().fold(lattice::ORIGIN, |a, s| lattice::add(&a, s))
    }
}

/// Reusable increment sampler. Product laws are sampled coordinate-wise.
#[derive(Debug, Clone)]
pub struct StepSampler {
    dim: usize,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Product(Vec<(i32, WeightedIndex<f64>)>),
    Joint(Vec<Point>, WeightedIndex<f64>),
}

impl StepSampler {
    pub fn new(model: &WalkModel) -> Self {
        let kind = match model.factors() {
            Some(f) => SamplerKind::Product(
                f.iter()
                    .map(|half| {
                        let h = half.len() as i32 - 1;
                        let w: Vec<f64> = (-h..=h).map(|a| half[a.unsigned_abs() as usize]).collect();
                        (h, WeightedIndex::new(w).expect("valid 1-d law"))
                    })
                    .collect(),
            ),
            None => {
                let pts = model.support().iter().map(|(x, _)| *x).collect();
                let w = WeightedIndex::new(model.support().iter().map(|(_, p)| *p)).expect("valid law");
                SamplerKind::Joint(pts, w)
            }
        };
        Self { dim: model.dim(), kind }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            SamplerKind::Product(coords) => {
                let mut x = lattice::ORIGIN;
                for (c, (h, w)) in coords.iter().enumerate() {
                    x[c] = w.sample(rng) as i32 - h;
                }
                x
            }
            SamplerKind::Joint(pts, w) => pts[w.sample(rng)],
        }
    }

    pub fn path<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// `n` i.i.d. increments drawn from the stream `stream`.
pub fn sample_path(model: &WalkModel, n: usize, stream: StreamId) -> Environment {
    let mut rng = stream.rng();
    let increments = StepSampler::new(model).path(n, &mut rng);
    Environment { dim: model.dim(), increments, stream: Some(stream) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::tag;
    use crate::stats::Estimate;
    use crate::walks::model_by_id;

    #[test]
    fn same_stream_same_path() {
        let m = model_by_id("lazy3").unwrap();
        let s = StreamId::new(1, tag("t"), 0);
        assert_eq!(sample_path(&m, 50, s), sample_path(&m, 50, s));
        assert_ne!(sample_path(&m, 50, s).increments, sample_path(&m, 50, s.child(1)).increments);
    }

    #[test]
    fn endpoint_moments() {
        let m = model_by_id("lazy3").unwrap();
        let samples = 100_000u64;
        let n = 100;
        let sampler = StepSampler::new(&m);
        let mut rng = StreamId::new(3, tag("moments"), 0).rng();
        let mut coords: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(samples as usize)).collect();
        let mut cov = [[0.0f64; 3]; 3];
        for _ in 0..samples {
            let y = sampler.path(n, &mut rng).iter().fold(lattice::ORIGIN, |a, s| lattice::add(&a, s));
            for i in 0..3 {
                coords[i].push(y[i] as f64);
                for j in 0..3 {
                    cov[i][j] += (y[i] * y[j]) as f64 / n as f64;
                }
            }
        }
        for c in &coords {
            let e = Estimate::from_samples(c);
            assert!(e.mean.abs() < 4.0 * e.stderr, "{e:?}");
        }
        for i in 0..3 {
            for j in 0..3 {
                let got = cov[i][j] / samples as f64;
                let want = m.covariance()[(i, j)];
                assert!((got - want).abs() < 0.05 * 0.5, "cov[{i}][{j}] = {got}");
            }
        }
    }

    #[test]
    fn joint_sampler_stays_on_support() {
        let m = model_by_id("srw3").unwrap();
        let s = sample_path(&m, 200, StreamId::new(0, 0, 0));
        assert!(s.increments.iter().all(|x| lattice::norm2(x) == 1));
        assert_eq!(s.positions().len(), 201);
    }
}
