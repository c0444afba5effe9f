//! Seeded synthetic checkpoint families.
//!
//! Draws come from a single Xoshiro256++ stream seeded through SplitMix64
//! (`seed_from_u64`), with standard normals from `rand_distr` scaled by the
//! requested deviations. Order of draws: every element of the pre-trained
//! model, then the shared cluster direction, then each task's own noise.

use alloc::format;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::tensor::{numel, Tensor, TensorMap};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_tasks: usize,
    pub tensor_shapes: Vec<Vec<usize>>,
    /// Standard deviation of pre-trained weights.
    pub pre_scale: f64,
    /// Standard deviation of per-task deltas.
    pub delta_scale: f64,
    /// Standard deviation of the direction shared by all tasks.
    pub cluster_scale: f64,
    pub seed: u64,
}

/// Name of the i-th generated tensor.
pub fn tensor_name(i: usize) -> alloc::string::String {
    format!("layer{i}.weight")
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 {
            return Err(Error::InvalidParameter("n_tasks must be at least 1".into()));
        }
        if self.tensor_shapes.is_empty() {
            return Err(Error::Empty("tensor shape list"));
        }
        for (what, s) in [
            ("pre_scale", self.pre_scale),
            ("delta_scale", self.delta_scale),
            ("cluster_scale", self.cluster_scale),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("{what} = {s}")));
            }
        }
        Ok(())
    }
}

/// A pre-trained model and one fine-tuned model per task.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFamily {
    pub pre: TensorMap,
    pub fts: Vec<TensorMap>,
}

fn draw(rng: &mut Xoshiro256PlusPlus, shapes: &[Vec<usize>], sd: f64) -> Vec<Vec<f64>> {
    shapes
        .iter()
        .map(|s| {
            (0..numel(s))
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * sd
                })
                .collect()
        })
        .collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthFamily> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let pre64 = draw(&mut rng, &spec.tensor_shapes, spec.pre_scale);
    let cluster = draw(&mut rng, &spec.tensor_shapes, spec.cluster_scale);
    let to_map = |values: &[Vec<f64>]| -> Result<TensorMap> {
        let mut m = TensorMap::new();
        for (i, (shape, v)) in spec.tensor_shapes.iter().zip(values).enumerate() {
            let data = v.iter().map(|&x| x as f32).collect();
            m.insert(tensor_name(i), Tensor::new(shape.clone(), data)?)?;
        }
        Ok(m)
    };
    let pre = to_map(&pre64)?;
    let mut fts = Vec::with_capacity(spec.n_tasks);
    for _ in 0..spec.n_tasks {
        let delta = draw(&mut rng, &spec.tensor_shapes, spec.delta_scale);
        let ft: Vec<Vec<f64>> = pre
            .iter()
            .zip(&cluster)
            .zip(&delta)
            .map(|(((_, p), c), d)| {
                p.data()
                    .iter()
                    .zip(c)
                    .zip(d)
                    .map(|((&p, &c), &d)| p as f64 + c + d)
                    .collect()
            })
            .collect();
        fts.push(to_map(&ft)?);
    }
    Ok(SynthFamily { pre, fts })
}
