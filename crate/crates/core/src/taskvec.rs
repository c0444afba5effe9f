//! Task vectors and the two direct quantization paths: quantizing the
//! fine-tuned weights (FQ) or quantizing the task vector (TVQ).

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::artifact::{payload_digest, ArtifactMeta, QuantizedArtifact, Role};
use crate::error::{Error, Result};
use crate::quant::Bits;
use crate::tensor::TensorMap;

/// Difference between a fine-tuned checkpoint and its pre-trained origin.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskVector {
    pub task: String,
    pub tensors: TensorMap,
}

impl TaskVector {
    pub fn new(task: impl Into<String>, tensors: TensorMap) -> Self {
        Self {
            task: task.into(),
            tensors,
        }
    }
}

pub fn task_vector(task: &str, ft: &TensorMap, pre: &TensorMap) -> Result<TaskVector> {
    let tensors = ft.zip_with(pre, |f, p| f - p)?;
    tensors.check_finite()?;
    Ok(TaskVector::new(task, tensors))
}

/// `pre + tv`, elementwise.
pub fn reconstruct(pre: &TensorMap, tv: &TaskVector) -> Result<TensorMap> {
    pre.zip_with(&tv.tensors, |p, d| p + d)
}

pub fn quantize_fq(task: &str, ft: &TensorMap, bits: Bits) -> Result<QuantizedArtifact> {
    let meta = ArtifactMeta {
        task: task.to_string(),
        pre_digest: None,
        bits,
        base_bits: None,
    };
    QuantizedArtifact::quantize_map(ft, Role::Fq, meta)
}

pub fn quantize_tvq(
    task: &str,
    ft: &TensorMap,
    pre: &TensorMap,
    bits: Bits,
) -> Result<QuantizedArtifact> {
    let tv = task_vector(task, ft, pre)?;
    let meta = ArtifactMeta {
        task: task.to_string(),
        pre_digest: Some(payload_digest(pre)),
        bits,
        base_bits: None,
    };
    QuantizedArtifact::quantize_map(&tv.tensors, Role::Tvq, meta)
}

/// Task vector implied by a single FQ or TVQ artifact.
pub fn artifact_task_vector(art: &QuantizedArtifact, pre: &TensorMap) -> Result<TaskVector> {
    art.check_map_layout(pre)?;
    let deq = art.dequantize();
    let tensors = match art.role {
        Role::Fq => deq.zip_with(pre, |f, p| f - p)?,
        Role::Tvq => deq,
        Role::RtvqBase | Role::RtvqOffset => return Err(Error::WrongRole(art.role.as_str())),
    };
    Ok(TaskVector::new(art.meta.task.clone(), tensors))
}

/// Checkpoint reconstructed from a single FQ or TVQ artifact.
pub fn artifact_checkpoint(art: &QuantizedArtifact, pre: Option<&TensorMap>) -> Result<TensorMap> {
    match (art.role, pre) {
        (Role::Fq, _) => Ok(art.dequantize()),
        (Role::Tvq, Some(pre)) => {
            art.check_map_layout(pre)?;
            pre.zip_with(&art.dequantize(), |p, d| p + d)
        }
        (Role::Tvq, None) => Err(Error::InvalidParameter(
            "task-vector artifact needs the pre-trained checkpoint".into(),
        )),
        (role, _) => Err(Error::WrongRole(role.as_str())),
    }
}

/// Number of histogram bins in [`RangeStats`].
pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub mean: f64,
    pub stddev: f64,
}

/// Value-range summary of a checkpoint or task vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeStats {
    pub tensors: Vec<TensorRange>,
    pub global_min: f64,
    pub global_max: f64,
    /// Counts over `HISTOGRAM_BINS` equal bins spanning the global range.
    pub histogram: Vec<u64>,
    pub count: u64,
}

impl RangeStats {
    pub fn global_range(&self) -> f64 {
        self.global_max - self.global_min
    }
}

pub fn range_stats(map: &TensorMap) -> Result<RangeStats> {
    if map.param_count() == 0 {
        return Err(Error::Empty("checkpoint"));
    }
    map.check_finite()?;
    let mut tensors = Vec::with_capacity(map.len());
    let mut gmin = f64::INFINITY;
    let mut gmax = f64::NEG_INFINITY;
    for (name, t) in map.iter() {
        if t.is_empty() {
            continue;
        }
        let n = t.len() as f64;
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for &v in t.data() {
            let v = v as f64;
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
        }
        let mean = sum / n;
        let var = t
            .data()
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        gmin = gmin.min(lo);
        gmax = gmax.max(hi);
        tensors.push(TensorRange {
            name: name.to_string(),
            min: lo,
            max: hi,
            range: hi - lo,
            mean,
            stddev: libm::sqrt(var),
        });
    }
    let mut histogram = alloc::vec![0u64; HISTOGRAM_BINS];
    let width = gmax - gmin;
    for (_, t) in map.iter() {
        for &v in t.data() {
            let bin = if width > 0.0 {
                let pos = (v as f64 - gmin) / width * HISTOGRAM_BINS as f64;
                (pos as usize).min(HISTOGRAM_BINS - 1)
            } else {
                0
            };
            histogram[bin] += 1;
        }
    }
    Ok(RangeStats {
        tensors,
        global_min: gmin,
        global_max: gmax,
        histogram,
        count: map.param_count() as u64,
    })
}
