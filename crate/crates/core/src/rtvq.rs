//! Residual task-vector quantization.
//!
//! Every task vector is split into a base shared by all tasks (mean
//! fine-tuned weights minus pre-trained weights) and a per-task offset. The
//! base is stored once at `b_base` bits, each offset at `b_offset` bits, so a
//! task costs `b_offset + b_base / n_tasks` bits per parameter.
//!
//! With error correction the offsets are taken against
//! `pre + dequantize(quantize(base))`, which folds the base's rounding error
//! into the offsets.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::artifact::{
    payload_digest, ArtifactMeta, Manifest, QuantizedArtifact, Role, RtvqBundle,
};
use crate::error::{Error, Result};
use crate::quant::Bits;
use crate::taskvec::TaskVector;
use crate::tensor::{Tensor, TensorMap};

/// Task label stored in the base artifact's metadata.
pub const BASE_TASK: &str = "base";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RtvqConfig {
    pub b_base: Bits,
    pub b_offset: Bits,
    pub error_correction: bool,
}

impl RtvqConfig {
    pub fn new(b_base: Bits, b_offset: Bits) -> Self {
        Self {
            b_base,
            b_offset,
            error_correction: true,
        }
    }
}

/// Amortized bits per parameter per task: `b_offset + b_base / n_tasks`.
pub fn effective_bits(b_offset: Bits, b_base: Bits, n_tasks: usize) -> Result<f64> {
    if n_tasks == 0 {
        return Err(Error::InvalidParameter("n_tasks must be at least 1".into()));
    }
    Ok(b_offset.get() as f64 + b_base.get() as f64 / n_tasks as f64)
}

fn check_inputs(fts: &[TensorMap], pre: &TensorMap) -> Result<()> {
    if fts.is_empty() {
        return Err(Error::Empty("fine-tuned checkpoint list"));
    }
    pre.check_finite()?;
    for ft in fts {
        pre.check_compatible(ft)?;
        ft.check_finite()?;
    }
    Ok(())
}

/// Elementwise mean of the fine-tuned checkpoints, accumulated in `f64`.
fn mean_f64(fts: &[TensorMap]) -> Vec<Vec<f64>> {
    let n = fts.len() as f64;
    let first = &fts[0];
    first
        .iter()
        .enumerate()
        .map(|(ti, (_, t))| {
            let mut acc = alloc::vec![0.0f64; t.len()];
            for ft in fts {
                let (_, tensor) = ft.iter().nth(ti).expect("layout checked");
                for (a, &v) in acc.iter_mut().zip(tensor.data()) {
                    *a += v as f64;
                }
            }
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        })
        .collect()
}

/// Mean fine-tuned checkpoint.
pub fn average_checkpoint(fts: &[TensorMap], pre: &TensorMap) -> Result<TensorMap> {
    check_inputs(fts, pre)?;
    let means = mean_f64(fts);
    let mut out = TensorMap::new();
    for ((name, t), m) in pre.iter().zip(means) {
        let data = m.into_iter().map(|v| v as f32).collect();
        out.insert(name, Tensor::new(t.shape().to_vec(), data)?)?;
    }
    Ok(out)
}

/// Shared base: `mean(fts) - pre`.
pub fn compute_base(fts: &[TensorMap], pre: &TensorMap) -> Result<TaskVector> {
    check_inputs(fts, pre)?;
    let means = mean_f64(fts);
    let mut out = TensorMap::new();
    for ((name, t), m) in pre.iter().zip(means) {
        let data = m
            .iter()
            .zip(t.data())
            .map(|(&avg, &p)| (avg - p as f64) as f32)
            .collect();
        out.insert(name, Tensor::new(t.shape().to_vec(), data)?)?;
    }
    Ok(TaskVector::new(BASE_TASK, out))
}

fn quantize_base(base: &TaskVector, pre: &TensorMap, b_base: Bits) -> Result<QuantizedArtifact> {
    let meta = ArtifactMeta {
        task: BASE_TASK.to_string(),
        pre_digest: Some(payload_digest(pre)),
        bits: b_base,
        base_bits: Some(b_base),
    };
    QuantizedArtifact::quantize_map(&base.tensors, Role::RtvqBase, meta)
}

/// `pre + dequantize(quantize(base, b_base))`.
pub fn error_corrected_avg(base: &TaskVector, pre: &TensorMap, b_base: Bits) -> Result<TensorMap> {
    pre.check_compatible(&base.tensors)?;
    let q = quantize_base(base, pre, b_base)?;
    pre.zip_with(&q.dequantize(), |p, d| p + d)
}

/// Builds a residual bundle from fine-tuned checkpoints named by `tasks`.
pub fn rtvq_quantize<S: AsRef<str>>(
    tasks: &[S],
    fts: &[TensorMap],
    pre: &TensorMap,
    cfg: &RtvqConfig,
) -> Result<RtvqBundle> {
    if tasks.len() != fts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} task names for {} checkpoints",
            tasks.len(),
            fts.len()
        )));
    }
    let base = compute_base(fts, pre)?;
    let base_q = quantize_base(&base, pre, cfg.b_base)?;
    let reference = if cfg.error_correction {
        pre.zip_with(&base_q.dequantize(), |p, d| p + d)?
    } else {
        average_checkpoint(fts, pre)?
    };
    let digest = base_q.meta.pre_digest;
    let mut offsets = Vec::with_capacity(fts.len());
    for (task, ft) in tasks.iter().zip(fts) {
        let offset = ft.zip_with(&reference, |f, r| f - r)?;
        let meta = ArtifactMeta {
            task: task.as_ref().to_string(),
            pre_digest: digest,
            bits: cfg.b_offset,
            base_bits: Some(cfg.b_base),
        };
        offsets.push(QuantizedArtifact::quantize_map(
            &offset,
            Role::RtvqOffset,
            meta,
        )?);
    }
    let manifest = Manifest {
        tasks: tasks
            .iter()
            .map(|t| t.as_ref().to_string())
            .collect::<Vec<String>>(),
        b_base: cfg.b_base,
        b_offset: cfg.b_offset,
        pre_digest: digest,
    };
    RtvqBundle::new(manifest, base_q, offsets)
}

/// `dequantize(offset_task) + dequantize(base)`.
pub fn rtvq_reconstruct(bundle: &RtvqBundle, task: &str) -> Result<TaskVector> {
    let idx = bundle.task_index(task)?;
    let offset = &bundle.offsets[idx];
    bundle.base.check_layout(offset)?;
    let tensors = offset
        .dequantize()
        .zip_with(&bundle.base.dequantize(), |o, b| o + b)?;
    Ok(TaskVector::new(task, tensors))
}

/// Reconstructed task vectors for every task, in manifest order.
pub fn rtvq_reconstruct_all(bundle: &RtvqBundle) -> Result<Vec<TaskVector>> {
    let base = bundle.base.dequantize();
    bundle
        .manifest
        .tasks
        .iter()
        .zip(&bundle.offsets)
        .map(|(task, off)| {
            let tensors = off.dequantize().zip_with(&base, |o, b| o + b)?;
            Ok(TaskVector::new(task.as_str(), tensors))
        })
        .collect()
}
