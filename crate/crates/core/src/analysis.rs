//! Diagnostics: quantization-path error comparison, post-quantization
//! sparsity, task-vector cosine similarity and storage accounting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::artifact::{QuantizedArtifact, Role};
use crate::error::{Error, Result};
use crate::quant::{quant_error, Bits};
use crate::rtvq::{effective_bits, rtvq_quantize, rtvq_reconstruct_all, RtvqConfig};
use crate::taskvec::{artifact_task_vector, quantize_fq, quantize_tvq, task_vector, TaskVector};
use crate::tensor::TensorMap;

/// A way of storing a set of fine-tuned checkpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantPath {
    Fq(Bits),
    Tvq(Bits),
    Rtvq(RtvqConfig),
}

impl fmt::Display for QuantPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuantPath::Fq(b) => write!(f, "FQ{b}"),
            QuantPath::Tvq(b) => write!(f, "TVQ{b}"),
            QuantPath::Rtvq(c) => {
                write!(f, "RTVQ-B{}O{}", c.b_base, c.b_offset)?;
                if !c.error_correction {
                    f.write_str("-noEC")?;
                }
                Ok(())
            }
        }
    }
}

/// Task-vector reconstruction error of one path, averaged over tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct PathError {
    pub path: QuantPath,
    pub effective_bits: f64,
    /// Arithmetic mean over tasks of the per-parameter L2 distance.
    pub normalized_l2: f64,
    pub mean_l2: f64,
    /// Sum over tasks of the L2 distance.
    pub total_l2: f64,
    pub max_abs: f64,
}

/// Reconstructed task vectors for every task under `path`.
pub fn path_reconstructions(
    path: QuantPath,
    tasks: &[String],
    fts: &[TensorMap],
    pre: &TensorMap,
) -> Result<Vec<TaskVector>> {
    match path {
        QuantPath::Fq(bits) => tasks
            .iter()
            .zip(fts)
            .map(|(t, ft)| artifact_task_vector(&quantize_fq(t, ft, bits)?, pre))
            .collect(),
        QuantPath::Tvq(bits) => tasks
            .iter()
            .zip(fts)
            .map(|(t, ft)| artifact_task_vector(&quantize_tvq(t, ft, pre, bits)?, pre))
            .collect(),
        QuantPath::Rtvq(cfg) => rtvq_reconstruct_all(&rtvq_quantize(tasks, fts, pre, &cfg)?),
    }
}

/// Error of one path against the exact task vectors.
pub fn path_error(
    path: QuantPath,
    tasks: &[String],
    fts: &[TensorMap],
    pre: &TensorMap,
) -> Result<PathError> {
    if fts.is_empty() {
        return Err(Error::Empty("fine-tuned checkpoint list"));
    }
    if tasks.len() != fts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} task names for {} checkpoints",
            tasks.len(),
            fts.len()
        )));
    }
    let recon = path_reconstructions(path, tasks, fts, pre)?;
    let n = fts.len() as f64;
    let (mut norm_sum, mut l2_sum, mut max_abs) = (0.0, 0.0, 0.0f64);
    for ((task, ft), rec) in tasks.iter().zip(fts).zip(&recon) {
        let exact = task_vector(task, ft, pre)?;
        let r = quant_error(&exact.tensors.flatten(), &rec.tensors.flatten())?;
        norm_sum += r.normalized_l2;
        l2_sum += r.l2;
        max_abs = max_abs.max(r.max_abs);
    }
    let effective_bits = match path {
        QuantPath::Fq(b) | QuantPath::Tvq(b) => b.get() as f64,
        QuantPath::Rtvq(c) => effective_bits(c.b_offset, c.b_base, fts.len())?,
    };
    Ok(PathError {
        path,
        effective_bits,
        normalized_l2: norm_sum / n,
        mean_l2: l2_sum / n,
        total_l2: l2_sum,
        max_abs,
    })
}

/// FQ and TVQ at every width in `bits_grid`, then every residual config.
pub fn compare_paths(
    tasks: &[String],
    fts: &[TensorMap],
    pre: &TensorMap,
    bits_grid: &[Bits],
    rtvq_grid: &[RtvqConfig],
) -> Result<Vec<PathError>> {
    bits_grid
        .iter()
        .flat_map(|&b| [QuantPath::Fq(b), QuantPath::Tvq(b)])
        .chain(rtvq_grid.iter().map(|&c| QuantPath::Rtvq(c)))
        .map(|p| path_error(p, tasks, fts, pre))
        .collect()
}

/// Fraction of elements of a delta artifact that dequantize to exactly zero.
pub fn sparsity(art: &QuantizedArtifact) -> Result<f64> {
    if art.role == Role::Fq {
        return Err(Error::WrongRole(Role::Fq.as_str()));
    }
    let total = art.param_count();
    if total == 0 {
        return Err(Error::Empty("artifact"));
    }
    let zeros: usize = art
        .iter()
        .map(|(_, t)| {
            let qp = t.qparams();
            t.codes()
                .into_iter()
                .filter(|&c| qp.is_zero_code(c))
                .count()
        })
        .sum();
    Ok(zeros as f64 / total as f64)
}

/// Pairwise cosine similarity of flattened task vectors.
pub fn cosine_matrix(tvs: &[TaskVector]) -> Result<Vec<Vec<f64>>> {
    if tvs.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two task vectors".into(),
        ));
    }
    for tv in &tvs[1..] {
        tvs[0].tensors.check_compatible(&tv.tensors)?;
    }
    let flat: Vec<Vec<f32>> = tvs.iter().map(|tv| tv.tensors.flatten()).collect();
    let dot =
        |a: &[f32], b: &[f32]| -> f64 { a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum() };
    let norms: Vec<f64> = flat.iter().map(|v| libm::sqrt(dot(v, v))).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroNorm(i));
    }
    let k = tvs.len();
    let mut m = alloc::vec![alloc::vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
        for j in i + 1..k {
            let c = dot(&flat[i], &flat[j]) / (norms[i] * norms[j]);
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    Ok(m)
}

/// Byte accounting for one stored artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactStorage {
    pub name: String,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub total_bytes: u64,
}

impl ArtifactStorage {
    /// `total_bytes` is the measured size; the header absorbs everything that
    /// is not packed payload.
    pub fn new(name: impl Into<String>, payload_bytes: u64, total_bytes: u64) -> Result<Self> {
        if total_bytes < payload_bytes {
            return Err(Error::InvalidParameter(format!(
                "total {total_bytes} smaller than payload {payload_bytes}"
            )));
        }
        Ok(Self {
            name: name.into(),
            payload_bytes,
            header_bytes: total_bytes - payload_bytes,
            total_bytes,
        })
    }
}

/// Storage of a set of quantized task representations against FP32 copies.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageReport {
    pub artifacts: Vec<ArtifactStorage>,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub total_bytes: u64,
    /// `4 * param_count * n_tasks`.
    pub baseline_fp32_bytes: u64,
    /// `total_bytes / baseline_fp32_bytes`.
    pub ratio: f64,
    pub payload_ratio: f64,
    pub header_overhead: f64,
    pub per_task_effective_bits: f64,
}

impl StorageReport {
    pub fn new(
        artifacts: Vec<ArtifactStorage>,
        n_tasks: usize,
        param_count: u64,
        per_task_effective_bits: f64,
    ) -> Result<Self> {
        if n_tasks == 0 || param_count == 0 {
            return Err(Error::InvalidParameter(
                "storage report needs tasks and parameters".into(),
            ));
        }
        let payload_bytes: u64 = artifacts.iter().map(|a| a.payload_bytes).sum();
        let header_bytes: u64 = artifacts.iter().map(|a| a.header_bytes).sum();
        let total_bytes = payload_bytes + header_bytes;
        let baseline_fp32_bytes = 4 * param_count * n_tasks as u64;
        Ok(Self {
            artifacts,
            payload_bytes,
            header_bytes,
            total_bytes,
            baseline_fp32_bytes,
            ratio: total_bytes as f64 / baseline_fp32_bytes as f64,
            payload_ratio: payload_bytes as f64 / baseline_fp32_bytes as f64,
            header_overhead: if total_bytes == 0 {
                0.0
            } else {
                header_bytes as f64 / total_bytes as f64
            },
            per_task_effective_bits,
        })
    }
}

/// Mean stored bits per parameter across independent per-task artifacts.
pub fn mean_artifact_bits(arts: &[&QuantizedArtifact]) -> f64 {
    let (bits, params) = arts.iter().fold((0.0, 0usize), |(b, p), a| {
        let n = a.param_count();
        (b + a.meta.bits.get() as f64 * n as f64, p + n)
    });
    if params == 0 {
        0.0
    } else {
        bits / params as f64
    }
}
