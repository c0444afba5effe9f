//! Rayon drivers over the core routines. Work is split per tensor or per
//! path and results are assembled in input order, so output never depends
//! on the thread count.

use rayon::prelude::*;
use tvq_core::analysis::{path_error, PathError, QuantPath};
use tvq_core::taskvec::task_vector;
use tvq_core::{
    payload_digest, ArtifactMeta, Bits, QuantizedArtifact, QuantizedTensor, Role, TensorMap,
};

use crate::error::Result;

/// Same result as [`QuantizedArtifact::quantize_map`], one tensor per task.
pub fn quantize_map(map: &TensorMap, role: Role, meta: ArtifactMeta) -> Result<QuantizedArtifact> {
    map.check_finite()?;
    let entries: Vec<_> = map.iter().collect();
    let quantized = entries
        .par_iter()
        .map(|(_, t)| QuantizedTensor::from_tensor(t, meta.bits))
        .collect::<tvq_core::Result<Vec<_>>>()?;
    let mut art = QuantizedArtifact::new(role, meta);
    for ((name, _), q) in entries.into_iter().zip(quantized) {
        art.insert(name, q)?;
    }
    Ok(art)
}

pub fn quantize_fq(task: &str, ft: &TensorMap, bits: Bits) -> Result<QuantizedArtifact> {
    let meta = ArtifactMeta {
        task: task.to_string(),
        pre_digest: None,
        bits,
        base_bits: None,
    };
    quantize_map(ft, Role::Fq, meta)
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
    quantize_map(&tv.tensors, Role::Tvq, meta)
}

/// Error of every path, evaluated concurrently, in the order given.
pub fn path_errors(
    paths: &[QuantPath],
    tasks: &[String],
    fts: &[TensorMap],
    pre: &TensorMap,
) -> Result<Vec<PathError>> {
    Ok(paths
        .par_iter()
        .map(|&p| path_error(p, tasks, fts, pre))
        .collect::<tvq_core::Result<Vec<_>>>()?)
}

/// Runs `f` on a pool of `threads` workers; `None` or 0 means one per core.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
