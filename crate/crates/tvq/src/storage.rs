//! Storage accounting from files on disk.

use std::fs;
use std::path::Path;

use tvq_core::analysis::{mean_artifact_bits, ArtifactStorage, StorageReport};
use tvq_core::QuantizedArtifact;

use crate::bundle::{bundle_files, read_bundle};
use crate::error::{Error, Result};
use crate::qtv::read_qtv;

fn file_size(path: &Path) -> Result<u64> {
    Ok(fs::metadata(path).map_err(|e| Error::io(path, e))?.len())
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Report for independent per-task artifact files (FQ or TVQ), one per task.
pub fn artifact_files_report<P: AsRef<Path>>(paths: &[P]) -> Result<StorageReport> {
    let mut arts: Vec<QuantizedArtifact> = Vec::with_capacity(paths.len());
    let mut rows = Vec::with_capacity(paths.len());
    for p in paths {
        let p = p.as_ref();
        let art = read_qtv(p)?;
        if let Some(first) = arts.first() {
            first
                .check_layout(&art)
                .map_err(|e| Error::ShapeMismatch(format!("{}: {e}", p.display())))?;
        }
        rows.push(ArtifactStorage::new(
            display_name(p),
            art.payload_bytes() as u64,
            file_size(p)?,
        )?);
        arts.push(art);
    }
    let params = arts.first().map_or(0, |a| a.param_count()) as u64;
    let refs: Vec<&QuantizedArtifact> = arts.iter().collect();
    Ok(StorageReport::new(
        rows,
        arts.len(),
        params,
        mean_artifact_bits(&refs),
    )?)
}

/// Report for a residual bundle directory. The manifest counts as header.
pub fn bundle_report(dir: impl AsRef<Path>) -> Result<StorageReport> {
    let dir = dir.as_ref();
    let bundle = read_bundle(dir, None)?;
    let files = bundle_files(dir, &bundle.manifest);
    let payloads = std::iter::once(0)
        .chain(std::iter::once(bundle.base.payload_bytes()))
        .chain(bundle.offsets.iter().map(|o| o.payload_bytes()));
    let rows = files
        .iter()
        .zip(payloads)
        .map(|(f, payload)| {
            Ok(ArtifactStorage::new(
                display_name(f),
                payload as u64,
                file_size(f)?,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StorageReport::new(
        rows,
        bundle.manifest.n_tasks(),
        bundle.base.param_count() as u64,
        bundle.manifest.effective_bits(),
    )?)
}
