//! Residual bundle directories: `base.qtv`, one `offset_<task>.qtv` per
//! task and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tvq_core::artifact::validate_task_name;
use tvq_core::{payload_digest, Bits, Digest, Manifest, RtvqBundle, TensorMap};

use crate::error::{Error, Result};
use crate::qtv::{read_qtv, write_qtv};

pub const MANIFEST: &str = "manifest.json";
pub const BASE_FILE: &str = "base.qtv";

pub fn offset_file(task: &str) -> String {
    format!("offset_{task}.qtv")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestJson {
    tasks: Vec<String>,
    b_base: u32,
    b_offset: u32,
    n_tasks: usize,
    pre_digest: Option<String>,
}

pub fn encode_manifest(m: &Manifest) -> Result<Vec<u8>> {
    let json = ManifestJson {
        tasks: m.tasks.clone(),
        b_base: m.b_base.get(),
        b_offset: m.b_offset.get(),
        n_tasks: m.n_tasks(),
        pre_digest: m.pre_digest.map(|d| d.to_string()),
    };
    let mut out = serde_json::to_vec_pretty(&json)?;
    out.push(b'\n');
    Ok(out)
}

pub fn decode_manifest(bytes: &[u8]) -> Result<Manifest> {
    let json: ManifestJson = serde_json::from_slice(bytes)?;
    if json.n_tasks != json.tasks.len() {
        return Err(Error::Header(format!(
            "manifest n_tasks {} but {} task names",
            json.n_tasks,
            json.tasks.len()
        )));
    }
    for t in &json.tasks {
        validate_task_name(t)?;
    }
    Ok(Manifest {
        tasks: json.tasks,
        b_base: Bits::new(json.b_base)?,
        b_offset: Bits::new(json.b_offset)?,
        pre_digest: json
            .pre_digest
            .as_deref()
            .map(Digest::parse_hex)
            .transpose()?,
    })
}

/// Files a bundle occupies, manifest first.
pub fn bundle_files(dir: &Path, manifest: &Manifest) -> Vec<PathBuf> {
    let mut files = vec![dir.join(MANIFEST), dir.join(BASE_FILE)];
    files.extend(manifest.tasks.iter().map(|t| dir.join(offset_file(t))));
    files
}

pub fn write_bundle(bundle: &RtvqBundle, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_qtv(&bundle.base, dir.join(BASE_FILE))?;
    for (task, off) in bundle.manifest.tasks.iter().zip(&bundle.offsets) {
        write_qtv(off, dir.join(offset_file(task)))?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, encode_manifest(&bundle.manifest)?).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let bytes = match fs::read(&path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingManifest(dir.to_path_buf()))
        }
        Err(e) => return Err(Error::io(&path, e)),
    };
    decode_manifest(&bytes)
}

/// Reads a bundle. When `pre` is given, its payload digest must match the
/// one recorded in the manifest.
pub fn read_bundle(dir: impl AsRef<Path>, pre: Option<&TensorMap>) -> Result<RtvqBundle> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    if let Some(pre) = pre {
        verify_digest(manifest.pre_digest, pre)?;
    }
    let base = read_qtv(dir.join(BASE_FILE))?;
    let offsets = manifest
        .tasks
        .iter()
        .map(|t| read_qtv(dir.join(offset_file(t))))
        .collect::<Result<Vec<_>>>()?;
    for off in &offsets {
        base.check_layout(off)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    }
    Ok(RtvqBundle::new(manifest, base, offsets)?)
}

/// Checks a recorded digest against a candidate pre-trained checkpoint.
/// Artifacts without a recorded digest pass.
pub fn verify_digest(expected: Option<Digest>, pre: &TensorMap) -> Result<()> {
    if let Some(expected) = expected {
        let actual = payload_digest(pre);
        if actual != expected {
            return Err(Error::DigestMismatch {
                expected: expected.to_string(),
                actual: actual.to_string(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvq_core::rtvq::{rtvq_quantize, RtvqConfig};
    use tvq_core::Tensor;

    fn single(v: Vec<f32>) -> TensorMap {
        let mut m = TensorMap::new();
        m.insert("w", Tensor::new(vec![v.len()], v).unwrap())
            .unwrap();
        m
    }

    #[test]
    fn one_task_bundle_has_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let pre = single(vec![0.0, 0.5, 1.0]);
        let ft = single(vec![0.1, 0.4, 1.2]);
        let bundle =
            rtvq_quantize(&["only"], &[ft], &pre, &RtvqConfig::new(Bits::B4, Bits::B2)).unwrap();
        write_bundle(&bundle, dir.path()).unwrap();
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
        assert_eq!(read_bundle(dir.path(), Some(&pre)).unwrap(), bundle);
        let other = single(vec![0.0, 0.5, 1.5]);
        assert!(matches!(
            read_bundle(dir.path(), Some(&other)),
            Err(Error::DigestMismatch { .. })
        ));
    }

    #[test]
    fn manifest_keys_and_effective_bits() {
        let m = Manifest {
            tasks: (0..8).map(|i| format!("t{i}")).collect(),
            b_base: Bits::B4,
            b_offset: Bits::B2,
            pre_digest: None,
        };
        let bytes = encode_manifest(&m).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["b_base", "b_offset", "n_tasks", "pre_digest", "tasks"]
        );
        let back = decode_manifest(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.effective_bits(), 2.5);
    }

    #[test]
    fn missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_bundle(dir.path(), None),
            Err(Error::MissingManifest(_))
        ));
    }
}
