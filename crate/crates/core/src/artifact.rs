//! In-memory forms of quantized checkpoints and residual bundles.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use sha2::{Digest as _, Sha256};

use crate::error::{Error, Result};
use crate::pack::{pack, packed_len, unpack};
use crate::quant::{compute_qparams, dequantize, quantize, Bits, QParams};
use crate::tensor::{numel, Tensor, TensorMap};

/// One quantized tensor: packed codes plus the parameters to decode them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTensor {
    shape: Vec<usize>,
    qparams: QParams,
    codes: Vec<u8>,
}

impl QuantizedTensor {
    /// Wraps already-packed codes, validating their length and padding.
    pub fn new(shape: Vec<usize>, qparams: QParams, packed: Vec<u8>) -> Result<Self> {
        let n = numel(&shape);
        let expected = packed_len(n, qparams.bits);
        if packed.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: packed.len(),
            });
        }
        if !(qparams.scale >= 0.0 && qparams.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {}", qparams.scale)));
        }
        if !qparams.constant.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant {}",
                qparams.constant
            )));
        }
        // catches stray padding bits
        unpack(&packed, n, qparams.bits)?;
        Ok(Self {
            shape,
            qparams,
            codes: packed,
        })
    }

    pub fn from_tensor(tensor: &Tensor, bits: Bits) -> Result<Self> {
        let qp = if tensor.is_empty() {
            QParams::sentinel(0.0, bits)
        } else {
            compute_qparams(tensor.data(), bits)?
        };
        let codes = pack(&quantize(tensor.data(), &qp), bits)?;
        Ok(Self {
            shape: tensor.shape().to_vec(),
            qparams: qp,
            codes,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn qparams(&self) -> &QParams {
        &self.qparams
    }

    pub fn bits(&self) -> Bits {
        self.qparams.bits
    }

    pub fn len(&self) -> usize {
        numel(&self.shape)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Packed code bytes.
    pub fn packed(&self) -> &[u8] {
        &self.codes
    }

    pub fn codes(&self) -> Vec<u8> {
        // invariant established at construction
        unpack(&self.codes, self.len(), self.qparams.bits).expect("validated packing")
    }

    pub fn dequantize(&self) -> Tensor {
        let data = dequantize(&self.codes(), &self.qparams).expect("codes fit bit-width");
        Tensor::new(self.shape.clone(), data).expect("shape matches code count")
    }
}

/// What a quantized artifact reconstructs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Quantized fine-tuned weights; dequantizes to the checkpoint itself.
    Fq,
    /// Quantized task vector.
    Tvq,
    /// Shared base of a residual bundle.
    RtvqBase,
    /// Per-task offset of a residual bundle.
    RtvqOffset,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Fq => "FQ",
            Role::Tvq => "TVQ",
            Role::RtvqBase => "RTVQ_BASE",
            Role::RtvqOffset => "RTVQ_OFFSET",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "FQ" => Ok(Role::Fq),
            "TVQ" => Ok(Role::Tvq),
            "RTVQ_BASE" => Ok(Role::RtvqBase),
            "RTVQ_OFFSET" => Ok(Role::RtvqOffset),
            other => Err(Error::InvalidParameter(format!("unknown role `{other}`"))),
        }
    }

    /// True when dequantized values are deltas against the pre-trained model.
    pub fn is_delta(self) -> bool {
        !matches!(self, Role::Fq)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// SHA-256 of a checkpoint's payload bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Digest(pub [u8; 32]);

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl Digest {
    pub fn parse_hex(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad digest `{s}`"));
        if s.len() != 64 || !s.is_ascii() {
            return Err(bad());
        }
        let mut out = [0u8; 32];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(Digest(out))
    }
}

/// Payload alignment used by checkpoint files.
pub const PAYLOAD_ALIGN: usize = 8;

/// Hashes the checkpoint payload exactly as laid out on disk: each tensor's
/// little-endian `f32` data, zero-padded to an 8-byte boundary, in map order.
pub fn payload_digest(map: &TensorMap) -> Digest {
    let mut hasher = Sha256::new();
    for (_, t) in map.iter() {
        for v in t.data() {
            hasher.update(v.to_le_bytes());
        }
        let len = t.len() * 4;
        let pad = len.next_multiple_of(PAYLOAD_ALIGN) - len;
        hasher.update(&[0u8; PAYLOAD_ALIGN][..pad]);
    }
    Digest(hasher.finalize().into())
}

/// Provenance recorded with every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactMeta {
    pub task: String,
    pub pre_digest: Option<Digest>,
    pub bits: Bits,
    /// Base bit-width for residual artifacts.
    pub base_bits: Option<Bits>,
}

/// A whole quantized checkpoint or checkpoint delta.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedArtifact {
    pub role: Role,
    pub meta: ArtifactMeta,
    tensors: Vec<(String, QuantizedTensor)>,
}

impl QuantizedArtifact {
    pub fn new(role: Role, meta: ArtifactMeta) -> Self {
        Self {
            role,
            meta,
            tensors: Vec::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: QuantizedTensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::InvalidName("empty tensor name".into()));
        }
        if self.tensors.iter().any(|(n, _)| *n == name) {
            return Err(Error::DuplicateName(name));
        }
        self.tensors.push((name, tensor));
        Ok(())
    }

    /// Quantizes every tensor of `map` independently at `meta.bits`.
    pub fn quantize_map(map: &TensorMap, role: Role, meta: ArtifactMeta) -> Result<Self> {
        map.check_finite()?;
        let bits = meta.bits;
        let mut art = Self::new(role, meta);
        for (name, t) in map.iter() {
            art.tensors
                .push((name.to_string(), QuantizedTensor::from_tensor(t, bits)?));
        }
        Ok(art)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&str, &QuantizedTensor)> {
        self.tensors.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn get(&self, name: &str) -> Option<&QuantizedTensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.len()).sum()
    }

    /// Sum of packed payload sizes in bytes.
    pub fn payload_bytes(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.packed().len()).sum()
    }

    /// Dequantized values, in the artifact's own space (weights for FQ,
    /// deltas otherwise).
    pub fn dequantize(&self) -> TensorMap {
        let mut out = TensorMap::new();
        for (name, t) in &self.tensors {
            out.push_unchecked(name, t.dequantize());
        }
        out
    }

    /// Checks the name set and shapes match another artifact, in order.
    pub fn check_layout(&self, other: &QuantizedArtifact) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor count {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for ((na, ta), (nb, tb)) in self.iter().zip(other.iter()) {
            if na != nb || ta.shape() != tb.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "`{na}` {:?} vs `{nb}` {:?}",
                    ta.shape(),
                    tb.shape()
                )));
            }
        }
        Ok(())
    }

    /// Checks the name set and shapes match a full-precision map, in order.
    pub fn check_map_layout(&self, map: &TensorMap) -> Result<()> {
        if self.len() != map.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor count {} vs {}",
                self.len(),
                map.len()
            )));
        }
        for ((na, ta), (nb, tb)) in self.iter().zip(map.iter()) {
            if na != nb || ta.shape() != tb.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "`{na}` {:?} vs `{nb}` {:?}",
                    ta.shape(),
                    tb.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Task names double as file-name components, so they are restricted to
/// ASCII alphanumerics plus `-`, `_` and `.` (not leading).
pub fn validate_task_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && !name.starts_with('.')
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidName(format!("task name `{name}`")))
    }
}

/// Links a residual base to its offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub tasks: Vec<String>,
    pub b_base: Bits,
    pub b_offset: Bits,
    pub pre_digest: Option<Digest>,
}

impl Manifest {
    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn effective_bits(&self) -> f64 {
        crate::rtvq::effective_bits(self.b_offset, self.b_base, self.tasks.len())
            .expect("manifest has at least one task")
    }
}

/// A shared base artifact plus one offset artifact per task.
#[derive(Debug, Clone, PartialEq)]
pub struct RtvqBundle {
    pub manifest: Manifest,
    pub base: QuantizedArtifact,
    pub offsets: Vec<QuantizedArtifact>,
}

impl RtvqBundle {
    /// Assembles a bundle and checks its invariants.
    pub fn new(
        manifest: Manifest,
        base: QuantizedArtifact,
        offsets: Vec<QuantizedArtifact>,
    ) -> Result<Self> {
        let bundle = Self {
            manifest,
            base,
            offsets,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.tasks.is_empty() {
            return Err(Error::Empty("bundle task list"));
        }
        if m.tasks.len() != self.offsets.len() {
            return Err(Error::InvalidParameter(format!(
                "manifest lists {} tasks but bundle has {} offsets",
                m.tasks.len(),
                self.offsets.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for t in &m.tasks {
            validate_task_name(t)?;
            if !seen.insert(t.as_str()) {
                return Err(Error::DuplicateName(t.clone()));
            }
        }
        if self.base.role != Role::RtvqBase {
            return Err(Error::WrongRole(self.base.role.as_str()));
        }
        check_uniform_bits(&self.base, m.b_base)?;
        for (task, off) in m.tasks.iter().zip(&self.offsets) {
            if off.role != Role::RtvqOffset {
                return Err(Error::WrongRole(off.role.as_str()));
            }
            if &off.meta.task != task {
                return Err(Error::InvalidParameter(format!(
                    "offset for `{}` listed as `{task}`",
                    off.meta.task
                )));
            }
            check_uniform_bits(off, m.b_offset)?;
            self.base.check_layout(off)?;
        }
        Ok(())
    }

    pub fn task_index(&self, task: &str) -> Result<usize> {
        self.manifest
            .tasks
            .iter()
            .position(|t| t == task)
            .ok_or_else(|| Error::UnknownTask(task.to_string()))
    }
}

fn check_uniform_bits(art: &QuantizedArtifact, bits: Bits) -> Result<()> {
    if art.meta.bits != bits {
        return Err(Error::InvalidParameter(format!(
            "artifact bits {} vs manifest {}",
            art.meta.bits, bits
        )));
    }
    for (name, t) in art.iter() {
        if t.bits() != bits {
            return Err(Error::InvalidParameter(format!(
                "tensor `{name}` has {} bits, expected {bits}",
                t.bits()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn quantized_tensor_validates_packing() {
        let qp = QParams {
            scale: 1.0,
            zero_point: 0,
            bits: Bits::B2,
            constant: 0.0,
        };
        assert!(QuantizedTensor::new(vec![5], qp, vec![0, 0]).is_ok());
        assert!(QuantizedTensor::new(vec![5], qp, vec![0]).is_err());
        assert!(QuantizedTensor::new(vec![5], qp, vec![0, 0b1000_0000]).is_err());
    }

    #[test]
    fn digest_hex_roundtrip() {
        let mut m = TensorMap::new();
        m.insert("w", Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap())
            .unwrap();
        let d = payload_digest(&m);
        let s = alloc::format!("{d}");
        assert_eq!(s.len(), 64);
        assert_eq!(Digest::parse_hex(&s).unwrap(), d);
        assert!(Digest::parse_hex("zz").is_err());
    }

    #[test]
    fn task_names() {
        assert!(validate_task_name("mnist-v2.1").is_ok());
        assert!(validate_task_name("../x").is_err());
        assert!(validate_task_name("").is_err());
        assert!(validate_task_name(".hidden").is_err());
    }

    #[test]
    fn roles_parse() {
        for r in [Role::Fq, Role::Tvq, Role::RtvqBase, Role::RtvqOffset] {
            assert_eq!(Role::parse(r.as_str()).unwrap(), r);
        }
        assert!(Role::parse("XX").is_err());
    }
}
