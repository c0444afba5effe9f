//! Quantized artifact files.
//!
//! Layout: `b"QTV1"`, header length (`u32` LE), a JSON header, zero padding
//! to an 8-byte boundary, then the packed code streams back to back. Each
//! tensor is an independent LSB-first bitstream of `ceil(n * bits / 8)`
//! bytes at `offset` bytes into the payload section.
//!
//! Header:
//!
//! ```json
//! {"role": "TVQ",
//!  "meta": {"task": "mnist", "pre_digest": "<hex>" | null, "bits": 2, "base_bits": null},
//!  "tensors": [{"name", "shape", "bits", "scale", "zero_point", "constant", "offset", "length"}]}
//! ```
//!
//! `constant` is the reconstruction value of a constant tensor
//! (`scale == 0`) and 0 otherwise.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tvq_core::pack::packed_len;
use tvq_core::tensor::numel;
use tvq_core::{ArtifactMeta, Bits, Digest, QParams, QuantizedArtifact, QuantizedTensor, Role};

use crate::error::{Error, Result};
use crate::framing;

pub const MAGIC: &[u8; 4] = b"QTV1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    role: String,
    meta: Meta,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Meta {
    task: String,
    pre_digest: Option<String>,
    bits: u32,
    base_bits: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    bits: u32,
    // f32 values widened to f64 so the JSON text round-trips exactly
    scale: f64,
    zero_point: i32,
    constant: f64,
    offset: u64,
    length: u64,
}

fn narrow(name: &str, what: &str, v: f64) -> Result<f32> {
    let f = v as f32;
    if f as f64 != v || !f.is_finite() {
        return Err(Error::Header(format!(
            "tensor `{name}`: {what} {v} is not an f32"
        )));
    }
    Ok(f)
}

pub fn encode_qtv(art: &QuantizedArtifact) -> Result<Vec<u8>> {
    let mut tensors = Vec::with_capacity(art.len());
    let mut offset = 0u64;
    for (name, t) in art.iter() {
        let qp = t.qparams();
        let length = t.packed().len() as u64;
        tensors.push(Entry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            bits: qp.bits.get(),
            scale: qp.scale as f64,
            zero_point: qp.zero_point,
            constant: qp.constant as f64,
            offset,
            length,
        });
        offset += length;
    }
    let header = Header {
        role: art.role.as_str().to_string(),
        meta: Meta {
            task: art.meta.task.clone(),
            pre_digest: art.meta.pre_digest.map(|d| d.to_string()),
            bits: art.meta.bits.get(),
            base_bits: art.meta.base_bits.map(Bits::get),
        },
        tensors,
    };
    let header = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(16 + header.len() + offset as usize);
    framing::write_header(&mut out, MAGIC, &header)?;
    for (_, t) in art.iter() {
        out.extend_from_slice(t.packed());
    }
    Ok(out)
}

pub fn decode_qtv(bytes: &[u8]) -> Result<QuantizedArtifact> {
    let (header, payload) = framing::split(bytes, MAGIC, None)?;
    let header: Header = serde_json::from_slice(header)?;
    let role = Role::parse(&header.role)?;
    let meta = ArtifactMeta {
        task: header.meta.task,
        pre_digest: header
            .meta
            .pre_digest
            .as_deref()
            .map(Digest::parse_hex)
            .transpose()?,
        bits: Bits::new(header.meta.bits)?,
        base_bits: header.meta.base_bits.map(Bits::new).transpose()?,
    };
    let mut art = QuantizedArtifact::new(role, meta);
    let mut seen = HashSet::new();
    for e in header.tensors {
        if !seen.insert(e.name.clone()) {
            return Err(Error::Header(format!("duplicate tensor name `{}`", e.name)));
        }
        let bits = Bits::new(e.bits)?;
        let expected = packed_len(numel(&e.shape), bits) as u64;
        if e.length != expected {
            return Err(Error::ShapeMismatch(format!(
                "tensor `{}` has shape {:?} at {} bits but {} payload bytes",
                e.name, e.shape, e.bits, e.length
            )));
        }
        let qparams = QParams {
            scale: narrow(&e.name, "scale", e.scale)?,
            zero_point: e.zero_point,
            bits,
            constant: narrow(&e.name, "constant", e.constant)?,
        };
        let packed = framing::slice(payload, &e.name, e.offset, e.length)?.to_vec();
        art.insert(e.name, QuantizedTensor::new(e.shape, qparams, packed)?)?;
    }
    Ok(art)
}

pub fn write_qtv(art: &QuantizedArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_qtv(art)?).map_err(|e| Error::io(path, e))
}

pub fn read_qtv(path: impl AsRef<Path>) -> Result<QuantizedArtifact> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_qtv(&bytes)
}
