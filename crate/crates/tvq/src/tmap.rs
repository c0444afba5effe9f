//! Full-precision checkpoint files.
//!
//! Layout: `b"TMAP"`, version byte `1`, header length (`u32` LE), a JSON
//! array of `{name, shape, offset, length}` in map order, zero padding to an
//! 8-byte boundary, then the payload section. Each tensor is stored as
//! little-endian `f32` at `offset` bytes into the payload section and padded
//! to the next 8-byte boundary.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tvq_core::tensor::numel;
use tvq_core::{Tensor, TensorMap};

use crate::error::{Error, Result};
use crate::framing::{self, padding};

pub const MAGIC: &[u8; 4] = b"TMAP";
pub const VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: u64,
    length: u64,
}

pub fn encode_tmap(map: &TensorMap) -> Result<Vec<u8>> {
    let mut entries = Vec::with_capacity(map.len());
    let mut offset = 0u64;
    for (name, t) in map.iter() {
        let length = 4 * t.len() as u64;
        entries.push(Entry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            offset,
            length,
        });
        offset += length + padding(length as usize) as u64;
    }
    let header = serde_json::to_vec(&entries)?;
    let mut out = Vec::with_capacity(16 + header.len() + offset as usize);
    framing::write_header(&mut out, &[MAGIC.as_slice(), &[VERSION]].concat(), &header)?;
    for (_, t) in map.iter() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.resize(out.len() + padding(out.len()), 0);
    }
    Ok(out)
}

pub fn decode_tmap(bytes: &[u8]) -> Result<TensorMap> {
    let (header, payload) = framing::split(bytes, MAGIC, Some(VERSION))?;
    let entries: Vec<Entry> = serde_json::from_slice(header)?;
    let mut seen = HashSet::new();
    let mut map = TensorMap::new();
    for e in entries {
        if !seen.insert(e.name.clone()) {
            return Err(Error::Header(format!("duplicate tensor name `{}`", e.name)));
        }
        let n = numel(&e.shape);
        if e.length != 4 * n as u64 {
            return Err(Error::ShapeMismatch(format!(
                "tensor `{}` has shape {:?} but {} payload bytes",
                e.name, e.shape, e.length
            )));
        }
        if e.offset % framing::ALIGN as u64 != 0 {
            return Err(Error::Header(format!(
                "tensor `{}` offset not 8-byte aligned",
                e.name
            )));
        }
        let raw = framing::slice(payload, &e.name, e.offset, e.length)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        map.insert(e.name, Tensor::new(e.shape, data)?)?;
    }
    Ok(map)
}

pub fn write_tmap(map: &TensorMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_tmap(map)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_tmap(path: impl AsRef<Path>) -> Result<TensorMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tmap(&bytes)
}
