//! Shared pieces of the binary containers: magic, length-prefixed JSON
//! header, 8-byte aligned payload section.

use crate::error::{Error, Result};

pub(crate) const ALIGN: usize = 8;

pub(crate) fn padding(len: usize) -> usize {
    len.next_multiple_of(ALIGN) - len
}

/// Writes `prefix`, the header length as `u32` LE, the header, and zero
/// padding up to the payload section.
pub(crate) fn write_header(out: &mut Vec<u8>, prefix: &[u8], header: &[u8]) -> Result<()> {
    let len = u32::try_from(header.len()).map_err(|_| Error::HeaderTooLarge)?;
    out.extend_from_slice(prefix);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(header);
    out.resize(out.len() + padding(out.len()), 0);
    Ok(())
}

/// Splits a file into its JSON header and payload section. `prefix` is the
/// expected magic (and version byte).
pub(crate) fn split<'a>(
    bytes: &'a [u8],
    magic: &[u8],
    version: Option<u8>,
) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < magic.len() || &bytes[..magic.len()] != magic {
        return Err(Error::BadMagic);
    }
    let mut at = magic.len();
    if let Some(v) = version {
        let got = *bytes
            .get(at)
            .ok_or_else(|| Error::Truncated("missing version byte".into()))?;
        if got != v {
            return Err(Error::UnsupportedVersion(got));
        }
        at += 1;
    }
    let len_bytes: [u8; 4] = bytes
        .get(at..at + 4)
        .ok_or_else(|| Error::Truncated("missing header length".into()))?
        .try_into()
        .expect("four bytes");
    at += 4;
    let len = u32::from_le_bytes(len_bytes) as usize;
    let header = bytes
        .get(at..at + len)
        .ok_or_else(|| Error::Truncated(format!("header of {len} bytes")))?;
    at += len;
    let start = at + padding(at);
    let payload = bytes.get(start..).unwrap_or(&[]);
    Ok((header, payload))
}

/// Bounds-checked payload slice.
pub(crate) fn slice<'a>(
    payload: &'a [u8],
    name: &str,
    offset: u64,
    length: u64,
) -> Result<&'a [u8]> {
    let end = offset
        .checked_add(length)
        .ok_or_else(|| Error::Header(format!("tensor `{name}` extent overflows")))?;
    if end > payload.len() as u64 {
        return Err(Error::Truncated(format!(
            "tensor `{name}` needs payload bytes up to {end}, have {}",
            payload.len()
        )));
    }
    Ok(&payload[offset as usize..end as usize])
}
