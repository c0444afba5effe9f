//! LSB-first bit packing of quantization codes.
//!
//! Code `i` occupies bits `[i*b, (i+1)*b)` of the stream, where bit `k` is
//! bit `k % 8` of byte `k / 8`. Trailing bits of the last byte are zero.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::quant::Bits;

/// Bytes needed for `n` codes of width `bits`.
pub fn packed_len(n: usize, bits: Bits) -> usize {
    (n * bits.get() as usize).div_ceil(8)
}

pub fn pack(codes: &[u8], bits: Bits) -> Result<Vec<u8>> {
    let width = bits.get();
    let max = bits.max_code();
    let mut out = Vec::with_capacity(packed_len(codes.len(), bits));
    let mut acc: u32 = 0;
    let mut filled: u32 = 0;
    for &c in codes {
        if c as u32 > max {
            return Err(Error::CodeOutOfRange {
                code: c as u32,
                bits: width,
            });
        }
        acc |= (c as u32) << filled;
        filled += width;
        while filled >= 8 {
            out.push(acc as u8);
            acc >>= 8;
            filled -= 8;
        }
    }
    if filled > 0 {
        out.push(acc as u8);
    }
    Ok(out)
}

pub fn unpack(bytes: &[u8], n: usize, bits: Bits) -> Result<Vec<u8>> {
    let expected = packed_len(n, bits);
    if bytes.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let width = bits.get();
    let mask = bits.max_code();
    let mut out = Vec::with_capacity(n);
    let mut acc: u32 = 0;
    let mut avail: u32 = 0;
    let mut src = bytes.iter();
    for _ in 0..n {
        while avail < width {
            // length was checked above
            acc |= (*src.next().unwrap() as u32) << avail;
            avail += 8;
        }
        out.push((acc & mask) as u8);
        acc >>= width;
        avail -= width;
    }
    if acc != 0 {
        return Err(Error::InvalidParameter("nonzero padding bits".into()));
    }
    Ok(out)
}
