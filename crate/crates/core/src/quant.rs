//! Asymmetric affine quantization of flat `f32` arrays.
//!
//! A tensor with range `[min, max]` is mapped onto `b`-bit codes with
//! `scale = (max - min) / (2^b - 1)` and `zero_point = -round(min / scale)`.
//! A value quantizes to `clamp(round(x / scale) + zero_point, 0, 2^b - 1)`
//! and reconstructs as `scale * (code - zero_point)`. `round` is
//! half-away-from-zero throughout.
//!
//! Constant tensors have no range to divide by. They use a sentinel
//! (`scale == 0`, `zero_point == 0`, every code 0) and carry the constant
//! value separately, so they reconstruct exactly.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Supported code widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bits {
    B2,
    B3,
    B4,
    B8,
}

impl Bits {
    pub const ALL: [Bits; 4] = [Bits::B2, Bits::B3, Bits::B4, Bits::B8];

    pub fn new(bits: u32) -> Result<Self> {
        match bits {
            2 => Ok(Bits::B2),
            3 => Ok(Bits::B3),
            4 => Ok(Bits::B4),
            8 => Ok(Bits::B8),
            other => Err(Error::InvalidBits(other)),
        }
    }

    pub fn get(self) -> u32 {
        match self {
            Bits::B2 => 2,
            Bits::B3 => 3,
            Bits::B4 => 4,
            Bits::B8 => 8,
        }
    }

    /// Largest code, `2^b - 1`.
    pub fn max_code(self) -> u32 {
        (1u32 << self.get()) - 1
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// Per-tensor quantization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    pub scale: f32,
    pub zero_point: i32,
    pub bits: Bits,
    /// Reconstruction value for the constant-tensor sentinel; 0 otherwise.
    pub constant: f32,
}

impl QParams {
    pub fn sentinel(constant: f32, bits: Bits) -> Self {
        Self {
            scale: 0.0,
            zero_point: 0,
            bits,
            constant,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        self.scale == 0.0
    }

    /// Code before clamping. Meaningless for the sentinel.
    #[inline]
    pub fn raw_code(&self, x: f32) -> i64 {
        libm::round(x as f64 / self.scale as f64) as i64 + self.zero_point as i64
    }

    #[inline]
    pub fn quantize_value(&self, x: f32) -> u8 {
        if self.is_sentinel() {
            return 0;
        }
        self.raw_code(x).clamp(0, self.bits.max_code() as i64) as u8
    }

    #[inline]
    pub fn dequantize_value(&self, code: u8) -> f32 {
        if self.is_sentinel() {
            return self.constant;
        }
        (self.scale as f64 * (code as i64 - self.zero_point as i64) as f64) as f32
    }

    /// True when `code` reconstructs to exactly zero.
    pub fn is_zero_code(&self, code: u8) -> bool {
        if self.is_sentinel() {
            self.constant == 0.0
        } else {
            code as i64 == self.zero_point as i64
        }
    }
}

fn range_of(data: &[f32]) -> Result<(f64, f64)> {
    if data.is_empty() {
        return Err(Error::Empty("quantization input"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in data {
        if !v.is_finite() {
            return Err(Error::NonFinite("quantization input".into()));
        }
        let v = v as f64;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Derives scale and zero-point from the value range of `data`.
pub fn compute_qparams(data: &[f32], bits: Bits) -> Result<QParams> {
    let (lo, hi) = range_of(data)?;
    if lo == hi {
        return Ok(QParams::sentinel(lo as f32, bits));
    }
    let levels = bits.max_code() as f64;
    let range = hi - lo;
    let mut scale = (range / levels) as f32;
    if scale == 0.0 {
        // range below f32 resolution after division
        scale = f32::from_bits(1);
    }
    // min / scale evaluated against the exact (unrounded) step
    let zp = -libm::round(lo * levels / range);
    if zp < i32::MIN as f64 || zp > i32::MAX as f64 {
        return Err(Error::InvalidParameter(alloc::format!(
            "zero-point {zp} does not fit in 32 bits"
        )));
    }
    Ok(QParams {
        scale,
        zero_point: zp as i32,
        bits,
        constant: 0.0,
    })
}

pub fn quantize(data: &[f32], qp: &QParams) -> Vec<u8> {
    data.iter().map(|&x| qp.quantize_value(x)).collect()
}

pub fn dequantize(codes: &[u8], qp: &QParams) -> Result<Vec<f32>> {
    let max = qp.bits.max_code();
    codes
        .iter()
        .map(|&c| {
            if c as u32 > max {
                Err(Error::CodeOutOfRange {
                    code: c as u32,
                    bits: qp.bits.get(),
                })
            } else {
                Ok(qp.dequantize_value(c))
            }
        })
        .collect()
}

/// `compute_qparams` followed by `quantize`.
pub fn quantize_array(data: &[f32], bits: Bits) -> Result<(QParams, Vec<u8>)> {
    let qp = compute_qparams(data, bits)?;
    Ok((qp, quantize(data, &qp)))
}

/// Quantize then dequantize.
pub fn fake_quantize(data: &[f32], bits: Bits) -> Result<Vec<f32>> {
    let (qp, codes) = quantize_array(data, bits)?;
    dequantize(&codes, &qp)
}

/// Distance between an array and its reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorReport {
    pub l2: f64,
    pub max_abs: f64,
    /// `l2` divided by the number of parameters.
    pub normalized_l2: f64,
}

pub fn quant_error(original: &[f32], reconstructed: &[f32]) -> Result<ErrorReport> {
    if original.len() != reconstructed.len() {
        return Err(Error::LengthMismatch {
            expected: original.len(),
            actual: reconstructed.len(),
        });
    }
    let mut sq = 0.0f64;
    let mut max_abs = 0.0f64;
    for (&a, &b) in original.iter().zip(reconstructed) {
        let d = a as f64 - b as f64;
        sq += d * d;
        max_abs = max_abs.max(d.abs());
    }
    let l2 = libm::sqrt(sq);
    let n = original.len();
    Ok(ErrorReport {
        l2,
        max_abs,
        normalized_l2: if n == 0 { 0.0 } else { l2 / n as f64 },
    })
}
