//! Naive reference implementations used as test oracles. Nothing here calls
//! into the library's numeric paths.

#![allow(dead_code)]

/// Round half away from zero, written out by hand.
pub fn round_half_away(x: f64) -> f64 {
    if x >= 0.0 {
        (x + 0.5).floor()
    } else {
        -((-x) + 0.5).floor()
    }
}

/// (scale, zero_point) straight from the affine-mapping definition, or
/// `None` for a constant input.
pub fn qparams(data: &[f32], bits: u32) -> Option<(f32, i64)> {
    let lo = data.iter().fold(f64::INFINITY, |a, &v| a.min(v as f64));
    let hi = data.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v as f64));
    if lo == hi {
        return None;
    }
    let levels = ((1u64 << bits) - 1) as f64;
    let scale = ((hi - lo) / levels) as f32;
    let zp = -round_half_away(lo * levels / (hi - lo)) as i64;
    Some((scale, zp))
}

/// Unclamped code for one value.
pub fn raw_code(x: f32, scale: f32, zp: i64) -> i64 {
    round_half_away(x as f64 / scale as f64) as i64 + zp
}

pub fn code(x: f32, scale: f32, zp: i64, bits: u32) -> u8 {
    raw_code(x, scale, zp).clamp(0, (1i64 << bits) - 1) as u8
}

pub fn dequant(code: u8, scale: f32, zp: i64) -> f32 {
    (scale as f64 * (code as i64 - zp) as f64) as f32
}

/// Quantize-dequantize a whole array.
pub fn fake_quant(data: &[f32], bits: u32) -> Vec<f32> {
    match qparams(data, bits) {
        None => data.to_vec(),
        Some((s, z)) => data
            .iter()
            .map(|&x| dequant(code(x, s, z, bits), s, z))
            .collect(),
    }
}

/// Bit-by-bit LSB-first packing.
pub fn pack_bits(codes: &[u8], bits: u32) -> Vec<u8> {
    let mut stream = Vec::new();
    for &c in codes {
        for k in 0..bits {
            stream.push((c >> k) & 1 == 1);
        }
    }
    stream
        .chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .enumerate()
                .fold(0u8, |b, (i, &bit)| b | ((bit as u8) << i))
        })
        .collect()
}

pub fn l2(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        let d = a[i] as f64 - b[i] as f64;
        s += d * d;
    }
    s.sqrt()
}

fn ceil_frac(frac: f64, n: usize) -> usize {
    let x = (frac * n as f64 - 1e-9).ceil();
    if x <= 0.0 {
        0
    } else {
        (x as usize).min(n)
    }
}

fn finish(pre: &[f32], delta: &[f64], lambda: f64) -> Vec<f32> {
    pre.iter()
        .zip(delta)
        .map(|(&p, &d)| (p as f64 + lambda * d) as f32)
        .collect()
}

/// Number of entries of `v` that outrank entry `i` by magnitude, ties going
/// to the lower index.
fn beaten_by(v: &[f32], i: usize) -> usize {
    (0..v.len())
        .filter(|&j| v[j].abs() > v[i].abs() || (v[j].abs() == v[i].abs() && j < i))
        .count()
}

pub fn task_arithmetic(pre: &[f32], tvs: &[Vec<f32>], lambda: f64) -> Vec<f32> {
    let mut delta = vec![0.0f64; pre.len()];
    for tv in tvs {
        for i in 0..pre.len() {
            delta[i] += tv[i] as f64;
        }
    }
    finish(pre, &delta, lambda)
}

pub fn ties(pre: &[f32], tvs: &[Vec<f32>], lambda: f64, density: f64) -> Vec<f32> {
    let n = pre.len();
    let k = ceil_frac(density, n).max(1).min(n);
    let trimmed: Vec<Vec<f64>> = tvs
        .iter()
        .map(|tv| {
            (0..n)
                .map(|i| {
                    if beaten_by(tv, i) < k {
                        tv[i] as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut delta = vec![0.0f64; n];
    for i in 0..n {
        let mut mass = 0.0;
        for t in &trimmed {
            mass += t[i];
        }
        let sign = if mass > 0.0 {
            1.0
        } else if mass < 0.0 {
            -1.0
        } else {
            0.0
        };
        let agreeing: Vec<f64> = trimmed
            .iter()
            .map(|t| t[i])
            .filter(|&v| v != 0.0 && v.signum() == sign)
            .collect();
        if !agreeing.is_empty() {
            let mut s = 0.0;
            for v in &agreeing {
                s += v;
            }
            delta[i] = s / agreeing.len() as f64;
        }
    }
    finish(pre, &delta, lambda)
}

pub fn magmax(pre: &[f32], tvs: &[Vec<f32>], lambda: f64) -> Vec<f32> {
    let delta: Vec<f64> = (0..pre.len())
        .map(|i| {
            let best = (0..tvs.len())
                .find(|&t| (0..tvs.len()).all(|u| tvs[u][i].abs() <= tvs[t][i].abs()))
                .unwrap();
            tvs[best][i] as f64
        })
        .collect();
    finish(pre, &delta, lambda)
}

pub fn breadcrumbs(pre: &[f32], tvs: &[Vec<f32>], lambda: f64, low: f64, high: f64) -> Vec<f32> {
    let n = pre.len();
    let lo = ceil_frac(low, n);
    let hi = ceil_frac(high, n);
    let mut delta = vec![0.0f64; n];
    for tv in tvs {
        for i in 0..n {
            // ascending rank = number of entries strictly below in (|v|, index)
            let rank = (0..n)
                .filter(|&j| tv[j].abs() < tv[i].abs() || (tv[j].abs() == tv[i].abs() && j < i))
                .count();
            if rank >= lo && rank < hi {
                delta[i] += tv[i] as f64;
            }
        }
    }
    finish(pre, &delta, lambda)
}

/// Residual quantization of single-tensor checkpoints, step by step:
/// average, base, corrected average, offsets, reconstruction.
pub fn rtvq(pre: &[f32], fts: &[Vec<f32>], b_base: u32, b_offset: u32, ec: bool) -> Vec<Vec<f32>> {
    let n = pre.len();
    let avg: Vec<f64> = (0..n)
        .map(|i| fts.iter().map(|f| f[i] as f64).sum::<f64>() / fts.len() as f64)
        .collect();
    let base: Vec<f32> = (0..n).map(|i| (avg[i] - pre[i] as f64) as f32).collect();
    let base_hat = fake_quant(&base, b_base);
    let reference: Vec<f32> = if ec {
        (0..n).map(|i| pre[i] + base_hat[i]).collect()
    } else {
        avg.iter().map(|&a| a as f32).collect()
    };
    fts.iter()
        .map(|f| {
            let offset: Vec<f32> = (0..n).map(|i| f[i] - reference[i]).collect();
            let off_hat = fake_quant(&offset, b_offset);
            (0..n).map(|i| off_hat[i] + base_hat[i]).collect()
        })
        .collect()
}

/// Error function via Abramowitz-Stegun 7.1.26 (|err| < 1.5e-7).
pub fn erf(x: f64) -> f64 {
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let y = 1.0 - poly * (-x * x).exp();
    if x >= 0.0 {
        y
    } else {
        -y
    }
}

/// Small deterministic generator for oracle-side test data.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn uniform(&mut self) -> f64 {
        self.next_u64() as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Box-Muller standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
