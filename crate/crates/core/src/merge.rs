//! Task-vector merging.
//!
//! Every method combines per-element task-vector values into one delta and
//! returns `pre + lambda * delta`. Deltas are accumulated in `f64` in task
//! order and the result is rounded to `f32` once, so degenerate
//! configurations reproduce Task Arithmetic bit for bit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::taskvec::TaskVector;
use crate::tensor::{Tensor, TensorMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MergeMethod {
    TaskArithmetic,
    /// Trim to the top `density` fraction per tensor, elect a sign, then take
    /// the mean of the agreeing entries.
    Ties {
        density: f64,
    },
    /// Per element, the value with the largest magnitude.
    MagMax,
    /// Per tensor, drop the `low` fraction of smallest and the `1 - high`
    /// fraction of largest magnitudes before summing.
    Breadcrumbs {
        low: f64,
        high: f64,
    },
}

/// Layer-wise linear coefficient ramp applied to task vectors before merging.
#[derive(Debug, Clone, PartialEq)]
pub struct LinesScaling {
    pub alpha: f64,
    pub beta: f64,
    /// Explicit tensor-name to layer-index map. When absent, the i-th tensor
    /// is layer i.
    pub layers: Option<BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeConfig {
    pub method: MergeMethod,
    pub lambda: f64,
    pub lines: Option<LinesScaling>,
}

/// `ceil(frac * n)` with a small guard so that e.g. `0.3 * 10` counts 3.
fn fraction_count(frac: f64, n: usize) -> usize {
    let x = libm::ceil(frac * n as f64 - 1e-9);
    if x <= 0.0 {
        0
    } else {
        (x as usize).min(n)
    }
}

fn validate(pre: &TensorMap, tvs: &[TaskVector], lambda: f64) -> Result<()> {
    if tvs.is_empty() {
        return Err(Error::Empty("task vector list"));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda {lambda}")));
    }
    for tv in tvs {
        pre.check_compatible(&tv.tensors)?;
    }
    Ok(())
}

/// Runs `combine` for each tensor over the per-task slices and writes
/// `pre + lambda * delta`.
fn merge_with(
    pre: &TensorMap,
    tvs: &[TaskVector],
    lambda: f64,
    mut combine: impl FnMut(&[&[f32]], &mut [f64]),
) -> Result<TensorMap> {
    validate(pre, tvs, lambda)?;
    let mut out = TensorMap::new();
    for (ti, (name, p)) in pre.iter().enumerate() {
        let slices: Vec<&[f32]> = tvs
            .iter()
            .map(|tv| tv.tensors.iter().nth(ti).expect("layout checked").1.data())
            .collect();
        let mut delta = alloc::vec![0.0f64; p.len()];
        combine(&slices, &mut delta);
        let data = p
            .data()
            .iter()
            .zip(&delta)
            .map(|(&w, &d)| (w as f64 + lambda * d) as f32)
            .collect();
        out.insert(name, Tensor::new(p.shape().to_vec(), data)?)?;
    }
    Ok(out)
}

/// `pre + lambda * sum(tvs)`.
pub fn task_arithmetic(pre: &TensorMap, tvs: &[TaskVector], lambda: f64) -> Result<TensorMap> {
    merge_with(pre, tvs, lambda, |slices, delta| {
        for s in slices {
            for (d, &v) in delta.iter_mut().zip(s.iter()) {
                *d += v as f64;
            }
        }
    })
}

/// Mask of the `k` largest magnitudes, ties going to the lower index.
fn top_k_mask(values: &[f32], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut mask = alloc::vec![false; values.len()];
    for &i in order.iter().take(k) {
        mask[i] = true;
    }
    mask
}

pub fn ties_merge(
    pre: &TensorMap,
    tvs: &[TaskVector],
    lambda: f64,
    density: f64,
) -> Result<TensorMap> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density {density} not in (0, 1]"
        )));
    }
    merge_with(pre, tvs, lambda, |slices, delta| {
        let n = delta.len();
        let k = fraction_count(density, n).max(1).min(n);
        let trimmed: Vec<Vec<f64>> = slices
            .iter()
            .map(|s| {
                let mask = top_k_mask(s, k);
                s.iter()
                    .zip(mask)
                    .map(|(&v, keep)| if keep { v as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        for (i, d) in delta.iter_mut().enumerate() {
            let mass: f64 = trimmed.iter().map(|t| t[i]).sum();
            if mass == 0.0 {
                continue;
            }
            let positive = mass > 0.0;
            let (mut sum, mut count) = (0.0f64, 0usize);
            for t in &trimmed {
                let v = t[i];
                if v != 0.0 && (v > 0.0) == positive {
                    sum += v;
                    count += 1;
                }
            }
            if count > 0 {
                *d = sum / count as f64;
            }
        }
    })
}

pub fn magmax_merge(pre: &TensorMap, tvs: &[TaskVector], lambda: f64) -> Result<TensorMap> {
    merge_with(pre, tvs, lambda, |slices, delta| {
        for (i, d) in delta.iter_mut().enumerate() {
            let mut best = slices[0][i];
            for s in &slices[1..] {
                if s[i].abs() > best.abs() {
                    best = s[i];
                }
            }
            *d = best as f64;
        }
    })
}

/// Keep-mask for one tensor: entries ranked by ascending magnitude (ties by
/// index) survive when their rank lies in `[ceil(low*n), ceil(high*n))`.
fn crumb_mask(values: &[f32], low: f64, high: f64) -> Vec<bool> {
    let n = values.len();
    let lo = fraction_count(low, n);
    let hi = fraction_count(high, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(a.cmp(&b)));
    let mut mask = alloc::vec![false; n];
    for (rank, &i) in order.iter().enumerate() {
        mask[i] = rank >= lo && rank < hi;
    }
    mask
}

pub fn breadcrumbs_merge(
    pre: &TensorMap,
    tvs: &[TaskVector],
    lambda: f64,
    low: f64,
    high: f64,
) -> Result<TensorMap> {
    if !(0.0..1.0).contains(&low) || !(high > low && high <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "breadcrumb window [{low}, {high}] must satisfy 0 <= low < high <= 1"
        )));
    }
    merge_with(pre, tvs, lambda, |slices, delta| {
        for s in slices {
            let mask = crumb_mask(s, low, high);
            for ((d, &v), keep) in delta.iter_mut().zip(s.iter()).zip(mask) {
                if keep {
                    *d += v as f64;
                }
            }
        }
    })
}

/// Linear ramp `alpha + beta * l / max(n_layers - 1, 1)`.
pub fn lines_coefficients(n_layers: usize, alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if n_layers < 1 {
        return Err(Error::InvalidParameter(
            "n_layers must be at least 1".into(),
        ));
    }
    let denom = (n_layers - 1).max(1) as f64;
    Ok((0..n_layers)
        .map(|l| alpha + beta * (l as f64 / denom))
        .collect())
}

/// Scales each tensor of each task vector by its layer's coefficient.
pub fn apply_lines(tvs: &[TaskVector], lines: &LinesScaling) -> Result<Vec<TaskVector>> {
    let Some(first) = tvs.first() else {
        return Err(Error::Empty("task vector list"));
    };
    let layer_of: Vec<usize> = match &lines.layers {
        Some(map) => first
            .tensors
            .names()
            .map(|n| {
                map.get(n)
                    .copied()
                    .ok_or_else(|| Error::InvalidParameter(format!("no layer assigned to `{n}`")))
            })
            .collect::<Result<_>>()?,
        None => (0..first.tensors.len()).collect(),
    };
    let n_layers = layer_of.iter().max().map_or(1, |&m| m + 1);
    let coefs = lines_coefficients(n_layers, lines.alpha, lines.beta)?;
    tvs.iter()
        .map(|tv| {
            first.tensors.check_compatible(&tv.tensors)?;
            let mut ti = 0;
            let tensors = tv.tensors.map_data(|_, data| {
                let c = coefs[layer_of[ti]];
                ti += 1;
                data.iter().map(|&v| (v as f64 * c) as f32).collect()
            })?;
            Ok(TaskVector::new(tv.task.clone(), tensors))
        })
        .collect()
}

/// Dispatches on `cfg.method`, applying LiNeS scaling first when configured.
pub fn merge(pre: &TensorMap, tvs: &[TaskVector], cfg: &MergeConfig) -> Result<TensorMap> {
    let scaled;
    let tvs = match &cfg.lines {
        Some(lines) => {
            scaled = apply_lines(tvs, lines)?;
            &scaled[..]
        }
        None => tvs,
    };
    match cfg.method {
        MergeMethod::TaskArithmetic => task_arithmetic(pre, tvs, cfg.lambda),
        MergeMethod::Ties { density } => ties_merge(pre, tvs, cfg.lambda, density),
        MergeMethod::MagMax => magmax_merge(pre, tvs, cfg.lambda),
        MergeMethod::Breadcrumbs { low, high } => {
            breadcrumbs_merge(pre, tvs, cfg.lambda, low, high)
        }
    }
}
