//! JSON views of analysis results and aligned plain-text tables.

use serde::Serialize;
use tvq_core::analysis::{PathError, StorageReport};
use tvq_core::taskvec::RangeStats;

pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    /// First column left-aligned, the rest right-aligned.
    pub fn render(&self) -> String {
        let cols = self.headers.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.headers).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&self.headers).chain(&self.rows) {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = width[i])
                    } else {
                        format!("{c:>w$}", w = width[i])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

pub fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

#[derive(Debug, Serialize)]
pub struct TensorRangeJson {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub mean: f64,
    pub stddev: f64,
}

#[derive(Debug, Serialize)]
pub struct RangeJson {
    pub count: u64,
    pub global_min: f64,
    pub global_max: f64,
    pub global_range: f64,
    pub histogram: Vec<u64>,
    pub tensors: Vec<TensorRangeJson>,
}

impl From<&RangeStats> for RangeJson {
    fn from(s: &RangeStats) -> Self {
        Self {
            count: s.count,
            global_min: s.global_min,
            global_max: s.global_max,
            global_range: s.global_range(),
            histogram: s.histogram.clone(),
            tensors: s
                .tensors
                .iter()
                .map(|t| TensorRangeJson {
                    name: t.name.clone(),
                    min: t.min,
                    max: t.max,
                    range: t.range,
                    mean: t.mean,
                    stddev: t.stddev,
                })
                .collect(),
        }
    }
}

pub fn range_table(title: &str, s: &RangeStats) -> String {
    let mut t = Table::new(["tensor", "min", "max", "range", "mean", "stddev"]);
    for r in &s.tensors {
        t.row([
            r.name.clone(),
            num(r.min),
            num(r.max),
            num(r.range),
            num(r.mean),
            num(r.stddev),
        ]);
    }
    t.row([
        format!("[{title}]"),
        num(s.global_min),
        num(s.global_max),
        num(s.global_range()),
        String::new(),
        String::new(),
    ]);
    t.render()
}

#[derive(Debug, Serialize)]
pub struct PathErrorJson {
    pub path: String,
    pub effective_bits: f64,
    pub normalized_l2: f64,
    pub mean_l2: f64,
    pub total_l2: f64,
    pub max_abs: f64,
}

impl From<&PathError> for PathErrorJson {
    fn from(e: &PathError) -> Self {
        Self {
            path: e.path.to_string(),
            effective_bits: e.effective_bits,
            normalized_l2: e.normalized_l2,
            mean_l2: e.mean_l2,
            total_l2: e.total_l2,
            max_abs: e.max_abs,
        }
    }
}

pub fn path_table(errors: &[PathError]) -> String {
    let mut t = Table::new(["path", "eff_bits", "normalized_l2", "mean_l2", "max_abs"]);
    for e in errors {
        t.row([
            e.path.to_string(),
            format!("{:.3}", e.effective_bits),
            num(e.normalized_l2),
            num(e.mean_l2),
            num(e.max_abs),
        ]);
    }
    t.render()
}

#[derive(Debug, Serialize)]
pub struct ArtifactStorageJson {
    pub name: String,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub total_bytes: u64,
}

#[derive(Debug, Serialize)]
pub struct StorageJson {
    pub artifacts: Vec<ArtifactStorageJson>,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub total_bytes: u64,
    pub baseline_fp32_bytes: u64,
    pub ratio: f64,
    pub payload_ratio: f64,
    pub header_overhead: f64,
    pub per_task_effective_bits: f64,
}

impl From<&StorageReport> for StorageJson {
    fn from(r: &StorageReport) -> Self {
        Self {
            artifacts: r
                .artifacts
                .iter()
                .map(|a| ArtifactStorageJson {
                    name: a.name.clone(),
                    payload_bytes: a.payload_bytes,
                    header_bytes: a.header_bytes,
                    total_bytes: a.total_bytes,
                })
                .collect(),
            payload_bytes: r.payload_bytes,
            header_bytes: r.header_bytes,
            total_bytes: r.total_bytes,
            baseline_fp32_bytes: r.baseline_fp32_bytes,
            ratio: r.ratio,
            payload_ratio: r.payload_ratio,
            header_overhead: r.header_overhead,
            per_task_effective_bits: r.per_task_effective_bits,
        }
    }
}

pub fn storage_table(r: &StorageReport) -> String {
    let mut t = Table::new(["file", "payload", "header", "total"]);
    for a in &r.artifacts {
        t.row([
            a.name.clone(),
            a.payload_bytes.to_string(),
            a.header_bytes.to_string(),
            a.total_bytes.to_string(),
        ]);
    }
    t.row([
        "[total]".to_string(),
        r.payload_bytes.to_string(),
        r.header_bytes.to_string(),
        r.total_bytes.to_string(),
    ]);
    let mut out = t.render();
    out.push_str(&format!(
        "fp32 baseline {} bytes, ratio {:.4}%, header overhead {:.4}%, {:.3} bits per task parameter\n",
        r.baseline_fp32_bytes,
        100.0 * r.ratio,
        100.0 * r.header_overhead,
        r.per_task_effective_bits
    ));
    out
}
