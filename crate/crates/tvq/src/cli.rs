//! The `tvq` command line. Every subcommand loads its inputs, calls the
//! library and writes files or a report; nothing is computed here.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tvq_core::analysis::{cosine_matrix, sparsity, QuantPath};
use tvq_core::artifact::validate_task_name;
use tvq_core::merge::{merge, LinesScaling, MergeConfig, MergeMethod};
use tvq_core::rtvq::{effective_bits, rtvq_quantize, rtvq_reconstruct, RtvqConfig};
use tvq_core::synth::{generate, SynthSpec};
use tvq_core::taskvec::{
    artifact_checkpoint, artifact_task_vector, range_stats, reconstruct, task_vector, TaskVector,
};
use tvq_core::{Bits, QuantizedArtifact, Role, TensorMap};

use crate::bundle::{read_bundle, verify_digest, write_bundle};
use crate::error::Error;
use crate::layer_map::read_layer_map;
use crate::parallel::{self, path_errors, with_threads};
use crate::qtv::{read_qtv, write_qtv};
use crate::report::{self, num, PathErrorJson, RangeJson, StorageJson, Table};
use crate::storage::{artifact_files_report, bundle_report};
use crate::tmap::{read_tmap, write_tmap};

#[derive(Debug, Parser)]
#[command(
    name = "tvq",
    version,
    about = "Compress fine-tuned checkpoints by quantizing task vectors"
)]
pub struct Cli {
    /// Worker threads; defaults to one per core
    #[arg(long, global = true, env = "TVQ_THREADS")]
    threads: Option<usize>,
    /// Print JSON instead of a table
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value ranges of a checkpoint, and of its task vector when --pre is given
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        pre: Option<PathBuf>,
    },
    /// Quantize a fine-tuned checkpoint directly
    QuantizeFq {
        #[arg(long)]
        ft: PathBuf,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
        /// Task name; defaults to the file stem
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize the task vector ft - pre
    QuantizeTvq {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft: PathBuf,
        #[arg(long, value_parser = parse_bits)]
        bits: Bits,
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a base + per-task offset bundle directory
    QuantizeRtvq {
        #[arg(long)]
        pre: PathBuf,
        #[command(flatten)]
        fts: FtArgs,
        #[arg(long, value_parser = parse_bits)]
        b_base: Bits,
        #[arg(long, value_parser = parse_bits)]
        b_offset: Bits,
        /// Measure offsets against the exact average instead of the quantized base
        #[arg(long)]
        no_error_correction: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a checkpoint (or task vector) from an artifact or bundle
    Dequantize {
        #[arg(
            long = "in",
            conflicts_with = "bundle",
            required_unless_present = "bundle"
        )]
        input: Option<PathBuf>,
        #[arg(long, requires = "task")]
        bundle: Option<PathBuf>,
        /// Task to extract from --bundle
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        pre: Option<PathBuf>,
        /// Write the task vector rather than the checkpoint
        #[arg(long)]
        task_vector: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge task vectors into one checkpoint
    Merge {
        #[arg(long)]
        pre: PathBuf,
        #[command(flatten)]
        sources: Sources,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        lambda: f64,
        /// Fraction of entries kept per tensor (ties)
        #[arg(long, default_value_t = 0.2)]
        density: f64,
        /// Fraction of smallest magnitudes dropped per tensor (breadcrumbs)
        #[arg(long, default_value_t = 0.1)]
        low: f64,
        /// Magnitude rank above which entries are dropped (breadcrumbs)
        #[arg(long, default_value_t = 0.9)]
        high: f64,
        /// Enables layer-wise scaling alpha + beta * depth
        #[arg(long, requires = "lines_beta", allow_negative_numbers = true)]
        lines_alpha: Option<f64>,
        #[arg(long, requires = "lines_alpha", allow_negative_numbers = true)]
        lines_beta: Option<f64>,
        /// `name<TAB>layer` lines; default layer is the tensor's position
        #[arg(long, requires = "lines_alpha")]
        layer_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Task-vector reconstruction error of FQ, TVQ and RTVQ
    Compare {
        #[arg(long)]
        pre: PathBuf,
        #[command(flatten)]
        fts: FtArgs,
        #[arg(long, value_parser = parse_bits, value_delimiter = ',', default_value = "2,3,4,8")]
        bits: Vec<Bits>,
        /// Residual configs as BASE:OFFSET bit pairs
        #[arg(long, value_parser = parse_pair, value_delimiter = ',', default_value = "3:2,4:2")]
        rtvq: Vec<(Bits, Bits)>,
        /// Also evaluate each residual config without error correction
        #[arg(long)]
        no_ec: bool,
    },
    /// Fraction of quantized task-vector entries that are exactly zero
    Sparsity {
        #[arg(long = "in", num_args = 1.., required_unless_present = "bundle")]
        input: Vec<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Pairwise cosine similarity of task vectors
    Cosine {
        #[arg(long)]
        pre: PathBuf,
        #[command(flatten)]
        sources: Sources,
    },
    /// Bytes on disk against FP32 copies of every task
    StorageReport {
        #[arg(long, conflicts_with = "qtv", required_unless_present = "qtv")]
        bundle: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        qtv: Vec<PathBuf>,
    },
    /// Amortized bits per parameter per task of a residual bundle
    EffectiveBits {
        #[arg(long, value_parser = parse_bits)]
        b_offset: Bits,
        #[arg(long, value_parser = parse_bits)]
        b_base: Bits,
        #[arg(long)]
        tasks: usize,
    },
    /// Generate a seeded synthetic pre-trained model and fine-tuned variants
    Synth {
        #[arg(long)]
        tasks: usize,
        /// Tensor shapes such as 256x256; one tensor per entry
        #[arg(long, value_parser = parse_shape, value_delimiter = ',', required = true)]
        shape: Vec<Vec<usize>>,
        #[arg(long, default_value_t = 0.05)]
        pre_scale: f64,
        #[arg(long, default_value_t = 0.005)]
        delta_scale: f64,
        #[arg(long, default_value_t = 0.0)]
        cluster_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for pre.tmap and task*.tmap
        #[arg(long)]
        out: PathBuf,
    },
    /// Residual error over a grid of base and offset widths, with and without error correction
    Sweep {
        #[arg(long)]
        pre: PathBuf,
        #[command(flatten)]
        fts: FtArgs,
        #[arg(long, value_parser = parse_bits, value_delimiter = ',', default_value = "2,3,4")]
        b_base: Vec<Bits>,
        #[arg(long, value_parser = parse_bits, value_delimiter = ',', default_value = "2,3,4")]
        b_offset: Vec<Bits>,
    },
}

#[derive(Debug, Args)]
struct FtArgs {
    /// Fine-tuned checkpoints (TMAP)
    #[arg(long, num_args = 1.., required = true)]
    ft: Vec<PathBuf>,
    /// Task names in --ft order; default to file stems
    #[arg(long, num_args = 1..)]
    task: Vec<String>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = true)]
struct Sources {
    /// Fine-tuned checkpoints (TMAP)
    #[arg(long, num_args = 1..)]
    ft: Vec<PathBuf>,
    /// FQ or TVQ artifacts
    #[arg(long, num_args = 1..)]
    qtv: Vec<PathBuf>,
    /// Residual bundle directory
    #[arg(long)]
    bundle: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    TaskArithmetic,
    Ties,
    Magmax,
    Breadcrumbs,
}

fn parse_bits(s: &str) -> Result<Bits, String> {
    s.trim()
        .parse::<u32>()
        .ok()
        .and_then(|b| Bits::new(b).ok())
        .ok_or_else(|| format!("`{s}` is not one of 2, 3, 4, 8"))
}

fn parse_pair(s: &str) -> Result<(Bits, Bits), String> {
    let (b, o) = s
        .split_once(':')
        .ok_or_else(|| format!("`{s}` is not BASE:OFFSET"))?;
    Ok((parse_bits(b)?, parse_bits(o)?))
}

fn parse_shape(s: &str) -> Result<Vec<usize>, String> {
    s.split('x')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad shape `{s}`"))
        })
        .collect()
}

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl<E: Into<Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// What a subcommand prints: the JSON value and its table rendering.
struct Output {
    json: serde_json::Value,
    table: String,
}

impl Output {
    fn new(json: impl Serialize, table: String) -> CliResult<Self> {
        Ok(Self {
            json: serde_json::to_value(json).map_err(Error::from)?,
            table,
        })
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Reports go to `stdout`, diagnostics to stderr.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let json = cli.json;
    match with_threads(cli.threads, || execute(cli.command)) {
        Ok(out) => {
            let text = if json {
                let mut s = serde_json::to_string_pretty(&out.json).unwrap_or_default();
                s.push('\n');
                s
            } else {
                out.table
            };
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return 2;
            }
            0
        }
        Err(e) => {
            eprintln!("tvq: {e}");
            e.exit_code()
        }
    }
}

fn stem(path: &Path) -> CliResult<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| usage(format!("cannot derive a task name from {}", path.display())))
}

fn task_names(args: &FtArgs) -> CliResult<Vec<String>> {
    let names = if args.task.is_empty() {
        args.ft
            .iter()
            .map(|p| stem(p))
            .collect::<CliResult<Vec<_>>>()?
    } else if args.task.len() == args.ft.len() {
        args.task.clone()
    } else {
        return Err(usage(format!(
            "{} --task names for {} --ft files",
            args.task.len(),
            args.ft.len()
        )));
    };
    for n in &names {
        validate_task_name(n).map_err(|e| usage(e.to_string()))?;
    }
    Ok(names)
}

fn read_all(paths: &[PathBuf]) -> CliResult<Vec<TensorMap>> {
    Ok(paths
        .iter()
        .map(read_tmap)
        .collect::<crate::Result<Vec<_>>>()?)
}

fn load_task_vectors(pre: &TensorMap, src: &Sources) -> CliResult<Vec<TaskVector>> {
    let mut tvs = Vec::new();
    for p in &src.ft {
        tvs.push(task_vector(&stem(p)?, &read_tmap(p)?, pre)?);
    }
    for p in &src.qtv {
        let art = read_qtv(p)?;
        verify_digest(art.meta.pre_digest, pre)?;
        tvs.push(artifact_task_vector(&art, pre)?);
    }
    if let Some(dir) = &src.bundle {
        let bundle = read_bundle(dir, Some(pre))?;
        for t in &bundle.manifest.tasks {
            tvs.push(rtvq_reconstruct(&bundle, t)?);
        }
    }
    Ok(tvs)
}

#[derive(Serialize)]
struct Written<'a> {
    out: &'a Path,
    role: &'a str,
    bits: u32,
    tensors: usize,
    params: usize,
    payload_bytes: usize,
}

fn written(out: &Path, art: &QuantizedArtifact) -> CliResult<Output> {
    let w = Written {
        out,
        role: art.role.as_str(),
        bits: art.meta.bits.get(),
        tensors: art.len(),
        params: art.param_count(),
        payload_bytes: art.payload_bytes(),
    };
    let table = format!(
        "wrote {} ({} at {} bits, {} tensors, {} params, {} payload bytes)\n",
        out.display(),
        w.role,
        w.bits,
        w.tensors,
        w.params,
        w.payload_bytes
    );
    Output::new(w, table)
}

fn wrote_map(out: &Path, map: &TensorMap) -> CliResult<Output> {
    write_tmap(map, out)?;
    let json = serde_json::json!({
        "out": out,
        "tensors": map.len(),
        "params": map.param_count(),
    });
    let table = format!(
        "wrote {} ({} tensors, {} params)\n",
        out.display(),
        map.len(),
        map.param_count()
    );
    Output::new(json, table)
}

fn execute(cmd: Command) -> CliResult<Output> {
    match cmd {
        Command::Stats { input, pre } => {
            let ft = read_tmap(&input)?;
            let stats = range_stats(&ft)?;
            let mut table = report::range_table("checkpoint", &stats);
            let mut tv_json = None;
            let mut ratio = None;
            if let Some(pre) = pre {
                let tv = task_vector("stats", &ft, &read_tmap(pre)?)?;
                let tv_stats = range_stats(&tv.tensors)?;
                let r = tv_stats.global_range() / stats.global_range();
                table.push('\n');
                table.push_str(&report::range_table("task vector", &tv_stats));
                table.push_str(&format!(
                    "range(task vector) / range(checkpoint) = {}\n",
                    num(r)
                ));
                tv_json = Some(RangeJson::from(&tv_stats));
                ratio = Some(r);
            }
            let json = serde_json::json!({
                "checkpoint": RangeJson::from(&stats),
                "task_vector": tv_json,
                "range_ratio": ratio,
            });
            Output::new(json, table)
        }
        Command::QuantizeFq {
            ft,
            bits,
            task,
            out,
        } => {
            let task = match task {
                Some(t) => t,
                None => stem(&ft)?,
            };
            validate_task_name(&task).map_err(|e| usage(e.to_string()))?;
            let art = parallel::quantize_fq(&task, &read_tmap(&ft)?, bits)?;
            write_qtv(&art, &out)?;
            written(&out, &art)
        }
        Command::QuantizeTvq {
            pre,
            ft,
            bits,
            task,
            out,
        } => {
            let task = match task {
                Some(t) => t,
                None => stem(&ft)?,
            };
            validate_task_name(&task).map_err(|e| usage(e.to_string()))?;
            let art = parallel::quantize_tvq(&task, &read_tmap(&ft)?, &read_tmap(&pre)?, bits)?;
            write_qtv(&art, &out)?;
            written(&out, &art)
        }
        Command::QuantizeRtvq {
            pre,
            fts,
            b_base,
            b_offset,
            no_error_correction,
            out,
        } => {
            let tasks = task_names(&fts)?;
            let cfg = RtvqConfig {
                b_base,
                b_offset,
                error_correction: !no_error_correction,
            };
            let bundle = rtvq_quantize(&tasks, &read_all(&fts.ft)?, &read_tmap(&pre)?, &cfg)?;
            write_bundle(&bundle, &out)?;
            let eff = bundle.manifest.effective_bits();
            let json = serde_json::json!({
                "out": out,
                "tasks": tasks,
                "b_base": b_base.get(),
                "b_offset": b_offset.get(),
                "error_correction": cfg.error_correction,
                "effective_bits": eff,
            });
            let table = format!(
                "wrote {} ({} tasks, base {} bits, offsets {} bits, {} bits per task parameter)\n",
                out.display(),
                tasks.len(),
                b_base,
                b_offset,
                eff
            );
            Output::new(json, table)
        }
        Command::Dequantize {
            input,
            bundle,
            task,
            pre,
            task_vector: want_tv,
            out,
        } => {
            let pre = pre.map(read_tmap).transpose()?;
            let map = if let Some(input) = input {
                let art = read_qtv(&input)?;
                if let Some(pre) = &pre {
                    verify_digest(art.meta.pre_digest, pre)?;
                }
                match (want_tv, &pre) {
                    (false, _) => artifact_checkpoint(&art, pre.as_ref())?,
                    (true, Some(pre)) => artifact_task_vector(&art, pre)?.tensors,
                    (true, None) if art.role == Role::Tvq => art.dequantize(),
                    (true, None) => {
                        return Err(usage("--task-vector of an FQ artifact needs --pre"))
                    }
                }
            } else {
                let dir = bundle.ok_or_else(|| usage("--in or --bundle is required"))?;
                let task = task.ok_or_else(|| usage("--bundle needs --task"))?;
                let b = read_bundle(&dir, pre.as_ref())?;
                let tv = rtvq_reconstruct(&b, &task)?;
                match (want_tv, &pre) {
                    (true, _) => tv.tensors,
                    (false, Some(pre)) => reconstruct(pre, &tv)?,
                    (false, None) => return Err(usage("reconstructing a checkpoint needs --pre")),
                }
            };
            wrote_map(&out, &map)
        }
        Command::Merge {
            pre,
            sources,
            method,
            lambda,
            density,
            low,
            high,
            lines_alpha,
            lines_beta,
            layer_map,
            out,
        } => {
            let pre = read_tmap(&pre)?;
            let tvs = load_task_vectors(&pre, &sources)?;
            let lines = match (lines_alpha, lines_beta) {
                (Some(alpha), Some(beta)) => Some(LinesScaling {
                    alpha,
                    beta,
                    layers: layer_map.map(read_layer_map).transpose()?,
                }),
                _ => None,
            };
            let method = match method {
                Method::TaskArithmetic => MergeMethod::TaskArithmetic,
                Method::Ties => MergeMethod::Ties { density },
                Method::Magmax => MergeMethod::MagMax,
                Method::Breadcrumbs => MergeMethod::Breadcrumbs { low, high },
            };
            let merged = merge(
                &pre,
                &tvs,
                &MergeConfig {
                    method,
                    lambda,
                    lines,
                },
            )?;
            wrote_map(&out, &merged)
        }
        Command::Compare {
            pre,
            fts,
            bits,
            rtvq,
            no_ec,
        } => {
            let tasks = task_names(&fts)?;
            let mut paths: Vec<QuantPath> = bits
                .iter()
                .flat_map(|&b| [QuantPath::Fq(b), QuantPath::Tvq(b)])
                .collect();
            for &(b_base, b_offset) in &rtvq {
                paths.push(QuantPath::Rtvq(RtvqConfig::new(b_base, b_offset)));
                if no_ec {
                    paths.push(QuantPath::Rtvq(RtvqConfig {
                        b_base,
                        b_offset,
                        error_correction: false,
                    }));
                }
            }
            let errors = path_errors(&paths, &tasks, &read_all(&fts.ft)?, &read_tmap(&pre)?)?;
            let json: Vec<PathErrorJson> = errors.iter().map(PathErrorJson::from).collect();
            Output::new(json, report::path_table(&errors))
        }
        Command::Sparsity { input, bundle } => {
            let mut arts = Vec::new();
            for p in &input {
                arts.push((p.display().to_string(), read_qtv(p)?));
            }
            if let Some(dir) = bundle {
                let b = read_bundle(&dir, None)?;
                arts.push(("base".to_string(), b.base));
                for (t, off) in b.manifest.tasks.iter().zip(b.offsets) {
                    arts.push((format!("offset:{t}"), off));
                }
            }
            let mut rows = Vec::new();
            let mut table = Table::new(["artifact", "role", "bits", "sparsity"]);
            for (name, art) in &arts {
                let s = sparsity(art)?;
                table.row([
                    name.clone(),
                    art.role.as_str().to_string(),
                    art.meta.bits.to_string(),
                    num(s),
                ]);
                rows.push(serde_json::json!({
                    "artifact": name,
                    "role": art.role.as_str(),
                    "bits": art.meta.bits.get(),
                    "sparsity": s,
                }));
            }
            Output::new(rows, table.render())
        }
        Command::Cosine { pre, sources } => {
            let tvs = load_task_vectors(&read_tmap(&pre)?, &sources)?;
            let m = cosine_matrix(&tvs)?;
            let names: Vec<&str> = tvs.iter().map(|t| t.task.as_str()).collect();
            let mut table = Table::new(std::iter::once("").chain(names.iter().copied()));
            for (name, row) in names.iter().zip(&m) {
                table.row(
                    std::iter::once(name.to_string()).chain(row.iter().map(|v| format!("{v:.4}"))),
                );
            }
            let json = serde_json::json!({ "tasks": names, "matrix": m });
            Output::new(json, table.render())
        }
        Command::StorageReport { bundle, qtv } => {
            let r = match bundle {
                Some(dir) => bundle_report(dir)?,
                None => artifact_files_report(&qtv)?,
            };
            Output::new(StorageJson::from(&r), report::storage_table(&r))
        }
        Command::EffectiveBits {
            b_offset,
            b_base,
            tasks,
        } => {
            let e = effective_bits(b_offset, b_base, tasks)?;
            Output::new(serde_json::json!({ "effective_bits": e }), format!("{e}\n"))
        }
        Command::Synth {
            tasks,
            shape,
            pre_scale,
            delta_scale,
            cluster_scale,
            seed,
            out,
        } => {
            let spec = SynthSpec {
                n_tasks: tasks,
                tensor_shapes: shape,
                pre_scale,
                delta_scale,
                cluster_scale,
                seed,
            };
            let family = generate(&spec)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let width = tasks.saturating_sub(1).to_string().len();
            let pre_path = out.join("pre.tmap");
            write_tmap(&family.pre, &pre_path)?;
            let mut files = Vec::new();
            for (i, ft) in family.fts.iter().enumerate() {
                let p = out.join(format!("task{i:0width$}.tmap"));
                write_tmap(ft, &p)?;
                files.push(p);
            }
            let table = format!(
                "wrote {} and {} fine-tuned checkpoints ({} params each) to {}\n",
                pre_path.display(),
                files.len(),
                family.pre.param_count(),
                out.display()
            );
            let json = serde_json::json!({
                "pre": pre_path,
                "fts": files,
                "params": family.pre.param_count(),
                "seed": seed,
            });
            Output::new(json, table)
        }
        Command::Sweep {
            pre,
            fts,
            b_base,
            b_offset,
        } => {
            let tasks = task_names(&fts)?;
            let cells: Vec<(Bits, Bits)> = b_base
                .iter()
                .flat_map(|&b| b_offset.iter().map(move |&o| (b, o)))
                .collect();
            let paths: Vec<QuantPath> = cells
                .iter()
                .flat_map(|&(b_base, b_offset)| {
                    [true, false].map(|error_correction| {
                        QuantPath::Rtvq(RtvqConfig {
                            b_base,
                            b_offset,
                            error_correction,
                        })
                    })
                })
                .collect();
            let errors = path_errors(&paths, &tasks, &read_all(&fts.ft)?, &read_tmap(&pre)?)?;
            let mut table = Table::new([
                "base", "offset", "eff_bits", "ec_l2", "no_ec_l2", "ec/no_ec",
            ]);
            let mut rows = Vec::new();
            for (&(b, o), pair) in cells.iter().zip(errors.chunks(2)) {
                let (ec, raw) = (&pair[0], &pair[1]);
                let ratio = if raw.total_l2 == 0.0 {
                    1.0
                } else {
                    ec.total_l2 / raw.total_l2
                };
                table.row([
                    b.to_string(),
                    o.to_string(),
                    format!("{:.3}", ec.effective_bits),
                    num(ec.normalized_l2),
                    num(raw.normalized_l2),
                    format!("{ratio:.4}"),
                ]);
                rows.push(serde_json::json!({
                    "b_base": b.get(),
                    "b_offset": o.get(),
                    "effective_bits": ec.effective_bits,
                    "error_correction": PathErrorJson::from(ec),
                    "no_error_correction": PathErrorJson::from(raw),
                    "ratio": ratio,
                }));
            }
            Output::new(rows, table.render())
        }
    }
}
