//! Compression of fine-tuned model checkpoints through low-bit quantization
//! of task vectors.
//!
//! A task vector is the difference between a fine-tuned checkpoint and the
//! pre-trained model it started from. Its value range is typically an order
//! of magnitude narrower than the weights themselves, so it quantizes with
//! far less error at the same bit-width. This crate provides:
//!
//! - [`quant`]: per-tensor asymmetric affine quantization at 2, 3, 4 or 8 bits,
//! - [`pack`]: LSB-first bit packing of the codes,
//! - [`taskvec`]: task vectors and direct weight / task-vector quantization,
//! - [`rtvq`]: residual quantization with a shared base and per-task offsets,
//! - [`merge`]: Task Arithmetic, TIES, MagMax, Breadcrumbs and LiNeS scaling,
//! - [`analysis`]: error comparison, sparsity, similarity and storage figures,
//! - [`synth`]: seeded synthetic checkpoint families.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line tool live in the `tvq` crate.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod artifact;
pub mod error;
pub mod merge;
pub mod pack;
pub mod quant;
pub mod rtvq;
pub mod synth;
pub mod taskvec;
pub mod tensor;

pub use artifact::{
    payload_digest, ArtifactMeta, Digest, Manifest, QuantizedArtifact, QuantizedTensor, Role,
    RtvqBundle,
};
pub use error::{Error, Result};
pub use quant::{Bits, ErrorReport, QParams};
pub use taskvec::TaskVector;
pub use tensor::{Tensor, TensorMap};
