//! File formats, parallel drivers and the command-line front end for
//! task-vector quantization.

pub mod bundle;
pub mod cli;
pub mod error;
mod framing;
pub mod layer_map;
pub mod parallel;
pub mod qtv;
pub mod report;
pub mod storage;
pub mod tmap;

pub use error::{Error, Result};
