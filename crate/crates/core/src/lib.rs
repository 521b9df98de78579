//! Air-writing letter recognition from wrist IMU recordings.
//!
//! Each recording (3-axis accelerometer + 3-axis gyroscope) is resampled,
//! cut or padded to a fixed length and z-normalized, then every axis is
//! turned into an image (SSM, GASF, GADF or MTF). The three axis images of
//! each sensor form one stack; a per-sensor classifier maps pooled stack
//! features to letter posteriors, and the two posteriors are averaged.
//!
//! ```no_run
//! use airwrite::{dataset, evaluation};
//!
//! let manifest = dataset::load_manifest("data/manifest.csv".as_ref())?;
//! let report = evaluation::loso_evaluate(&manifest, &evaluation::EvalConfig::default())?;
//! println!("{:.3}", report.mean_fused);
//! # Ok::<(), airwrite::Error>(())
//! ```

pub mod classifier;
pub mod dataset;
pub mod encoders;
mod error;
pub mod evaluation;
pub mod label;
pub mod signal;

pub use error::{Error, Result};
pub use label::{Letter, N_CLASSES};
