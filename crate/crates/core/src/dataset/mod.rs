//! Dataset layout on disk, evaluation splits, synthetic data, and image
//! export.
//!
//! A dataset is a manifest CSV with the header
//! `subject_id,label,repetition,sample_rate_hz,path` plus one recording CSV
//! per row. Recording paths are relative to the manifest's directory. A
//! recording CSV has six numeric columns `ax,ay,az,gx,gy,gz` and an optional
//! header row, recognised by a non-numeric first cell.

mod export;
mod manifest;
mod split;
mod synth;

pub use export::{
    export_image_png, export_image_raw, export_stack_raw, import_image_png, import_raw,
    png_sidecar_path, write_raw, RAW_HEADER_LEN, RAW_MAGIC,
};
pub use manifest::{load_manifest, load_recording, write_recording_csv, Manifest, ManifestEntry};
pub use split::{fixed_subject_split, loso_splits, SplitPlan, SubjectRole};
pub use synth::{generate_synthetic, SyntheticSpec, SYNTH_RATE_HZ};
