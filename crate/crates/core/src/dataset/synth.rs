//! Seeded synthetic airwriting-like datasets.
//!
//! Each letter gets a six-axis template; every axis is a sum of three
//! sinusoids whose frequencies (0.5 to 4 cycles per 155 samples), phases
//! and amplitudes are drawn per letter. A subject distorts every template
//! with its own writing speed, onset shift, per-axis gain and per-axis
//! offset, all scaled by `subject_jitter`. Each recording adds white noise
//! of standard deviation `noise_scale` and has a length drawn uniformly from
//! 120..=190 samples.
//!
//! All randomness comes from ChaCha8 seeded with `seed`: stream 0 draws the
//! letter templates and stream `1 + s` everything belonging to subject `s`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{write_recording_csv, Manifest, ManifestEntry};
use crate::error::{Error, Result};
use crate::label::{Letter, N_CLASSES};
use crate::signal::{DEFAULT_LENGTH, N_AXES};

/// Sample rate written into synthetic manifests.
pub const SYNTH_RATE_HZ: f64 = 62.0;

const MIN_LEN: usize = 120;
const MAX_LEN: usize = 190;
const COMPONENTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_subjects: usize,
    pub n_repetitions: usize,
    pub seed: u64,
    /// Amplitude of each template sinusoid.
    pub class_separation: f64,
    pub noise_scale: f64,
    pub subject_jitter: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects: 20,
            n_repetitions: 10,
            seed: 7,
            class_separation: 1.0,
            noise_scale: 1.5,
            subject_jitter: 1.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 subjects, got {}",
                self.n_subjects
            )));
        }
        if self.n_repetitions < 1 {
            return Err(Error::InvalidArgument("need at least 1 repetition".into()));
        }
        if !(self.class_separation.is_finite() && self.class_separation > 0.0) {
            return Err(Error::InvalidArgument("class separation must be positive".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::InvalidArgument("noise scale must be non-negative".into()));
        }
        if !(self.subject_jitter.is_finite() && self.subject_jitter >= 0.0) {
            return Err(Error::InvalidArgument("subject jitter must be non-negative".into()));
        }
        Ok(())
    }

    pub fn subject_id(&self, s: usize) -> String {
        let width = self.n_subjects.to_string().len().max(2);
        format!("s{:0width$}", s + 1)
    }
}

#[derive(Clone, Copy)]
struct Sinusoid {
    amplitude: f64,
    cycles: f64,
    phase: f64,
}

struct SubjectStyle {
    speed: f64,
    shift: f64,
    gain: [f64; N_AXES],
    offset: [f64; N_AXES],
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn draw_templates(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<[[Sinusoid; COMPONENTS]; N_AXES]> {
    (0..N_CLASSES)
        .map(|_| {
            [(); N_AXES].map(|_| {
                [(); COMPONENTS].map(|_| Sinusoid {
                    amplitude: spec.class_separation * rng.random_range(0.5..1.0),
                    cycles: rng.random_range(0.5..4.0),
                    phase: rng.random_range(0.0..2.0 * PI),
                })
            })
        })
        .collect()
}

fn draw_style(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> SubjectStyle {
    let j = spec.subject_jitter;
    SubjectStyle {
        speed: (0.1 * j * normal(rng)).exp(),
        shift: 5.0 * j * normal(rng),
        gain: [(); N_AXES].map(|_| (0.25 * j * normal(rng)).exp()),
        offset: [(); N_AXES].map(|_| j * spec.class_separation * normal(rng)),
    }
}

fn render(
    template: &[[Sinusoid; COMPONENTS]; N_AXES],
    style: &SubjectStyle,
    len: usize,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Array2<f64> {
    let mut out = Array2::zeros((len, N_AXES));
    for t in 0..len {
        let u = (t as f64 * style.speed + style.shift) / DEFAULT_LENGTH as f64;
        for (axis, parts) in template.iter().enumerate() {
            let clean: f64 = parts
                .iter()
                .map(|p| p.amplitude * (2.0 * PI * p.cycles * u + p.phase).sin())
                .sum();
            out[[t, axis]] = style.gain[axis] * clean + style.offset[axis];
        }
    }
    if noise > 0.0 {
        out.mapv_inplace(|x| x + noise * normal(rng));
    }
    out
}

/// Writes `manifest.csv` and one recording CSV per (subject, letter,
/// repetition) under `out_dir`, returning the manifest. Output bytes are a
/// pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<Manifest> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut template_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let templates = draw_templates(spec, &mut template_rng);

    let mut entries = Vec::with_capacity(spec.n_subjects * N_CLASSES * spec.n_repetitions);
    for s in 0..spec.n_subjects {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(1 + s as u64);
        let style = draw_style(spec, &mut rng);
        let subject_id = spec.subject_id(s);
        for letter in Letter::all() {
            for rep in 1..=spec.n_repetitions {
                let len = rng.random_range(MIN_LEN..=MAX_LEN);
                let samples = render(&templates[letter.index()], &style, len, spec.noise_scale, &mut rng);
                let rel = PathBuf::from(&subject_id).join(format!("{letter}_{rep:02}.csv"));
                write_recording_csv(&out_dir.join(&rel), samples.view())?;
                entries.push(ManifestEntry {
                    subject_id: subject_id.clone(),
                    label: letter,
                    repetition: rep as u32,
                    sample_rate_hz: SYNTH_RATE_HZ,
                    path: rel,
                });
            }
        }
    }

    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "synthetic".into());
    let manifest = Manifest::new(name, out_dir, entries)?;
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{load_manifest, load_recording};

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_subjects: 2,
            n_repetitions: 2,
            seed,
            ..SyntheticSpec::default()
        }
    }

    fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for e in fs::read_dir(&d).unwrap() {
                let p = e.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic(&small(7), a.path()).unwrap();
        generate_synthetic(&small(7), b.path()).unwrap();
        assert_eq!(read_tree(a.path()), read_tree(b.path()));
        let c = tempfile::tempdir().unwrap();
        generate_synthetic(&small(8), c.path()).unwrap();
        assert_ne!(read_tree(a.path()), read_tree(c.path()));
    }

    #[test]
    fn noiseless_recordings_of_a_class_agree() {
        let spec = SyntheticSpec {
            n_subjects: 3,
            n_repetitions: 3,
            noise_scale: 0.0,
            subject_jitter: 0.0,
            ..SyntheticSpec::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let m = generate_synthetic(&spec, dir.path()).unwrap();
        assert_eq!(m.len(), 3 * 26 * 3);
        let loaded = load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(loaded.entries, m.entries);
        let recs: Vec<_> = loaded
            .entries
            .iter()
            .filter(|e| e.label.as_char() == 'K')
            .map(|e| load_recording(&loaded, e).unwrap())
            .collect();
        let shortest = recs.iter().map(|r| r.len()).min().unwrap();
        for r in &recs {
            assert!((MIN_LEN..=MAX_LEN).contains(&r.len()));
            assert_eq!(
                r.samples().slice(ndarray::s![..shortest, ..]),
                recs[0].samples().slice(ndarray::s![..shortest, ..])
            );
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let dir = tempfile::tempdir().unwrap();
        for spec in [
            SyntheticSpec { n_subjects: 1, ..small(0) },
            SyntheticSpec { n_repetitions: 0, ..small(0) },
            SyntheticSpec { class_separation: 0.0, ..small(0) },
            SyntheticSpec { noise_scale: -1.0, ..small(0) },
        ] {
            assert!(generate_synthetic(&spec, dir.path()).is_err());
        }
    }
}
