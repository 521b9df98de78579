use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::label::Letter;
use crate::signal::{RawRecording, RecordingMeta, N_AXES};

const MANIFEST_HEADER: [&str; 5] = ["subject_id", "label", "repetition", "sample_rate_hz", "path"];
const RECORDING_HEADER: &str = "ax,ay,az,gx,gy,gz";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub label: Letter,
    pub repetition: u32,
    pub sample_rate_hz: f64,
    /// Relative to the manifest directory.
    pub path: PathBuf,
}

impl ManifestEntry {
    pub fn meta(&self) -> RecordingMeta {
        RecordingMeta {
            subject_id: self.subject_id.clone(),
            label: self.label,
            repetition: self.repetition,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    fn key(&self) -> (&str, Letter, u32) {
        (&self.subject_id, self.label, self.repetition)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub dataset_name: String,
    /// Directory recording paths are resolved against.
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Builds a manifest, rejecting duplicate (subject, label, repetition)
    /// triples. Does not touch the filesystem.
    pub fn new(
        dataset_name: impl Into<String>,
        root: impl Into<PathBuf>,
        entries: Vec<ManifestEntry>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.key()) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate entry ({}, {}, {})",
                    e.subject_id, e.label, e.repetition
                )));
            }
        }
        Ok(Manifest {
            dataset_name: dataset_name.into(),
            root: root.into(),
            entries,
        })
    }

    /// Distinct subject ids in sorted order.
    pub fn subjects(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| e.subject_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Writes the manifest CSV to `path`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "{}", MANIFEST_HEADER.join(","))?;
            for e in &self.entries {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    e.subject_id,
                    e.label,
                    e.repetition,
                    e.sample_rate_hz,
                    e.path.to_string_lossy().replace('\\', "/")
                )?;
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a manifest CSV. Errors carry the offending line.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let row_err = |line: u64, message: String| Error::Manifest {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };

    let headers = reader.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    if headers.iter().ne(MANIFEST_HEADER.iter().copied()) {
        return Err(row_err(
            1,
            format!("expected header `{}`", MANIFEST_HEADER.join(",")),
        ));
    }

    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let dataset_name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != MANIFEST_HEADER.len() {
            return Err(row_err(line, format!("expected 5 fields, got {}", record.len())));
        }
        let subject_id = record[0].to_string();
        if subject_id.is_empty() {
            return Err(row_err(line, "empty subject_id".into()));
        }
        let label: Letter = record[1].parse().map_err(|e: Error| row_err(line, e.to_string()))?;
        let repetition: u32 = record[2]
            .parse()
            .map_err(|_| row_err(line, format!("bad repetition `{}`", &record[2])))?;
        let sample_rate_hz: f64 = record[3]
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite() && *r > 0.0)
            .ok_or_else(|| row_err(line, format!("bad sample rate `{}`", &record[3])))?;
        let rel = PathBuf::from(&record[4]);
        if !root.join(&rel).is_file() {
            return Err(row_err(
                line,
                format!("missing recording file {}", root.join(&rel).display()),
            ));
        }
        if !seen.insert((subject_id.clone(), label, repetition)) {
            return Err(row_err(
                line,
                format!("duplicate entry ({subject_id}, {label}, {repetition})"),
            ));
        }
        entries.push(ManifestEntry {
            subject_id,
            label,
            repetition,
            sample_rate_hz,
            path: rel,
        });
    }

    if entries.is_empty() {
        return Err(Error::EmptyManifest {
            path: path.to_path_buf(),
        });
    }
    Ok(Manifest {
        dataset_name,
        root,
        entries,
    })
}

/// Parses the recording CSV behind `entry`.
pub fn load_recording(manifest: &Manifest, entry: &ManifestEntry) -> Result<RawRecording> {
    let path = manifest.resolve(entry);
    let rec_err = |message: String| Error::Recording {
        path: path.clone(),
        message,
    };
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut values = Vec::new();
    let mut rows = 0usize;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| rec_err(e.to_string()))?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.get(0).is_some_and(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() != N_AXES {
            return Err(rec_err(format!(
                "line {line}: expected {N_AXES} data columns, found {}",
                record.len()
            )));
        }
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                rec_err(format!("line {line}, column {}: non-numeric cell `{cell}`", col + 1))
            })?;
            if !v.is_finite() {
                return Err(rec_err(format!("line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(rec_err("empty file".into()));
    }
    let samples = Array2::from_shape_vec((rows, N_AXES), values).expect("row width checked");
    RawRecording::new(samples, entry.meta()).map_err(|e| rec_err(e.to_string()))
}

/// Writes an `L x 6` matrix as a recording CSV with a header row, six
/// decimal places per value.
pub fn write_recording_csv(path: &Path, samples: ArrayView2<'_, f64>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "{RECORDING_HEADER}")?;
        for row in samples.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(&p, body).unwrap();
        p
    }

    fn rows(n: usize, cols: usize) -> String {
        (0..n)
            .map(|i| (0..cols).map(|c| format!("{}", i * cols + c)).collect::<Vec<_>>().join(","))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn loads_manifest_and_recordings() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "s1/a.csv", &format!("ax,ay,az,gx,gy,gz\n{}\n", rows(155, 6)));
        write(dir.path(), "s1/b.csv", &format!("{}\n", rows(20, 6)));
        let m = write(
            dir.path(),
            "manifest.csv",
            "subject_id,label,repetition,sample_rate_hz,path\ns1,A,1,62,s1/a.csv\ns1,B,1,62,s1/b.csv\n",
        );
        let manifest = load_manifest(&m).unwrap();
        assert_eq!(manifest.len(), 2);
        assert_eq!(manifest.subjects(), vec!["s1".to_string()]);
        let rec = load_recording(&manifest, &manifest.entries[0]).unwrap();
        assert_eq!(rec.len(), 155);
        assert_eq!(rec.samples()[[1, 0]], 6.0);
        let rec = load_recording(&manifest, &manifest.entries[1]).unwrap();
        assert_eq!(rec.len(), 20);
        assert_eq!(rec.meta.label.as_char(), 'B');
    }

    #[test]
    fn manifest_errors_name_the_problem() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", &rows(3, 6));
        let hdr = "subject_id,label,repetition,sample_rate_hz,path\n";

        let m = write(dir.path(), "empty.csv", hdr);
        assert!(load_manifest(&m).unwrap_err().to_string().contains("no entries"));

        let m = write(dir.path(), "missing.csv", &format!("{hdr}s1,A,1,62,nope.csv\n"));
        let err = load_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("nope.csv") && err.contains("line 2"), "{err}");

        let m = write(dir.path(), "dup.csv", &format!("{hdr}s1,A,1,62,a.csv\ns1,A,1,62,a.csv\n"));
        let err = load_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("line 3"), "{err}");

        let m = write(dir.path(), "bad.csv", &format!("{hdr}s1,a,1,62,a.csv\n"));
        assert!(load_manifest(&m).unwrap_err().to_string().contains("line 2"));

        let m = write(dir.path(), "nohdr.csv", "s1,A,1,62,a.csv\n");
        assert!(load_manifest(&m).unwrap_err().to_string().contains("expected header"));
    }

    #[test]
    fn recording_errors() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "seven.csv", &rows(4, 7));
        write(dir.path(), "text.csv", "1,2,3,4,5,6\n1,2,x,4,5,6\n");
        write(dir.path(), "empty.csv", "");
        write(dir.path(), "hdr_only.csv", "ax,ay,az,gx,gy,gz\n");
        let entry = |p: &str| ManifestEntry {
            subject_id: "s".into(),
            label: Letter::from_char('A').unwrap(),
            repetition: 0,
            sample_rate_hz: 62.0,
            path: p.into(),
        };
        let m = Manifest::new("t", dir.path(), vec![]).unwrap();
        let err = load_recording(&m, &entry("seven.csv")).unwrap_err().to_string();
        assert!(err.contains("expected 6 data columns"), "{err}");
        let err = load_recording(&m, &entry("text.csv")).unwrap_err().to_string();
        assert!(err.contains("non-numeric") && err.contains("line 2"), "{err}");
        for p in ["empty.csv", "hdr_only.csv"] {
            let err = load_recording(&m, &entry(p)).unwrap_err().to_string();
            assert!(err.contains("empty file"), "{err}");
        }
    }

    #[test]
    fn write_then_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let samples = Array2::from_shape_fn((12, 6), |(i, c)| i as f64 * 0.5 - c as f64);
        write_recording_csv(&dir.path().join("x/r.csv"), samples.view()).unwrap();
        let entry = ManifestEntry {
            subject_id: "s".into(),
            label: Letter::from_char('Q').unwrap(),
            repetition: 3,
            sample_rate_hz: 62.0,
            path: "x/r.csv".into(),
        };
        let m = Manifest::new("t", dir.path(), vec![entry.clone()]).unwrap();
        m.write(&dir.path().join("manifest.csv")).unwrap();
        let back = load_manifest(&dir.path().join("manifest.csv")).unwrap();
        assert_eq!(back.entries, vec![entry.clone()]);
        assert_eq!(load_recording(&back, &entry).unwrap().samples(), samples);
    }
}
