//! Text serialization of trained models.
//!
//! ```text
//! airwrite-model 1
//! kind=logistic            # or centroid
//! pool_factor=5
//! ...more key=value lines (hyperparameters, training outcome)
//! matrix <name> <rows> <cols>
//! <rows lines of <cols> space-separated values>
//! ...
//! end
//! ```
//!
//! Values use Rust's shortest round-trip decimal form, so a reload is
//! bit-identical. Logistic models carry the matrices `mean`, `scale`,
//! `weights`, `bias`, `train_loss` and `val_loss`; centroid models carry
//! `mean`, `scale` and `centroids`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{CentroidModel, LogisticConfig, LogisticModel, Model, Standardizer, StopReason, TrainingSummary};
use crate::error::{Error, Result};
use crate::label::N_CLASSES;

const MAGIC: &str = "airwrite-model 1";

fn push_matrix(out: &mut String, name: &str, m: &Array2<f64>) {
    let _ = writeln!(out, "matrix {name} {} {}", m.nrows(), m.ncols());
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
}

fn push_vector(out: &mut String, name: &str, v: &[f64]) {
    push_matrix(out, name, &Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("1 x n"));
}

/// Serializes `model` to the text format.
pub fn write_model(model: &Model) -> String {
    let mut out = format!("{MAGIC}\n");
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    match model {
        Model::Logistic(m) => {
            kv("kind", "logistic".into());
            kv("pool_factor", m.pool_factor.to_string());
            for (k, v) in m.config.echo() {
                kv(&k, v);
            }
            kv("stop", m.summary.stop.name().into());
            kv("best_epoch", m.summary.best_epoch.to_string());
            push_vector(&mut out, "mean", m.standardizer.mean.as_slice().unwrap());
            push_vector(&mut out, "scale", m.standardizer.scale.as_slice().unwrap());
            push_matrix(&mut out, "weights", &m.weights);
            push_vector(&mut out, "bias", m.bias.as_slice().unwrap());
            push_vector(&mut out, "train_loss", &m.summary.train_loss);
            push_vector(&mut out, "val_loss", &m.summary.val_loss);
        }
        Model::Centroid(m) => {
            kv("kind", "centroid".into());
            kv("pool_factor", m.pool_factor.to_string());
            kv("temperature", format!("{:?}", m.temperature));
            push_vector(&mut out, "mean", m.standardizer.mean.as_slice().unwrap());
            push_vector(&mut out, "scale", m.standardizer.scale.as_slice().unwrap());
            push_matrix(&mut out, "centroids", &m.centroids);
        }
    }
    out.push_str("end\n");
    out
}

struct Parsed {
    keys: BTreeMap<String, String>,
    matrices: BTreeMap<String, Array2<f64>>,
}

fn parse(text: &str) -> std::result::Result<Parsed, String> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        _ => return Err(format!("missing `{MAGIC}` header")),
    }
    let mut keys = BTreeMap::new();
    let mut matrices = BTreeMap::new();
    let mut ended = false;
    while let Some((no, line)) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line == "end" {
            ended = true;
            break;
        }
        if let Some(rest) = line.strip_prefix("matrix ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(format!("line {no}: malformed matrix header"));
            };
            let rows: usize = rows.parse().map_err(|_| format!("line {no}: bad row count"))?;
            let cols: usize = cols.parse().map_err(|_| format!("line {no}: bad column count"))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (no, row) = lines.next().ok_or_else(|| format!("matrix {name} is truncated"))?;
                let before = values.len();
                for cell in row.split_whitespace() {
                    values.push(cell.parse::<f64>().map_err(|_| format!("line {no}: bad value `{cell}`"))?);
                }
                if values.len() - before != cols {
                    return Err(format!("line {no}: expected {cols} values"));
                }
            }
            let m = Array2::from_shape_vec((rows, cols), values).expect("counted");
            matrices.insert(name.to_string(), m);
        } else if let Some((k, v)) = line.split_once('=') {
            keys.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            return Err(format!("line {no}: expected key=value"));
        }
    }
    if !ended {
        return Err("missing `end`".into());
    }
    Ok(Parsed { keys, matrices })
}

impl Parsed {
    fn key<T: std::str::FromStr>(&self, k: &str) -> std::result::Result<T, String> {
        self.keys
            .get(k)
            .ok_or_else(|| format!("missing key `{k}`"))?
            .parse()
            .map_err(|_| format!("bad value for `{k}`"))
    }

    fn matrix(&mut self, name: &str) -> std::result::Result<Array2<f64>, String> {
        self.matrices.remove(name).ok_or_else(|| format!("missing matrix `{name}`"))
    }

    fn vector(&mut self, name: &str) -> std::result::Result<Vec<f64>, String> {
        let m = self.matrix(name)?;
        if m.nrows() != 1 && !m.is_empty() {
            return Err(format!("`{name}` must be a single row"));
        }
        Ok(m.into_raw_vec_and_offset().0)
    }
}

fn build(mut p: Parsed) -> std::result::Result<Model, String> {
    let kind: String = p.key("kind")?;
    let pool_factor: usize = p.key("pool_factor")?;
    let standardizer = Standardizer {
        mean: Array1::from(p.vector("mean")?),
        scale: Array1::from(p.vector("scale")?),
    };
    let dim = standardizer.mean.len();
    if standardizer.scale.len() != dim {
        return Err("mean and scale lengths differ".into());
    }
    match kind.as_str() {
        "logistic" => {
            let config = LogisticConfig {
                step_size: p.key("step_size")?,
                l2: p.key("l2")?,
                max_epochs: p.key("max_epochs")?,
                patience: p.key("patience")?,
                seed: p.key("seed")?,
                init_scale: p.key("init_scale")?,
            };
            let stop_name: String = p.key("stop")?;
            let summary = TrainingSummary {
                train_loss: p.vector("train_loss")?,
                val_loss: p.vector("val_loss")?,
                best_epoch: p.key("best_epoch")?,
                stop: StopReason::from_name(&stop_name).ok_or("bad value for `stop`")?,
            };
            let weights = p.matrix("weights")?;
            let bias = Array1::from(p.vector("bias")?);
            if weights.dim() != (N_CLASSES, dim) || bias.len() != N_CLASSES {
                return Err("weights/bias have the wrong shape".into());
            }
            Ok(Model::Logistic(LogisticModel {
                weights,
                bias,
                standardizer,
                config,
                pool_factor,
                summary,
            }))
        }
        "centroid" => {
            let centroids = p.matrix("centroids")?;
            if centroids.dim() != (N_CLASSES, dim) {
                return Err("centroids have the wrong shape".into());
            }
            Ok(Model::Centroid(CentroidModel {
                centroids,
                standardizer,
                temperature: p.key("temperature")?,
                pool_factor,
            }))
        }
        other => Err(format!("unknown model kind `{other}`")),
    }
}

/// Parses a model from its text form.
pub fn read_model(text: &str) -> std::result::Result<Model, String> {
    build(parse(text)?)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{fit_centroid, fit_logistic, FeatureVector};
    use crate::label::Letter;

    fn data() -> Vec<(FeatureVector, Letter)> {
        (0..78)
            .map(|i| {
                let x = vec![(i as f64 * 0.37).sin() / 3.0, (i % 26) as f64, -0.0, 1e-300 * i as f64];
                (FeatureVector { x, pool_factor: 7 }, Letter::from_index(i % 26).unwrap())
            })
            .collect()
    }

    #[test]
    fn logistic_reload_is_bit_exact() {
        let d = data();
        let refs: Vec<_> = d.iter().map(|(f, l)| (f, *l)).collect();
        let cfg = LogisticConfig { max_epochs: 30, ..LogisticConfig::default() };
        let model = Model::Logistic(fit_logistic(&refs[..52], &refs[52..], &cfg).unwrap());
        let back = read_model(&write_model(&model)).unwrap();
        assert_eq!(back, model);
        let (Model::Logistic(a), Model::Logistic(b)) = (&model, &back) else { unreachable!() };
        assert!(a.weights.iter().zip(b.weights.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn centroid_reload_is_exact_and_file_io_works() {
        let d = data();
        let refs: Vec<_> = d.iter().map(|(f, l)| (f, *l)).collect();
        let model = Model::Centroid(fit_centroid(&refs, 2.5).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        save_model(&model, &p).unwrap();
        assert_eq!(load_model(&p).unwrap(), model);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_model("hello").is_err());
        assert!(read_model("airwrite-model 1\nkind=logistic\n").is_err());
        assert!(read_model("airwrite-model 1\nkind=nope\npool_factor=1\nmatrix mean 1 1\n0\nmatrix scale 1 1\n1\nend\n").is_err());
    }
}
