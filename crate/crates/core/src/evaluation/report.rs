//! Report files: `summary.csv`, `confusion.csv`, `confusion_normalized.csv`,
//! `predictions.csv`, `aggregate.txt` and `config.txt`.
//!
//! Accuracies are written with 17 significant digits so they parse back to
//! the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{EvaluationReport, FoldOutcome};
use crate::error::{Error, Result};
use crate::label::Letter;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn letters_header(first: &str) -> String {
    let mut s = first.to_string();
    for l in Letter::all() {
        s.push(',');
        s.push(l.as_char());
    }
    s
}

fn summary(report: &EvaluationReport) -> String {
    let mut out = String::from("fold_id,n_test,acc_accel,acc_gyro,acc_fused\n");
    for f in &report.folds {
        match f {
            FoldOutcome::Completed(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.fold_id,
                    r.records.len(),
                    num(r.accuracy_accel),
                    num(r.accuracy_gyro),
                    num(r.accuracy_fused)
                );
            }
            FoldOutcome::Failed { fold_id, .. } => {
                let _ = writeln!(out, "{fold_id},0,NaN,NaN,NaN");
            }
        }
    }
    let _ = writeln!(
        out,
        "mean,{},{},{},{}",
        report.n_test(),
        num(report.mean_accel),
        num(report.mean_gyro),
        num(report.mean_fused)
    );
    out
}

fn confusion_counts(report: &EvaluationReport) -> String {
    let mut out = letters_header("true");
    out.push('\n');
    for (i, row) in report.confusion.counts.iter().enumerate() {
        out.push(Letter::from_index(i).expect("row index").as_char());
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

fn confusion_normalized(report: &EvaluationReport) -> String {
    let mut out = letters_header("true");
    out.push('\n');
    for (i, row) in report.confusion.normalized().iter().enumerate() {
        out.push(Letter::from_index(i).expect("row index").as_char());
        for c in row {
            let _ = write!(out, ",{}", num(*c));
        }
        out.push('\n');
    }
    out
}

fn predictions(report: &EvaluationReport) -> String {
    let mut out = String::from("fold_id,subject_id,repetition,true,pred_accel,pred_gyro,pred_fused");
    for l in Letter::all() {
        let _ = write!(out, ",p_fused_{}", l.as_char());
    }
    out.push('\n');
    for r in report.completed() {
        for rec in &r.records {
            let p = &rec.prediction;
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.fold_id,
                rec.subject_id,
                rec.repetition,
                rec.truth,
                crate::classifier::predict_label(&p.accel),
                crate::classifier::predict_label(&p.gyro),
                p.label()
            );
            for v in p.fused.as_array() {
                let _ = write!(out, ",{}", num(*v));
            }
            out.push('\n');
        }
    }
    out
}

fn aggregate(report: &EvaluationReport) -> String {
    let completed = report.completed().count();
    let mut out = String::new();
    let _ = writeln!(out, "folds={}", report.folds.len());
    let _ = writeln!(out, "completed_folds={completed}");
    let _ = writeln!(out, "failed_folds={}", report.folds.len() - completed);
    let _ = writeln!(out, "n_test={}", report.n_test());
    let _ = writeln!(out, "mean_acc_accel={}", num(report.mean_accel));
    let _ = writeln!(out, "mean_acc_gyro={}", num(report.mean_gyro));
    let _ = writeln!(out, "mean_acc_fused={}", num(report.mean_fused));
    let _ = writeln!(out, "std_acc_fused={}", num(report.std_fused));
    let _ = writeln!(out, "weighted_acc_fused={}", num(report.weighted_fused));
    for f in &report.folds {
        if let FoldOutcome::Failed { fold_id, message } = f {
            let _ = writeln!(out, "failed.{fold_id}={}", message.replace('\n', " "));
        }
    }
    out
}

/// Writes `key=value` lines.
pub fn config_text(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Writes every report file into `out_dir`, creating it if needed.
pub fn emit_report(report: &EvaluationReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write(out_dir, "summary.csv", &summary(report))?;
    write(out_dir, "confusion.csv", &confusion_counts(report))?;
    write(out_dir, "confusion_normalized.csv", &confusion_normalized(report))?;
    write(out_dir, "predictions.csv", &predictions(report))?;
    write(out_dir, "aggregate.txt", &aggregate(report))?;
    write(out_dir, "config.txt", &config_text(&report.config))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub fold_id: String,
    pub n_test: usize,
    pub acc_accel: f64,
    pub acc_gyro: f64,
    pub acc_fused: f64,
}

/// Parses a `summary.csv` written by [`emit_report`].
pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.len() != 5 {
            return Err(bad(format!("row {}: expected 5 columns", i + 2)));
        }
        let f = |c: usize| rec[c].parse::<f64>().map_err(|_| bad(format!("row {}: bad number", i + 2)));
        rows.push(SummaryRow {
            fold_id: rec[0].to_string(),
            n_test: rec[1].parse().map_err(|_| bad(format!("row {}: bad count", i + 2)))?,
            acc_accel: f(2)?,
            acc_gyro: f(3)?,
            acc_fused: f(4)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::N_CLASSES;
    use crate::classifier::{ClassProbabilities, PairPrediction};
    use crate::evaluation::{assemble, FoldResult, RecordLog};

    fn report() -> EvaluationReport {
        let rec = |t: usize, p: usize| {
            let one = ClassProbabilities::one_hot(Letter::from_index(p).unwrap());
            RecordLog {
                subject_id: "s1".into(),
                repetition: 3,
                truth: Letter::from_index(t).unwrap(),
                prediction: PairPrediction { accel: one, gyro: one, fused: one },
            }
        };
        let a = FoldResult::from_records("loso-1".into(), vec![rec(0, 0), rec(1, 2), rec(2, 2)]);
        let b = FoldResult::from_records("loso-2".into(), vec![rec(5, 5)]);
        let failed = FoldOutcome::Failed { fold_id: "loso-3".into(), message: "boom".into() };
        assemble(
            vec![FoldOutcome::Completed(b), failed, FoldOutcome::Completed(a)],
            vec![("method".into(), "gadf".into())],
        )
    }

    #[test]
    fn emission_is_deterministic_and_round_trips() {
        let r = report();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        emit_report(&r, d1.path()).unwrap();
        emit_report(&r, d2.path()).unwrap();
        for name in ["summary.csv", "confusion.csv", "confusion_normalized.csv", "predictions.csv", "aggregate.txt", "config.txt"] {
            assert_eq!(fs::read(d1.path().join(name)).unwrap(), fs::read(d2.path().join(name)).unwrap());
        }

        let rows = read_summary(&d1.path().join("summary.csv")).unwrap();
        assert_eq!(rows.len(), r.folds.len() + 1);
        let first = r.folds[0].result().unwrap();
        assert_eq!(rows[0].acc_fused.to_bits(), first.accuracy_fused.to_bits());
        assert!(rows[2].acc_fused.is_nan());
        let mean = rows.last().unwrap();
        assert_eq!(mean.fold_id, "mean");
        assert_eq!(mean.acc_fused.to_bits(), r.mean_fused.to_bits());
        assert_eq!(mean.n_test, 4);
    }

    #[test]
    fn confusion_csv_shape() {
        let d = tempfile::tempdir().unwrap();
        emit_report(&report(), d.path()).unwrap();
        let text = fs::read_to_string(d.path().join("confusion.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 27);
        assert!(lines[0].ends_with(",X,Y,Z"));
        assert!(lines.iter().all(|l| l.split(',').count() == N_CLASSES + 1));
        assert_eq!(lines[2], format!("B,0,0,1{}", ",0".repeat(23)));
        let config = fs::read_to_string(d.path().join("config.txt")).unwrap();
        assert_eq!(config, "method=gadf\n");
    }
}
