use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use airwrite::classifier::ClassifierConfig;
use airwrite::dataset::{import_raw, load_manifest, load_recording};
use airwrite::encoders::{encode_stack, Method};
use airwrite::evaluation::{emit_report, loso_evaluate, EncodingConfig, EvalConfig};
use airwrite::signal::preprocess;

fn airwrite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_airwrite"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = airwrite(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
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

fn small_dataset(dir: &Path, subjects: &str, reps: &str) -> PathBuf {
    let data = dir.join("data");
    ok(&["synth", "--subjects", subjects, "--reps", reps, "--seed", "7", "--out", s(&data)]);
    data.join("manifest.csv")
}

#[test]
fn synth_writes_full_dataset_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let args = ["synth", "--subjects", "20", "--reps", "10", "--seed", "7", "--out", s(&a)];
    ok(&args);
    let ta = tree(&a);
    let csvs = ta.iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "csv")).count();
    // 5200 recordings plus the manifest.
    assert_eq!(csvs, 5201);
    assert!(ta.iter().any(|(p, _)| p == Path::new("config.txt")));
    assert_eq!(load_manifest(&a.join("manifest.csv")).unwrap().len(), 5200);
    ok(&args);
    assert!(ta == tree(&a), "rerun changed the tree");
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = airwrite(&["synth", "--subjects", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));

    let out = airwrite(&["encode", "--manifest", "m.csv", "--method", "wavelet", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ssm, gasf, gadf, mtf"), "{err}");

    let out = airwrite(&["eval", "--manifest", "m.csv", "--val-fraction", "1.5", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(airwrite(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(airwrite(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = airwrite(&["eval", "--manifest", s(&dir.path().join("missing.csv")), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let manifest = small_dataset(dir.path(), "3", "1");
    let out = airwrite(&[
        "eval", "--manifest", s(&manifest), "--mode", "fixed", "--train-subjects", "40", "--out",
        s(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn encode_matches_library_output() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = small_dataset(dir.path(), "2", "1");
    let out = dir.path().join("enc");
    ok(&["encode", "--manifest", s(&manifest_path), "--method", "mtf", "--bins", "8", "--subject", "s02", "--out", s(&out)]);

    let files: Vec<_> = tree(&out).into_iter().map(|(p, _)| p).collect();
    assert_eq!(files.len(), 26 * 2 + 1);
    assert!(files.contains(&PathBuf::from("config.txt")));

    let manifest = load_manifest(&manifest_path).unwrap();
    let entry = manifest.entries.iter().find(|e| e.subject_id == "s02" && e.label.as_char() == 'K').unwrap();
    let rec = load_recording(&manifest, entry).unwrap();
    let (accel, gyro) = preprocess(&rec, 62.0, 155).unwrap();
    for (ch, name) in [(&accel, "K_01.accel.bin"), (&gyro, "K_01.gyro.bin")] {
        let lib = encode_stack(ch, Method::Mtf, 8).unwrap();
        let cli = import_raw(&out.join("s02").join(name)).unwrap();
        assert!(cli.iter().zip(lib.as_array().iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn single_recording_encodes_to_two_stacks() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("one");
    fs::create_dir_all(&data).unwrap();
    let rows: String = (0..155)
        .map(|t| {
            let x = t as f64 / 10.0;
            format!("{},{},{},{},{},{}\n", x.sin(), x.cos(), x, -x, x * x, 1.0)
        })
        .collect();
    fs::write(data.join("rec.csv"), rows).unwrap();
    fs::write(
        data.join("manifest.csv"),
        "subject_id,label,repetition,sample_rate_hz,path\nu1,B,1,62,rec.csv\n",
    )
    .unwrap();
    let out = dir.path().join("enc");
    ok(&["encode", "--manifest", s(&data.join("manifest.csv")), "--method", "gadf", "--out", s(&out)]);
    let stacks: Vec<_> = tree(&out).into_iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "bin")).collect();
    assert_eq!(stacks.len(), 2);
    for (_, bytes) in stacks {
        assert_eq!(bytes.len(), 16 + 3 * 155 * 155 * 8);
    }
}

#[test]
fn loso_eval_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = small_dataset(dir.path(), "20", "2");
    let out = dir.path().join("report");
    let stdout = ok(&[
        "eval", "--manifest", s(&manifest_path), "--mode", "loso", "--classifier", "centroid", "--pool-factor", "31",
        "--seed", "4", "--workers", "1", "--out", s(&out),
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("folds=20"));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 20 + 1);
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    for key in ["method=gadf", "bins=8", "classifier=centroid", "pool_factor=31", "split_seed=4", "protocol=loso"] {
        assert!(config.lines().any(|l| l == key), "config lacks {key}:\n{config}");
    }

    let manifest = load_manifest(&manifest_path).unwrap();
    let config = EvalConfig {
        encoding: EncodingConfig { pool_factor: 31, ..EncodingConfig::default() },
        classifier: ClassifierConfig::Centroid { temperature: 1.0 },
        seed: 4,
        workers: 1,
        ..EvalConfig::default()
    };
    let report = loso_evaluate(&manifest, &config).unwrap();
    let lib_out = dir.path().join("lib");
    emit_report(&report, &lib_out).unwrap();
    for name in ["summary.csv", "confusion.csv", "predictions.csv", "aggregate.txt"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(lib_out.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn fixed_eval_on_dataset_shaped_data() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = small_dataset(dir.path(), "55", "15");
    let out = dir.path().join("report");
    ok(&[
        "eval", "--manifest", s(&manifest_path), "--mode", "fixed", "--train-subjects", "40", "--classifier",
        "centroid", "--pool-factor", "31", "--out", s(&out),
    ]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("fixed,5850,"), "{}", rows[1]);
}

#[test]
fn split_and_export_png_write_config() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = small_dataset(dir.path(), "4", "1");

    let split = dir.path().join("split");
    ok(&["split", "--manifest", s(&manifest_path), "--mode", "loso", "--out", s(&split)]);
    let text = fs::read_to_string(split.join("splits.csv")).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(",test")).count(), 4);
    assert!(split.join("config.txt").exists());

    let png = dir.path().join("png");
    ok(&["export-png", "--manifest", s(&manifest_path), "--subject", "s03", "--letter", "Z", "--method", "ssm", "--out", s(&png)]);
    let files = tree(&png);
    assert_eq!(files.iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "png")).count(), 6);
    let sidecar = fs::read_to_string(png.join("s03_Z_01.gyro.2.png.txt")).unwrap();
    assert!(sidecar.contains("method=ssm"));
    assert!(png.join("config.txt").exists());

    let out = airwrite(&["export-png", "--manifest", s(&manifest_path), "--subject", "nobody", "--letter", "A", "--out", s(&png)]);
    assert_eq!(out.status.code(), Some(2));
}
