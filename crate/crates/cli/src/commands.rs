use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use airwrite::dataset::{
    export_image_png, export_stack_raw, fixed_subject_split, generate_synthetic, load_manifest, load_recording,
    loso_splits, Manifest, SplitPlan, SyntheticSpec,
};
use airwrite::encoders::encode_stack;
use airwrite::evaluation::{config_text, emit_report, fixed_evaluate, loso_evaluate, EncodingConfig, EvalConfig};
use airwrite::signal::{preprocess, SensorKind};
use airwrite::{Error, Result};

use crate::{Command, EncodeArgs, EvalArgs, ExportPngArgs, Mode, SplitArgs, SplitOptions, SynthArgs};

type Echo = Vec<(String, String)>;

fn pair(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Logs every effective setting and writes them to `out/config.txt`.
fn announce(out: &Path, echo: &Echo) -> Result<()> {
    for (k, v) in echo {
        log::info!("config {k}={v}");
    }
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let path = out.join("config.txt");
    fs::write(&path, config_text(echo)).map_err(|e| io_error(&path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn encoding_echo(enc: &EncodingConfig) -> Echo {
    // Pooling only matters for classification and is echoed there.
    enc.echo().into_iter().filter(|(k, _)| k != "pool_factor").collect()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(&a),
        Command::Encode(a) => encode(&a),
        Command::Split(a) => split(&a),
        Command::Eval(a) => eval(&a),
        Command::ExportPng(a) => export_png(&a),
    }
}

fn synth(a: &SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_subjects: a.subjects as usize,
        n_repetitions: a.reps as usize,
        seed: a.seed,
        class_separation: a.class_separation,
        noise_scale: a.noise,
        subject_jitter: a.jitter,
    };
    spec.validate()?;
    let echo = vec![
        pair("command", "synth"),
        pair("subjects", spec.n_subjects),
        pair("reps", spec.n_repetitions),
        pair("seed", spec.seed),
        pair("class_separation", format!("{:?}", spec.class_separation)),
        pair("noise", format!("{:?}", spec.noise_scale)),
        pair("jitter", format!("{:?}", spec.subject_jitter)),
        pair("out", path_str(&a.out)),
    ];
    announce(&a.out, &echo)?;
    let manifest = generate_synthetic(&spec, &a.out)?;
    log::info!("wrote {} recordings", manifest.len());
    println!("{}", path_str(&a.out.join("manifest.csv")));
    Ok(())
}

fn encode(a: &EncodeArgs) -> Result<()> {
    let enc = a.encoding.config(1);
    enc.validate()?;
    let manifest = load_manifest(&a.manifest)?;
    if let Some(missing) = a.subjects.iter().find(|s| !manifest.entries.iter().any(|e| &e.subject_id == *s)) {
        return Err(Error::InvalidArgument(format!("subject `{missing}` is not in the manifest")));
    }
    let mut echo = vec![pair("command", "encode"), pair("manifest", path_str(&a.manifest))];
    echo.extend(encoding_echo(&enc));
    echo.push(pair("subjects", if a.subjects.is_empty() { "all".to_string() } else { a.subjects.join(" ") }));
    echo.push(pair("out", path_str(&a.out)));
    announce(&a.out, &echo)?;

    let mut written = 0;
    for entry in &manifest.entries {
        if !a.subjects.is_empty() && !a.subjects.contains(&entry.subject_id) {
            continue;
        }
        let rec = load_recording(&manifest, entry)?;
        let (accel, gyro) = preprocess(&rec, enc.target_hz, enc.target_len)?;
        let dir = a.out.join(&entry.subject_id);
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        for ch in [&accel, &gyro] {
            let stack = encode_stack(ch, enc.method, enc.bins)?;
            let path = dir.join(stack_file_name(entry.label, entry.repetition, stack.sensor));
            export_stack_raw(&stack, &path)?;
            written += 1;
        }
    }
    log::info!("wrote {written} image stacks");
    Ok(())
}

/// `<letter>_<rep>.<sensor>.bin`, e.g. `A_03.accel.bin`.
pub fn stack_file_name(letter: airwrite::Letter, rep: u32, sensor: SensorKind) -> String {
    format!("{letter}_{rep:02}.{}.bin", sensor.name())
}

fn plans(manifest: &Manifest, s: &SplitOptions) -> Result<Vec<SplitPlan>> {
    match s.mode {
        Mode::Loso => loso_splits(manifest, s.val_fraction, s.seed),
        Mode::Fixed => Ok(vec![fixed_subject_split(manifest, s.train_subjects, s.val_fraction, s.seed)?]),
    }
}

fn split_echo(s: &SplitOptions) -> Echo {
    let mut echo = vec![pair("mode", s.mode.name())];
    if s.mode == Mode::Fixed {
        echo.push(pair("train_subjects", s.train_subjects));
    }
    echo.push(pair("val_fraction", format!("{:?}", s.val_fraction)));
    echo.push(pair("split_seed", s.seed));
    echo
}

fn split(a: &SplitArgs) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let plans = plans(&manifest, &a.split)?;
    let mut echo = vec![pair("command", "split"), pair("manifest", path_str(&a.manifest))];
    echo.extend(split_echo(&a.split));
    echo.push(pair("out", path_str(&a.out)));
    announce(&a.out, &echo)?;

    let mut text = String::from("fold_id,subject_id,role\n");
    for plan in &plans {
        for (role, set) in airwrite::evaluation::plan_roles(plan) {
            for subject in set {
                let _ = writeln!(text, "{},{subject},{role}", plan.fold_id);
            }
        }
    }
    let path: PathBuf = a.out.join("splits.csv");
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    log::info!("wrote {} folds", plans.len());
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let config = EvalConfig {
        encoding: a.encoding.config(a.classifier.pool_factor),
        classifier: a.classifier.config(),
        val_fraction: a.split.val_fraction,
        seed: a.split.seed,
        workers: a.workers,
        permute_train_labels: a.permute_labels,
    };
    config.validate()?;
    let manifest = load_manifest(&a.manifest)?;

    let mut echo = vec![pair("command", "eval"), pair("manifest", path_str(&a.manifest))];
    echo.extend(split_echo(&a.split));
    echo.extend(config.echo());
    echo.push(pair("workers", a.workers));
    echo.push(pair("out", path_str(&a.out)));
    for (k, v) in &echo {
        log::info!("config {k}={v}");
    }

    let report = match a.split.mode {
        Mode::Loso => loso_evaluate(&manifest, &config)?,
        Mode::Fixed => fixed_evaluate(&manifest, a.split.train_subjects, &config)?,
    };
    // The report's own echo (dataset, protocol, every result-affecting
    // setting) goes to config.txt; invocation details are appended.
    let mut report = report;
    report.config.push(pair("manifest", path_str(&a.manifest)));
    report.config.push(pair("workers", a.workers));
    emit_report(&report, &a.out)?;

    let failed = report.folds.len() - report.completed().count();
    println!(
        "folds={} failed={failed} n_test={} mean_acc_accel={:.4} mean_acc_gyro={:.4} mean_acc_fused={:.4} std_acc_fused={:.4}",
        report.folds.len(),
        report.n_test(),
        report.mean_accel,
        report.mean_gyro,
        report.mean_fused,
        report.std_fused
    );
    if failed > 0 {
        log::warn!("{failed} folds failed; see aggregate.txt");
    }
    Ok(())
}

fn export_png(a: &ExportPngArgs) -> Result<()> {
    let enc = a.encoding.config(1);
    enc.validate()?;
    let manifest = load_manifest(&a.manifest)?;
    let entry = manifest
        .entries
        .iter()
        .find(|e| e.subject_id == a.subject && e.label == a.letter && e.repetition == a.rep)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "no recording for subject {}, letter {}, repetition {}",
                a.subject, a.letter, a.rep
            ))
        })?;
    let mut echo = vec![pair("command", "export-png"), pair("manifest", path_str(&a.manifest))];
    echo.push(pair("subject", &a.subject));
    echo.push(pair("letter", a.letter));
    echo.push(pair("rep", a.rep));
    echo.extend(encoding_echo(&enc));
    echo.push(pair("out", path_str(&a.out)));
    announce(&a.out, &echo)?;

    let rec = load_recording(&manifest, entry)?;
    let (accel, gyro) = preprocess(&rec, enc.target_hz, enc.target_len)?;
    for ch in [&accel, &gyro] {
        let stack = encode_stack(ch, enc.method, enc.bins)?;
        for c in 0..3 {
            let name = format!(
                "{}_{}_{:02}.{}.{}.png",
                entry.subject_id,
                entry.label,
                entry.repetition,
                stack.sensor.name(),
                c
            );
            export_image_png(&stack.channel(c), &a.out.join(name))?;
        }
    }
    log::info!("wrote 6 images");
    Ok(())
}
