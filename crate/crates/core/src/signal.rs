//! Raw and preprocessed IMU recordings.
//!
//! A recording is an `L x 6` matrix: columns 0..3 are the accelerometer
//! axes, columns 3..6 the gyroscope axes. Preprocessing always runs in the
//! order resample (only when the source rate is above the target) ->
//! [`fix_length`] -> [`z_normalize`] -> [`split_channels`]; [`preprocess`]
//! is the one place that chains them.

use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::label::Letter;

/// Number of sensor axes in a recording.
pub const N_AXES: usize = 6;
/// Axes per sensor.
pub const AXES_PER_SENSOR: usize = 3;
/// Fixed signal length used throughout the pipeline.
pub const DEFAULT_LENGTH: usize = 155;
/// Common sampling rate the recordings are brought to.
pub const DEFAULT_RATE_HZ: f64 = 62.0;

/// Standard deviations below this are treated as a flat channel.
const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensorKind {
    Accelerometer,
    Gyroscope,
}

impl SensorKind {
    pub fn name(self) -> &'static str {
        match self {
            SensorKind::Accelerometer => "accel",
            SensorKind::Gyroscope => "gyro",
        }
    }

    fn columns(self) -> std::ops::Range<usize> {
        match self {
            SensorKind::Accelerometer => 0..AXES_PER_SENSOR,
            SensorKind::Gyroscope => AXES_PER_SENSOR..N_AXES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub subject_id: String,
    pub label: Letter,
    pub repetition: u32,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    samples: Array2<f64>,
    pub meta: RecordingMeta,
}

impl RawRecording {
    /// Validates shape (at least one row, exactly six columns), finiteness
    /// and a positive sample rate.
    pub fn new(samples: Array2<f64>, meta: RecordingMeta) -> Result<Self> {
        if samples.ncols() != N_AXES {
            return Err(Error::InvalidArgument(format!(
                "expected {N_AXES} data columns, got {}",
                samples.ncols()
            )));
        }
        if samples.nrows() == 0 {
            return Err(Error::InvalidArgument("recording has no samples".into()));
        }
        if !(meta.sample_rate_hz.is_finite() && meta.sample_rate_hz > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {}",
                meta.sample_rate_hz
            )));
        }
        check_finite(samples.view())?;
        Ok(RawRecording { samples, meta })
    }

    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }
}

/// A recording brought to a fixed number of rows, optionally z-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSignal {
    samples: Array2<f64>,
    pub meta: RecordingMeta,
}

impl FixedSignal {
    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.samples.view()
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }
}

/// The three axes of one sensor, `len x 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorChannels {
    values: Array2<f64>,
    pub kind: SensorKind,
}

impl SensorChannels {
    pub fn new(values: Array2<f64>, kind: SensorKind) -> Result<Self> {
        if values.ncols() != AXES_PER_SENSOR {
            return Err(Error::InvalidArgument(format!(
                "sensor channels need {AXES_PER_SENSOR} columns, got {}",
                values.ncols()
            )));
        }
        Ok(SensorChannels { values, kind })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    /// Column `axis` as an owned series.
    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.values.column(axis).to_vec()
    }
}

fn check_finite(m: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, column), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, column });
        }
    }
    Ok(())
}

/// Linear-interpolation downsampling to `target_hz`.
///
/// Output sample `m` sits at time `m / target_hz`, which is fractional input
/// index `m * source_hz / target_hz`. Query points past the last input sample
/// hold the last value.
pub fn resample(rec: &RawRecording, target_hz: f64) -> Result<RawRecording> {
    let source_hz = rec.meta.sample_rate_hz;
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_hz}"
        )));
    }
    if target_hz > source_hz {
        return Err(Error::Upsampling {
            source_hz,
            target_hz,
        });
    }
    let len = rec.len();
    if len < 2 {
        return Err(Error::InvalidArgument(
            "resampling needs at least 2 samples".into(),
        ));
    }
    check_finite(rec.samples())?;

    let out_len = ((len as f64 * target_hz / source_hz).round() as usize).max(1);
    let ratio = source_hz / target_hz;
    let mut out = Array2::zeros((out_len, N_AXES));
    for (m, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let pos = m as f64 * ratio;
        let lo = (pos.floor() as usize).min(len - 1);
        let frac = pos - lo as f64;
        if lo == len - 1 || frac == 0.0 {
            row.assign(&rec.samples.row(lo));
        } else {
            let a = rec.samples.row(lo);
            let b = rec.samples.row(lo + 1);
            for c in 0..N_AXES {
                row[c] = a[c] + frac * (b[c] - a[c]);
            }
        }
    }

    let mut meta = rec.meta.clone();
    meta.sample_rate_hz = target_hz;
    Ok(RawRecording { samples: out, meta })
}

/// Keeps the first `target_len` rows, or zero-pads at the end.
pub fn fix_length(rec: &RawRecording, target_len: usize) -> Result<FixedSignal> {
    if target_len == 0 {
        return Err(Error::InvalidArgument("target length must be positive".into()));
    }
    let mut samples = Array2::zeros((target_len, N_AXES));
    let keep = rec.len().min(target_len);
    samples
        .slice_mut(s![..keep, ..])
        .assign(&rec.samples.slice(s![..keep, ..]));
    Ok(FixedSignal {
        samples,
        meta: rec.meta.clone(),
    })
}

/// Per-column `(x - mean) / std` with the population standard deviation.
/// Flat columns (std < 1e-12) become all zeros.
pub fn z_normalize(sig: &FixedSignal) -> Result<FixedSignal> {
    check_finite(sig.samples())?;
    let n = sig.len() as f64;
    let mut samples = sig.samples.clone();
    for mut col in samples.axis_iter_mut(Axis(1)) {
        let mean = col.sum() / n;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if std < DEGENERATE_STD {
            col.fill(0.0);
        } else {
            col.mapv_inplace(|x| (x - mean) / std);
        }
    }
    Ok(FixedSignal {
        samples,
        meta: sig.meta.clone(),
    })
}

/// Splits into (accelerometer, gyroscope) halves, preserving column order.
pub fn split_channels(sig: &FixedSignal) -> (SensorChannels, SensorChannels) {
    let take = |kind: SensorKind| SensorChannels {
        values: sig.samples.slice(s![.., kind.columns()]).to_owned(),
        kind,
    };
    (
        take(SensorKind::Accelerometer),
        take(SensorKind::Gyroscope),
    )
}

/// Full preprocessing chain for one recording.
pub fn preprocess(
    rec: &RawRecording,
    target_hz: f64,
    target_len: usize,
) -> Result<(SensorChannels, SensorChannels)> {
    let fixed = if rec.meta.sample_rate_hz > target_hz {
        fix_length(&resample(rec, target_hz)?, target_len)?
    } else if rec.meta.sample_rate_hz < target_hz {
        return Err(Error::Upsampling {
            source_hz: rec.meta.sample_rate_hz,
            target_hz,
        });
    } else {
        fix_length(rec, target_len)?
    };
    Ok(split_channels(&z_normalize(&fixed)?))
}
