//! Time series to image encodings.
//!
//! Every encoder maps a series of length `N` to an `N x N` image. Three
//! encodings of the axes of one sensor form an [`ImageStack`].

mod gaf;
mod mtf;
mod ssm;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::signal::{SensorChannels, SensorKind, AXES_PER_SENSOR};

pub use gaf::{gadf_encode, gasf_encode, rescale_minmax, to_polar, PolarSeries};
pub use mtf::{assign_bins, mtf_encode, transition_matrix, BinAssignment, TransitionMatrix};
pub use ssm::ssm_encode;

/// Default number of quantile bins for the Markov transition field.
pub const DEFAULT_BINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Ssm,
    Gasf,
    Gadf,
    Mtf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ssm, Method::Gasf, Method::Gadf, Method::Mtf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ssm => "ssm",
            Method::Gasf => "gasf",
            Method::Gadf => "gadf",
            Method::Mtf => "mtf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown encoding `{s}` (expected one of ssm, gasf, gadf, mtf)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pixels: Array2<f64>,
    pub method: Method,
}

impl EncodedImage {
    pub(crate) fn new(pixels: Array2<f64>, method: Method) -> Self {
        debug_assert!(pixels.is_square());
        EncodedImage { pixels, method }
    }

    /// Wraps a square matrix of already-encoded pixels, e.g. one read back
    /// from disk.
    pub fn from_pixels(pixels: Array2<f64>, method: Method) -> Result<Self> {
        if !pixels.is_square() {
            return Err(Error::InvalidArgument(format!(
                "image must be square, got {:?}",
                pixels.dim()
            )));
        }
        Ok(EncodedImage { pixels, method })
    }

    pub fn pixels(&self) -> ArrayView2<'_, f64> {
        self.pixels.view()
    }

    pub fn into_pixels(self) -> Array2<f64> {
        self.pixels
    }

    pub fn size(&self) -> usize {
        self.pixels.nrows()
    }
}

/// Three same-method images for the three axes of one sensor, stored as a
/// `3 x N x N` array (channel, row, column).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageStack {
    channels: Array3<f64>,
    pub method: Method,
    pub sensor: SensorKind,
}

impl ImageStack {
    pub fn from_images(images: [EncodedImage; 3], sensor: SensorKind) -> Result<Self> {
        let method = images[0].method;
        let n = images[0].size();
        if images.iter().any(|im| im.method != method || im.size() != n) {
            return Err(Error::InvalidArgument(
                "stack channels must share method and size".into(),
            ));
        }
        let views: Vec<_> = images.iter().map(|im| im.pixels.view()).collect();
        let channels = ndarray::stack(Axis(0), &views).expect("shapes checked above");
        Ok(ImageStack {
            channels,
            method,
            sensor,
        })
    }

    pub fn from_array(channels: Array3<f64>, method: Method, sensor: SensorKind) -> Result<Self> {
        let (c, h, w) = channels.dim();
        if c != AXES_PER_SENSOR || h != w {
            return Err(Error::InvalidArgument(format!(
                "stack must be 3 x N x N, got {c} x {h} x {w}"
            )));
        }
        Ok(ImageStack {
            channels,
            method,
            sensor,
        })
    }

    pub fn channel(&self, c: usize) -> EncodedImage {
        EncodedImage::new(self.channels.index_axis(Axis(0), c).to_owned(), self.method)
    }

    pub fn as_array(&self) -> &Array3<f64> {
        &self.channels
    }

    pub fn size(&self) -> usize {
        self.channels.dim().1
    }
}

pub(crate) fn check_series(v: &[f64], min_len: usize) -> Result<()> {
    if v.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "series needs at least {min_len} samples, got {}",
            v.len()
        )));
    }
    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row, column: 0 });
    }
    Ok(())
}

/// Encodes one series with `method`; `bins` is only read by MTF.
pub fn encode(v: &[f64], method: Method, bins: usize) -> Result<EncodedImage> {
    match method {
        Method::Ssm => ssm_encode(v),
        Method::Gasf => gasf_encode(v),
        Method::Gadf => gadf_encode(v),
        Method::Mtf => mtf_encode(v, bins),
    }
}

/// Encodes each axis of `ch` into one channel of the stack.
pub fn encode_stack(ch: &SensorChannels, method: Method, bins: usize) -> Result<ImageStack> {
    let images = [0, 1, 2].map(|axis| encode(&ch.axis(axis), method, bins));
    let [a, b, c] = images;
    ImageStack::from_images([a?, b?, c?], ch.kind)
}
