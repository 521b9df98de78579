use ndarray::Array2;

use super::{check_series, EncodedImage, Method};
use crate::error::Result;

/// Self-similarity matrix under scalar Euclidean distance, `|v_i - v_j|`.
pub fn ssm_encode(v: &[f64]) -> Result<EncodedImage> {
    check_series(v, 1)?;
    let pixels = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| (v[i] - v[j]).abs());
    Ok(EncodedImage::new(pixels, Method::Ssm))
}
