//! Image export.
//!
//! Raw format (little-endian throughout):
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `IMAIR1\0\0`                       |
//! | 8      | 4    | image side `N` (u32)                     |
//! | 12     | 4    | channel count `C` (u32)                  |
//! | 16     | 8·C·N·N | f64 pixels, channel-major then row-major |
//!
//! PNG export is 8-bit grayscale with a text sidecar (`<file>.txt`) holding
//! `min=`, `max=` and `method=` lines so pixel values can be recovered up to
//! quantization.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3, ArrayView3, Axis};

use crate::encoders::{EncodedImage, ImageStack, Method};
use crate::error::{Error, Result};

pub const RAW_MAGIC: [u8; 8] = *b"IMAIR1\0\0";
pub const RAW_HEADER_LEN: usize = 16;

/// Writes a `C x N x N` array in the raw format.
pub fn write_raw(path: &Path, channels: ArrayView3<'_, f64>) -> Result<()> {
    let (c, h, w) = channels.dim();
    if h != w {
        return Err(Error::InvalidArgument(format!("image must be square, got {h} x {w}")));
    }
    let mut buf = Vec::with_capacity(RAW_HEADER_LEN + 8 * c * h * w);
    buf.extend_from_slice(&RAW_MAGIC);
    buf.extend_from_slice(&(h as u32).to_le_bytes());
    buf.extend_from_slice(&(c as u32).to_le_bytes());
    for v in channels.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn export_image_raw(img: &EncodedImage, path: &Path) -> Result<()> {
    write_raw(path, img.pixels().insert_axis(Axis(0)))
}

pub fn export_stack_raw(stack: &ImageStack, path: &Path) -> Result<()> {
    write_raw(path, stack.as_array().view())
}

/// Reads a raw file back as a `C x N x N` array.
pub fn import_raw(path: &Path) -> Result<Array3<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < RAW_HEADER_LEN || bytes[..8] != RAW_MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf() });
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let (n, c) = (word(8), word(12));
    let expected = c
        .checked_mul(n)
        .and_then(|x| x.checked_mul(n))
        .and_then(|x| x.checked_mul(8))
        .and_then(|x| x.checked_add(RAW_HEADER_LEN));
    if expected != Some(bytes.len()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "header says {c} channel(s) of {n} x {n} but file has {} bytes",
                bytes.len()
            ),
        });
    }
    let values = bytes[RAW_HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(Array3::from_shape_vec((c, n, n), values).expect("length checked"))
}

pub fn png_sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Linear map of `[min, max]` onto `0..=255`, rounding half up. A constant
/// image maps to zero.
fn quantize(x: f64, min: f64, max: f64) -> u8 {
    if max <= min {
        return 0;
    }
    ((x - min) / (max - min) * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn export_image_png(img: &EncodedImage, path: &Path) -> Result<()> {
    let px = img.pixels();
    let (min, max) = px
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let n = img.size();
    let data: Vec<u8> = px.iter().map(|&x| quantize(x, min, max)).collect();

    let png_err = |e: png::EncodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(std::io::BufWriter::new(file), n as u32, n as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;

    let sidecar = png_sidecar_path(path);
    let text = format!("min={min:?}\nmax={max:?}\nmethod={}\n", img.method);
    fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))
}

/// Reads a PNG written by [`export_image_png`] and maps pixels back through
/// its sidecar.
pub fn import_image_png(path: &Path) -> Result<EncodedImage> {
    let fmt_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let sidecar = png_sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let field = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| fmt_err(format!("sidecar lacks `{key}`")))
    };
    let min: f64 = field("min")?.parse().map_err(|_| fmt_err("bad min".into()))?;
    let max: f64 = field("max")?.parse().map_err(|_| fmt_err("bad max".into()))?;
    let method: Method = field("method")?.parse()?;

    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| fmt_err(e.to_string()))?;
    let (w, h) = {
        let info = reader.info();
        if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
            return Err(fmt_err("expected 8-bit grayscale".into()));
        }
        (info.width as usize, info.height as usize)
    };
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(w * h)];
    reader.next_frame(&mut buf).map_err(|e| fmt_err(e.to_string()))?;
    let step = if max > min { (max - min) / 255.0 } else { 0.0 };
    let pixels = Array2::from_shape_fn((h, w), |(i, j)| min + buf[i * w + j] as f64 * step);
    EncodedImage::from_pixels(pixels, method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{gadf_encode, gasf_encode, ssm_encode};
    use crate::signal::SensorKind;

    fn series(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 * 0.21).sin() * 3.0 + (i as f64 * 0.05).cos()).collect()
    }

    #[test]
    fn raw_stack_size_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = series(155);
        let imgs = [0, 1, 2].map(|k| gadf_encode(&v[k..].iter().chain(&v[..k]).copied().collect::<Vec<_>>()).unwrap());
        let stack = ImageStack::from_images(imgs, SensorKind::Accelerometer).unwrap();
        let p = dir.path().join("s.imair");
        export_stack_raw(&stack, &p).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 16 + 3 * 155 * 155 * 8);
        let back = import_raw(&p).unwrap();
        assert!(back.iter().zip(stack.as_array().iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn raw_single_image_header() {
        let dir = tempfile::tempdir().unwrap();
        let img = ssm_encode(&[0.0, 3.0, 4.0]).unwrap();
        let p = dir.path().join("i.imair");
        export_image_raw(&img, &p).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[..8], b"IMAIR1\0\0");
        assert_eq!(&bytes[8..16], &[3, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(f64::from_le_bytes(bytes[16 + 8..16 + 16].try_into().unwrap()), 3.0);
        assert_eq!(import_raw(&p).unwrap().index_axis(Axis(0), 0), img.pixels());
    }

    #[test]
    fn raw_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.imair");
        fs::write(&p, b"NOTIMAIR\x01\0\0\0\x01\0\0\0\0\0\0\0\0\0\0\0").unwrap();
        assert!(import_raw(&p).unwrap_err().to_string().contains("not an IMAIR file"));
        let mut ok = RAW_MAGIC.to_vec();
        ok.extend_from_slice(&[2, 0, 0, 0, 1, 0, 0, 0]);
        ok.extend_from_slice(&[0u8; 8]);
        fs::write(&p, ok).unwrap();
        assert!(matches!(import_raw(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn png_endpoints_and_constant() {
        let dir = tempfile::tempdir().unwrap();
        let img = gasf_encode(&series(40)).unwrap();
        let p = dir.path().join("g.png");
        export_image_png(&img, &p).unwrap();
        let side = fs::read_to_string(png_sidecar_path(&p)).unwrap();
        assert!(side.contains("method=gasf"));
        let back = import_image_png(&p).unwrap();
        let (min, max) = img.pixels().iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let bound = (max - min) / 255.0 / 2.0 + 1e-12;
        for (a, b) in img.pixels().iter().zip(back.pixels().iter()) {
            assert!((a - b).abs() <= bound);
        }
        assert_eq!(quantize(min, min, max), 0);
        assert_eq!(quantize(max, min, max), 255);

        let flat = ssm_encode(&[1.0; 9]).unwrap();
        let p = dir.path().join("flat.png");
        export_image_png(&flat, &p).unwrap();
        let side = fs::read_to_string(png_sidecar_path(&p)).unwrap();
        assert!(side.starts_with("min=0.0\nmax=0.0\n"));
        assert!(import_image_png(&p).unwrap().pixels().iter().all(|&x| x == 0.0));
    }
}
