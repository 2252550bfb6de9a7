//! Lossless raster file I/O.
//!
//! Output is always PNG. Input may be anything the decoder recognizes, but
//! JPEG is refused unless [`LoadOptions::allow_lossy`] is set: compression
//! noise easily exceeds the seed threshold and wipes out the seed set.

use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::image::RasterImage;

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Accept JPEG input.
    pub allow_lossy: bool,
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    load_image_with(path, LoadOptions::default())
}

pub fn load_image_with(path: impl AsRef<Path>, opts: LoadOptions) -> Result<RasterImage> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let decode_err = |source| Error::Decode {
        path: path.to_path_buf(),
        source,
    };

    let reader = ImageReader::open(path)
        .map_err(io_err)?
        .with_guessed_format()
        .map_err(io_err)?;
    if reader.format() == Some(ImageFormat::Jpeg) && !opts.allow_lossy {
        return Err(Error::LossyInput {
            path: path.to_path_buf(),
        });
    }
    let decoded = reader.decode().map_err(decode_err)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);

    let rgb = match decoded {
        DynamicImage::ImageRgb8(buf) => buf,
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLumaA8(_) => {
            log::warn!("{}: alpha channel discarded", path.display());
            decoded.to_rgb8()
        }
        DynamicImage::ImageLuma8(_) => decoded.to_rgb8(),
        other => {
            return Err(Error::UnsupportedLayout {
                path: path.to_path_buf(),
                layout: format!("{:?}", other.color()),
            })
        }
    };
    RasterImage::new(w, h, rgb.into_raw())
}

fn encode_png(width: usize, height: usize, bytes: &[u8], color: ExtendedColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(Cursor::new(&mut out))
        .write_image(bytes, width as u32, height as u32, color)
        .map_err(|source| Error::Decode {
            path: "<png encoder>".into(),
            source,
        })?;
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `img` as an RGB PNG. The file is encoded fully in memory first, so
/// a failure never leaves a truncated image behind.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let png = encode_png(img.width(), img.height(), img.as_bytes(), ExtendedColorType::Rgb8)?;
    write_file(path.as_ref(), &png)
}

/// Writes a single-channel 8-bit grid as a grayscale PNG.
pub fn save_gray(width: usize, height: usize, samples: &[u8], path: impl AsRef<Path>) -> Result<()> {
    if samples.len() != width * height {
        return Err(Error::BufferSize {
            expected: width * height,
            actual: samples.len(),
        });
    }
    let png = encode_png(width, height, samples, ExtendedColorType::L8)?;
    write_file(path.as_ref(), &png)
}
