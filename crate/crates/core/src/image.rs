//! Pixel containers shared by every stage of the pipeline.
//!
//! All grids are row-major with the origin in the top-left corner and `y`
//! increasing downward.

use crate::error::{Error, Result};

/// An RGB pixel, 8 bits per channel.
pub type Rgb = [u8; 3];

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    Ok(())
}

/// A `width x height` grid of 8-bit RGB samples.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width * height * 3;
        if data.len() != expected {
            return Err(Error::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// An image with every pixel set to `color`.
    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        check_dims(width, height)?;
        let data = color
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixel_at(y * self.width + x)
    }

    /// Pixel by linear (row-major) index.
    #[inline]
    pub fn pixel_at(&self, idx: usize) -> Rgb {
        let o = idx * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: Rgb) {
        self.set_pixel_at(y * self.width + x, rgb);
    }

    #[inline]
    pub fn set_pixel_at(&mut self, idx: usize, rgb: Rgb) {
        let o = idx * 3;
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = Rgb> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Mutable per-pixel view; each chunk has exactly three samples.
    pub fn pixels_mut(&mut self) -> std::slice::ChunksExactMut<'_, u8> {
        self.data.chunks_exact_mut(3)
    }

    pub(crate) fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Per-pixel background labels; `true` marks background.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    pub fn ones(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            bits: vec![true; width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::BufferSize {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn get_at(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    #[inline]
    pub fn set_at(&mut self, idx: usize, value: bool) {
        self.bits[idx] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub(crate) fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when every 1-bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Renders the mask as a black/white image (255 for set bits).
    pub fn to_image(&self) -> RasterImage {
        let data = self
            .bits
            .iter()
            .flat_map(|&b| if b { [255u8; 3] } else { [0u8; 3] })
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other,
            });
        }
        Ok(())
    }
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ones", &self.count_ones())
            .finish()
    }
}

/// An ordered burst of equally sized frames. Frame order matters: several
/// tie-breaks downstream prefer the lowest frame index.
#[derive(Clone, Debug)]
pub struct ImageStack {
    frames: Vec<RasterImage>,
}

impl ImageStack {
    pub fn new(frames: Vec<RasterImage>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFewFrames(frames.len()));
        }
        let dims = frames[0].dims();
        for f in &frames[1..] {
            if f.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: f.dims(),
                });
            }
        }
        Ok(Self { frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn frames(&self) -> &[RasterImage] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &RasterImage {
        &self.frames[i]
    }

    pub fn into_frames(self) -> Vec<RasterImage> {
        self.frames
    }
}
