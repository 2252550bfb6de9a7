//! Temporal change image and background seeds.
//!
//! A pixel whose value barely moves across the whole burst is taken to be
//! background with certainty. Everything downstream grows from these seeds.

use rayon::prelude::*;

use crate::image::{BinaryMask, ImageStack};

/// Per-pixel largest channel range over the burst, in `[0, 255]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChangeImage {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl ChangeImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }
}

/// For every pixel, takes the (max - min) range of each channel over all
/// frames and keeps the largest of the three.
pub fn compute_change_image(stack: &ImageStack) -> ChangeImage {
    let (width, height) = stack.dims();
    let frames = stack.frames();
    let mut values = vec![0u8; width * height];
    values.par_iter_mut().enumerate().for_each(|(idx, out)| {
        let o = idx * 3;
        let mut lo = [u8::MAX; 3];
        let mut hi = [u8::MIN; 3];
        for f in frames {
            let px = &f.as_bytes()[o..o + 3];
            for c in 0..3 {
                lo[c] = lo[c].min(px[c]);
                hi[c] = hi[c].max(px[c]);
            }
        }
        *out = (0..3).map(|c| hi[c] - lo[c]).max().unwrap_or(0);
    });
    ChangeImage {
        width,
        height,
        values,
    }
}

/// Seed bit is set where the change is at most `tau0` (inclusive).
pub fn compute_seeds(change: &ChangeImage, tau0: u8) -> BinaryMask {
    let bits = change.values.iter().map(|&c| c <= tau0).collect();
    BinaryMask::from_bits(change.width, change.height, bits).expect("change image is non-empty")
}
