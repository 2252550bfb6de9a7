//! sRGB to CIELAB conversion (IEC 61966-2-1 transfer curve, D65 white).
//!
//! Everything is computed in `f64` directly from the 8-bit samples; there is
//! no lookup table, so results are identical on every platform.

use rayon::prelude::*;

use crate::image::{RasterImage, Rgb};

/// Linear sRGB to XYZ, derived from the sRGB primaries and D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// Reference white: the XYZ of linear (1, 1, 1) under the matrix above, so
/// that neutral grays land exactly on the L axis.
const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

const EPSILON: f64 = 216.0 / 24389.0;
const KAPPA: f64 = 24389.0 / 27.0;

/// A CIELAB color.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

#[inline]
fn srgb_to_linear(v: u8) -> f64 {
    let c = f64::from(v) / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

/// Converts one 8-bit sRGB pixel to CIELAB.
pub fn srgb_to_lab(rgb: Rgb) -> Lab {
    let lin = [
        srgb_to_linear(rgb[0]),
        srgb_to_linear(rgb[1]),
        srgb_to_linear(rgb[2]),
    ];
    let mut f = [0.0; 3];
    for (row, (m, w)) in RGB_TO_XYZ.iter().zip(WHITE).enumerate() {
        let xyz = m[0] * lin[0] + m[1] * lin[1] + m[2] * lin[2];
        f[row] = lab_f(xyz / w);
    }
    Lab {
        l: (116.0 * f[1] - 16.0).clamp(0.0, 100.0),
        a: 500.0 * (f[0] - f[1]),
        b: 200.0 * (f[1] - f[2]),
    }
}

/// A `width x height` grid of CIELAB samples, stored as interleaved `L,a,b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl LabImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let o = idx * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Lab {
        let [l, a, b] = self.at(y * self.width + x);
        Lab { l, a, b }
    }
}

/// Converts a whole image. Rows are processed in parallel; each output
/// sample depends only on its own input pixel.
pub fn rgb_to_lab(img: &RasterImage) -> LabImage {
    let mut data = vec![0.0; img.pixel_count() * 3];
    data.par_chunks_mut(3)
        .zip(img.as_bytes().par_chunks(3))
        .for_each(|(out, px)| {
            let lab = srgb_to_lab([px[0], px[1], px[2]]);
            out[0] = lab.l;
            out[1] = lab.a;
            out[2] = lab.b;
        });
    LabImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}
