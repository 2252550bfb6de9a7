//! Canny edge detection on 8-bit luma.
//!
//! Gaussian smoothing, Sobel gradients, non-maximum suppression along the
//! quantized gradient direction, then double-threshold hysteresis with
//! 8-connectivity.

use rayon::prelude::*;

use crate::image::{BinaryMask, RasterImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CannyParams {
    pub low: f64,
    pub high: f64,
    pub sigma: f64,
    /// Side of the square smoothing kernel (odd).
    pub kernel_size: usize,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            low: 50.0,
            high: 150.0,
            sigma: 1.4,
            kernel_size: 5,
        }
    }
}

/// BT.601 luma in `[0, 255]`.
pub fn luma(img: &RasterImage) -> Vec<f64> {
    img.pixels()
        .map(|[r, g, b]| 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b))
        .collect()
}

fn gaussian_kernel(sigma: f64, size: usize) -> Vec<f64> {
    let half = (size / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_idx(v: isize, n: usize) -> usize {
    v.clamp(0, n as isize - 1) as usize
}

/// Separable convolution with edge replication.
fn smooth(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * src[y * w + clamp_idx(x as isize + k as isize - half, w)])
                .sum();
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = kernel
                .iter()
                .enumerate()
                .map(|(k, kv)| kv * tmp[clamp_idx(y as isize + k as isize - half, h) * w + x])
                .sum();
        }
    });
    out
}

/// Gradient magnitude and direction bin (0: horizontal gradient,
/// 1: down-right diagonal, 2: vertical, 3: down-left diagonal).
fn sobel(src: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<u8>) {
    let mut mag = vec![0.0; w * h];
    let mut dir = vec![0u8; w * h];
    mag.par_chunks_mut(w)
        .zip(dir.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (mrow, drow))| {
            let at = |dx: isize, dy: isize, x: usize| {
                src[clamp_idx(y as isize + dy, h) * w + clamp_idx(x as isize + dx, w)]
            };
            for x in 0..w {
                let gx = (at(1, -1, x) + 2.0 * at(1, 0, x) + at(1, 1, x))
                    - (at(-1, -1, x) + 2.0 * at(-1, 0, x) + at(-1, 1, x));
                let gy = (at(-1, 1, x) + 2.0 * at(0, 1, x) + at(1, 1, x))
                    - (at(-1, -1, x) + 2.0 * at(0, -1, x) + at(1, -1, x));
                mrow[x] = gx.hypot(gy);
                let mut angle = gy.atan2(gx).to_degrees();
                if angle < 0.0 {
                    angle += 180.0;
                }
                drow[x] = if !(22.5..157.5).contains(&angle) {
                    0
                } else if angle < 67.5 {
                    1
                } else if angle < 112.5 {
                    2
                } else {
                    3
                };
            }
        });
    (mag, dir)
}

/// Keeps a pixel when it beats its neighbor behind it along the gradient
/// strictly and the one ahead of it non-strictly, so a symmetric ridge
/// two pixels wide thins to exactly one.
fn non_max_suppression(mag: &[f64], dir: &[u8], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let get = |x: isize, y: isize| -> f64 {
            if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                0.0
            } else {
                mag[y as usize * w + x as usize]
            }
        };
        for (x, o) in row.iter_mut().enumerate() {
            let m = mag[y * w + x];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = match dir[y * w + x] {
                0 => (1, 0),
                1 => (1, 1),
                2 => (0, 1),
                _ => (-1, 1),
            };
            let (xi, yi) = (x as isize, y as isize);
            let ahead = get(xi + dx, yi + dy);
            let behind = get(xi - dx, yi - dy);
            if m > behind && m >= ahead {
                *o = m;
            }
        }
    });
    out
}

fn hysteresis(nms: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<bool> {
    let mut edge = vec![false; w * h];
    let mut stack: Vec<usize> = Vec::new();
    for (idx, &m) in nms.iter().enumerate() {
        if m >= high && !edge[idx] {
            edge[idx] = true;
            stack.push(idx);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % w) as isize, (i / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let n = ny as usize * w + nx as usize;
                        if !edge[n] && nms[n] >= low {
                            edge[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    edge
}

/// Canny edges with the default 5x5, sigma 1.4 pre-smoothing.
pub fn canny_edges(img: &RasterImage, low: f64, high: f64) -> BinaryMask {
    canny_edges_with(
        img,
        &CannyParams {
            low,
            high,
            ..CannyParams::default()
        },
    )
}

pub fn canny_edges_with(img: &RasterImage, params: &CannyParams) -> BinaryMask {
    let (w, h) = img.dims();
    let smoothed = smooth(&luma(img), w, h, &gaussian_kernel(params.sigma, params.kernel_size));
    let (mag, dir) = sobel(&smoothed, w, h);
    let nms = non_max_suppression(&mag, &dir, w, h);
    let bits = hysteresis(&nms, w, h, params.low, params.high);
    BinaryMask::from_bits(w, h, bits).expect("dimensions come from a valid image")
}
