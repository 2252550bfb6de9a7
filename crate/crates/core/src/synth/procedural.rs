use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::{RasterImage, Rgb};

/// Every channel of a procedural background stays inside this range, so a
/// fill color whose channels are all 0 or 255 contrasts with it by at least
/// 40 in every channel.
pub const CHANNEL_RANGE: (u8, u8) = (40, 215);

const TILE: usize = 100;

fn palette(rng: &mut ChaCha8Rng) -> Rgb {
    let (lo, hi) = CHANNEL_RANGE;
    [rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi)]
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let mut out = [0; 3];
    for c in 0..3 {
        out[c] = (f64::from(a[c]) + (f64::from(b[c]) - f64::from(a[c])) * t).round() as u8;
    }
    out
}

/// A deterministic test background of `TILE`-sized tiles cycling through
/// flat color, linear gradients, fine random texture and stripes.
pub fn procedural_background(width: usize, height: usize, seed: u64) -> Result<RasterImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let (lo, hi) = CHANNEL_RANGE;

    let mut img = RasterImage::filled(width, height, [lo; 3])?;
    for ty in 0..tiles_y {
        for tx in 0..tiles_x {
            let kind = (tx + 2 * ty + rng.random_range(0..2usize)) % 4;
            let a = palette(&mut rng);
            let b = palette(&mut rng);
            let amp = rng.random_range(8..=25u8);
            let x0 = tx * TILE;
            let y0 = ty * TILE;
            for y in y0..(y0 + TILE).min(height) {
                for x in x0..(x0 + TILE).min(width) {
                    let (u, v) = ((x - x0) as f64 / TILE as f64, (y - y0) as f64 / TILE as f64);
                    let px = match kind {
                        0 => a,
                        1 => lerp(a, b, if (tx + ty) % 2 == 0 { u } else { v }),
                        2 => {
                            let mut p = a;
                            for ch in p.iter_mut() {
                                let jitter = rng.random_range(0..=2 * amp) as i16 - amp as i16;
                                *ch = (i16::from(*ch) + jitter).clamp(i16::from(lo), i16::from(hi)) as u8;
                            }
                            p
                        }
                        _ => {
                            if ((x - x0) / 6 + (y - y0) / 17) % 2 == 0 {
                                a
                            } else {
                                b
                            }
                        }
                    };
                    img.set_pixel(x, y, px);
                }
            }
        }
    }
    Ok(img)
}
