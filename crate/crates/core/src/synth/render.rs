use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::image::{BinaryMask, ImageStack, RasterImage};

use super::script::{SceneScript, Shape};

fn check_bounds(shape: Shape, w: usize, h: usize, frame: usize) -> Result<()> {
    let (x0, y0, x1, y1) = shape.bounds();
    if x0 < 0 || y0 < 0 || x1 > w as i64 || y1 > h as i64 {
        return Err(invalid(
            "occluder",
            format!("{shape:?} leaves the {w}x{h} frame in frame {frame}"),
        ));
    }
    Ok(())
}

fn for_each_covered(shape: Shape, mut f: impl FnMut(usize, usize)) {
    let (x0, y0, x1, y1) = shape.bounds();
    for y in y0..y1 {
        for x in x0..x1 {
            if shape.contains(x, y) {
                f(x as usize, y as usize);
            }
        }
    }
}

/// Renders `k` frames: the background with each frame's occluders drawn in
/// script order, plus optional Gaussian noise. Returns the frames and the
/// clean background.
pub fn render_scene(script: &SceneScript, k: usize) -> Result<(ImageStack, RasterImage)> {
    let (w, h) = script.background.dims();
    if k < 2 {
        return Err(invalid("k", format!("need at least 2 frames, got {k}")));
    }
    let noise = if script.noise_sigma > 0.0 {
        Some(Normal::new(0.0, script.noise_sigma).map_err(|e| invalid("noise_sigma", e.to_string()))?)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(script.noise_seed);

    let mut frames = Vec::with_capacity(k);
    for f in 0..k {
        let mut img = script.background.clone();
        for o in &script.occluders {
            if let Some(shape) = o.placement(f) {
                check_bounds(shape, w, h, f)?;
                for_each_covered(shape, |x, y| img.set_pixel(x, y, o.color));
            }
        }
        if let Some(dist) = &noise {
            for v in img.bytes_mut() {
                let n: f64 = dist.sample(&mut rng);
                *v = (f64::from(*v) + n).round().clamp(0.0, 255.0) as u8;
            }
        }
        frames.push(img);
    }
    Ok((ImageStack::new(frames)?, script.background.clone()))
}

/// Number of frames in `0..k` in which each pixel is covered.
pub fn coverage_counts(script: &SceneScript, k: usize) -> Vec<usize> {
    let (w, h) = script.background.dims();
    let mut counts = vec![0usize; w * h];
    for f in 0..k {
        let mut covered = vec![false; w * h];
        for o in &script.occluders {
            if let Some(shape) = o.placement(f) {
                for_each_covered(shape, |x, y| {
                    if x < w && y < h {
                        covered[y * w + x] = true;
                    }
                });
            }
        }
        for (c, hit) in counts.iter_mut().zip(covered) {
            *c += usize::from(hit);
        }
    }
    counts
}

/// Number of frames in `0..k` in which each pixel shows the background.
pub fn visibility_counts(script: &SceneScript, k: usize) -> Vec<usize> {
    coverage_counts(script, k).into_iter().map(|c| k - c).collect()
}

/// Pixels covered in at least one of frames `0..k`.
pub fn ever_covered(script: &SceneScript, k: usize) -> BinaryMask {
    let (w, h) = script.background.dims();
    let bits = coverage_counts(script, k).into_iter().map(|c| c > 0).collect();
    BinaryMask::from_bits(w, h, bits).expect("background dimensions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::script::Occluder;

    fn flat_script(occluders: Vec<Occluder>) -> SceneScript {
        SceneScript {
            background: RasterImage::filled(100, 40, [100, 110, 120]).unwrap(),
            occluders,
            frames: 10,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    fn rect(x: i64, y: i64, w: i64, h: i64, color: [u8; 3], frames: (usize, usize), step: (i64, i64)) -> Occluder {
        Occluder {
            first_frame: frames.0,
            last_frame: frames.1,
            shape: Shape::Rect { x, y, w, h },
            color,
            step,
        }
    }

    #[test]
    fn no_occluders_gives_copies() {
        let s = flat_script(vec![]);
        let (stack, bg) = render_scene(&s, 5).unwrap();
        assert_eq!(stack.len(), 5);
        assert!(stack.frames().iter().all(|f| *f == bg));
    }

    #[test]
    fn sweep_leaves_every_pixel_visible_nine_times() {
        // Width 8, step 10: each pixel is covered in at most one frame.
        let s = flat_script(vec![rect(0, 10, 8, 20, [255, 0, 0], (0, 9), (10, 0))]);
        let vis = visibility_counts(&s, 10);
        assert!(vis.iter().all(|&v| v >= 9));
        assert_eq!(vis.iter().filter(|&&v| v == 9).count(), 10 * 8 * 20);
    }

    #[test]
    fn stationary_tail_is_visible_in_seven_frames() {
        let s = flat_script(vec![rect(40, 5, 20, 20, [0, 0, 255], (7, 9), (0, 0))]);
        let vis = visibility_counts(&s, 10);
        for y in 5..25 {
            for x in 40..60 {
                assert_eq!(vis[y * 100 + x], 7);
            }
        }
        let (stack, _) = render_scene(&s, 10).unwrap();
        assert_eq!(stack.frame(6).pixel(45, 10), [100, 110, 120]);
        assert_eq!(stack.frame(7).pixel(45, 10), [0, 0, 255]);
    }

    #[test]
    fn later_occluders_draw_on_top() {
        let s = flat_script(vec![
            rect(10, 10, 20, 20, [255, 0, 0], (0, 1), (0, 0)),
            rect(20, 20, 20, 15, [0, 255, 0], (0, 1), (0, 0)),
        ]);
        let (stack, _) = render_scene(&s, 2).unwrap();
        assert_eq!(stack.frame(0).pixel(15, 15), [255, 0, 0]);
        assert_eq!(stack.frame(0).pixel(25, 25), [0, 255, 0]);
    }

    #[test]
    fn out_of_bounds_placement_rejected() {
        let s = flat_script(vec![rect(90, 0, 8, 8, [1, 1, 1], (0, 3), (1, 0))]);
        assert!(render_scene(&s, 4).is_err());
        assert!(render_scene(&s, 3).is_ok());
    }

    #[test]
    fn noise_is_seeded() {
        let mut s = flat_script(vec![]);
        s.noise_sigma = 2.0;
        s.noise_seed = 9;
        let (a, _) = render_scene(&s, 3).unwrap();
        let (b, _) = render_scene(&s, 3).unwrap();
        assert_eq!(a.frames(), b.frames());
        assert_ne!(a.frame(0), a.frame(1));
        s.noise_seed = 10;
        assert_ne!(render_scene(&s, 3).unwrap().0.frame(0), a.frame(0));
    }

    #[test]
    fn noiseless_rendering_ignores_the_seed() {
        let mut s = flat_script(vec![rect(1, 1, 5, 5, [0, 0, 0], (0, 2), (3, 1))]);
        let (a, _) = render_scene(&s, 3).unwrap();
        s.noise_seed = 12345;
        let (b, _) = render_scene(&s, 3).unwrap();
        assert_eq!(a.frames(), b.frames());
    }
}
