use crate::error::Result;
use crate::image::{BinaryMask, RasterImage};

/// How close a recovered background is to the ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryMetrics {
    /// Fraction of pixels whose three channels all match exactly.
    pub exact_match_fraction: f64,
    /// Mean absolute channel difference over all channels of all pixels.
    pub mean_abs_error: f64,
    /// Infinite when the images are identical.
    pub psnr: f64,
    /// Fraction of pixels that are `[0, 0, 0]` in the recovery while the
    /// truth is not, i.e. left undefined by the model.
    pub undefined_fraction: f64,
}

impl RecoveryMetrics {
    pub fn to_key_values(&self) -> String {
        format!(
            "exact_match_fraction={:.6}\nmean_abs_error={:.6}\npsnr={}\nundefined_fraction={:.6}\n",
            self.exact_match_fraction,
            self.mean_abs_error,
            if self.psnr.is_finite() { format!("{:.4}", self.psnr) } else { "inf".into() },
            self.undefined_fraction
        )
    }
}

pub fn evaluate(recovered: &RasterImage, truth: &RasterImage) -> Result<RecoveryMetrics> {
    let all = BinaryMask::ones(truth.width(), truth.height())?;
    evaluate_region(recovered, truth, &all)
}

/// Metrics restricted to pixels set in `region`. An empty region counts as
/// a perfect match.
pub fn evaluate_region(recovered: &RasterImage, truth: &RasterImage, region: &BinaryMask) -> Result<RecoveryMetrics> {
    recovered.ensure_same_dims(truth.dims())?;
    region.ensure_same_dims(truth.dims())?;

    let (mut n, mut exact, mut undefined) = (0usize, 0usize, 0usize);
    let (mut abs, mut sq) = (0u64, 0u64);
    for (idx, (r, t)) in recovered.pixels().zip(truth.pixels()).enumerate() {
        if !region.get_at(idx) {
            continue;
        }
        n += 1;
        if r == t {
            exact += 1;
        }
        if r == [0, 0, 0] && t != [0, 0, 0] {
            undefined += 1;
        }
        for c in 0..3 {
            let d = u64::from(r[c].abs_diff(t[c]));
            abs += d;
            sq += d * d;
        }
    }
    if n == 0 {
        return Ok(RecoveryMetrics {
            exact_match_fraction: 1.0,
            mean_abs_error: 0.0,
            psnr: f64::INFINITY,
            undefined_fraction: 0.0,
        });
    }
    let samples = (3 * n) as f64;
    let mse = sq as f64 / samples;
    Ok(RecoveryMetrics {
        exact_match_fraction: exact as f64 / n as f64,
        mean_abs_error: abs as f64 / samples,
        psnr: if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0f64 * 255.0 / mse).log10() },
        undefined_fraction: undefined as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(v: u8) -> RasterImage {
        RasterImage::filled(10, 10, [v; 3]).unwrap()
    }

    #[test]
    fn identical_images() {
        let m = evaluate(&gray(77), &gray(77)).unwrap();
        assert_eq!(m.exact_match_fraction, 1.0);
        assert_eq!(m.mean_abs_error, 0.0);
        assert!(m.psnr.is_infinite());
        assert_eq!(m.undefined_fraction, 0.0);
    }

    #[test]
    fn single_channel_off_by_one() {
        let mut r = gray(77);
        r.set_pixel(3, 4, [78, 77, 77]);
        let m = evaluate(&r, &gray(77)).unwrap();
        assert!((m.mean_abs_error - 1.0 / 300.0).abs() < 1e-12);
        assert!((m.exact_match_fraction - 0.99).abs() < 1e-12);
        assert!((m.psnr - 10.0 * (255.0f64.powi(2) * 300.0).log10()).abs() < 1e-9);
    }

    #[test]
    fn all_zero_is_undefined() {
        let m = evaluate(&gray(0), &gray(50)).unwrap();
        assert_eq!(m.undefined_fraction, 1.0);
        assert_eq!(m.exact_match_fraction, 0.0);
    }

    #[test]
    fn mae_is_symmetric() {
        let a = RasterImage::from_fn(10, 10, |x, y| [(x * 20) as u8, (y * 9) as u8, 5]).unwrap();
        let b = RasterImage::from_fn(10, 10, |x, y| [(y * 13) as u8, (x * 3) as u8, 200]).unwrap();
        assert_eq!(evaluate(&a, &b).unwrap().mean_abs_error, evaluate(&b, &a).unwrap().mean_abs_error);
    }

    #[test]
    fn region_restricts_pixels() {
        let mut r = gray(10);
        r.set_pixel(0, 0, [0, 0, 0]);
        let mut region = BinaryMask::zeros(10, 10).unwrap();
        region.set(5, 5, true);
        assert_eq!(evaluate_region(&r, &gray(10), &region).unwrap().exact_match_fraction, 1.0);
        region.set(0, 0, true);
        let m = evaluate_region(&r, &gray(10), &region).unwrap();
        assert_eq!(m.exact_match_fraction, 0.5);
        assert_eq!(m.undefined_fraction, 0.5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(evaluate(&RasterImage::filled(3, 3, [0; 3]).unwrap(), &gray(0)).is_err());
    }
}
