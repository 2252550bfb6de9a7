//! Background candidate masks, candidate images and background composition.
//!
//! Each frame carries a mask of pixels believed to be background in that
//! frame. Masks only ever gain bits: rule 1 grows them a whole superpixel at
//! a time, rule 2 adds pixels that agree with the current background.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::image::{BinaryMask, ImageStack, RasterImage};
use crate::meanshift::{mean_shift_mode, MeanShiftParams};
use crate::slic::SuperpixelLabeling;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuleThresholds {
    /// Labeled-pixel count above which a superpixel is taken whole.
    pub tau1: usize,
    /// Labeled-pixel ratio above which a superpixel is taken whole.
    pub tau2: f64,
    /// Per-channel agreement with the background for rule 2.
    pub tau3: u8,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        Self {
            tau1: 25,
            tau2: 0.4,
            tau3: 10,
        }
    }
}

impl RuleThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau2) {
            return Err(invalid("tau2", format!("must lie in [0, 1], got {}", self.tau2)));
        }
        Ok(())
    }
}

/// `k` copies of the seed mask.
pub fn init_masks(seeds: &BinaryMask, k: usize) -> Result<Vec<BinaryMask>> {
    if k < 1 {
        return Err(invalid("k", "need at least one mask"));
    }
    Ok(vec![seeds.clone(); k])
}

/// Rule 1: a superpixel with more than `tau1` labeled pixels, or a labeled
/// fraction above `tau2`, becomes background entirely. Counts are taken from
/// the input mask for every superpixel.
pub fn apply_rule1(mask: &BinaryMask, labeling: &SuperpixelLabeling, th: &RuleThresholds) -> Result<BinaryMask> {
    mask.ensure_same_dims(labeling.dims())?;
    let labels = labeling.labels();
    let mut labeled = vec![0usize; labeling.superpixel_count()];
    for (&l, &b) in labels.iter().zip(mask.bits()) {
        if b {
            labeled[l as usize] += 1;
        }
    }
    let grow: Vec<bool> = labeled
        .iter()
        .zip(labeling.sizes())
        .map(|(&n, &size)| n > th.tau1 || n as f64 / size as f64 > th.tau2)
        .collect();

    let mut out = mask.clone();
    for (bit, &l) in out.bits_mut().iter_mut().zip(labels) {
        *bit |= grow[l as usize];
    }
    Ok(out)
}

/// Rule 2: where the background is defined, a frame pixel within `tau3` of
/// the background in all three channels becomes background. Never clears.
pub fn apply_rule2(
    mask: &BinaryMask,
    input: &RasterImage,
    background: &RasterImage,
    defined: &BinaryMask,
    tau3: u8,
) -> Result<BinaryMask> {
    let dims = mask.dims();
    input.ensure_same_dims(dims)?;
    background.ensure_same_dims(dims)?;
    defined.ensure_same_dims(dims)?;

    let mut out = mask.clone();
    let (inp, bg) = (input.as_bytes(), background.as_bytes());
    for (idx, bit) in out.bits_mut().iter_mut().enumerate() {
        if *bit || !defined.get_at(idx) {
            continue;
        }
        let o = idx * 3;
        *bit = (0..3).all(|c| inp[o + c].abs_diff(bg[o + c]) <= tau3);
    }
    Ok(out)
}

/// Candidate images: each frame with non-background pixels zeroed.
pub fn make_candidates(inputs: &ImageStack, masks: &[BinaryMask]) -> Result<Vec<RasterImage>> {
    if masks.len() != inputs.len() {
        return Err(Error::CountMismatch {
            expected: inputs.len(),
            actual: masks.len(),
        });
    }
    inputs
        .frames()
        .par_iter()
        .zip(masks)
        .map(|(frame, mask)| {
            frame.ensure_same_dims(mask.dims())?;
            let mut cand = frame.clone();
            for (px, &b) in cand.pixels_mut().zip(mask.bits()) {
                if !b {
                    px.fill(0);
                }
            }
            Ok(cand)
        })
        .collect()
}

/// Builds the background from the candidates, channel by channel: unlabeled
/// pixels stay 0 and undefined, a single labeled frame is copied, several
/// labeled frames are fused by mean shift in frame order.
pub fn compose_background(
    candidates: &[RasterImage],
    masks: &[BinaryMask],
    ms: &MeanShiftParams,
) -> Result<(RasterImage, BinaryMask)> {
    if candidates.len() != masks.len() {
        return Err(Error::CountMismatch {
            expected: masks.len(),
            actual: candidates.len(),
        });
    }
    let first = candidates
        .first()
        .ok_or_else(|| invalid("candidates", "need at least one candidate image"))?;
    let (w, h) = first.dims();
    for (c, m) in candidates.iter().zip(masks) {
        c.ensure_same_dims((w, h))?;
        m.ensure_same_dims((w, h))?;
    }

    let mut data = vec![0u8; w * h * 3];
    let mut defined = vec![false; w * h];
    data.par_chunks_mut(w * 3)
        .zip(defined.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, def_row))| {
            let mut values: [Vec<u8>; 3] = Default::default();
            for x in 0..w {
                let idx = y * w + x;
                for v in values.iter_mut() {
                    v.clear();
                }
                for (cand, mask) in candidates.iter().zip(masks) {
                    if mask.get_at(idx) {
                        let px = cand.pixel_at(idx);
                        for c in 0..3 {
                            values[c].push(px[c]);
                        }
                    }
                }
                if values[0].is_empty() {
                    continue;
                }
                def_row[x] = true;
                for c in 0..3 {
                    row[x * 3 + c] = if values[c].len() == 1 {
                        values[c][0]
                    } else {
                        mean_shift_mode(&values[c], ms).expect("non-empty samples")
                    };
                }
            }
        });
    Ok((
        RasterImage::new(w, h, data)?,
        BinaryMask::from_bits(w, h, defined)?,
    ))
}

/// The complete model: masks, candidate images and the composed background.
#[derive(Clone, Debug)]
pub struct CandidateState {
    pub masks: Vec<BinaryMask>,
    pub candidates: Vec<RasterImage>,
    pub background: RasterImage,
    pub background_defined: BinaryMask,
}

impl CandidateState {
    /// Derives candidates and background from `masks`.
    pub fn from_masks(inputs: &ImageStack, masks: Vec<BinaryMask>, ms: &MeanShiftParams) -> Result<Self> {
        let candidates = make_candidates(inputs, &masks)?;
        let (background, background_defined) = compose_background(&candidates, &masks, ms)?;
        Ok(Self {
            masks,
            candidates,
            background,
            background_defined,
        })
    }

    /// Checks the structural invariants against the inputs by full scan.
    pub fn check_consistency(&self, inputs: &ImageStack) -> std::result::Result<(), String> {
        for (i, ((mask, cand), frame)) in self.masks.iter().zip(&self.candidates).zip(inputs.frames()).enumerate() {
            for idx in 0..frame.pixel_count() {
                let want = if mask.get_at(idx) { frame.pixel_at(idx) } else { [0; 3] };
                if cand.pixel_at(idx) != want {
                    return Err(format!("frame {i}: candidate differs from masked input at pixel {idx}"));
                }
            }
        }
        for idx in 0..self.background.pixel_count() {
            let any = self.masks.iter().any(|m| m.get_at(idx));
            if any != self.background_defined.get_at(idx) {
                return Err(format!("defined mask wrong at pixel {idx}"));
            }
        }
        Ok(())
    }
}
