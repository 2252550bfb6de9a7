//! Ghost removal.
//!
//! Ghosting artifacts in the composed background are bounded by edges.
//! Every edge pixel and its surroundings become candidates; each candidate
//! is compared against the input frames through a Gaussian-weighted count of
//! agreeing pixels in a window around it, and overwritten by the best frame
//! when that frame disagrees with the background at the candidate itself.
//! Replaced pixels seed the next pass.

use rayon::prelude::*;

use crate::canny::{canny_edges_with, CannyParams};
use crate::error::{invalid, Result};
use crate::image::{BinaryMask, ImageStack, RasterImage, Rgb};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeghostParams {
    pub canny_low: f64,
    pub canny_high: f64,
    /// Side of the square scoring window (odd).
    pub neighborhood: usize,
    /// A frame agrees with the background at a pixel when every channel
    /// differs by at most this much.
    pub tau4: u8,
    /// Minimum disagreement (exclusive) before a candidate is overwritten.
    pub tau5: u8,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub amplitude: f64,
    pub max_rounds: usize,
    /// Chebyshev radius used to grow edges and replacements into candidates.
    pub dilation_radius: usize,
}

impl Default for DeghostParams {
    fn default() -> Self {
        Self {
            canny_low: 50.0,
            canny_high: 150.0,
            neighborhood: 41,
            tau4: 10,
            tau5: 5,
            sigma_x: 20.0,
            sigma_y: 20.0,
            amplitude: 1.0,
            max_rounds: 100,
            dilation_radius: 3,
        }
    }
}

impl DeghostParams {
    pub fn validate(&self) -> Result<()> {
        if self.neighborhood < 3 || self.neighborhood % 2 == 0 {
            return Err(invalid(
                "neighborhood",
                format!("must be odd and >= 3, got {}", self.neighborhood),
            ));
        }
        if !(self.canny_low >= 0.0 && self.canny_low < self.canny_high) {
            return Err(invalid(
                "canny_low",
                format!(
                    "need 0 <= low < high, got low={} high={}",
                    self.canny_low, self.canny_high
                ),
            ));
        }
        if !(self.sigma_x > 0.0 && self.sigma_y > 0.0) {
            return Err(invalid("sigma", "standard deviations must be positive"));
        }
        if !(self.amplitude > 0.0) {
            return Err(invalid("amplitude", "must be positive"));
        }
        Ok(())
    }

    fn canny(&self) -> CannyParams {
        CannyParams {
            low: self.canny_low,
            high: self.canny_high,
            ..CannyParams::default()
        }
    }
}

/// Pixels that may be replaced in the next pass, kept as sorted linear
/// indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArtifactCandidateSet {
    width: usize,
    height: usize,
    pixels: Vec<usize>,
}

impl ArtifactCandidateSet {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: Vec::new(),
        }
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            pixels: mask
                .bits()
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
        }
    }

    /// Builds a set from coordinates, dropping out-of-bounds entries.
    pub fn from_coords(width: usize, height: usize, coords: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pixels: Vec<usize> = coords
            .into_iter()
            .filter(|&(x, y)| x < width && y < height)
            .map(|(x, y)| y * width + x)
            .collect();
        pixels.sort_unstable();
        pixels.dedup();
        Self { width, height, pixels }
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.pixels
    }

    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels.iter().map(|&i| (i % self.width, i / self.width))
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.pixels.binary_search(&(y * self.width + x)).is_ok()
    }

    pub fn to_mask(&self) -> BinaryMask {
        let mut m = BinaryMask::zeros(self.width, self.height).expect("non-empty dimensions");
        for &i in &self.pixels {
            m.set_at(i, true);
        }
        m
    }
}

/// Grows `mask` by `radius` in Chebyshev distance (square structuring
/// element), clipped at the borders.
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let src = mask.bits();
    let mut horiz = vec![false; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        // Running count of set bits in the window [x - r, x + r].
        let mut count = row[..radius.min(w)].iter().filter(|&&b| b).count();
        for x in 0..w {
            if x + radius < w && row[x + radius] {
                count += 1;
            }
            if x > radius && row[x - radius - 1] {
                count -= 1;
            }
            horiz[y * w + x] = count > 0;
        }
    }
    let mut out = vec![false; w * h];
    for x in 0..w {
        let mut count = (0..radius.min(h)).filter(|&y| horiz[y * w + x]).count();
        for y in 0..h {
            if y + radius < h && horiz[(y + radius) * w + x] {
                count += 1;
            }
            if y > radius && horiz[(y - radius - 1) * w + x] {
                count -= 1;
            }
            out[y * w + x] = count > 0;
        }
    }
    BinaryMask::from_bits(w, h, out).expect("same dimensions")
}

/// Edge pixels plus everything within `dilation_radius` of one.
pub fn initial_candidates(edges: &BinaryMask, dilation_radius: usize) -> ArtifactCandidateSet {
    ArtifactCandidateSet::from_mask(&dilate(edges, dilation_radius))
}

/// The Gaussian weights of the scoring window, row-major, centered.
fn weight_table(params: &DeghostParams) -> Vec<f64> {
    let half = (params.neighborhood / 2) as isize;
    let mut w = Vec::with_capacity(params.neighborhood * params.neighborhood);
    for dy in -half..=half {
        for dx in -half..=half {
            let e = (dx * dx) as f64 / (2.0 * params.sigma_x * params.sigma_x)
                + (dy * dy) as f64 / (2.0 * params.sigma_y * params.sigma_y);
            w.push(params.amplitude * (-e).exp());
        }
    }
    w
}

#[inline]
fn max_channel_diff(a: Rgb, b: Rgb) -> u8 {
    a[0].abs_diff(b[0]).max(a[1].abs_diff(b[1])).max(a[2].abs_diff(b[2]))
}

/// Sums window weights over in-bounds pixels where `agrees(idx)` holds.
/// Summation runs row-major over the window so equal agreement patterns
/// give bit-identical scores.
#[inline]
fn window_score(
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
    n: usize,
    weights: &[f64],
    agrees: impl Fn(usize) -> bool,
) -> f64 {
    let half = n / 2;
    let ys = y0.saturating_sub(half)..(y0 + half + 1).min(h);
    let xs = x0.saturating_sub(half)..(x0 + half + 1).min(w);
    let mut score = 0.0;
    for y in ys {
        let wrow = (y + half - y0) * n;
        for x in xs.clone() {
            if agrees(y * w + x) {
                score += weights[wrow + x + half - x0];
            }
        }
    }
    score
}

/// Closeness of every frame to the background around `p`.
pub fn closeness_scores(p: (usize, usize), inputs: &ImageStack, background: &RasterImage, params: &DeghostParams) -> Vec<f64> {
    let (w, h) = background.dims();
    let weights = weight_table(params);
    inputs
        .frames()
        .iter()
        .map(|frame| {
            window_score(p.0, p.1, w, h, params.neighborhood, &weights, |idx| {
                max_channel_diff(frame.pixel_at(idx), background.pixel_at(idx)) <= params.tau4
            })
        })
        .collect()
}

/// Index of the largest score; the lowest index wins ties.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// One synchronous pass. All scores read the pass-entry background; the
/// replacements are applied afterwards. Returns the new background, the
/// next candidate set and the number of replaced pixels.
pub fn deghost_pass(
    background: &RasterImage,
    candidates: &ArtifactCandidateSet,
    inputs: &ImageStack,
    params: &DeghostParams,
) -> (RasterImage, ArtifactCandidateSet, usize) {
    let (w, h) = background.dims();
    if candidates.is_empty() {
        return (background.clone(), ArtifactCandidateSet::empty(w, h), 0);
    }
    let weights = weight_table(params);

    // Per-frame agreement maps for the pass-entry background.
    let agree: Vec<Vec<bool>> = inputs
        .frames()
        .par_iter()
        .map(|frame| {
            frame
                .pixels()
                .zip(background.pixels())
                .map(|(a, b)| max_channel_diff(a, b) <= params.tau4)
                .collect()
        })
        .collect();

    let replacements: Vec<Option<(usize, Rgb)>> = candidates
        .indices()
        .par_iter()
        .map(|&idx| {
            let (x, y) = (idx % w, idx / w);
            let scores: Vec<f64> = agree
                .iter()
                .map(|a| window_score(x, y, w, h, params.neighborhood, &weights, |i| a[i]))
                .collect();
            let best = inputs.frame(argmax(&scores)).pixel_at(idx);
            (max_channel_diff(best, background.pixel_at(idx)) > params.tau5).then_some((idx, best))
        })
        .collect();

    let mut out = background.clone();
    let mut replaced = BinaryMask::zeros(w, h).expect("valid dimensions");
    let mut count = 0;
    for (idx, px) in replacements.into_iter().flatten() {
        out.set_pixel_at(idx, px);
        replaced.set_at(idx, true);
        count += 1;
    }
    let next = ArtifactCandidateSet::from_mask(&dilate(&replaced, params.dilation_radius));
    (out, next, count)
}

/// What happened during [`deghost_traced`].
#[derive(Clone, Debug)]
pub struct DeghostTrace {
    pub edges: BinaryMask,
    /// Candidate count at the start of each pass.
    pub candidates_per_round: Vec<usize>,
    pub replaced_per_round: Vec<usize>,
    /// Union of every candidate set that was evaluated.
    pub touched: BinaryMask,
    /// Whether the last pass replaced nothing.
    pub converged: bool,
}

impl DeghostTrace {
    pub fn rounds(&self) -> usize {
        self.replaced_per_round.len()
    }

    pub fn total_replaced(&self) -> usize {
        self.replaced_per_round.iter().sum()
    }
}

pub fn deghost(background: &RasterImage, inputs: &ImageStack, params: &DeghostParams) -> RasterImage {
    deghost_traced(background, inputs, params, |_, _| {}).0
}

/// Runs passes until one replaces nothing or `max_rounds` is reached.
/// `on_pass(round, background)` sees the background after each pass.
pub fn deghost_traced(
    background: &RasterImage,
    inputs: &ImageStack,
    params: &DeghostParams,
    mut on_pass: impl FnMut(usize, &RasterImage),
) -> (RasterImage, DeghostTrace) {
    let (w, h) = background.dims();
    let edges = canny_edges_with(background, &params.canny());
    let mut candidates = initial_candidates(&edges, params.dilation_radius);
    let mut touched = BinaryMask::zeros(w, h).expect("valid dimensions");
    let mut bg = background.clone();
    let mut trace = DeghostTrace {
        edges,
        candidates_per_round: Vec::new(),
        replaced_per_round: Vec::new(),
        touched: touched.clone(),
        converged: false,
    };

    for round in 0..params.max_rounds {
        for &i in candidates.indices() {
            touched.set_at(i, true);
        }
        let (next_bg, next, replaced) = deghost_pass(&bg, &candidates, inputs, params);
        trace.candidates_per_round.push(candidates.len());
        trace.replaced_per_round.push(replaced);
        bg = next_bg;
        on_pass(round, &bg);
        log::debug!("deghost pass {round}: {} candidates, {replaced} replaced", candidates.len());
        if replaced == 0 {
            trace.converged = true;
            break;
        }
        candidates = next;
    }
    trace.touched = touched;
    (bg, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> DeghostParams {
        DeghostParams::default()
    }

    fn brute_dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
        let (w, h) = mask.dims();
        BinaryMask::from_fn(w, h, |x, y| {
            (0..h).any(|yy| (0..w).any(|xx| mask.get(xx, yy) && x.abs_diff(xx) <= r && y.abs_diff(yy) <= r))
        })
        .unwrap()
    }

    #[test]
    fn empty_edges_give_no_candidates() {
        let edges = BinaryMask::zeros(10, 10).unwrap();
        assert!(initial_candidates(&edges, 3).is_empty());
    }

    #[test]
    fn single_pixel_dilation() {
        let mut edges = BinaryMask::zeros(10, 10).unwrap();
        edges.set(5, 5, true);
        assert_eq!(initial_candidates(&edges, 1).len(), 9);
        let mut corner = BinaryMask::zeros(10, 10).unwrap();
        corner.set(0, 0, true);
        assert_eq!(initial_candidates(&corner, 1).len(), 4);
    }

    #[test]
    fn line_dilation_matches_brute_force() {
        let edges = BinaryMask::from_fn(30, 20, |x, y| y == 8 && (10..20).contains(&x)).unwrap();
        let c = initial_candidates(&edges, 3);
        assert_eq!(c.to_mask(), brute_dilate(&edges, 3));
        // 10 columns x 7 rows plus two 3x7 end caps.
        assert_eq!(c.len(), 10 * 7 + 2 * 3 * 7);
    }

    #[test]
    fn scores_at_extremes() {
        let bg = RasterImage::filled(50, 50, [100, 100, 100]).unwrap();
        let far = RasterImage::filled(50, 50, [200, 100, 100]).unwrap();
        let stack = ImageStack::new(vec![bg.clone(), far.clone()]).unwrap();
        let p = params();
        let s = closeness_scores((25, 25), &stack, &bg, &p);
        let total: f64 = weight_table(&p).iter().sum();
        assert!((s[0] - total).abs() < 1e-9);
        assert_eq!(s[1], 0.0);

        let mut center_only = far.clone();
        center_only.set_pixel(25, 25, [100, 100, 100]);
        let stack = ImageStack::new(vec![center_only, far]).unwrap();
        assert_eq!(closeness_scores((25, 25), &stack, &bg, &p)[0], 1.0);
    }

    #[test]
    fn window_is_clipped_at_borders() {
        let bg = RasterImage::filled(30, 30, [10, 10, 10]).unwrap();
        let stack = ImageStack::new(vec![bg.clone(), bg.clone()]).unwrap();
        let p = params();
        let s = closeness_scores((0, 0), &stack, &bg, &p);
        // Quarter of the window plus the shared axes, from the brute formula.
        let mut want = 0.0;
        for y in 0..=20usize {
            for x in 0..=20usize {
                want += (-((x * x) as f64 / 800.0 + (y * y) as f64 / 800.0)).exp();
            }
        }
        assert!((s[0] - want).abs() < 1e-9);
        assert_eq!(s[0], s[1]);
    }

    #[test]
    fn tau4_is_inclusive() {
        let bg = RasterImage::filled(5, 5, [100, 100, 100]).unwrap();
        let at = RasterImage::filled(5, 5, [110, 100, 100]).unwrap();
        let over = RasterImage::filled(5, 5, [111, 100, 100]).unwrap();
        let stack = ImageStack::new(vec![at, over]).unwrap();
        let s = closeness_scores((2, 2), &stack, &bg, &params());
        assert!(s[0] > 0.0);
        assert_eq!(s[1], 0.0);
    }

    #[test]
    fn tau5_boundary() {
        // Frame 0 agrees everywhere but at the candidate, where it is off by 5 or 6.
        for (delta, replaced) in [(5u8, false), (6u8, true)] {
            let bg = RasterImage::filled(9, 9, [100, 100, 100]).unwrap();
            let mut f = bg.clone();
            f.set_pixel(4, 4, [100 + delta, 100, 100]);
            let stack = ImageStack::new(vec![f, RasterImage::filled(9, 9, [0, 0, 0]).unwrap()]).unwrap();
            let cands = ArtifactCandidateSet::from_coords(9, 9, [(4, 4)]);
            let (out, _, n) = deghost_pass(&bg, &cands, &stack, &params());
            assert_eq!(n == 1, replaced, "delta {delta}");
            assert_eq!(out.pixel(4, 4)[0] == 100 + delta, replaced);
        }
    }

    #[test]
    fn empty_pass_is_identity() {
        let bg = RasterImage::filled(6, 6, [1, 2, 3]).unwrap();
        let stack = ImageStack::new(vec![bg.clone(), bg.clone()]).unwrap();
        let (out, next, n) = deghost_pass(&bg, &ArtifactCandidateSet::empty(6, 6), &stack, &params());
        assert_eq!((out, next.len(), n), (bg, 0, 0));
    }

    #[test]
    fn ties_go_to_the_lowest_frame() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn validation() {
        assert!(params().validate().is_ok());
        assert!(DeghostParams { neighborhood: 40, ..params() }.validate().is_err());
        assert!(DeghostParams { canny_low: 200.0, ..params() }.validate().is_err());
        assert!(DeghostParams { sigma_x: 0.0, ..params() }.validate().is_err());
    }
}
