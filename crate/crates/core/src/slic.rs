//! SLIC superpixels: grid-initialized local k-means over a joint CIELAB and
//! image-plane distance, followed by a connectivity clean-up.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::color::{rgb_to_lab, LabImage};
use crate::error::{invalid, Error, Result};
use crate::image::{BinaryMask, RasterImage};

/// Rows per partial-sum band in the center update. Fixed so that the
/// reduction order never depends on the thread count.
const UPDATE_BAND_ROWS: usize = 16;

const UNASSIGNED: u32 = u32::MAX;

/// Clustering variant. Only plain SLIC exists; the numeric selector mirrors
/// the common `algorithm = 0/1/2` convention (SLIC, SLICO, MSLIC).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SlicAlgorithm {
    #[default]
    Slic,
}

impl SlicAlgorithm {
    pub fn from_selector(selector: u32) -> Result<Self> {
        match selector {
            0 => Ok(Self::Slic),
            1 | 2 => Err(invalid(
                "algorithm",
                format!("selector {selector} (SLICO/MSLIC) is not supported; use 0 (SLIC)"),
            )),
            other => Err(invalid("algorithm", format!("unknown selector {other}"))),
        }
    }

    pub fn selector(self) -> u32 {
        0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicParams {
    pub algorithm: SlicAlgorithm,
    /// Grid interval `s` in pixels.
    pub region_size: usize,
    /// Compactness weight `m`.
    pub ruler: f64,
    pub num_iterations: usize,
    /// Move each initial center to the lowest-gradient pixel of its 3x3
    /// neighborhood before clustering.
    pub perturb_seeds: bool,
}

impl Default for SlicParams {
    fn default() -> Self {
        Self {
            algorithm: SlicAlgorithm::Slic,
            region_size: 15,
            ruler: 15.0,
            num_iterations: 10,
            perturb_seeds: false,
        }
    }
}

impl SlicParams {
    pub fn validate(&self) -> Result<()> {
        if self.region_size < 2 {
            return Err(invalid("region_size", format!("must be >= 2, got {}", self.region_size)));
        }
        if !(self.ruler > 0.0 && self.ruler.is_finite()) {
            return Err(invalid("ruler", format!("must be a positive number, got {}", self.ruler)));
        }
        if self.num_iterations < 1 {
            return Err(invalid("num_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// A point in the joint `(L, a, b, x, y)` space.
pub type Feature = [f64; 5];

/// Color distance plus `m / s` times spatial distance.
#[inline]
pub fn slic_distance(pixel: &Feature, center: &Feature, params: &SlicParams) -> f64 {
    let dl = pixel[0] - center[0];
    let da = pixel[1] - center[1];
    let db = pixel[2] - center[2];
    let dx = pixel[3] - center[3];
    let dy = pixel[4] - center[4];
    let d_lab = (dl * dl + da * da + db * db).sqrt();
    let d_xy = (dx * dx + dy * dy).sqrt();
    d_lab + params.ruler / params.region_size as f64 * d_xy
}

/// A total partition of the image into 4-connected superpixels.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpixelLabeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    centers: Vec<Feature>,
    sizes: Vec<usize>,
}

impl SuperpixelLabeling {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn superpixel_count(&self) -> usize {
        self.centers.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Mean `(L, a, b, x, y)` of each superpixel.
    pub fn centers(&self) -> &[Feature] {
        &self.centers
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Linear pixel indices owned by each superpixel, in raster order.
    pub fn member_lists(&self) -> Vec<Vec<usize>> {
        let mut lists: Vec<Vec<usize>> = self.sizes.iter().map(|&n| Vec::with_capacity(n)).collect();
        for (idx, &l) in self.labels.iter().enumerate() {
            lists[l as usize].push(idx);
        }
        lists
    }

    /// Builds a labeling from raw ids; ids must be dense in `0..count`.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>, lab: &LabImage) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::BufferSize {
                expected: width * height,
                actual: labels.len(),
            });
        }
        let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let (centers, sizes) = mean_features(width, &labels, count, lab);
        if let Some(empty) = sizes.iter().position(|&n| n == 0) {
            return Err(invalid("labels", format!("superpixel id {empty} owns no pixels")));
        }
        Ok(Self {
            width,
            height,
            labels,
            centers,
            sizes,
        })
    }

    /// The input image with superpixel boundaries painted in `color`.
    pub fn overlay(&self, img: &RasterImage, color: [u8; 3]) -> RasterImage {
        let mut out = img.clone();
        let edges = self.boundary_mask();
        for (idx, &b) in edges.bits().iter().enumerate() {
            if b {
                out.set_pixel_at(idx, color);
            }
        }
        out
    }

    /// Pixels whose right or lower neighbor belongs to another superpixel.
    pub fn boundary_mask(&self) -> BinaryMask {
        let (w, h) = self.dims();
        BinaryMask::from_fn(w, h, |x, y| {
            let l = self.label(x, y);
            (x + 1 < w && self.label(x + 1, y) != l) || (y + 1 < h && self.label(x, y + 1) != l)
        })
        .expect("labeling is non-empty")
    }
}

struct Grid {
    nx: usize,
    ny: usize,
    step_x: f64,
    step_y: f64,
}

impl Grid {
    fn new(width: usize, height: usize, s: usize) -> Self {
        let nx = (width / s).max(1);
        let ny = (height / s).max(1);
        Self {
            nx,
            ny,
            step_x: width as f64 / nx as f64,
            step_y: height as f64 / ny as f64,
        }
    }

    fn cell_of(&self, x: usize, y: usize) -> u32 {
        let cx = (((x as f64 + 0.5) / self.step_x) as usize).min(self.nx - 1);
        let cy = (((y as f64 + 0.5) / self.step_y) as usize).min(self.ny - 1);
        (cy * self.nx + cx) as u32
    }

    fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (i as f64 + 0.5) * self.step_x - 0.5,
            (j as f64 + 0.5) * self.step_y - 0.5,
        )
    }
}

/// Segments an RGB image.
pub fn segment(img: &RasterImage, params: &SlicParams) -> Result<SuperpixelLabeling> {
    segment_lab(&rgb_to_lab(img), params)
}

/// Segments an image that is already in CIELAB.
pub fn segment_lab(lab: &LabImage, params: &SlicParams) -> Result<SuperpixelLabeling> {
    params.validate()?;
    let (width, height) = (lab.width(), lab.height());
    let s = params.region_size;
    if width < s || height < s {
        return Err(Error::ImageTooSmall {
            width,
            height,
            region_size: s,
        });
    }

    let grid = Grid::new(width, height, s);
    let mut centers = initial_centers(lab, &grid, params.perturb_seeds);
    let mut labels: Vec<u32> = (0..width * height)
        .map(|idx| grid.cell_of(idx % width, idx / width))
        .collect();

    for _ in 0..params.num_iterations {
        assign(lab, &centers, params, &mut labels);
        update_centers(width, &labels, lab, &mut centers);
    }

    let labels = enforce_connectivity(width, height, &labels, s * s / 4);
    SuperpixelLabeling::from_labels(width, height, labels, lab)
}

fn initial_centers(lab: &LabImage, grid: &Grid, perturb: bool) -> Vec<Feature> {
    let (w, h) = (lab.width(), lab.height());
    let mut centers = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (cx, cy) = grid.center(i, j);
            let mut px = (cx.round() as usize).min(w - 1);
            let mut py = (cy.round() as usize).min(h - 1);
            let (mut fx, mut fy) = (cx, cy);
            if perturb {
                (px, py) = lowest_gradient(lab, px, py);
                (fx, fy) = (px as f64, py as f64);
            }
            let c = lab.at(py * w + px);
            centers.push([c[0], c[1], c[2], fx, fy]);
        }
    }
    centers
}

fn lowest_gradient(lab: &LabImage, x: usize, y: usize) -> (usize, usize) {
    let (w, h) = (lab.width(), lab.height());
    let grad = |x: usize, y: usize| -> f64 {
        if x == 0 || y == 0 || x + 1 >= w || y + 1 >= h {
            return f64::INFINITY;
        }
        let d = |a: [f64; 3], b: [f64; 3]| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
        d(lab.at(y * w + x + 1), lab.at(y * w + x - 1)) + d(lab.at((y + 1) * w + x), lab.at((y - 1) * w + x))
    };
    let mut best = (x, y);
    let mut best_g = grad(x, y);
    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            let g = grad(nx, ny);
            if g < best_g {
                best_g = g;
                best = (nx, ny);
            }
        }
    }
    best
}

/// Assigns each pixel to the nearest center whose 2s x 2s window covers it.
/// Centers are visited in id order with a strict comparison, so ties go to
/// the lower id. Pixels outside every window keep their previous label.
fn assign(lab: &LabImage, centers: &[Feature], params: &SlicParams, labels: &mut [u32]) {
    let w = lab.width();
    let s = params.region_size as f64;
    labels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let fy = y as f64;
        let mut best = vec![f64::INFINITY; w];
        let mut best_id = vec![UNASSIGNED; w];
        for (k, c) in centers.iter().enumerate() {
            if (c[4] - fy).abs() > s {
                continue;
            }
            let x0 = (c[3] - s).ceil().max(0.0) as usize;
            let x1 = ((c[3] + s).floor() as isize).min(w as isize - 1);
            if x1 < x0 as isize {
                continue;
            }
            for x in x0..=x1 as usize {
                let v = lab.at(y * w + x);
                let p = [v[0], v[1], v[2], x as f64, fy];
                let d = slic_distance(&p, c, params);
                if d < best[x] {
                    best[x] = d;
                    best_id[x] = k as u32;
                }
            }
        }
        for (slot, id) in row.iter_mut().zip(best_id) {
            if id != UNASSIGNED {
                *slot = id;
            }
        }
    });
}

type Accum = Vec<([f64; 5], usize)>;

fn band_sums(width: usize, y0: usize, labels: &[u32], lab: &LabImage, count: usize) -> Accum {
    let mut acc = vec![([0.0; 5], 0usize); count];
    for (off, &l) in labels.iter().enumerate() {
        let idx = y0 * width + off;
        let v = lab.at(idx);
        let e = &mut acc[l as usize];
        e.0[0] += v[0];
        e.0[1] += v[1];
        e.0[2] += v[2];
        e.0[3] += (idx % width) as f64;
        e.0[4] += (idx / width) as f64;
        e.1 += 1;
    }
    acc
}

/// Per-id feature sums, reduced band by band in a fixed order.
fn sum_features(width: usize, labels: &[u32], lab: &LabImage, count: usize) -> Accum {
    let partials: Vec<Accum> = labels
        .par_chunks(width * UPDATE_BAND_ROWS)
        .enumerate()
        .map(|(band, chunk)| band_sums(width, band * UPDATE_BAND_ROWS, chunk, lab, count))
        .collect();
    let mut total = vec![([0.0; 5], 0usize); count];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            for c in 0..5 {
                t.0[c] += p.0[c];
            }
            t.1 += p.1;
        }
    }
    total
}

fn update_centers(width: usize, labels: &[u32], lab: &LabImage, centers: &mut [Feature]) {
    let sums = sum_features(width, labels, lab, centers.len());
    for (c, (sum, n)) in centers.iter_mut().zip(sums) {
        // An emptied cluster keeps its last center.
        if n > 0 {
            for k in 0..5 {
                c[k] = sum[k] / n as f64;
            }
        }
    }
}

fn mean_features(width: usize, labels: &[u32], count: usize, lab: &LabImage) -> (Vec<Feature>, Vec<usize>) {
    let sums = sum_features(width, labels, lab, count);
    let sizes = sums.iter().map(|s| s.1).collect();
    let centers = sums
        .into_iter()
        .map(|(sum, n)| {
            let n = n.max(1) as f64;
            [sum[0] / n, sum[1] / n, sum[2] / n, sum[3] / n, sum[4] / n]
        })
        .collect();
    (centers, sizes)
}

/// Relabels the 4-connected components of `labels` in raster order. A
/// component smaller than `min_size` is absorbed by the last already-labeled
/// 4-neighbor of its first pixel; every other component gets a fresh id.
pub fn enforce_connectivity(width: usize, height: usize, labels: &[u32], min_size: usize) -> Vec<u32> {
    let n = width * height;
    let mut out = vec![UNASSIGNED; n];
    let mut next: u32 = 0;
    let mut queue = VecDeque::new();
    let mut component = Vec::new();

    let neighbors = |idx: usize| {
        let (x, y) = (idx % width, idx / width);
        let mut nb = [None; 4];
        if x > 0 {
            nb[0] = Some(idx - 1);
        }
        if y > 0 {
            nb[1] = Some(idx - width);
        }
        if x + 1 < width {
            nb[2] = Some(idx + 1);
        }
        if y + 1 < height {
            nb[3] = Some(idx + width);
        }
        nb
    };

    for start in 0..n {
        if out[start] != UNASSIGNED {
            continue;
        }
        let adjacent = neighbors(start)
            .into_iter()
            .flatten()
            .rfind(|&nb| out[nb] != UNASSIGNED)
            .map(|nb| out[nb]);

        let old = labels[start];
        component.clear();
        out[start] = next;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            component.push(idx);
            for nb in neighbors(idx).into_iter().flatten() {
                if out[nb] == UNASSIGNED && labels[nb] == old {
                    out[nb] = next;
                    queue.push_back(nb);
                }
            }
        }

        match adjacent {
            Some(adj) if component.len() < min_size => {
                for &idx in &component {
                    out[idx] = adj;
                }
            }
            _ => next += 1,
        }
    }
    out
}
