//! End-to-end orchestration.
//!
//! Seeds, per-frame superpixels, mask initialization with rule 1, and an
//! initial background; then alternating model rounds (rule 2, rule 1,
//! candidates, composition) until the background settles; finally ghost
//! removal.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bgmodel::{apply_rule1, apply_rule2, init_masks, CandidateState, RuleThresholds};
use crate::config::PipelineConfig;
use crate::deghost::{deghost_traced, DeghostTrace};
use crate::dump::DebugDumper;
use crate::error::Result;
use crate::image::{BinaryMask, ImageStack, RasterImage};
use crate::meanshift::MeanShiftParams;
use crate::seeding::{compute_change_image, compute_seeds, ChangeImage};
use crate::slic::{segment, SuperpixelLabeling};

/// Hooks into the pipeline stages, for instrumentation and debug output.
/// Iteration 0 is the initialized model.
#[allow(unused_variables)]
pub trait Observer {
    fn on_seeds(&mut self, change: &ChangeImage, seeds: &BinaryMask) -> Result<()> {
        Ok(())
    }

    fn on_segmentation(&mut self, inputs: &ImageStack, labelings: &[SuperpixelLabeling]) -> Result<()> {
        Ok(())
    }

    fn on_model_state(&mut self, iteration: usize, state: &CandidateState, changed: usize) -> Result<()> {
        Ok(())
    }

    fn on_deghost_pass(&mut self, round: usize, background: &RasterImage) -> Result<()> {
        Ok(())
    }

    fn on_finish(&mut self, recovery: &Recovery) -> Result<()> {
        Ok(())
    }
}

/// An observer that ignores everything.
pub struct NoObserver;

impl Observer for NoObserver {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineReport {
    pub iterations_run: usize,
    /// Background pixels whose value changed in each model iteration.
    pub changed_pixels_per_iter: Vec<usize>,
    pub converged: bool,
    pub seed_pixels: usize,
    /// Pixels no mask ever labeled when the model loop ended.
    pub undefined_pixels: usize,
    pub deghost_rounds: usize,
    pub deghost_replaced: usize,
    pub wall_time: Duration,
}

impl PipelineReport {
    /// `key=value` lines; `wall_time` is the only non-deterministic entry.
    pub fn to_key_values(&self) -> String {
        let trace = self
            .changed_pixels_per_iter
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let mut s = String::new();
        let _ = writeln!(s, "iterations_run={}", self.iterations_run);
        let _ = writeln!(s, "changed_pixels_per_iter={trace}");
        let _ = writeln!(s, "converged={}", self.converged);
        let _ = writeln!(s, "seed_pixels={}", self.seed_pixels);
        let _ = writeln!(s, "undefined_pixels={}", self.undefined_pixels);
        let _ = writeln!(s, "deghost_rounds={}", self.deghost_rounds);
        let _ = writeln!(s, "deghost_replaced={}", self.deghost_replaced);
        let _ = writeln!(s, "wall_time={:.3}", self.wall_time.as_secs_f64());
        s
    }
}

/// Everything a full run produces.
#[derive(Clone, Debug)]
pub struct Recovery {
    pub background: RasterImage,
    /// The background when the model loop ended, before ghost removal.
    pub model_background: RasterImage,
    pub background_defined: BinaryMask,
    pub deghost: DeghostTrace,
    pub report: PipelineReport,
}

/// Seeds, superpixels and the initialized model.
pub fn initialize(
    inputs: &ImageStack,
    cfg: &PipelineConfig,
    observer: &mut dyn Observer,
) -> Result<(CandidateState, Vec<SuperpixelLabeling>, usize)> {
    let change = compute_change_image(inputs);
    let seeds = compute_seeds(&change, cfg.tau0);
    observer.on_seeds(&change, &seeds)?;
    let seed_pixels = seeds.count_ones();
    if seed_pixels == 0 {
        log::warn!("no background seeds at tau0={}; nothing can be recovered", cfg.tau0);
    }

    let labelings = inputs
        .frames()
        .par_iter()
        .map(|f| segment(f, &cfg.slic))
        .collect::<Result<Vec<_>>>()?;
    observer.on_segmentation(inputs, &labelings)?;

    let masks = init_masks(&seeds, inputs.len())?
        .par_iter()
        .zip(&labelings)
        .map(|(m, l)| apply_rule1(m, l, &cfg.rules))
        .collect::<Result<Vec<_>>>()?;
    let state = CandidateState::from_masks(inputs, masks, &cfg.mean_shift)?;
    Ok((state, labelings, seed_pixels))
}

/// One model round: rule 2 against the current background, rule 1 on the
/// result, then fresh candidates and a fresh background. Returns the number
/// of background pixels whose value changed in any channel.
pub fn iterate_once(
    state: &CandidateState,
    inputs: &ImageStack,
    labelings: &[SuperpixelLabeling],
    rules: &RuleThresholds,
    ms: &MeanShiftParams,
) -> Result<(CandidateState, usize)> {
    let masks = state
        .masks
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let grown = apply_rule2(
                m,
                inputs.frame(i),
                &state.background,
                &state.background_defined,
                rules.tau3,
            )?;
            apply_rule1(&grown, &labelings[i], rules)
        })
        .collect::<Result<Vec<_>>>()?;
    let next = CandidateState::from_masks(inputs, masks, ms)?;
    let changed = next
        .background
        .pixels()
        .zip(state.background.pixels())
        .filter(|(a, b)| a != b)
        .count();
    Ok((next, changed))
}

/// Recovers the background with no instrumentation beyond the optional
/// debug dump directory in `cfg`.
pub fn recover_background(inputs: &ImageStack, cfg: &PipelineConfig) -> Result<(RasterImage, PipelineReport)> {
    let r = match &cfg.debug_dump_dir {
        Some(dir) => recover_background_observed(inputs, cfg, &mut DebugDumper::new(dir)?)?,
        None => recover_background_observed(inputs, cfg, &mut NoObserver)?,
    };
    Ok((r.background, r.report))
}

pub fn recover_background_observed(
    inputs: &ImageStack,
    cfg: &PipelineConfig,
    observer: &mut dyn Observer,
) -> Result<Recovery> {
    cfg.validate()?;
    let start = Instant::now();

    let (mut state, labelings, seed_pixels) = initialize(inputs, cfg, observer)?;
    observer.on_model_state(0, &state, 0)?;

    let mut report = PipelineReport {
        seed_pixels,
        ..PipelineReport::default()
    };
    for iteration in 1..=cfg.max_model_iters {
        let (next, changed) = iterate_once(&state, inputs, &labelings, &cfg.rules, &cfg.mean_shift)?;
        debug_assert!(
            state.masks.iter().zip(&next.masks).all(|(a, b)| a.is_subset_of(b)),
            "masks lost bits in iteration {iteration}"
        );
        state = next;
        report.iterations_run = iteration;
        report.changed_pixels_per_iter.push(changed);
        observer.on_model_state(iteration, &state, changed)?;
        log::info!("model iteration {iteration}: {changed} background pixels changed");
        if changed < cfg.min_changed_pixels {
            report.converged = seed_pixels > 0;
            break;
        }
    }

    let undefined = state.background_defined.bits().iter().filter(|&&b| !b).count();
    if undefined > 0 {
        log::warn!("{undefined} background pixels were never labeled by any frame");
    }
    report.undefined_pixels = undefined;

    let mut dump_err = None;
    let (background, trace) = deghost_traced(&state.background, inputs, &cfg.deghost, |round, bg| {
        if dump_err.is_none() {
            dump_err = observer.on_deghost_pass(round, bg).err();
        }
    });
    if let Some(e) = dump_err {
        return Err(e);
    }
    report.deghost_rounds = trace.rounds();
    report.deghost_replaced = trace.total_replaced();
    report.wall_time = start.elapsed();

    let recovery = Recovery {
        background,
        model_background: state.background,
        background_defined: state.background_defined,
        deghost: trace,
        report,
    };
    observer.on_finish(&recovery)?;
    Ok(recovery)
}
