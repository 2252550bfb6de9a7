//! Debug output: intermediate rasters and the run report written to a
//! directory as the pipeline progresses.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bgmodel::CandidateState;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, ImageStack, RasterImage};
use crate::io::{save_gray, save_image};
use crate::pipeline::{Observer, Recovery};
use crate::seeding::ChangeImage;
use crate::slic::SuperpixelLabeling;

const OVERLAY: [u8; 3] = [255, 0, 0];

pub struct DebugDumper {
    dir: PathBuf,
}

impl DebugDumper {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn save_mask(&self, mask: &BinaryMask, name: &str) -> Result<()> {
        let samples: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
        save_gray(mask.width(), mask.height(), &samples, self.path(name))
    }
}

impl Observer for DebugDumper {
    fn on_seeds(&mut self, change: &ChangeImage, seeds: &BinaryMask) -> Result<()> {
        save_gray(change.width(), change.height(), change.values(), self.path("change.png"))?;
        self.save_mask(seeds, "seeds.png")
    }

    fn on_segmentation(&mut self, inputs: &ImageStack, labelings: &[SuperpixelLabeling]) -> Result<()> {
        for (i, (frame, l)) in inputs.frames().iter().zip(labelings).enumerate() {
            save_image(&l.overlay(frame, OVERLAY), self.path(&format!("slic_{i:02}.png")))?;
        }
        Ok(())
    }

    fn on_model_state(&mut self, iteration: usize, state: &CandidateState, _changed: usize) -> Result<()> {
        for (i, (mask, cand)) in state.masks.iter().zip(&state.candidates).enumerate() {
            self.save_mask(mask, &format!("iter{iteration:03}_mask_{i:02}.png"))?;
            save_image(cand, self.path(&format!("iter{iteration:03}_cand_{i:02}.png")))?;
        }
        save_image(&state.background, self.path(&format!("iter{iteration:03}_background.png")))?;
        self.save_mask(&state.background_defined, &format!("iter{iteration:03}_defined.png"))
    }

    fn on_deghost_pass(&mut self, round: usize, background: &RasterImage) -> Result<()> {
        save_image(background, self.path(&format!("deghost_pass{round:03}.png")))
    }

    fn on_finish(&mut self, recovery: &Recovery) -> Result<()> {
        self.save_mask(&recovery.deghost.edges, "deghost_edges.png")?;
        let mut overlay = recovery.model_background.clone();
        for (idx, &t) in recovery.deghost.touched.bits().iter().enumerate() {
            if t {
                overlay.set_pixel_at(idx, OVERLAY);
            }
        }
        save_image(&overlay, self.path("deghost_candidates.png"))?;
        let report = self.path("report.txt");
        fs::write(&report, recovery.report.to_key_values()).map_err(|source| Error::Io { path: report, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::pipeline::recover_background;

    #[test]
    fn dumps_every_stage() {
        let dir = tempfile::tempdir().unwrap();
        let f = RasterImage::from_fn(30, 30, |x, y| [(x * 8) as u8, (y * 8) as u8, 90]).unwrap();
        let mut g = f.clone();
        for y in 10..20 {
            for x in 10..20 {
                g.set_pixel(x, y, [255, 0, 255]);
            }
        }
        let stack = ImageStack::new(vec![f.clone(), f, g]).unwrap();
        let cfg = PipelineConfig {
            debug_dump_dir: Some(dir.path().to_path_buf()),
            ..PipelineConfig::default()
        };
        let (_, report) = recover_background(&stack, &cfg).unwrap();
        for name in [
            "change.png",
            "seeds.png",
            "slic_00.png",
            "slic_02.png",
            "iter000_mask_00.png",
            "iter000_cand_02.png",
            "iter000_background.png",
            "iter001_background.png",
            "deghost_edges.png",
            "deghost_candidates.png",
            "deghost_pass000.png",
            "report.txt",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.contains(&format!("iterations_run={}", report.iterations_run)));
    }
}
