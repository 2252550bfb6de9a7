use std::fmt::Write as _;
use std::path::PathBuf;

use crate::bgmodel::RuleThresholds;
use crate::deghost::DeghostParams;
use crate::error::{invalid, Result};
use crate::meanshift::MeanShiftParams;
use crate::slic::SlicParams;

/// Every tunable of the pipeline. `Default` is the reference setup:
/// seed threshold 10, 15px superpixels with ruler 15 and 10 iterations,
/// rule thresholds 25 / 0.4 / 10, a 41x41 scoring window with sigma 20,
/// agreement threshold 10, replacement threshold 5, and at most 100 model
/// iterations stopping once fewer than 3 background pixels change.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Seed threshold on the change image (inclusive).
    pub tau0: u8,
    pub rules: RuleThresholds,
    pub slic: SlicParams,
    pub mean_shift: MeanShiftParams,
    pub deghost: DeghostParams,
    pub max_model_iters: usize,
    pub min_changed_pixels: usize,
    pub debug_dump_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau0: 10,
            rules: RuleThresholds::default(),
            slic: SlicParams::default(),
            mean_shift: MeanShiftParams::default(),
            deghost: DeghostParams::default(),
            max_model_iters: 100,
            min_changed_pixels: 3,
            debug_dump_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.rules.validate()?;
        self.slic.validate()?;
        self.deghost.validate()?;
        if self.max_model_iters < 1 {
            return Err(invalid("max_model_iters", "must be >= 1"));
        }
        if !(self.mean_shift.eps > 0.0) || self.mean_shift.max_iters < 1 {
            return Err(invalid("mean_shift", "need eps > 0 and max_iters >= 1"));
        }
        Ok(())
    }

    /// The effective configuration as `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let d = &self.deghost;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("tau0", &self.tau0);
        kv("tau1", &self.rules.tau1);
        kv("tau2", &self.rules.tau2);
        kv("tau3", &self.rules.tau3);
        kv("tau4", &d.tau4);
        kv("tau5", &d.tau5);
        kv("algorithm", &self.slic.algorithm.selector());
        kv("region_size", &self.slic.region_size);
        kv("ruler", &self.slic.ruler);
        kv("slic_iterations", &self.slic.num_iterations);
        kv("slic_perturb_seeds", &self.slic.perturb_seeds);
        kv("mean_shift_max_iters", &self.mean_shift.max_iters);
        kv("mean_shift_eps", &self.mean_shift.eps);
        kv("max_model_iters", &self.max_model_iters);
        kv("min_changed_pixels", &self.min_changed_pixels);
        kv("window", &d.neighborhood);
        kv("sigma_x", &d.sigma_x);
        kv("sigma_y", &d.sigma_y);
        kv("amplitude", &d.amplitude);
        kv("canny_low", &d.canny_low);
        kv("canny_high", &d.canny_high);
        kv("dilation_radius", &d.dilation_radius);
        kv("max_deghost_rounds", &d.max_rounds);
        let dump = self
            .debug_dump_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        kv("debug_dump_dir", &dump);
        s
    }
}
