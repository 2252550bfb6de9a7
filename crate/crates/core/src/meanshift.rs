//! Scalar mean shift with a flat kernel and a shrinking, data-driven radius.
//!
//! Used to fuse the background candidates that several frames propose for
//! the same pixel and channel. The radius is half the spread of the samples
//! inside the previous radius, so outliers are shed quickly; once only two
//! samples remain, the one from the earlier frame is taken.

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanShiftParams {
    pub max_iters: usize,
    /// Stop once the mean moves by less than this.
    pub eps: f64,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            eps: 0.5,
        }
    }
}

/// Flat kernel: 1 inside the unit radius (inclusive), 0 outside.
#[inline]
pub fn flat_kernel(u: f64) -> u8 {
    u8::from(u <= 1.0)
}

/// The iterate of one mean-shift step.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanShiftState {
    pub mu: f64,
    pub h: f64,
    /// Indices (into the sample list, ascending) inside the radius.
    pub active: Vec<usize>,
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    /// A single sample value was selected (lone survivor, two-sample rule,
    /// or a collapsed radius).
    Sample(f64),
    /// The mean converged or the iteration cap was reached.
    Mean(f64),
}

impl Mode {
    pub fn value(self) -> f64 {
        match self {
            Mode::Sample(v) | Mode::Mean(v) => v,
        }
    }
}

fn mean_of(samples: &[f64], idx: impl Iterator<Item = usize>) -> (f64, f64, f64) {
    let mut sum = 0.0;
    let mut n = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in idx {
        let v = samples[i];
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (sum / n as f64, lo, hi)
}

/// Runs the procedure on real-valued samples and reports how it ended.
///
/// `samples` must be in frame order; the first of two survivors is the one
/// with the lower index.
pub fn mean_shift(samples: &[f64], params: &MeanShiftParams) -> Result<Mode> {
    mean_shift_observed(samples, params, |_, _, _| {})
}

/// Like [`mean_shift`], recording every iterate.
pub fn mean_shift_trace(samples: &[f64], params: &MeanShiftParams) -> Result<(Mode, Vec<MeanShiftState>)> {
    let mut trace = Vec::new();
    let mode = mean_shift_observed(samples, params, |mu, h, active| {
        trace.push(MeanShiftState {
            mu,
            h,
            active: active.to_vec(),
        })
    })?;
    Ok((mode, trace))
}

/// Core loop. `observe(mu, h, active)` sees the mean and radius used in each
/// iteration together with the samples that fell inside that radius.
pub fn mean_shift_observed(
    samples: &[f64],
    params: &MeanShiftParams,
    mut observe: impl FnMut(f64, f64, &[usize]),
) -> Result<Mode> {
    if samples.is_empty() {
        return Err(invalid("samples", "mean shift needs at least one sample"));
    }
    if samples.len() == 1 {
        return Ok(Mode::Sample(samples[0]));
    }

    // The initial radius covers every sample.
    let (mut mu, lo, hi) = mean_of(samples, 0..samples.len());
    let mut h = (hi - lo) / 2.0;
    if h == 0.0 || samples.len() == 2 {
        return Ok(Mode::Sample(samples[0]));
    }

    let mut active = Vec::with_capacity(samples.len());
    for _ in 0..params.max_iters {
        active.clear();
        active.extend((0..samples.len()).filter(|&i| {
            let u = (mu - samples[i]) / h;
            flat_kernel(u * u) == 1
        }));
        observe(mu, h, &active);
        if active.len() <= 2 {
            return Ok(Mode::Sample(samples[active[0]]));
        }

        let (next_mu, lo, hi) = mean_of(samples, active.iter().copied());
        let next_h = (hi - lo) / 2.0;
        if next_h == 0.0 {
            return Ok(Mode::Sample(samples[active[0]]));
        }
        let moved = (next_mu - mu).abs();
        mu = next_mu;
        h = next_h;
        if moved < params.eps {
            return Ok(Mode::Mean(mu));
        }
    }
    Ok(Mode::Mean(mu))
}

/// Fuses 8-bit channel values into one, rounding a converged mean to the
/// nearest integer.
pub fn mean_shift_mode(samples: &[u8], params: &MeanShiftParams) -> Result<u8> {
    let mut buf = [0.0f64; 32];
    let owned;
    let values: &[f64] = if samples.len() <= buf.len() {
        for (d, &s) in buf.iter_mut().zip(samples) {
            *d = f64::from(s);
        }
        &buf[..samples.len()]
    } else {
        owned = samples.iter().map(|&s| f64::from(s)).collect::<Vec<_>>();
        &owned
    };
    let v = mean_shift(values, params)?.value();
    Ok(v.round().clamp(0.0, 255.0) as u8)
}
