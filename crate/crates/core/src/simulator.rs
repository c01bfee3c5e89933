//! Frame-by-frame execution of an exposure plan under configurable noise.
//!
//! Each plan entry produces one frame: the mask is placed at the (possibly
//! jittered) offset, the expected count map is built from transmission, beam
//! profile, photon budget, and (possibly jittered) exposure time, counting
//! noise is drawn per pixel, detector defects are stamped on, and the frame is
//! accumulated. Every random draw comes from a stream keyed by the config
//! seed, so runs are bit-reproducible.

use rand_distr::{Distribution, Normal, Poisson};

use crate::ensemble::{check_offset_bounds, flux_correct, BeamModel, FLUX_REFERENCE_MA};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mask::MaskField;
use crate::planner::ExposurePlan;
use crate::rng::{stream, CounterRng};

/// Noise and detector-defect configuration.
///
/// `photon_budget_per_ms_per_px` is the expected count rate through unit
/// transmission and unit beam intensity; zero disables counting noise and the
/// simulator returns expected intensities at unit budget instead.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    pub photon_budget_per_ms_per_px: f64,
    /// Per-axis standard deviation of mask positioning error, px; draws are
    /// rounded to whole pixels.
    pub position_jitter_sigma_px: f64,
    /// Relative standard deviation of exposure time.
    pub exposure_jitter_frac: f64,
    pub hot_pixel_frac: f64,
    pub dead_pixel_frac: f64,
    /// Relative amplitude of the ring-current random walk over the run.
    pub flux_drift_amplitude: f64,
    /// Apply per-frame flux correction back to the reference current,
    /// emulating real-time normalization.
    pub flux_correction_enabled: bool,
    /// Count value stamped on hot pixels.
    pub saturation_count: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            photon_budget_per_ms_per_px: 0.0,
            position_jitter_sigma_px: 0.0,
            exposure_jitter_frac: 0.0,
            hot_pixel_frac: 0.0,
            dead_pixel_frac: 0.0,
            flux_drift_amplitude: 0.0,
            flux_correction_enabled: true,
            saturation_count: 65_535.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("photonBudgetPerMsPerPixel", self.photon_budget_per_ms_per_px),
            ("positionJitterSigmaPx", self.position_jitter_sigma_px),
            ("exposureJitterFrac", self.exposure_jitter_frac),
            ("fluxDriftAmplitude", self.flux_drift_amplitude),
        ] {
            if !(v >= 0.0) {
                return Err(Error::validation(format!("{name}: must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [("hotPixelFrac", self.hot_pixel_frac), ("deadPixelFrac", self.dead_pixel_frac)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::validation(format!("{name}: must be in [0, 1), got {v}")));
            }
        }
        if self.hot_pixel_frac + self.dead_pixel_frac >= 1.0 {
            return Err(Error::validation(
                "hotPixelFrac + deadPixelFrac: must be below 1".to_string(),
            ));
        }
        if !(self.saturation_count > 0.0) {
            return Err(Error::validation("saturationCount: must be positive".to_string()));
        }
        Ok(())
    }
}

/// Accumulated exposure plus run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    /// Summed counts over all frames.
    pub accumulated: Grid,
    /// Per-entry frames, present when requested.
    pub frames: Option<Vec<Grid>>,
    pub frames_applied: usize,
    pub noise: NoiseConfig,
    /// Fingerprint of the executed plan.
    pub plan_ref: String,
    /// Out-of-bounds jitters that had to be clamped, one note per event.
    pub warnings: Vec<String>,
}

/// Execute a plan against a mask.
///
/// The window is sized from the plan's offsets against the mask; frames are
/// generated in plan order and accumulated. Deterministic for a fixed
/// `noise.seed`.
pub fn simulate_exposure(
    mask: &MaskField,
    plan: &ExposurePlan,
    noise: &NoiseConfig,
    beam: &BeamModel,
    window_width: usize,
    window_height: usize,
    keep_frames: bool,
) -> Result<ProjectionResult> {
    noise.validate()?;
    if plan.entries.is_empty() {
        return Err(Error::validation("plan: cannot simulate an empty plan"));
    }
    for (k, entry) in plan.entries.iter().enumerate() {
        check_offset_bounds(mask, window_width, window_height, entry.offset, k)?;
    }
    let beam_grid = beam.sampled_profile(window_width, window_height)?;

    let n_px = window_width * window_height;
    let n_frames = plan.entries.len();

    // detector defects are fixed for the whole run
    let mut defects_rng = CounterRng::from_stream(noise.seed, stream::SIM_PIXEL_DEFECTS);
    let n_hot = (noise.hot_pixel_frac * n_px as f64).floor() as usize;
    let n_dead = (noise.dead_pixel_frac * n_px as f64).floor() as usize;
    let defect_picks = pick_distinct(&mut defects_rng, n_px, n_hot + n_dead);
    let (hot_pixels, dead_pixels) = defect_picks.split_at(n_hot);

    let mut pos_rng = CounterRng::from_stream(noise.seed, stream::SIM_POSITION_JITTER);
    let mut exp_rng = CounterRng::from_stream(noise.seed, stream::SIM_EXPOSURE_JITTER);
    let mut poisson_rng = CounterRng::from_stream(noise.seed, stream::SIM_POISSON);
    let mut drift_rng = CounterRng::from_stream(noise.seed, stream::SIM_FLUX_DRIFT);
    let unit_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let max_dx = mask.width as i64 - window_width as i64;
    let max_dy = mask.height as i64 - window_height as i64;
    let budget = noise.photon_budget_per_ms_per_px;
    let counting = budget > 0.0;
    let budget_eff = if counting { budget } else { 1.0 };
    let drift_step = noise.flux_drift_amplitude / (n_frames as f64).sqrt();

    let mut accumulated = Grid::zeros(window_width, window_height);
    let mut frames = if keep_frames { Some(Vec::with_capacity(n_frames)) } else { None };
    let mut warnings = Vec::new();
    let mut drift = 0.0f64;

    for (idx, entry) in plan.entries.iter().enumerate() {
        // mask positioning error, rounded to whole pixels and clamped in-bounds
        let (mut dx, mut dy) = entry.offset;
        if noise.position_jitter_sigma_px > 0.0 {
            dx += (unit_normal.sample(&mut pos_rng) * noise.position_jitter_sigma_px).round() as i64;
            dy += (unit_normal.sample(&mut pos_rng) * noise.position_jitter_sigma_px).round() as i64;
            let (cx, cy) = (dx.clamp(0, max_dx), dy.clamp(0, max_dy));
            if (cx, cy) != (dx, dy) {
                warnings.push(format!("entry {idx}: jittered offset ({dx}, {dy}) clamped to ({cx}, {cy})"));
            }
            dx = cx;
            dy = cy;
        }

        // exposure-time error, multiplicative and clamped nonnegative
        let mut time_ms = entry.exposure_ms;
        if noise.exposure_jitter_frac > 0.0 {
            let factor = (1.0 + unit_normal.sample(&mut exp_rng) * noise.exposure_jitter_frac).max(0.0);
            time_ms *= factor;
        }

        // ring-current wander as a smooth random walk
        if noise.flux_drift_amplitude > 0.0 {
            drift += unit_normal.sample(&mut drift_rng) * drift_step;
        }
        let ring = (beam.ring_current_ma * (1.0 + drift)).max(0.1 * beam.ring_current_ma);
        let flux_factor = ring / FLUX_REFERENCE_MA;

        let mut expected = Grid::from_fn(window_width, window_height, |x, y| {
            mask.transmission(x + dx as usize, y + dy as usize)
                * beam_grid.get(x, y)
                * budget_eff
                * time_ms
                * flux_factor
        });
        if noise.flux_correction_enabled {
            expected = flux_correct(&expected, ring, FLUX_REFERENCE_MA)?;
        }

        let mut frame = if counting {
            Grid::from_vec(
                window_width,
                window_height,
                expected
                    .values()
                    .iter()
                    .map(|&lambda| {
                        if lambda > 0.0 {
                            Poisson::new(lambda).expect("positive lambda").sample(&mut poisson_rng)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )?
        } else {
            expected
        };

        for &p in hot_pixels {
            frame.values_mut()[p] = noise.saturation_count;
        }
        for &p in dead_pixels {
            frame.values_mut()[p] = 0.0;
        }

        accumulated.add_assign(&frame);
        if let Some(list) = frames.as_mut() {
            list.push(frame);
        }
    }

    Ok(ProjectionResult {
        accumulated,
        frames,
        frames_applied: n_frames,
        noise: noise.clone(),
        plan_ref: format!("plan-{:016x}", plan.fingerprint()),
        warnings,
    })
}

/// Partial sums of the retained frames at the given checkpoints (1-based
/// frame counts, ascending).
pub fn accumulate_sequence(result: &ProjectionResult, checkpoints: &[usize]) -> Result<Vec<Grid>> {
    let frames = result
        .frames
        .as_ref()
        .ok_or_else(|| Error::validation("frames: run did not retain frames"))?;
    for pair in checkpoints.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::validation("checkpoints: must be ascending".to_string()));
        }
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut running = Grid::zeros(result.accumulated.width(), result.accumulated.height());
    let mut applied = 0usize;
    for &cp in checkpoints {
        if cp == 0 || cp > result.frames_applied {
            return Err(Error::validation(format!(
                "checkpoints: {cp} out of range 1..={}",
                result.frames_applied
            )));
        }
        while applied < cp {
            running.add_assign(&frames[applied]);
            applied += 1;
        }
        out.push(running.clone());
    }
    Ok(out)
}

/// First `count` values of a deterministic shuffle of 0..n.
fn pick_distinct(rng: &mut CounterRng, n: usize, count: usize) -> Vec<usize> {
    let count = count.min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.next_below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}
