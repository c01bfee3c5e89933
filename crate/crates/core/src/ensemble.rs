//! Assembly of the illumination pattern matrix from translated mask views.
//!
//! Each ensemble member is the window view of the mask at one integer-pixel
//! offset, multiplied by the beam profile, flux-corrected to the reference
//! ring current, and normalized by the global maximum count. The vectorized
//! patterns are mean-corrected and collated column by column into a dense
//! matrix; the removed spatial means are kept alongside so any pattern can be
//! reconstructed and the exposure pedestal predicted.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::mask::MaskField;
use crate::matrix::ColMatrix;
use crate::rng::{stream, CounterRng};

/// Reference storage-ring current used for flux normalization, in mA.
pub const FLUX_REFERENCE_MA: f64 = 200.0;

/// Window dimensions plus the ordered list of mask translations, one per
/// ensemble member. Offsets are the mask-frame coordinates of the window's
/// top-left pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGeometry {
    pub window_width: usize,
    pub window_height: usize,
    pub offsets: Vec<(i64, i64)>,
}

impl WindowGeometry {
    pub fn new(window_width: usize, window_height: usize, offsets: Vec<(i64, i64)>) -> Self {
        WindowGeometry { window_width, window_height, offsets }
    }

    /// All raster offsets stepping `step` pixels in x and y over a mask.
    pub fn raster(mask: &MaskField, window_width: usize, window_height: usize, step: usize) -> Self {
        let step = step.max(1) as i64;
        let mut offsets = Vec::new();
        if mask.width >= window_width && mask.height >= window_height {
            let max_dx = (mask.width - window_width) as i64;
            let max_dy = (mask.height - window_height) as i64;
            let mut dy = 0;
            while dy <= max_dy {
                let mut dx = 0;
                while dx <= max_dx {
                    offsets.push((dx, dy));
                    dx += step;
                }
                dy += step;
            }
        }
        WindowGeometry { window_width, window_height, offsets }
    }

    /// Deterministically subsample to at most `n` offsets (Fisher-Yates on the
    /// stream keyed by `seed`), preserving raster order of the survivors.
    pub fn subsample(mut self, n: usize, seed: u64) -> Self {
        if n >= self.offsets.len() {
            return self;
        }
        let mut rng = CounterRng::from_stream(seed, stream::OFFSET_SAMPLING);
        let len = self.offsets.len();
        for i in 0..n {
            let j = i + rng.next_below((len - i) as u64) as usize;
            self.offsets.swap(i, j);
        }
        self.offsets.truncate(n);
        self.offsets.sort();
        self
    }

    pub fn validate(&self, mask: &MaskField) -> Result<()> {
        if self.window_width == 0 || self.window_height == 0 {
            return Err(Error::validation("window dimensions must be positive"));
        }
        if self.offsets.is_empty() {
            return Err(Error::validation("offsets: at least one offset is required"));
        }
        let mut seen = HashSet::new();
        for (k, &(dx, dy)) in self.offsets.iter().enumerate() {
            check_offset_bounds(mask, self.window_width, self.window_height, (dx, dy), k)?;
            if !seen.insert((dx, dy)) {
                return Err(Error::validation(format!("offsets: duplicate offset ({dx}, {dy}) at index {k}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_offset_bounds(
    mask: &MaskField,
    window_width: usize,
    window_height: usize,
    (dx, dy): (i64, i64),
    index: usize,
) -> Result<()> {
    let max_dx = mask.width as i64 - window_width as i64;
    let max_dy = mask.height as i64 - window_height as i64;
    if dx < 0 || dy < 0 || dx > max_dx || dy > max_dy {
        return Err(Error::Geometry {
            offset_index: index,
            detail: format!(
                "offset ({dx}, {dy}) places a {window_width}x{window_height} window outside the {}x{} mask",
                mask.width, mask.height
            ),
        });
    }
    Ok(())
}

/// Beam intensity over the window, in window pixel coordinates. The beam and
/// window are fixed in the lab frame; only the mask translates.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamProfile {
    Flat { intensity: f64 },
    /// sum_ab coeffs[a][b] * u^a * v^b with (u, v) the window coordinates
    /// normalized to [0, 1].
    Polynomial { coeffs: Vec<Vec<f64>> },
}

impl BeamProfile {
    pub fn intensity_at(&self, x: usize, y: usize, window_width: usize, window_height: usize) -> f64 {
        match self {
            BeamProfile::Flat { intensity } => *intensity,
            BeamProfile::Polynomial { coeffs } => {
                let u = if window_width > 1 { x as f64 / (window_width - 1) as f64 } else { 0.0 };
                let v = if window_height > 1 { y as f64 / (window_height - 1) as f64 } else { 0.0 };
                let mut acc = 0.0;
                for (a, row) in coeffs.iter().enumerate() {
                    for (b, &c) in row.iter().enumerate() {
                        acc += c * u.powi(a as i32) * v.powi(b as i32);
                    }
                }
                acc
            }
        }
    }
}

/// Beam description for capture and simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub profile: BeamProfile,
    /// Nominal storage-ring current, mA.
    pub ring_current_ma: f64,
    /// Optional per-pattern ring current readings overriding the nominal
    /// value, used to exercise flux correction.
    pub ring_current_series_ma: Option<Vec<f64>>,
}

impl Default for BeamModel {
    fn default() -> Self {
        BeamModel {
            profile: BeamProfile::Flat { intensity: 1.0 },
            ring_current_ma: FLUX_REFERENCE_MA,
            ring_current_series_ma: None,
        }
    }
}

impl BeamModel {
    fn ring_current_for(&self, k: usize) -> f64 {
        match &self.ring_current_series_ma {
            Some(series) => series[k],
            None => self.ring_current_ma,
        }
    }

    /// Beam intensity sampled over a window, validated positive.
    pub fn sampled_profile(&self, window_width: usize, window_height: usize) -> Result<Grid> {
        let grid = Grid::from_fn(window_width, window_height, |x, y| {
            self.profile.intensity_at(x, y, window_width, window_height)
        });
        if !(grid.min() > 0.0) {
            return Err(Error::validation("beam: intensity profile must be positive over the window"));
        }
        Ok(grid)
    }
}

/// The mean-corrected pattern matrix plus everything needed to undo the
/// corrections: per-pattern spatial means, the normalization constant, and
/// the geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationEnsemble {
    /// Dense matrix, one mean-corrected vectorized pattern per column.
    pub matrix: ColMatrix,
    /// Spatial means removed from each column, in normalized-count units.
    pub pattern_means: Vec<f64>,
    pub geometry: WindowGeometry,
    /// Maximum flux-corrected count used for relative normalization.
    pub normalization_max: f64,
    pub flux_reference_ma: f64,
}

impl IlluminationEnsemble {
    pub fn window_pixels(&self) -> usize {
        self.geometry.window_width * self.geometry.window_height
    }
}

/// Scale counts from the ring current they were measured at to the reference
/// current.
pub fn flux_correct(counts: &Grid, ring_current_ma: f64, reference_ma: f64) -> Result<Grid> {
    if !(ring_current_ma > 0.0) {
        return Err(Error::validation(format!(
            "ringCurrentMa: must be positive, got {ring_current_ma}"
        )));
    }
    let factor = reference_ma / ring_current_ma;
    Ok(counts.map(|v| v * factor))
}

/// The window view of a mask at one offset (bounds must have been validated).
pub fn windowed_view(mask: &MaskField, window_width: usize, window_height: usize, (dx, dy): (i64, i64)) -> Grid {
    Grid::from_fn(window_width, window_height, |x, y| {
        mask.transmission(x + dx as usize, y + dy as usize)
    })
}

/// Capture the full ensemble: for each offset, window the mask, apply the
/// beam, flux-correct to the reference current, normalize all patterns by the
/// global maximum count, then mean-correct and collate into the matrix.
pub fn capture_ensemble(mask: &MaskField, geometry: &WindowGeometry, beam: &BeamModel) -> Result<IlluminationEnsemble> {
    geometry.validate(mask)?;
    if let Some(series) = &beam.ring_current_series_ma {
        if series.len() != geometry.offsets.len() {
            return Err(Error::validation(format!(
                "ringCurrentSeriesMa: {} readings for {} offsets",
                series.len(),
                geometry.offsets.len()
            )));
        }
    }
    let beam_grid = beam.sampled_profile(geometry.window_width, geometry.window_height)?;

    // raw counts at the measured ring current, then corrected to the reference
    let mut patterns: Vec<Grid> = Vec::with_capacity(geometry.offsets.len());
    for (k, &offset) in geometry.offsets.iter().enumerate() {
        let view = windowed_view(mask, geometry.window_width, geometry.window_height, offset);
        let ring = beam.ring_current_for(k);
        if !(ring > 0.0) {
            return Err(Error::validation(format!("ringCurrentMa: must be positive, got {ring}")));
        }
        let raw = Grid::from_fn(geometry.window_width, geometry.window_height, |x, y| {
            view.get(x, y) * beam_grid.get(x, y) * (ring / FLUX_REFERENCE_MA)
        });
        patterns.push(flux_correct(&raw, ring, FLUX_REFERENCE_MA)?);
    }

    let normalization_max = patterns.iter().map(|p| p.max()).fold(f64::NEG_INFINITY, f64::max);
    if !(normalization_max > 0.0) {
        return Err(Error::validation("mask: every captured pattern is zero; cannot normalize"));
    }

    let rows = geometry.window_width * geometry.window_height;
    let mut data = Vec::with_capacity(rows * patterns.len());
    let mut pattern_means = Vec::with_capacity(patterns.len());
    for pattern in &patterns {
        let normalized: Vec<f64> = pattern.values().iter().map(|v| v / normalization_max).collect();
        let mean = normalized.iter().sum::<f64>() / rows as f64;
        pattern_means.push(mean);
        data.extend(normalized.iter().map(|v| v - mean));
    }

    Ok(IlluminationEnsemble {
        matrix: ColMatrix::from_raw(rows, pattern_means.len(), data)?,
        pattern_means,
        geometry: geometry.clone(),
        normalization_max,
        flux_reference_ma: FLUX_REFERENCE_MA,
    })
}
