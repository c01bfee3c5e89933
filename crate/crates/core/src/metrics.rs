//! Fidelity scoring of an accumulated exposure against its target.
//!
//! The signal-to-noise ratio compares the pedestal-subtracted projection P',
//! rescaled to the target's power, against the target I:
//!
//! ```text
//! Var[P'] = E[(P' * sqrt(E[I^2] / E[P'^2]) - I)^2]
//! SNR     = sqrt(E[I^2] / Var[P'])
//! ```
//!
//! with expectations taken as uniform averages over window pixels. The
//! rescaling factor cancels any positive gain applied to P, and the pedestal
//! subtraction cancels any constant offset, so the score is invariant under
//! P -> c P + d for c > 0.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::planner::TargetPattern;

/// SNR value; `Unbounded` marks an exact (zero-variance) reproduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Finite(f64),
    Unbounded,
}

impl Snr {
    pub fn is_at_least(&self, bound: f64) -> bool {
        match self {
            Snr::Finite(v) => *v >= bound,
            Snr::Unbounded => true,
        }
    }

    /// Finite value, or +inf for `Unbounded`.
    pub fn as_f64(&self) -> f64 {
        match self {
            Snr::Finite(v) => *v,
            Snr::Unbounded => f64::INFINITY,
        }
    }

    pub fn from_f64(v: f64) -> Self {
        if v.is_infinite() {
            Snr::Unbounded
        } else {
            Snr::Finite(v)
        }
    }
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Finite(v) => write!(f, "{v}"),
            Snr::Unbounded => write!(f, "inf"),
        }
    }
}

/// Quality of a projection relative to its target.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub snr: Snr,
    /// Spatial mean of the raw projection, in counts.
    pub pedestal_measured: f64,
    /// Var[P'] of the SNR formula.
    pub variance: f64,
    /// (max - min of the rescaled P') / (max + min of P).
    pub contrast: f64,
    /// Residual norm carried over from planning, when known.
    pub residual_norm: Option<f64>,
}

impl QualityReport {
    pub fn with_residual(mut self, residual_norm: f64) -> Self {
        self.residual_norm = Some(residual_norm);
        self
    }
}

/// Spatial mean of a projection, in counts.
pub fn measure_pedestal(projection: &Grid) -> f64 {
    projection.mean()
}

/// Score a projection against a zero-mean target.
pub fn score_projection(projection: &Grid, target: &TargetPattern) -> Result<QualityReport> {
    if projection.width() != target.window_width || projection.height() != target.window_height {
        return Err(Error::validation(format!(
            "projection: {}x{} does not match target window {}x{}",
            projection.width(),
            projection.height(),
            target.window_width,
            target.window_height
        )));
    }
    let n = projection.len() as f64;
    let pedestal = projection.mean();
    let centered: Vec<f64> = projection.values().iter().map(|v| v - pedestal).collect();
    let e_i2 = target.values.iter().map(|v| v * v).sum::<f64>() / n;
    let e_p2 = centered.iter().map(|v| v * v).sum::<f64>() / n;

    if e_i2 == 0.0 {
        if e_p2 == 0.0 {
            // a flat projection reproduces a zero target exactly
            return Ok(QualityReport {
                snr: Snr::Unbounded,
                pedestal_measured: pedestal,
                variance: 0.0,
                contrast: 0.0,
                residual_norm: None,
            });
        }
        return Err(Error::validation("target: SNR undefined for zero target"));
    }
    if e_p2 == 0.0 {
        // flat projection carries no signal
        return Ok(QualityReport {
            snr: Snr::Finite(0.0),
            pedestal_measured: pedestal,
            variance: e_i2,
            contrast: 0.0,
            residual_norm: None,
        });
    }

    let rescale = (e_i2 / e_p2).sqrt();
    let variance = centered
        .iter()
        .zip(&target.values)
        .map(|(p, i)| {
            let d = p * rescale - i;
            d * d
        })
        .sum::<f64>()
        / n;
    let snr = if variance == 0.0 { Snr::Unbounded } else { Snr::Finite((e_i2 / variance).sqrt()) };

    let rescaled_max = centered.iter().copied().fold(f64::NEG_INFINITY, f64::max) * rescale;
    let rescaled_min = centered.iter().copied().fold(f64::INFINITY, f64::min) * rescale;
    let denom = projection.max() + projection.min();
    let numer = rescaled_max - rescaled_min;
    let contrast = if numer == 0.0 { 0.0 } else { numer / denom };

    Ok(QualityReport { snr, pedestal_measured: pedestal, variance, contrast, residual_norm: None })
}
