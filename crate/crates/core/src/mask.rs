//! Procedural generation of binary ghost-projection masks.
//!
//! Five classes are supported, all deterministic in the spec (including its
//! seed):
//!
//! * random binary — an i.i.d. fair coin per plaquette;
//! * Gaussian-smoothed — coin noise convolved with a Gaussian and re-binarized;
//! * Lorentzian-smoothed — as above with a Lorentzian kernel;
//! * random fractal — coin noise filtered in frequency space by a power-law
//!   kernel and re-binarized;
//! * Legendre — a p x p quadratic-residue pattern whose mean-corrected cyclic
//!   translates are mutually near-orthogonal.
//!
//! Smoothing and filtering happen at plaquette resolution with periodic
//! boundaries; the plaquette grid is then expanded so each logical cell covers
//! `feature_size_px` x `feature_size_px` mask pixels. Binarization thresholds
//! at the sample median, which pins the duty cycle near 50% and maximizes
//! pattern variance.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::{stream, CounterRng};
use crate::spectral;

/// Default physical pixel pitch recorded on generated masks, matching common
/// photon-counting detectors.
pub const DEFAULT_PIXEL_PITCH_UM: f64 = 55.0;

/// Mask class and its class-specific parameters.
///
/// Lengths (`sigma`, `gamma`) are in mask pixels; the generator converts them
/// to plaquette units internally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskClass {
    RandomBinary,
    /// Gaussian smoothing of standard deviation `sigma` px
    /// (FWHM = 2 sqrt(2 ln 2) sigma).
    GaussianSmoothed { sigma: f64 },
    /// Lorentzian smoothing of half-width `gamma` px (FWHM = 2 gamma).
    LorentzianSmoothed { gamma: f64 },
    /// Power-law spectral filter 1 / ((kx^2 + ky^2)^(alpha/2) + beta).
    RandomFractal { alpha: f64, beta: f64 },
    /// Quadratic-residue pattern for an odd prime `p`.
    Legendre { p: u64 },
}

impl MaskClass {
    pub fn name(&self) -> &'static str {
        match self {
            MaskClass::RandomBinary => "random-binary",
            MaskClass::GaussianSmoothed { .. } => "gaussian",
            MaskClass::LorentzianSmoothed { .. } => "lorentzian",
            MaskClass::RandomFractal { .. } => "fractal",
            MaskClass::Legendre { .. } => "legendre",
        }
    }

    fn stream_tag(&self) -> u64 {
        match self {
            MaskClass::RandomBinary => stream::MASK_RANDOM_BINARY,
            MaskClass::GaussianSmoothed { .. } => stream::MASK_GAUSSIAN,
            MaskClass::LorentzianSmoothed { .. } => stream::MASK_LORENTZIAN,
            MaskClass::RandomFractal { .. } => stream::MASK_FRACTAL,
            MaskClass::Legendre { .. } => 0,
        }
    }
}

/// Full recipe for one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSpec {
    pub class: MaskClass,
    /// Mask width in pixels; a multiple of `feature_size_px`.
    pub width: usize,
    /// Mask height in pixels; a multiple of `feature_size_px`.
    pub height: usize,
    /// Side of one logical plaquette in pixels.
    pub feature_size_px: usize,
    pub transmission_low: f64,
    pub transmission_high: f64,
    pub seed: u64,
}

impl MaskSpec {
    pub fn validate(&self) -> Result<()> {
        if self.feature_size_px == 0 {
            return Err(Error::validation("featureSizePx: must be positive"));
        }
        if self.width == 0 || self.width % self.feature_size_px != 0 {
            return Err(Error::validation(format!(
                "width: {} is not a positive multiple of featureSizePx {}",
                self.width, self.feature_size_px
            )));
        }
        if self.height == 0 || self.height % self.feature_size_px != 0 {
            return Err(Error::validation(format!(
                "height: {} is not a positive multiple of featureSizePx {}",
                self.height, self.feature_size_px
            )));
        }
        if !(0.0..=1.0).contains(&self.transmission_low)
            || !(0.0..=1.0).contains(&self.transmission_high)
            || self.transmission_low >= self.transmission_high
        {
            return Err(Error::validation(format!(
                "transmissionLow/transmissionHigh: need 0 <= low < high <= 1, got {} and {}",
                self.transmission_low, self.transmission_high
            )));
        }
        match self.class {
            MaskClass::GaussianSmoothed { sigma } if !(sigma > 0.0) => {
                Err(Error::validation(format!("sigma: must be positive, got {sigma}")))
            }
            MaskClass::LorentzianSmoothed { gamma } if !(gamma > 0.0) => {
                Err(Error::validation(format!("gamma: must be positive, got {gamma}")))
            }
            MaskClass::RandomFractal { alpha, beta } if !(alpha >= 0.0) || !(beta >= 0.0) => {
                Err(Error::validation("alpha/beta: must be nonnegative".to_string()))
            }
            MaskClass::Legendre { p } => {
                if p < 3 || p % 2 == 0 || !is_prime(p) {
                    return Err(Error::validation(format!("p: must be an odd prime, got {p}")));
                }
                let side = p as usize * self.feature_size_px;
                if self.width != side || self.height != side {
                    return Err(Error::validation(format!(
                        "width/height: Legendre mask must be {side}x{side} (p * featureSizePx)"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Plaquette-grid dimensions (width, height).
    fn plaquette_dims(&self) -> (usize, usize) {
        (self.width / self.feature_size_px, self.height / self.feature_size_px)
    }
}

/// A generated or imported mask: a full transmission map in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskField {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_um: f64,
    pub values: Grid,
    /// Recipe that produced the mask; `None` for imported masks.
    pub spec: Option<MaskSpec>,
}

impl MaskField {
    #[inline]
    pub fn transmission(&self, x: usize, y: usize) -> f64 {
        self.values.get(x, y)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Legendre symbol (a | p) in {-1, 0, +1} for an odd prime p.
pub fn legendre_symbol(a: i64, p: u64) -> i32 {
    let p_i = p as i64;
    let a = a.rem_euclid(p_i) as u64;
    if a == 0 {
        return 0;
    }
    // Euler's criterion: a^((p-1)/2) mod p
    let mut base = a % p;
    let mut exp = (p - 1) / 2;
    let mut acc: u64 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    if acc == 1 {
        1
    } else {
        -1
    }
}

/// Threshold a grid into the two transmission levels: strictly greater than
/// `threshold` maps high, ties and below map low.
pub fn binarize(field: &Grid, threshold: f64, low: f64, high: f64) -> Grid {
    field.map(|v| if v > threshold { high } else { low })
}

/// Sample median (average of the two central order statistics for even n).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in mask fields"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Power-law frequency filter H(kx, ky) = 1 / ((kx^2 + ky^2)^(alpha/2) + beta)
/// in DFT bin layout, with kx and ky in cycles per grid.
///
/// For beta = 0 the zero-frequency bin is set to 0 (the filtered field is
/// mean-free; binarization re-imposes a mean anyway), otherwise it is 1/beta.
pub fn fractal_kernel(width: usize, height: usize, alpha: f64, beta: f64) -> Grid {
    Grid::from_fn(width, height, |x, y| {
        let kx = spectral::bin_frequency(x, width);
        let ky = spectral::bin_frequency(y, height);
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            if beta > 0.0 {
                1.0 / beta
            } else {
                0.0
            }
        } else {
            1.0 / (k2.powf(alpha / 2.0) + beta)
        }
    })
}

/// Coin-flip grid in {0, 1} at plaquette resolution, drawn row-major from the
/// stream keyed by (seed, class tag).
fn coin_grid(width: usize, height: usize, seed: u64, tag: u64) -> Grid {
    let mut rng = CounterRng::from_stream(seed, tag);
    Grid::from_fn(width, height, |_, _| if rng.next_bool() { 1.0 } else { 0.0 })
}

/// Squared torus distance from the origin, in plaquette units.
fn torus_dist2(x: usize, y: usize, width: usize, height: usize) -> f64 {
    let dx = x.min(width - x) as f64;
    let dy = y.min(height - y) as f64;
    dx * dx + dy * dy
}

fn gaussian_kernel(width: usize, height: usize, sigma: f64) -> Grid {
    let mut k = Grid::from_fn(width, height, |x, y| {
        (-torus_dist2(x, y, width, height) / (2.0 * sigma * sigma)).exp()
    });
    let sum: f64 = k.values().iter().sum();
    k.scale(1.0 / sum);
    k
}

fn lorentzian_kernel(width: usize, height: usize, gamma: f64) -> Grid {
    let mut k = Grid::from_fn(width, height, |x, y| {
        1.0 / (1.0 + torus_dist2(x, y, width, height) / (gamma * gamma))
    });
    let sum: f64 = k.values().iter().sum();
    k.scale(1.0 / sum);
    k
}

/// The real-valued plaquette-resolution field of a smoothed or fractal class
/// before median binarization. Useful for spectrum and correlation-length
/// diagnostics.
pub fn pre_binarization_field(spec: &MaskSpec) -> Result<Grid> {
    spec.validate()?;
    let (pw, ph) = spec.plaquette_dims();
    let f = spec.feature_size_px as f64;
    match spec.class {
        MaskClass::GaussianSmoothed { sigma } => {
            let noise = coin_grid(pw, ph, spec.seed, spec.class.stream_tag());
            Ok(spectral::circular_convolve(&noise, &gaussian_kernel(pw, ph, sigma / f)))
        }
        MaskClass::LorentzianSmoothed { gamma } => {
            let noise = coin_grid(pw, ph, spec.seed, spec.class.stream_tag());
            Ok(spectral::circular_convolve(&noise, &lorentzian_kernel(pw, ph, gamma / f)))
        }
        MaskClass::RandomFractal { alpha, beta } => {
            let noise = coin_grid(pw, ph, spec.seed, spec.class.stream_tag());
            Ok(spectral::apply_spectral_filter(&noise, &fractal_kernel(pw, ph, alpha, beta)))
        }
        _ => Err(Error::validation(
            "class: pre-binarization fields exist only for smoothed and fractal classes".to_string(),
        )),
    }
}

/// p x p quadratic-residue pattern in {0, 1}: cell (i, j) is high when the
/// Legendre symbols of i and j agree and neither is zero. The mean-corrected
/// pattern has near-delta periodic autocorrelation for every odd prime, so
/// all nontrivial cyclic translates are close to orthogonal.
fn legendre_plaquettes(p: u64) -> Grid {
    let n = p as usize;
    let symbols: Vec<i32> = (0..n).map(|x| legendre_symbol(x as i64, p)).collect();
    Grid::from_fn(n, n, |x, y| {
        if symbols[x] * symbols[y] == 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Expand a plaquette grid so each cell becomes an f x f pixel block.
fn expand_plaquettes(plaquettes: &Grid, f: usize) -> Grid {
    if f == 1 {
        return plaquettes.clone();
    }
    Grid::from_fn(plaquettes.width() * f, plaquettes.height() * f, |x, y| {
        plaquettes.get(x / f, y / f)
    })
}

/// Generate a mask from its spec. Deterministic: identical specs (including
/// the seed) produce bit-identical fields.
pub fn generate_mask(spec: &MaskSpec) -> Result<MaskField> {
    spec.validate()?;
    let (pw, ph) = spec.plaquette_dims();
    let (low, high) = (spec.transmission_low, spec.transmission_high);
    let plaquettes = match spec.class {
        MaskClass::RandomBinary => {
            let coins = coin_grid(pw, ph, spec.seed, spec.class.stream_tag());
            coins.map(|c| if c == 1.0 { high } else { low })
        }
        MaskClass::GaussianSmoothed { .. }
        | MaskClass::LorentzianSmoothed { .. }
        | MaskClass::RandomFractal { .. } => {
            let field = pre_binarization_field(spec)?;
            let threshold = median(field.values());
            binarize(&field, threshold, low, high)
        }
        MaskClass::Legendre { .. } => {
            let MaskClass::Legendre { p } = spec.class else { unreachable!() };
            legendre_plaquettes(p).map(|c| if c == 1.0 { high } else { low })
        }
    };
    Ok(MaskField {
        width: spec.width,
        height: spec.height,
        pixel_pitch_um: DEFAULT_PIXEL_PITCH_UM,
        values: expand_plaquettes(&plaquettes, spec.feature_size_px),
        spec: Some(spec.clone()),
    })
}
