//! Frequency-domain helpers: 2D FFT, circular convolution, spectral filtering,
//! and power-spectrum diagnostics.
//!
//! Frequencies follow the standard discrete-transform layout: bin `i` of an
//! `n`-point axis carries `i` cycles per grid for `i <= n/2` and `i - n`
//! otherwise.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::Grid;

/// Signed frequency (cycles per grid) of bin `i` on an `n`-point axis.
#[inline]
pub fn bin_frequency(i: usize, n: usize) -> f64 {
    if i <= n / 2 {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

fn fft2_inplace(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse { planner.plan_fft_inverse(width) } else { planner.plan_fft_forward(width) };
    let col_fft = if inverse { planner.plan_fft_inverse(height) } else { planner.plan_fft_forward(height) };

    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            column[y] = data[y * width + x];
        }
        col_fft.process(&mut column);
        for y in 0..height {
            data[y * width + x] = column[y];
        }
    }
    if inverse {
        let scale = 1.0 / (width * height) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward 2D FFT of a real grid.
pub fn fft2(grid: &Grid) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = grid.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_inplace(&mut data, grid.width(), grid.height(), false);
    data
}

/// Inverse 2D FFT, keeping the real part.
pub fn ifft2_real(mut data: Vec<Complex64>, width: usize, height: usize) -> Grid {
    fft2_inplace(&mut data, width, height, true);
    Grid::from_vec(width, height, data.into_iter().map(|c| c.re).collect()).expect("size preserved")
}

/// Circular (periodic-boundary) convolution of `grid` with `kernel`, both on
/// the same lattice, evaluated in the frequency domain.
pub fn circular_convolve(grid: &Grid, kernel: &Grid) -> Grid {
    assert_eq!(grid.width(), kernel.width());
    assert_eq!(grid.height(), kernel.height());
    let mut a = fft2(grid);
    let b = fft2(kernel);
    for (x, y) in a.iter_mut().zip(b) {
        *x *= y;
    }
    ifft2_real(a, grid.width(), grid.height())
}

/// Multiply the spectrum of `grid` by a real frequency-domain filter laid out
/// in DFT bin order, then transform back.
pub fn apply_spectral_filter(grid: &Grid, filter: &Grid) -> Grid {
    assert_eq!(grid.width(), filter.width());
    assert_eq!(grid.height(), filter.height());
    let mut a = fft2(grid);
    for (x, &h) in a.iter_mut().zip(filter.values()) {
        *x *= h;
    }
    ifft2_real(a, grid.width(), grid.height())
}

/// Periodic autocovariance of a grid (mean removed), normalized per pixel so
/// that lag (0, 0) equals the sample variance.
pub fn autocovariance(grid: &Grid) -> Grid {
    let mean = grid.mean();
    let centered = grid.map(|v| v - mean);
    let spec = fft2(&centered);
    let n = grid.len() as f64;
    let power: Vec<Complex64> = spec.iter().map(|c| Complex64::new(c.norm_sqr() / n / n, 0.0)).collect();
    ifft2_real(power, grid.width(), grid.height())
}

/// Full width at half maximum of an autocovariance peak at lag (0, 0),
/// measured along the two axes (averaged profile) with linear interpolation
/// at the half-maximum crossing.
pub fn autocovariance_fwhm(autocov: &Grid) -> Option<f64> {
    let peak = autocov.get(0, 0);
    if peak <= 0.0 {
        return None;
    }
    let half = peak / 2.0;
    let n = autocov.width().min(autocov.height()) / 2;
    let profile: Vec<f64> =
        (0..n).map(|r| 0.5 * (autocov.get(r, 0) + autocov.get(0, r))).collect();
    for r in 1..profile.len() {
        if profile[r] < half {
            let (v0, v1) = (profile[r - 1], profile[r]);
            let frac = (v0 - half) / (v0 - v1);
            return Some(2.0 * ((r - 1) as f64 + frac));
        }
    }
    None
}

/// Radially averaged power spectrum: mean |F|^2 over integer-|k| annuli,
/// returned as (|k| in cycles per grid, mean power), excluding the DC bin.
pub fn radial_power_spectrum(grid: &Grid) -> Vec<(f64, f64)> {
    let (w, h) = (grid.width(), grid.height());
    let mean = grid.mean();
    let centered = grid.map(|v| v - mean);
    let spec = fft2(&centered);
    let max_k = (w.min(h) / 2) as usize;
    let mut sums = vec![0.0; max_k + 1];
    let mut counts = vec![0usize; max_k + 1];
    for y in 0..h {
        let ky = bin_frequency(y, h);
        for x in 0..w {
            let kx = bin_frequency(x, w);
            let k = (kx * kx + ky * ky).sqrt();
            let bin = k.round() as usize;
            if bin == 0 || bin > max_k {
                continue;
            }
            sums[bin] += spec[y * w + x].norm_sqr();
            counts[bin] += 1;
        }
    }
    (1..=max_k)
        .filter(|&b| counts[b] > 0)
        .map(|b| (b as f64, sums[b] / counts[b] as f64))
        .collect()
}

/// Least-squares slope of log(power) against log(|k|) over `k_min..=k_max`.
pub fn log_log_slope(spectrum: &[(f64, f64)], k_min: f64, k_max: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = spectrum
        .iter()
        .filter(|&&(k, p)| k >= k_min && k <= k_max && p > 0.0)
        .map(|&(k, p)| (k.ln(), p.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_frequency_layout() {
        assert_eq!(bin_frequency(0, 8), 0.0);
        assert_eq!(bin_frequency(1, 8), 1.0);
        assert_eq!(bin_frequency(4, 8), 4.0);
        assert_eq!(bin_frequency(5, 8), -3.0);
        assert_eq!(bin_frequency(7, 8), -1.0);
    }

    #[test]
    fn fft_round_trip() {
        let g = Grid::from_fn(6, 5, |x, y| (x * 7 + y * 3) as f64 * 0.1 - 1.0);
        let back = ifft2_real(fft2(&g), 6, 5);
        for (a, b) in g.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_with_delta_is_identity() {
        let g = Grid::from_fn(8, 8, |x, y| ((x * 13 + y * 5) % 7) as f64);
        let mut delta = Grid::zeros(8, 8);
        delta.set(0, 0, 1.0);
        let out = circular_convolve(&g, &delta);
        for (a, b) in g.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn convolution_wraps_circularly() {
        // shifting delta by one pixel rotates the image with wraparound
        let g = Grid::from_fn(4, 1, |x, _| x as f64);
        let mut delta = Grid::zeros(4, 1);
        delta.set(1, 0, 1.0);
        let out = circular_convolve(&g, &delta);
        let expect = [3.0, 0.0, 1.0, 2.0];
        for (a, b) in expect.iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn autocovariance_peak_is_variance() {
        let g = Grid::from_fn(16, 16, |x, y| if (x + y) % 3 == 0 { 1.0 } else { 0.0 });
        let ac = autocovariance(&g);
        let mean = g.mean();
        let var = g.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / g.len() as f64;
        assert!((ac.get(0, 0) - var).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = (1..50).map(|k| (k as f64, (k as f64).powf(-2.0))).collect();
        let s = log_log_slope(&pts, 2.0, 40.0).unwrap();
        assert!((s + 2.0).abs() < 1e-9);
    }
}
