//! Discrete Fourier plumbing shared by the spectral differentiation and the
//! free propagator. All transforms follow the continuum convention
//! f̂(ξ) = ∫ e^{−2πi x·ξ} f(x) dx, so a forward transform of grid samples must
//! be scaled by h^d and carries the phase of the leftmost node.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Unnormalized in-place DFT (what rustfft provides), forward direction.
pub(crate) fn dft_forward(values: &mut [Complex64]) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(values.len());
    fft.process(values);
}

/// Unnormalized inverse DFT followed by the 1/N normalization, so that
/// `dft_inverse(dft_forward(v)) == v`.
pub(crate) fn dft_inverse(values: &mut [Complex64]) {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    fft.process(values);
    let scale = 1.0 / n as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }
}

/// Row-column 2D DFT on a row-major square array, forward direction.
pub(crate) fn dft2_forward(values: &mut [Complex64], n: usize) {
    assert_eq!(values.len(), n * n);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    for row in values.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = values[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            values[i * n + j] = col[i];
        }
    }
}

pub(crate) fn dft2_inverse(values: &mut [Complex64], n: usize) {
    assert_eq!(values.len(), n * n);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    for row in values.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex64::default(); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = values[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            values[i * n + j] = col[i];
        }
    }
    let scale = 1.0 / (n * n) as f64;
    for v in values.iter_mut() {
        *v *= scale;
    }
}

/// FFT bin frequencies for N samples with spacing h: k/(N h) for k < N/2,
/// negative branch afterwards. Matches the layout of `dft_forward` output.
pub(crate) fn frequencies(n: usize, h: f64) -> Vec<f64> {
    let span = n as f64 * h;
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as isize
            } else {
                k as isize - n as isize
            };
            k as f64 / span
        })
        .collect()
}

/// Spectral derivative multipliers 2πiξ with the Nyquist bin zeroed.
///
/// The Nyquist mode of an even-length grid has no symmetric partner; leaving
/// it in makes the derivative of a real field complex at the 1e−6 level.
pub(crate) fn derivative_symbol(n: usize, h: f64) -> Vec<Complex64> {
    let mut sym: Vec<Complex64> = frequencies(n, h)
        .iter()
        .map(|&xi| Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi))
        .collect();
    if n % 2 == 0 {
        sym[n / 2] = Complex64::default();
    }
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn forward_inverse_roundtrip() {
        let mut v: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let orig = v.clone();
        dft_forward(&mut v);
        dft_inverse(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-13);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn frequency_layout_matches_single_mode() {
        // A pure mode e^{2πi k0 x / span} lands in exactly bin k0.
        let n = 32;
        let h = 0.25;
        let span = n as f64 * h;
        let k0 = 5;
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k0 as f64 * x / span)
            })
            .collect();
        dft_forward(&mut v);
        let freqs = frequencies(n, h);
        for (k, val) in v.iter().enumerate() {
            let expect = if (freqs[k] - k0 as f64 / span).abs() < 1e-12 {
                n as f64
            } else {
                0.0
            };
            assert_abs_diff_eq!(val.norm(), expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_dimensional_roundtrip() {
        let n = 16;
        let mut v: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.7).cos()))
            .collect();
        let orig = v.clone();
        dft2_forward(&mut v, n);
        dft2_inverse(&mut v, n);
        for (a, b) in v.iter().zip(&orig) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }
}
