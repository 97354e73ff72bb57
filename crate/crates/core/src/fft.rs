//! Thin helpers over rustfft. Forward transforms use `exp(-i 2 pi k n / N)`;
//! the inverse is normalized by `1 / N`.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn forward(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

pub(crate) fn inverse(buf: &mut [Complex64]) {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(buf);
    let s = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= s;
    }
}

/// Signed frequency of FFT bin `k` for `n` samples spaced `dt`.
#[inline]
pub(crate) fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let k = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    k / (n as f64 * dt)
}
