//! Whole-frame FFT helpers. Frames are treated as periodic throughout.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    buf
}

pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Inverse FFT including the 1/N normalization.
pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
}

/// Signed frequency of FFT bin `k` for an `n`-point transform at `fs`.
/// The Nyquist bin of even lengths maps to +fs/2.
pub(crate) fn bin_freq(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k <= n_f / 2.0 {
        k * fs / n_f
    } else {
        (k - n_f) * fs / n_f
    }
}

/// Multiplies the spectrum of `x` by `response(f)` and returns the result.
pub(crate) fn filter_freq<F>(x: &[Complex64], fs: f64, response: F) -> Vec<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let n = x.len();
    let mut buf = fft(x);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= response(bin_freq(k, n, fs));
    }
    ifft_in_place(&mut buf);
    buf
}

/// Circular convolution with a real, centre-referenced FIR kernel: the tap at
/// index `taps.len() / 2` sits at delay zero, so symmetric kernels add no
/// group delay.
pub(crate) fn circular_fir(x: &[Complex64], taps: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let mut kernel = vec![Complex64::new(0.0, 0.0); n];
    let centre = taps.len() / 2;
    for (i, &t) in taps.iter().enumerate() {
        let idx = (i as isize - centre as isize).rem_euclid(n as isize) as usize;
        kernel[idx] += t;
    }
    fft_in_place(&mut kernel);
    let mut buf = fft(x);
    buf.iter_mut().zip(&kernel).for_each(|(a, h)| *a *= h);
    ifft_in_place(&mut buf);
    buf
}

pub(crate) fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub(crate) fn wrap_phase(p: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (p + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}
