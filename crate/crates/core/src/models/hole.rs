//! HolE: holographic embeddings, `score = r · (h ⋆ t)` where `⋆` is
//! circular correlation, `[a ⋆ b]_k = sum_i a_i b_{(i+k) mod d}`.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::dot;

/// Dimension from which [`correlate`] switches to the transform path.
pub const FFT_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub head: Vec<f64>,
    pub relation: Vec<f64>,
    pub tail: Vec<f64>,
}

/// Direct O(d²) circular correlation. This is the reference definition.
pub fn circular_correlation(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    (0..d).map(|k| (0..d).map(|i| a[i] * b[(i + k) % d]).sum()).collect()
}

/// `[a * b]_k = sum_i a_i b_{(k-i) mod d}`.
pub fn circular_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let d = a.len();
    (0..d)
        .map(|k| (0..d).map(|i| a[i] * b[(k + d - i) % d]).sum())
        .collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn spectra(a: &[f64], b: &[f64], conj_a: bool) -> Vec<f64> {
    let d = a.len();
    if d == 0 {
        return Vec::new();
    }
    let (fwd, inv) = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(d), p.plan_fft_inverse(d))
    });
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| if conj_a { x.conj() * y } else { x * y })
        .collect();
    inv.process(&mut prod);
    let scale = 1.0 / d as f64;
    prod.iter().map(|c| c.re * scale).collect()
}

/// O(d log d) correlation through `ifft(conj(fft(a)) ⊙ fft(b))`.
pub fn circular_correlation_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    spectra(a, b, true)
}

/// O(d log d) convolution through `ifft(fft(a) ⊙ fft(b))`.
pub fn circular_convolution_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    spectra(a, b, false)
}

/// Correlation using whichever path suits the dimension.
pub fn correlate(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.len() >= FFT_THRESHOLD {
        circular_correlation_fft(a, b)
    } else {
        circular_correlation(a, b)
    }
}

/// Convolution using whichever path suits the dimension.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.len() >= FFT_THRESHOLD {
        circular_convolution_fft(a, b)
    } else {
        circular_convolution(a, b)
    }
}

pub fn score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    dot(r, &correlate(h, t))
}

/// `d/dr = h ⋆ t`, `d/dh = r ⋆ t`, `d/dt = r * h` (convolution).
pub fn grad(h: &[f64], r: &[f64], t: &[f64]) -> TripleGrad {
    TripleGrad {
        head: correlate(r, t),
        relation: correlate(h, t),
        tail: convolve(r, h),
    }
}
