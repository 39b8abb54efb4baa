//! Planned 2D FFT over row-major complex buffers.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse 2D transform for one fixed grid size. Plans are built once
/// and shared; the transform itself is pure and safe to call concurrently
/// with per-call scratch.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn pass(&self, buf: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(buf.len(), self.width * self.height);
        let row_fft = if inverse { &self.row_inv } else { &self.row_fwd };
        let col_fft = if inverse { &self.col_inv } else { &self.col_fwd };
        let mut scratch = vec![Complex64::default(); row_fft.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(self.width) {
            row_fft.process_with_scratch(row, &mut scratch);
        }
        let mut transposed = transpose(buf, self.width, self.height);
        let mut scratch = vec![Complex64::default(); col_fft.get_inplace_scratch_len()];
        for col in transposed.chunks_exact_mut(self.height) {
            col_fft.process_with_scratch(col, &mut scratch);
        }
        let back = transpose(&transposed, self.height, self.width);
        buf.copy_from_slice(&back);
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.pass(buf, false);
    }

    /// Inverse transform, normalized by `1/(width*height)`, in place.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.pass(buf, true);
        let scale = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

fn transpose(buf: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = buf[y * width + x];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_then_inverse_is_identity() {
        let (w, h) = (12, 7);
        let fft = Fft2::new(w, h);
        let orig: Vec<Complex64> = (0..w * h)
            .map(|i| Complex64::new(((i * 37) % 11) as f64 / 11.0, 0.0))
            .collect();
        let mut buf = orig.clone();
        fft.forward(&mut buf);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a.re - b.re).abs() < 1e-12);
            assert!(a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn dc_bin_is_sum() {
        let (w, h) = (4, 3);
        let fft = Fft2::new(w, h);
        let mut buf: Vec<Complex64> = (0..w * h)
            .map(|i| Complex64::new(i as f64, 0.0))
            .collect();
        let sum: f64 = (0..w * h).map(|i| i as f64).sum();
        fft.forward(&mut buf);
        assert!((buf[0].re - sum).abs() < 1e-9);
        assert!(buf[0].im.abs() < 1e-9);
    }
}
