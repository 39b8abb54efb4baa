//! Frequency-domain filtering against spatial and analytic oracles.

mod common;

use rand::Rng;

use phasecell::optics::{
    inverse_filter, obscured_airy, psf, Kernel, OpticsParams,
};

use common::*;

/// Round-trip error must not increase as the regularizer shrinks on a
/// well-conditioned kernel.
#[test]
fn inverse_filter_error_is_monotone_in_regularizer() {
    let airy = obscured_airy(&OpticsParams::default()).unwrap();
    let kernel = Kernel::axpy(&Kernel::delta(airy.size()).unwrap(), 0.1, &airy).unwrap();
    let mut r = rng(11);
    let img = random_frame(&mut r, 48, 48, 0.0, 1.0);
    let margin = kernel.radius();
    let (pw, ph) = (48 + 2 * margin, 48 + 2 * margin);
    let blurred = phasecell::optics::convolve_freq(&img, &kernel).unwrap();

    let mut errors = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let inv = inverse_filter(&kernel, pw, ph, eps).unwrap();
        let restored = inv.apply(&blurred).unwrap();
        let num: f64 = restored
            .as_slice()
            .iter()
            .zip(img.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = img.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        errors.push(num / den);
    }
    assert!(
        errors[0] >= errors[1] - 1e-12 && errors[1] >= errors[2] - 1e-12,
        "errors not monotone: {errors:?}"
    );
}

/// Restoring a stamped PSF recovers a peak at the stamp for every
/// well-conditioned bank phase (those with a delta component).
#[test]
fn stamped_psf_restores_to_its_location() {
    let params = OpticsParams::default();
    let airy = obscured_airy(&params).unwrap();
    let (cx, cy) = (20usize, 14usize);
    for m in [2usize, 3, 4] {
        let theta = params.phase(m);
        let kernel = psf(theta, &airy, params.zeta_p);
        let mut point = phasecell::image::Frame::zeros(40, 40);
        point.set(cx, cy, 1.0);
        let stamped = phasecell::optics::convolve_freq(&point, &kernel).unwrap();
        let margin = kernel.radius();
        let inv = inverse_filter(&kernel, 40 + 2 * margin, 40 + 2 * margin, 1e-3).unwrap();
        let back = inv.apply(&stamped).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut at = (0usize, 0usize);
        for y in 0..40 {
            for x in 0..40 {
                if back.get(x, y) > best {
                    best = back.get(x, y);
                    at = (x, y);
                }
            }
        }
        let dist =
            (((at.0 as f64) - cx as f64).powi(2) + ((at.1 as f64) - cy as f64).powi(2)).sqrt();
        assert!(dist <= 1.0, "phase {m}: peak at {at:?}, stamp at ({cx}, {cy})");
    }
}

/// The FFT path must match the naive sliding window on non-square frames
/// and even-odd mixes of sizes, not just the acceptance 16x16 case.
#[test]
fn fft_matches_spatial_on_assorted_shapes() {
    let mut r = rng(12);
    for &(w, h, k) in &[(9usize, 13usize, 3usize), (12, 8, 5), (20, 7, 7)] {
        let img = random_frame(&mut r, w, h, -1.0, 1.0);
        let taps: Vec<f64> = (0..k * k).map(|_| r.random_range(-0.4..0.4)).collect();
        let kernel = Kernel::new(k, taps).unwrap();
        let freq = phasecell::optics::convolve_freq(&img, &kernel).unwrap();
        let naive = spatial_convolve(&img, &kernel);
        for (a, b) in freq.as_slice().iter().zip(naive.as_slice()) {
            assert!((a - b).abs() <= 1e-8, "{w}x{h} k={k}: {a} vs {b}");
        }
    }
}
