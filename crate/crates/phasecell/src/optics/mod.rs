//! Diffraction-model kernels and frequency-domain filtering.
//!
//! A phase ring images a point source as an obscured airy pattern; a phase
//! retardation `theta` produces the point spread function
//!
//! ```text
//! PSF(theta) = sin(theta) * delta + (zeta_p * cos(theta) - sin(theta)) * airy
//! ```
//!
//! The bank samples `M` retardations uniformly on `[0, 2pi)`. Restoration
//! applies the regularized inverse of each PSF in the frequency domain:
//! `conj(F) / (|F|^2 + eps)`, a Tikhonov-stabilized realization of `1/F`
//! (plain inversion amplifies noise wherever `|F|` is small).
//!
//! Convolution is circular on a reflectively padded grid (pad `(K-1)/2` per
//! side, mirror without repeating the edge pixel) and cropped back, so
//! constants are preserved and borders avoid wrap-around artifacts.

mod bessel;
mod fft2;

pub use bessel::bessel_j1;
pub use fft2::Fft2;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::Frame;

/// Square convolution kernel with odd support, center tap at
/// `((K-1)/2, (K-1)/2)`, row-major taps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(size: usize, data: Vec<f64>) -> Result<Self> {
        if size % 2 == 0 || size == 0 {
            return Err(Error::param("kernel_size", format!("must be odd (got {size})")));
        }
        if data.len() != size * size {
            return Err(Error::dims(format!(
                "kernel data length {} does not equal {size}x{size}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("kernel taps".into()));
        }
        Ok(Kernel { size, data })
    }

    /// Discrete unit impulse.
    pub fn delta(size: usize) -> Result<Self> {
        let mut k = Kernel::new(size, vec![0.0; size * size])?;
        let c = (size - 1) / 2;
        k.data[c * size + c] = 1.0;
        Ok(k)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn taps(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.size + x]
    }

    pub fn tap_sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Elementwise `a + s * b`.
    pub fn axpy(a: &Kernel, s: f64, b: &Kernel) -> Result<Kernel> {
        if a.size != b.size {
            return Err(Error::dims("kernel sizes differ"));
        }
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x + s * y)
            .collect();
        Kernel::new(a.size, data)
    }

    pub fn scale(&self, s: f64) -> Kernel {
        Kernel {
            size: self.size,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Frequency response on a `pad_w x pad_h` grid: the DFT of the kernel
    /// placed center-at-origin with circular wrap.
    pub fn frequency_response(&self, pad_w: usize, pad_h: usize) -> Result<Vec<Complex64>> {
        if pad_w < self.size || pad_h < self.size {
            return Err(Error::dims(format!(
                "pad grid {pad_w}x{pad_h} smaller than kernel {}",
                self.size
            )));
        }
        let c = self.radius() as isize;
        let mut buf = vec![Complex64::default(); pad_w * pad_h];
        for ty in 0..self.size {
            for tx in 0..self.size {
                let dy = ty as isize - c;
                let dx = tx as isize - c;
                let y = dy.rem_euclid(pad_h as isize) as usize;
                let x = dx.rem_euclid(pad_w as isize) as usize;
                buf[y * pad_w + x] = Complex64::new(self.get(tx, ty), 0.0);
            }
        }
        let fft = Fft2::new(pad_w, pad_h);
        fft.forward(&mut buf);
        Ok(buf)
    }
}

/// Optical model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticsParams {
    /// Number of phase retardations `M` in the bank.
    pub m_phases: usize,
    /// Amplitude attenuation of the phase ring, in `(0, 1]`.
    pub zeta_p: f64,
    /// Outer radius `R` of the annular aperture, cycles/pixel.
    pub airy_outer_radius: f64,
    /// Ring width `W`, `0 < W < R`.
    pub airy_ring_width: f64,
    /// Odd spatial support of the kernels.
    pub kernel_size: usize,
    /// Tikhonov regularizer for the inverse filters.
    pub inv_reg: f64,
}

impl Default for OpticsParams {
    fn default() -> Self {
        OpticsParams {
            m_phases: 8,
            zeta_p: 0.8,
            // The annular profile integrates to ~0 over the plane, so the
            // truncated tap sum changes sign with (R, W, K). These defaults
            // keep it comfortably positive at the default kernel size.
            airy_outer_radius: 0.15,
            airy_ring_width: 0.12,
            kernel_size: 17,
            inv_reg: 1e-2,
        }
    }
}

impl OpticsParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_phases == 0 {
            return Err(Error::param("optics.m_phases", "must be >= 1"));
        }
        if !(self.zeta_p > 0.0 && self.zeta_p <= 1.0) {
            return Err(Error::param("optics.zeta_p", "must lie in (0, 1]"));
        }
        if !(self.airy_outer_radius > 0.0) {
            return Err(Error::param("optics.airy_outer_radius", "must be > 0"));
        }
        if !(self.airy_ring_width > 0.0 && self.airy_ring_width < self.airy_outer_radius) {
            return Err(Error::param(
                "optics.airy_ring_width",
                "must satisfy 0 < W < R",
            ));
        }
        if self.kernel_size % 2 == 0 || self.kernel_size < 3 {
            return Err(Error::param("optics.kernel_size", "must be odd and >= 3"));
        }
        if !(self.inv_reg > 0.0) {
            return Err(Error::param("optics.inv_reg", "must be > 0"));
        }
        Ok(())
    }

    /// Retardation of the 1-based `m`-th bank entry: `2 pi (m-1) / M`.
    pub fn phase(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * (m as f64 - 1.0) / self.m_phases as f64
    }
}

/// Radial profile of an annular aperture of outer radius `r_outer` and ring
/// width `width`: `R J1(2 pi R r)/r - (R-W) J1(2 pi (R-W) r)/r`, with the
/// `r -> 0` limit `pi (R^2 - (R-W)^2)`.
fn annular_profile(r: f64, r_outer: f64, width: f64) -> f64 {
    let inner = r_outer - width;
    if r < 1e-12 {
        std::f64::consts::PI * (r_outer * r_outer - inner * inner)
    } else {
        let two_pi = 2.0 * std::f64::consts::PI;
        (r_outer * bessel_j1(two_pi * r_outer * r) - inner * bessel_j1(two_pi * inner * r)) / r
    }
}

/// Obscured airy pattern sampled on the kernel grid and normalized to unit
/// tap sum.
pub fn obscured_airy(params: &OpticsParams) -> Result<Kernel> {
    params.validate()?;
    let k = params.kernel_size;
    let c = ((k - 1) / 2) as f64;
    let mut data = Vec::with_capacity(k * k);
    for y in 0..k {
        for x in 0..k {
            let dx = x as f64 - c;
            let dy = y as f64 - c;
            let r = (dx * dx + dy * dy).sqrt();
            data.push(annular_profile(
                r,
                params.airy_outer_radius,
                params.airy_ring_width,
            ));
        }
    }
    let sum: f64 = data.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::param(
            "optics.airy_outer_radius",
            format!("airy taps sum to {sum}, expected positive; adjust R/W"),
        ));
    }
    for v in data.iter_mut() {
        *v /= sum;
    }
    Kernel::new(k, data)
}

/// `PSF(theta) = sin(theta) * delta + (zeta_p cos(theta) - sin(theta)) * airy`.
pub fn psf(theta: f64, airy: &Kernel, zeta_p: f64) -> Kernel {
    let (s, c) = theta.sin_cos();
    let mut kernel = airy.scale(zeta_p * c - s);
    let center = kernel.radius() * kernel.size + kernel.radius();
    kernel.data[center] += s;
    kernel
}

/// The `M` point spread functions sharing one airy kernel.
#[derive(Debug, Clone)]
pub struct KernelBank {
    phases: Vec<f64>,
    kernels: Vec<Kernel>,
    airy: Kernel,
    zeta_p: f64,
}

impl KernelBank {
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn airy(&self) -> &Kernel {
        &self.airy
    }

    pub fn zeta_p(&self) -> f64 {
        self.zeta_p
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }
}

/// Build the bank at retardations `theta_m = 2 pi (m-1) / M`.
pub fn psf_bank(params: &OpticsParams) -> Result<KernelBank> {
    params.validate()?;
    let airy = obscured_airy(params)?;
    let phases: Vec<f64> = (1..=params.m_phases).map(|m| params.phase(m)).collect();
    let kernels = phases
        .iter()
        .map(|&theta| psf(theta, &airy, params.zeta_p))
        .collect();
    Ok(KernelBank {
        phases,
        kernels,
        airy,
        zeta_p: params.zeta_p,
    })
}

/// A frequency-domain filter bound to one padded grid size. `margin` is the
/// reflective padding applied to images before the circular convolution.
#[derive(Debug, Clone)]
pub struct FrequencyFilter {
    pad_w: usize,
    pad_h: usize,
    margin: usize,
    response: Vec<Complex64>,
}

impl FrequencyFilter {
    pub fn pad_dims(&self) -> (usize, usize) {
        (self.pad_w, self.pad_h)
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn response(&self) -> &[Complex64] {
        &self.response
    }

    /// Expected image dimensions for [`FrequencyFilter::apply`].
    pub fn image_dims(&self) -> (usize, usize) {
        (self.pad_w - 2 * self.margin, self.pad_h - 2 * self.margin)
    }

    /// Convolve an image with this filter: reflect-pad, multiply in the
    /// frequency domain, crop back.
    pub fn apply(&self, img: &Frame) -> Result<Frame> {
        let fft = Fft2::new(self.pad_w, self.pad_h);
        self.apply_with(img, &fft)
    }

    /// Same as [`FrequencyFilter::apply`] with a caller-provided plan, for
    /// banks that share one grid.
    pub fn apply_with(&self, img: &Frame, fft: &Fft2) -> Result<Frame> {
        let mut buf = padded_spectrum(img, self.margin, self.pad_w, self.pad_h, fft)?;
        for (b, r) in buf.iter_mut().zip(&self.response) {
            *b *= r;
        }
        fft.inverse(&mut buf);
        Ok(crop_real(&buf, self.pad_w, self.margin, img.width(), img.height()))
    }

    /// Spatial taps of the filter on its padded grid, center-shifted so the
    /// tap for zero offset sits at the grid center. Used for inspection and
    /// kernel dumps.
    pub fn to_spatial(&self) -> Frame {
        let mut buf = self.response.clone();
        let fft = Fft2::new(self.pad_w, self.pad_h);
        fft.inverse(&mut buf);
        let (w, h) = (self.pad_w, self.pad_h);
        let (cx, cy) = (w / 2, h / 2);
        let mut data = vec![0.0; w * h];
        for y in 0..h {
            for x in 0..w {
                let sx = (x + w - cx) % w;
                let sy = (y + h - cy) % h;
                data[y * w + x] = buf[sy * w + sx].re;
            }
        }
        Frame::new(w, h, data).expect("finite ifft output")
    }
}

/// Forward filter of a kernel on the padded grid that fits `img_w x img_h`
/// images with margin `(K-1)/2`.
pub fn forward_filter(kernel: &Kernel, pad_w: usize, pad_h: usize) -> Result<FrequencyFilter> {
    let response = kernel.frequency_response(pad_w, pad_h)?;
    Ok(FrequencyFilter {
        pad_w,
        pad_h,
        margin: kernel.radius(),
        response,
    })
}

/// Tikhonov-regularized inverse filter `conj(F) / (|F|^2 + eps_inv)` of a
/// kernel on a `pad_w x pad_h` grid.
pub fn inverse_filter(
    kernel: &Kernel,
    pad_w: usize,
    pad_h: usize,
    eps_inv: f64,
) -> Result<FrequencyFilter> {
    if !(eps_inv > 0.0) {
        return Err(Error::param(
            "eps_inv",
            format!("must be > 0 (got {eps_inv})"),
        ));
    }
    let mut response = kernel.frequency_response(pad_w, pad_h)?;
    for v in response.iter_mut() {
        *v = v.conj() / (v.norm_sqr() + eps_inv);
    }
    Ok(FrequencyFilter {
        pad_w,
        pad_h,
        margin: kernel.radius(),
        response,
    })
}

/// FFT convolution of `img` with `kernel` using reflective boundary padding.
pub fn convolve_freq(img: &Frame, kernel: &Kernel) -> Result<Frame> {
    let margin = kernel.radius();
    let (pad_w, pad_h) = (img.width() + 2 * margin, img.height() + 2 * margin);
    forward_filter(kernel, pad_w, pad_h)?.apply(img)
}

/// Mirror index without repeating the edge sample.
#[inline]
fn reflect(idx: isize, len: usize) -> usize {
    let len = len as isize;
    let mut i = idx;
    if i < 0 {
        i = -i;
    }
    if i >= len {
        i = 2 * (len - 1) - i;
    }
    debug_assert!(i >= 0 && i < len);
    i as usize
}

/// Reflect-pad `img` by `margin` on every side.
pub fn reflect_pad(img: &Frame, margin: usize) -> Result<Frame> {
    let (w, h) = (img.width(), img.height());
    if margin >= w || margin >= h {
        return Err(Error::dims(format!(
            "margin {margin} too large for {w}x{h} image"
        )));
    }
    let (pw, ph) = (w + 2 * margin, h + 2 * margin);
    let mut data = vec![0.0; pw * ph];
    for y in 0..ph {
        let sy = reflect(y as isize - margin as isize, h);
        for x in 0..pw {
            let sx = reflect(x as isize - margin as isize, w);
            data[y * pw + x] = img.get(sx, sy);
        }
    }
    Frame::new(pw, ph, data)
}

fn padded_spectrum(
    img: &Frame,
    margin: usize,
    pad_w: usize,
    pad_h: usize,
    fft: &Fft2,
) -> Result<Vec<Complex64>> {
    if img.width() + 2 * margin != pad_w || img.height() + 2 * margin != pad_h {
        return Err(Error::dims(format!(
            "image {}x{} with margin {margin} does not fit padded grid {pad_w}x{pad_h}",
            img.width(),
            img.height()
        )));
    }
    let padded = reflect_pad(img, margin)?;
    let mut buf: Vec<Complex64> = padded
        .as_slice()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft.forward(&mut buf);
    Ok(buf)
}

fn crop_real(buf: &[Complex64], pad_w: usize, margin: usize, w: usize, h: usize) -> Frame {
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = (y + margin) * pad_w + margin;
        for x in 0..w {
            data.push(buf[row + x].re);
        }
    }
    Frame::new(w, h, data).expect("finite ifft output")
}

/// The inverse-filter bank for one image size: `M` regularized inverses of
/// the PSFs, sharing a padded grid and FFT plan. Immutable once built.
pub struct IdpBank {
    phases: Vec<f64>,
    filters: Vec<FrequencyFilter>,
    fft: Fft2,
}

impl IdpBank {
    /// Build inverse filters for `img_w x img_h` frames.
    pub fn new(params: &OpticsParams, img_w: usize, img_h: usize) -> Result<Self> {
        let bank = psf_bank(params)?;
        IdpBank::from_kernel_bank(&bank, params.inv_reg, img_w, img_h)
    }

    pub fn from_kernel_bank(
        bank: &KernelBank,
        eps_inv: f64,
        img_w: usize,
        img_h: usize,
    ) -> Result<Self> {
        let margin = bank
            .kernels()
            .first()
            .ok_or_else(|| Error::param("optics.m_phases", "empty kernel bank"))?
            .radius();
        if margin >= img_w || margin >= img_h {
            return Err(Error::dims(format!(
                "kernel margin {margin} too large for {img_w}x{img_h} frames"
            )));
        }
        let (pad_w, pad_h) = (img_w + 2 * margin, img_h + 2 * margin);
        let filters = bank
            .kernels()
            .iter()
            .map(|k| inverse_filter(k, pad_w, pad_h, eps_inv))
            .collect::<Result<Vec<_>>>()?;
        Ok(IdpBank {
            phases: bank.phases().to_vec(),
            filters,
            fft: Fft2::new(pad_w, pad_h),
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn filters(&self) -> &[FrequencyFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    /// Apply every inverse filter to one background-subtracted frame. The
    /// input spectrum is computed once and reused across the bank.
    pub fn apply_all(&self, gbar: &Frame) -> Result<Vec<Frame>> {
        let margin = self
            .filters
            .first()
            .map(|f| f.margin())
            .unwrap_or_default();
        let spectrum = padded_spectrum(gbar, margin, self.fft.width(), self.fft.height(), &self.fft)?;
        let mut out = Vec::with_capacity(self.filters.len());
        for filt in &self.filters {
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .zip(&filt.response)
                .map(|(s, r)| s * r)
                .collect();
            self.fft.inverse(&mut buf);
            out.push(crop_real(
                &buf,
                self.fft.width(),
                margin,
                gbar.width(),
                gbar.height(),
            ));
        }
        Ok(out)
    }
}
