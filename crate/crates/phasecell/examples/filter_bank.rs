//! Build the PSF bank and its regularized inverses, print their structure,
//! and write every kernel as a normalized grayscale image.
//!
//! ```sh
//! cargo run --example filter_bank [out_dir]
//! ```

use phasecell::image::{save_frame, BitDepth, Frame};
use phasecell::optics::{inverse_filter, obscured_airy, psf_bank, OpticsParams};

fn normalized(data: &[f64], w: usize, h: usize) -> Frame {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-300);
    Frame::new(w, h, data.iter().map(|v| (v - lo) / span).collect()).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "phasecell-out/bank".into());
    let out = std::path::PathBuf::from(out);

    let params = OpticsParams::default();
    let airy = obscured_airy(&params)?;
    println!(
        "airy kernel: {0}x{0}, tap sum {1:.4}, center tap {2:.4}",
        airy.size(),
        airy.tap_sum(),
        airy.get(airy.radius(), airy.radius())
    );

    let bank = psf_bank(&params)?;
    for (m, (kernel, &theta)) in bank.kernels().iter().zip(bank.phases()).enumerate() {
        println!(
            "PSF {:>2}: theta {theta:.4} rad, sin {:+.3}, airy coefficient {:+.3}, tap sum {:+.4}",
            m + 1,
            theta.sin(),
            params.zeta_p * theta.cos() - theta.sin(),
            kernel.tap_sum()
        );
        let img = normalized(kernel.taps(), kernel.size(), kernel.size());
        save_frame(&img, out.join(format!("psf_{}.pgm", m + 1)), BitDepth::Eight)?;

        // the spatial inverse on a wider display grid
        let grid = kernel.size() * 4 + 1;
        let inverse = inverse_filter(kernel, grid, grid, params.inv_reg)?;
        let spatial = inverse.to_spatial();
        let img = normalized(spatial.as_slice(), spatial.width(), spatial.height());
        save_frame(&img, out.join(format!("idp_{}.pgm", m + 1)), BitDepth::Eight)?;
    }
    println!("wrote {} PSF / inverse pairs under {}", bank.len(), out.display());
    Ok(())
}
