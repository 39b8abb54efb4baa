//! Split a sequence into low-rank background and structured-sparse
//! foreground, then compare both against the generator's ground truth.
//!
//! ```sh
//! cargo run --example background_subtraction
//! ```

use phasecell::image::stack;
use phasecell::lowrank::{decompose, AlmParams};
use phasecell::optics::OpticsParams;
use phasecell::synth::{render, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dataset = render(&SynthConfig::default(), &OpticsParams::default())?;
    let observed = stack(&dataset.sequence);
    let (w, h) = (dataset.sequence.width(), dataset.sequence.height());

    let params = AlmParams::default();
    let result = decompose(&observed, w, h, &params)?;

    println!(
        "converged: {} after {} iterations (lambda = {:.5})",
        result.converged, result.iterations, result.lambda
    );
    println!("residual trajectory (every 10th iteration):");
    for (i, (r, mu)) in result
        .residual_history
        .iter()
        .zip(&result.mu_history)
        .enumerate()
    {
        if i % 10 == 0 || i + 1 == result.residual_history.len() {
            println!("  iter {:>3}: residual {r:.3e}, mu {mu:.3e}", i + 1);
        }
    }

    let bg_truth = stack(&dataset.background_truth);
    let err: f64 = result
        .background
        .as_slice()
        .iter()
        .zip(bg_truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / bg_truth.frobenius_norm();
    println!("background relative error vs truth: {err:.4}");

    // support agreement of the recovered foreground at |E| > 0.05
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for k in 0..dataset.sequence.len() {
        for (i, &t) in dataset.masks_truth[k].as_slice().iter().enumerate() {
            let pred = result.foreground.column(k)[i].abs() > 0.05;
            match (pred, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
    }
    let f1 = 2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64);
    println!("foreground support F1 at |E| > 0.05: {f1:.4}");
    Ok(())
}
