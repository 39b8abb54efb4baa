//! The evaluation metrics on their own: confusion counts, the pixel
//! accuracy formula, and the Otsu threshold with its two equivalent
//! accuracy routes.
//!
//! ```sh
//! cargo run --example evaluate_accuracy
//! ```

use phasecell::eval::{accuracy, confusion, evaluate, otsu};
use phasecell::image::{Frame, Mask};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a toy 10x10 scene: truth has a 3x3 block, prediction misses one pixel
    // and adds one stray
    let mut truth = Mask::empty(10, 10);
    for y in 2..5 {
        for x in 2..5 {
            truth.set(x, y, true);
        }
    }
    let mut pred = truth.clone();
    pred.set(4, 4, false);
    pred.set(8, 8, true);

    let counts = confusion(&pred, &truth)?;
    println!(
        "tp {} fp {} tn {} fn {}",
        counts.true_pos, counts.false_pos, counts.true_neg, counts.false_neg
    );
    let acc = accuracy(&counts)?;
    println!("ACC = (tp + n - fp) / (p + n) = {acc:.4}");
    let plain = (counts.true_pos + counts.true_neg) as f64 / counts.total() as f64;
    println!("same thing as (tp + tn) / total = {plain:.4}");

    // per-frame report with the mean row, as the `eval` subcommand writes it
    let report = evaluate(&[pred.clone(), truth.clone()], &[truth.clone(), truth.clone()])?;
    print!("{}", report.to_csv());

    // Otsu on a bimodal image lands between the modes
    let mut data = vec![0.25; 60];
    data.extend(vec![0.75; 40]);
    let image = Frame::new(10, 10, data)?;
    println!("otsu threshold of a 0.25/0.75 bimodal image: {:.4}", otsu(&image)?);
    Ok(())
}
