//! Wall-clock timing of the three pipeline stages, median over repetitions.
//!
//! The restoration stage is the headline: eight frequency-domain filters
//! over a 256x256 frame complete in well under a second.
//!
//! ```sh
//! cargo run --release --example benchmark_stages
//! ```

use std::time::Instant;

use phasecell::config::PipelineConfig;
use phasecell::eval::bench;
use phasecell::image::Frame;
use phasecell::optics::IdpBank;
use phasecell::segment::restore;
use phasecell::synth::render;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();

    // stage timings on the default 20x64x64 dataset
    let dataset = render(&config.synth, &config.optics)?;
    let report = bench(&dataset.sequence, &config, 3)?;
    println!("stage medians over {} reps (20 frames of 64x64):", report.repetitions);
    for stage in &report.stages {
        println!("  {:<10} {:.4}s  {:?}", stage.stage, stage.median(), stage.samples);
    }

    // single-frame restoration at 256x256 with the full 8-filter bank
    let bank = IdpBank::new(&config.optics, 256, 256)?;
    let frame = Frame::new(
        256,
        256,
        (0..256 * 256).map(|i| ((i * 131) % 991) as f64 / 991.0).collect(),
    )?;
    let mut times = Vec::new();
    for _ in 0..5 {
        let t = Instant::now();
        let responses = restore(&frame, &bank)?;
        times.push(t.elapsed().as_secs_f64());
        assert_eq!(responses.maps.len(), 8);
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!(
        "restore 256x256 through 8 filters: median {:.4}s (min {:.4}s, max {:.4}s)",
        times[2], times[0], times[4]
    );
    print!("{}", report.to_csv());
    Ok(())
}
