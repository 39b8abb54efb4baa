//! Timing-versus-workload scaling, isolated in its own binary so nothing
//! else competes for cores while the clock runs.

use phasecell::config::PipelineConfig;
use phasecell::eval::bench;
use phasecell::synth::{render, SynthConfig};

/// More frames mean at least as much restore work; allow a 20% noise band
/// on the medians since wall clocks wobble.
#[test]
fn restore_time_grows_with_frame_count() {
    let cfg = PipelineConfig::default();
    let mut medians = Vec::new();
    for n in [5usize, 10, 20] {
        let scfg = SynthConfig {
            width: 64,
            height: 64,
            n_frames: n,
            cell_count: 3,
            ..SynthConfig::default()
        };
        let ds = render(&scfg, &cfg.optics).unwrap();
        let report = bench(&ds.sequence, &cfg, 3).unwrap();
        medians.push(report.median_of("restore").unwrap());
    }
    assert!(
        medians[1] >= 0.8 * medians[0] && medians[2] >= 0.8 * medians[1],
        "restore medians not monotone within band: {medians:?}"
    );
}
