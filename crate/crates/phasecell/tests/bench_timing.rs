//! Stage timing harness contracts.

use phasecell::config::PipelineConfig;
use phasecell::eval::bench;
use phasecell::synth::{render, SynthConfig};

#[test]
fn report_contains_samples_and_median_per_stage() {
    let cfg = PipelineConfig::default();
    let scfg = SynthConfig {
        width: 32,
        height: 32,
        n_frames: 4,
        cell_count: 2,
        ..SynthConfig::default()
    };
    let ds = render(&scfg, &cfg.optics).unwrap();
    let report = bench(&ds.sequence, &cfg, 3).unwrap();
    assert_eq!(report.stages.len(), 3);
    for stage in &report.stages {
        assert_eq!(stage.samples.len(), 3, "{}", stage.stage);
        let med = stage.median();
        assert!(stage.samples.iter().any(|&s| s >= med) && stage.samples.iter().any(|&s| s <= med));
    }
    assert!(report.median_of("decompose").is_some());
    assert!(report.median_of("restore").is_some());
    assert!(report.median_of("segment").is_some());
}

#[test]
fn zero_repetitions_is_rejected() {
    let cfg = PipelineConfig::default();
    let scfg = SynthConfig {
        width: 32,
        height: 32,
        n_frames: 3,
        cell_count: 1,
        ..SynthConfig::default()
    };
    let ds = render(&scfg, &cfg.optics).unwrap();
    assert!(bench(&ds.sequence, &cfg, 0).is_err());
}

