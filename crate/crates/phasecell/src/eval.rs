//! Segmentation scoring and stage timing.
//!
//! Pixel accuracy is `(TP + N - FP) / (P + N)`, which equals the usual
//! `(TP + TN) / total` since `N - FP = TN`; both routes are kept in tests.
//! The Otsu threshold doubles as the raw-image baseline and as one of the
//! score binarization methods.

use std::time::Instant;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::image::{Frame, ImageSequence, Mask};
use crate::segment;

/// Pixelwise confusion counts for one mask/truth pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    /// Truth positives `P = TP + FN`.
    pub fn positives(&self) -> u64 {
        self.true_pos + self.false_neg
    }

    /// Truth negatives `N = TN + FP`.
    pub fn negatives(&self) -> u64 {
        self.true_neg + self.false_pos
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }
}

/// Count the four pixel outcomes of `mask` against `truth`.
pub fn confusion(mask: &Mask, truth: &Mask) -> Result<ConfusionCounts> {
    if !mask.same_dims(truth) {
        return Err(Error::dims(format!(
            "mask is {}x{} but truth is {}x{}",
            mask.width(),
            mask.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut c = ConfusionCounts {
        true_pos: 0,
        false_pos: 0,
        true_neg: 0,
        false_neg: 0,
    };
    for (&m, &t) in mask.as_slice().iter().zip(truth.as_slice()) {
        match (m, t) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, false) => c.true_neg += 1,
            (false, true) => c.false_neg += 1,
        }
    }
    Ok(c)
}

/// `ACC = (TP + N - FP) / (P + N)`.
pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let denom = c.positives() + c.negatives();
    if denom == 0 {
        return Err(Error::Degenerate("empty image has no accuracy".into()));
    }
    let num = c.true_pos as f64 + c.negatives() as f64 - c.false_pos as f64;
    Ok(num / denom as f64)
}

/// Dice-style F1 of predicted vs truth support.
pub fn support_f1(c: &ConfusionCounts) -> f64 {
    let denom = 2 * c.true_pos + c.false_pos + c.false_neg;
    if denom == 0 {
        return 1.0; // both supports empty
    }
    2.0 * c.true_pos as f64 / denom as f64
}

/// Index of the histogram split maximizing between-class variance, with ties
/// broken toward the lower split. Returns `None` when a class is empty at
/// every split (all mass in one bin).
pub fn otsu_split(hist: &[u64; 256]) -> Option<usize> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return None;
    }
    let sum_total: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &h)| i as f64 * h as f64)
        .sum();
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    let mut best: Option<(usize, f64)> = None;
    for k in 0..255 {
        w0 += hist[k] as f64;
        sum0 += k as f64 * hist[k] as f64;
        let w1 = total as f64 - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_total - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        match best {
            Some((_, b)) if var <= b => {}
            _ => best = Some((k, var)),
        }
    }
    best.map(|(k, _)| k)
}

/// Histogram of 256 equal bins covering `[lo, hi]`.
pub fn histogram_256(values: &[f64], lo: f64, hi: f64) -> [u64; 256] {
    let mut hist = [0u64; 256];
    let span = hi - lo;
    for &v in values {
        let bin = if span > 0.0 {
            (((v - lo) / span) * 256.0).floor().min(255.0).max(0.0) as usize
        } else {
            0
        };
        hist[bin] += 1;
    }
    hist
}

/// Otsu threshold of an image: the split of a 256-bin histogram over the
/// intensity range maximizing between-class variance. The returned value is
/// the upper edge of the chosen bin, so `v > threshold` selects the upper
/// class. Constant images are rejected.
pub fn otsu(img: &Frame) -> Result<f64> {
    let lo = img.min();
    let hi = img.max();
    if !(hi > lo) {
        return Err(Error::Degenerate(
            "otsu threshold undefined for constant image".into(),
        ));
    }
    let hist = histogram_256(img.as_slice(), lo, hi);
    let k = otsu_split(&hist)
        .ok_or_else(|| Error::Degenerate("otsu threshold undefined for constant image".into()))?;
    Ok(lo + (k as f64 + 1.0) * (hi - lo) / 256.0)
}

/// Per-frame evaluation row.
#[derive(Debug, Clone, Copy)]
pub struct EvalRow {
    pub frame: usize,
    pub counts: ConfusionCounts,
    pub acc: f64,
}

/// Per-frame ACC plus the sequence mean.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean_acc: f64,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,tp,fp,tn,fn,acc\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6}\n",
                r.frame,
                r.counts.true_pos,
                r.counts.false_pos,
                r.counts.true_neg,
                r.counts.false_neg,
                r.acc
            ));
        }
        let (tp, fp, tn, fneg) = self.rows.iter().fold((0, 0, 0, 0), |acc, r| {
            (
                acc.0 + r.counts.true_pos,
                acc.1 + r.counts.false_pos,
                acc.2 + r.counts.true_neg,
                acc.3 + r.counts.false_neg,
            )
        });
        out.push_str(&format!("mean,{tp},{fp},{tn},{fneg},{:.6}\n", self.mean_acc));
        out
    }
}

/// Score aligned mask/truth lists frame by frame.
pub fn evaluate(masks: &[Mask], truths: &[Mask]) -> Result<EvalReport> {
    if masks.len() != truths.len() {
        return Err(Error::dims(format!(
            "{} masks vs {} truth frames",
            masks.len(),
            truths.len()
        )));
    }
    if masks.is_empty() {
        return Err(Error::Degenerate("no frames to evaluate".into()));
    }
    let mut rows = Vec::with_capacity(masks.len());
    for (i, (m, t)) in masks.iter().zip(truths).enumerate() {
        let counts = confusion(m, t)?;
        rows.push(EvalRow {
            frame: i,
            counts,
            acc: accuracy(&counts)?,
        });
    }
    let mean_acc = rows.iter().map(|r| r.acc).sum::<f64>() / rows.len() as f64;
    Ok(EvalReport { rows, mean_acc })
}

/// Otsu-on-raw baseline: threshold each observed frame directly.
pub fn otsu_baseline_masks(seq: &ImageSequence) -> Result<Vec<Mask>> {
    seq.frames()
        .iter()
        .map(|f| {
            let t = otsu(f)?;
            let data = f.as_slice().iter().map(|&v| v > t).collect();
            Mask::new(f.width(), f.height(), data)
        })
        .collect()
}

/// Wall-clock samples for one pipeline stage.
#[derive(Debug, Clone)]
pub struct StageTiming {
    pub stage: &'static str,
    pub samples: Vec<f64>,
}

impl StageTiming {
    pub fn median(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = s.len() / 2;
        if s.len() % 2 == 0 {
            0.5 * (s[mid - 1] + s[mid])
        } else {
            s[mid]
        }
    }
}

/// Per-stage timings, medians over repetitions.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub stages: Vec<StageTiming>,
    pub repetitions: usize,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,rep,seconds\n");
        for st in &self.stages {
            for (i, s) in st.samples.iter().enumerate() {
                out.push_str(&format!("{},{},{:.6}\n", st.stage, i + 1, s));
            }
        }
        for st in &self.stages {
            out.push_str(&format!("{},median,{:.6}\n", st.stage, st.median()));
        }
        out
    }

    pub fn median_of(&self, stage: &str) -> Option<f64> {
        self.stages
            .iter()
            .find(|s| s.stage == stage)
            .map(|s| s.median())
    }
}

/// Time the decompose / restore / segment stages of the pipeline over
/// `repetitions` runs.
pub fn bench(seq: &ImageSequence, cfg: &PipelineConfig, repetitions: usize) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::param("repetitions", "must be >= 1"));
    }
    let mut decompose_s = Vec::with_capacity(repetitions);
    let mut restore_s = Vec::with_capacity(repetitions);
    let mut segment_s = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let t0 = Instant::now();
        let stages = segment::PipelineStages::decompose(seq, cfg)?;
        decompose_s.push(t0.elapsed().as_secs_f64());

        let t1 = Instant::now();
        let restored = stages.restore()?;
        restore_s.push(t1.elapsed().as_secs_f64());

        let t2 = Instant::now();
        restored.segment()?;
        segment_s.push(t2.elapsed().as_secs_f64());
    }
    Ok(BenchReport {
        stages: vec![
            StageTiming {
                stage: "decompose",
                samples: decompose_s,
            },
            StageTiming {
                stage: "restore",
                samples: restore_s,
            },
            StageTiming {
                stage: "segment",
                samples: segment_s,
            },
        ],
        repetitions,
    })
}
