//! Restoration and segmentation: foreground frames through the inverse
//! diffraction bank, response fusion, thresholding, component labeling.
//!
//! The stage order is fixed: stack -> decompose -> per-frame restoration of
//! the foreground (`phi_m = gbar * PSF^-1(theta_m)`) -> fuse the M responses
//! into one score map -> binarize -> 8-connected components with an area
//! floor. Frames are independent after the decomposition, so the per-frame
//! stages fan out across threads; every stage is pure and deterministic.

use std::path::Path;

use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result, StageExt};
use crate::eval;
use crate::image::{
    column_frame, save_frame, save_mask, stack, BitDepth, Frame, ImageSequence, Mask,
};
use crate::lowrank::{decompose, Decomposition};
use crate::optics::IdpBank;

/// The M filtered responses of one frame, aligned with the bank phases.
#[derive(Debug, Clone)]
pub struct ResponseStack {
    pub phases: Vec<f64>,
    pub maps: Vec<Frame>,
}

/// How the M responses collapse into one score map.
#[derive(Debug, Clone, PartialEq)]
pub enum FusionStrategy {
    /// `max(0, max_m phi_m)` per pixel.
    MaxPositive,
    /// `max_m |phi_m|` per pixel.
    MaxAbs,
    /// A single response `phi_m`, 1-based.
    SinglePhase(usize),
}

/// Score thresholding rule.
#[derive(Debug, Clone, PartialEq)]
pub enum BinarizeMethod {
    /// Otsu split of a 256-bin histogram over the score range.
    Otsu,
    /// Keep the top `1 - q` fraction: threshold at the `q`-quantile.
    Quantile(f64),
    Fixed(f64),
}

impl std::fmt::Display for FusionStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FusionStrategy::MaxPositive => write!(f, "max-positive"),
            FusionStrategy::MaxAbs => write!(f, "max-abs"),
            FusionStrategy::SinglePhase(m) => write!(f, "single-phase:{m}"),
        }
    }
}

impl std::str::FromStr for FusionStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max-positive" => Ok(FusionStrategy::MaxPositive),
            "max-abs" => Ok(FusionStrategy::MaxAbs),
            other => {
                if let Some(m) = other.strip_prefix("single-phase:") {
                    let m: usize = m
                        .parse()
                        .map_err(|_| format!("bad phase index in `{other}`"))?;
                    if m == 0 {
                        return Err("phase index is 1-based".into());
                    }
                    Ok(FusionStrategy::SinglePhase(m))
                } else {
                    Err(format!(
                        "unknown fusion `{other}`; expected max-positive, max-abs, or single-phase:<m>"
                    ))
                }
            }
        }
    }
}

impl std::fmt::Display for BinarizeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BinarizeMethod::Otsu => write!(f, "otsu"),
            BinarizeMethod::Quantile(q) => write!(f, "quantile:{q}"),
            BinarizeMethod::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

impl std::str::FromStr for BinarizeMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "otsu" {
            return Ok(BinarizeMethod::Otsu);
        }
        if let Some(q) = s.strip_prefix("quantile:") {
            let q: f64 = q.parse().map_err(|_| format!("bad quantile in `{s}`"))?;
            if !(0.0..=1.0).contains(&q) {
                return Err("quantile must lie in [0, 1]".into());
            }
            return Ok(BinarizeMethod::Quantile(q));
        }
        if let Some(t) = s.strip_prefix("fixed:") {
            let t: f64 = t.parse().map_err(|_| format!("bad threshold in `{s}`"))?;
            return Ok(BinarizeMethod::Fixed(t));
        }
        Err(format!(
            "unknown binarize method `{s}`; expected otsu, quantile:<q>, or fixed:<t>"
        ))
    }
}

/// Mask plus labeled components. Labels are `1..=cell_count` in first
/// raster-occurrence order; label 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub mask: Mask,
    pub labels: Vec<u32>,
    pub cell_count: usize,
    /// Pixel count per label, indexed by `label - 1`.
    pub areas: Vec<usize>,
}

/// Binarization outcome. `degenerate` flags a constant score map, which
/// yields an empty mask instead of an error.
#[derive(Debug, Clone)]
pub struct BinarizeOutcome {
    pub mask: Mask,
    pub threshold: f64,
    pub degenerate: bool,
}

/// Apply every inverse filter of the bank to one background-subtracted frame.
pub fn restore(gbar: &Frame, bank: &IdpBank) -> Result<ResponseStack> {
    let maps = bank.apply_all(gbar)?;
    Ok(ResponseStack {
        phases: bank.phases().to_vec(),
        maps,
    })
}

/// Fuse the M responses into one score map.
pub fn combine_responses(rs: &ResponseStack, strategy: &FusionStrategy) -> Result<Frame> {
    let first = rs
        .maps
        .first()
        .ok_or_else(|| Error::Degenerate("empty response stack".into()))?;
    let (w, h) = (first.width(), first.height());
    for m in &rs.maps {
        if !m.same_dims(first) {
            return Err(Error::dims("response maps have mixed dimensions"));
        }
    }
    match strategy {
        FusionStrategy::SinglePhase(m) => {
            let idx = m
                .checked_sub(1)
                .filter(|&i| i < rs.maps.len())
                .ok_or_else(|| {
                    Error::param(
                        "segment.fusion",
                        format!("phase index {m} out of range 1..={}", rs.maps.len()),
                    )
                })?;
            Ok(rs.maps[idx].clone())
        }
        FusionStrategy::MaxPositive => {
            let mut data = vec![0.0f64; w * h];
            for map in &rs.maps {
                for (d, &v) in data.iter_mut().zip(map.as_slice()) {
                    if v > *d {
                        *d = v;
                    }
                }
            }
            Frame::new(w, h, data)
        }
        FusionStrategy::MaxAbs => {
            let mut data = vec![0.0f64; w * h];
            for map in &rs.maps {
                for (d, &v) in data.iter_mut().zip(map.as_slice()) {
                    if v.abs() > *d {
                        *d = v.abs();
                    }
                }
            }
            Frame::new(w, h, data)
        }
    }
}

/// Threshold a score map into a mask (`score > threshold`).
pub fn binarize(score: &Frame, method: &BinarizeMethod) -> Result<BinarizeOutcome> {
    if !score.as_slice().iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("score map".into()));
    }
    let threshold = match method {
        BinarizeMethod::Fixed(t) => *t,
        BinarizeMethod::Quantile(q) => {
            if !(0.0..=1.0).contains(q) {
                return Err(Error::param("segment.binarize", "quantile must lie in [0, 1]"));
            }
            let mut sorted = score.as_slice().to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let k = (q * sorted.len() as f64).ceil() as usize;
            if k == 0 {
                f64::NEG_INFINITY
            } else {
                sorted[k - 1]
            }
        }
        BinarizeMethod::Otsu => match eval::otsu(score) {
            Ok(t) => t,
            Err(Error::Degenerate(_)) => {
                // constant score map: empty mask, flagged
                return Ok(BinarizeOutcome {
                    mask: Mask::empty(score.width(), score.height()),
                    threshold: f64::INFINITY,
                    degenerate: true,
                });
            }
            Err(e) => return Err(e),
        },
    };
    let data = score.as_slice().iter().map(|&v| v > threshold).collect();
    Ok(BinarizeOutcome {
        mask: Mask::new(score.width(), score.height(), data)?,
        threshold,
        degenerate: false,
    })
}

/// 8-connected component labeling with an area floor. Components smaller
/// than `min_area` are removed from both the mask and the labels; surviving
/// labels are renumbered `1..=cell_count` in first raster-occurrence order.
pub fn connected_components(mask: &Mask, min_area: usize) -> SegmentationResult {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut raw_areas: Vec<usize> = Vec::new();
    let mut stack_buf: Vec<(usize, usize)> = Vec::new();

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !mask.as_slice()[idx] || labels[idx] != 0 {
                continue;
            }
            let label = raw_areas.len() as u32 + 1;
            let mut area = 0usize;
            stack_buf.push((x, y));
            labels[idx] = label;
            while let Some((cx, cy)) = stack_buf.pop() {
                area += 1;
                let x0 = cx.saturating_sub(1);
                let y0 = cy.saturating_sub(1);
                let x1 = (cx + 1).min(w - 1);
                let y1 = (cy + 1).min(h - 1);
                for ny in y0..=y1 {
                    for nx in x0..=x1 {
                        let nidx = ny * w + nx;
                        if mask.as_slice()[nidx] && labels[nidx] == 0 {
                            labels[nidx] = label;
                            stack_buf.push((nx, ny));
                        }
                    }
                }
            }
            raw_areas.push(area);
        }
    }

    // area floor + dense relabeling (raster order is preserved)
    let mut remap = vec![0u32; raw_areas.len() + 1];
    let mut areas = Vec::new();
    for (i, &a) in raw_areas.iter().enumerate() {
        if a >= min_area {
            areas.push(a);
            remap[i + 1] = areas.len() as u32;
        }
    }
    let mut out_mask = mask.clone();
    for (i, l) in labels.iter_mut().enumerate() {
        *l = remap[*l as usize];
        if *l == 0 {
            out_mask.as_mut_slice()[i] = false;
        }
    }
    SegmentationResult {
        mask: out_mask,
        cell_count: areas.len(),
        labels,
        areas,
    }
}

/// Segmentation of one frame plus the threshold that produced it.
#[derive(Debug, Clone)]
pub struct FrameSegmentation {
    pub result: SegmentationResult,
    pub threshold: f64,
    pub degenerate: bool,
}

/// Pipeline state after the decomposition stage.
pub struct PipelineStages<'a> {
    cfg: &'a PipelineConfig,
    width: usize,
    height: usize,
    pub decomposition: Decomposition,
}

/// Pipeline state after restoration.
pub struct RestoredStages<'a> {
    cfg: &'a PipelineConfig,
    pub decomposition: Decomposition,
    pub responses: Vec<ResponseStack>,
}

impl<'a> PipelineStages<'a> {
    /// Stage 1: stack the sequence and split background from foreground.
    pub fn decompose(seq: &ImageSequence, cfg: &'a PipelineConfig) -> Result<Self> {
        let a = stack(seq);
        let decomposition =
            decompose(&a, seq.width(), seq.height(), &cfg.alm).stage("decompose")?;
        Ok(PipelineStages {
            cfg,
            width: seq.width(),
            height: seq.height(),
            decomposition,
        })
    }

    /// The foreground of frame `k` as an image.
    pub fn foreground_frame(&self, k: usize) -> Result<Frame> {
        column_frame(&self.decomposition.foreground, k, self.width, self.height)
    }

    /// Stage 2: push every foreground frame through the inverse bank.
    pub fn restore(self) -> Result<RestoredStages<'a>> {
        let bank =
            IdpBank::new(&self.cfg.optics, self.width, self.height).stage("restore")?;
        let n = self.decomposition.foreground.cols();
        let responses: Vec<ResponseStack> = (0..n)
            .into_par_iter()
            .map(|k| {
                let gbar = self.foreground_frame(k)?;
                restore(&gbar, &bank)
            })
            .collect::<Result<_>>()
            .stage("restore")?;
        Ok(RestoredStages {
            cfg: self.cfg,
            decomposition: self.decomposition,
            responses,
        })
    }
}

impl RestoredStages<'_> {
    /// Stage 3: fuse, threshold, and label every frame.
    pub fn segment(&self) -> Result<Vec<FrameSegmentation>> {
        self.responses
            .par_iter()
            .map(|rs| {
                let score = combine_responses(rs, &self.cfg.fusion)?;
                let bin = binarize(&score, &self.cfg.binarize)?;
                let result = connected_components(&bin.mask, self.cfg.min_area);
                Ok(FrameSegmentation {
                    result,
                    threshold: bin.threshold,
                    degenerate: bin.degenerate,
                })
            })
            .collect::<Result<_>>()
            .stage("segment")
    }
}

/// Full pipeline output.
pub struct PipelineOutput {
    pub decomposition: Decomposition,
    pub frames: Vec<FrameSegmentation>,
}

impl PipelineOutput {
    /// Per-frame diagnostics CSV: `frame,threshold,cell_count,total_area`.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("frame,threshold,cell_count,total_area\n");
        for (i, f) in self.frames.iter().enumerate() {
            let total: usize = f.result.areas.iter().sum();
            out.push_str(&format!(
                "{},{:.6e},{},{}\n",
                i, f.threshold, f.result.cell_count, total
            ));
        }
        out
    }
}

/// Run the whole pipeline. With an output directory, writes
/// `masks/frame_%04d.pgm`, `restored/phase_%d/frame_%04d.pgm` (one directory
/// per bank phase), and `diag.csv`.
pub fn run_pipeline(
    seq: &ImageSequence,
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineOutput> {
    let stages = PipelineStages::decompose(seq, cfg)?;
    let restored = stages.restore()?;
    let frames = restored.segment()?;

    if let Some(dir) = out_dir {
        for (k, rs) in restored.responses.iter().enumerate() {
            for (m, map) in rs.maps.iter().enumerate() {
                let path = dir
                    .join("restored")
                    .join(format!("phase_{}", m + 1))
                    .join(format!("frame_{k:04}.pgm"));
                save_frame(map, &path, BitDepth::Sixteen).stage("segment")?;
            }
        }
        for (k, f) in frames.iter().enumerate() {
            let path = dir.join("masks").join(format!("frame_{k:04}.pgm"));
            save_mask(&f.result.mask, &path).stage("segment")?;
        }
        let output = PipelineOutput {
            decomposition: restored.decomposition,
            frames,
        };
        std::fs::write(dir.join("diag.csv"), output.diagnostics_csv())
            .map_err(|e| Error::io(dir.join("diag.csv"), e))
            .stage("segment")?;
        return Ok(output);
    }

    Ok(PipelineOutput {
        decomposition: restored.decomposition,
        frames,
    })
}
