//! Forward-model synthetic sequences with exact ground truth.
//!
//! Generates what the decomposition assumes: a low-rank background stack
//! (random positive combinations of `r` fixed smooth basis fields), drifting
//! constant-phase elliptical cells diffracted through the PSF of their
//! assigned retardation, and either white or frame-correlated (rank-1)
//! noise. Every layer is kept unquantized so recovery errors can be measured
//! against the construction itself.
//!
//! All randomness derives from a single seed through a counter-based
//! generator (ChaCha12, one stream per purpose), so a dataset is a pure
//! function of its config.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{Frame, ImageSequence, Mask};
use crate::optics::{convolve_freq, obscured_airy, psf, OpticsParams};

/// Identifier of the PRNG written into dataset manifests.
pub const PRNG_NAME: &str = "chacha12";

// stream ids per purpose
const STREAM_BACKGROUND: u64 = 1;
const STREAM_CELLS: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// Generator configuration. `seed` fixes all randomness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// Numerical rank of the background stack.
    pub bg_rank: usize,
    pub cell_count: usize,
    /// Semi-axis range in pixels.
    pub cell_radius_range: (f64, f64),
    /// Phase retardation assigned to cell interiors.
    pub cell_phase: f64,
    pub noise_sigma: f64,
    /// When set, noise is one fixed random field scaled per frame (a rank-1
    /// stack) instead of white noise.
    pub noise_correlated: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 64,
            height: 64,
            n_frames: 20,
            bg_rank: 2,
            cell_count: 6,
            cell_radius_range: (2.0, 3.0),
            cell_phase: 0.65,
            noise_sigma: 0.0,
            noise_correlated: false,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("synth.width", "dimensions must be positive"));
        }
        if self.n_frames < 2 {
            return Err(Error::param("synth.n_frames", "must be >= 2"));
        }
        if self.bg_rank < 1 {
            return Err(Error::param("synth.bg_rank", "must be >= 1"));
        }
        if self.bg_rank > self.n_frames {
            return Err(Error::param(
                "synth.bg_rank",
                format!(
                    "rank {} cannot exceed frame count {}",
                    self.bg_rank, self.n_frames
                ),
            ));
        }
        let (rmin, rmax) = self.cell_radius_range;
        if !(rmin >= 1.0 && rmax >= rmin) {
            return Err(Error::param(
                "synth.cell_radius",
                "radii must be >= 1 with min <= max",
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("synth.noise_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// A generated dataset: the observed sequence plus every truth layer,
/// all pre-quantization.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub sequence: ImageSequence,
    pub background_truth: ImageSequence,
    pub foreground_truth: ImageSequence,
    pub masks_truth: Vec<Mask>,
    pub config: SynthConfig,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Low-rank background: each frame is a positive combination of `bg_rank`
/// fixed smooth basis fields (low-order polynomials plus one broad gaussian
/// bump each), so the stacked matrix has numerical rank exactly `bg_rank`.
pub fn gen_background(cfg: &SynthConfig) -> Result<ImageSequence> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, STREAM_BACKGROUND);
    let (w, h) = (cfg.width, cfg.height);
    let r = cfg.bg_rank;

    // basis fields, each affinely rescaled into [0.25, 0.55]
    let mut bases: Vec<Vec<f64>> = Vec::with_capacity(r);
    for _ in 0..r {
        let poly: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        // a compact bright region with real area, so the background
        // histogram overlaps cell intensities and plain thresholding of the
        // raw frames cannot separate them
        let bump_sigma = rng.random_range(0.18..0.35) * w.min(h) as f64;
        let bump_amp = rng.random_range(1.5..2.5);
        let mut field = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let xn = if w > 1 { 2.0 * x as f64 / (w - 1) as f64 - 1.0 } else { 0.0 };
                let yn = if h > 1 { 2.0 * y as f64 / (h - 1) as f64 - 1.0 } else { 0.0 };
                let p = poly[0]
                    + poly[1] * xn
                    + poly[2] * yn
                    + poly[3] * xn * yn
                    + poly[4] * xn * xn
                    + poly[5] * yn * yn;
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                let g = bump_amp * (-(dx * dx + dy * dy) / (2.0 * bump_sigma * bump_sigma)).exp();
                field.push(p + g);
            }
        }
        let lo = field.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = field.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (hi - lo).max(1e-12);
        // wide dynamic range: non-uniform enough that raw thresholding fails
        for v in field.iter_mut() {
            *v = 0.15 + 0.60 * (*v - lo) / span;
        }
        bases.push(field);
    }

    // convex per-frame coefficients keep intensities in range and the
    // coefficient matrix generically full rank
    let mut frames = Vec::with_capacity(cfg.n_frames);
    for _ in 0..cfg.n_frames {
        let mut coefs: Vec<f64> = (0..r).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = coefs.iter().sum();
        for c in coefs.iter_mut() {
            *c /= total;
        }
        let mut data = vec![0.0; w * h];
        for (c, basis) in coefs.iter().zip(&bases) {
            for (d, b) in data.iter_mut().zip(basis) {
                *d += c * b;
            }
        }
        frames.push(Frame::new(w, h, data)?);
    }
    ImageSequence::new(frames)
}

#[derive(Debug, Clone, Copy)]
struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
    // persistent drift direction; ballistic motion keeps a cell from
    // dwelling on the same pixels, which would leak it into the
    // low-rank background
    vx: f64,
    vy: f64,
}

impl Ellipse {
    fn pixels(&self, w: usize, h: usize) -> Vec<usize> {
        let (sin, cos) = self.angle.sin_cos();
        let reach = self.rx.max(self.ry) + 1.0;
        let x0 = ((self.cx - reach).floor().max(0.0)) as usize;
        let x1 = ((self.cx + reach).ceil().min(w as f64 - 1.0)) as usize;
        let y0 = ((self.cy - reach).floor().max(0.0)) as usize;
        let y1 = ((self.cy + reach).ceil().min(h as f64 - 1.0)) as usize;
        let mut out = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as f64 - self.cx;
                let dy = y as f64 - self.cy;
                let u = (dx * cos + dy * sin) / self.rx;
                let v = (-dx * sin + dy * cos) / self.ry;
                if u * u + v * v <= 1.0 {
                    out.push(y * w + x);
                }
            }
        }
        out
    }
}

fn overlaps(candidate: &[usize], occupied: &[bool]) -> bool {
    candidate.iter().any(|&i| occupied[i])
}

/// Per-frame cell masks and phase maps: non-overlapping ellipses drifting by
/// at most 2 px/frame. The phase map carries `cell_phase` on cell pixels.
pub fn gen_cells(cfg: &SynthConfig) -> Result<(Vec<Mask>, Vec<Frame>)> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, STREAM_CELLS);
    let (w, h) = (cfg.width, cfg.height);
    let (rmin, rmax) = cfg.cell_radius_range;

    let mut masks = Vec::with_capacity(cfg.n_frames);
    let mut phase_maps = Vec::with_capacity(cfg.n_frames);
    let mut cells: Vec<Ellipse> = Vec::with_capacity(cfg.cell_count);

    // initial placement with bounded rejection
    const MAX_ATTEMPTS: usize = 4000;
    let mut occupied = vec![false; w * h];
    let mut attempts = 0;
    while cells.len() < cfg.cell_count {
        if attempts >= MAX_ATTEMPTS {
            return Err(Error::CellPlacement {
                attempts,
                msg: format!(
                    "could not fit {} non-overlapping cells in {}x{}; reduce cell_count or radii",
                    cfg.cell_count, w, h
                ),
            });
        }
        attempts += 1;
        let margin = rmax + 1.0;
        if w as f64 <= 2.0 * margin || h as f64 <= 2.0 * margin {
            return Err(Error::CellPlacement {
                attempts,
                msg: format!(
                    "image {}x{} is too small for radius {rmax}; reduce radii or enlarge frames",
                    w, h
                ),
            });
        }
        let heading = rng.random_range(0.0..2.0 * PI);
        let speed = rng.random_range(1.2..2.0);
        let cand = Ellipse {
            cx: rng.random_range(margin..w as f64 - margin),
            cy: rng.random_range(margin..h as f64 - margin),
            rx: rng.random_range(rmin..=rmax),
            ry: rng.random_range(rmin..=rmax),
            angle: rng.random_range(0.0..PI),
            vx: speed * heading.cos(),
            vy: speed * heading.sin(),
        };
        let px = cand.pixels(w, h);
        if !overlaps(&px, &occupied) {
            for &i in &px {
                occupied[i] = true;
            }
            cells.push(cand);
        }
    }

    for _ in 0..cfg.n_frames {
        // rasterize current positions
        let mut mask = Mask::empty(w, h);
        let mut phase = Frame::zeros(w, h);
        for cell in &cells {
            for &i in &cell.pixels(w, h) {
                mask.as_mut_slice()[i] = true;
                phase.as_mut_slice()[i] = cfg.cell_phase;
            }
        }
        masks.push(mask);
        phase_maps.push(phase);

        // drift each cell by <= 2 px along its heading, bouncing off walls
        // and keeping the configuration non-overlapping; staying put is
        // always valid
        let mut next = cells.clone();
        for i in 0..next.len() {
            let margin = next[i].rx.max(next[i].ry) + 1.0;
            let mut cand = next[i];
            // bounce at the walls
            if cand.cx + cand.vx < margin || cand.cx + cand.vx > w as f64 - margin {
                cand.vx = -cand.vx;
            }
            if cand.cy + cand.vy < margin || cand.cy + cand.vy > h as f64 - margin {
                cand.vy = -cand.vy;
            }
            cand.cx = (cand.cx + cand.vx).clamp(margin, w as f64 - margin);
            cand.cy = (cand.cy + cand.vy).clamp(margin, h as f64 - margin);

            let mut occ = vec![false; w * h];
            for (j, other) in next.iter().enumerate() {
                if j != i {
                    for &p in &other.pixels(w, h) {
                        occ[p] = true;
                    }
                }
            }
            if !overlaps(&cand.pixels(w, h), &occ) {
                next[i] = cand;
            } else {
                // blocked: pick a fresh heading for the following frame
                let heading = rng.random_range(0.0..2.0 * PI);
                let speed = (next[i].vx * next[i].vx + next[i].vy * next[i].vy).sqrt();
                next[i].vx = speed * heading.cos();
                next[i].vy = speed * heading.sin();
            }
        }
        #[cfg(debug_assertions)]
        {
            let mut occ = vec![false; w * h];
            for cell in &next {
                for &p in &cell.pixels(w, h) {
                    debug_assert!(!occ[p], "cell pixel sets intersect after drift");
                    occ[p] = true;
                }
            }
        }
        cells = next;
    }
    Ok((masks, phase_maps))
}

/// Render the full dataset: diffract the phase maps through `PSF(cell_phase)`,
/// add the background and the configured noise.
pub fn render(cfg: &SynthConfig, optics: &OpticsParams) -> Result<SynthDataset> {
    cfg.validate()?;
    optics.validate()?;
    let background = gen_background(cfg)?;
    let (masks, phase_maps) = gen_cells(cfg)?;

    let airy = obscured_airy(optics)?;
    let cell_psf = psf(cfg.cell_phase, &airy, optics.zeta_p);

    let mut fg_frames = Vec::with_capacity(cfg.n_frames);
    for map in &phase_maps {
        fg_frames.push(convolve_freq(map, &cell_psf)?);
    }

    let (w, h) = (cfg.width, cfg.height);
    let mut noise_frames: Vec<Vec<f64>> = Vec::with_capacity(cfg.n_frames);
    if cfg.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, cfg.noise_sigma).expect("sigma >= 0");
        if cfg.noise_correlated {
            // one fixed field, scaled per frame: a rank-1 noise stack
            let mut rng = rng_for(cfg.seed, STREAM_NOISE);
            let field: Vec<f64> = (0..w * h).map(|_| normal.sample(&mut rng)).collect();
            for _ in 0..cfg.n_frames {
                let scale = rng.random_range(0.8..1.2);
                noise_frames.push(field.iter().map(|v| v * scale).collect());
            }
        } else {
            for k in 0..cfg.n_frames {
                let mut rng = rng_for(cfg.seed, STREAM_NOISE + 1 + k as u64);
                noise_frames.push((0..w * h).map(|_| normal.sample(&mut rng)).collect());
            }
        }
    } else {
        noise_frames = vec![vec![0.0; w * h]; cfg.n_frames];
    }

    let mut observed = Vec::with_capacity(cfg.n_frames);
    for k in 0..cfg.n_frames {
        let data: Vec<f64> = background
            .frame(k)
            .as_slice()
            .iter()
            .zip(fg_frames[k].as_slice())
            .zip(&noise_frames[k])
            .map(|((b, f), n)| b + f + n)
            .collect();
        observed.push(Frame::new(w, h, data)?);
    }

    Ok(SynthDataset {
        sequence: ImageSequence::new(observed)?,
        background_truth: background,
        foreground_truth: ImageSequence::new(fg_frames)?,
        masks_truth: masks,
        config: cfg.clone(),
    })
}

/// SHA-256 of a layer's raw little-endian samples, for manifests.
pub fn layer_checksum(frames: &[Frame]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for f in frames {
        for v in f.as_slice() {
            hasher.update(v.to_le_bytes());
        }
    }
    hex_string(&hasher.finalize())
}

/// SHA-256 of mask bits.
pub fn mask_checksum(masks: &[Mask]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for m in masks {
        let bytes: Vec<u8> = m.as_slice().iter().map(|&b| b as u8).collect();
        hasher.update(&bytes);
    }
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Manifest written next to generated datasets.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub config: &'a SynthConfig,
    pub prng: &'static str,
    pub checksums: ManifestChecksums,
}

#[derive(Debug, Serialize)]
pub struct ManifestChecksums {
    pub observed: String,
    pub background: String,
    pub foreground: String,
    pub masks: String,
}

impl SynthDataset {
    pub fn manifest(&self) -> Manifest<'_> {
        Manifest {
            config: &self.config,
            prng: PRNG_NAME,
            checksums: ManifestChecksums {
                observed: layer_checksum(self.sequence.frames()),
                background: layer_checksum(self.background_truth.frames()),
                foreground: layer_checksum(self.foreground_truth.frames()),
                masks: mask_checksum(&self.masks_truth),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            width: 32,
            height: 32,
            n_frames: 4,
            bg_rank: 2,
            cell_count: 2,
            cell_radius_range: (2.0, 3.0),
            ..SynthConfig::default()
        }
    }

    #[test]
    fn rank_one_background_frames_are_proportional() {
        let cfg = SynthConfig {
            bg_rank: 1,
            ..small_cfg()
        };
        let bg = gen_background(&cfg).unwrap();
        let base = bg.frame(0).as_slice();
        for k in 1..bg.len() {
            let other = bg.frame(k).as_slice();
            let ratio = other[0] / base[0];
            for (a, b) in base.iter().zip(other) {
                assert!((b - ratio * a).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn background_frames_differ_across_time() {
        let bg = gen_background(&small_cfg()).unwrap();
        assert_ne!(bg.frame(0), bg.frame(1));
    }

    #[test]
    fn zero_cells_give_empty_masks() {
        let cfg = SynthConfig {
            cell_count: 0,
            ..small_cfg()
        };
        let (masks, phases) = gen_cells(&cfg).unwrap();
        for (m, p) in masks.iter().zip(&phases) {
            assert_eq!(m.count_set(), 0);
            assert!(p.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn masks_match_phase_map_support() {
        let (masks, phases) = gen_cells(&small_cfg()).unwrap();
        for (m, p) in masks.iter().zip(&phases) {
            for (set, &v) in m.as_slice().iter().zip(p.as_slice()) {
                assert_eq!(*set, v != 0.0);
            }
        }
    }

    #[test]
    fn dense_drifting_cells_never_intersect() {
        // crowded enough that drift steps collide; the debug assertion in
        // gen_cells verifies pixel-set disjointness every frame
        let cfg = SynthConfig {
            width: 40,
            height: 40,
            n_frames: 12,
            cell_count: 8,
            cell_radius_range: (2.0, 3.0),
            ..SynthConfig::default()
        };
        let (masks, _) = gen_cells(&cfg).unwrap();
        assert_eq!(masks.len(), 12);
        assert!(masks.iter().all(|m| m.count_set() > 0));
    }

    #[test]
    fn placement_failure_suggests_fewer_cells() {
        let cfg = SynthConfig {
            width: 16,
            height: 16,
            cell_count: 40,
            cell_radius_range: (3.0, 4.0),
            ..small_cfg()
        };
        let err = gen_cells(&cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("reduce"), "{msg}");
    }

    #[test]
    fn noiseless_cellless_observed_equals_background() {
        let cfg = SynthConfig {
            cell_count: 0,
            noise_sigma: 0.0,
            ..small_cfg()
        };
        let ds = render(&cfg, &OpticsParams::default()).unwrap();
        for (obs, bg) in ds.sequence.frames().iter().zip(ds.background_truth.frames()) {
            assert_eq!(obs, bg);
        }
    }

    #[test]
    fn layers_add_up_exactly_without_noise() {
        let ds = render(&small_cfg(), &OpticsParams::default()).unwrap();
        for k in 0..ds.sequence.len() {
            for i in 0..ds.sequence.frame(k).len() {
                let o = ds.sequence.frame(k).as_slice()[i];
                let b = ds.background_truth.frame(k).as_slice()[i];
                let f = ds.foreground_truth.frame(k).as_slice()[i];
                assert!((o - b - f).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn correlated_noise_stack_has_rank_one() {
        let cfg = SynthConfig {
            cell_count: 0,
            noise_sigma: 0.05,
            noise_correlated: true,
            ..small_cfg()
        };
        let ds = render(&cfg, &OpticsParams::default()).unwrap();
        // noise = observed - background; rank 1 means all columns proportional
        let n0: Vec<f64> = ds
            .sequence
            .frame(0)
            .as_slice()
            .iter()
            .zip(ds.background_truth.frame(0).as_slice())
            .map(|(o, b)| o - b)
            .collect();
        for k in 1..ds.sequence.len() {
            let nk: Vec<f64> = ds
                .sequence
                .frame(k)
                .as_slice()
                .iter()
                .zip(ds.background_truth.frame(k).as_slice())
                .map(|(o, b)| o - b)
                .collect();
            let ratio = nk[0] / n0[0];
            for (a, b) in n0.iter().zip(&nk) {
                assert!((b - ratio * a).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let cfg = SynthConfig {
            noise_sigma: 0.02,
            ..small_cfg()
        };
        let a = render(&cfg, &OpticsParams::default()).unwrap();
        let b = render(&cfg, &OpticsParams::default()).unwrap();
        assert_eq!(a.manifest().checksums.observed, b.manifest().checksums.observed);
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.masks_truth, b.masks_truth);
    }

    #[test]
    fn different_seeds_differ() {
        let a = render(&small_cfg(), &OpticsParams::default()).unwrap();
        let b = render(
            &SynthConfig {
                seed: 7,
                ..small_cfg()
            },
            &OpticsParams::default(),
        )
        .unwrap();
        assert_ne!(a.sequence, b.sequence);
    }

    #[test]
    fn stacked_background_rank_matches_config() {
        let cfg = SynthConfig {
            bg_rank: 2,
            n_frames: 8,
            ..small_cfg()
        };
        let bg = gen_background(&cfg).unwrap();
        let m = crate::image::stack(&bg);
        let dm = nalgebra::DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice());
        let svals = dm.singular_values();
        assert!(svals[2] / svals[0] <= 1e-10, "sigma3/sigma1 = {}", svals[2] / svals[0]);
    }
}
