//! Image sequences, the stacked pixels-by-frames matrix view, and PGM I/O.
//!
//! A sequence of same-sized grayscale frames is the unit of work for the
//! whole pipeline. Frames vectorize in row-major raster order (top-left
//! origin) into the columns of a [`StackedMatrix`]; `unstack(stack(s))`
//! reproduces `s` bit-exactly.
//!
//! Intensities are `f64` in `[0, 1]` after loading (`v / (2^d - 1)` for bit
//! depth `d`). Intermediate pipeline frames may leave `[0, 1]`; values are
//! clamped only when written back to disk, so signed foregrounds survive
//! until save time.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One grayscale frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "frame data length {} does not equal {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("frame intensities".into()));
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Frame {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Binary frame: segmentation masks and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dims(format!(
                "mask data length {} does not equal {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Mask {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Ordered stack of same-sized frames.
///
/// Construction enforces uniform dimensions and at least one frame; the
/// decomposition additionally requires two or more (a single frame carries
/// no cross-frame correlation to exploit).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSequence {
    frames: Vec<Frame>,
}

impl ImageSequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InsufficientFrames { found: 0, need: 1 })?;
        let (w, h) = (first.width(), first.height());
        for (i, f) in frames.iter().enumerate() {
            if f.width() != w || f.height() != h {
                return Err(Error::dims(format!(
                    "frame {} is {}x{}, expected {}x{}",
                    i,
                    f.width(),
                    f.height(),
                    w,
                    h
                )));
            }
        }
        Ok(ImageSequence { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// Pixels-by-frames matrix view of a sequence, stored column-major so each
/// column is one vectorized frame.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StackedMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "matrix data length {} does not equal {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(StackedMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        StackedMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    pub fn column_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.rows..(k + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Vectorize each frame in row-major raster order and stack the results as
/// matrix columns.
pub fn stack(seq: &ImageSequence) -> StackedMatrix {
    let p = seq.width() * seq.height();
    let n = seq.len();
    let mut data = Vec::with_capacity(p * n);
    for frame in seq.frames() {
        data.extend_from_slice(frame.as_slice());
    }
    StackedMatrix {
        rows: p,
        cols: n,
        data,
    }
}

/// Exact inverse of [`stack`]: rebuild the frame sequence from matrix columns.
pub fn unstack(m: &StackedMatrix, width: usize, height: usize) -> Result<ImageSequence> {
    if m.rows != width * height {
        return Err(Error::dims(format!(
            "matrix has {} rows, cannot unstack to {}x{} frames",
            m.rows, width, height
        )));
    }
    let frames = (0..m.cols)
        .map(|k| Frame::new(width, height, m.column(k).to_vec()))
        .collect::<Result<Vec<_>>>()?;
    ImageSequence::new(frames)
}

/// Rebuild a single column as a frame without going through a sequence.
pub fn column_frame(m: &StackedMatrix, k: usize, width: usize, height: usize) -> Result<Frame> {
    if m.rows != width * height {
        return Err(Error::dims(format!(
            "matrix has {} rows, cannot view column as {}x{}",
            m.rows, width, height
        )));
    }
    Frame::new(width, height, m.column(k).to_vec())
}

/// Output quantization for PGM files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn maxval(self) -> u32 {
        match self {
            BitDepth::Eight => 255,
            BitDepth::Sixteen => 65535,
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Write a frame as binary PGM (P5), clamping intensities to `[0, 1]` and
/// quantizing to the requested bit depth. 16-bit samples are big-endian.
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let maxval = depth.maxval();
    let mut bytes = Vec::with_capacity(32 + frame.len() * 2);
    bytes.extend_from_slice(
        format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), maxval).as_bytes(),
    );
    for &v in frame.as_slice() {
        let q = (v.clamp(0.0, 1.0) * maxval as f64).round() as u32;
        match depth {
            BitDepth::Eight => bytes.push(q as u8),
            BitDepth::Sixteen => {
                bytes.push((q >> 8) as u8);
                bytes.push((q & 0xff) as u8);
            }
        }
    }
    write_file(path, &bytes)
}

/// Write a mask as binary PGM with 0 = background, 255 = cell.
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(32 + mask.len());
    bytes.extend_from_slice(format!("P5\n{} {}\n255\n", mask.width(), mask.height()).as_bytes());
    bytes.extend(mask.as_slice().iter().map(|&b| if b { 255u8 } else { 0 }));
    write_file(path, &bytes)
}

struct PgmHeader {
    width: usize,
    height: usize,
    maxval: u32,
    data_offset: usize,
}

fn parse_pgm_header(path: &Path, bytes: &[u8]) -> Result<PgmHeader> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(Error::decode(path, "not a binary PGM (missing P5 magic)"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    let mut field_idx = 0;
    while field_idx < 3 {
        // skip whitespace and '#' comments
        loop {
            if pos >= bytes.len() {
                return Err(Error::decode(path, "truncated PGM header"));
            }
            let b = bytes[pos];
            if b == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(Error::decode(path, "malformed PGM header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        fields[field_idx] = text
            .parse::<usize>()
            .map_err(|_| Error::decode(path, "PGM header field out of range"))?;
        field_idx += 1;
    }
    // exactly one whitespace byte separates the header from raster data
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::decode(path, "missing separator before PGM raster"));
    }
    pos += 1;
    let maxval = fields[2] as u32;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::decode(path, format!("unsupported maxval {maxval}")));
    }
    Ok(PgmHeader {
        width: fields[0],
        height: fields[1],
        maxval,
        data_offset: pos,
    })
}

/// Load a binary PGM frame. Integer samples `v` with maxval `m` map to
/// `v / m`, so 0 maps to 0.0 and the maximum sample maps to 1.0.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    let hdr = parse_pgm_header(path, &bytes)?;
    let n = hdr.width * hdr.height;
    let raster = &bytes[hdr.data_offset..];
    let wide = hdr.maxval > 255;
    let needed = if wide { 2 * n } else { n };
    if raster.len() < needed {
        return Err(Error::decode(
            path,
            format!("raster has {} bytes, expected {}", raster.len(), needed),
        ));
    }
    let scale = 1.0 / hdr.maxval as f64;
    let data = if wide {
        raster[..needed]
            .chunks_exact(2)
            .map(|c| (((c[0] as u32) << 8) | c[1] as u32) as f64 * scale)
            .collect()
    } else {
        raster[..needed].iter().map(|&b| b as f64 * scale).collect()
    };
    Frame::new(hdr.width, hdr.height, data)
}

/// Load a binary PGM as a mask: nonzero samples are cell pixels.
pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let frame = load_frame(path)?;
    let data = frame.as_slice().iter().map(|&v| v > 0.0).collect();
    Mask::new(frame.width(), frame.height(), data)
}

/// Minimal filename glob: `*` matches any run of characters, `?` exactly one.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    fn rec(p: &[u8], n: &[u8]) -> bool {
        match (p.first(), n.first()) {
            (None, None) => true,
            (Some(b'*'), _) => rec(&p[1..], n) || (!n.is_empty() && rec(p, &n[1..])),
            (Some(b'?'), Some(_)) => rec(&p[1..], &n[1..]),
            (Some(&pc), Some(&nc)) if pc == nc => rec(&p[1..], &n[1..]),
            _ => false,
        }
    }
    rec(pattern.as_bytes(), name.as_bytes())
}

/// Load every PGM in `dir` whose filename matches `pattern`, sorted
/// lexicographically by filename. Requires at least two matching frames of
/// identical dimensions; a mismatch names the offending file.
pub fn load_sequence(dir: impl AsRef<Path>, pattern: &str) -> Result<ImageSequence> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let name = match path.file_name().and_then(|n| n.to_str()) {
            Some(n) => n,
            None => continue,
        };
        if glob_match(pattern, name) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.len() < 2 {
        return Err(Error::InsufficientFrames {
            found: paths.len(),
            need: 2,
        });
    }
    let mut frames = Vec::with_capacity(paths.len());
    let mut dims: Option<(usize, usize)> = None;
    for path in &paths {
        let frame = load_frame(path)?;
        match dims {
            None => dims = Some((frame.width(), frame.height())),
            Some((w, h)) => {
                if frame.width() != w || frame.height() != h {
                    return Err(Error::dims(format!(
                        "{} is {}x{}, expected {}x{}",
                        path.display(),
                        frame.width(),
                        frame.height(),
                        w,
                        h
                    )));
                }
            }
        }
        frames.push(frame);
    }
    ImageSequence::new(frames)
}

/// Load every mask in `dir` matching `pattern`, sorted by filename.
pub fn load_mask_dir(dir: impl AsRef<Path>, pattern: &str) -> Result<Vec<Mask>> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if glob_match(pattern, name) {
                paths.push(path);
            }
        }
    }
    paths.sort();
    paths.iter().map(load_mask).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("tempdir")
    }

    #[test]
    fn frame_rejects_bad_length() {
        assert!(Frame::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Frame::new(2, 2, vec![0.0, 1.0, f64::NAN, 0.5]).is_err());
    }

    #[test]
    fn stack_columns_are_raster_order() {
        // two 1x2 frames [[a,b]] and [[c,d]] stack to columns (a,b), (c,d)
        let f1 = Frame::new(1, 2, vec![0.1, 0.2]).unwrap();
        let f2 = Frame::new(1, 2, vec![0.3, 0.4]).unwrap();
        let seq = ImageSequence::new(vec![f1, f2]).unwrap();
        let m = stack(&seq);
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.column(0), &[0.1, 0.2]);
        assert_eq!(m.column(1), &[0.3, 0.4]);
    }

    #[test]
    fn constant_sequence_stacks_to_rank_one() {
        let f = Frame::constant(3, 2, 0.5);
        let seq = ImageSequence::new(vec![f.clone(), f.clone(), f]).unwrap();
        let m = stack(&seq);
        for k in 1..m.cols() {
            assert_eq!(m.column(k), m.column(0));
        }
    }

    #[test]
    fn unstack_inverts_stack_bit_exactly() {
        let f1 = Frame::new(3, 2, vec![0.0, 0.125, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let f2 = Frame::new(3, 2, vec![1.0, 0.875, 0.75, 0.5, 0.25, 0.0]).unwrap();
        let seq = ImageSequence::new(vec![f1, f2]).unwrap();
        let m = stack(&seq);
        let back = unstack(&m, 3, 2).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn unstack_single_column() {
        let m = StackedMatrix::new(4, 1, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let seq = unstack(&m, 2, 2).unwrap();
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.frame(0).as_slice(), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn unstack_rejects_dim_mismatch() {
        let m = StackedMatrix::zeros(5, 1);
        assert!(unstack(&m, 2, 2).is_err());
    }

    #[test]
    fn sequence_rejects_nonuniform_dims() {
        let f1 = Frame::zeros(2, 2);
        let f2 = Frame::zeros(3, 3);
        let err = ImageSequence::new(vec![f1, f2]).unwrap_err();
        assert!(err.to_string().contains("frame 1"));
    }

    #[test]
    fn pgm_save_load_8bit_roundtrip_within_quantization() {
        let dir = tmpdir();
        let path = dir.path().join("f.pgm");
        let data: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
        let frame = Frame::new(8, 8, data).unwrap();
        save_frame(&frame, &path, BitDepth::Eight).unwrap();
        let back = load_frame(&path).unwrap();
        let max_err = frame
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err <= 1.0 / 255.0, "max err {max_err}");
    }

    #[test]
    fn pgm_16bit_endpoints() {
        let dir = tmpdir();
        let path = dir.path().join("f.pgm");
        let frame = Frame::new(2, 1, vec![0.0, 1.0]).unwrap();
        save_frame(&frame, &path, BitDepth::Sixteen).unwrap();
        let back = load_frame(&path).unwrap();
        assert_eq!(back.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn save_clamps_out_of_range() {
        let dir = tmpdir();
        let path = dir.path().join("f.pgm");
        let frame = Frame::new(2, 1, vec![-0.5, 1.5]).unwrap();
        save_frame(&frame, &path, BitDepth::Eight).unwrap();
        let back = load_frame(&path).unwrap();
        assert_eq!(back.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn mask_roundtrip() {
        let dir = tmpdir();
        let path = dir.path().join("m.pgm");
        let mask = Mask::new(2, 2, vec![true, false, false, true]).unwrap();
        save_mask(&mask, &path).unwrap();
        let back = load_mask(&path).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn glob_basics() {
        assert!(glob_match("*.pgm", "frame_0001.pgm"));
        assert!(glob_match("frame_????.pgm", "frame_0001.pgm"));
        assert!(!glob_match("frame_????.pgm", "frame_001.pgm"));
        assert!(!glob_match("*.png", "frame_0001.pgm"));
        assert!(glob_match("*", "anything"));
    }

    #[test]
    fn load_sequence_normalizes_8bit() {
        let dir = tmpdir();
        // three identical 2x2 images of value 128 at 8-bit depth
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[128u8; 4]);
        for name in ["a.pgm", "b.pgm", "c.pgm"] {
            fs::write(dir.path().join(name), &bytes).unwrap();
        }
        let seq = load_sequence(dir.path(), "*.pgm").unwrap();
        assert_eq!(seq.len(), 3);
        for f in seq.frames() {
            for &v in f.as_slice() {
                assert_eq!(v, 128.0 / 255.0);
            }
        }
    }

    #[test]
    fn load_sequence_requires_two_frames() {
        let dir = tmpdir();
        let mut bytes = b"P5\n1 1\n255\n".to_vec();
        bytes.push(0);
        fs::write(dir.path().join("only.pgm"), &bytes).unwrap();
        match load_sequence(dir.path(), "*.pgm") {
            Err(Error::InsufficientFrames { found: 1, need: 2 }) => {}
            other => panic!("expected insufficient frames, got {other:?}"),
        }
    }

    #[test]
    fn load_sequence_reports_offending_file() {
        let dir = tmpdir();
        let mut small = b"P5\n2 2\n255\n".to_vec();
        small.extend_from_slice(&[0u8; 4]);
        let mut big = b"P5\n3 3\n255\n".to_vec();
        big.extend_from_slice(&[0u8; 9]);
        fs::write(dir.path().join("a.pgm"), &small).unwrap();
        fs::write(dir.path().join("b.pgm"), &big).unwrap();
        let err = load_sequence(dir.path(), "*.pgm").unwrap_err();
        assert!(err.to_string().contains("b.pgm"), "{err}");
    }

    #[test]
    fn load_sequence_missing_dir() {
        let err = load_sequence("/nonexistent/persistently", "*.pgm").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn load_rejects_non_pgm() {
        let dir = tmpdir();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, b"PNG nonsense").unwrap();
        assert!(matches!(load_frame(&path), Err(Error::Decode { .. })));
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let dir = tmpdir();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# a comment\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255]);
        fs::write(&path, &bytes).unwrap();
        let f = load_frame(&path).unwrap();
        assert_eq!(f.as_slice(), &[0.0, 1.0]);
    }
}
