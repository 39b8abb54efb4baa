//! Independent oracles shared by the integration and acceptance tests.
//!
//! Everything here recomputes results along a different algorithmic route
//! than the library: exhaustive grid search instead of primal-dual
//! iteration, one-sided Jacobi instead of the library's SVD, a sliding
//! window instead of the FFT, from-scratch variance scans instead of the
//! cumulative histogram recurrence.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use phasecell::gfl::EdgeWeights;
use phasecell::image::Frame;
use phasecell::optics::Kernel;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn random_frame(rng: &mut ChaCha12Rng, w: usize, h: usize, lo: f64, hi: f64) -> Frame {
    let data = (0..w * h).map(|_| rng.random_range(lo..hi)).collect();
    Frame::new(w, h, data).unwrap()
}

/// Prox objective recomputed from raw parts (no library helper).
pub fn prox_objective_naive(
    e: &[f64],
    v: &[f64],
    tau: f64,
    gamma: f64,
    w: &EdgeWeights,
) -> f64 {
    let mut obj = 0.0;
    for (a, b) in e.iter().zip(v) {
        obj += 0.5 * (a - b) * (a - b) + tau * a.abs();
    }
    let (width, height) = (w.width(), w.height());
    let mut idx = 0;
    for y in 0..height {
        for x in 0..width.saturating_sub(1) {
            obj += tau * gamma * w.horizontal()[idx] * (e[y * width + x] - e[y * width + x + 1]).abs();
            idx += 1;
        }
    }
    idx = 0;
    for y in 0..height.saturating_sub(1) {
        for x in 0..width {
            obj += tau * gamma * w.vertical()[idx] * (e[y * width + x] - e[(y + 1) * width + x]).abs();
            idx += 1;
        }
    }
    obj
}

/// Minimum of the prox objective over the discretized grid
/// `{lo, lo+step, ..., hi}^p`, computed exactly by dynamic programming over
/// the pixel graph. Supports 1xN / Nx1 chains and the 2x2 cycle, which is
/// all the oracle suite uses.
pub fn grid_search_prox_objective(
    v: &Frame,
    tau: f64,
    gamma: f64,
    w: &EdgeWeights,
    step: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let n_vals = ((hi - lo) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..n_vals).map(|i| lo + i as f64 * step).collect();
    let vd = v.as_slice();
    let unary = |i: usize, x: f64| 0.5 * (x - vd[i]) * (x - vd[i]) + tau * x.abs();

    let (width, height) = (v.width(), v.height());
    if width == 2 && height == 2 {
        // cycle 0 -1(h0)- 1 -3(v1)- 3 -2(h1)- 2 -0(v0)-
        let wh = w.horizontal();
        let wv = w.vertical();
        let pair = |wgt: f64, a: f64, b: f64| tau * gamma * wgt * (a - b).abs();
        let mut best = f64::INFINITY;
        let mut a = vec![0.0; n_vals];
        let mut b = vec![0.0; n_vals];
        let mut c = vec![0.0; n_vals];
        for &x0 in &grid {
            for (i1, &x1) in grid.iter().enumerate() {
                a[i1] = pair(wh[0], x0, x1) + unary(1, x1);
            }
            for (i3, &x3) in grid.iter().enumerate() {
                let mut m = f64::INFINITY;
                for (i1, &x1) in grid.iter().enumerate() {
                    let val = a[i1] + pair(wv[1], x1, x3);
                    if val < m {
                        m = val;
                    }
                }
                b[i3] = m + unary(3, x3);
            }
            for (i2, &x2) in grid.iter().enumerate() {
                let mut m = f64::INFINITY;
                for (i3, &x3) in grid.iter().enumerate() {
                    let val = b[i3] + pair(wh[1], x3, x2);
                    if val < m {
                        m = val;
                    }
                }
                c[i2] = m + unary(2, x2) + pair(wv[0], x2, x0);
            }
            let inner = c.iter().copied().fold(f64::INFINITY, f64::min);
            let total = unary(0, x0) + inner;
            if total < best {
                best = total;
            }
        }
        return best;
    }

    // chain: either 1xN (horizontal) or Nx1 (vertical)
    let (n, edge_w): (usize, &[f64]) = if height == 1 {
        (width, w.horizontal())
    } else if width == 1 {
        (height, w.vertical())
    } else {
        panic!("oracle supports 1xN, Nx1 and 2x2 only");
    };
    let mut m: Vec<f64> = grid.iter().map(|&x| unary(0, x)).collect();
    for i in 1..n {
        let mut next = vec![0.0; n_vals];
        for (iy, &y) in grid.iter().enumerate() {
            let mut best = f64::INFINITY;
            for (ix, &x) in grid.iter().enumerate() {
                let val = m[ix] + tau * gamma * edge_w[i - 1] * (x - y).abs();
                if val < best {
                    best = val;
                }
            }
            next[iy] = best + unary(i, y);
        }
        m = next;
    }
    m.into_iter().fold(f64::INFINITY, f64::min)
}

/// Singular values by one-sided Jacobi (Hestenes) rotations, descending.
/// Independent of the library's SVD route.
pub fn jacobi_singular_values(rows: usize, cols: usize, data_col_major: &[f64]) -> Vec<f64> {
    assert_eq!(data_col_major.len(), rows * cols);
    // work on the orientation with fewer columns
    let (m, n, mut a): (usize, usize, Vec<f64>) = if rows >= cols {
        (rows, cols, data_col_major.to_vec())
    } else {
        // transpose into column-major of the transpose
        let mut t = vec![0.0; rows * cols];
        for c in 0..cols {
            for r in 0..rows {
                t[r * cols + c] = data_col_major[c * rows + r];
            }
        }
        (cols, rows, t)
    };

    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (mut alpha, mut beta, mut g) = (0.0f64, 0.0f64, 0.0f64);
                for r in 0..m {
                    let ai = a[i * m + r];
                    let aj = a[j * m + r];
                    alpha += ai * ai;
                    beta += aj * aj;
                    g += ai * aj;
                }
                if g.abs() <= 1e-15 * (alpha * beta).sqrt().max(1e-300) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let ai = a[i * m + r];
                    let aj = a[j * m + r];
                    a[i * m + r] = c * ai - s * aj;
                    a[j * m + r] = s * ai + c * aj;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|r| a[j * m + r] * a[j * m + r]).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

fn reflect(idx: isize, len: usize) -> usize {
    let len = len as isize;
    let mut i = idx;
    if i < 0 {
        i = -i;
    }
    if i >= len {
        i = 2 * (len - 1) - i;
    }
    i as usize
}

/// Naive sliding-window convolution with mirror (no edge repeat) padding.
pub fn spatial_convolve(img: &Frame, kernel: &Kernel) -> Frame {
    let (w, h) = (img.width(), img.height());
    let k = kernel.size();
    let c = (k - 1) as isize / 2;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for dy in -c..=c {
                for dx in -c..=c {
                    let tap = kernel.get((c + dx) as usize, (c + dy) as usize);
                    let sy = reflect(y - dy, h);
                    let sx = reflect(x - dx, w);
                    acc += tap * img.get(sx, sy);
                }
            }
            out[(y as usize) * w + x as usize] = acc;
        }
    }
    Frame::new(w, h, out).unwrap()
}

/// Otsu split recomputed from scratch for every candidate: per split, both
/// class weights and means are re-accumulated over the histogram.
pub fn otsu_split_brute(hist: &[u64; 256]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for k in 0..255usize {
        let mut w0 = 0.0;
        let mut s0 = 0.0;
        for (i, &h) in hist.iter().enumerate().take(k + 1) {
            w0 += h as f64;
            s0 += i as f64 * h as f64;
        }
        let mut w1 = 0.0;
        let mut s1 = 0.0;
        for (i, &h) in hist.iter().enumerate().skip(k + 1) {
            w1 += h as f64;
            s1 += i as f64 * h as f64;
        }
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let var = w0 * w1 * (s0 / w0 - s1 / w1) * (s0 / w0 - s1 / w1);
        match best {
            Some((_, b)) if var <= b => {}
            _ => best = Some((k, var)),
        }
    }
    best.map(|(k, _)| k)
}

/// Accuracy by a bare pixel loop: `(correct pixels) / (all pixels)`.
pub fn accuracy_pixel_loop(mask: &[bool], truth: &[bool]) -> f64 {
    assert_eq!(mask.len(), truth.len());
    let correct = mask
        .iter()
        .zip(truth)
        .filter(|(m, t)| m == t)
        .count();
    correct as f64 / mask.len() as f64
}
