//! Fused-lasso prox against the exhaustive grid-search oracle.

mod common;

use phasecell::gfl::{gfl_prox, EdgeWeights, GflParams};
use phasecell::image::Frame;

use common::*;

/// The grid DP must agree with blunt full enumeration where the latter is
/// affordable (1x2: two coupled values).
#[test]
fn oracle_self_check_against_full_enumeration() {
    let v = Frame::new(2, 1, vec![0.73, -0.41]).unwrap();
    let w = EdgeWeights::uniform(2, 1);
    let (tau, gamma, step, lo, hi) = (0.3, 1.0, 0.01, -0.5, 0.8);
    let dp = grid_search_prox_objective(&v, tau, gamma, &w, step, lo, hi);

    let n_vals = ((hi - lo) / step).round() as usize + 1;
    let grid: Vec<f64> = (0..n_vals).map(|i| lo + i as f64 * step).collect();
    let mut brute = f64::INFINITY;
    for &a in &grid {
        for &b in &grid {
            let obj = prox_objective_naive(&[a, b], v.as_slice(), tau, gamma, &w);
            brute = brute.min(obj);
        }
    }
    assert!((dp - brute).abs() < 1e-12, "dp {dp} vs brute {brute}");
}

/// Pinned 2x2 instance: v = ((1.0, 0.9), (0.1, 0.0)), tau = 0.2, gamma = 1,
/// unit weights, grid {-0.2, -0.19, ..., 1.2}.
#[test]
fn two_by_two_pinned_instance() {
    let v = Frame::new(2, 2, vec![1.0, 0.9, 0.1, 0.0]).unwrap();
    let w = EdgeWeights::uniform(2, 2);
    let params = GflParams {
        gamma: 1.0,
        ..GflParams::default()
    };
    let out = gfl_prox(&v, 0.2, &w, &params).unwrap();
    let oracle = grid_search_prox_objective(&v, 0.2, 1.0, &w, 0.01, -0.2, 1.2);
    assert!(
        out.objective <= oracle + 1e-3,
        "solver {} vs grid oracle {oracle}",
        out.objective
    );
}

/// The solver may not beat the continuous optimum, so it must also stay
/// close to the grid value from above on a batch of chain instances.
#[test]
fn chain_instances_match_oracle() {
    let mut r = rng(77);
    for i in 0..12 {
        let (w_px, h_px) = if i % 2 == 0 { (4, 1) } else { (1, 4) };
        let v = random_frame(&mut r, w_px, h_px, -1.0, 1.0);
        let weights = phasecell::gfl::neighbor_weights(&v, 0.4).unwrap();
        let params = GflParams {
            gamma: 1.0,
            inner_max_iters: 400,
            ..GflParams::default()
        };
        let out = gfl_prox(&v, 0.25, &weights, &params).unwrap();
        let lo = v.min().min(0.0) - 0.02;
        let hi = v.max().max(0.0) + 0.02;
        let oracle = grid_search_prox_objective(&v, 0.25, 1.0, &weights, 0.01, lo, hi);
        assert!(
            out.objective <= oracle + 1e-3,
            "instance {i}: solver {} vs oracle {oracle}",
            out.objective
        );
    }
}

/// Warm starts must not change what the solver converges to, only help it.
#[test]
fn warm_start_reaches_the_same_objective() {
    let mut r = rng(78);
    let v = random_frame(&mut r, 6, 6, -1.0, 1.0);
    let weights = phasecell::gfl::neighbor_weights(&v, 0.3).unwrap();
    let params = GflParams {
        gamma: 0.8,
        ..GflParams::default()
    };
    let cold = gfl_prox(&v, 0.2, &weights, &params).unwrap();
    let init = random_frame(&mut r, 6, 6, -0.5, 0.5);
    let warm = phasecell::gfl::gfl_prox_with_init(&v, 0.2, &weights, &params, &init).unwrap();
    assert!((cold.objective - warm.objective).abs() <= 1e-4,
        "cold {} vs warm {}", cold.objective, warm.objective);
}
