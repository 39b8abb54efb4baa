//! Low-rank + structured-sparse decomposition of a frame stack.
//!
//! Solves `min ||B||_* + lambda ||E||_gfl  s.t.  A = B + E` with augmented
//! Lagrange multipliers: the B-update is singular value soft-thresholding,
//! the E-update splits into independent per-frame fused-lasso prox problems
//! (the penalty sums per frame and the quadratic coupling is elementwise),
//! the multiplier takes a gradient ascent step, and the penalty grows
//! geometrically whenever successive foreground iterates stall.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gfl::{self, EdgeWeights, GflParams};
use crate::image::{Frame, StackedMatrix};

/// Solver parameters. `lambda` and `mu0` default to data-derived values
/// (`1/sqrt(max(p, n))` and `1.25/sigma_max(A)`) when left unset.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmParams {
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    /// Penalty growth factor, strictly greater than 1.
    pub rho: f64,
    /// Stall threshold for growing the penalty.
    pub epsilon_mu: f64,
    /// Relative feasibility residual at which the loop stops.
    pub stop_tol: f64,
    pub max_iters: usize,
    pub gfl: GflParams,
}

impl Default for AlmParams {
    fn default() -> Self {
        AlmParams {
            lambda: None,
            mu0: None,
            rho: 1.5,
            epsilon_mu: 1e-3,
            stop_tol: 1e-6,
            max_iters: 300,
            gfl: GflParams::default(),
        }
    }
}

impl AlmParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::param("alm.lambda", "must be > 0"));
            }
        }
        if let Some(m) = self.mu0 {
            if !(m > 0.0) {
                return Err(Error::param("alm.mu0", "must be > 0"));
            }
        }
        if !(self.rho > 1.0) {
            return Err(Error::param(
                "alm.rho",
                format!("must exceed 1 (got {})", self.rho),
            ));
        }
        if !(self.epsilon_mu > 0.0) {
            return Err(Error::param("alm.epsilon_mu", "must be > 0"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::param("alm.stop_tol", "must be > 0"));
        }
        if self.max_iters == 0 {
            return Err(Error::param("alm.max_iters", "must be >= 1"));
        }
        self.gfl.validate()
    }

    /// Default trade-off for a `p x n` stack.
    pub fn lambda_for(&self, rows: usize, cols: usize) -> f64 {
        self.lambda
            .unwrap_or_else(|| 1.0 / (rows.max(cols) as f64).sqrt())
    }
}

/// Output of [`decompose`]: background `B`, foreground `E`, multiplier `Y`,
/// and per-iteration diagnostics.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub background: StackedMatrix,
    pub foreground: StackedMatrix,
    pub multiplier: StackedMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Relative feasibility residual per iteration.
    pub residual_history: Vec<f64>,
    /// Penalty value per iteration.
    pub mu_history: Vec<f64>,
    /// Trade-off actually used (resolves the `auto` default).
    pub lambda: f64,
    /// Prox solves that hit their inner iteration budget.
    pub prox_nonconverged: usize,
}

impl Decomposition {
    /// Render the iteration diagnostics as CSV.
    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("iter,residual,mu,converged\n");
        for (i, (r, m)) in self
            .residual_history
            .iter()
            .zip(&self.mu_history)
            .enumerate()
        {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{}\n",
                i + 1,
                r,
                m,
                self.converged
            ));
        }
        out
    }
}

fn to_dmatrix(m: &StackedMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_dmatrix(m: &DMatrix<f64>) -> StackedMatrix {
    StackedMatrix::new(m.nrows(), m.ncols(), m.as_slice().to_vec()).expect("nalgebra dims")
}

fn largest_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Svd("did not converge".into()))?;
    Ok(svd.singular_values.iter().copied().fold(0.0, f64::max))
}

/// Singular value soft-thresholding: `U max(S - tau, 0) V^T`.
pub fn svt(m: &StackedMatrix, tau: f64) -> Result<StackedMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", format!("must be >= 0 (got {tau})")));
    }
    if !m.is_finite() {
        return Err(Error::Svd("non-finite input".into()));
    }
    let a = to_dmatrix(m);
    let svd = a
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Svd("did not converge".into()))?;
    let u = svd.u.ok_or_else(|| Error::Svd("missing U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Svd("missing V^T".into()))?;
    let mut s = svd.singular_values;
    for x in s.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
    // scale rows of V^T by the thresholded singular values, then multiply
    let mut sv_t = v_t;
    for (i, &si) in s.iter().enumerate() {
        sv_t.row_mut(i).scale_mut(si);
    }
    let result = u * sv_t;
    Ok(from_dmatrix(&result))
}

fn zero_decomposition(rows: usize, cols: usize, lambda: f64) -> Decomposition {
    Decomposition {
        background: StackedMatrix::zeros(rows, cols),
        foreground: StackedMatrix::zeros(rows, cols),
        multiplier: StackedMatrix::zeros(rows, cols),
        iterations: 1,
        converged: true,
        residual_history: vec![0.0],
        mu_history: vec![0.0],
        lambda,
        prox_nonconverged: 0,
    }
}

/// Alternating decomposition of the stack `a` whose columns are frames of
/// size `width x height`. Edge weights for the fused-lasso prox come from
/// the original frames, computed once up front.
pub fn decompose(
    a: &StackedMatrix,
    width: usize,
    height: usize,
    params: &AlmParams,
) -> Result<Decomposition> {
    params.validate()?;
    if a.rows() != width * height {
        return Err(Error::dims(format!(
            "stack has {} rows but frames are {}x{}",
            a.rows(),
            width,
            height
        )));
    }
    if a.cols() < 2 {
        return Err(Error::InsufficientFrames {
            found: a.cols(),
            need: 2,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("decomposition input".into()));
    }

    let (p, n) = (a.rows(), a.cols());
    let lambda = params.lambda_for(p, n);
    let a_fro = a.frobenius_norm();
    if a_fro == 0.0 {
        return Ok(zero_decomposition(p, n, lambda));
    }

    // per-frame edge weights from the observed frames
    let weights: Vec<EdgeWeights> = (0..n)
        .map(|k| {
            let frame = Frame::new(width, height, a.column(k).to_vec())?;
            let sigma = params.gfl.sigma.unwrap_or_else(|| gfl::auto_sigma(&frame));
            gfl::neighbor_weights(&frame, sigma)
        })
        .collect::<Result<_>>()?;

    let a_mat = to_dmatrix(a);
    let sigma_max = largest_singular_value(&a_mat)?;
    let mu0 = params.mu0.unwrap_or(1.25 / sigma_max);
    let y_scale = sigma_max.max(a.max_abs() / lambda);
    let mut y = a_mat.clone() / y_scale;
    let mut e = DMatrix::<f64>::zeros(p, n);
    let mut b = DMatrix::<f64>::zeros(p, n);
    let mut mu = mu0;

    let mut residual_history = Vec::new();
    let mut mu_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut prox_nonconverged = 0usize;

    for t in 1..=params.max_iters {
        iterations = t;
        mu_history.push(mu);

        // B-update: singular value soft-thresholding of A - E + Y/mu
        let target = &a_mat - &e + &y / mu;
        let svd = target
            .try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Svd("did not converge".into()))?;
        let u = svd.u.ok_or_else(|| Error::Svd("missing U".into()))?;
        let mut sv_t = svd.v_t.ok_or_else(|| Error::Svd("missing V^T".into()))?;
        for (i, &si) in svd.singular_values.iter().enumerate() {
            sv_t.row_mut(i).scale_mut((si - 1.0 / mu).max(0.0));
        }
        b = u * sv_t;

        // E-update: per-column fused-lasso prox of A - B + Y/mu
        let v_mat = &a_mat - &b + &y / mu;
        let tau = lambda / mu;
        let e_prev = e.clone();
        let columns: Vec<(Vec<f64>, bool)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let v_col = Frame::new(width, height, v_mat.column(k).as_slice().to_vec())?;
                let warm = Frame::new(width, height, e_prev.column(k).as_slice().to_vec())?;
                let out = gfl::gfl_prox_with_init(&v_col, tau, &weights[k], &params.gfl, &warm)?;
                Ok((out.frame.into_vec(), out.converged))
            })
            .collect::<Result<_>>()?;
        for (k, (col, conv)) in columns.into_iter().enumerate() {
            if !conv {
                prox_nonconverged += 1;
            }
            e.column_mut(k).copy_from_slice(&col);
        }

        // multiplier ascent and penalty schedule
        let residual_mat = &a_mat - &b - &e;
        y += &residual_mat * mu;
        let e_change = (&e - &e_prev).norm();
        if mu * e_change / a_fro < params.epsilon_mu {
            mu *= params.rho;
        }

        let rel_residual = residual_mat.norm() / a_fro;
        residual_history.push(rel_residual);
        if rel_residual <= params.stop_tol {
            converged = true;
            break;
        }
    }

    Ok(Decomposition {
        background: from_dmatrix(&b),
        foreground: from_dmatrix(&e),
        multiplier: from_dmatrix(&y),
        iterations,
        converged,
        residual_history,
        mu_history,
        lambda,
        prox_nonconverged,
    })
}
