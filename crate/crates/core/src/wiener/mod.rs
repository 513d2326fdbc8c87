//! Reconstruction of time-vertex signals from linear measurements `y = A x + w`.
//!
//! Three estimators share one matrix-free machinery:
//!
//! * Tikhonov: `argmin ‖Ax − y‖² + α xᵀ L_J x`.
//! * Wiener: `argmin ‖Ax − y‖² + ‖f(L_J)(x − E[x])‖²` with `f = √(h_W / h_X)`.
//! * Noiseless Wiener: `argmin ‖h_X^{-1/2}(L_J) x‖²` subject to `A x = y`.
//!
//! The regularized problems are solved through their normal equations by
//! conjugate gradients, split-preconditioned with the joint filter
//! `(g + p)^{-1/2}(L_J)` where `g` approximates `AᵀA` and `p` is the penalty
//! response. The reported residual is the one of the preconditioned system;
//! without it the `f_max` cap makes the plain normal equations too
//! ill-conditioned to measure a relative residual of 1e-8.

mod operator;
mod solver;

pub use operator::{
    adjoint_mismatch, CustomOperator, IdentityOperator, JointFilterOperator, LinearOperator,
    MaskOperator, OperatorKind,
};
pub use solver::SolverConfig;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::joint::{is_conjugate_symmetric, JointBasis};
use crate::stationarity::check_psd;
use solver::split_pcg;

const SYMMETRY_TOL: f64 = 1e-9;

/// Result of an iterative reconstruction.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: DMatrix<f64>,
    pub iterations: usize,
    /// Final relative residual of the system that was iterated on.
    pub residual: f64,
    pub converged: bool,
}

fn check_response(basis: &JointBasis, r: &DMatrix<f64>, what: &str) -> Result<()> {
    basis.check_shape(r.nrows(), r.ncols())?;
    if !is_conjugate_symmetric(r, SYMMETRY_TOL) {
        return Err(Error::InvalidArgument(format!(
            "{what} must be symmetric in time frequency (h(λ, ω) = h(λ, -ω))"
        )));
    }
    Ok(())
}

fn check_operator(basis: &JointBasis, a: &dyn LinearOperator, y: &DVector<f64>) -> Result<()> {
    let (n, t) = basis.shape();
    if a.input_len() != n * t {
        return Err(Error::dims(n * t, a.input_len()));
    }
    if y.len() != a.output_len() {
        return Err(Error::dims(a.output_len(), y.len()));
    }
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "measurements".into(),
            value: *v,
        });
    }
    Ok(())
}

fn flat_filter<'a>(
    basis: &'a JointBasis,
    resp: &'a DMatrix<f64>,
) -> impl Fn(&DVector<f64>) -> DVector<f64> + 'a {
    move |v: &DVector<f64>| {
        let (n, t) = basis.shape();
        let m = DMatrix::from_column_slice(n, t, v.as_slice());
        DVector::from_column_slice(basis.filter_unchecked(resp, &m).as_slice())
    }
}

fn finish(report: SolveReport) -> Result<SolveReport> {
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            residual: report.residual,
        });
    }
    Ok(report)
}

/// Solves `(AᵀA + P(L_J)) x = Aᵀ y` where `P` is a nonnegative joint response.
fn solve_regularized(
    basis: &JointBasis,
    a: &dyn LinearOperator,
    y: &DVector<f64>,
    penalty: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    let (n, t) = basis.shape();
    let gram = a
        .gram_response()
        .unwrap_or_else(|| DMatrix::from_element(n, t, a.gram_scale()));
    let split_resp = gram.zip_map(penalty, |g, p| {
        let d = g + p;
        if d > 0.0 {
            1.0 / d.sqrt()
        } else {
            0.0
        }
    });
    let penalty_op = flat_filter(basis, penalty);
    let apply = |x: &DVector<f64>| a.adjoint(&a.forward(x)) + penalty_op(x);
    let split = flat_filter(basis, &split_resp);
    let rhs = a.adjoint(y);
    let out = split_pcg(apply, split, &rhs, cfg.tol, cfg.max_iters)?;
    Ok(SolveReport {
        solution: DMatrix::from_column_slice(n, t, out.solution.as_slice()),
        iterations: out.iterations,
        residual: out.residual,
        converged: out.converged,
    })
}

/// Tikhonov reconstruction `argmin ‖Ax − y‖² + α xᵀ L_J x`.
pub fn tikhonov_solve(
    basis: &JointBasis,
    a: &dyn LinearOperator,
    y: &DVector<f64>,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_operator(basis, a, y)?;
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "regularization weight must be nonnegative, got {alpha}"
        )));
    }
    let penalty = basis.joint_laplacian_response()? * alpha;
    finish(solve_regularized(basis, a, y, &penalty, cfg)?)
}

/// Penalization weights `f = √(h_W / h_X)`, capped at `f_max`.
///
/// Where `h_X = 0` and `h_W > 0` the weight is `f_max`; where both vanish it is 0.
pub fn wiener_weights(
    h_x: &DMatrix<f64>,
    h_w: &DMatrix<f64>,
    f_max: f64,
) -> Result<DMatrix<f64>> {
    check_psd(h_x)?;
    check_psd(h_w)?;
    if h_x.shape() != h_w.shape() {
        return Err(Error::dims(
            format!("{:?}", h_x.shape()),
            format!("{:?}", h_w.shape()),
        ));
    }
    Ok(h_x.zip_map(h_w, |x, w| {
        if w == 0.0 {
            0.0
        } else if x == 0.0 {
            f_max
        } else {
            (w / x).sqrt().min(f_max)
        }
    }))
}

/// Wiener reconstruction with a constant prior mean `mean_coeff · 1`.
pub fn wiener_solve(
    basis: &JointBasis,
    a: &dyn LinearOperator,
    y: &DVector<f64>,
    h_x: &DMatrix<f64>,
    h_w: &DMatrix<f64>,
    mean_coeff: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_operator(basis, a, y)?;
    check_response(basis, h_x, "signal PSD")?;
    check_response(basis, h_w, "noise PSD")?;
    let f = wiener_weights(h_x, h_w, cfg.f_max)?;
    let penalty = f.map(|v| v * v);
    let mean = DVector::from_element(a.input_len(), mean_coeff);
    let centred_y = y - a.forward(&mean);
    let mut report = solve_regularized(basis, a, &centred_y, &penalty, cfg)?;
    report.solution.add_scalar_mut(mean_coeff);
    finish(report)
}

/// Closed-form joint Wiener filter for `A = a(L_J)`: response `a h_X / (a² h_X + h_W)`.
pub fn joint_wiener_closed_form(
    basis: &JointBasis,
    a_resp: &DMatrix<f64>,
    h_x: &DMatrix<f64>,
    h_w: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_response(basis, a_resp, "operator response")?;
    check_response(basis, h_x, "signal PSD")?;
    check_response(basis, h_w, "noise PSD")?;
    check_psd(h_x)?;
    check_psd(h_w)?;
    basis.check_shape(y.nrows(), y.ncols())?;
    let resp = DMatrix::from_fn(a_resp.nrows(), a_resp.ncols(), |r, c| {
        let (a, hx, hw) = (a_resp[(r, c)], h_x[(r, c)], h_w[(r, c)]);
        let den = a * a * hx + hw;
        if den == 0.0 {
            0.0
        } else {
            a * hx / den
        }
    });
    Ok(basis.filter_unchecked(&resp, y))
}

/// Noiseless Wiener interpolation: minimum `h_X^{-1/2}(L_J)`-norm signal agreeing
/// with `y` on the observed entries.
///
/// Solves `(A h_X(L_J) Aᵀ) μ = y` on the observed entries with Jacobi-scaled CG
/// and returns `x = h_X(L_J) Aᵀ μ`. The reported residual is `‖y − A x‖ / ‖y‖`.
pub fn wiener_solve_noiseless(
    basis: &JointBasis,
    mask: &MaskOperator,
    y: &DVector<f64>,
    h_x: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    check_operator(basis, mask, y)?;
    check_response(basis, h_x, "signal PSD")?;
    check_psd(h_x)?;
    let (n, t) = basis.shape();

    // diag of h_X(L_J): (1/T) Σ_n u_n(i)² Σ_τ h[n, τ], independent of t
    let u = basis.graph().eigenvectors();
    let row_sums: Vec<f64> = h_x.row_iter().map(|r| r.sum()).collect();
    let vertex_diag: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|k| u[(i, k)].powi(2) * row_sums[k]).sum::<f64>() / t as f64)
        .collect();
    let diag = DVector::from_iterator(
        mask.output_len(),
        mask.observed().iter().map(|&k| vertex_diag[k % n]),
    );
    for (j, (&d, &v)) in diag.iter().zip(y.iter()).enumerate() {
        if d <= 0.0 && v != 0.0 {
            let k = mask.observed()[j];
            return Err(Error::Singular(format!(
                "observed entry (vertex {}, time {}) has zero prior variance but value {v}",
                k % n,
                k / n
            )));
        }
    }
    let scale = diag.map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 });
    let positive: Vec<f64> = scale.iter().copied().filter(|&s| s > 0.0).collect();
    let (s_min, s_max) = positive
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    // the scaled residual bounds the true one up to the condition of the scaling
    let inner_tol = if s_max > 0.0 { cfg.tol * s_min / s_max } else { cfg.tol };

    let cov = flat_filter(basis, h_x);
    let apply = |mu: &DVector<f64>| mask.forward(&cov(&mask.adjoint(mu)));
    let split = |v: &DVector<f64>| v.component_mul(&scale);
    let out = split_pcg(apply, split, y, inner_tol, cfg.max_iters)?;

    let x = cov(&mask.adjoint(&out.solution));
    let y_norm = y.norm();
    let residual = if y_norm > 0.0 {
        (y - mask.forward(&x)).norm() / y_norm
    } else {
        0.0
    };
    if out.converged && residual > cfg.tol {
        return Err(Error::Singular(format!(
            "observation constraint violated (relative residual {residual:e}); the mask is incompatible with the prior"
        )));
    }
    finish(SolveReport {
        solution: DMatrix::from_column_slice(n, t, x.as_slice()),
        iterations: out.iterations,
        residual,
        converged: out.converged && residual <= cfg.tol,
    })
}
