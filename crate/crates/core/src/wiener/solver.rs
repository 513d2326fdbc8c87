//! Conjugate gradients with a symmetric (split) preconditioner.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Iterative solver settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative residual target.
    pub tol: f64,
    pub max_iters: usize,
    /// Cap on the Wiener penalization weight where the signal PSD vanishes.
    pub f_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iters: 2000,
            f_max: 1e8,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CgOutcome {
    pub solution: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `S M S z = S b` by CG and returns `x = S z`.
///
/// `apply` is `M` (symmetric positive semidefinite) and `split` is the symmetric
/// preconditioner factor `S`. The reported residual is `‖S b - S M x‖ / ‖S b‖`.
pub(crate) fn split_pcg(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    split: impl Fn(&DVector<f64>) -> DVector<f64>,
    rhs: &DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome> {
    let op = |z: &DVector<f64>| split(&apply(&split(z)));
    let b = split(rhs);
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: DVector::zeros(rhs.len()),
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let mut z = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut iterations = 0;
    let mut residual = 1.0;
    while iterations < max_iters {
        let ap = op(&p);
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            if rr.sqrt() <= tol * b_norm {
                break;
            }
            return Err(Error::Singular(format!(
                "search direction with nonpositive curvature {pap:e} at iteration {iterations}"
            )));
        }
        let alpha = rr / pap;
        z.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        iterations += 1;
        let rr_new = r.norm_squared();
        residual = rr_new.sqrt() / b_norm;
        if residual <= tol {
            // confirm against the true residual to guard against drift
            let true_res = (&b - op(&z)).norm() / b_norm;
            residual = true_res;
            if true_res <= tol {
                break;
            }
            r = &b - op(&z);
            p = r.clone();
            rr = r.norm_squared();
            continue;
        }
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    Ok(CgOutcome {
        solution: split(&z),
        iterations,
        residual,
        converged: residual <= tol,
    })
}
