//! Jointly wide-sense stationary (JWSS) processes: synthesis by filtering white
//! noise, empirical spectra, stationarity diagnostics and marginal spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::joint::{JointBasis, JointFilter};

/// Default threshold for the diagnostic verdicts.
pub const DEFAULT_DIAGNOSTIC_TOL: f64 = 0.15;

/// Largest `N T` for which the diagnostic forms the dense sample covariance.
pub const DIAGNOSTIC_MAX_DIM: usize = 4096;

/// Zero-mean, unit-variance white noise distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Uniform,
    Rademacher,
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "uniform" => Ok(NoiseKind::Uniform),
            "rademacher" => Ok(NoiseKind::Rademacher),
            other => Err(Error::InvalidArgument(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Random stream for realization `index` of a run seeded with `seed`.
///
/// Each index gets its own ChaCha stream, so realizations do not depend on the
/// order in which they are generated.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `rows × cols` matrix of i.i.d. zero-mean unit-variance samples.
pub fn white_noise(rows: usize, cols: usize, kind: NoiseKind, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    match kind {
        NoiseKind::Gaussian => DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng)),
        NoiseKind::Uniform => {
            let b = 3f64.sqrt();
            let u = Uniform::new_inclusive(-b, b).expect("finite bounds");
            DMatrix::from_fn(rows, cols, |_, _| u.sample(rng))
        }
        NoiseKind::Rademacher => DMatrix::from_fn(rows, cols, |_, _| {
            if rand::Rng::random::<bool>(rng) {
                1.0
            } else {
                -1.0
            }
        }),
    }
}

pub(crate) fn check_psd(jpsd: &DMatrix<f64>) -> Result<()> {
    for c in 0..jpsd.ncols() {
        for r in 0..jpsd.nrows() {
            let v = jpsd[(r, c)];
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("psd ({r}, {c})"),
                    value: v,
                });
            }
            if v < 0.0 {
                return Err(Error::NegativePsd {
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Constant mean `c · 1` plus a joint power spectral density on the `N × T` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JwssModel {
    mean_coefficient: f64,
    jpsd: DMatrix<f64>,
}

impl JwssModel {
    pub fn new(mean_coefficient: f64, jpsd: DMatrix<f64>) -> Result<Self> {
        if !mean_coefficient.is_finite() {
            return Err(Error::NonFinite {
                location: "mean coefficient".into(),
                value: mean_coefficient,
            });
        }
        check_psd(&jpsd)?;
        Ok(JwssModel {
            mean_coefficient,
            jpsd,
        })
    }

    pub fn mean_coefficient(&self) -> f64 {
        self.mean_coefficient
    }

    pub fn jpsd(&self) -> &DMatrix<f64> {
        &self.jpsd
    }

    /// The model after filtering with `f(L_J)`: mean scaled by `f(0, 0)`, JPSD by `f²`.
    pub fn filtered(&self, f: &JointFilter) -> Result<JwssModel> {
        let jpsd = filter_psd_transform(f, &self.jpsd)?;
        Ok(JwssModel {
            mean_coefficient: self.mean_coefficient * f.response()[(0, 0)],
            jpsd,
        })
    }
}

/// Draws `n_realizations` signals `c·1 + √h(L_J) w` with white noise `w`.
pub fn synthesize_jwss(
    basis: &JointBasis,
    model: &JwssModel,
    n_realizations: usize,
    seed: u64,
    noise: NoiseKind,
) -> Result<Vec<DMatrix<f64>>> {
    let (n, t) = basis.shape();
    basis.check_shape(model.jpsd.nrows(), model.jpsd.ncols())?;
    let shaping = JointFilter::new(model.jpsd.map(f64::sqrt))?;
    (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let w = white_noise(n, t, noise, &mut rng);
            let mut x = basis.filter(&shaping, &w)?;
            x.add_scalar_mut(model.mean_coefficient);
            Ok(x)
        })
        .collect()
}

/// Per-coefficient unbiased sample variance of the joint Fourier coefficients.
pub fn empirical_jpsd(basis: &JointBasis, samples: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let (n, t) = basis.shape();
    let coeffs: Vec<DMatrix<Complex64>> = samples
        .iter()
        .map(|x| basis.jft(x))
        .collect::<Result<_>>()?;
    let count = coeffs.len() as f64;
    let mut mean = DMatrix::<Complex64>::zeros(n, t);
    for c in &coeffs {
        mean += c;
    }
    mean /= Complex64::new(count, 0.0);
    let mut var = DMatrix::<f64>::zeros(n, t);
    for c in &coeffs {
        var.zip_zip_apply(c, &mean, |v, a, m| *v += (a - m).norm_sqr());
    }
    Ok(var / (count - 1.0))
}

/// Outcome of [`jwss_diagnostic`].
#[derive(Debug, Clone, PartialEq)]
pub struct JwssReport {
    /// `‖offdiag(U_J^* Σ̂ U_J)‖_F / ‖Σ̂‖_F` (0 when `Σ̂ = 0`).
    pub offdiag_ratio: f64,
    /// `‖L_J x̄‖ / ‖x̄‖` for the sample mean `x̄` (0 when `x̄ = 0`).
    pub mean_nullspace_residual: f64,
    /// True when the sample mean is constant up to sampling error: either the
    /// residual is below tolerance or the non-constant part of the mean has
    /// energy below `9 tr(Σ̂) / n_samples` (three standard errors).
    pub mean_is_constant: bool,
    /// Same ratio for the per-vertex time covariances against the DFT basis.
    pub time_offdiag_ratio: f64,
    /// Same ratio for the per-time vertex covariances against the graph basis.
    pub vertex_offdiag_ratio: f64,
    pub jointly_stationary: bool,
    pub time_stationary: bool,
    pub vertex_stationary: bool,
}

fn offdiag_sq(spectral: &DMatrix<Complex64>) -> f64 {
    let mut off = 0.0;
    for c in 0..spectral.ncols() {
        for r in 0..spectral.nrows() {
            if r != c {
                off += spectral[(r, c)].norm_sqr();
            }
        }
    }
    off
}

fn ratio(off_sq: f64, total_sq: f64) -> f64 {
    if total_sq <= 0.0 {
        0.0
    } else {
        (off_sq / total_sq).sqrt()
    }
}

/// Checks how close a set of realizations is to joint, time and vertex stationarity.
///
/// Builds the dense `NT × NT` sample covariance, so it is limited to
/// `N T ≤ DIAGNOSTIC_MAX_DIM`. The three verdicts are reported separately and
/// none is inferred from the others.
pub fn jwss_diagnostic(
    basis: &JointBasis,
    samples: &[DMatrix<f64>],
    tol: f64,
) -> Result<JwssReport> {
    let (n, t) = basis.shape();
    let dim = n * t;
    if dim > DIAGNOSTIC_MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "diagnostic needs N*T <= {DIAGNOSTIC_MAX_DIM}, got {dim}"
        )));
    }
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    for s in samples {
        basis.check_shape(s.nrows(), s.ncols())?;
    }
    let count = samples.len() as f64;
    let mut mean = DMatrix::<f64>::zeros(n, t);
    for s in samples {
        mean += s;
    }
    mean /= count;

    let mean_vec = DVector::from_column_slice(mean.as_slice());
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for s in samples {
        let d = DVector::from_column_slice(s.as_slice()) - &mean_vec;
        cov.ger(1.0, &d, &d, 1.0);
    }
    cov /= count - 1.0;

    let total_sq = cov.norm_squared();
    let uj = basis.dense_basis();
    let cov_c = cov.map(|v| Complex64::new(v, 0.0));
    let spectral = uj.adjoint() * &cov_c * &uj;
    let joint = ratio(offdiag_sq(&spectral), total_sq);

    // per-vertex time covariance blocks: entries (i + N t1, i + N t2)
    let ut = basis.time().basis_matrix();
    let (mut t_off, mut t_tot) = (0.0, 0.0);
    for i in 0..n {
        let block = DMatrix::from_fn(t, t, |a, b| Complex64::new(cov[(i + n * a, i + n * b)], 0.0));
        let s = ut.adjoint() * &block * &ut;
        t_off += offdiag_sq(&s);
        t_tot += block.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let ug = basis.graph().eigenvectors();
    let (mut v_off, mut v_tot) = (0.0, 0.0);
    for tt in 0..t {
        let block = cov.view((n * tt, n * tt), (n, n)).into_owned();
        let s = (ug.transpose() * &block * ug).map(|v| Complex64::new(v, 0.0));
        v_off += offdiag_sq(&s);
        v_tot += block.norm_squared();
    }

    let mean_norm = mean.norm();
    let mean_residual = if mean_norm <= 0.0 {
        0.0
    } else {
        let lj = JointFilter::new(basis.joint_laplacian_response()?)?;
        basis.filter(&lj, &mean)?.norm() / mean_norm
    };

    let grand = mean.mean();
    let deviation_sq = mean.map(|v| (v - grand).powi(2)).sum();
    let sampling_sq = 9.0 * cov.trace() / count;
    let mean_is_constant = mean_residual < tol || deviation_sq <= sampling_sq;

    let time_ratio = ratio(t_off, t_tot);
    let vertex_ratio = ratio(v_off, v_tot);
    Ok(JwssReport {
        offdiag_ratio: joint,
        mean_nullspace_residual: mean_residual,
        mean_is_constant,
        time_offdiag_ratio: time_ratio,
        vertex_offdiag_ratio: vertex_ratio,
        jointly_stationary: joint < tol && mean_is_constant,
        time_stationary: time_ratio < tol,
        vertex_stationary: vertex_ratio < tol,
    })
}

/// JPSD after filtering with `f(L_J)`: `f² ∘ h`.
pub fn filter_psd_transform(f: &JointFilter, jpsd_in: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = f.response();
    if r.shape() != jpsd_in.shape() {
        return Err(Error::dims(
            format!("{:?}", jpsd_in.shape()),
            format!("{:?}", r.shape()),
        ));
    }
    Ok(r.zip_map(jpsd_in, |f, h| f * f * h))
}

/// Time PSD seen at vertex `i`: `γ_i(ω_τ) = Σ_n h(λ_n, ω_τ) u_n(i)²`.
pub fn marginal_tpsd(basis: &JointBasis, jpsd: &DMatrix<f64>, vertex: usize) -> Result<Vec<f64>> {
    basis.check_shape(jpsd.nrows(), jpsd.ncols())?;
    let n = basis.n_vertices();
    if vertex >= n {
        return Err(Error::IndexOutOfRange { index: vertex, len: n });
    }
    let u = basis.graph().eigenvectors();
    Ok((0..basis.n_steps())
        .map(|tau| (0..n).map(|k| jpsd[(k, tau)] * u[(vertex, k)].powi(2)).sum())
        .collect())
}

/// Vertex PSD seen at time `t`: `s_t(λ_n) = (1/T) Σ_τ h(λ_n, ω_τ)`, the same for every `t`.
pub fn marginal_vpsd(basis: &JointBasis, jpsd: &DMatrix<f64>, time: usize) -> Result<Vec<f64>> {
    basis.check_shape(jpsd.nrows(), jpsd.ncols())?;
    let t = basis.n_steps();
    if time >= t {
        return Err(Error::IndexOutOfRange { index: time, len: t });
    }
    Ok(jpsd.row_iter().map(|row| row.sum() / t as f64).collect())
}
