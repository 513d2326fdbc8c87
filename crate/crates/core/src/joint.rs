//! Joint time-vertex Fourier transform and joint filtering.
//!
//! Signals are `N × T` matrices whose column `t` is the graph signal at time `t`.
//! nalgebra stores matrices column-major, so the flat storage of a signal is
//! already `vec(X)` with `k = N t + i` (0-based).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::GraphSpectrum;
use crate::time::TimeBasis;

/// Relative bound on the imaginary part tolerated when a joint filter output is
/// truncated to a real signal.
pub const REAL_OUTPUT_TOL: f64 = 1e-8;

/// Graph spectrum and time basis together: the eigenbasis `U_J = U_T ⊗ U_G`.
#[derive(Debug, Clone)]
pub struct JointBasis {
    graph: GraphSpectrum,
    time: TimeBasis,
}

/// Joint frequency response sampled on the `(λ_n, ω_τ)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct JointFilter {
    response: DMatrix<f64>,
}

impl JointFilter {
    pub fn new(response: DMatrix<f64>) -> Result<Self> {
        for ((r, c), v) in indexed(&response) {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("joint response ({r}, {c})"),
                    value: v,
                });
            }
        }
        Ok(JointFilter { response })
    }

    /// Samples `h(λ_n, ω_τ)` on the basis grid.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(basis: &JointBasis, h: F) -> Result<Self> {
        let lambdas = basis.graph().eigenvalues();
        let omegas = basis.time().angular_frequencies();
        let resp = DMatrix::from_fn(basis.n_vertices(), basis.n_steps(), |n, t| {
            h(lambdas[n], omegas[t])
        });
        Self::new(resp)
    }

    /// `h(λ, ω) = h1(λ) h2(ω)` from sampled factors.
    pub fn separable(graph_response: &DVector<f64>, time_response: &[f64]) -> Result<Self> {
        let resp = DMatrix::from_fn(graph_response.len(), time_response.len(), |n, t| {
            graph_response[n] * time_response[t]
        });
        Self::new(resp)
    }

    pub fn response(&self) -> &DMatrix<f64> {
        &self.response
    }

    pub fn into_response(self) -> DMatrix<f64> {
        self.response
    }

    /// True when `H[n, τ] = H[n, -τ mod T]`, the condition for real outputs on real inputs.
    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        is_conjugate_symmetric(&self.response, tol)
    }
}

pub(crate) fn is_conjugate_symmetric(resp: &DMatrix<f64>, tol: f64) -> bool {
    let t = resp.ncols();
    let scale = resp.amax().max(f64::MIN_POSITIVE);
    (0..resp.nrows()).all(|n| {
        (1..t).all(|tau| (resp[(n, tau)] - resp[(n, t - tau)]).abs() <= tol * scale)
    })
}

fn indexed(m: &DMatrix<f64>) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
    let rows = m.nrows();
    m.iter()
        .enumerate()
        .map(move |(k, &v)| ((k % rows, k / rows), v))
}

impl JointBasis {
    pub fn new(graph: GraphSpectrum, time: TimeBasis) -> Self {
        JointBasis { graph, time }
    }

    pub fn graph(&self) -> &GraphSpectrum {
        &self.graph
    }

    pub fn time(&self) -> &TimeBasis {
        &self.time
    }

    pub fn n_vertices(&self) -> usize {
        self.graph.n_vertices()
    }

    pub fn n_steps(&self) -> usize {
        self.time.n_steps()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_vertices(), self.n_steps())
    }

    /// Same graph, different number of time steps (and the same eigenvalue mode).
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        Ok(JointBasis {
            graph: self.graph.clone(),
            time: TimeBasis::new(n_steps, self.time.mode())?,
        })
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if (rows, cols) != self.shape() {
            return Err(Error::dims(
                format!("{}x{}", self.n_vertices(), self.n_steps()),
                format!("{rows}x{cols}"),
            ));
        }
        Ok(())
    }

    fn rows_dft(&self, m: &mut DMatrix<Complex64>, inverse: bool) -> Result<()> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m.ncols()];
        for r in 0..m.nrows() {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = m[(r, c)];
            }
            if inverse {
                self.time.idft_in_place(&mut buf)?;
            } else {
                self.time.dft_in_place(&mut buf)?;
            }
            for (c, b) in buf.iter().enumerate() {
                m[(r, c)] = *b;
            }
        }
        Ok(())
    }

    /// `JFT{X} = U_G^T X Ū_T`: GFT on every column, unitary DFT on every row.
    pub fn jft(&self, x: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
        self.check_shape(x.nrows(), x.ncols())?;
        let g = self.graph.eigenvectors().tr_mul(x);
        let mut out = g.map(|v| Complex64::new(v, 0.0));
        self.rows_dft(&mut out, false)?;
        Ok(out)
    }

    pub fn jft_complex(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_shape(x.nrows(), x.ncols())?;
        let u = self.graph.eigenvectors().map(|v| Complex64::new(v, 0.0));
        let mut out = u.tr_mul(x);
        self.rows_dft(&mut out, false)?;
        Ok(out)
    }

    /// `IJFT{X̂} = U_G X̂ U_T^T`.
    pub fn ijft(&self, coeffs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_shape(coeffs.nrows(), coeffs.ncols())?;
        let mut tmp = coeffs.clone();
        self.rows_dft(&mut tmp, true)?;
        let u = self.graph.eigenvectors().map(|v| Complex64::new(v, 0.0));
        Ok(u * tmp)
    }

    /// Inverse transform followed by truncation to the real part.
    ///
    /// Errors if the imaginary residue exceeds `REAL_OUTPUT_TOL` relative to
    /// `reference_norm` (or to the output norm, whichever is larger).
    pub fn ijft_real(
        &self,
        coeffs: &DMatrix<Complex64>,
        reference_norm: f64,
    ) -> Result<DMatrix<f64>> {
        let z = self.ijft(coeffs)?;
        let re = z.map(|v| v.re);
        let residue = z.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
        let tol = REAL_OUTPUT_TOL * reference_norm.max(re.norm());
        if residue > tol && residue > f64::MIN_POSITIVE {
            return Err(Error::ComplexResidue {
                residue,
                tolerance: tol,
            });
        }
        Ok(re)
    }

    fn check_filter(&self, f: &JointFilter) -> Result<()> {
        let r = f.response();
        self.check_shape(r.nrows(), r.ncols())
    }

    /// `h(L_J) x = vec(IJFT(H ∘ JFT(X)))` for a real signal.
    pub fn filter(&self, f: &JointFilter, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_filter(f)?;
        let mut coeffs = self.jft(x)?;
        coeffs.zip_apply(f.response(), |c, h| *c *= h);
        self.ijft_real(&coeffs, x.norm())
    }

    /// Joint filtering of a complex signal; no truncation.
    pub fn filter_complex(
        &self,
        f: &JointFilter,
        x: &DMatrix<Complex64>,
    ) -> Result<DMatrix<Complex64>> {
        self.check_filter(f)?;
        let mut coeffs = self.jft_complex(x)?;
        coeffs.zip_apply(f.response(), |c, h| *c *= h);
        self.ijft(&coeffs)
    }

    /// Filtering with a response already known to be conjugate symmetric; the
    /// imaginary part is dropped without a check.
    pub(crate) fn filter_unchecked(&self, resp: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut coeffs = self.jft(x).expect("shape checked by caller");
        coeffs.zip_apply(resp, |c, h| *c *= h);
        self.ijft(&coeffs).expect("shape checked by caller").map(|v| v.re)
    }

    /// Joint localization `mat(h(L_J)(δ_t ⊗ δ_i))`.
    pub fn joint_localize(
        &self,
        f: &JointFilter,
        vertex: usize,
        time: usize,
    ) -> Result<DMatrix<Complex64>> {
        let (n, t) = self.shape();
        if vertex >= n {
            return Err(Error::IndexOutOfRange {
                index: vertex,
                len: n,
            });
        }
        if time >= t {
            return Err(Error::IndexOutOfRange { index: time, len: t });
        }
        let mut delta = DMatrix::zeros(n, t);
        delta[(vertex, time)] = Complex64::new(1.0, 0.0);
        self.filter_complex(f, &delta)
    }

    /// Graph filter on every column followed by a time filter on every row.
    pub fn separable_filter(
        &self,
        graph_response: &DVector<f64>,
        time_response: &[f64],
        x: &DMatrix<f64>,
    ) -> Result<DMatrix<f64>> {
        self.check_shape(x.nrows(), x.ncols())?;
        if graph_response.len() != self.n_vertices() {
            return Err(Error::dims(self.n_vertices(), graph_response.len()));
        }
        if time_response.len() != self.n_steps() {
            return Err(Error::dims(self.n_steps(), time_response.len()));
        }
        let gm = self.graph.filter_matrix(graph_response)?;
        let y = gm * x;
        let mut out = DMatrix::zeros(y.nrows(), y.ncols());
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_steps()];
        for r in 0..y.nrows() {
            for (c, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(y[(r, c)], 0.0);
            }
            self.time.dft_in_place(&mut buf)?;
            for (b, h) in buf.iter_mut().zip(time_response) {
                *b *= *h;
            }
            self.time.idft_in_place(&mut buf)?;
            let residue = buf.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            let scale = buf.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
            if residue > REAL_OUTPUT_TOL * scale.max(x.amax()) && residue > f64::MIN_POSITIVE {
                return Err(Error::ComplexResidue {
                    residue,
                    tolerance: REAL_OUTPUT_TOL * scale,
                });
            }
            for (c, b) in buf.iter().enumerate() {
                out[(r, c)] = b.re;
            }
        }
        Ok(out)
    }

    /// Eigenvalues of `L_J = I ⊗ L_G + L_T ⊗ I` on the joint grid.
    pub fn joint_laplacian_response(&self) -> Result<DMatrix<f64>> {
        let lt = self.time.laplacian_eigenvalues()?;
        let lg = self.graph.eigenvalues();
        Ok(DMatrix::from_fn(self.n_vertices(), self.n_steps(), |n, t| {
            lg[n] + lt[t]
        }))
    }

    /// `x^T L_J x = Σ (λ_n + λ_T,τ) |X̂[n, τ]|²`.
    pub fn joint_quadratic_form(&self, x: &DMatrix<f64>) -> Result<f64> {
        let resp = self.joint_laplacian_response()?;
        let coeffs = self.jft(x)?;
        Ok(coeffs
            .iter()
            .zip(resp.iter())
            .map(|(c, l)| l * c.norm_sqr())
            .sum())
    }

    /// Dense `U_J = U_T ⊗ U_G`; only sensible for small `N T`.
    pub fn dense_basis(&self) -> DMatrix<Complex64> {
        let ug = self.graph.eigenvectors().map(|v| Complex64::new(v, 0.0));
        self.time.basis_matrix().kronecker(&ug)
    }
}
