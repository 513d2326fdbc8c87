use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::joint::{is_conjugate_symmetric, JointBasis, JointFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Identity,
    Mask,
    JointFilter,
    Custom,
}

/// Linear map on vectorized time-vertex signals (`k = N t + i`).
pub trait LinearOperator: Send + Sync {
    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn forward(&self, x: &DVector<f64>) -> DVector<f64>;
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64>;
    fn kind(&self) -> OperatorKind;

    /// Joint response of `A^T A` when it is diagonal in the joint Fourier basis.
    fn gram_response(&self) -> Option<DMatrix<f64>> {
        None
    }

    /// Mean diagonal entry of `A^T A`; scales the solver preconditioner when
    /// `gram_response` is unavailable.
    fn gram_scale(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct IdentityOperator {
    shape: (usize, usize),
}

impl IdentityOperator {
    pub fn new(n_vertices: usize, n_steps: usize) -> Self {
        IdentityOperator {
            shape: (n_vertices, n_steps),
        }
    }
}

impl LinearOperator for IdentityOperator {
    fn input_len(&self) -> usize {
        self.shape.0 * self.shape.1
    }
    fn output_len(&self) -> usize {
        self.input_len()
    }
    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        y.clone()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Identity
    }
    fn gram_response(&self) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(self.shape.0, self.shape.1, 1.0))
    }
}

/// Selects the observed entries of a signal, in vectorization order.
#[derive(Debug, Clone)]
pub struct MaskOperator {
    mask: DMatrix<bool>,
    observed: Vec<usize>,
}

impl MaskOperator {
    pub fn new(mask: DMatrix<bool>) -> Result<Self> {
        let observed: Vec<usize> = mask
            .iter()
            .enumerate()
            .filter_map(|(k, &m)| m.then_some(k))
            .collect();
        if observed.is_empty() {
            return Err(Error::InvalidArgument("mask has no observed entries".into()));
        }
        Ok(MaskOperator { mask, observed })
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    /// Flat indices `k = N t + i` of the observed entries.
    pub fn observed(&self) -> &[usize] {
        &self.observed
    }

    /// Observed values of a full signal.
    pub fn sample(&self, x: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.observed.len(),
            self.observed.iter().map(|&k| x.as_slice()[k]),
        )
    }

    /// Observed fraction of the grid.
    pub fn fraction(&self) -> f64 {
        self.observed.len() as f64 / self.mask.len() as f64
    }
}

impl LinearOperator for MaskOperator {
    fn input_len(&self) -> usize {
        self.mask.len()
    }
    fn output_len(&self) -> usize {
        self.observed.len()
    }
    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.observed.len(), self.observed.iter().map(|&k| x[k]))
    }
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.mask.len());
        for (&k, v) in self.observed.iter().zip(y.iter()) {
            out[k] = *v;
        }
        out
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Mask
    }
    fn gram_response(&self) -> Option<DMatrix<f64>> {
        (self.observed.len() == self.mask.len())
            .then(|| DMatrix::from_element(self.mask.nrows(), self.mask.ncols(), 1.0))
    }
    fn gram_scale(&self) -> f64 {
        self.fraction()
    }
}

/// `A = a(L_J)`; self-adjoint since the response is real.
#[derive(Debug, Clone)]
pub struct JointFilterOperator {
    basis: JointBasis,
    response: DMatrix<f64>,
}

impl JointFilterOperator {
    pub fn new(basis: JointBasis, filter: JointFilter) -> Result<Self> {
        let r = filter.into_response();
        basis.check_shape(r.nrows(), r.ncols())?;
        if !is_conjugate_symmetric(&r, 1e-12) {
            return Err(Error::InvalidArgument(
                "operator response must be symmetric in time frequency".into(),
            ));
        }
        Ok(JointFilterOperator { basis, response: r })
    }

    pub fn response(&self) -> &DMatrix<f64> {
        &self.response
    }
}

impl LinearOperator for JointFilterOperator {
    fn input_len(&self) -> usize {
        self.response.len()
    }
    fn output_len(&self) -> usize {
        self.response.len()
    }
    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let (n, t) = self.basis.shape();
        let m = DMatrix::from_column_slice(n, t, x.as_slice());
        let y = self.basis.filter_unchecked(&self.response, &m);
        DVector::from_column_slice(y.as_slice())
    }
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.forward(y)
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::JointFilter
    }
    fn gram_response(&self) -> Option<DMatrix<f64>> {
        Some(self.response.map(|a| a * a))
    }
}

type MapFn = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Operator defined by user-supplied forward and adjoint closures.
pub struct CustomOperator {
    input_len: usize,
    output_len: usize,
    forward: MapFn,
    adjoint: MapFn,
}

impl CustomOperator {
    pub fn new(
        input_len: usize,
        output_len: usize,
        forward: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        adjoint: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        CustomOperator {
            input_len,
            output_len,
            forward: Box::new(forward),
            adjoint: Box::new(adjoint),
        }
    }
}

impl LinearOperator for CustomOperator {
    fn input_len(&self) -> usize {
        self.input_len
    }
    fn output_len(&self) -> usize {
        self.output_len
    }
    fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.forward)(x)
    }
    fn adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.adjoint)(y)
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Custom
    }
}

/// `⟨A x, y⟩ - ⟨x, A^T y⟩`, normalised by `‖A x‖ ‖y‖`.
pub fn adjoint_mismatch(op: &dyn LinearOperator, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let ax = op.forward(x);
    let aty = op.adjoint(y);
    let lhs = ax.dot(y);
    let rhs = x.dot(&aty);
    let scale = (ax.norm() * y.norm()).max(x.norm() * aty.norm()).max(f64::MIN_POSITIVE);
    (lhs - rhs).abs() / scale
}
