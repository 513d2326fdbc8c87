#![allow(dead_code)]

use std::f64::consts::PI;

use jtvsp::stationarity::substream;
use jtvsp::{Graph, JointBasis, JointFilter, TimeBasis};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    substream(seed, 0)
}

/// Ring plus random chords with random positive weights; always connected.
pub fn random_graph(n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        if i < j || n > 2 {
            edges.push((i.min(j), i.max(j), 0.5 + rng.random::<f64>()));
        }
    }
    for i in 0..n {
        for j in i + 2..n {
            if !(i == 0 && j == n - 1) && rng.random::<f64>() < 0.3 {
                edges.push((i, j, 0.1 + rng.random::<f64>()));
            }
        }
    }
    edges.dedup_by_key(|e| (e.0, e.1));
    Graph::from_edges(n, &edges).unwrap()
}

pub fn random_basis(n: usize, t: usize, rng: &mut ChaCha8Rng) -> JointBasis {
    let g = random_graph(n, rng);
    JointBasis::new(g.spectrum().unwrap(), TimeBasis::laplacian(t).unwrap())
}

pub fn random_signal(n: usize, t: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, t, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

/// `Σ c_pk (λ/λmax)^p cos(kω)` with random coefficients: real, symmetric in ω and
/// not separable.
pub fn random_response(basis: &JointBasis, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let c: Vec<f64> = (0..9).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let lmax = basis.graph().eigenvalues().max();
    JointFilter::from_fn(basis, |l, w| {
        let x = l / lmax;
        (0..3)
            .flat_map(|p| (0..3).map(move |k| (p, k)))
            .map(|(p, k)| c[3 * p + k] * x.powi(p as i32) * (k as f64 * w).cos())
            .sum()
    })
    .unwrap()
    .into_response()
}

/// Strictly positive smooth non-separable PSD.
pub fn random_psd(basis: &JointBasis, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    random_response(basis, rng).map(|v| (0.7 * v).exp())
}

/// Unitary DFT matrix `e^{2πj tτ/T}/√T` built entry by entry.
pub fn dense_ut(t: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(t, t, |a, b| {
        Complex64::from_polar(1.0 / (t as f64).sqrt(), 2.0 * PI * (a * b) as f64 / t as f64)
    })
}

/// `U_T ⊗ U_G` under the ordering `k = N t + i`.
pub fn dense_uj(basis: &JointBasis) -> DMatrix<Complex64> {
    let ug = basis.graph().eigenvectors().map(|v| Complex64::new(v, 0.0));
    let ut = dense_ut(basis.n_steps());
    let (n, t) = basis.shape();
    DMatrix::from_fn(n * t, n * t, |r, c| ut[(r / n, c / n)] * ug[(r % n, c % n)])
}

pub fn vec_c(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn vec_r(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Dense real matrix `U_J diag(vec h) U_J^*`.
pub fn dense_joint_operator(basis: &JointBasis, h: &DMatrix<f64>) -> DMatrix<f64> {
    let uj = dense_uj(basis);
    let d = DMatrix::from_diagonal(&vec_c(&complexify(h)));
    let m = &uj * d * uj.adjoint();
    m.map(|v| v.re)
}

pub fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
