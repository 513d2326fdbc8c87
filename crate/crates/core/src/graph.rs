//! Weighted undirected graphs, the combinatorial Laplacian and its spectrum.
//!
//! Everything here is dense: the target scale is a few hundred vertices, so a
//! full symmetric eigendecomposition is affordable and gives an exact graph
//! Fourier basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// A weight counts as an edge when it is at least this fraction of the largest weight.
pub const EDGE_WEIGHT_CUTOFF: f64 = 1e-4;

const SYMMETRY_TOL: f64 = 1e-10;

/// Weighted undirected graph stored as a dense adjacency matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    weights: DMatrix<f64>,
    coords: Option<DMatrix<f64>>,
}

impl Graph {
    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::dims(
                "non-empty square matrix",
                format!("{}x{}", weights.nrows(), weights.ncols()),
            ));
        }
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::NonFinite {
                        location: format!("weight ({i}, {j})"),
                        value: w,
                    });
                }
                if w < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative weight {w} at ({i}, {j})"
                    )));
                }
                asym = asym.max((w - weights[(j, i)]).abs());
            }
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "nonzero diagonal weight at vertex {i}"
                )));
            }
        }
        if asym > SYMMETRY_TOL * weights.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Graph {
            weights,
            coords: None,
        })
    }

    /// Builds a graph from an undirected edge list `(i, j, weight)`.
    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n_vertices, n_vertices);
        for &(i, j, weight) in edges {
            for idx in [i, j] {
                if idx >= n_vertices {
                    return Err(Error::IndexOutOfRange {
                        index: idx,
                        len: n_vertices,
                    });
                }
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self loop at vertex {i}")));
            }
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        Graph::from_weights(w)
    }

    pub fn with_coords(mut self, coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() != self.n_vertices() {
            return Err(Error::dims(
                format!("{} coordinate rows", self.n_vertices()),
                coords.nrows(),
            ));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn coords(&self) -> Option<&DMatrix<f64>> {
        self.coords.as_ref()
    }

    /// Edges `(i, j, w)` with `i < j` and `w > 0`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_vertices();
        let mut out = Vec::new();
        for j in 0..n {
            for i in 0..j {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Mean number of neighbours whose weight is at least `EDGE_WEIGHT_CUTOFF` of the maximum weight.
    pub fn effective_average_degree(&self) -> f64 {
        effective_average_degree(&self.weights)
    }

    /// Cycle graph on `n` vertices with unit weights.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "ring graph needs at least 3 vertices, got {n}"
            )));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Graph::from_edges(n, &edges)
    }

    /// Path graph on `n` vertices with unit weights.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
        Graph::from_edges(n, &edges)
    }

    /// The single-vertex graph. Its spectrum is trivial, which makes it useful for
    /// running joint machinery on plain time series.
    pub fn singleton() -> Self {
        Graph {
            weights: DMatrix::zeros(1, 1),
            coords: None,
        }
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        combinatorial_laplacian(self)
    }

    pub fn spectrum(&self) -> Result<GraphSpectrum> {
        eigendecompose(&self.laplacian())
    }
}

fn pairwise_sq_distance(coords: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    coords
        .row(a)
        .iter()
        .zip(coords.row(b).iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn check_coords(coords: &DMatrix<f64>) -> Result<()> {
    if coords.nrows() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 points, got {}",
            coords.nrows()
        )));
    }
    if coords.ncols() == 0 {
        return Err(Error::InvalidArgument("coordinates have no columns".into()));
    }
    if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "coordinates".into(),
            value: *v,
        });
    }
    Ok(())
}

/// Connects every pair of points within `radius` with weight `exp(-kernel_scale * d^2)`.
///
/// Fails with [`Error::IsolatedVertex`] if some point has no neighbour in range.
pub fn build_gaussian_radius_graph(
    coords: &DMatrix<f64>,
    radius: f64,
    kernel_scale: f64,
) -> Result<Graph> {
    check_coords(coords)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive, got {radius}"
        )));
    }
    if !(kernel_scale >= 0.0) || !kernel_scale.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "kernel scale must be nonnegative, got {kernel_scale}"
        )));
    }
    let w = radius_weights(coords, radius, kernel_scale);
    for i in 0..w.nrows() {
        if w.row(i).iter().all(|&v| v == 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
    }
    Graph::from_weights(w)?.with_coords(coords.clone())
}

fn radius_weights(coords: &DMatrix<f64>, radius: f64, kernel_scale: f64) -> DMatrix<f64> {
    let n = coords.nrows();
    let r2 = radius * radius;
    let mut w = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let d2 = pairwise_sq_distance(coords, i, j);
            if d2 > 0.0 && d2 <= r2 {
                let v = (-kernel_scale * d2).exp();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

fn effective_average_degree(w: &DMatrix<f64>) -> f64 {
    let max = w.max();
    if max <= 0.0 {
        return 0.0;
    }
    let cut = EDGE_WEIGHT_CUTOFF * max;
    let count = w.iter().filter(|&&v| v > 0.0 && v >= cut).count();
    count as f64 / w.nrows() as f64
}

/// Finds a kernel scale whose radius graph has an effective average degree within
/// ±0.5 of `target_avg_degree`.
///
/// The effective degree is non-increasing in the scale, so a bisection on
/// `log(scale)` is enough.
pub fn calibrate_kernel_scale(
    coords: &DMatrix<f64>,
    radius: f64,
    target_avg_degree: f64,
) -> Result<f64> {
    check_coords(coords)?;
    let n = coords.nrows();
    if !(target_avg_degree > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target degree must be positive, got {target_avg_degree}"
        )));
    }
    if target_avg_degree > (n - 1) as f64 {
        return Err(Error::Calibration(format!(
            "target degree {target_avg_degree} exceeds the maximum {} for {n} vertices",
            n - 1
        )));
    }
    let degree = |k: f64| effective_average_degree(&radius_weights(coords, radius, k));
    let within = |d: f64| (d - target_avg_degree).abs() <= 0.5;

    // Scale is measured in units of 1/d^2 for a typical in-radius distance.
    let mut d2s: Vec<f64> = Vec::new();
    for j in 0..n {
        for i in 0..j {
            let d2 = pairwise_sq_distance(coords, i, j);
            if d2 > 0.0 && d2 <= radius * radius {
                d2s.push(d2);
            }
        }
    }
    if d2s.is_empty() {
        return Err(Error::Calibration("no pair of points lies within the radius".into()));
    }
    d2s.sort_by(|a, b| a.total_cmp(b));
    let unit = 1.0 / d2s[d2s.len() / 2];

    let mut lo = (1e-9 * unit).ln();
    let mut hi = (1e9 * unit).ln();
    let d_lo = degree(lo.exp());
    let d_hi = degree(hi.exp());
    if within(d_lo) {
        return Ok(lo.exp());
    }
    if d_lo < target_avg_degree - 0.5 {
        return Err(Error::Calibration(format!(
            "radius too small: maximum reachable degree is {d_lo:.3}, target {target_avg_degree}"
        )));
    }
    if d_hi > target_avg_degree + 0.5 {
        return Err(Error::Calibration(format!(
            "cannot reduce the degree below {d_hi:.3}, target {target_avg_degree}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let d = degree(mid.exp());
        if within(d) {
            return Ok(mid.exp());
        }
        if d > target_avg_degree {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection could not bracket degree {target_avg_degree}"
    )))
}

/// `L = diag(W 1) - W`.
pub fn combinatorial_laplacian(g: &Graph) -> DMatrix<f64> {
    let w = g.weights();
    let mut l = -w.clone();
    for i in 0..w.nrows() {
        l[(i, i)] = w.row(i).sum();
    }
    l
}

/// Eigendecomposition of a graph Laplacian (or any real symmetric matrix).
///
/// Eigenvalues are sorted ascending and each eigenvector is flipped so that its
/// largest-magnitude entry (first one on ties) is positive.
#[derive(Debug, Clone)]
pub struct GraphSpectrum {
    eigenvectors: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

pub fn eigendecompose(l: &DMatrix<f64>) -> Result<GraphSpectrum> {
    let n = l.nrows();
    if n == 0 || l.ncols() != n {
        return Err(Error::dims(
            "non-empty square matrix",
            format!("{}x{}", l.nrows(), l.ncols()),
        ));
    }
    if let Some(v) = l.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "matrix".into(),
            value: *v,
        });
    }
    let asym = (l - l.transpose()).amax();
    if asym > SYMMETRY_TOL * l.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (l + l.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let scale = l.amax().max(f64::MIN_POSITIVE);
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut lambda = eig.eigenvalues[src];
        if lambda.abs() < 1e-12 * scale * n as f64 {
            lambda = 0.0;
        }
        values[dst] = lambda;
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() * (1.0 + 1e-12) {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(dst, &(col * sign));
    }
    Ok(GraphSpectrum {
        eigenvectors: vectors,
        eigenvalues: values,
    })
}

impl GraphSpectrum {
    /// Assembles a spectrum from an orthonormal basis and its eigenvalues.
    pub fn from_parts(eigenvectors: DMatrix<f64>, eigenvalues: DVector<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::dims(
                format!("{n}x{n} eigenvectors"),
                format!("{}x{}", eigenvectors.nrows(), eigenvectors.ncols()),
            ));
        }
        Ok(GraphSpectrum {
            eigenvectors,
            eigenvalues,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Columns are the eigenvectors `u_n`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_vertices() {
            return Err(Error::dims(self.n_vertices(), len));
        }
        Ok(())
    }

    pub fn gft(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        Ok(self.eigenvectors.tr_mul(x))
    }

    pub fn igft(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs.len())?;
        Ok(&self.eigenvectors * coeffs)
    }

    /// Samples `h` at every eigenvalue, rejecting non-finite results.
    pub fn sample_response<F: Fn(f64) -> f64>(&self, h: F) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.n_vertices());
        for (n, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = h(lambda);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("filter response at eigenvalue {lambda}"),
                    value: v,
                });
            }
            out[n] = v;
        }
        Ok(out)
    }

    /// `U diag(response) U^T x` for a response sampled on the eigenvalues.
    pub fn filter_with_response(
        &self,
        response: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        self.check_len(response.len())?;
        let coeffs = self.gft(x)?.component_mul(response);
        self.igft(&coeffs)
    }

    /// Applies the graph filter `h(L)` to `x`.
    pub fn graph_filter<F: Fn(f64) -> f64>(&self, h: F, x: &DVector<f64>) -> Result<DVector<f64>> {
        let response = self.sample_response(h)?;
        self.filter_with_response(&response, x)
    }

    /// The dense matrix `h(L) = U diag(h(λ)) U^T`.
    pub fn filter_matrix(&self, response: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(response.len())?;
        let u = &self.eigenvectors;
        let scaled = u * DMatrix::from_diagonal(response);
        Ok(scaled * u.transpose())
    }

    /// Localizes `h` on vertex `i`: returns `h(L) δ_i`.
    pub fn graph_localize<F: Fn(f64) -> f64>(&self, h: F, i: usize) -> Result<DVector<f64>> {
        let response = self.sample_response(h)?;
        self.localize_response(&response, i)
    }

    pub fn localize_response(&self, response: &DVector<f64>, i: usize) -> Result<DVector<f64>> {
        let n = self.n_vertices();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        self.check_len(response.len())?;
        let u = &self.eigenvectors;
        // Σ_n h(λ_n) u_n(i) u_n(·)
        let weights = u.row(i).transpose().component_mul(response);
        Ok(u * weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..j {
                if rng.random::<f64>() < 0.6 {
                    let v = rng.random::<f64>();
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        // keep it connected
        for i in 1..n {
            if w[(i - 1, i)] == 0.0 {
                w[(i - 1, i)] = 0.5;
                w[(i, i - 1)] = 0.5;
            }
        }
        Graph::from_weights(w).unwrap()
    }

    #[test]
    fn radius_graph_weights() {
        let coords = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.0]);
        let g = build_gaussian_radius_graph(&coords, 1.0, 0.0).unwrap();
        assert_eq!(g.weights()[(0, 1)], 1.0);

        let far = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 2.0, 0.0]);
        assert!(matches!(
            build_gaussian_radius_graph(&far, 1.0, 1.0),
            Err(Error::IsolatedVertex(0))
        ));

        let line = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let g = build_gaussian_radius_graph(&line, 1.5, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert_relative_eq!(g.weights()[(0, 1)], e, epsilon = 1e-15);
        assert_relative_eq!(g.weights()[(1, 2)], e, epsilon = 1e-15);
        assert_eq!(g.weights()[(0, 2)], 0.0);
        assert_eq!(g.weights(), &g.weights().transpose());
    }

    #[test]
    fn isolated_vertex_reports_index() {
        let coords = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 10.0]);
        match build_gaussian_radius_graph(&coords, 1.0, 1.0) {
            Err(Error::IsolatedVertex(i)) => assert_eq!(i, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn calibration_targets() {
        let square = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            calibrate_kernel_scale(&square, 2.0, 4.0),
            Err(Error::Calibration(_))
        ));
        let k = calibrate_kernel_scale(&square, 2.0, 3.0).unwrap();
        let g = build_gaussian_radius_graph(&square, 2.0, k).unwrap();
        assert_eq!(g.effective_average_degree(), 3.0);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = DMatrix::from_fn(32, 2, |_, _| rng.random::<f64>());
        let k = calibrate_kernel_scale(&pts, 0.6, 3.0).unwrap();
        assert!(k.is_finite() && k > 0.0);
        let g = build_gaussian_radius_graph(&pts, 0.6, k).unwrap();
        let d = g.effective_average_degree();
        assert!((2.5..=3.5).contains(&d), "degree {d}");
    }

    #[test]
    fn laplacian_small_cases() {
        let g = Graph::from_edges(2, &[(0, 1, 0.7)]).unwrap();
        let l = g.laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[0.7, -0.7, -0.7, 0.7]));

        let tri = Graph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., -1., -1., 2., -1., -1., -1., 2.]);
        assert_eq!(tri.laplacian(), expected);
    }

    #[test]
    fn laplacian_quadratic_form_matches_edge_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..5 {
            let g = random_graph(9, seed);
            let l = g.laplacian();
            let x = DVector::from_fn(9, |_, _| rng.random::<f64>() - 0.5);
            let q = (x.transpose() * &l * &x)[(0, 0)];
            let mut brute = 0.0;
            for (i, j, w) in g.edges() {
                brute += w * (x[i] - x[j]).powi(2);
            }
            assert_relative_eq!(q, brute, epsilon = 1e-12);
            assert!(l.row_sum().amax() < 1e-12);
        }
    }

    #[test]
    fn edgeless_spectrum_is_identity() {
        let s = eigendecompose(&DMatrix::zeros(4, 4)).unwrap();
        assert_eq!(s.eigenvalues(), &DVector::zeros(4));
        let u = s.eigenvectors();
        // any orthonormal basis works, but the sign convention makes each column's pivot positive
        assert_relative_eq!(u.tr_mul(u), DMatrix::identity(4, 4), epsilon = 1e-12);
        for c in 0..4 {
            let col = u.column(c);
            let piv = col.iter().cloned().fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(piv > 0.0);
        }
    }

    #[test]
    fn ring_eigenvalues_match_closed_form() {
        for n in [5usize, 8, 12] {
            let s = Graph::ring(n).unwrap().spectrum().unwrap();
            let mut expected: Vec<f64> = (0..n)
                .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
                .collect();
            expected.sort_by(|a, b| a.total_cmp(b));
            for (a, b) in s.eigenvalues().iter().zip(expected) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn spectrum_reconstructs_laplacian() {
        let g = random_graph(12, 11);
        let l = g.laplacian();
        let s = g.spectrum().unwrap();
        let u = s.eigenvectors();
        let rec = u * DMatrix::from_diagonal(s.eigenvalues()) * u.transpose();
        assert!((rec - &l).norm() / l.norm() < 1e-10);
        assert_relative_eq!(u.tr_mul(u), DMatrix::identity(12, 12), epsilon = 1e-10);
        assert_eq!(s.eigenvalues()[0], 0.0);
        assert!(s.eigenvalues().as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_non_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eigendecompose(&m), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn gft_basics() {
        let g = random_graph(7, 5);
        let s = g.spectrum().unwrap();
        for n in 0..7 {
            let u = s.eigenvectors().column(n).into_owned();
            let c = s.gft(&u).unwrap();
            for m in 0..7 {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((c[m] - want).abs() < 1e-12);
            }
        }
        let ones = DVector::from_element(7, 1.0);
        let c = s.gft(&ones).unwrap();
        assert_relative_eq!(c[0].abs(), 7f64.sqrt(), epsilon = 1e-12);
        assert!(c.rows(1, 6).amax() < 1e-12);
        assert!(s.gft(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn graph_filter_cases() {
        let g = random_graph(8, 2);
        let s = g.spectrum().unwrap();
        let x = DVector::from_fn(8, |i, _| (i as f64).sin());
        assert_relative_eq!(s.graph_filter(|_| 1.0, &x).unwrap(), x, epsilon = 1e-12);
        let lx = g.laplacian() * &x;
        assert_relative_eq!(s.graph_filter(|l| l, &x).unwrap(), lx, epsilon = 1e-12);

        let p = Graph::path(6).unwrap();
        let ps = p.spectrum().unwrap();
        let mut delta = DVector::zeros(6);
        delta[0] = 1.0;
        let got = ps.graph_filter(|l| 1.0 / (1.0 + l), &delta).unwrap();
        let a = DMatrix::identity(6, 6) + p.laplacian();
        let want = a.lu().solve(&delta).unwrap();
        assert_relative_eq!(got, want, epsilon = 1e-12);

        assert!(s.graph_filter(|_| f64::NAN, &x).is_err());
    }

    #[test]
    fn localization_matches_double_loop() {
        let g = random_graph(10, 8);
        let s = g.spectrum().unwrap();
        let h = |l: f64| (-0.7 * l).exp() + 0.1 * l;
        let u = s.eigenvectors();
        let lam = s.eigenvalues();
        for i1 in 0..10 {
            let loc = s.graph_localize(h, i1).unwrap();
            for i2 in 0..10 {
                let mut acc = 0.0;
                for n in 0..10 {
                    acc += h(lam[n]) * u[(i1, n)] * u[(i2, n)];
                }
                assert!((loc[i2] - acc).abs() < 1e-12);
            }
        }
        let id = s.graph_localize(|_| 1.0, 3).unwrap();
        let mut delta = DVector::zeros(10);
        delta[3] = 1.0;
        assert_relative_eq!(id, delta, epsilon = 1e-12);
        assert!(matches!(
            s.graph_localize(h, 10),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn ring_localization_is_translation() {
        let n = 10;
        let s = Graph::ring(n).unwrap().spectrum().unwrap();
        let h = |l: f64| 1.0 / (1.0 + 2.0 * l);
        let base = s.graph_localize(h, 0).unwrap();
        for i in 1..n {
            let loc = s.graph_localize(h, i).unwrap();
            for j in 0..n {
                assert!((loc[(j + i) % n] - base[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn localization_columns_form_filter_matrix() {
        let g = random_graph(12, 21);
        let s = g.spectrum().unwrap();
        let resp = s.sample_response(|l| 1.0 / (1.0 + l * l)).unwrap();
        let m = s.filter_matrix(&resp).unwrap();
        for i in 0..12 {
            let col = s.localize_response(&resp, i).unwrap();
            assert_relative_eq!(col, m.column(i).into_owned(), epsilon = 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]
            #[test]
            fn gft_is_unitary_and_invertible(seed in 0u64..1000, xs in proptest::collection::vec(-10.0f64..10.0, 9)) {
                let s = random_graph(9, seed).spectrum().unwrap();
                let x = DVector::from_vec(xs);
                let c = s.gft(&x).unwrap();
                prop_assert!((c.norm() - x.norm()).abs() <= 1e-10 * x.norm().max(1e-300));
                let back = s.igft(&c).unwrap();
                prop_assert!((back - &x).amax() <= 1e-10 * x.amax().max(1.0));
            }

            #[test]
            fn filters_compose(seed in 0u64..1000, a in 0.1f64..3.0, b in 0.1f64..3.0) {
                let s = random_graph(8, seed).spectrum().unwrap();
                let x = DVector::from_fn(8, |i, _| ((i as u64 + seed) as f64).cos());
                let h1 = move |l: f64| (-a * l).exp();
                let h2 = move |l: f64| 1.0 / (1.0 + b * l);
                let two = s.graph_filter(h1, &s.graph_filter(h2, &x).unwrap()).unwrap();
                let one = s.graph_filter(move |l| h1(l) * h2(l), &x).unwrap();
                prop_assert!((two - one).amax() < 1e-10);
            }
        }
    }
}
