use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use super::Dataset;
use crate::error::Result;
use crate::graph::{build_gaussian_radius_graph, calibrate_kernel_scale, Graph};
use crate::joint::{JointBasis, JointFilter};
use crate::stationarity::{substream, synthesize_jwss, JwssModel, NoiseKind};
use crate::time::TimeBasis;

/// A synthetic dataset with the graph and the true JPSD that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub graph: Graph,
    /// True JPSD on the `N × T` grid of the full dataset.
    pub jpsd: DMatrix<f64>,
}

/// `n` stations uniform in a 100 × 100 square.
pub fn random_station_coords(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = substream(seed, u64::MAX);
    DMatrix::from_fn(n, 2, |_, _| 100.0 * rng.random::<f64>())
}

/// Non-separable JPSD concentrated along `|ω|/π ≈ λ/λ_max`: each graph mode
/// oscillates at its own temporal frequency.
pub fn wave_jpsd(basis: &JointBasis) -> Result<DMatrix<f64>> {
    let lmax = basis.graph().eigenvalues().max().max(f64::MIN_POSITIVE);
    Ok(JointFilter::from_fn(basis, |l, w| {
        let w = w.rem_euclid(2.0 * PI);
        let fold = w.min(2.0 * PI - w) / PI;
        let d = fold - l / lmax;
        (-d * d / (2.0 * 0.15 * 0.15)).exp() + 0.02
    })?
    .into_response())
}

/// One realization of a zero-mean jointly stationary process with [`wave_jpsd`]
/// on a radius graph of random stations with average degree about 3.
pub fn synthetic_dataset(n_vertices: usize, n_steps: usize, seed: u64) -> Result<SyntheticDataset> {
    let coords = random_station_coords(n_vertices, seed);
    let graph = station_graph(&coords)?;
    let basis = JointBasis::new(graph.spectrum()?, TimeBasis::laplacian(n_steps)?);
    let jpsd = wave_jpsd(&basis)?;
    let model = JwssModel::new(0.0, jpsd.clone())?;
    let x = synthesize_jwss(&basis, &model, 1, seed, NoiseKind::Gaussian)?.remove(0);
    let ids: Vec<String> = (0..n_vertices).map(|i| format!("s{i:02}")).collect();
    let (dataset, _) = Dataset::from_parts(&ids, &coords, &ids, &x)?;
    Ok(SyntheticDataset {
        dataset,
        graph,
        jpsd,
    })
}

/// Radius just large enough that every station has three neighbours, kernel
/// calibrated to average degree 3.
fn station_graph(coords: &DMatrix<f64>) -> Result<Graph> {
    let n = coords.nrows();
    let k = 3.min(n - 1);
    let radius = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (coords.row(i) - coords.row(j)).norm())
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .fold(0.0, f64::max);
    let scale = if n <= 4 {
        0.0
    } else {
        calibrate_kernel_scale(coords, radius, 3.0)?
    };
    build_gaussian_radius_graph(coords, radius, scale)
}
