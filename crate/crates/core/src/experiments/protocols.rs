use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::{snr_db, split, BaselinePsd, Dataset, ExperimentConfig};
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpectrum};
use crate::joint::JointBasis;
use crate::psd::{default_window, estimate_jpsd, Jpsd, MeanHandling};
use crate::stationarity::{substream, white_noise, NoiseKind};
use crate::time::{TimeBasis, Window};
use crate::wiener::{joint_wiener_closed_form, wiener_solve_noiseless, MaskOperator, SolverConfig};

pub const JOINT: &str = "joint";
pub const TIME_ONLY: &str = "time";
pub const VERTEX_ONLY: &str = "vertex";
const NOISY: &str = "noisy";
const INFEASIBLE: &str = "infeasible";

/// One long-form result: `(method, parameter, trial, metric, value)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ResultRow {
    pub method: String,
    pub parameter: f64,
    pub trial: usize,
    pub metric: String,
    pub value: f64,
}

/// Mean and sample standard deviation of one metric over feasible trials.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub parameter: f64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub infeasible: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in self.summary() {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per `(method, parameter, metric)` statistics, in first-appearance order.
    /// Infeasible trials are counted but excluded.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut keys: Vec<(&str, f64, &str)> = Vec::new();
        for r in &self.rows {
            if r.metric == INFEASIBLE {
                continue;
            }
            let k = (r.method.as_str(), r.parameter, r.metric.as_str());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(method, parameter, metric)| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.parameter == parameter && r.metric == metric)
                    .map(|r| r.value)
                    .collect();
                let infeasible = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.parameter == parameter && r.metric == INFEASIBLE)
                    .count();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let std = if vals.len() > 1 {
                    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                SummaryRow {
                    method: method.to_string(),
                    parameter,
                    metric: metric.to_string(),
                    mean,
                    std,
                    count: vals.len(),
                    infeasible,
                }
            })
            .collect()
    }

    /// Mean of a metric for one method and parameter value.
    pub fn mean(&self, method: &str, parameter: f64, metric: &str) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.method == method && s.parameter == parameter && s.metric == metric)
            .map(|s| s.mean)
    }

    pub fn infeasible_count(&self, method: &str, parameter: f64) -> usize {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.parameter == parameter && r.metric == INFEASIBLE)
            .count()
    }
}

/// Spectra of the disjoint baselines: a Welch TPSD per vertex and a VPSD
/// averaged over time steps.
#[derive(Debug, Clone)]
pub struct DisjointSpectra {
    /// One `1 × M` estimate per vertex.
    pub time: Vec<Jpsd>,
    /// Length `N`: mean of `|GFT(x_t)|²` over columns.
    pub vertex: DVector<f64>,
}

impl DisjointSpectra {
    pub fn estimate(
        x: &DMatrix<f64>,
        spectrum: &GraphSpectrum,
        window: &Window,
        mean: MeanHandling,
    ) -> Result<Self> {
        let single = Graph::singleton().spectrum()?;
        let time = (0..x.nrows())
            .map(|i| {
                let row = x.rows(i, 1).into_owned();
                estimate_jpsd(&[row], &single, window, mean)
            })
            .collect::<Result<Vec<_>>>()?;
        let centred = match mean {
            MeanHandling::Remove => x.add_scalar(-x.mean()),
            MeanHandling::AssertCentered => x.clone(),
        };
        let coeffs = spectrum.eigenvectors().transpose() * centred;
        let vertex = coeffs.map(|v| v * v).column_mean();
        Ok(DisjointSpectra { time, vertex })
    }
}

struct Setup {
    test: DMatrix<f64>,
    joint_basis: JointBasis,
    time_basis: JointBasis,
    vertex_basis: JointBasis,
    joint_psd: DMatrix<f64>,
    time_psd: Vec<DMatrix<f64>>,
    vertex_psd: DMatrix<f64>,
}

fn with_method<T>(method: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Method {
        method: method.to_string(),
        source: Box::new(e),
    })
}

fn prepare(dataset: &Dataset, graph: &Graph, cfg: &ExperimentConfig) -> Result<Setup> {
    cfg.validate()?;
    if graph.n_vertices() != dataset.n_stations() {
        return Err(Error::dims(dataset.n_stations(), graph.n_vertices()));
    }
    let t = dataset.n_steps();
    let t_train = if cfg.rho == 1.0 {
        t
    } else {
        (cfg.rho * t as f64).floor() as usize
    };
    let window = match cfg.bands {
        Some(m) => Window::iterated_sine(m)?,
        None => default_window(t_train.max(2))?,
    };
    let (train, test) = split(&dataset.readings, cfg.rho, window.support())?;
    let spectrum = graph.spectrum()?;
    let t_test = test.ncols();

    let joint = with_method(JOINT, estimate_jpsd(std::slice::from_ref(&train), &spectrum, &window, cfg.mean))?;
    let baseline_data = match cfg.baseline_psd {
        BaselinePsd::Full => &dataset.readings,
        BaselinePsd::Train => &train,
    };
    let disjoint = with_method(
        "disjoint baselines",
        DisjointSpectra::estimate(baseline_data, &spectrum, &window, cfg.mean),
    )?;
    let time_psd = disjoint
        .time
        .iter()
        .map(|j| j.upsample_to_grid(t_test))
        .collect::<Result<Vec<_>>>()?;
    let vertex_psd = DMatrix::from_column_slice(disjoint.vertex.len(), 1, disjoint.vertex.as_slice());

    Ok(Setup {
        joint_psd: joint.upsample_to_grid(t_test)?,
        joint_basis: JointBasis::new(spectrum.clone(), TimeBasis::laplacian(t_test)?),
        time_basis: JointBasis::new(
            Graph::singleton().spectrum()?,
            TimeBasis::laplacian(t_test)?,
        ),
        vertex_basis: JointBasis::new(spectrum, TimeBasis::laplacian(1)?),
        test,
        time_psd,
        vertex_psd,
    })
}

fn row(method: &str, parameter: f64, trial: usize, metric: &str, value: f64) -> ResultRow {
    ResultRow {
        method: method.to_string(),
        parameter,
        trial,
        metric: metric.to_string(),
        value,
    }
}

fn run_jobs<F>(grid: &[f64], cfg: &ExperimentConfig, job: F) -> Result<ResultsTable>
where
    F: Fn(f64, usize, &mut rand_chacha::ChaCha8Rng) -> Result<Vec<ResultRow>> + Sync,
{
    let n = cfg.n_trials;
    let chunks = (0..grid.len() * n)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(cfg.seed, j as u64);
            job(grid[j / n], j % n, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultsTable {
        rows: chunks.into_iter().flatten().collect(),
    })
}

impl Setup {
    fn denoise_time(&self, y: &DMatrix<f64>, sigma2: f64) -> Result<DMatrix<f64>> {
        let t = y.ncols();
        let ones = DMatrix::from_element(1, t, 1.0);
        let hw = DMatrix::from_element(1, t, sigma2);
        let mut out = DMatrix::zeros(y.nrows(), t);
        for i in 0..y.nrows() {
            let r = y.rows(i, 1).into_owned();
            let x = joint_wiener_closed_form(&self.time_basis, &ones, &self.time_psd[i], &hw, &r)?;
            out.set_row(i, &x.row(0));
        }
        Ok(out)
    }

    fn denoise_vertex(&self, y: &DMatrix<f64>, sigma2: f64) -> Result<DMatrix<f64>> {
        let n = y.nrows();
        let ones = DMatrix::from_element(n, 1, 1.0);
        let hw = DMatrix::from_element(n, 1, sigma2);
        let mut out = DMatrix::zeros(n, y.ncols());
        for t in 0..y.ncols() {
            let c = y.columns(t, 1).into_owned();
            let x = joint_wiener_closed_form(&self.vertex_basis, &ones, &self.vertex_psd, &hw, &c)?;
            out.set_column(t, &x.column(0));
        }
        Ok(out)
    }

    fn recover_joint(&self, mask: &DMatrix<bool>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        interpolate(&self.joint_basis, &self.test, mask, &self.joint_psd, cfg)
    }

    fn recover_time(&self, mask: &DMatrix<bool>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.test.nrows(), self.test.ncols());
        for i in 0..self.test.nrows() {
            let x = self.test.rows(i, 1).into_owned();
            let m = mask.rows(i, 1).into_owned();
            let r = interpolate(&self.time_basis, &x, &m, &self.time_psd[i], cfg)?;
            out.set_row(i, &r.row(0));
        }
        Ok(out)
    }

    fn recover_vertex(&self, mask: &DMatrix<bool>, cfg: &SolverConfig) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.test.nrows(), self.test.ncols());
        for t in 0..self.test.ncols() {
            let x = self.test.columns(t, 1).into_owned();
            let m = mask.columns(t, 1).into_owned();
            let r = interpolate(&self.vertex_basis, &x, &m, &self.vertex_psd, cfg)?;
            out.set_column(t, &r.column(0));
        }
        Ok(out)
    }
}

/// Noiseless interpolation of `x` from its masked entries; the zero prior mean
/// fills a block with no observations.
fn interpolate(
    basis: &JointBasis,
    x: &DMatrix<f64>,
    mask: &DMatrix<bool>,
    h_x: &DMatrix<f64>,
    cfg: &SolverConfig,
) -> Result<DMatrix<f64>> {
    if !mask.iter().any(|&m| m) {
        return Ok(DMatrix::zeros(x.nrows(), x.ncols()));
    }
    let op = MaskOperator::new(mask.clone())?;
    Ok(wiener_solve_noiseless(basis, &op, &op.sample(x), h_x, cfg)?.solution)
}

/// Adds white Gaussian noise at each input SNR to the test block and scores the
/// joint, time-only and vertex-only Wiener denoisers by output SNR.
///
/// The noise level is known to the denoisers (`h_W = σ²`). Method `noisy`
/// records the SNR of the unprocessed input.
pub fn run_denoising(
    dataset: &Dataset,
    graph: &Graph,
    cfg: &ExperimentConfig,
) -> Result<ResultsTable> {
    let s = prepare(dataset, graph, cfg)?;
    let (n, t) = s.test.shape();
    let power = s.test.norm_squared() / (n * t) as f64;
    let ones = DMatrix::from_element(n, t, 1.0);
    run_jobs(&cfg.snr_grid, cfg, |snr, trial, rng| {
        let sigma2 = power * 10f64.powf(-snr / 10.0);
        let y = &s.test + white_noise(n, t, NoiseKind::Gaussian, rng) * sigma2.sqrt();
        let hw = DMatrix::from_element(n, t, sigma2);
        let joint = with_method(
            JOINT,
            joint_wiener_closed_form(&s.joint_basis, &ones, &s.joint_psd, &hw, &y),
        )?;
        let time = with_method(TIME_ONLY, s.denoise_time(&y, sigma2))?;
        let vertex = with_method(VERTEX_ONLY, s.denoise_vertex(&y, sigma2))?;
        let metric = "output_snr_db";
        Ok(vec![
            row(NOISY, snr, trial, metric, snr_db(&s.test, &y)?),
            row(JOINT, snr, trial, metric, snr_db(&s.test, &joint)?),
            row(TIME_ONLY, snr, trial, metric, snr_db(&s.test, &time)?),
            row(VERTEX_ONLY, snr, trial, metric, snr_db(&s.test, &vertex)?),
        ])
    })
}

/// Removes a Bernoulli fraction of the test block and scores noiseless Wiener
/// interpolation by relative error and output SNR.
///
/// A trial whose solve fails to converge is recorded as `infeasible` for that
/// method and left out of the averages.
pub fn run_recovery(
    dataset: &Dataset,
    graph: &Graph,
    cfg: &ExperimentConfig,
) -> Result<ResultsTable> {
    let s = prepare(dataset, graph, cfg)?;
    let (n, t) = s.test.shape();
    let reference = s.test.norm();
    run_jobs(&cfg.missing_grid, cfg, |p, trial, rng| {
        let mask = DMatrix::from_fn(n, t, |_, _| rng.random::<f64>() >= p);
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidArgument(format!(
                "trial {trial} at missing fraction {p} observed nothing"
            )));
        }
        let mut rows = Vec::new();
        let methods: [(&str, Result<DMatrix<f64>>); 3] = [
            (JOINT, s.recover_joint(&mask, &cfg.solver)),
            (TIME_ONLY, s.recover_time(&mask, &cfg.solver)),
            (VERTEX_ONLY, s.recover_vertex(&mask, &cfg.solver)),
        ];
        for (method, result) in methods {
            match result {
                Ok(x) => {
                    let rel = (&x - &s.test).norm() / reference;
                    rows.push(row(method, p, trial, "relative_error", rel));
                    rows.push(row(method, p, trial, "output_snr_db", snr_db(&s.test, &x)?));
                }
                Err(e) if e.is_convergence_failure() => {
                    rows.push(row(method, p, trial, INFEASIBLE, 1.0));
                }
                Err(e) => return with_method(method, Err(e)),
            }
        }
        Ok(rows)
    })
}
