use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::MeanHandling;
use crate::wiener::SolverConfig;

/// Which data the disjoint baselines use to estimate their spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselinePsd {
    /// The whole dataset, training and test blocks together.
    #[default]
    Full,
    /// The training block only, like the joint method.
    Train,
}

/// Where the experiment data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    /// Station coordinates and readings CSV files.
    Files {
        coords: PathBuf,
        readings: PathBuf,
        radius: f64,
        #[serde(default = "default_degree")]
        target_degree: f64,
    },
    /// A synthetic jointly stationary dataset on random stations.
    Synthetic {
        #[serde(default = "default_vertices")]
        n_vertices: usize,
        #[serde(default = "default_steps")]
        n_steps: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_degree() -> f64 {
    3.0
}
fn default_vertices() -> usize {
    8
}
fn default_steps() -> usize {
    256
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            n_vertices: default_vertices(),
            n_steps: default_steps(),
            seed: 0,
        }
    }
}

/// Settings shared by the denoising and recovery protocols.
///
/// Read from TOML; every key is optional:
///
/// ```toml
/// rho = 0.5
/// n_trials = 20
/// seed = 1
/// snr_grid = [-10.0, 0.0, 10.0]
/// missing_grid = [0.1, 0.3, 0.5]
/// bands = 32
/// mean = "remove"
/// baseline_psd = "full"
/// output = "results.csv"
///
/// [solver]
/// tol = 1e-8
/// max_iters = 2000
/// f_max = 1e8
///
/// [data]
/// source = "files"
/// coords = "coords.csv"
/// readings = "readings.csv"
/// radius = 30.0
/// target_degree = 3.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Training fraction of the time axis.
    pub rho: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Input SNRs in dB for denoising.
    pub snr_grid: Vec<f64>,
    /// Fractions of missing entries for recovery.
    pub missing_grid: Vec<f64>,
    /// Number of STFT bands; `None` uses the default window.
    pub bands: Option<usize>,
    pub mean: MeanHandling,
    pub baseline_psd: BaselinePsd,
    pub solver: SolverConfig,
    pub data: DataSource,
    /// Long-form results CSV.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rho: 0.5,
            n_trials: 20,
            seed: 0,
            snr_grid: (0..=8).map(|k| -10.0 + 5.0 * k as f64).collect(),
            missing_grid: (1..=9).map(|k| k as f64 / 10.0).collect(),
            bands: None,
            mean: MeanHandling::Remove,
            baseline_psd: BaselinePsd::Full,
            solver: SolverConfig::default(),
            data: DataSource::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a TOML config. Relative data and output paths are resolved
    /// against the config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Files {
            coords, readings, ..
        } = &mut cfg.data
        {
            resolve(coords);
            resolve(readings);
        }
        if let Some(out) = cfg.output.as_mut() {
            resolve(out);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if self.n_trials == 0 {
            return bad("n_trials must be positive".into());
        }
        if self.snr_grid.is_empty() || self.missing_grid.is_empty() {
            return bad("parameter grids must be non-empty".into());
        }
        if self.snr_grid.iter().any(|v| !v.is_finite()) {
            return bad("snr_grid entries must be finite".into());
        }
        if self.missing_grid.iter().any(|&p| !(0.0..1.0).contains(&p)) {
            return bad("missing_grid entries must lie in [0, 1)".into());
        }
        if let Some(m) = self.bands {
            if m < 2 || m % 2 != 0 {
                return bad(format!("bands must be even and at least 2, got {m}"));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 || !(self.solver.f_max > 0.0) {
            return bad("solver settings must be positive".into());
        }
        Ok(())
    }
}
