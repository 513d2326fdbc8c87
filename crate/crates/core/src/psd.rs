//! Joint power spectral density estimation from one or a few realizations.
//!
//! Each vertex time series goes through the circular STFT, the frames are
//! rotated into the graph Fourier basis, and squared magnitudes are averaged
//! over frames (Welch's method carried over to the joint domain).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::GraphSpectrum;
use crate::time::{stft, Window};

/// Number of bands used when none is requested.
pub const DEFAULT_BANDS: usize = 32;

/// How the estimator treats the signal mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanHandling {
    /// Subtract the global mean over vertices and time before estimating.
    #[default]
    Remove,
    /// Require the caller to have centred the signal (`|mean| < 1e-9 rms`).
    AssertCentered,
}

/// Interpolation rule on the circular band axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    LinearCircular,
    Nearest,
}

/// Default window for a signal of `n_steps` samples: iterated sine with
/// `min(32, T)` bands (rounded down to even) and half overlap.
pub fn default_window(n_steps: usize) -> Result<Window> {
    let m = if n_steps <= DEFAULT_BANDS {
        n_steps - n_steps % 2
    } else {
        DEFAULT_BANDS
    };
    Window::iterated_sine(m)
}

/// GFT-of-STFT coefficients `C[n, k, m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientsTensor {
    /// One `frames × bands` matrix per graph frequency.
    slices: Vec<DMatrix<Complex64>>,
}

impl CoefficientsTensor {
    pub fn n_graph_frequencies(&self) -> usize {
        self.slices.len()
    }

    pub fn n_frames(&self) -> usize {
        self.slices.first().map_or(0, |s| s.nrows())
    }

    pub fn n_bands(&self) -> usize {
        self.slices.first().map_or(0, |s| s.ncols())
    }

    pub fn get(&self, n: usize, k: usize, m: usize) -> Complex64 {
        self.slices[n][(k, m)]
    }

    pub fn slice(&self, n: usize) -> &DMatrix<Complex64> {
        &self.slices[n]
    }
}

/// `C[n, k, m] = Σ_i U_G[i, n] STFT{x^i}(k, m)`.
pub fn coefficients_tensor(
    x: &DMatrix<f64>,
    spectrum: &GraphSpectrum,
    w: &Window,
) -> Result<CoefficientsTensor> {
    if x.nrows() != spectrum.n_vertices() {
        return Err(Error::dims(
            format!("{} rows", spectrum.n_vertices()),
            x.nrows(),
        ));
    }
    w.check_signal(x.ncols())?;
    // both maps are linear and act on different axes, so the GFT can go first
    let rotated = spectrum.eigenvectors().tr_mul(x);
    let slices = rotated
        .row_iter()
        .map(|row| {
            let series: Vec<f64> = row.iter().copied().collect();
            stft(&series, w)
        })
        .collect::<Result<_>>()?;
    Ok(CoefficientsTensor { slices })
}

/// Sampled JPSD on the `N × M` grid `(λ_n, ω_m = 2π m / M)`, `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jpsd {
    values: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    interpolation: Interpolation,
}

impl Jpsd {
    pub fn new(
        values: DMatrix<f64>,
        eigenvalues: DVector<f64>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        crate::stationarity::check_psd(&values)?;
        if values.ncols() == 0 {
            return Err(Error::InvalidArgument("JPSD needs at least one band".into()));
        }
        if eigenvalues.len() != values.nrows() {
            return Err(Error::dims(values.nrows(), eigenvalues.len()));
        }
        Ok(Jpsd {
            values,
            eigenvalues,
            interpolation,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn n_bands(&self) -> usize {
        self.values.ncols()
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    /// Band centre frequencies `2π m / M`.
    pub fn band_frequencies(&self) -> Vec<f64> {
        crate::time::angular_grid(self.n_bands())
    }

    /// Per-graph-frequency PSD at an arbitrary angular frequency (taken mod 2π).
    pub fn interpolate(&self, omega: f64) -> DVector<f64> {
        let m = self.n_bands();
        let pos = omega.rem_euclid(2.0 * PI) / (2.0 * PI) * m as f64;
        match self.interpolation {
            Interpolation::Nearest => {
                let idx = (pos.round() as usize) % m;
                self.values.column(idx).into_owned()
            }
            Interpolation::LinearCircular => {
                let lo = (pos.floor() as usize) % m;
                let hi = (lo + 1) % m;
                let frac = pos - pos.floor();
                let v = self.values.column(lo) * (1.0 - frac) + self.values.column(hi) * frac;
                v.map(|x| x.max(0.0))
            }
        }
    }

    /// Evaluates the PSD on the `T`-point grid `ω_τ = 2π τ / T`.
    pub fn upsample_to_grid(&self, n_steps: usize) -> Result<DMatrix<f64>> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("target grid needs T >= 1".into()));
        }
        let m = self.n_bands();
        let mut out = DMatrix::zeros(self.values.nrows(), n_steps);
        for tau in 0..n_steps {
            // exact band hits avoid rounding in the frequency arithmetic
            if (tau * m).is_multiple_of(n_steps) {
                out.set_column(tau, &self.values.column(tau * m / n_steps));
            } else {
                let omega = 2.0 * PI * tau as f64 / n_steps as f64;
                out.set_column(tau, &self.interpolate(omega));
            }
        }
        Ok(out)
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn centre(x: &DMatrix<f64>, handling: MeanHandling) -> Result<DMatrix<f64>> {
    let mean = x.mean();
    match handling {
        MeanHandling::Remove => Ok(x.add_scalar(-mean)),
        MeanHandling::AssertCentered => {
            let rms = (x.norm_squared() / x.len() as f64).sqrt();
            if mean.abs() >= 1e-9 * rms && mean != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "signal mean {mean:e} is not negligible (rms {rms:e}); remove it first"
                )));
            }
            Ok(x.clone())
        }
    }
}

/// `h̃(λ_n, ω_m) = a / (T ‖g‖²) Σ_k |C[n, k, m]|²`, averaged over the supplied realizations.
pub fn estimate_jpsd(
    realizations: &[DMatrix<f64>],
    spectrum: &GraphSpectrum,
    w: &Window,
    mean: MeanHandling,
) -> Result<Jpsd> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::InvalidArgument("no realizations supplied".into()))?;
    let (n, t) = first.shape();
    let mut acc = DMatrix::<f64>::zeros(n, w.n_bands());
    for x in realizations {
        if x.shape() != (n, t) {
            return Err(Error::dims(format!("{n}x{t}"), format!("{}x{}", x.nrows(), x.ncols())));
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: "signal".into(),
                value: *v,
            });
        }
        let centred = centre(x, mean)?;
        let c = coefficients_tensor(&centred, spectrum, w)?;
        let scale = w.hop() as f64 / (t as f64 * w.energy());
        let mut power = Vec::with_capacity(c.n_frames());
        for g in 0..n {
            let slice = c.slice(g);
            for m in 0..w.n_bands() {
                power.clear();
                power.extend(slice.column(m).iter().map(|v| v.norm_sqr()));
                acc[(g, m)] += scale * pairwise_sum(&power);
            }
        }
    }
    acc /= realizations.len() as f64;
    Jpsd::new(acc, spectrum.eigenvalues().clone(), Interpolation::LinearCircular)
}
