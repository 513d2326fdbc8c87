//! Fourier analysis along the time axis: unitary DFT, ring frequencies, the
//! circular STFT and its analysis windows.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Which operator the time eigenvalues describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenvalueMode {
    /// `real(1 - e^{-jω})`, real and in `[0, 2]`.
    Laplacian,
    /// `e^{-jω}`, the cyclic lag operator.
    Lag,
}

/// Unitary DFT basis for `T` time steps together with its frequency grid.
#[derive(Clone)]
pub struct TimeBasis {
    n_steps: usize,
    mode: EigenvalueMode,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TimeBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeBasis")
            .field("n_steps", &self.n_steps)
            .field("mode", &self.mode)
            .finish()
    }
}

impl TimeBasis {
    pub fn new(n_steps: usize, mode: EigenvalueMode) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("time basis needs T >= 1".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(TimeBasis {
            n_steps,
            mode,
            forward: planner.plan_fft_forward(n_steps),
            inverse: planner.plan_fft_inverse(n_steps),
        })
    }

    pub fn laplacian(n_steps: usize) -> Result<Self> {
        Self::new(n_steps, EigenvalueMode::Laplacian)
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn mode(&self) -> EigenvalueMode {
        self.mode
    }

    /// `ω_τ = 2π τ / T` for `τ = 0..T`.
    pub fn angular_frequencies(&self) -> Vec<f64> {
        angular_grid(self.n_steps)
    }

    /// Eigenvalues of the time operator; real in Laplacian mode.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.angular_frequencies()
            .into_iter()
            .map(|w| {
                let lag = Complex64::from_polar(1.0, -w);
                match self.mode {
                    EigenvalueMode::Laplacian => Complex64::new(1.0 - lag.re, 0.0),
                    EigenvalueMode::Lag => lag,
                }
            })
            .collect()
    }

    /// Real Laplacian eigenvalues `1 - cos ω_τ`; errors in lag mode.
    pub fn laplacian_eigenvalues(&self) -> Result<Vec<f64>> {
        match self.mode {
            EigenvalueMode::Laplacian => Ok(self.eigenvalues().iter().map(|c| c.re).collect()),
            EigenvalueMode::Lag => Err(Error::InvalidArgument(
                "real time eigenvalues are only defined in laplacian mode".into(),
            )),
        }
    }

    /// Unitary forward DFT in place: `ŝ[τ] = T^{-1/2} Σ_t s[t] e^{-2πj tτ/T}`.
    pub fn dft_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check_len(buf.len())?;
        self.forward.process(buf);
        let scale = 1.0 / (self.n_steps as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    /// Inverse of [`TimeBasis::dft_in_place`].
    pub fn idft_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check_len(buf.len())?;
        self.inverse.process(buf);
        let scale = 1.0 / (self.n_steps as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    pub fn dft(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = s.to_vec();
        self.dft_in_place(&mut buf)?;
        Ok(buf)
    }

    pub fn idft(&self, s: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = s.to_vec();
        self.idft_in_place(&mut buf)?;
        Ok(buf)
    }

    /// Dense `U_T` with `[U_T]_{t,τ} = e^{2πj tτ/T} / √T`.
    pub fn basis_matrix(&self) -> DMatrix<Complex64> {
        let t = self.n_steps;
        let scale = 1.0 / (t as f64).sqrt();
        DMatrix::from_fn(t, t, |r, c| {
            Complex64::from_polar(scale, 2.0 * PI * ((r * c) % t) as f64 / t as f64)
        })
    }

    /// `U_T h` circularly shifted by `shift`: the time localization of a response
    /// sampled on the frequency grid.
    pub fn time_localize(&self, response: &[f64], shift: usize) -> Result<Vec<Complex64>> {
        self.check_len(response.len())?;
        let mut buf: Vec<Complex64> = response.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.idft_in_place(&mut buf)?;
        let t = self.n_steps;
        let mut out = vec![Complex64::new(0.0, 0.0); t];
        for (i, v) in buf.into_iter().enumerate() {
            out[(i + shift) % t] = v;
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_steps {
            return Err(Error::dims(self.n_steps, len));
        }
        Ok(())
    }
}

pub fn angular_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// Analysis window for the circular STFT.
///
/// `values[p]` holds the window at offset `p - M/2` from the frame centre, so the
/// stored support is `[-M/2, M/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    hop: usize,
    n_bands: usize,
}

impl Window {
    pub fn new(values: Vec<f64>, hop: usize, n_bands: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("window must have a nonempty support".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                location: "window".into(),
                value: *v,
            });
        }
        let energy: f64 = values.iter().map(|v| v * v).sum();
        if energy <= 0.0 {
            return Err(Error::InvalidArgument("window has zero energy".into()));
        }
        if hop == 0 || hop > values.len() {
            return Err(Error::InvalidArgument(format!(
                "hop {hop} must be in 1..={}",
                values.len()
            )));
        }
        if n_bands == 0 {
            return Err(Error::InvalidArgument("number of bands must be positive".into()));
        }
        Ok(Window {
            values,
            hop,
            n_bands,
        })
    }

    /// Iterated sine window `g(t) = sin(π/2 · cos²(πt/M))` on `[-M/2, M/2)` with hop `M/2`.
    ///
    /// With that hop the squared shifts sum to exactly one, so the STFT is a tight frame.
    pub fn iterated_sine(support: usize) -> Result<Self> {
        if support == 0 || !support.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "iterated sine window needs an even positive support, got {support}"
            )));
        }
        let m = support as f64;
        let values = (0..support)
            .map(|p| {
                let t = p as f64 - m / 2.0;
                (0.5 * PI * (PI * t / m).cos().powi(2)).sin()
            })
            .collect();
        Window::new(values, support / 2, support)
    }

    /// All-ones window with the given support and hop.
    pub fn rectangular(support: usize, hop: usize) -> Result<Self> {
        Window::new(vec![1.0; support], hop, support)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> usize {
        self.values.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Number of frames `⌊T / a⌋` for a signal of length `T`.
    pub fn n_frames(&self, n_steps: usize) -> usize {
        n_steps / self.hop
    }

    /// Window value at circular time `t` for frame `k` (zero off the support).
    pub fn value_at(&self, t: usize, frame: usize, n_steps: usize) -> f64 {
        let half = self.support() / 2;
        let centre = (self.hop * frame) % n_steps;
        // offset from the centre, shifted into [0, T)
        let off = (t + n_steps - centre) % n_steps;
        let p = (off + half) % n_steps;
        if p < self.support() {
            self.values[p]
        } else {
            0.0
        }
    }

    pub(crate) fn check_signal(&self, n_steps: usize) -> Result<()> {
        if self.support() > n_steps {
            return Err(Error::InvalidArgument(format!(
                "window support {} longer than signal length {n_steps}",
                self.support()
            )));
        }
        Ok(())
    }
}

/// Circular STFT `C[k, m] = Σ_t s(t) g(t - a k) e^{-2πj t m / M}` (0-based indices).
///
/// Returns a `⌊T/a⌋ × M` matrix; frame `k` is centred at time `a k`.
pub fn stft(s: &[f64], w: &Window) -> Result<DMatrix<Complex64>> {
    let t_len = s.len();
    w.check_signal(t_len)?;
    let m = w.n_bands();
    let twiddles: Vec<Complex64> = (0..m)
        .map(|q| Complex64::from_polar(1.0, -2.0 * PI * q as f64 / m as f64))
        .collect();
    let frames = w.n_frames(t_len);
    let half = w.support() / 2;
    let mut out = DMatrix::zeros(frames, m);
    let mut seg = Vec::with_capacity(w.support());
    for k in 0..frames {
        seg.clear();
        let centre = w.hop() * k;
        for (p, &g) in w.values().iter().enumerate() {
            let t = (centre + t_len * (half / t_len + 1) + p - half) % t_len;
            seg.push((t, s[t] * g));
        }
        for band in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(t, v) in &seg {
                acc += twiddles[(t * band) % m] * v;
            }
            out[(k, band)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn dft_constant_and_delta() {
        let b = TimeBasis::laplacian(8).unwrap();
        let s = vec![c(2.0); 8];
        let d = b.dft(&s).unwrap();
        assert!((d[0] - c(2.0 * 8f64.sqrt())).norm() < 1e-12);
        assert!(d[1..].iter().all(|v| v.norm() < 1e-12));

        let mut delta = vec![c(0.0); 8];
        delta[0] = c(1.0);
        let d = b.dft(&delta).unwrap();
        assert!(d.iter().all(|v| (v - c(1.0 / 8f64.sqrt())).norm() < 1e-12));
    }

    #[test]
    fn dft_parseval_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in [1usize, 5, 16, 37] {
            let b = TimeBasis::laplacian(t).unwrap();
            let s: Vec<Complex64> = (0..t)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let d = b.dft(&s).unwrap();
            let e1: f64 = s.iter().map(|v| v.norm_sqr()).sum();
            let e2: f64 = d.iter().map(|v| v.norm_sqr()).sum();
            assert!((e1 - e2).abs() <= 1e-12 * e1);
            let back = b.idft(&d).unwrap();
            for (a, b) in back.iter().zip(&s) {
                assert!((a - b).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn dft_matches_basis_matrix() {
        let b = TimeBasis::laplacian(6).unwrap();
        let u = b.basis_matrix();
        let s: Vec<Complex64> = (0..6).map(|i| c(i as f64 * 0.3 - 1.0)).collect();
        let d = b.dft(&s).unwrap();
        let dense = u.adjoint() * nalgebra::DVector::from_vec(s);
        for i in 0..6 {
            assert!((d[i] - dense[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_eigenvalues_range() {
        let b = TimeBasis::laplacian(9).unwrap();
        let ev = b.laplacian_eigenvalues().unwrap();
        assert_eq!(ev[0], 0.0);
        assert!(ev.iter().all(|&v| (0.0..=2.0).contains(&v)));
        let lag = TimeBasis::new(9, EigenvalueMode::Lag).unwrap();
        assert!(lag.laplacian_eigenvalues().is_err());
        assert!((lag.eigenvalues()[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn iterated_sine_values() {
        let w = Window::iterated_sine(16).unwrap();
        assert_eq!(w.hop(), 8);
        assert!((w.values()[8] - 1.0).abs() < 1e-15);
        assert!(w.values()[0].abs() < 1e-15);
        assert!(Window::iterated_sine(15).is_err());
    }

    #[test]
    fn iterated_sine_is_tight() {
        let w = Window::iterated_sine(16).unwrap();
        let t_len = 64;
        let sums: Vec<f64> = (0..t_len)
            .map(|t| {
                (0..w.n_frames(t_len))
                    .map(|k| w.value_at(t, k, t_len).powi(2))
                    .sum()
            })
            .collect();
        for s in &sums {
            assert!((s - sums[0]).abs() < 1e-10);
        }
        assert!((sums[0] - 1.0).abs() < 1e-12);
    }

    /// Straight transcription of the summation over the full signal.
    fn stft_oracle(s: &[f64], w: &Window) -> DMatrix<Complex64> {
        let t_len = s.len();
        let m = w.n_bands();
        DMatrix::from_fn(w.n_frames(t_len), m, |k, band| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &v) in s.iter().enumerate() {
                let phase = -2.0 * PI * (t * band) as f64 / m as f64;
                acc += Complex64::from_polar(v * w.value_at(t, k, t_len), phase);
            }
            acc
        })
    }

    #[test]
    fn stft_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (t_len, support) in [(64usize, 16usize), (50, 10), (40, 40)] {
            let s: Vec<f64> = (0..t_len).map(|_| rng.random::<f64>() - 0.5).collect();
            let w = Window::iterated_sine(support).unwrap();
            let got = stft(&s, &w).unwrap();
            let want = stft_oracle(&s, &w);
            assert!((got - want).camax() < 1e-10);
        }
    }

    #[test]
    fn stft_zero_and_rectangular() {
        let w = Window::iterated_sine(8).unwrap();
        let z = stft(&vec![0.0; 32], &w).unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));

        let s: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
        let rect = Window::rectangular(12, 12).unwrap();
        let c1 = stft(&s, &rect).unwrap();
        assert_eq!(c1.nrows(), 1);
        let b = TimeBasis::laplacian(12).unwrap();
        let cs: Vec<Complex64> = s.iter().map(|&v| c(v)).collect();
        let d = b.dft(&cs).unwrap();
        for m in 0..12 {
            assert!((c1[(0, m)] - d[m] * 12f64.sqrt()).norm() < 1e-10);
        }
    }

    #[test]
    fn stft_sinusoid_concentrates() {
        let t_len = 64;
        let m = 16;
        let f = 8; // multiple of T/M = 4
        let s: Vec<f64> = (0..t_len)
            .map(|t| (2.0 * PI * f as f64 * t as f64 / t_len as f64).cos())
            .collect();
        let w = Window::iterated_sine(m).unwrap();
        let cmat = stft(&s, &w).unwrap();
        let band = f * m / t_len;
        let mirror = m - band;
        let total: f64 = cmat.iter().map(|v| v.norm_sqr()).sum();
        let mut lobe = 0.0;
        for k in 0..cmat.nrows() {
            let mags: Vec<f64> = cmat.row(k).iter().map(|v| v.norm()).collect();
            let top = mags.iter().cloned().fold(0.0, f64::max);
            assert!((mags[band] - top).abs() < 1e-10);
            assert!((mags[mirror] - top).abs() < 1e-10);
            assert!((mags[band] - cmat[(0, band)].norm()).abs() < 1e-10);
            for b in [band - 1, band, band + 1, mirror - 1, mirror, mirror + 1] {
                lobe += mags[b] * mags[b];
            }
        }
        // the window's main lobe spans one neighbouring band on each side
        assert!(lobe / total > 0.95, "concentration {}", lobe / total);
    }

    #[test]
    fn stft_frame_energy_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
        let w = Window::iterated_sine(16).unwrap();
        let cmat = stft(&s, &w).unwrap();
        let energy: f64 = cmat.iter().map(|v| v.norm_sqr()).sum();
        let norm2: f64 = s.iter().map(|v| v * v).sum();
        // Σ|C|² = M · Σ_t s(t)² Σ_k g(t - ak)² = M ‖s‖²
        assert!((energy - 16.0 * norm2).abs() < 1e-9 * energy);
        // ‖g‖² = a for the tight iterated sine window
        assert!((w.energy() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn stft_shift_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t_len = 64;
        let s: Vec<f64> = (0..t_len).map(|_| rng.random::<f64>()).collect();
        let w = Window::iterated_sine(16).unwrap();
        let shift = 2 * w.hop();
        let shifted: Vec<f64> = (0..t_len).map(|t| s[(t + t_len - shift) % t_len]).collect();
        let a = stft(&s, &w).unwrap();
        let b = stft(&shifted, &w).unwrap();
        let frames = a.nrows();
        for k in 0..frames {
            for m in 0..16 {
                let src = a[(k, m)].norm();
                let dst = b[((k + 2) % frames, m)].norm();
                assert!((src - dst).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stft_rejects_long_window() {
        let w = Window::iterated_sine(16).unwrap();
        assert!(stft(&[0.0; 8], &w).is_err());
    }

    #[test]
    fn time_localize_identity_and_shift() {
        let b = TimeBasis::laplacian(8).unwrap();
        let ones = vec![1.0; 8];
        let loc = b.time_localize(&ones, 3).unwrap();
        for (t, v) in loc.iter().enumerate() {
            let want = if t == 3 { 8f64.sqrt() } else { 0.0 };
            assert!((v - c(want)).norm() < 1e-12);
        }
        let h: Vec<f64> = b
            .angular_frequencies()
            .iter()
            .map(|w| 1.0 / (2.0 - w.cos()))
            .collect();
        let twice = {
            let a = b.time_localize(&h, 2).unwrap();
            let mut out = vec![c(0.0); 8];
            for (t, v) in a.into_iter().enumerate() {
                out[(t + 5) % 8] = v;
            }
            out
        };
        let once = b.time_localize(&h, 7).unwrap();
        for (a, b) in twice.iter().zip(&once) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
