//! Dataset handling and the denoising / recovery protocols.
//!
//! A [`Dataset`] holds centred station readings. Experiments split it in time,
//! estimate spectra on the first block and score reconstructions on the second
//! against a time-only and a vertex-only Wiener baseline.

mod config;
mod protocols;
mod synthetic;

pub use config::{BaselinePsd, DataSource, ExperimentConfig};
pub use protocols::{
    run_denoising, run_recovery, DisjointSpectra, ResultRow, ResultsTable, SummaryRow,
};
pub use synthetic::{random_station_coords, synthetic_dataset, wave_jpsd, SyntheticDataset};

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{build_gaussian_radius_graph, calibrate_kernel_scale, Graph};
use crate::io;

/// Output SNR reported when the estimate matches the reference exactly.
pub const SNR_CAP_DB: f64 = 300.0;

/// Centred station readings.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub station_ids: Vec<String>,
    /// `N × d` station positions.
    pub coords: DMatrix<f64>,
    /// `N × T` readings with the global mean removed.
    pub readings: DMatrix<f64>,
    pub global_mean: f64,
}

/// Stations removed during ingestion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    /// `(station id, number of missing cells)`.
    pub dropped: Vec<(String, usize)>,
}

impl Dataset {
    /// Assembles a dataset, dropping stations with missing cells and removing
    /// the global mean.
    ///
    /// Rows of `readings` are matched to `coords` by id; both must list the same stations.
    pub fn from_parts(
        coord_ids: &[String],
        coords: &DMatrix<f64>,
        reading_ids: &[String],
        readings: &DMatrix<f64>,
    ) -> Result<(Dataset, IngestReport)> {
        if coord_ids.len() != coords.nrows() {
            return Err(Error::dims(coords.nrows(), coord_ids.len()));
        }
        if reading_ids.len() != readings.nrows() {
            return Err(Error::dims(readings.nrows(), reading_ids.len()));
        }
        let mut sorted_c: Vec<&String> = coord_ids.iter().collect();
        let mut sorted_r: Vec<&String> = reading_ids.iter().collect();
        sorted_c.sort();
        sorted_r.sort();
        if sorted_c != sorted_r {
            let only_c: Vec<_> = coord_ids.iter().filter(|i| !reading_ids.contains(i)).collect();
            let only_r: Vec<_> = reading_ids.iter().filter(|i| !coord_ids.contains(i)).collect();
            return Err(Error::InvalidArgument(format!(
                "station ids do not match between coordinates and readings (only in coordinates: {only_c:?}; only in readings: {only_r:?})"
            )));
        }

        let mut report = IngestReport::default();
        let mut keep = Vec::new();
        for (r, id) in reading_ids.iter().enumerate() {
            let missing = readings.row(r).iter().filter(|v| !v.is_finite()).count();
            if missing > 0 {
                report.dropped.push((id.clone(), missing));
            } else {
                keep.push(r);
            }
        }
        if keep.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 complete stations, found {}",
                keep.len()
            )));
        }
        let t = readings.ncols();
        let d = coords.ncols();
        let mut x = DMatrix::zeros(keep.len(), t);
        let mut c = DMatrix::zeros(keep.len(), d);
        let mut ids = Vec::with_capacity(keep.len());
        for (row, &r) in keep.iter().enumerate() {
            x.set_row(row, &readings.row(r));
            let ci = coord_ids
                .iter()
                .position(|id| id == &reading_ids[r])
                .expect("id sets checked equal");
            c.set_row(row, &coords.row(ci));
            ids.push(reading_ids[r].clone());
        }
        let global_mean = x.mean();
        x.add_scalar_mut(-global_mean);
        Ok((
            Dataset {
                station_ids: ids,
                coords: c,
                readings: x,
                global_mean,
            },
            report,
        ))
    }

    pub fn n_stations(&self) -> usize {
        self.readings.nrows()
    }

    pub fn n_steps(&self) -> usize {
        self.readings.ncols()
    }

    /// Radius graph on the station coordinates with the kernel scale calibrated
    /// to the requested average degree.
    pub fn build_graph(&self, radius: f64, target_degree: f64) -> Result<Graph> {
        let k = calibrate_kernel_scale(&self.coords, radius, target_degree)?;
        build_gaussian_radius_graph(&self.coords, radius, k)
    }
}

/// Reads a coordinates CSV and a readings CSV into a centred dataset.
pub fn ingest(coords_path: &Path, readings_path: &Path) -> Result<(Dataset, IngestReport)> {
    let c = io::read_coordinates(coords_path)?;
    let r = io::read_readings(readings_path)?;
    Dataset::from_parts(&c.ids, &c.coords, &r.ids, &r.values)
}

/// Contiguous time split into `⌊ρT⌋` training and `T − ⌊ρT⌋` test steps.
///
/// With `ρ = 1` both blocks are the full signal. `min_train` is the shortest
/// acceptable training block (the window support).
pub fn split(
    readings: &DMatrix<f64>,
    rho: f64,
    min_train: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "training fraction must lie in (0, 1], got {rho}"
        )));
    }
    let t = readings.ncols();
    if rho == 1.0 {
        if t < min_train {
            return Err(Error::InvalidArgument(format!(
                "signal has {t} steps, shorter than the window support {min_train}"
            )));
        }
        return Ok((readings.clone(), readings.clone()));
    }
    let t_train = (rho * t as f64).floor() as usize;
    if t_train < min_train.max(1) {
        return Err(Error::InvalidArgument(format!(
            "training block has {t_train} steps, shorter than the window support {min_train}"
        )));
    }
    if t_train == t {
        return Err(Error::InvalidArgument("test block is empty".into()));
    }
    Ok((
        readings.columns(0, t_train).into_owned(),
        readings.columns(t_train, t - t_train).into_owned(),
    ))
}

/// `10 log10(‖reference‖² / ‖estimate − reference‖²)`, capped at [`SNR_CAP_DB`].
pub fn snr_db(reference: &DMatrix<f64>, estimate: &DMatrix<f64>) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::dims(
            format!("{:?}", reference.shape()),
            format!("{:?}", estimate.shape()),
        ));
    }
    let signal = reference.norm_squared();
    if signal == 0.0 {
        return Err(Error::InvalidArgument("reference signal is zero".into()));
    }
    let err = (estimate - reference).norm_squared();
    if err == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / err).log10()).min(SNR_CAP_DB))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn centres_two_stations() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 5.0]);
        let (d, rep) = Dataset::from_parts(&ids(&["a", "b"]), &c, &ids(&["a", "b"]), &r).unwrap();
        assert_eq!(d.global_mean, 3.0);
        assert_eq!(d.readings, DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, 2.0]));
        assert!(rep.dropped.is_empty());
    }

    #[test]
    fn drops_station_with_nan_and_reorders_coords() {
        let c = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        let r = DMatrix::from_row_slice(3, 2, &[1.0, f64::NAN, 3.0, 5.0, 0.0, 1.0]);
        let (d, rep) =
            Dataset::from_parts(&ids(&["a", "b", "c"]), &c, &ids(&["c", "b", "a"]), &r).unwrap();
        assert_eq!(rep.dropped, vec![("c".to_string(), 1)]);
        assert_eq!(d.station_ids, ids(&["b", "a"]));
        assert_eq!(d.coords.row(0)[0], 1.0);
        assert_eq!(d.coords.row(1)[0], 0.0);
    }

    #[test]
    fn ingestion_errors() {
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let r = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(Dataset::from_parts(&ids(&["a", "b"]), &c, &ids(&["a", "x"]), &r).is_err());
        let r = DMatrix::from_row_slice(2, 1, &[1.0, f64::NAN]);
        assert!(Dataset::from_parts(&ids(&["a", "b"]), &c, &ids(&["a", "b"]), &r).is_err());
    }

    #[test]
    fn split_sizes() {
        let x = DMatrix::from_fn(2, 744, |i, t| (i + t) as f64);
        let (a, b) = split(&x, 0.5, 32).unwrap();
        assert_eq!((a.ncols(), b.ncols()), (372, 372));
        assert_eq!(b[(0, 0)], 372.0);
        let (a, b) = split(&x, 1.0, 32).unwrap();
        assert_eq!(a, x);
        assert_eq!(b, x);
        let y = DMatrix::from_element(1, 10, 1.0);
        let (a, b) = split(&y, 0.95, 1).unwrap();
        assert_eq!((a.ncols(), b.ncols()), (9, 1));
        assert!(split(&x, 0.01, 32).is_err());
        assert!(split(&x, 0.0, 1).is_err());
    }

    #[test]
    fn snr_definition() {
        let r = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert_eq!(snr_db(&r, &r).unwrap(), SNR_CAP_DB);
        assert!(snr_db(&r, &DMatrix::zeros(1, 2)).unwrap().abs() < 1e-12);
        let e = DMatrix::from_row_slice(1, 2, &[3.5, 4.0]);
        let want = 10.0 * (25.0f64 / 0.25).log10();
        assert!((snr_db(&r, &e).unwrap() - want).abs() < 1e-12);
        assert!(snr_db(&DMatrix::zeros(1, 2), &r).is_err());
    }
}
