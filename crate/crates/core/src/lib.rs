//! Signal processing for time-varying graph signals under joint time-vertex
//! stationarity.
//!
//! A signal is an `N × T` real matrix: one row per vertex, one column per time
//! step. The joint Fourier basis is the Kronecker product of the unitary DFT and
//! the graph Laplacian eigenbasis. On top of it the crate provides joint
//! filtering and localization ([`joint`]), stationary-process synthesis and
//! diagnostics ([`stationarity`]), Welch-style joint power spectral density
//! estimation ([`psd`]), Wiener and Tikhonov reconstruction ([`wiener`]), and
//! the denoising / recovery experiment protocols ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod joint;
pub mod psd;
pub mod stationarity;
pub mod time;
pub mod wiener;

pub use error::{Error, Result};
pub use graph::{Graph, GraphSpectrum};
pub use joint::{JointBasis, JointFilter};
pub use time::{EigenvalueMode, TimeBasis, Window};
