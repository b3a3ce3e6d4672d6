//! Modeling, simulation and fitting toolkit for a scanning transmon qubit
//! coupled to a coplanar-waveguide resonator.
//!
//! * [`jc_model`]: dressed modes and low-power transmission spectra.
//! * [`transmon`]: charge-basis eigensolver, `E_J` inversion, SQUID tuning.
//! * [`coupling`]: voltage division, mode shape and `g(x, y, z)` from
//!   tabulated capacitances.
//! * [`lm`] and [`fitting`]: least-squares engine and fit pipelines.
//! * [`scan_sim`]: synthetic measurement campaigns and vibration conversion.
//! * [`io`]: text file formats, output directories and manifests.
//! * [`cli`]: the `scanqubit` command line and its run configuration.
//!
//! Frequencies are in GHz, times in µs, lengths in µm, capacitances in fF.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod coupling;
pub mod error;
pub mod fitting;
pub mod io;
pub mod jc_model;
pub mod lm;
pub mod scan_sim;
pub mod transmon;
pub mod tridiag;
pub mod units;

pub use error::{Error, Result};
