//! Numerical simulator for atomic-frequency-comb (AFC) optical memories
//! prepared by frequency-modulated optical pumping.
//!
//! The pipeline mirrors the experiment it models:
//!
//! 1. [`spectrum`] synthesizes the FM pump line spectrum, the resonant RLC
//!    drive of the intra-cavity electro-optic prism and the Mach-Zehnder
//!    pulse train to be stored.
//! 2. [`material`] holds the Tm:YAG level structure, the site-selective
//!    polarization couplings and the spectral hole-burning geometry.
//! 3. [`engrave`] integrates per-frequency-class rate equations under the
//!    pump and produces the engraved optical-depth spectrum.
//! 4. [`servo`] co-simulates laser drift and the self-locking PI loop that
//!    keeps the pump aligned with the comb it burns.
//! 5. [`propagation`] builds the causal transfer function of the medium,
//!    propagates pulses through it and measures the echo.
//! 6. [`scenario`] wires everything into named, reproducible runs driven
//!    by a JSON [`config::ScenarioConfig`].

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod engrave;
pub mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod material;
pub mod propagation;
pub mod scenario;
pub mod servo;
pub mod spectrum;

pub use error::{Error, Result};
pub use grid::FrequencyGrid;
