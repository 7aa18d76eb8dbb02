//! Multivariate wavelet ridge analysis.
//!
//! Extracts a common modulated oscillation from N-channel time series using
//! analytic generalized Morse wavelet transforms, joint amplitude ridges, and
//! along-ridge estimates of the signal, its instantaneous frequency,
//! curvature and leading-order bias.

pub mod cwt;
pub mod ellipse;
pub mod error;
pub mod io;
pub mod moments;
pub mod morse;
pub mod pipeline;
pub mod ridge;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64;
