//! Simulation of third-order stationary non-Gaussian random fields in one to
//! four dimensions by spectral representation.
//!
//! A prescribed power spectrum `S` and bispectrum `B` are sampled on a
//! [`grid::GridSpec`], split into pure and pair-interaction parts by
//! [`decomposition::decompose`], and turned into samples either by direct
//! cosine summation or by FFT ([`simulator`]). [`moments`] gives the exact
//! ensemble moments of that discrete model and [`estimation`] the matching
//! ensemble estimators.

pub mod decomposition;
pub mod error;
pub mod estimation;
pub mod fftn;
pub mod grid;
pub mod io;
pub mod moments;
pub mod rng;
pub mod simulator;
pub mod spectral_model;

pub use error::{Error, Result};
