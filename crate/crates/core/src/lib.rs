//! Link-level simulation of AFDM-SCMA.
//!
//! The modem (`afdm`) maps symbols onto chirp subcarriers through the
//! discrete affine Fourier transform; `channel` builds doubly-selective
//! channels and their effective matrices; `scma` holds the sparse codebooks
//! and signature design; `detectors` has the MPA, LMMSE, two-stage and
//! iterative receivers; `coding` the LDPC code and interleavers; `analysis`
//! the union bound, diversity slope and state evolution. `harness` ties it
//! together into configurable BER sweeps.
//!
//! Numeric code is generic over `f32`/`f64` through [`num::Real`]; the
//! aliases below fix the common double-precision types.

pub mod afdm;
pub mod analysis;
pub mod channel;
pub mod coding;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod num;
pub mod scma;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type CMatrix32 = linalg::CMatrix<f32>;
