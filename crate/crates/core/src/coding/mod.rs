//! Channel coding for the iterative receiver: LDPC codes in alist form and
//! per-user bit interleavers.

pub mod alist;
pub mod construct;
pub mod interleaver;
pub mod ldpc;

pub use alist::SparseBinary;
pub use interleaver::Interleaver;
pub use ldpc::{DecodeOutput, LdpcCode};

/// Seed of the shipped parity-check asset; `construct::ira(2048, 682, 3, DEFAULT_CODE_SEED)`
/// reproduces it.
pub const DEFAULT_CODE_SEED: u64 = 2023;
