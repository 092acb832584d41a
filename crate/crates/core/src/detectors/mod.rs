//! Multiuser receivers: message passing, two-stage equalization plus message
//! passing, and the iterative LMMSE/decoder loop.

pub mod lmmse;
pub mod messages;
pub mod mpa;
pub mod oamp;
pub mod two_stage;

pub use lmmse::{lmmse_estimate, lmmse_estimate_direct, lmmse_variances};
pub use messages::{
    extrinsic_combine, gaussian_from_llr, gaussian_from_llr_generic, gaussian_from_llr_qpsk, llr_from_gaussian,
    llr_from_gaussian_generic, llr_from_gaussian_qpsk, Combined, GaussianMessage, VarianceBounds,
};
pub use mpa::{argmax, mpa_detect, Edge, SparseFactorGraph, DEFAULT_MPA_CAP};
pub use oamp::{map_frame, oamp_receive, IterationTrace, OampBlock, OampConfig, OampOutput};
pub use two_stage::{lmmse_equalize, two_stage_downlink, Equalized};

use crate::num::Real;

/// Codeword marginals (variable `q·J + j`) and the resulting hard bits per
/// user, groups in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Detection<T> {
    pub marginals: Vec<Vec<T>>,
    pub bits: Vec<Vec<u8>>,
}

/// Natural-binary labels (most significant first) of each variable's most
/// probable codeword, collected per user.
pub fn hard_bits<T: Real>(marginals: &[Vec<T>], users: usize, bits_per_symbol: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::with_capacity(marginals.len() / users.max(1) * bits_per_symbol); users];
    for (v, p) in marginals.iter().enumerate() {
        let i = argmax(p);
        for b in (0..bits_per_symbol).rev() {
            out[v % users].push(((i >> b) & 1) as u8);
        }
    }
    out
}

/// MPA detection of an uplink or downlink frame given the DAFT-domain
/// channels (one shared or one per user).
pub fn mpa_receive<T: Real>(
    y: &[num_complex::Complex<T>],
    channels: &[&crate::linalg::CMatrix<T>],
    codebooks: &[crate::scma::Codebook<T>],
    scheme: crate::scma::AllocationScheme,
    n0: T,
    iterations: usize,
    cap: f64,
) -> crate::error::Result<Detection<T>> {
    let graph = SparseFactorGraph::from_channels(channels, codebooks, scheme, n0, T::zero())?;
    let marginals = mpa_detect(y, &graph, iterations, cap)?;
    let bps = codebooks[0].x.cols().trailing_zeros() as usize;
    let bits = hard_bits(&marginals, codebooks.len(), bps);
    Ok(Detection { marginals, bits })
}
