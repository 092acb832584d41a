//! Iterative receiver that alternates a linear MMSE estimator with the
//! per-user channel decoders, exchanging extrinsic Gaussian messages.

use num_complex::Complex;

use super::lmmse::lmmse_estimate;
use super::messages::{extrinsic_combine, gaussian_from_llr, llr_from_gaussian, GaussianMessage, VarianceBounds};
use crate::coding::{Interleaver, LdpcCode};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;
use crate::scma::Alphabet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OampConfig<T> {
    pub outer_iterations: usize,
    /// Damping weight `κ ∈ (0, 1]`; one disables damping.
    pub damping: T,
    pub inner_decoder_iterations: usize,
    pub bounds: VarianceBounds<T>,
}

impl<T: Real> Default for OampConfig<T> {
    fn default() -> Self {
        Self {
            outer_iterations: 10,
            damping: T::lit(0.25),
            inner_decoder_iterations: 8,
            bounds: VarianceBounds::default(),
        }
    }
}

impl<T: Real> OampConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations == 0 || self.inner_decoder_iterations == 0 {
            return Err(Error::InvalidParams("iteration counts must be positive".into()));
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return Err(Error::InvalidParams(format!("damping {} must lie in (0, 1]", self.damping)));
        }
        Ok(())
    }
}

/// One modem symbol: the received vector and its `N × QJ` composite matrix
/// (column `q·J + j` carries user `j`'s symbol in group `q`).
#[derive(Clone, Debug)]
pub struct OampBlock<T> {
    pub r: Vec<Complex<T>>,
    pub g: CMatrix<T>,
}

/// Per-iteration summary. MSE and orthogonality fields are empty unless the
/// transmitted symbols were supplied.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace<T> {
    pub iteration: usize,
    /// Variance of the estimator's extrinsic output, per user.
    pub le_var: Vec<T>,
    /// Variance of the decoder-side extrinsic output, per user.
    pub nle_var: Vec<T>,
    pub le_mse: Vec<T>,
    pub nle_mse: Vec<T>,
    /// `|⟨e_in, e_out⟩| / (‖e_in‖ ‖e_out‖)` between the estimator's input and
    /// extrinsic output errors, per user.
    pub orthogonality: Vec<T>,
    pub clamps: usize,
}

#[derive(Clone, Debug)]
pub struct OampOutput<T> {
    pub info_bits: Vec<Vec<u8>>,
    /// Hard decisions on the coded bits from the first linear estimate,
    /// before any decoding.
    pub uncoded_bits: Vec<Vec<u8>>,
    pub codewords: Vec<Vec<u8>>,
    pub converged: Vec<bool>,
    pub trace: Vec<IterationTrace<T>>,
}

impl<T> OampOutput<T> {
    pub fn clamp_count(&self) -> usize {
        self.trace.iter().map(|t| t.clamps).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// Maps one user's coded frame to its symbol stream: interleave, then take
/// `log2 M` bits per symbol.
pub fn map_frame<T: Real>(codeword: &[u8], interleaver: &Interleaver, alphabet: &Alphabet<T>) -> Result<Vec<usize>> {
    let bits = interleaver.interleave(codeword)?;
    let b = alphabet.bits_per_symbol();
    if bits.len() % b != 0 {
        return Err(Error::NotDivisible { n: bits.len(), k: b });
    }
    bits.chunks(b).map(|c| alphabet.index_of(c)).collect()
}

fn correlation<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let mut dot = Complex::new(T::zero(), T::zero());
    let (mut na, mut nb) = (T::zero(), T::zero());
    for (x, y) in a.iter().zip(b) {
        dot += x.conj() * y;
        na += x.norm_sqr();
        nb += y.norm_sqr();
    }
    if na > T::zero() && nb > T::zero() {
        dot.norm() / (na * nb).sqrt()
    } else {
        T::zero()
    }
}

/// Runs the receiver over a frame spanning `blocks`.
///
/// Every user's stream has `blocks.len() · Q` symbols and must carry exactly
/// one codeword of `code`. `truth[j]` (optional) holds user `j`'s transmitted
/// symbols and enables the MSE trace.
#[allow(clippy::too_many_arguments)]
pub fn oamp_receive<T: Real>(
    blocks: &[OampBlock<T>],
    users: usize,
    alphabet: &Alphabet<T>,
    code: &LdpcCode,
    interleavers: &[Interleaver],
    config: &OampConfig<T>,
    n0: T,
    truth: Option<&[Vec<Complex<T>>]>,
) -> Result<OampOutput<T>> {
    config.validate()?;
    if interleavers.len() != users {
        return Err(Error::LengthMismatch {
            expected: users,
            got: interleavers.len(),
        });
    }
    let cols = blocks.first().map_or(0, |b| b.g.cols());
    if users == 0 || cols % users != 0 {
        return Err(Error::NotDivisible { n: cols, k: users.max(1) });
    }
    let groups = cols / users;
    for b in blocks {
        if b.g.cols() != cols || b.r.len() != b.g.rows() {
            return Err(Error::LengthMismatch { expected: cols, got: b.g.cols() });
        }
    }
    let stream = blocks.len() * groups;
    let needed = code.frame_bits() / alphabet.bits_per_symbol();
    if stream != needed || code.frame_bits() % alphabet.bits_per_symbol() != 0 {
        return Err(Error::LengthMismatch { expected: needed, got: stream });
    }
    if let Some(t) = truth {
        if t.len() != users || t.iter().any(|s| s.len() != stream) {
            return Err(Error::LengthMismatch { expected: stream, got: t.first().map_or(0, Vec::len) });
        }
    }

    let mut prior: Vec<GaussianMessage<T>> = (0..users).map(|_| GaussianMessage::uninformative(stream)).collect();
    let mut prev_le: Vec<Option<GaussianMessage<T>>> = vec![None; users];
    let mut prev_nle: Vec<Option<GaussianMessage<T>>> = vec![None; users];
    let mut trace = Vec::with_capacity(config.outer_iterations);
    let mut app: Vec<Vec<T>> = vec![Vec::new(); users];
    let mut hard: Vec<Vec<u8>> = vec![Vec::new(); users];
    let mut converged = vec![false; users];
    let mut uncoded: Vec<Vec<u8>> = vec![Vec::new(); users];
    let mut post: Vec<GaussianMessage<T>> = (0..users).map(|_| GaussianMessage::uninformative(stream)).collect();

    for it in 0..config.outer_iterations {
        let mut clamps = 0;
        // linear estimator, block by block
        for (b, blk) in blocks.iter().enumerate() {
            let mut mean = Vec::with_capacity(cols);
            let mut var = Vec::with_capacity(cols);
            for q in 0..groups {
                for p in &prior {
                    mean.push(p.mean[b * groups + q]);
                    var.push(p.var[b * groups + q]);
                }
            }
            let est = lmmse_estimate(&blk.r, &blk.g, &GaussianMessage { mean, var }, n0)?;
            for q in 0..groups {
                for (j, p) in post.iter_mut().enumerate() {
                    p.mean[b * groups + q] = est.mean[q * users + j];
                    p.var[b * groups + q] = est.var[q * users + j].max(config.bounds.min);
                }
            }
        }
        let mut row = IterationTrace {
            iteration: it + 1,
            le_var: Vec::with_capacity(users),
            nle_var: Vec::with_capacity(users),
            le_mse: Vec::new(),
            nle_mse: Vec::new(),
            orthogonality: Vec::new(),
            clamps: 0,
        };
        for j in 0..users {
            let le = extrinsic_combine(&post[j], &prior[j], config.damping, prev_le[j].as_ref(), config.bounds)?;
            clamps += usize::from(le.clamped);
            let le = le.message;
            if let Some(t) = truth {
                let e_in: Vec<Complex<T>> = prior[j].mean.iter().zip(&t[j]).map(|(m, s)| m - s).collect();
                let e_out: Vec<Complex<T>> = le.mean.iter().zip(&t[j]).map(|(m, s)| m - s).collect();
                row.le_mse.push(le.mse(&t[j]));
                row.orthogonality.push(correlation(&e_in, &e_out));
            }
            let llr = interleavers[j].deinterleave(&llr_from_gaussian(&le, alphabet))?;
            if it == 0 {
                uncoded[j] = llr.iter().map(|&l| u8::from(l < T::zero())).collect();
            }
            let out = code.decode(&llr, config.inner_decoder_iterations)?;
            converged[j] = out.converged;
            hard[j] = out.hard;
            app[j] = out.aposteriori;
            let dec = gaussian_from_llr(&interleavers[j].interleave(&app[j])?, alphabet)?;
            let dec = GaussianMessage {
                mean: dec.mean,
                var: dec.var.into_iter().map(|v| v.max(config.bounds.min)).collect(),
            };
            let nle = extrinsic_combine(&dec, &le, config.damping, prev_nle[j].as_ref(), config.bounds)?;
            clamps += usize::from(nle.clamped);
            let nle = nle.message;
            if let Some(t) = truth {
                row.nle_mse.push(nle.mse(&t[j]));
            }
            row.le_var.push(le.mean_var());
            row.nle_var.push(nle.mean_var());
            prior[j] = nle.clone();
            prev_le[j] = Some(le);
            prev_nle[j] = Some(nle);
        }
        row.clamps = clamps;
        trace.push(row);
    }
    let info_bits = hard.iter().map(|h| code.extract_info(h)).collect();
    Ok(OampOutput {
        info_bits,
        uncoded_bits: uncoded,
        codewords: hard,
        converged,
        trace,
    })
}
