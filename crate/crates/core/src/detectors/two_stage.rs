//! Downlink detection in two stages: a linear equalizer undoes the DAFT-domain
//! channel, then each group of `K` resources is detected by MPA on the
//! `K × J` SCMA graph.

use num_complex::Complex;

use super::mpa::{mpa_detect, SparseFactorGraph};
use super::{hard_bits, Detection};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;
use crate::scma::{deallocate, AllocationScheme, Codebook};

/// Equalizer output `ŵ = Hᴴ(HHᴴ + N₀I)⁻¹ y` with its per-entry gain
/// `μ = diag(Hᴴ(HHᴴ + N₀I)⁻¹H)` and the linear filter itself.
pub struct Equalized<T> {
    pub w_hat: Vec<Complex<T>>,
    pub gain: Vec<T>,
    pub filter: CMatrix<T>,
}

pub fn lmmse_equalize<T: Real>(y: &[Complex<T>], h: &CMatrix<T>, n0: T) -> Result<Equalized<T>> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::InvalidParams(format!("channel must be square, got {}×{}", n, h.cols())));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y.len() });
    }
    if n0 < T::zero() {
        return Err(Error::NonPositiveVariance);
    }
    let mut s = h.matmul(&h.adjoint());
    s.add_scaled_identity(n0);
    // W = Hᴴ S⁻¹ = (S⁻¹ H)ᴴ since S is Hermitian
    let filter = s.solve_hpd(h)?.adjoint();
    let w_hat = filter.mul_vec(y);
    let b = filter.matmul(h);
    let gain = (0..n).map(|i| b[(i, i)].re).collect();
    Ok(Equalized { w_hat, gain, filter })
}

/// Average energy carried by each resource of the SCMA block.
fn resource_power<T: Real>(codebooks: &[Codebook<T>]) -> Vec<T> {
    let k_res = codebooks[0].x.rows();
    let m = T::from_index(codebooks[0].x.cols());
    (0..k_res)
        .map(|k| {
            codebooks
                .iter()
                .map(|cb| (0..cb.x.cols()).map(|s| cb.x[(k, s)].norm_sqr()).sum::<T>() / m)
                .sum()
        })
        .collect()
}

/// Two-stage downlink detector. `h` is the `N × N` DAFT-domain channel.
///
/// The MPA stage models `ŵ_k = μ_k w_k + e_k` where the variance of `e_k`
/// is the residual interference plus filtered noise of the equalizer.
pub fn two_stage_downlink<T: Real>(
    y: &[Complex<T>],
    h: &CMatrix<T>,
    codebooks: &[Codebook<T>],
    scheme: AllocationScheme,
    n0: T,
    mpa_iterations: usize,
    cap: f64,
) -> Result<Detection<T>> {
    let eq = lmmse_equalize(y, h, n0)?;
    let n = h.rows();
    let j_users = codebooks.len();
    let k_res = codebooks.first().map_or(0, |c| c.x.rows());
    if k_res == 0 || n % k_res != 0 {
        return Err(Error::NotDivisible { n, k: k_res });
    }
    let groups = n / k_res;
    let power_k = resource_power(codebooks);
    let perm = scheme.permutation(n, k_res)?;
    // power of the superimposed symbol on each subcarrier
    let mut power = vec![T::zero(); n];
    for (i, &p) in perm.iter().enumerate() {
        power[p] = power_k[i % k_res];
    }
    let b = eq.filter.matmul(h);
    let noise: Vec<T> = (0..n)
        .map(|i| {
            let interference: T = (0..n).filter(|&c| c != i).map(|c| b[(i, c)].norm_sqr() * power[c]).sum();
            let filtered: T = eq.filter.row(i).iter().map(|c| c.norm_sqr()).sum::<T>() * n0;
            (interference + filtered).max(T::lit(1e-12))
        })
        .collect();
    let w_groups = deallocate(&eq.w_hat, scheme, k_res)?;
    let gain_groups = deallocate(&eq.gain, scheme, k_res)?;
    let noise_groups = deallocate(&noise, scheme, k_res)?;
    let mut marginals = Vec::with_capacity(groups * j_users);
    for q in 0..groups {
        let span = q * k_res..(q + 1) * k_res;
        let graph = SparseFactorGraph::scma_block(codebooks, &gain_groups[span.clone()], noise_groups[span.clone()].to_vec())?;
        marginals.extend(mpa_detect(&w_groups[span], &graph, mpa_iterations, cap)?);
    }
    let bits_per_symbol = codebooks[0].x.cols().trailing_zeros() as usize;
    let bits = hard_bits(&marginals, j_users, bits_per_symbol);
    Ok(Detection { marginals, bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::lmmse::lmmse_estimate;
    use crate::detectors::messages::GaussianMessage;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::channel::complex_gaussian;

    #[test]
    fn equalizer_is_unit_prior_lmmse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = CMatrix::from_fn(8, 8, |_, _| complex_gaussian(&mut rng, 1.0));
        let y: Vec<Complex<f64>> = (0..8).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let eq = lmmse_equalize(&y, &h, 0.2).unwrap();
        let post = lmmse_estimate(&y, &h, &GaussianMessage::uninformative(8), 0.2).unwrap();
        for i in 0..8 {
            assert!((eq.w_hat[i] - post.mean[i]).norm() < 1e-10);
            assert!((1.0 - eq.gain[i] - post.var[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_without_noise_is_an_error() {
        let h = CMatrix::<f64>::zeros(4, 4);
        assert!(lmmse_equalize(&[Complex::new(0.0, 0.0); 4], &h, 0.0).is_err());
    }
}
