//! Pairwise error probability of superimposed codewords over Rayleigh paths.

use num_complex::Complex;

use crate::afdm::AfdmParams;
use crate::channel::{path_matrix_closed_form, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Per-path DAFT-domain matrices scaled by the path gains (untruncated).
pub fn path_matrices<T: Real>(paths: &ChannelRealization<T>, params: &AfdmParams<T>) -> Vec<CMatrix<T>> {
    paths
        .paths
        .iter()
        .map(|p| path_matrix_closed_form(p, params, params.n).scale(p.gain))
        .collect()
}

/// `Φ(Δ) = [h₁H₁Δ | … | h_P H_P Δ]`. Pass unit gains for the plain form; a
/// gain equal to the tap's standard deviation folds the tap power in.
pub fn phi_delta<T: Real>(delta: &[Complex<T>], paths: &ChannelRealization<T>, params: &AfdmParams<T>) -> Result<CMatrix<T>> {
    if delta.len() != params.n {
        return Err(Error::LengthMismatch {
            expected: params.n,
            got: delta.len(),
        });
    }
    if delta.iter().all(|d| d.norm_sqr() == T::zero()) {
        return Err(Error::ZeroDelta);
    }
    let cols: Vec<Vec<Complex<T>>> = path_matrices(paths, params).iter().map(|h| h.mul_vec(delta)).collect();
    Ok(CMatrix::from_fn(params.n, cols.len(), |r, c| cols[c][r]))
}

/// Rank and nonzero eigenvalues of `ΦᴴΦ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiversityReport<T> {
    pub rank: usize,
    /// Nonzero eigenvalues, descending.
    pub eigenvalues: Vec<T>,
    /// Product of the nonzero eigenvalues.
    pub coding_gain: T,
}

pub fn diversity_report<T: Real>(phi: &CMatrix<T>) -> DiversityReport<T> {
    let gram = phi.adjoint().matmul(phi);
    let mut ev = gram.hermitian_eigenvalues();
    ev.reverse();
    let eigenvalues = nonzero(&ev);
    DiversityReport {
        rank: eigenvalues.len(),
        coding_gain: eigenvalues.iter().copied().fold(T::one(), |a, b| a * b),
        eigenvalues,
    }
}

fn nonzero<T: Real>(ev: &[T]) -> Vec<T> {
    let max = ev.iter().copied().fold(T::zero(), T::max);
    let tol = max * T::lit(RANK_THRESHOLD);
    ev.iter().copied().filter(|&l| l > tol && l > T::zero()).collect()
}

/// Averaged PEP from the two-exponential Q-function approximation and its
/// high-SNR asymptote.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pep<T> {
    pub value: T,
    pub asymptote: T,
    pub rank: usize,
}

/// `(1/12) Π (1 + λ/(4N₀))⁻¹ + (1/4) Π (1 + λ/(3N₀))⁻¹` over the nonzero
/// eigenvalues, and `N₀^{-R} (4^R/12 + 3^R/4) Π λ⁻¹`.
pub fn pep_from_eigenvalues<T: Real>(eigenvalues: &[T], n0: T) -> Result<Pep<T>> {
    if !(n0 > T::zero()) {
        return Err(Error::NonPositiveVariance);
    }
    let ev = nonzero(eigenvalues);
    let (four, three) = (T::lit(4.0), T::lit(3.0));
    let mut p4 = T::one();
    let mut p3 = T::one();
    let mut prod = T::one();
    for &l in &ev {
        p4 /= T::one() + l / (four * n0);
        p3 /= T::one() + l / (three * n0);
        prod *= l / n0;
    }
    let r = ev.len() as i32;
    let (a, b) = (T::lit(1.0 / 12.0), T::lit(0.25));
    Ok(Pep {
        value: a * p4 + b * p3,
        asymptote: (a * four.powi(r) + b * three.powi(r)) / prod,
        rank: ev.len(),
    })
}

/// PEP of confusing two codewords that differ by `delta`; path gains are
/// the Rayleigh standard deviations.
pub fn pep<T: Real>(delta: &[Complex<T>], paths: &ChannelRealization<T>, params: &AfdmParams<T>, n0: T) -> Result<Pep<T>> {
    let phi = phi_delta(delta, paths, params)?;
    pep_from_eigenvalues(&diversity_report(&phi).eigenvalues, n0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        let z = pep_from_eigenvalues::<f64>(&[0.0], 1.0).unwrap();
        assert!((z.value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(z.rank, 0);
        let one = pep_from_eigenvalues(&[4.0f64], 1.0).unwrap();
        assert!((one.value - (1.0 / 24.0 + 0.25 * 3.0 / 7.0)).abs() < 1e-15);
        assert!(pep_from_eigenvalues(&[1.0f64], 0.0).is_err());
    }

    #[test]
    fn identity_path_gives_delta_column() {
        let params = AfdmParams::<f64>::ofdm(4, 1).unwrap();
        let ch = ChannelRealization::single(Complex::new(1.0, 0.0), 0, 0.0);
        let d = vec![Complex::new(1.0, 0.0), Complex::new(0.0, -1.0), Complex::new(0.0, 0.0), Complex::new(2.0, 0.0)];
        let phi = phi_delta(&d, &ch, &params).unwrap();
        assert_eq!(phi.cols(), 1);
        for i in 0..4 {
            assert!((phi[(i, 0)] - d[i]).norm() < 1e-12);
        }
        let rep = diversity_report(&phi);
        assert_eq!(rep.rank, 1);
        assert!((rep.coding_gain - 6.0).abs() < 1e-9);
        assert!(matches!(phi_delta(&[Complex::new(0.0, 0.0); 4], &ch, &params), Err(Error::ZeroDelta)));
    }
}
