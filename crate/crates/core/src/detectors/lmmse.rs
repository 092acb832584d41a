//! Linear MMSE estimation of `r = G s + w` under an independent Gaussian prior.

use num_complex::Complex;

use super::messages::GaussianMessage;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;

/// Posterior means and diagonal variances.
///
/// Uses `W = V Gᴴ (N₀I + G V Gᴴ)⁻¹`, which only factors an `N × N` matrix:
/// `m = m₀ + W (r - G m₀)`, `diag V_post = v_i - v_i² g_iᴴ (N₀I + G V Gᴴ)⁻¹ g_i`.
pub fn lmmse_estimate<T: Real>(
    r: &[Complex<T>],
    g: &CMatrix<T>,
    prior: &GaussianMessage<T>,
    n0: T,
) -> Result<GaussianMessage<T>> {
    check(r, g, prior, n0)?;
    let n = g.rows();
    let cols = g.cols();
    // S = N₀I + G V Gᴴ
    let gv = g.scale_columns(&prior.var);
    let mut s = gv.matmul(&g.adjoint());
    s.add_scaled_identity(n0);
    let resid: Vec<Complex<T>> = r.iter().zip(g.mul_vec(&prior.mean)).map(|(a, b)| a - b).collect();
    let rhs = CMatrix::from_vec(n, 1, resid)?;
    let sol = s.solve_hpd(&rhs)?;
    let sinv_g = s.solve_hpd(g)?;
    let corr = g.adjoint_mul_vec(sol.as_slice());
    let mut mean = Vec::with_capacity(cols);
    let mut var = Vec::with_capacity(cols);
    for i in 0..cols {
        let v = prior.var[i];
        mean.push(prior.mean[i] + corr[i] * v);
        let mut q = T::zero();
        for row in 0..n {
            q += (g[(row, i)].conj() * sinv_g[(row, i)]).re;
        }
        var.push((v - v * v * q).max(T::zero()));
    }
    Ok(GaussianMessage { mean, var })
}

/// Reference form `V_post = (GᴴG/N₀ + V⁻¹)⁻¹`, `m = V_post (Gᴴ r/N₀ + V⁻¹ m₀)`.
pub fn lmmse_estimate_direct<T: Real>(
    r: &[Complex<T>],
    g: &CMatrix<T>,
    prior: &GaussianMessage<T>,
    n0: T,
) -> Result<GaussianMessage<T>> {
    check(r, g, prior, n0)?;
    let cols = g.cols();
    let mut a = g.adjoint().matmul(g).scale(Complex::new(T::one() / n0, T::zero()));
    for i in 0..cols {
        a[(i, i)] += Complex::new(T::one() / prior.var[i], T::zero());
    }
    let cov = a.inverse()?;
    let ghr = g.adjoint_mul_vec(r);
    let b: Vec<Complex<T>> = (0..cols).map(|i| ghr[i] / n0 + prior.mean[i] / prior.var[i]).collect();
    let mean = cov.mul_vec(&b);
    let var = (0..cols).map(|i| cov[(i, i)].re.max(T::zero())).collect();
    Ok(GaussianMessage { mean, var })
}

/// Average posterior variance of each symbol under the given prior variances
/// and matrix; no observation needed.
pub fn lmmse_variances<T: Real>(g: &CMatrix<T>, prior_var: &[T], n0: T) -> Result<Vec<T>> {
    let prior = GaussianMessage {
        mean: vec![Complex::new(T::zero(), T::zero()); prior_var.len()],
        var: prior_var.to_vec(),
    };
    let r = vec![Complex::new(T::zero(), T::zero()); g.rows()];
    Ok(lmmse_estimate(&r, g, &prior, n0)?.var)
}

fn check<T: Real>(r: &[Complex<T>], g: &CMatrix<T>, prior: &GaussianMessage<T>, n0: T) -> Result<()> {
    if r.len() != g.rows() {
        return Err(Error::LengthMismatch { expected: g.rows(), got: r.len() });
    }
    if prior.len() != g.cols() {
        return Err(Error::LengthMismatch { expected: g.cols(), got: prior.len() });
    }
    prior.validate()?;
    if !(n0 > T::zero()) {
        return Err(Error::NonPositiveVariance);
    }
    Ok(())
}
