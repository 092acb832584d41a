//! Gaussian messages exchanged between the linear estimator and the decoder,
//! and the conversions between them and bit LLRs.

use num_complex::Complex;
use num_traits::Zero;

use crate::coding::ldpc::LLR_CLAMP;
use crate::error::{Error, Result};
use crate::num::{log_sum_exp, Real};
use crate::scma::Alphabet;

/// Per-symbol means and variances.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMessage<T> {
    pub mean: Vec<Complex<T>>,
    pub var: Vec<T>,
}

impl<T: Real> GaussianMessage<T> {
    pub fn new(mean: Vec<Complex<T>>, var: Vec<T>) -> Result<Self> {
        let m = Self { mean, var };
        m.validate()?;
        Ok(m)
    }

    /// Zero mean, unit variance: the equiprobable start.
    pub fn uninformative(len: usize) -> Self {
        Self {
            mean: vec![Complex::zero(); len],
            var: vec![T::one(); len],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.var.len() {
            return Err(Error::LengthMismatch {
                expected: self.mean.len(),
                got: self.var.len(),
            });
        }
        if self.var.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::NonPositiveVariance);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Arithmetic mean of the variances.
    pub fn mean_var(&self) -> T {
        self.var.iter().copied().sum::<T>() / T::from_index(self.var.len().max(1))
    }

    /// `(1/n) Σ |m_i - s_i|²`.
    pub fn mse(&self, truth: &[Complex<T>]) -> T {
        self.mean.iter().zip(truth).map(|(m, s)| (m - s).norm_sqr()).sum::<T>() / T::from_index(truth.len().max(1))
    }

    /// Entries `idx` as a new message.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            mean: idx.iter().map(|&i| self.mean[i]).collect(),
            var: idx.iter().map(|&i| self.var[i]).collect(),
        }
    }
}

/// Variance limits for extrinsic messages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceBounds<T> {
    pub min: T,
    pub max: T,
}

impl<T: Real> Default for VarianceBounds<T> {
    fn default() -> Self {
        Self {
            min: T::lit(1e-8),
            max: T::lit(1e4),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Combined<T> {
    pub message: GaussianMessage<T>,
    /// Set when the extrinsic precision was nonpositive or a bound was hit.
    pub clamped: bool,
}

/// Removes the prior's contribution from a posterior.
///
/// With block-averaged variances `v̄_post` and `v̄_prior`, the extrinsic
/// message is `v_e = (1/v̄_post - 1/v̄_prior)⁻¹`,
/// `m_e = v_e (m_post/v̄_post - m_prior/v̄_prior)`. When `previous` is given
/// and `κ < 1`, the result is then mixed with the previous outgoing message
/// in the natural-parameter domain: precisions and precision-weighted means
/// are averaged with weights `κ` and `1 - κ`. `κ = 1` is the plain extrinsic.
/// A nonpositive extrinsic precision yields `(0, v_max)` with `clamped` set.
pub fn extrinsic_combine<T: Real>(
    post: &GaussianMessage<T>,
    prior: &GaussianMessage<T>,
    kappa: T,
    previous: Option<&GaussianMessage<T>>,
    bounds: VarianceBounds<T>,
) -> Result<Combined<T>> {
    post.validate()?;
    prior.validate()?;
    if post.len() != prior.len() {
        return Err(Error::LengthMismatch {
            expected: post.len(),
            got: prior.len(),
        });
    }
    if !(kappa > T::zero() && kappa <= T::one()) {
        return Err(Error::InvalidParams(format!("damping {kappa} must lie in (0, 1]")));
    }
    let vp = post.mean_var();
    let vq = prior.mean_var();
    let prec = T::one() / vp - T::one() / vq;
    let n = post.len();
    let mut clamped = false;
    let (mut mean, v) = if !(prec > T::zero()) || T::one() / prec > bounds.max {
        clamped = true;
        (vec![Complex::zero(); n], bounds.max)
    } else {
        let v = T::one() / prec;
        let mean: Vec<Complex<T>> = post
            .mean
            .iter()
            .zip(&prior.mean)
            .map(|(mp, mq)| (mp / vp - mq / vq) * v)
            .collect();
        if v < bounds.min {
            clamped = true;
            (mean, bounds.min)
        } else {
            (mean, v)
        }
    };
    let mut var = vec![v; n];
    if let Some(prev) = previous {
        if prev.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: prev.len() });
        }
        if kappa < T::one() {
            for i in 0..n {
                let p_new = kappa / v + (T::one() - kappa) / prev.var[i];
                let mp = mean[i] * (kappa / v) + prev.mean[i] * ((T::one() - kappa) / prev.var[i]);
                var[i] = (T::one() / p_new).max(bounds.min).min(bounds.max);
                mean[i] = mp / p_new;
            }
        }
    }
    Ok(Combined {
        message: GaussianMessage { mean, var },
        clamped,
    })
}

#[inline]
fn clamp_llr<T: Real>(l: T) -> T {
    let c = T::lit(LLR_CLAMP);
    l.max(-c).min(c)
}

/// Exact bit LLRs of `P(C) ∝ exp(-|C - m|²/v)`, summed over the labeled points.
pub fn llr_from_gaussian_generic<T: Real>(msg: &GaussianMessage<T>, alphabet: &Alphabet<T>) -> Vec<T> {
    let bits = alphabet.bits_per_symbol();
    let mut out = Vec::with_capacity(msg.len() * bits);
    let mut metric = vec![T::zero(); alphabet.len()];
    let mut zeros = Vec::with_capacity(alphabet.len());
    let mut ones = Vec::with_capacity(alphabet.len());
    for (m, &v) in msg.mean.iter().zip(&msg.var) {
        for (mc, c) in metric.iter_mut().zip(alphabet.points()) {
            *mc = -(c - m).norm_sqr() / v;
        }
        for b in 0..bits {
            zeros.clear();
            ones.clear();
            for (i, &mc) in metric.iter().enumerate() {
                if alphabet.bit(i, b) == 0 {
                    zeros.push(mc);
                } else {
                    ones.push(mc);
                }
            }
            out.push(clamp_llr(log_sum_exp(&zeros) - log_sum_exp(&ones)));
        }
    }
    out
}

/// QPSK shortcut `L₁ = √8 Re{m}/v`, `L₂ = √8 Im{m}/v`.
pub fn llr_from_gaussian_qpsk<T: Real>(msg: &GaussianMessage<T>) -> Vec<T> {
    let s8 = T::lit(8.0).sqrt();
    msg.mean
        .iter()
        .zip(&msg.var)
        .flat_map(|(m, &v)| [clamp_llr(s8 * m.re / v), clamp_llr(s8 * m.im / v)])
        .collect()
}

/// BPSK shortcut `L = 4 Re{m}/v`.
pub fn llr_from_gaussian_bpsk<T: Real>(msg: &GaussianMessage<T>) -> Vec<T> {
    msg.mean
        .iter()
        .zip(&msg.var)
        .map(|(m, &v)| clamp_llr(T::lit(4.0) * m.re / v))
        .collect()
}

/// Bit LLRs, using the closed forms for the built-in BPSK and QPSK alphabets.
pub fn llr_from_gaussian<T: Real>(msg: &GaussianMessage<T>, alphabet: &Alphabet<T>) -> Vec<T> {
    if alphabet.is_qpsk() {
        llr_from_gaussian_qpsk(msg)
    } else if alphabet.is_bpsk() {
        llr_from_gaussian_bpsk(msg)
    } else {
        llr_from_gaussian_generic(msg, alphabet)
    }
}

/// Symbol mean and variance under independent bit probabilities from `llrs`.
pub fn gaussian_from_llr_generic<T: Real>(llrs: &[T], alphabet: &Alphabet<T>) -> Result<GaussianMessage<T>> {
    let bits = alphabet.bits_per_symbol();
    if llrs.len() % bits != 0 {
        return Err(Error::LengthMismatch {
            expected: llrs.len().div_ceil(bits) * bits,
            got: llrs.len(),
        });
    }
    let mut mean = Vec::with_capacity(llrs.len() / bits);
    let mut var = Vec::with_capacity(llrs.len() / bits);
    for chunk in llrs.chunks(bits) {
        // P(bit = 1) = 1 / (1 + e^{L})
        let p1: Vec<T> = chunk.iter().map(|&l| T::one() / (T::one() + clamp_llr(l).exp())).collect();
        let mut m = Complex::zero();
        let mut e2 = T::zero();
        for (i, c) in alphabet.points().iter().enumerate() {
            let mut p = T::one();
            for (b, &q1) in p1.iter().enumerate() {
                p *= if alphabet.bit(i, b) == 1 { q1 } else { T::one() - q1 };
            }
            m += c * p;
            e2 += c.norm_sqr() * p;
        }
        mean.push(m);
        var.push((e2 - m.norm_sqr()).max(T::zero()));
    }
    Ok(GaussianMessage { mean, var })
}

/// QPSK shortcut `m = (√2/2)(tanh(L₁/2) + j tanh(L₂/2))`, `v = 1 - |m|²`.
pub fn gaussian_from_llr_qpsk<T: Real>(llrs: &[T]) -> Result<GaussianMessage<T>> {
    if llrs.len() % 2 != 0 {
        return Err(Error::LengthMismatch {
            expected: llrs.len() + 1,
            got: llrs.len(),
        });
    }
    let h = T::lit(0.5);
    let a = T::FRAC_1_SQRT_2();
    let mut mean = Vec::with_capacity(llrs.len() / 2);
    let mut var = Vec::with_capacity(llrs.len() / 2);
    for c in llrs.chunks(2) {
        let m = Complex::new((clamp_llr(c[0]) * h).tanh(), (clamp_llr(c[1]) * h).tanh()) * a;
        var.push((T::one() - m.norm_sqr()).max(T::zero()));
        mean.push(m);
    }
    Ok(GaussianMessage { mean, var })
}

pub fn gaussian_from_llr<T: Real>(llrs: &[T], alphabet: &Alphabet<T>) -> Result<GaussianMessage<T>> {
    if alphabet.is_qpsk() {
        gaussian_from_llr_qpsk(llrs)
    } else if alphabet.is_bpsk() {
        let h = T::lit(0.5);
        let mean: Vec<Complex<T>> = llrs.iter().map(|&l| Complex::new((clamp_llr(l) * h).tanh(), T::zero())).collect();
        let var = mean.iter().map(|m| (T::one() - m.norm_sqr()).max(T::zero())).collect();
        Ok(GaussianMessage { mean, var })
    } else {
        gaussian_from_llr_generic(llrs, alphabet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(m: f64, v: f64) -> GaussianMessage<f64> {
        GaussianMessage::new(vec![Complex::new(m, 0.0)], vec![v]).unwrap()
    }

    #[test]
    fn extrinsic_halved_variance_returns_prior_variance() {
        let out = extrinsic_combine(&scalar(0.4, 0.5), &scalar(0.0, 1.0), 1.0, None, VarianceBounds::default()).unwrap();
        assert!((out.message.var[0] - 1.0).abs() < 1e-15);
        assert!((out.message.mean[0].re - 0.8).abs() < 1e-15);
        assert!(!out.clamped);
    }

    #[test]
    fn no_information_is_clamped() {
        let out = extrinsic_combine(&scalar(0.3, 1.0), &scalar(0.3, 1.0), 1.0, None, VarianceBounds::default()).unwrap();
        assert!(out.clamped);
        assert_eq!(out.message.var[0], 1e4);
        assert_eq!(out.message.mean[0], Complex::new(0.0, 0.0));
    }

    #[test]
    fn damping_mixes_precisions() {
        let prev = scalar(1.0, 0.5);
        let out = extrinsic_combine(&scalar(0.4, 0.5), &scalar(0.0, 1.0), 0.25, Some(&prev), VarianceBounds::default()).unwrap();
        // precision 0.25·1 + 0.75·2 = 1.75, weighted mean (0.25·0.8 + 0.75·2)/1.75
        assert!((out.message.var[0] - 1.0 / 1.75).abs() < 1e-12);
        assert!((out.message.mean[0].re - 1.7 / 1.75).abs() < 1e-12);
        assert!(extrinsic_combine(&prev, &prev, 0.0, None, VarianceBounds::default()).is_err());
    }

    #[test]
    fn trivial_conversions() {
        let q = Alphabet::<f64>::qpsk();
        let zero = GaussianMessage::new(vec![Complex::new(0.0, 0.0)], vec![0.7]).unwrap();
        assert_eq!(llr_from_gaussian(&zero, &q), vec![0.0, 0.0]);
        let g = gaussian_from_llr(&[0.0, 0.0], &q).unwrap();
        assert!(g.mean[0].norm() < 1e-15 && (g.var[0] - 1.0).abs() < 1e-15);
        let g = gaussian_from_llr(&[1e9, 1e9], &q).unwrap();
        assert!((g.mean[0] - q.points()[0]).norm() < 1e-12 && g.var[0] < 1e-12);
        let on_point = GaussianMessage::new(vec![q.points()[2]], vec![1e-3]).unwrap();
        let l = llr_from_gaussian_generic(&on_point, &q);
        assert!(l[0] < -40.0 && l[1] > 40.0);
    }

    #[test]
    fn bpsk_shortcuts_match_generic() {
        let b = Alphabet::<f64>::bpsk();
        let msg = GaussianMessage::new(vec![Complex::new(0.3, -0.2)], vec![0.8]).unwrap();
        assert!((llr_from_gaussian(&msg, &b)[0] - llr_from_gaussian_generic(&msg, &b)[0]).abs() < 1e-12);
        let fast = gaussian_from_llr(&[1.3], &b).unwrap();
        let slow = gaussian_from_llr_generic(&[1.3], &b).unwrap();
        assert!((fast.mean[0] - slow.mean[0]).norm() < 1e-12 && (fast.var[0] - slow.var[0]).abs() < 1e-12);
    }
}
