//! DAFT modem: transform matrix, chirp-periodic prefix and chirp-rate selection.
//!
//! The DAFT is `A = Λ_{c2} · F · Λ_{c1}` with `Λ_c = diag(e^{-j2πcn²})` and
//! `F` the unitary DFT. [`Afdm`] applies it as two chirp multiplies around an
//! FFT; [`daft_matrix`] builds the dense matrix for reference and analysis.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_rational::Ratio;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::{cis_turns, Real};

/// Modem parameters. `c1 = c2 = 0` is plain OFDM.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfdmParams<T> {
    pub n: usize,
    pub c1: T,
    pub c2: T,
    pub n_cpp: usize,
}

impl<T: Real> AfdmParams<T> {
    pub fn new(n: usize, c1: T, c2: T, n_cpp: usize) -> Result<Self> {
        let p = Self { n, c1, c2, n_cpp };
        p.validate()?;
        Ok(p)
    }

    /// OFDM with the same size and prefix.
    pub fn ofdm(n: usize, n_cpp: usize) -> Result<Self> {
        Self::new(n, T::zero(), T::zero(), n_cpp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("transform size must be positive".into()));
        }
        if self.n_cpp >= self.n {
            return Err(Error::PrefixTooLong {
                n_cpp: self.n_cpp,
                n: self.n,
            });
        }
        for (name, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !c.is_finite() || c < T::zero() {
                return Err(Error::InvalidParams(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }

    pub fn is_ofdm(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero()
    }
}

impl<T: Real> fmt::Display for AfdmParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} c1={} c2={} Ncpp={}", self.n, self.c1, self.c2, self.n_cpp)
    }
}

/// `e^{-j2π c k²}` for `k = 0..n`. The phase is reduced in `f64` so large
/// `k²` does not lose precision in `f32`.
fn chirp<T: Real>(c: T, n: usize) -> Vec<Complex<T>> {
    let c = c.to_f64_lossy();
    (0..n)
        .map(|k| {
            let k = k as f64;
            let turns = -(c * k * k).fract();
            let z = cis_turns(turns);
            Complex::new(T::lit(z.re), T::lit(z.im))
        })
        .collect()
}

/// Dense DAFT matrix `A = Λ_{c2} F Λ_{c1}`.
pub fn daft_matrix<T: Real>(params: &AfdmParams<T>) -> Result<CMatrix<T>> {
    params.validate()?;
    let n = params.n;
    let l1 = chirp(params.c1, n);
    let l2 = chirp(params.c2, n);
    let scale = T::one() / T::from_index(n).sqrt();
    Ok(CMatrix::from_fn(n, n, |m, k| {
        let f: Complex<T> = crate::num::cis_ratio(-((m * k) as i64), n);
        l2[m] * f * l1[k] * scale
    }))
}

/// Fast DAFT modem for one parameter set.
#[derive(Clone)]
pub struct Afdm<T: Real> {
    params: AfdmParams<T>,
    chirp1: Vec<Complex<T>>,
    chirp2: Vec<Complex<T>>,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> fmt::Debug for Afdm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Afdm").field("params", &self.params).finish()
    }
}

impl<T: Real> Afdm<T> {
    pub fn new(params: AfdmParams<T>) -> Result<Self> {
        params.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            chirp1: chirp(params.c1, params.n),
            chirp2: chirp(params.c2, params.n),
            fwd: planner.plan_fft_forward(params.n),
            inv: planner.plan_fft_inverse(params.n),
            scale: T::one() / T::from_index(params.n).sqrt(),
            params,
        })
    }

    pub fn params(&self) -> &AfdmParams<T> {
        &self.params
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.params.n {
            return Err(Error::LengthMismatch {
                expected: self.params.n,
                got,
            });
        }
        Ok(())
    }

    /// IDAFT: `s = Aᴴ x`.
    pub fn modulate(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(x.len())?;
        let mut buf = x.to_vec();
        if !self.params.c2.is_zero() {
            for (b, c) in buf.iter_mut().zip(&self.chirp2) {
                *b *= c.conj();
            }
        }
        self.inv.process(&mut buf);
        for b in buf.iter_mut() {
            *b = *b * self.scale;
        }
        if !self.params.c1.is_zero() {
            for (b, c) in buf.iter_mut().zip(&self.chirp1) {
                *b *= c.conj();
            }
        }
        Ok(buf)
    }

    /// DAFT: `y = A r`, prefix already removed.
    pub fn demodulate(&self, r: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(r.len())?;
        let mut buf = r.to_vec();
        if !self.params.c1.is_zero() {
            for (b, c) in buf.iter_mut().zip(&self.chirp1) {
                *b *= c;
            }
        }
        self.fwd.process(&mut buf);
        for b in buf.iter_mut() {
            *b = *b * self.scale;
        }
        if !self.params.c2.is_zero() {
            for (b, c) in buf.iter_mut().zip(&self.chirp2) {
                *b *= c;
            }
        }
        Ok(buf)
    }

    /// Prepends the chirp-periodic prefix
    /// `s[n] = s[N+n]·e^{-j2πc1(N²+2Nn)}` for `n = -Ncpp..-1`.
    pub fn add_cpp(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check_len(s.len())?;
        let n = self.params.n;
        let c1 = self.params.c1.to_f64_lossy();
        let mut out = Vec::with_capacity(n + self.params.n_cpp);
        for i in (1..=self.params.n_cpp).rev() {
            let k = -(i as i64);
            let src = s[(n as i64 + k) as usize];
            if c1 == 0.0 {
                out.push(src);
            } else {
                out.push(src * cpp_phase::<T>(c1, n, k));
            }
        }
        out.extend_from_slice(s);
        Ok(out)
    }

    pub fn remove_cpp(&self, s: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let expected = self.params.n + self.params.n_cpp;
        if s.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: s.len(),
            });
        }
        Ok(s[self.params.n_cpp..].to_vec())
    }
}

/// `e^{-j2πc1(N²+2Nk)}` for a prefix index `k < 0`.
pub(crate) fn cpp_phase<T: Real>(c1: f64, n: usize, k: i64) -> Complex<T> {
    let n = n as f64;
    let arg = c1 * (n * n + 2.0 * n * k as f64);
    let z = cis_turns(-(arg - arg.round()));
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// Smallest `c1` giving non-overlapping path bands, as an exact ratio:
/// `(2(α_max + k_ν) + 1) / (2 N · gap)`.
pub fn select_c1_exact(alpha_max: u64, k_nu: u64, min_delay_gap: u64, n: u64) -> Result<Ratio<u64>> {
    if min_delay_gap == 0 {
        return Err(Error::CoLocatedDelays);
    }
    if n == 0 {
        return Err(Error::InvalidParams("transform size must be positive".into()));
    }
    Ok(Ratio::new(2 * (alpha_max + k_nu) + 1, 2 * n * min_delay_gap))
}

/// Floating-point form of [`select_c1_exact`].
pub fn select_c1<T: Real>(alpha_max: u64, k_nu: u64, min_delay_gap: u64, n: u64) -> Result<T> {
    let r = select_c1_exact(alpha_max, k_nu, min_delay_gap, n)?;
    Ok(T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64))
}

/// `1/(4N²)`: rational and well below `1/(2N)`.
pub fn select_c2_exact(n: u64) -> Ratio<u64> {
    Ratio::new(1, 4 * n * n)
}

pub fn select_c2<T: Real>(n: usize) -> T {
    let nf = T::from_index(n);
    T::one() / (T::lit(4.0) * nf * nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex<f64>> {
        (0..n)
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn two_point_dft() {
        let a = daft_matrix(&AfdmParams::new(2, 0.0, 0.0, 0).unwrap()).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let want = [h, h, h, -h];
        for (got, w) in a.as_slice().iter().zip(want) {
            assert!((got - Complex::new(w, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn quarter_chirp_row() {
        let a = daft_matrix(&AfdmParams::new(4, 0.25, 0.0, 0).unwrap()).unwrap();
        let j = Complex::new(0.0, 1.0);
        let want = [Complex::new(0.5, 0.0), -j * 0.5, Complex::new(0.5, 0.0), -j * 0.5];
        for (got, w) in a.row(0).iter().zip(want) {
            assert!((got - w).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_path_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[1usize, 5, 16, 37] {
            let p = AfdmParams::new(n, rng.random(), rng.random(), 0).unwrap();
            let a = daft_matrix(&p).unwrap();
            let m = Afdm::new(p).unwrap();
            let x = rand_vec(n, &mut rng);
            let s = m.modulate(&x).unwrap();
            let s_ref = a.adjoint().mul_vec(&x);
            let y = m.demodulate(&x).unwrap();
            let y_ref = a.mul_vec(&x);
            for i in 0..n {
                assert!((s[i] - s_ref[i]).norm() < 1e-10);
                assert!((y[i] - y_ref[i]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn impulse_is_up_chirp() {
        let n = 16;
        let c1 = 0.07;
        let m = Afdm::new(AfdmParams::new(n, c1, 0.01, 0).unwrap()).unwrap();
        let mut x = vec![Complex::new(0.0, 0.0); n];
        x[0] = Complex::new(1.0, 0.0);
        let s = m.modulate(&x).unwrap();
        for (k, v) in s.iter().enumerate() {
            let want = Complex::from_polar(1.0 / (n as f64).sqrt(), std::f64::consts::TAU * c1 * (k * k) as f64);
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn cpp_direct_formula() {
        let n = 8;
        let c1 = 3.0 / 16.0;
        let m = Afdm::new(AfdmParams::new(n, c1, 0.0, 3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = rand_vec(n, &mut rng);
        let with = m.add_cpp(&s).unwrap();
        for (i, k) in (-3i64..0).enumerate() {
            let ph = -std::f64::consts::TAU * c1 * ((n * n) as f64 + 2.0 * n as f64 * k as f64);
            let want = s[(n as i64 + k) as usize] * Complex::from_polar(1.0, ph);
            assert!((with[i] - want).norm() < 1e-12);
            // integer/(2N) rate: the factor is real ±1
            let f = with[i] / s[(n as i64 + k) as usize];
            assert!(f.im.abs() < 1e-12 && (f.re.abs() - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.remove_cpp(&with).unwrap(), s);
    }

    #[test]
    fn select_rates() {
        assert_eq!(select_c1_exact(0, 0, 1, 16).unwrap(), Ratio::new(1, 32));
        assert_eq!(select_c1_exact(1, 0, 1, 16).unwrap(), Ratio::new(3, 32));
        assert!(matches!(select_c1_exact(1, 0, 0, 16), Err(Error::CoLocatedDelays)));
        assert!(select_c2::<f64>(128) < 1.0 / 256.0);
        assert!(select_c2::<f64>(2) < 0.25);
        assert_eq!(select_c2::<f64>(7), select_c2::<f64>(7));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(matches!(AfdmParams::new(4, 0.0, 0.0, 4), Err(Error::PrefixTooLong { .. })));
        assert!(AfdmParams::new(0, 0.0, 0.0, 0).is_err());
        assert!(AfdmParams::new(4, -0.1, 0.0, 0).is_err());
        let m = Afdm::new(AfdmParams::new(4, 0.0, 0.0, 1).unwrap()).unwrap();
        assert!(matches!(m.modulate(&[Complex::new(0.0, 0.0); 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn works_in_single_precision() {
        let m = Afdm::new(AfdmParams::<f32>::new(64, 0.01, 0.001, 8).unwrap()).unwrap();
        let x: Vec<Complex<f32>> = (0..64).map(|k| Complex::new((k as f32).sin(), 0.5)).collect();
        let back = m.demodulate(&m.modulate(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            assert!((a - b).norm() < 1e-5);
        }
    }
}
