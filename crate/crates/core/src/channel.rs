//! Doubly-selective multipath channel.
//!
//! Each path has a complex gain, an integer sample delay and a Doppler shift
//! normalized to the subcarrier spacing. The time response is
//! `g_n(l) = Σ_p h_p e^{-j2πν_p n/N} δ(l - l_p)`; after prefix removal path `p`
//! acts as `h_p Γ_p Δ_{ν_p} Π^{l_p}`, and in the DAFT domain as a sparse band
//! whose entries have a closed form.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::afdm::{daft_matrix, AfdmParams};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::{cis_turns, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelPath<T> {
    pub gain: Complex<T>,
    pub delay: usize,
    pub doppler: T,
}

impl<T: Real> ChannelPath<T> {
    pub fn new(gain: Complex<T>, delay: usize, doppler: T) -> Self {
        Self { gain, delay, doppler }
    }

    /// Unit-gain path, used when only the delay-Doppler structure matters.
    pub fn unit(delay: usize, doppler: T) -> Self {
        Self::new(Complex::new(T::one(), T::zero()), delay, doppler)
    }

    /// Integer Doppler part `α = ⌈ν - 1/2⌉`, so that `β = ν - α ∈ (-1/2, 1/2]`.
    pub fn alpha(&self) -> i64 {
        (self.doppler - T::lit(0.5)).ceil().to_i64().expect("finite doppler")
    }

    pub fn beta(&self) -> T {
        self.doppler - T::lit(self.alpha() as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization<T> {
    pub paths: Vec<ChannelPath<T>>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn new(paths: Vec<ChannelPath<T>>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParams("a channel needs at least one path".into()));
        }
        Ok(Self { paths })
    }

    pub fn single(gain: Complex<T>, delay: usize, doppler: T) -> Self {
        Self {
            paths: vec![ChannelPath::new(gain, delay, doppler)],
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn max_delay(&self) -> usize {
        self.paths.iter().map(|p| p.delay).max().unwrap_or(0)
    }

    pub fn has_distinct_delays(&self) -> bool {
        let mut d: Vec<usize> = self.paths.iter().map(|p| p.delay).collect();
        d.sort_unstable();
        d.windows(2).all(|w| w[0] != w[1])
    }

    /// Smallest gap between distinct sorted delays; `0` when two paths share
    /// a delay, `None` for a single path.
    pub fn min_delay_gap(&self) -> Option<usize> {
        let mut d: Vec<usize> = self.paths.iter().map(|p| p.delay).collect();
        d.sort_unstable();
        d.windows(2).map(|w| w[1] - w[0]).min()
    }

    pub fn alpha_max(&self) -> u64 {
        self.paths.iter().map(|p| p.alpha().unsigned_abs()).max().unwrap_or(0)
    }

    pub fn check_prefix(&self, params: &AfdmParams<T>) -> Result<()> {
        match self.paths.iter().find(|p| p.delay > params.n_cpp) {
            Some(p) => Err(Error::DelayExceedsPrefix {
                delay: p.delay,
                n_cpp: params.n_cpp,
            }),
            None => Ok(()),
        }
    }
}

/// How per-path Doppler shifts are drawn.
#[derive(Clone, Debug, PartialEq)]
pub enum DopplerModel<T> {
    Static,
    /// `ν = ν_max cos ψ`, `ψ ~ U[-π, π]`.
    Jakes { nu_max: T },
    /// Integer Doppler uniform on `-α_max..=α_max`.
    Integer { alpha_max: u64 },
    /// The same Doppler per path in every draw.
    Fixed(Vec<T>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap<T> {
    pub delay: usize,
    /// Mean power (linear).
    pub power: T,
}

/// Statistical channel: Rayleigh taps plus a Doppler model.
#[derive(Clone, Debug, PartialEq)]
pub struct TapProfile<T> {
    pub taps: Vec<Tap<T>>,
    pub doppler: DopplerModel<T>,
}

impl<T: Real> TapProfile<T> {
    /// Equal-power taps at the given delays, each of variance `1/P`.
    pub fn uniform(delays: &[usize], doppler: DopplerModel<T>) -> Self {
        let p = T::one() / T::from_index(delays.len());
        Self {
            taps: delays.iter().map(|&delay| Tap { delay, power: p }).collect(),
            doppler,
        }
    }

    pub fn total_power(&self) -> T {
        self.taps.iter().map(|t| t.power).sum()
    }

    /// Draws a realization. Gains are `CN(0, power)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, params: &AfdmParams<T>) -> Result<ChannelRealization<T>> {
        if self.taps.is_empty() {
            return Err(Error::InvalidParams("profile has no taps".into()));
        }
        if let Some(t) = self.taps.iter().find(|t| t.delay > params.n_cpp) {
            return Err(Error::DelayExceedsPrefix {
                delay: t.delay,
                n_cpp: params.n_cpp,
            });
        }
        if let DopplerModel::Fixed(v) = &self.doppler {
            if v.len() != self.taps.len() {
                return Err(Error::LengthMismatch {
                    expected: self.taps.len(),
                    got: v.len(),
                });
            }
        }
        let paths = self
            .taps
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let gain = complex_gaussian(rng, t.power);
                let doppler = match &self.doppler {
                    DopplerModel::Static => T::zero(),
                    DopplerModel::Jakes { nu_max } => {
                        let psi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                        *nu_max * T::lit(psi.cos())
                    }
                    DopplerModel::Integer { alpha_max } => {
                        let a = *alpha_max as i64;
                        T::lit(rng.random_range(-a..=a) as f64)
                    }
                    DopplerModel::Fixed(v) => v[i],
                };
                ChannelPath::new(gain, t.delay, doppler)
            })
            .collect();
        ChannelRealization::new(paths)
    }
}

/// `CN(0, var)` sample.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, var: T) -> Complex<T> {
    let s = (var.to_f64_lossy() * 0.5).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(T::lit(re * s), T::lit(im * s))
}

/// Extended Vehicular A power-delay profile with a Jakes Doppler spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaProfile {
    pub tap_powers_db: Vec<f64>,
    pub tap_delays_ns: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
    pub carrier_hz: f64,
    pub speed_kmh: f64,
}

impl Default for EvaProfile {
    fn default() -> Self {
        Self {
            tap_powers_db: vec![0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9],
            tap_delays_ns: vec![0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0],
            subcarrier_spacing_hz: 15e3,
            carrier_hz: 4e9,
            speed_kmh: 300.0,
        }
    }
}

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

impl EvaProfile {
    pub fn max_doppler_hz(&self) -> f64 {
        self.speed_kmh / 3.6 * self.carrier_hz / SPEED_OF_LIGHT
    }

    /// Maximum Doppler normalized to the subcarrier spacing.
    pub fn nu_max(&self) -> f64 {
        self.max_doppler_hz() / self.subcarrier_spacing_hz
    }

    /// Tap delays rounded to whole samples at rate `N·Δf`, before merging.
    pub fn quantized_delays(&self, n: usize) -> Vec<usize> {
        let fs = n as f64 * self.subcarrier_spacing_hz;
        self.tap_delays_ns
            .iter()
            .map(|&d| (d * 1e-9 * fs).round() as usize)
            .collect()
    }

    /// Taps with co-located delays merged (powers summed) and total power 1.
    pub fn to_profile<T: Real>(&self, n: usize) -> TapProfile<T> {
        let delays = self.quantized_delays(n);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (&d, &db) in delays.iter().zip(&self.tap_powers_db) {
            let p = 10f64.powf(db / 10.0);
            match merged.iter_mut().find(|(md, _)| *md == d) {
                Some(entry) => entry.1 += p,
                None => merged.push((d, p)),
            }
        }
        merged.sort_by_key(|&(d, _)| d);
        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        TapProfile {
            taps: merged
                .into_iter()
                .map(|(delay, p)| Tap {
                    delay,
                    power: T::lit(p / total),
                })
                .collect(),
            doppler: DopplerModel::Jakes {
                nu_max: T::lit(self.nu_max()),
            },
        }
    }
}

/// `Γ_p[n]` of the prefix: nontrivial for the first `l` samples.
fn gamma_cpp<T: Real>(c1: f64, n_size: usize, delay: usize, n: usize) -> Complex<T> {
    if n >= delay || c1 == 0.0 {
        return Complex::new(T::one(), T::zero());
    }
    let nf = n_size as f64;
    let arg = c1 * (nf * nf - 2.0 * nf * (delay as f64 - n as f64));
    let z = cis_turns(-(arg - arg.round()));
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// `e^{-j2πνn/N}` in `f64`, then narrowed.
fn doppler_phase<T: Real>(nu: f64, n_size: usize, n: i64) -> Complex<T> {
    let arg = nu * n as f64 / n_size as f64;
    let z = cis_turns(-(arg - arg.round()));
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// `h Γ Δ_ν Π^l` for one path after prefix removal.
pub fn time_domain_path_matrix<T: Real>(path: &ChannelPath<T>, params: &AfdmParams<T>) -> Result<CMatrix<T>> {
    params.validate()?;
    let n = params.n;
    if path.delay >= n {
        return Err(Error::InvalidParams(format!("delay {} must be below N = {n}", path.delay)));
    }
    let c1 = params.c1.to_f64_lossy();
    let nu = path.doppler.to_f64_lossy();
    let mut h = CMatrix::zeros(n, n);
    for row in 0..n {
        let col = (row + n - path.delay) % n;
        h[(row, col)] = path.gain * gamma_cpp::<T>(c1, n, path.delay, row) * doppler_phase::<T>(nu, n, row as i64);
    }
    Ok(h)
}

/// `Σ_p h_p Γ_p Δ_p Π^{l_p}`.
pub fn time_domain_matrix<T: Real>(ch: &ChannelRealization<T>, params: &AfdmParams<T>) -> Result<CMatrix<T>> {
    let mut h = CMatrix::zeros(params.n, params.n);
    for p in &ch.paths {
        h = h.add(&time_domain_path_matrix(p, params)?);
    }
    Ok(h)
}

/// Passes a prefixed block through the channel and adds `CN(0, n0)` noise.
///
/// Output sample `k` (time index `n = k - Ncpp`) is
/// `Σ_p h_p e^{-j2πν_p n/N} s[n - l_p] + v[n]`; samples before the block are
/// taken as zero, which only touches the prefix region.
pub fn apply_channel<T: Real, R: Rng + ?Sized>(
    s: &[Complex<T>],
    ch: &ChannelRealization<T>,
    params: &AfdmParams<T>,
    n0: T,
    rng: &mut R,
) -> Result<Vec<Complex<T>>> {
    let len = params.n + params.n_cpp;
    if s.len() != len {
        return Err(Error::LengthMismatch { expected: len, got: s.len() });
    }
    ch.check_prefix(params)?;
    let mut out = vec![Complex::zero(); len];
    for p in &ch.paths {
        let nu = p.doppler.to_f64_lossy();
        for k in p.delay..len {
            let n = k as i64 - params.n_cpp as i64;
            out[k] += p.gain * doppler_phase::<T>(nu, params.n, n) * s[k - p.delay];
        }
    }
    if n0 > T::zero() {
        for o in out.iter_mut() {
            *o += complex_gaussian(rng, n0);
        }
    }
    Ok(out)
}

/// Adds `CN(0, n0)` noise in place.
pub fn add_noise<T: Real, R: Rng + ?Sized>(x: &mut [Complex<T>], n0: T, rng: &mut R) {
    if n0 > T::zero() {
        for v in x.iter_mut() {
            *v += complex_gaussian(rng, n0);
        }
    }
}

/// `A · (Σ_p H_p) · Aᴴ` by explicit conjugation.
pub fn effective_matrix_direct<T: Real>(ch: &ChannelRealization<T>, params: &AfdmParams<T>) -> Result<CMatrix<T>> {
    let a = daft_matrix(params)?;
    let h = time_domain_matrix(ch, params)?;
    Ok(a.matmul(&h).matmul(&a.adjoint()))
}

/// Center column offset of a path's band: `α + 2Nc1 l`, reduced mod `N`.
pub fn band_offset<T: Real>(path: &ChannelPath<T>, params: &AfdmParams<T>) -> f64 {
    let n = params.n as f64;
    let ind = path.alpha() as f64 + 2.0 * n * params.c1.to_f64_lossy() * path.delay as f64;
    ind.rem_euclid(n)
}

fn cyclic_distance(a: i64, b: i64, n: i64) -> i64 {
    let d = (a - b).rem_euclid(n);
    d.min(n - d)
}

/// `γ/N` with `x = n - m + ν + 2Nc1 l`, i.e. the normalized Dirichlet kernel
/// `(1/N) Σ_a e^{-j2πax/N}`.
fn dirichlet<T: Real>(x: f64, n: usize) -> Complex<T> {
    let nf = n as f64;
    let xr = x - nf * (x / nf).round();
    if xr.abs() < 1e-12 {
        return Complex::new(T::one(), T::zero());
    }
    let mag = (std::f64::consts::PI * xr).sin() / (std::f64::consts::PI * xr / nf).sin() / nf;
    let z = cis_turns(-0.5 * xr * (nf - 1.0) / nf) * mag;
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// Unit-gain DAFT-domain matrix of one path from the closed form, keeping only
/// columns within cyclic distance `k_nu` of the band center. `k_nu >= N - 1`
/// keeps everything.
pub fn path_matrix_closed_form<T: Real>(path: &ChannelPath<T>, params: &AfdmParams<T>, k_nu: usize) -> CMatrix<T> {
    let n = params.n;
    let nf = n as f64;
    let c1 = params.c1.to_f64_lossy();
    let c2 = params.c2.to_f64_lossy();
    let l = path.delay as f64;
    let nu = path.doppler.to_f64_lossy();
    let center = band_offset(path, params);
    let full = k_nu + 1 >= n;
    let mut h = CMatrix::zeros(n, n);
    for row in 0..n {
        let c = (row as f64 + center).round() as i64;
        for col in 0..n {
            if !full && cyclic_distance(col as i64, c, n as i64) > k_nu as i64 {
                continue;
            }
            let (rf, cf) = (row as f64, col as f64);
            let eta_turns = c1 * l * l - cf * l / nf + c2 * (cf * cf - rf * rf);
            let eta = cis_turns(eta_turns - eta_turns.round());
            let eta = Complex::new(T::lit(eta.re), T::lit(eta.im));
            let x = rf - cf + nu + 2.0 * nf * c1 * l;
            h[(row, col)] = eta * dirichlet::<T>(x, n);
        }
    }
    h
}

/// `Σ_p h_p H_p` from the closed form with band truncation `k_nu`.
pub fn effective_matrix_closed_form<T: Real>(ch: &ChannelRealization<T>, params: &AfdmParams<T>, k_nu: usize) -> CMatrix<T> {
    let mut h = CMatrix::zeros(params.n, params.n);
    for p in &ch.paths {
        let hp = path_matrix_closed_form(p, params, k_nu);
        h = h.add(&hp.scale(p.gain));
    }
    h
}

/// Nonzero column sets per row, one entry per path.
pub fn band_supports<T: Real>(ch: &ChannelRealization<T>, params: &AfdmParams<T>, k_nu: usize) -> Vec<Vec<Vec<usize>>> {
    let n = params.n;
    ch.paths
        .iter()
        .map(|p| {
            let center = band_offset(p, params);
            (0..n)
                .map(|row| {
                    let c = (row as f64 + center).round() as i64;
                    let mut cols: Vec<usize> = (-(k_nu.min(n) as i64)..=k_nu.min(n) as i64)
                        .map(|d| (c + d).rem_euclid(n as i64) as usize)
                        .collect();
                    cols.sort_unstable();
                    cols.dedup();
                    cols
                })
                .collect()
        })
        .collect()
}

/// Number of (row, column) cells claimed by more than one path's band.
pub fn band_overlap_count<T: Real>(ch: &ChannelRealization<T>, params: &AfdmParams<T>, k_nu: usize) -> usize {
    let supports = band_supports(ch, params, k_nu);
    let n = params.n;
    let mut count = 0;
    let mut hits = vec![0u32; n];
    for row in 0..n {
        hits.iter_mut().for_each(|h| *h = 0);
        for s in &supports {
            for &c in &s[row] {
                hits[c] += 1;
            }
        }
        count += hits.iter().filter(|&&h| h > 1).count();
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, c1: f64, c2: f64, n_cpp: usize) -> AfdmParams<f64> {
        AfdmParams::new(n, c1, c2, n_cpp).unwrap()
    }

    #[test]
    fn alpha_beta_split() {
        for (nu, a, b) in [(0.5, 0, 0.5), (-0.5, -1, 0.5), (1.3, 1, 0.3), (-1.2, -1, -0.2), (0.0, 0, 0.0)] {
            let p = ChannelPath::<f64>::unit(0, nu);
            assert_eq!(p.alpha(), a, "nu = {nu}");
            assert!((p.beta() - b).abs() < 1e-12);
        }
    }

    #[test]
    fn trivial_path_matrices() {
        let p = params(8, 0.1, 0.0, 2);
        let id = time_domain_path_matrix(&ChannelPath::unit(0, 0.0), &p).unwrap();
        assert!(id.max_abs_diff(&CMatrix::identity(8)) < 1e-15);

        let p0 = params(8, 0.0, 0.0, 2);
        let shift = time_domain_path_matrix(&ChannelPath::unit(1, 0.0), &p0).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let want = if c == (r + 7) % 8 { 1.0 } else { 0.0 };
                assert!((shift[(r, c)] - Complex::new(want, 0.0)).norm() < 1e-15);
            }
        }

        let dop = time_domain_path_matrix(&ChannelPath::unit(0, 0.5), &p).unwrap();
        for r in 0..8 {
            let want = Complex::from_polar(1.0, -std::f64::consts::PI * r as f64 / 8.0);
            assert!((dop[(r, r)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn ofdm_single_delay_is_diagonal() {
        let n = 8;
        let p = params(n, 0.0, 0.0, 3);
        let ch = ChannelRealization::single(Complex::new(1.0, 0.0), 2, 0.0);
        let h = effective_matrix_direct(&ch, &p).unwrap();
        for r in 0..n {
            for c in 0..n {
                let want = if r == c {
                    Complex::from_polar(1.0, -std::f64::consts::TAU * (r * 2) as f64 / n as f64)
                } else {
                    Complex::zero()
                };
                assert!((h[(r, c)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_matches_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(16, 0.137, 0.021, 4);
        let ch = ChannelRealization::new(vec![
            ChannelPath::new(complex_gaussian(&mut rng, 1.0), 0, 0.31),
            ChannelPath::new(complex_gaussian(&mut rng, 1.0), 3, -1.45),
        ])
        .unwrap();
        let direct = effective_matrix_direct(&ch, &p).unwrap();
        let closed = effective_matrix_closed_form(&ch, &p, 15);
        assert!(direct.max_abs_diff(&closed) < 1e-9);
    }

    #[test]
    fn integer_doppler_is_one_entry_per_row() {
        let n = 12;
        let c1 = crate::afdm::select_c1::<f64>(1, 0, 1, n as u64).unwrap();
        let p = params(n, c1, 0.0, 2);
        let path = ChannelPath::unit(1, 1.0);
        let h = path_matrix_closed_form(&path, &p, 0);
        for r in 0..n {
            assert_eq!(h.row(r).iter().filter(|v| v.norm() > 1e-12).count(), 1);
        }
        let full = path_matrix_closed_form(&path, &p, n - 1);
        assert!(h.max_abs_diff(&full) < 1e-9);
    }

    #[test]
    fn apply_channel_is_circulant_after_prefix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = params(16, 0.2, 0.01, 4);
        let ch = ChannelRealization::new(vec![
            ChannelPath::new(complex_gaussian(&mut rng, 1.0), 0, 0.3),
            ChannelPath::new(complex_gaussian(&mut rng, 1.0), 4, -0.7),
        ])
        .unwrap();
        let m = crate::afdm::Afdm::new(p).unwrap();
        let s: Vec<Complex<f64>> = (0..16).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let r = apply_channel(&m.add_cpp(&s).unwrap(), &ch, &p, 0.0, &mut rng).unwrap();
        let r = m.remove_cpp(&r).unwrap();
        let want = time_domain_matrix(&ch, &p).unwrap().mul_vec(&s);
        for (a, b) in r.iter().zip(&want) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn eva_quantization_at_128() {
        let eva = EvaProfile::default();
        assert_eq!(eva.quantized_delays(128), vec![0, 0, 0, 1, 1, 1, 2, 3, 5]);
        assert_eq!(eva.quantized_delays(1024), vec![0, 0, 2, 5, 6, 11, 17, 27, 39]);
        let prof: TapProfile<f64> = eva.to_profile(128);
        let delays: Vec<usize> = prof.taps.iter().map(|t| t.delay).collect();
        assert_eq!(delays, vec![0, 1, 2, 3, 5]);
        assert!((prof.total_power() - 1.0).abs() < 1e-12);
        assert!((eva.max_doppler_hz() - 1111.8).abs() < 1.0);
    }

    #[test]
    fn sampling_respects_prefix_and_static_doppler() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prof = TapProfile::<f64>::uniform(&[0, 3], DopplerModel::Static);
        assert!(matches!(prof.sample(&mut rng, &params(8, 0.0, 0.0, 2)), Err(Error::DelayExceedsPrefix { .. })));
        let ch = prof.sample(&mut rng, &params(8, 0.0, 0.0, 3)).unwrap();
        assert!(ch.paths.iter().all(|p| p.doppler == 0.0));
    }
}
