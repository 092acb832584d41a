//! SCMA codebook algebra.
//!
//! Codebooks are built from a signature matrix `Z` (K×J): user `j` sends
//! `z_j · a_i` where `a_i` is the base constellation point chosen by its bits,
//! so the superimposed codeword is `w = Z s`. Groups of `K` resources are then
//! spread over the `N` modem subcarriers by a localized or interleaved map.

use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Uplink,
    Downlink,
}

/// Base constellation with natural-binary labels: point `i` carries the bits
/// of `i`, most significant first.
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet<T> {
    points: Vec<Complex<T>>,
    bits: usize,
}

impl<T: Real> Alphabet<T> {
    pub fn new(points: Vec<Complex<T>>) -> Result<Self> {
        let m = points.len();
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidParams(format!("alphabet size {m} must be a power of two >= 2")));
        }
        Ok(Self {
            bits: m.trailing_zeros() as usize,
            points,
        })
    }

    /// `{+1, -1}`.
    pub fn bpsk() -> Self {
        Self::new(vec![Complex::new(T::one(), T::zero()), Complex::new(-T::one(), T::zero())]).unwrap()
    }

    /// `{1+j, 1-j, -1+j, -1-j}/√2`: the first bit picks the real sign, the
    /// second the imaginary sign, so the labeling is Gray on each rail.
    pub fn qpsk() -> Self {
        let a = T::FRAC_1_SQRT_2();
        Self::new(vec![
            Complex::new(a, a),
            Complex::new(a, -a),
            Complex::new(-a, a),
            Complex::new(-a, -a),
        ])
        .unwrap()
    }

    pub fn for_order(m: usize) -> Result<Self> {
        match m {
            2 => Ok(Self::bpsk()),
            4 => Ok(Self::qpsk()),
            _ => Err(Error::InvalidParams(format!("no built-in alphabet of size {m}"))),
        }
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn mean_energy(&self) -> T {
        self.points.iter().map(|p| p.norm_sqr()).sum::<T>() / T::from_index(self.len())
    }

    /// Bit `b` (0 = most significant) of label `i`.
    #[inline]
    pub fn bit(&self, i: usize, b: usize) -> u8 {
        ((i >> (self.bits - 1 - b)) & 1) as u8
    }

    pub fn index_of(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits {
            return Err(Error::LengthMismatch {
                expected: self.bits,
                got: bits.len(),
            });
        }
        Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize))
    }

    pub fn is_qpsk(&self) -> bool {
        let q = Self::qpsk();
        self.len() == 4 && self.points.iter().zip(&q.points).all(|(a, b)| (a - b).norm() < T::lit(1e-12))
    }

    pub fn is_bpsk(&self) -> bool {
        let q = Self::bpsk();
        self.len() == 2 && self.points.iter().zip(&q.points).all(|(a, b)| (a - b).norm() < T::lit(1e-12))
    }
}

/// Resource occupancy of a `K × J` SCMA block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScmaConfig {
    pub k: usize,
    pub j: usize,
    pub m: usize,
    pub v: usize,
    pub d_f: usize,
    /// `indicator[k][j] = 1` when user `j` occupies resource `k`.
    pub indicator: Vec<Vec<u8>>,
    /// Which of the `d_f` signature values sits at each occupied entry.
    pub pattern: Vec<Vec<Option<usize>>>,
}

impl ScmaConfig {
    /// The 4×6, `d_f = 3`, `V = 2` block used throughout.
    pub fn standard(m: usize) -> Self {
        let indicator = vec![
            vec![0, 1, 1, 0, 1, 0],
            vec![1, 0, 1, 0, 0, 1],
            vec![0, 1, 0, 1, 0, 1],
            vec![1, 0, 0, 1, 1, 0],
        ];
        let (a, b, c) = (Some(0), Some(1), Some(2));
        let pattern = vec![
            vec![None, a, b, None, c, None],
            vec![a, None, b, None, None, c],
            vec![None, c, None, b, None, a],
            vec![c, None, None, b, a, None],
        ];
        Self {
            k: 4,
            j: 6,
            m,
            v: 2,
            d_f: 3,
            indicator,
            pattern,
        }
    }

    /// Builds a config from an indicator matrix, checking regular column and
    /// row weights. The signature pattern numbers the users of each row in
    /// order.
    pub fn from_indicator(indicator: Vec<Vec<u8>>, m: usize) -> Result<Self> {
        let k = indicator.len();
        if k == 0 {
            return Err(Error::InvalidParams("empty indicator matrix".into()));
        }
        let j = indicator[0].len();
        if j == 0 || indicator.iter().any(|r| r.len() != j) {
            return Err(Error::InvalidParams("indicator rows must have equal nonzero length".into()));
        }
        if indicator.iter().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidParams("indicator entries must be 0 or 1".into()));
        }
        let col_w: Vec<usize> = (0..j).map(|c| indicator.iter().map(|r| r[c] as usize).sum()).collect();
        let row_w: Vec<usize> = indicator.iter().map(|r| r.iter().map(|&b| b as usize).sum()).collect();
        let v = col_w[0];
        let d_f = row_w[0];
        if v == 0 || d_f == 0 || col_w.iter().any(|&w| w != v) || row_w.iter().any(|&w| w != d_f) {
            return Err(Error::Infeasible("indicator matrix must have constant nonzero row and column weights".into()));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::InvalidParams(format!("codebook size {m} must be a power of two")));
        }
        let pattern = indicator
            .iter()
            .map(|r| {
                let mut next = 0;
                r.iter()
                    .map(|&b| {
                        (b == 1).then(|| {
                            next += 1;
                            next - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            k,
            j,
            m,
            v,
            d_f,
            indicator,
            pattern,
        })
    }

    pub fn overload(&self) -> f64 {
        self.j as f64 / self.k as f64
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.m.trailing_zeros() as usize
    }

    /// Resources occupied by user `j`, ascending.
    pub fn support(&self, j: usize) -> Vec<usize> {
        (0..self.k).filter(|&k| self.indicator[k][j] == 1).collect()
    }

    /// Users sharing resource `k`, ascending.
    pub fn users_on(&self, k: usize) -> Vec<usize> {
        (0..self.j).filter(|&j| self.indicator[k][j] == 1).collect()
    }

    /// `V_j`: `I_V` with zero rows inserted where user `j` is absent (K×V).
    pub fn mapping_matrix(&self, j: usize) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.v]; self.k];
        for (col, k) in self.support(j).into_iter().enumerate() {
            out[k][col] = 1;
        }
        out
    }
}

/// Complex `K × J` signature with the indicator's support.
#[derive(Clone, Debug, PartialEq)]
pub struct SignatureMatrix<T> {
    pub z: CMatrix<T>,
}

impl<T: Real> SignatureMatrix<T> {
    pub fn new(z: CMatrix<T>, cfg: &ScmaConfig) -> Result<Self> {
        let s = Self { z };
        s.check_support(cfg)?;
        Ok(s)
    }

    pub fn check_support(&self, cfg: &ScmaConfig) -> Result<()> {
        if self.z.rows() != cfg.k || self.z.cols() != cfg.j {
            return Err(Error::SupportMismatch);
        }
        for k in 0..cfg.k {
            for j in 0..cfg.j {
                if (cfg.indicator[k][j] == 1) == self.z[(k, j)].is_zero() {
                    return Err(Error::SupportMismatch);
                }
            }
        }
        Ok(())
    }

    /// `Z = F`: the low-density signature used on the uplink.
    pub fn uplink(cfg: &ScmaConfig) -> Self {
        Self {
            z: CMatrix::from_fn(cfg.k, cfg.j, |k, j| Complex::new(T::from_index(cfg.indicator[k][j] as usize), T::zero())),
        }
    }

    /// Places the `d_f` values on the config's pattern.
    pub fn from_values(cfg: &ScmaConfig, values: &[Complex<T>]) -> Result<Self> {
        if values.len() != cfg.d_f {
            return Err(Error::LengthMismatch {
                expected: cfg.d_f,
                got: values.len(),
            });
        }
        let z = CMatrix::from_fn(cfg.k, cfg.j, |k, j| match cfg.pattern[k][j] {
            Some(i) => values[i],
            None => Complex::zero(),
        });
        Self::new(z, cfg)
    }

    /// Published downlink operator `{1.07j, 0.53, 0.27}` on the standard pattern.
    pub fn downlink_reference(cfg: &ScmaConfig) -> Result<Self> {
        Self::from_values(
            cfg,
            &[
                Complex::new(T::zero(), T::lit(1.07)),
                Complex::new(T::lit(0.53), T::zero()),
                Complex::new(T::lit(0.27), T::zero()),
            ],
        )
    }

    pub fn column_norms(&self) -> Vec<T> {
        (0..self.z.cols())
            .map(|j| self.z.column(j).iter().map(|c| c.norm_sqr()).sum::<T>().sqrt())
            .collect()
    }
}

/// How codebook power is brought to `Tr(XᴴX) = M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormalization {
    /// Every user's codebook individually.
    PerUser,
    /// One common scale so that the users' average is `M`; keeps the
    /// relative powers of the signature.
    Global,
}

impl PowerNormalization {
    pub fn default_for(direction: Direction) -> Self {
        match direction {
            Direction::Uplink => Self::PerUser,
            Direction::Downlink => Self::Global,
        }
    }
}

/// Per-user `K × M` codebook.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<T> {
    pub x: CMatrix<T>,
}

impl<T: Real> Codebook<T> {
    pub fn codeword(&self, i: usize) -> Vec<Complex<T>> {
        self.x.column(i)
    }

    pub fn size(&self) -> usize {
        self.x.cols()
    }

    pub fn power_trace(&self) -> T {
        self.x.as_slice().iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Codebooks together with the normalized signature that generates them.
#[derive(Clone, Debug)]
pub struct ScmaSystem<T> {
    pub config: ScmaConfig,
    pub alphabet: Alphabet<T>,
    pub direction: Direction,
    /// Signature after power normalization: `X_j = z_j a₀ᵀ`.
    pub signature: SignatureMatrix<T>,
    pub codebooks: Vec<Codebook<T>>,
}

impl<T: Real> ScmaSystem<T> {
    pub fn new(
        config: ScmaConfig,
        alphabet: Alphabet<T>,
        signature: &SignatureMatrix<T>,
        direction: Direction,
        norm: PowerNormalization,
    ) -> Result<Self> {
        let (codebooks, sig) = build_codebooks_with(&alphabet, &config, signature, norm)?;
        Ok(Self {
            config,
            alphabet,
            direction,
            signature: sig,
            codebooks,
        })
    }

    /// Standard 4×6 block with the reference signature for `direction`.
    pub fn standard(m: usize, direction: Direction) -> Result<Self> {
        let cfg = ScmaConfig::standard(m);
        let alphabet = Alphabet::for_order(m)?;
        let sig = match direction {
            Direction::Uplink => SignatureMatrix::uplink(&cfg),
            Direction::Downlink => SignatureMatrix::downlink_reference(&cfg)?,
        };
        Self::new(cfg, alphabet, &sig, direction, PowerNormalization::default_for(direction))
    }

    pub fn encode_bits(&self, bits: &[u8], user: usize) -> Result<Vec<Complex<T>>> {
        encode_bits(bits, &self.codebooks[user], &self.alphabet)
    }
}

/// Codebooks `X_j = z_j a₀ᵀ` with the default normalization
/// for `direction`.
pub fn build_codebooks<T: Real>(
    alphabet: &Alphabet<T>,
    cfg: &ScmaConfig,
    signature: &SignatureMatrix<T>,
    direction: Direction,
) -> Result<Vec<Codebook<T>>> {
    Ok(build_codebooks_with(alphabet, cfg, signature, PowerNormalization::default_for(direction))?.0)
}

/// `X_j = s_j z_j a₀ᵀ` with scales `s_j` from `norm`; returns the codebooks
/// and the scaled signature.
pub fn build_codebooks_with<T: Real>(
    alphabet: &Alphabet<T>,
    cfg: &ScmaConfig,
    signature: &SignatureMatrix<T>,
    norm: PowerNormalization,
) -> Result<(Vec<Codebook<T>>, SignatureMatrix<T>)> {
    signature.check_support(cfg)?;
    if alphabet.len() != cfg.m {
        return Err(Error::LengthMismatch {
            expected: cfg.m,
            got: alphabet.len(),
        });
    }
    let es = alphabet.mean_energy();
    let col_energy: Vec<T> = signature.column_norms().iter().map(|n| *n * *n).collect();
    let scales: Vec<T> = match norm {
        PowerNormalization::PerUser => col_energy.iter().map(|&e| (T::one() / (e * es)).sqrt()).collect(),
        PowerNormalization::Global => {
            let total: T = col_energy.iter().copied().sum();
            let s = (T::from_index(cfg.j) / (total * es)).sqrt();
            vec![s; cfg.j]
        }
    };
    let z = signature.z.scale_columns(&scales);
    let codebooks = (0..cfg.j)
        .map(|j| Codebook {
            x: CMatrix::from_fn(cfg.k, cfg.m, |k, i| z[(k, j)] * alphabet.points()[i]),
        })
        .collect();
    Ok((codebooks, SignatureMatrix { z }))
}

/// Codeword selected by `bits` (natural binary, most significant first).
pub fn encode_bits<T: Real>(bits: &[u8], codebook: &Codebook<T>, alphabet: &Alphabet<T>) -> Result<Vec<Complex<T>>> {
    let i = alphabet.index_of(bits)?;
    Ok(codebook.codeword(i))
}

/// Elementwise sum of the users' codewords.
pub fn superimpose<T: Real>(codewords: &[Vec<Complex<T>>]) -> Result<Vec<Complex<T>>> {
    let k = codewords.first().map_or(0, |c| c.len());
    let mut w = vec![Complex::zero(); k];
    for c in codewords {
        if c.len() != k {
            return Err(Error::LengthMismatch { expected: k, got: c.len() });
        }
        for (a, b) in w.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(w)
}

/// Distinct differences `a - b` of alphabet points, zero first.
fn difference_set<T: Real>(alphabet: &Alphabet<T>) -> Vec<Complex<T>> {
    let tol = T::lit(1e-12);
    let mut out = vec![Complex::zero()];
    for a in alphabet.points() {
        for b in alphabet.points() {
            let d = a - b;
            if !out.iter().any(|o: &Complex<T>| (o - d).norm() < tol) {
                out.push(d);
            }
        }
    }
    out
}

/// Default cap on `M^J` for MED enumeration.
pub const DEFAULT_MED_CAP: f64 = 1_048_576.0;

/// Minimum Euclidean distance of the superimposed constellation `{Z s}`.
///
/// Enumerates the nonzero difference vectors `δ ∈ (A - A)^J`, which is the
/// same minimum as the pairwise search over `M^J` points but without the
/// quadratic blow-up.
pub fn med<T: Real>(signature: &SignatureMatrix<T>, alphabet: &Alphabet<T>, cap: f64) -> Result<T> {
    let j = signature.z.cols();
    let size = (alphabet.len() as f64).powi(j as i32);
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let diffs = difference_set(alphabet);
    Ok(min_difference_norm(&signature.z, &diffs).sqrt())
}

/// `min ‖Z δ‖²` over nonzero `δ ∈ D^J` with `D[0] = 0`.
fn min_difference_norm<T: Real>(z: &CMatrix<T>, diffs: &[Complex<T>]) -> T {
    let k = z.rows();
    let j = z.cols();
    let d = diffs.len();
    // odometer over D^J with incremental partial sums per user prefix
    let mut idx = vec![0usize; j];
    let mut partial = vec![vec![Complex::<T>::zero(); k]; j + 1];
    let mut best = T::infinity();
    loop {
        // advance odometer from the last digit
        let mut pos = j;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < d {
                break;
            }
            idx[pos] = 0;
        }
        for u in pos..j {
            let delta = diffs[idx[u]];
            let (head, tail) = partial.split_at_mut(u + 1);
            for r in 0..k {
                tail[0][r] = head[u][r] + z[(r, u)] * delta;
            }
        }
        let e: T = partial[j].iter().map(|c| c.norm_sqr()).sum();
        if e < best {
            best = e;
        }
    }
}

/// Signature optimizer settings.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerOptions {
    /// Maximum number of MED evaluations. Zero returns the seed unchanged.
    pub budget: usize,
    /// Number of random restarts in addition to the seed.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            budget: 400,
            restarts: 2,
            seed: 1,
        }
    }
}

/// Maximizes the MED over the `d_f` pattern values `z_i = √E_i e^{jθ_i}`
/// subject to `Σ E_i = d_f / V`, by coordinate descent with shrinking steps.
/// The seed is the published downlink operator; the result never has a
/// lower MED than the seed.
pub fn optimize_signature<T: Real>(
    cfg: &ScmaConfig,
    alphabet: &Alphabet<T>,
    opts: OptimizerOptions,
) -> Result<SignatureMatrix<T>> {
    if cfg.v == 0 || cfg.d_f == 0 {
        return Err(Error::Infeasible("d_f and V must be positive".into()));
    }
    let seed_sig = if *cfg == ScmaConfig::standard(cfg.m) {
        SignatureMatrix::downlink_reference(cfg)?
    } else {
        let e = T::one() / T::from_index(cfg.v);
        SignatureMatrix::from_values(cfg, &vec![Complex::new(e.sqrt(), T::zero()); cfg.d_f])?
    };
    if opts.budget == 0 {
        return Ok(seed_sig);
    }
    let total = cfg.d_f as f64 / cfg.v as f64;
    let diffs = difference_set(alphabet);
    let size = (alphabet.len() as f64).powi(cfg.j as i32);
    if size > DEFAULT_MED_CAP {
        return Err(Error::EnumerationCap {
            size,
            cap: DEFAULT_MED_CAP,
        });
    }

    // seed values from the pattern
    let mut seed_vals = vec![Complex::<T>::zero(); cfg.d_f];
    for k in 0..cfg.k {
        for j in 0..cfg.j {
            if let Some(i) = cfg.pattern[k][j] {
                seed_vals[i] = seed_sig.z[(k, j)];
            }
        }
    }
    let seed_med = min_difference_norm(&seed_sig.z, &diffs);
    let to_params = |vals: &[Complex<T>]| -> (Vec<f64>, Vec<f64>) {
        (
            vals.iter().map(|v| v.norm_sqr().to_f64_lossy()).collect(),
            vals.iter().map(|v| v.arg().to_f64_lossy()).collect(),
        )
    };
    let project = |e: &mut Vec<f64>| {
        for x in e.iter_mut() {
            *x = x.max(0.0);
        }
        let s: f64 = e.iter().sum();
        let len = e.len() as f64;
        if s <= 0.0 {
            e.iter_mut().for_each(|x| *x = total / len);
        } else {
            e.iter_mut().for_each(|x| *x *= total / s);
        }
    };
    let build = |e: &[f64], th: &[f64]| -> Result<SignatureMatrix<T>> {
        let vals: Vec<Complex<T>> = e
            .iter()
            .zip(th)
            .map(|(&e, &t)| Complex::from_polar(T::lit(e.sqrt()), T::lit(t.rem_euclid(std::f64::consts::TAU))))
            .collect();
        // a zero power would break the support; keep it tiny instead
        let vals: Vec<Complex<T>> = vals
            .into_iter()
            .map(|v| if v.is_zero() { Complex::new(T::lit(1e-9), T::zero()) } else { v })
            .collect();
        SignatureMatrix::from_values(cfg, &vals)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts = 1 + opts.restarts;
    let per_start = (opts.budget / starts).max(1);
    let mut best: Option<(T, SignatureMatrix<T>)> = None;
    for s in 0..starts {
        let (mut e, mut th) = if s == 0 {
            to_params(&seed_vals)
        } else {
            let e: Vec<f64> = (0..cfg.d_f).map(|_| rng.random::<f64>() + 0.05).collect();
            let th: Vec<f64> = (0..cfg.d_f).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            (e, th)
        };
        project(&mut e);
        let mut cur = build(&e, &th)?;
        let mut cur_med = min_difference_norm(&cur.z, &diffs);
        let mut evals = 1;
        let mut step_e = 0.1 * total;
        let mut step_t = 0.2;
        while evals < per_start && (step_e > 1e-7 || step_t > 1e-7) {
            let mut improved = false;
            for coord in 0..2 * cfg.d_f {
                for sign in [1.0, -1.0] {
                    if evals >= per_start {
                        break;
                    }
                    let (mut e2, mut th2) = (e.clone(), th.clone());
                    if coord < cfg.d_f {
                        e2[coord] += sign * step_e;
                        project(&mut e2);
                    } else {
                        th2[coord - cfg.d_f] += sign * step_t;
                    }
                    let cand = build(&e2, &th2)?;
                    let m = min_difference_norm(&cand.z, &diffs);
                    evals += 1;
                    if m > cur_med {
                        e = e2;
                        th = th2;
                        cur = cand;
                        cur_med = m;
                        improved = true;
                    }
                }
            }
            if !improved {
                step_e *= 0.5;
                step_t *= 0.5;
            }
        }
        if best.as_ref().is_none_or(|(m, _)| cur_med > *m) {
            best = Some((cur_med, cur));
        }
    }
    let (best_med, best_sig) = best.expect("at least one start");
    if best_med < seed_med {
        // projection of the seed cost distance; project then keep the better
        let (mut e, th) = to_params(&seed_vals);
        project(&mut e);
        return build(&e, &th);
    }
    Ok(best_sig)
}

/// Sum of the `d_f` pattern powers `Σ E_i`, read off the first row using
/// each pattern index.
pub fn pattern_power_sum<T: Real>(sig: &SignatureMatrix<T>, cfg: &ScmaConfig) -> T {
    let mut seen = vec![None; cfg.d_f];
    for k in 0..cfg.k {
        for j in 0..cfg.j {
            if let Some(i) = cfg.pattern[k][j] {
                seen[i].get_or_insert(sig.z[(k, j)].norm_sqr());
            }
        }
    }
    seen.into_iter().map(|v| v.unwrap_or_else(T::zero)).sum()
}

/// Codeword-to-subcarrier map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationScheme {
    /// Group `q` occupies subcarriers `qK .. qK+K-1`.
    Localized,
    /// Entry `k` of group `q` sits at subcarrier `kQ + q`.
    Interleaved,
}

impl AllocationScheme {
    /// Subcarrier of entry `k` of group `q`.
    #[inline]
    pub fn subcarrier(self, q: usize, k: usize, k_res: usize, groups: usize) -> usize {
        match self {
            Self::Localized => q * k_res + k,
            Self::Interleaved => k * groups + q,
        }
    }

    /// `perm[q·K + k]` = subcarrier index.
    pub fn permutation(self, n: usize, k_res: usize) -> Result<Vec<usize>> {
        if k_res == 0 || n % k_res != 0 {
            return Err(Error::NotDivisible { n, k: k_res });
        }
        let groups = n / k_res;
        Ok((0..n).map(|i| self.subcarrier(i / k_res, i % k_res, k_res, groups)).collect())
    }
}

impl fmt::Display for AllocationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Localized => "localized",
            Self::Interleaved => "interleaved",
        })
    }
}

/// Places `Q` group-major codewords (flattened, length `N`) on subcarriers.
pub fn allocate<T: Copy + Zero>(groups: &[T], scheme: AllocationScheme, k_res: usize) -> Result<Vec<T>> {
    let perm = scheme.permutation(groups.len(), k_res)?;
    let mut out = vec![T::zero(); groups.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p] = groups[i];
    }
    Ok(out)
}

pub fn deallocate<T: Copy + Zero>(x: &[T], scheme: AllocationScheme, k_res: usize) -> Result<Vec<T>> {
    let perm = scheme.permutation(x.len(), k_res)?;
    Ok(perm.iter().map(|&p| x[p]).collect())
}

/// `N × QJ` matrix mapping the symbol vector (column `q·J + j` is user `j`
/// in group `q`) to the allocated superimposed signal.
pub fn effective_signature<T: Real>(
    signature: &SignatureMatrix<T>,
    scheme: AllocationScheme,
    n: usize,
) -> Result<CMatrix<T>> {
    let k_res = signature.z.rows();
    let j_users = signature.z.cols();
    if k_res == 0 || n % k_res != 0 {
        return Err(Error::NotDivisible { n, k: k_res });
    }
    let groups = n / k_res;
    let mut out = CMatrix::zeros(n, groups * j_users);
    for q in 0..groups {
        for k in 0..k_res {
            let row = scheme.subcarrier(q, k, k_res, groups);
            for j in 0..j_users {
                out[(row, q * j_users + j)] = signature.z[(k, j)];
            }
        }
    }
    Ok(out)
}

/// Composite `N × QJ` matrix `G[:, c] = H_{user(c)} · Z_sym[:, c]`; one channel
/// for the downlink, one per user for the uplink.
pub fn compose_channel<T: Real>(z_sym: &CMatrix<T>, channels: &[&CMatrix<T>], j_users: usize) -> Result<CMatrix<T>> {
    if channels.len() != 1 && channels.len() != j_users {
        return Err(Error::LengthMismatch {
            expected: j_users,
            got: channels.len(),
        });
    }
    let n = z_sym.rows();
    let cols = z_sym.cols();
    let mut g = CMatrix::zeros(n, cols);
    for c in 0..cols {
        let h = channels[if channels.len() == 1 { 0 } else { c % j_users }];
        let zc = z_sym.column(c);
        let nz: Vec<(usize, Complex<T>)> = zc.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| (i, *v)).collect();
        for r in 0..n {
            let mut acc = Complex::zero();
            for &(i, v) in &nz {
                acc += h[(r, i)] * v;
            }
            g[(r, c)] = acc;
        }
    }
    Ok(g)
}

/// Writes a matrix as a `rows cols` line followed by one line per row of
/// `re im` pairs.
pub fn write_matrix<T: Real, W: Write>(m: &CMatrix<T>, mut w: W) -> Result<()> {
    writeln!(w, "{} {}", m.rows(), m.cols())?;
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(|c| format!("{:e} {:e}", c.re.to_f64_lossy(), c.im.to_f64_lossy())).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<T: Real, R: BufRead>(r: R) -> Result<CMatrix<T>> {
    let mut tokens = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let mut it = tokens.into_iter();
    let mut next_usize = |what: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))?
            .parse()
            .map_err(|e| Error::Parse(format!("{what}: {e}")))
    };
    let rows = next_usize("row count")?;
    let cols = next_usize("column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    let rest: Vec<String> = it.collect();
    if rest.len() != 2 * rows * cols {
        return Err(Error::Parse(format!("expected {} numbers, found {}", 2 * rows * cols, rest.len())));
    }
    for pair in rest.chunks(2) {
        let re: f64 = pair[0].parse().map_err(|e| Error::Parse(format!("{}: {e}", pair[0])))?;
        let im: f64 = pair[1].parse().map_err(|e| Error::Parse(format!("{}: {e}", pair[1])))?;
        data.push(Complex::new(T::lit(re), T::lit(im)));
    }
    CMatrix::from_vec(rows, cols, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_weights_and_mapping() {
        let cfg = ScmaConfig::standard(4);
        for j in 0..6 {
            assert_eq!(cfg.support(j).len(), 2);
        }
        for k in 0..4 {
            assert_eq!(cfg.users_on(k).len(), 3);
        }
        assert_eq!(cfg.mapping_matrix(0), vec![vec![0, 0], vec![1, 0], vec![0, 0], vec![0, 1]]);
        assert_eq!(cfg.mapping_matrix(1), vec![vec![1, 0], vec![0, 0], vec![0, 1], vec![0, 0]]);
        assert!(cfg.overload() > 1.0);
        let again = ScmaConfig::from_indicator(cfg.indicator.clone(), 4).unwrap();
        assert_eq!((again.v, again.d_f), (2, 3));
        assert!(ScmaConfig::from_indicator(vec![vec![1, 1], vec![1, 0]], 2).is_err());
    }

    #[test]
    fn qpsk_labels() {
        let a = Alphabet::<f64>::qpsk();
        assert_eq!(a.index_of(&[0, 0]).unwrap(), 0);
        assert_eq!(a.index_of(&[1, 0]).unwrap(), 2);
        assert!(a.points()[2].re < 0.0 && a.points()[2].im > 0.0);
        assert!((a.mean_energy() - 1.0).abs() < 1e-15);
        assert!(a.index_of(&[1]).is_err());
    }

    #[test]
    fn reference_downlink_layout() {
        let cfg = ScmaConfig::standard(4);
        let s = SignatureMatrix::<f64>::downlink_reference(&cfg).unwrap();
        assert_eq!(s.z[(1, 0)], Complex::new(0.0, 1.07));
        assert_eq!(s.z[(3, 4)], Complex::new(0.0, 1.07));
        assert_eq!(s.z[(2, 3)], Complex::new(0.53, 0.0));
        assert!((pattern_power_sum(&s, &cfg) - 1.4987).abs() < 1e-12);
    }

    #[test]
    fn med_trivial_cases() {
        let one = ScmaConfig::from_indicator(vec![vec![1]], 2).unwrap();
        let s = SignatureMatrix::<f64>::uplink(&one);
        assert!((med(&s, &Alphabet::bpsk(), DEFAULT_MED_CAP).unwrap() - 2.0).abs() < 1e-15);
        let two = ScmaConfig::from_indicator(vec![vec![1, 1]], 2).unwrap();
        let s = SignatureMatrix::<f64>::uplink(&two);
        assert_eq!(med(&s, &Alphabet::bpsk(), DEFAULT_MED_CAP).unwrap(), 0.0);
        assert!(matches!(
            med(&s, &Alphabet::bpsk(), 2.0),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn allocation_indices() {
        let perm = AllocationScheme::Interleaved.permutation(8, 4).unwrap();
        assert_eq!(&perm[0..4], &[0, 2, 4, 6]);
        let id: Vec<usize> = (0..4).collect();
        assert_eq!(AllocationScheme::Interleaved.permutation(4, 4).unwrap(), id);
        assert_eq!(AllocationScheme::Localized.permutation(4, 4).unwrap(), id);
        assert!(matches!(AllocationScheme::Localized.permutation(10, 4), Err(Error::NotDivisible { .. })));
    }

    #[test]
    fn matrix_text_roundtrip() {
        let cfg = ScmaConfig::standard(4);
        let s = SignatureMatrix::<f64>::downlink_reference(&cfg).unwrap();
        let mut buf = Vec::new();
        write_matrix(&s.z, &mut buf).unwrap();
        let back: CMatrix<f64> = read_matrix(buf.as_slice()).unwrap();
        assert_eq!(back, s.z);
        assert!(read_matrix::<f64, _>("2 2\n1 0".as_bytes()).is_err());
    }
}
