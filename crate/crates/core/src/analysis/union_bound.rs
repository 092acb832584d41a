//! Union bound on the uncoded BER of one modem symbol.
//!
//! Each codeword variable (group `q`, user `j`) contributes a difference
//! class `X_j[:, a] - X_j[:, b]`; pairs of hypotheses that share all classes
//! share the PEP, so the bound sums over class combinations weighted by the
//! number of hypothesis pairs and their label Hamming distances.

use num_complex::Complex;
use num_traits::Zero;

use super::pep::path_matrices;
use crate::afdm::AfdmParams;
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;
use crate::scma::{AllocationScheme, Codebook, Direction};

/// What the bound is evaluated for. `paths` holds one shared path structure
/// or one per user; path gains are the Rayleigh standard deviations.
pub struct UnionBoundSystem<'a, T: Real> {
    pub codebooks: &'a [Codebook<T>],
    pub scheme: AllocationScheme,
    pub params: &'a AfdmParams<T>,
    pub paths: &'a [ChannelRealization<T>],
    pub direction: Direction,
}

#[derive(Clone, Debug)]
struct DiffClass<T> {
    diff: Vec<Complex<T>>,
    pairs: f64,
    hamming: f64,
    negation: usize,
}

fn classes<T: Real>(cb: &Codebook<T>) -> Vec<DiffClass<T>> {
    let m = cb.x.cols();
    let tol = T::lit(1e-9);
    let mut out: Vec<DiffClass<T>> = Vec::new();
    for a in 0..m {
        for b in 0..m {
            let diff: Vec<Complex<T>> = (0..cb.x.rows()).map(|k| cb.x[(k, a)] - cb.x[(k, b)]).collect();
            let ham = f64::from((a ^ b).count_ones());
            match out.iter_mut().find(|c| c.diff.iter().zip(&diff).all(|(x, y)| (x - y).norm() < tol)) {
                Some(c) => {
                    c.pairs += 1.0;
                    c.hamming += ham;
                }
                None => out.push(DiffClass {
                    diff,
                    pairs: 1.0,
                    hamming: ham,
                    negation: 0,
                }),
            }
        }
    }
    // zero class first
    let zero = out
        .iter()
        .position(|c| c.diff.iter().all(|d| d.norm() < tol))
        .expect("a - a is always present");
    out.swap(0, zero);
    for i in 0..out.len() {
        out[i].negation = (0..out.len())
            .find(|&k| out[k].diff.iter().zip(&out[i].diff).all(|(x, y)| (x + y).norm() < tol))
            .unwrap_or(i);
    }
    out
}

/// Bound on the BER at each `n0`. Refuses when the number of joint
/// hypotheses `M^{QJ}` exceeds `cap`.
pub fn union_bound_ber<T: Real>(system: &UnionBoundSystem<'_, T>, n0s: &[T], cap: f64) -> Result<Vec<T>> {
    let cbs = system.codebooks;
    let j_users = cbs.len();
    if j_users == 0 {
        return Err(Error::InvalidParams("no codebooks".into()));
    }
    let n = system.params.n;
    let k_res = cbs[0].x.rows();
    let m = cbs[0].x.cols();
    if k_res == 0 || n % k_res != 0 {
        return Err(Error::NotDivisible { n, k: k_res });
    }
    if n0s.iter().any(|&v| !(v > T::zero())) {
        return Err(Error::NonPositiveVariance);
    }
    if system.paths.len() != 1 && system.paths.len() != j_users {
        return Err(Error::LengthMismatch {
            expected: j_users,
            got: system.paths.len(),
        });
    }
    let groups = n / k_res;
    let vars = groups * j_users;
    let size = (m as f64).powi(vars as i32);
    if size > cap {
        return Err(Error::EnumerationCap { size, cap });
    }
    let user_classes: Vec<Vec<DiffClass<T>>> = cbs.iter().map(classes).collect();
    let mats: Vec<Vec<CMatrix<T>>> = system.paths.iter().map(|p| path_matrices(p, system.params)).collect();
    let mats_of = |j: usize| &mats[if mats.len() == 1 { 0 } else { j }];
    let subcarriers: Vec<Vec<usize>> = (0..groups)
        .map(|q| (0..k_res).map(|k| system.scheme.subcarrier(q, k, k_res, groups)).collect())
        .collect();
    let bits = (m as f64).log2();
    let norm = size * vars as f64 * bits;

    let mut acc = vec![0.0f64; n0s.len()];
    let mut idx = vec![0usize; vars];
    let mut dx = vec![vec![Complex::<T>::zero(); n]; j_users];
    let (c4, c3) = (T::lit(4.0), T::lit(3.0));
    loop {
        // next combination (odometer, variable 0 fastest)
        let mut pos = 0;
        loop {
            if pos == vars {
                return Ok(acc.iter().map(|&a| T::lit(a / norm)).collect());
            }
            idx[pos] += 1;
            if idx[pos] < user_classes[pos % j_users].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        // Δ and -Δ have the same PEP and weight: keep the one whose first
        // nonzero class precedes its negation
        let first = idx.iter().position(|&c| c != 0).expect("odometer skips the zero combination");
        let c0 = idx[first];
        let cls0 = &user_classes[first % j_users];
        if cls0[c0].negation < c0 {
            continue;
        }
        let mult = if cls0[c0].negation == c0 { 1.0 } else { 2.0 };
        let mut pairs = 1.0;
        let mut ham_ratio = 0.0;
        for (v, &c) in idx.iter().enumerate() {
            let cl = &user_classes[v % j_users][c];
            pairs *= cl.pairs;
            ham_ratio += cl.hamming / cl.pairs;
        }
        let weight = mult * pairs * ham_ratio;
        if weight == 0.0 {
            continue;
        }
        for d in dx.iter_mut() {
            d.iter_mut().for_each(|x| *x = Complex::zero());
        }
        for (v, &c) in idx.iter().enumerate() {
            let (q, j) = (v / j_users, v % j_users);
            for (k, &sc) in subcarriers[q].iter().enumerate() {
                dx[j][sc] += user_classes[j][c].diff[k];
            }
        }
        if system.direction == Direction::Downlink {
            for j in 1..j_users {
                let (head, tail) = dx.split_at_mut(j);
                for (a, b) in head[0].iter_mut().zip(tail[0].iter()) {
                    *a += b;
                }
            }
        }
        let mut s = CMatrix::<T>::zeros(n, n);
        let active = if system.direction == Direction::Downlink { 1 } else { j_users };
        for (j, d) in dx.iter().enumerate().take(active) {
            if d.iter().all(|x| x.is_zero()) {
                continue;
            }
            for h in mats_of(j) {
                let col = h.mul_vec(d);
                for r in 0..n {
                    for c in 0..n {
                        s[(r, c)] += col[r] * col[c].conj();
                    }
                }
            }
        }
        for (a, &n0) in acc.iter_mut().zip(n0s) {
            let mut p = T::zero();
            for (coef, c) in [(T::lit(1.0 / 12.0), c4), (T::lit(0.25), c3)] {
                let mut t = s.scale(Complex::new(T::one() / (c * n0), T::zero()));
                t.add_scaled_identity(T::one());
                p += coef * (-t.log_det_hpd()?).exp();
            }
            *a += weight * p.to_f64_lossy();
        }
    }
}
