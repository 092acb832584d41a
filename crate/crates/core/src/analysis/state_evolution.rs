//! Scalar MSE recursion for the iterative LMMSE/decoder receiver.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::complex_gaussian;
use crate::coding::LdpcCode;
use crate::detectors::lmmse::lmmse_variances;
use crate::detectors::messages::{gaussian_from_llr, llr_from_gaussian, GaussianMessage, VarianceBounds};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::Real;
use crate::scma::Alphabet;

/// Decoder transfer curve: input noise variance `τ` to output MSE, on a grid
/// interpolated linearly in log-log coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct NleTable {
    tau: Vec<f64>,
    mse: Vec<f64>,
}

/// Floor used before taking logarithms of the table.
const MSE_FLOOR: f64 = 1e-12;

impl NleTable {
    pub fn new(tau: Vec<f64>, mse: Vec<f64>) -> Result<Self> {
        if tau.len() != mse.len() || tau.len() < 2 {
            return Err(Error::InvalidParams("table needs at least two matched points".into()));
        }
        if tau.windows(2).any(|w| !(w[1] > w[0])) || tau[0] <= 0.0 {
            return Err(Error::InvalidParams("table abscissae must be positive and increasing".into()));
        }
        if mse.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(Error::NonPositiveVariance);
        }
        Ok(Self { tau, mse })
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn mse(&self) -> &[f64] {
        &self.mse
    }

    /// `count` points spaced evenly in `log τ` over `[lo, hi]`.
    pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..count).map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp()).collect()
    }

    /// Interpolated MSE and whether `tau` fell outside the table (the nearest
    /// end value is used then).
    pub fn lookup(&self, tau: f64) -> (f64, bool) {
        let n = self.tau.len();
        if tau <= self.tau[0] {
            return (self.mse[0], tau < self.tau[0]);
        }
        if tau >= self.tau[n - 1] {
            return (self.mse[n - 1], tau > self.tau[n - 1]);
        }
        let i = self.tau.partition_point(|&t| t <= tau) - 1;
        let (x0, x1) = (self.tau[i].ln(), self.tau[i + 1].ln());
        let (y0, y1) = (self.mse[i].max(MSE_FLOOR).ln(), self.mse[i + 1].max(MSE_FLOOR).ln());
        let y = y0 + (y1 - y0) * (tau.ln() - x0) / (x1 - x0);
        (y.exp(), false)
    }

    /// Monte Carlo transfer curve of `code` on `s + CN(0, τ)` observations:
    /// Gaussian-to-LLR conversion, `decoder_iterations` of decoding, then the
    /// MSE of the a-posteriori symbol means. Points run in parallel; results
    /// do not depend on the thread count.
    pub fn monte_carlo(
        code: &LdpcCode,
        alphabet: &Alphabet<f64>,
        taus: &[f64],
        frames: usize,
        decoder_iterations: usize,
        seed: u64,
    ) -> Result<Self> {
        let bps = alphabet.bits_per_symbol();
        if code.frame_bits() % bps != 0 {
            return Err(Error::NotDivisible { n: code.frame_bits(), k: bps });
        }
        let mse: Vec<f64> = taus
            .par_iter()
            .enumerate()
            .map(|(i, &tau)| -> Result<f64> {
                let mut total = 0.0;
                let mut count = 0usize;
                for f in 0..frames.max(1) {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((i as u64) << 32) | f as u64);
                    let info: Vec<u8> = (0..code.info_bits()).map(|_| rng.random_range(0..2u8)).collect();
                    let cw = code.encode(&info)?;
                    let symbols: Vec<Complex<f64>> = cw
                        .chunks(bps)
                        .map(|c| alphabet.index_of(c).map(|k| alphabet.points()[k]))
                        .collect::<Result<_>>()?;
                    let obs: Vec<Complex<f64>> = symbols.iter().map(|s| s + complex_gaussian(&mut rng, tau)).collect();
                    let msg = GaussianMessage {
                        var: vec![tau; obs.len()],
                        mean: obs,
                    };
                    let llr = llr_from_gaussian(&msg, alphabet);
                    let out = code.decode(&llr, decoder_iterations)?;
                    let post = gaussian_from_llr(&out.aposteriori, alphabet)?;
                    total += post.mse(&symbols) * symbols.len() as f64;
                    count += symbols.len();
                }
                Ok(total / count as f64)
            })
            .collect::<Result<_>>()?;
        Self::new(taus.to_vec(), mse)
    }
}

/// Predicted per-iteration MSEs, averaged over users: `tau[t]` at the
/// estimator's extrinsic output and `eta[t]` at the decoder's extrinsic
/// output of iteration `t + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeTrace {
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    /// Per-user values, `[iteration][user]`.
    pub tau_users: Vec<Vec<f64>>,
    pub eta_users: Vec<Vec<f64>>,
    /// Set if a table lookup left the tabulated range.
    pub clamped: bool,
}

impl SeTrace {
    /// Entrywise average of traces of equal shape.
    pub fn mean(traces: &[SeTrace]) -> Option<SeTrace> {
        let first = traces.first()?;
        let n = traces.len() as f64;
        let avg = |pick: fn(&SeTrace) -> &Vec<f64>| -> Vec<f64> {
            (0..pick(first).len())
                .map(|t| traces.iter().map(|tr| pick(tr)[t]).sum::<f64>() / n)
                .collect()
        };
        let avg_users = |pick: fn(&SeTrace) -> &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..pick(first).len())
                .map(|t| {
                    (0..pick(first)[t].len())
                        .map(|j| traces.iter().map(|tr| pick(tr)[t][j]).sum::<f64>() / n)
                        .collect()
                })
                .collect()
        };
        Some(SeTrace {
            tau: avg(|t| &t.tau),
            eta: avg(|t| &t.eta),
            tau_users: avg_users(|t| &t.tau_users),
            eta_users: avg_users(|t| &t.eta_users),
            clamped: traces.iter().any(|t| t.clamped),
        })
    }
}

/// Runs the recursion on the composite matrices of a frame (one per modem
/// symbol, columns `q·J + j`).
///
/// Each iteration: the LMMSE posterior variance `γ̂(η)` per user from the
/// matrices with prior variance `η`, then `τ = (1/γ̂ - 1/η)⁻¹`, then
/// `η' = (1/φ̂(τ) - 1/τ)⁻¹` with `φ̂` from the table. Damping `κ < 1` mixes
/// each new value with the previous one in precision, as the receiver does.
pub fn state_evolution<T: Real>(
    blocks: &[CMatrix<T>],
    users: usize,
    n0: T,
    table: &NleTable,
    iterations: usize,
    damping: f64,
) -> Result<SeTrace> {
    let cols = blocks.first().map_or(0, |g| g.cols());
    if users == 0 || cols % users != 0 {
        return Err(Error::NotDivisible { n: cols, k: users.max(1) });
    }
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParams(format!("damping {damping} must lie in (0, 1]")));
    }
    let bounds = VarianceBounds::<f64>::default();
    let fix = |v: f64| -> (f64, bool) {
        if !(v > 0.0) || v > bounds.max {
            (bounds.max, true)
        } else if v < bounds.min {
            (bounds.min, true)
        } else {
            (v, false)
        }
    };
    let mix = |new: f64, old: Option<f64>| match old {
        Some(o) if damping < 1.0 => 1.0 / (damping / new + (1.0 - damping) / o),
        _ => new,
    };
    let groups = cols / users;
    let mut eta = vec![1.0f64; users];
    let mut prev_tau: Option<Vec<f64>> = None;
    let mut prev_eta: Option<Vec<f64>> = None;
    let mut trace = SeTrace {
        tau: Vec::new(),
        eta: Vec::new(),
        tau_users: Vec::new(),
        eta_users: Vec::new(),
        clamped: false,
    };
    for _ in 0..iterations {
        let prior: Vec<T> = (0..cols).map(|c| T::lit(eta[c % users])).collect();
        let mut post = vec![0.0f64; users];
        for g in blocks {
            let v = lmmse_variances(g, &prior, n0)?;
            for (c, x) in v.iter().enumerate() {
                post[c % users] += x.to_f64_lossy();
            }
        }
        let denom = (blocks.len() * groups) as f64;
        let mut tau = vec![0.0; users];
        for j in 0..users {
            let gamma = (post[j] / denom).max(bounds.min);
            let (t, _) = fix(1.0 / (1.0 / gamma - 1.0 / eta[j]));
            tau[j] = mix(t, prev_tau.as_ref().map(|p| p[j]));
        }
        let mut next = vec![0.0; users];
        for j in 0..users {
            let (phi, out) = table.lookup(tau[j]);
            trace.clamped |= out;
            let (e, _) = fix(1.0 / (1.0 / phi.max(bounds.min) - 1.0 / tau[j]));
            next[j] = mix(e, prev_eta.as_ref().map(|p| p[j]));
        }
        trace.tau.push(tau.iter().sum::<f64>() / users as f64);
        trace.eta.push(next.iter().sum::<f64>() / users as f64);
        trace.tau_users.push(tau.clone());
        trace.eta_users.push(next.clone());
        prev_tau = Some(tau);
        prev_eta = Some(next.clone());
        eta = next;
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_in_log_log() {
        let t = NleTable::new(vec![0.1, 1.0], vec![0.01, 1.0]).unwrap();
        let (v, out) = t.lookup(10f64.powf(-0.5));
        assert!((v - 0.1).abs() < 1e-12 && !out);
        assert_eq!(t.lookup(5.0), (1.0, true));
        assert!(NleTable::new(vec![1.0, 0.5], vec![0.1, 0.1]).is_err());
    }

    #[test]
    fn perfect_decoder_reaches_fixed_point() {
        let g = CMatrix::<f64>::identity(4);
        let table = NleTable::new(vec![1e-3, 10.0], vec![0.0, 0.0]).unwrap();
        let se = state_evolution(&[g], 2, 0.5, &table, 3, 1.0).unwrap();
        assert!(se.eta[0] < 1.1e-8);
        // on the identity the estimator's extrinsic output is always the
        // observation itself, with variance N₀
        for t in 0..3 {
            assert!((se.tau[t] - 0.5).abs() < 1e-6);
            assert!(se.eta[t] < 1.1e-8);
        }
    }
}
