//! LDPC code: systematic encoder from GF(2) elimination and a flooding
//! sum-product decoder. LLRs are `ln P(0)/P(1)`.

use num_rational::Ratio;

use super::alist::SparseBinary;
use crate::error::{Error, Result};
use crate::num::Real;

/// Magnitude bound applied to channel LLRs before decoding.
pub const LLR_CLAMP: f64 = 50.0;

#[derive(Clone, Debug)]
pub struct LdpcCode {
    h: SparseBinary,
    /// Codeword positions carrying the information bits, ascending.
    info_positions: Vec<usize>,
    /// Pivot (parity) positions, one per independent check.
    parity_positions: Vec<usize>,
    /// `parity[i] = ⊕_c coeff[i][c] · info[c]`, bit-packed over info index.
    coeff: Vec<Vec<u64>>,
}

/// Decoder result for one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput<T> {
    pub aposteriori: Vec<T>,
    /// `aposteriori - input`.
    pub extrinsic: Vec<T>,
    pub hard: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

impl LdpcCode {
    /// Derives a systematic encoder. Pivots are taken from the last column
    /// backwards so that codes with a parity block on the right keep their
    /// information bits in front.
    pub fn new(h: SparseBinary) -> Result<Self> {
        let m = h.n_rows();
        let n = h.n_cols();
        if n == 0 {
            return Err(Error::InvalidParams("code has no columns".into()));
        }
        let words = n.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = (0..m)
            .map(|r| {
                let mut w = vec![0u64; words];
                for &c in h.row(r) {
                    w[c / 64] |= 1 << (c % 64);
                }
                w
            })
            .collect();
        let get = |row: &[u64], c: usize| (row[c / 64] >> (c % 64)) & 1 == 1;
        let mut pivots: Vec<usize> = Vec::new();
        let mut rank = 0;
        for c in (0..n).rev() {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&r| get(&rows[r], c)) else {
                continue;
            };
            rows.swap(rank, p);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && get(row, c) {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
        let mut is_pivot = vec![false; n];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let k = info_positions.len();
        let kw = k.div_ceil(64);
        let coeff = (0..rank)
            .map(|i| {
                let mut w = vec![0u64; kw];
                for (ii, &c) in info_positions.iter().enumerate() {
                    if get(&rows[i], c) {
                        w[ii / 64] |= 1 << (ii % 64);
                    }
                }
                w
            })
            .collect();
        Ok(Self {
            h,
            info_positions,
            parity_positions: pivots,
            coeff,
        })
    }

    pub fn from_alist(text: &str) -> Result<Self> {
        Self::new(SparseBinary::from_alist(text)?)
    }

    /// The shipped rate-2/3 code with 2048-bit frames.
    pub fn default_code() -> Self {
        Self::from_alist(include_str!("../../assets/ldpc_2048_r23.alist")).expect("shipped code parses")
    }

    pub fn parity_check(&self) -> &SparseBinary {
        &self.h
    }

    pub fn frame_bits(&self) -> usize {
        self.h.n_cols()
    }

    pub fn info_bits(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rank(&self) -> usize {
        self.parity_positions.len()
    }

    pub fn rate(&self) -> Ratio<usize> {
        Ratio::new(self.info_bits(), self.frame_bits())
    }

    pub fn rate_f64(&self) -> f64 {
        self.info_bits() as f64 / self.frame_bits() as f64
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.info_bits() {
            return Err(Error::LengthMismatch {
                expected: self.info_bits(),
                got: info.len(),
            });
        }
        let mut packed = vec![0u64; self.info_bits().div_ceil(64)];
        for (i, &b) in info.iter().enumerate() {
            if b & 1 == 1 {
                packed[i / 64] |= 1 << (i % 64);
            }
        }
        let mut cw = vec![0u8; self.frame_bits()];
        for (&pos, &b) in self.info_positions.iter().zip(info) {
            cw[pos] = b & 1;
        }
        for (row, &pos) in self.coeff.iter().zip(&self.parity_positions) {
            let ones: u32 = row.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
            cw[pos] = (ones & 1) as u8;
        }
        Ok(cw)
    }

    /// Information bits of a codeword (or hard decision).
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }

    /// Flooding sum-product decoding with early stop once all checks hold.
    pub fn decode<T: Real>(&self, llrs: &[T], max_iterations: usize) -> Result<DecodeOutput<T>> {
        let n = self.frame_bits();
        if llrs.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: llrs.len() });
        }
        let clamp = T::lit(LLR_CLAMP);
        let input: Vec<T> = llrs.iter().map(|&l| l.max(-clamp).min(clamp)).collect();
        let m = self.h.n_rows();
        // edge storage in row order
        let mut offsets = Vec::with_capacity(m + 1);
        offsets.push(0);
        for r in 0..m {
            offsets.push(offsets[r] + self.h.row(r).len());
        }
        let edge_col: Vec<usize> = (0..m).flat_map(|r| self.h.row(r).iter().copied()).collect();
        let mut c2v = vec![T::zero(); edge_col.len()];
        let mut v2c = vec![T::zero(); edge_col.len()];
        let mut app = input.clone();
        let mut hard: Vec<u8> = app.iter().map(|&l| u8::from(l < T::zero())).collect();
        let mut converged = false;
        let mut iterations = 0;
        let limit = T::one() - T::lit(1e-12);
        let mut tanhs: Vec<T> = Vec::new();
        for _ in 0..max_iterations.max(1) {
            iterations += 1;
            for e in 0..edge_col.len() {
                v2c[e] = app[edge_col[e]] - c2v[e];
            }
            for r in 0..m {
                let (s, t) = (offsets[r], offsets[r + 1]);
                tanhs.clear();
                tanhs.extend(v2c[s..t].iter().map(|&l| (l * T::lit(0.5)).tanh()));
                for (i, e) in (s..t).enumerate() {
                    let mut prod = T::one();
                    for (k, &th) in tanhs.iter().enumerate() {
                        if k != i {
                            prod *= th;
                        }
                    }
                    let prod = prod.max(-limit).min(limit);
                    c2v[e] = T::lit(2.0) * prod.atanh();
                }
            }
            app.copy_from_slice(&input);
            for e in 0..edge_col.len() {
                app[edge_col[e]] += c2v[e];
            }
            for (h, &l) in hard.iter_mut().zip(&app) {
                *h = u8::from(l < T::zero());
            }
            if self.h.is_codeword(&hard) {
                converged = true;
                break;
            }
        }
        let extrinsic = app.iter().zip(&input).map(|(&a, &i)| a - i).collect();
        Ok(DecodeOutput {
            aposteriori: app,
            extrinsic,
            hard,
            converged,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hamming74() -> LdpcCode {
        let h = SparseBinary::from_rows(7, vec![vec![0, 1, 2, 4], vec![0, 1, 3, 5], vec![0, 2, 3, 6]]).unwrap();
        LdpcCode::new(h).unwrap()
    }

    #[test]
    fn systematic_encoding_satisfies_checks() {
        let code = hamming74();
        assert_eq!(code.info_bits(), 4);
        assert_eq!(code.info_positions(), &[0, 1, 2, 3]);
        for v in 0..16u8 {
            let info: Vec<u8> = (0..4).map(|b| (v >> b) & 1).collect();
            let cw = code.encode(&info).unwrap();
            assert!(code.parity_check().is_codeword(&cw));
            assert_eq!(code.extract_info(&cw), info);
        }
        assert!(code.encode(&[0, 1]).is_err());
    }

    #[test]
    fn decoder_fixes_a_weak_error() {
        let code = hamming74();
        let cw = code.encode(&[1, 0, 1, 1]).unwrap();
        let mut llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
        llr[2] = -llr[2] * 0.25;
        let out = code.decode(&llr, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.hard, cw);
        for i in 0..7 {
            assert!((out.extrinsic[i] + llr[i] - out.aposteriori[i]).abs() < 1e-9);
        }
    }
}
