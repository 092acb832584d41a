//! Log-domain sum-product detection over the sparse multiuser factor graph.
//!
//! Variables are codeword indices, one per (group, user) pair and indexed
//! `q·J + j`. Observation row `n` sees each connected variable through a
//! per-state contribution vector, so the graph covers both the uplink (one
//! channel per user) and per-group SCMA detection after equalization.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::num::{log_sum_exp, Real};
use crate::scma::{AllocationScheme, Codebook};

/// Default bound on `M^{|Ω(n)|}` per observation row.
pub const DEFAULT_MPA_CAP: f64 = 1_048_576.0;

/// Edge of the factor graph: variable index and its contribution to the row
/// for every codeword state.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub var: usize,
    pub contrib: Vec<Complex<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseFactorGraph<T> {
    states: usize,
    vars: usize,
    rows: Vec<Vec<Edge<T>>>,
    /// Noise variance of each observation row.
    noise: Vec<T>,
}

impl<T: Real> SparseFactorGraph<T> {
    pub fn new(vars: usize, states: usize, rows: Vec<Vec<Edge<T>>>, noise: Vec<T>) -> Result<Self> {
        if noise.len() != rows.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                got: noise.len(),
            });
        }
        if noise.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::NonPositiveVariance);
        }
        for row in &rows {
            for e in row {
                if e.var >= vars {
                    return Err(Error::InvalidParams(format!("edge to variable {} of {vars}", e.var)));
                }
                if e.contrib.len() != states {
                    return Err(Error::LengthMismatch {
                        expected: states,
                        got: e.contrib.len(),
                    });
                }
            }
        }
        Ok(Self { states, vars, rows, noise })
    }

    /// Graph of `y = Σ_j H_j x_j + w`, where `x_j` places user `j`'s
    /// codewords on the subcarriers chosen by `scheme`. `channels` holds one
    /// matrix (shared) or one per user. Contributions whose magnitude is at
    /// most `prune` for every state are dropped.
    pub fn from_channels(
        channels: &[&CMatrix<T>],
        codebooks: &[Codebook<T>],
        scheme: AllocationScheme,
        n0: T,
        prune: T,
    ) -> Result<Self> {
        let j_users = codebooks.len();
        if j_users == 0 || (channels.len() != 1 && channels.len() != j_users) {
            return Err(Error::LengthMismatch {
                expected: j_users,
                got: channels.len(),
            });
        }
        let n = channels[0].rows();
        let k_res = codebooks[0].x.rows();
        let states = codebooks[0].x.cols();
        if k_res == 0 || n % k_res != 0 {
            return Err(Error::NotDivisible { n, k: k_res });
        }
        let groups = n / k_res;
        let mut rows: Vec<Vec<Edge<T>>> = vec![Vec::new(); n];
        for q in 0..groups {
            for (j, cb) in codebooks.iter().enumerate() {
                let h = channels[if channels.len() == 1 { 0 } else { j }];
                if h.rows() != n || h.cols() != n {
                    return Err(Error::LengthMismatch { expected: n, got: h.cols() });
                }
                let var = q * j_users + j;
                let cols: Vec<usize> = (0..k_res).map(|k| scheme.subcarrier(q, k, k_res, groups)).collect();
                for (r, row) in rows.iter_mut().enumerate() {
                    let contrib: Vec<Complex<T>> = (0..states)
                        .map(|s| (0..k_res).map(|k| h[(r, cols[k])] * cb.x[(k, s)]).fold(Complex::zero(), |a, b| a + b))
                        .collect();
                    if contrib.iter().any(|c| c.norm() > prune) {
                        row.push(Edge { var, contrib });
                    }
                }
            }
        }
        Self::new(groups * j_users, states, rows, vec![n0; n])
    }

    /// Graph of one SCMA block `w = Σ_j X_j e_{s_j}` observed as
    /// `ŵ_k = μ_k w_k + e_k` with `Var e_k = noise[k]`.
    pub fn scma_block(codebooks: &[Codebook<T>], gains: &[T], noise: Vec<T>) -> Result<Self> {
        let k_res = codebooks.first().map_or(0, |c| c.x.rows());
        if gains.len() != k_res {
            return Err(Error::LengthMismatch { expected: k_res, got: gains.len() });
        }
        let states = codebooks[0].x.cols();
        let rows = (0..k_res)
            .map(|k| {
                codebooks
                    .iter()
                    .enumerate()
                    .filter(|(_, cb)| (0..states).any(|s| !cb.x[(k, s)].is_zero()))
                    .map(|(j, cb)| Edge {
                        var: j,
                        contrib: (0..states).map(|s| cb.x[(k, s)] * gains[k]).collect(),
                    })
                    .collect()
            })
            .collect();
        Self::new(codebooks.len(), states, rows, noise)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, n: usize) -> &[Edge<T>] {
        &self.rows[n]
    }

    /// `|Ω(n)|` for every row.
    pub fn degrees(&self) -> Vec<usize> {
        self.rows.iter().map(Vec::len).collect()
    }

    /// Checks every row against `cap` joint hypotheses.
    pub fn check_cap(&self, cap: f64) -> Result<()> {
        for (row, edges) in self.rows.iter().enumerate() {
            let size = (self.states as f64).powi(edges.len() as i32);
            if size > cap {
                return Err(Error::ComplexityCap { row, size, cap });
            }
        }
        Ok(())
    }

    /// Log-likelihood of row `n` under the joint state assignment.
    fn row_metric(&self, n: usize, y: Complex<T>, state: &[usize]) -> T {
        let mut e = y;
        for (edge, &s) in self.rows[n].iter().zip(state) {
            e -= edge.contrib[s];
        }
        -e.norm_sqr() / self.noise[n]
    }

    /// Exact marginals by enumerating all `M^vars` hypotheses. Only for
    /// small graphs; used as a reference.
    pub fn brute_force_marginals(&self, y: &[Complex<T>], cap: f64) -> Result<Vec<Vec<T>>> {
        let size = (self.states as f64).powi(self.vars as i32);
        if size > cap {
            return Err(Error::EnumerationCap { size, cap });
        }
        let mut acc = vec![vec![Vec::new(); self.states]; self.vars];
        let mut assign = vec![0usize; self.vars];
        let mut local = Vec::new();
        loop {
            let mut total = T::zero();
            for n in 0..self.rows.len() {
                local.clear();
                local.extend(self.rows[n].iter().map(|e| assign[e.var]));
                total += self.row_metric(n, y[n], &local);
            }
            for (v, &s) in assign.iter().enumerate() {
                acc[v][s].push(total);
            }
            let mut pos = 0;
            loop {
                if pos == self.vars {
                    return Ok(acc.into_iter().map(|per| normalize_log(per.iter().map(|l| log_sum_exp(l)).collect())).collect());
                }
                assign[pos] += 1;
                if assign[pos] < self.states {
                    break;
                }
                assign[pos] = 0;
                pos += 1;
            }
        }
    }
}

fn normalize_log<T: Real>(logs: Vec<T>) -> Vec<T> {
    let z = log_sum_exp(&logs);
    logs.into_iter().map(|l| (l - z).exp()).collect()
}

/// Sum-product detection with flooding updates and uniform priors.
/// Returns per-variable marginals that each sum to one.
pub fn mpa_detect<T: Real>(
    y: &[Complex<T>],
    graph: &SparseFactorGraph<T>,
    iterations: usize,
    cap: f64,
) -> Result<Vec<Vec<T>>> {
    if y.len() != graph.n_rows() {
        return Err(Error::LengthMismatch {
            expected: graph.n_rows(),
            got: y.len(),
        });
    }
    if iterations == 0 {
        return Err(Error::InvalidParams("MPA needs at least one iteration".into()));
    }
    graph.check_cap(cap)?;
    let m = graph.states;
    // log messages, one M-vector per edge in row order
    let offsets: Vec<usize> = std::iter::once(0)
        .chain(graph.rows.iter().scan(0, |acc, r| {
            *acc += r.len();
            Some(*acc)
        }))
        .collect();
    let n_edges = *offsets.last().unwrap_or(&0);
    let mut v2f = vec![T::zero(); n_edges * m];
    let mut f2v = vec![T::zero(); n_edges * m];
    let mut var_edges: Vec<Vec<usize>> = vec![Vec::new(); graph.vars];
    for (n, row) in graph.rows.iter().enumerate() {
        for (i, e) in row.iter().enumerate() {
            var_edges[e.var].push(offsets[n] + i);
        }
    }
    let mut state = Vec::new();
    let mut joint: Vec<T> = Vec::new();
    let mut states_of: Vec<usize> = Vec::new();
    let mut best: Vec<T> = Vec::new();
    let mut sums: Vec<T> = Vec::new();
    for _ in 0..iterations {
        // factor update
        for (n, row) in graph.rows.iter().enumerate() {
            let d = row.len();
            if d == 0 {
                continue;
            }
            let base = offsets[n];
            let size = m.pow(d as u32);
            joint.clear();
            states_of.clear();
            state.clear();
            state.resize(d, 0usize);
            for _ in 0..size {
                let incoming: T = (0..d).map(|i| v2f[(base + i) * m + state[i]]).sum();
                joint.push(graph.row_metric(n, y[n], &state) + incoming);
                states_of.extend_from_slice(&state);
                for s in state.iter_mut() {
                    *s += 1;
                    if *s < m {
                        break;
                    }
                    *s = 0;
                }
            }
            // out(i, s) = log Σ_{x: x_i = s} exp(joint(x) - v2f_i(s))
            best.clear();
            best.resize(d * m, T::neg_infinity());
            for (x, &l) in joint.iter().enumerate() {
                for i in 0..d {
                    let slot = i * m + states_of[x * d + i];
                    if l > best[slot] {
                        best[slot] = l;
                    }
                }
            }
            sums.clear();
            sums.resize(d * m, T::zero());
            for (x, &l) in joint.iter().enumerate() {
                for i in 0..d {
                    let slot = i * m + states_of[x * d + i];
                    sums[slot] += (l - best[slot]).exp();
                }
            }
            for i in 0..d {
                let e = base + i;
                let vals: Vec<T> = (0..m)
                    .map(|s| {
                        let slot = i * m + s;
                        if best[slot] == T::neg_infinity() {
                            best[slot]
                        } else {
                            best[slot] + sums[slot].ln() - v2f[e * m + s]
                        }
                    })
                    .collect();
                let z = log_sum_exp(&vals);
                for s in 0..m {
                    f2v[e * m + s] = vals[s] - z;
                }
            }
        }
        // variable update
        for edges in &var_edges {
            for &e in edges {
                let mut out: Vec<T> = (0..m)
                    .map(|s| edges.iter().filter(|&&o| o != e).map(|&o| f2v[o * m + s]).sum())
                    .collect();
                let z = log_sum_exp(&out);
                for (s, v) in out.iter_mut().enumerate() {
                    v2f[e * m + s] = *v - z;
                }
            }
        }
    }
    Ok(var_edges
        .iter()
        .map(|edges| normalize_log((0..m).map(|s| edges.iter().map(|&e| f2v[e * m + s]).sum()).collect()))
        .collect())
}

/// Index of the most probable state.
pub fn argmax<T: Real>(p: &[T]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scma::{Direction, ScmaSystem};

    #[test]
    fn single_row_matches_enumeration() {
        let sys = ScmaSystem::<f64>::standard(2, Direction::Uplink).unwrap();
        let h = CMatrix::identity(4);
        let g = SparseFactorGraph::from_channels(&[&h], &sys.codebooks, AllocationScheme::Localized, 0.5, 0.0).unwrap();
        assert_eq!(g.degrees(), vec![3, 3, 3, 3]);
        let y = vec![Complex::new(0.3, -0.1), Complex::new(1.0, 0.2), Complex::new(-0.4, 0.0), Complex::new(0.1, 0.9)];
        let exact = g.brute_force_marginals(&y, 1e6).unwrap();
        let mpa = mpa_detect(&y, &g, 10, DEFAULT_MPA_CAP).unwrap();
        for (a, b) in exact.iter().zip(&mpa) {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            // loopy graph: approximate, but close on this easy instance
            assert!((a[0] - b[0]).abs() < 0.2);
        }
        assert!(matches!(mpa_detect(&y, &g, 1, 4.0), Err(Error::ComplexityCap { .. })));
    }
}
