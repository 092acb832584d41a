//! Seeded parity-check constructions.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::alist::SparseBinary;
use crate::error::{Error, Result};

/// Irregular repeat-accumulate style matrix `[H_i | H_p]` with `n - m`
/// information columns of weight `col_weight` and a dual-diagonal parity
/// block. Information columns are placed so that no two columns share two
/// rows, which keeps the graph free of 4-cycles.
pub fn ira(n: usize, m: usize, col_weight: usize, seed: u64) -> Result<SparseBinary> {
    if m == 0 || m >= n || col_weight < 2 || col_weight > m {
        return Err(Error::InvalidParams(format!("no IRA code for n={n} m={m} weight={col_weight}")));
    }
    let k = n - m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    // the staircase already links rows i and i+1
    for i in 0..m - 1 {
        pairs.insert((i, i + 1));
    }
    let mut order: Vec<usize> = (0..m).collect();
    for c in 0..k {
        let mut chosen: Vec<usize> = Vec::with_capacity(col_weight);
        let mut attempts = 0;
        while chosen.len() < col_weight {
            attempts += 1;
            if attempts > 50 {
                return Err(Error::Infeasible(format!("could not place column {c} without 4-cycles")));
            }
            chosen.clear();
            order.shuffle(&mut rng);
            // prefer light rows; the shuffle breaks ties
            order.sort_by_key(|&r| rows[r].len());
            for &r in &order {
                if chosen.len() == col_weight {
                    break;
                }
                let ok = chosen.iter().all(|&s| !pairs.contains(&(r.min(s), r.max(s))));
                if ok {
                    chosen.push(r);
                }
            }
            if chosen.len() < col_weight && rng.random_bool(0.5) {
                order.reverse();
            }
        }
        for (i, &a) in chosen.iter().enumerate() {
            for &b in &chosen[i + 1..] {
                pairs.insert((a.min(b), a.max(b)));
            }
            rows[a].push(c);
        }
    }
    for i in 0..m {
        rows[i].push(k + i);
        if i + 1 < m {
            rows[i + 1].push(k + i);
        }
    }
    SparseBinary::from_rows(n, rows)
}

/// Gallager `(w_c, w_r)`-regular matrix: `w_c` stacked bands, each a column
/// permutation of the block-diagonal all-ones pattern.
pub fn gallager(n: usize, w_c: usize, w_r: usize, seed: u64) -> Result<SparseBinary> {
    if w_r == 0 || n % w_r != 0 || w_c == 0 {
        return Err(Error::NotDivisible { n, k: w_r });
    }
    let band = n / w_r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(band * w_c);
    for b in 0..w_c {
        let mut perm: Vec<usize> = (0..n).collect();
        if b > 0 {
            perm.shuffle(&mut rng);
        }
        for r in 0..band {
            rows.push((0..w_r).map(|i| perm[r * w_r + i]).collect());
        }
    }
    SparseBinary::from_rows(n, rows)
}

/// Number of 4-cycles (pairs of columns sharing two or more rows).
pub fn four_cycles(h: &SparseBinary) -> usize {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut count = 0;
    for c in 0..h.n_cols() {
        let col = h.col(c);
        for (i, &a) in col.iter().enumerate() {
            for &b in &col[i + 1..] {
                if !seen.insert((a, b)) {
                    count += 1;
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ira_shape_and_girth() {
        let h = ira(96, 32, 3, 7).unwrap();
        assert_eq!((h.n_rows(), h.n_cols()), (32, 96));
        assert_eq!(four_cycles(&h), 0);
        for c in 0..64 {
            assert_eq!(h.col(c).len(), 3);
        }
    }

    #[test]
    fn gallager_is_regular() {
        let h = gallager(12, 3, 4, 1).unwrap();
        assert_eq!(h.n_rows(), 9);
        assert!((0..12).all(|c| h.col(c).len() == 3));
        assert!((0..9).all(|r| h.row(r).len() == 4));
    }
}
