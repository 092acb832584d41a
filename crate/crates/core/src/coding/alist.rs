//! Sparse binary matrices and the MacKay "alist" text format.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Sparse GF(2) matrix stored by both rows and columns (sorted indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseBinary {
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl SparseBinary {
    /// Builds from per-row column lists.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n_cols];
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Parse(format!("row {r} repeats a column")));
            }
            for &c in row.iter() {
                if c >= n_cols {
                    return Err(Error::Parse(format!("row {r} references column {c} of {n_cols}")));
                }
                cols[c].push(r);
            }
        }
        Ok(Self { rows, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.rows[r]
    }

    pub fn col(&self, c: usize) -> &[usize] {
        &self.cols[c]
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `H · cᵀ` over GF(2), one entry per row.
    pub fn syndrome(&self, bits: &[u8]) -> Vec<u8> {
        self.rows
            .iter()
            .map(|r| r.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n_cols() && self.rows.iter().all(|r| r.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)) == 0)
    }

    /// Parses alist: `n m`, `max_col_w max_row_w`, the column weights, the row
    /// weights, then 1-based row lists per column and column lists per row.
    /// Zero entries used as padding are ignored.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut it = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::Parse(format!("alist token {t:?}: {e}")))
        });
        let mut next = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| Error::Parse(format!("alist ended before {what}")))?
        };
        let n = next("column count")?;
        let m = next("row count")?;
        let max_cw = next("max column weight")?;
        let max_rw = next("max row weight")?;
        let col_w: Vec<usize> = (0..n).map(|_| next("column weights")).collect::<Result<_>>()?;
        let row_w: Vec<usize> = (0..m).map(|_| next("row weights")).collect::<Result<_>>()?;
        let mut col_lists = Vec::with_capacity(n);
        for (c, &w) in col_w.iter().enumerate() {
            let mut list = Vec::with_capacity(w);
            for _ in 0..max_cw {
                let v = next("column entries")?;
                if v > 0 {
                    list.push(v - 1);
                }
            }
            if list.len() != w {
                return Err(Error::Parse(format!("column {c} lists {} entries, weight says {w}", list.len())));
            }
            col_lists.push(list);
        }
        let mut rows = Vec::with_capacity(m);
        for (r, &w) in row_w.iter().enumerate() {
            let mut list = Vec::with_capacity(w);
            for _ in 0..max_rw {
                let v = next("row entries")?;
                if v > 0 {
                    list.push(v - 1);
                }
            }
            if list.len() != w {
                return Err(Error::Parse(format!("row {r} lists {} entries, weight says {w}", list.len())));
            }
            rows.push(list);
        }
        let h = Self::from_rows(n, rows)?;
        for (c, list) in col_lists.iter_mut().enumerate() {
            list.sort_unstable();
            if *list != h.cols[c] {
                return Err(Error::Parse(format!("column {c} disagrees with the row lists")));
            }
        }
        Ok(h)
    }

    pub fn to_alist(&self) -> String {
        let max_cw = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_rw = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(s, "{} {}", self.n_cols(), self.n_rows());
        let _ = writeln!(s, "{max_cw} {max_rw}");
        let _ = writeln!(s, "{}", join(&mut self.cols.iter().map(Vec::len)));
        let _ = writeln!(s, "{}", join(&mut self.rows.iter().map(Vec::len)));
        for c in &self.cols {
            let mut e: Vec<usize> = c.iter().map(|r| r + 1).collect();
            e.resize(max_cw, 0);
            let _ = writeln!(s, "{}", join(&mut e.into_iter()));
        }
        for r in &self.rows {
            let mut e: Vec<usize> = r.iter().map(|c| c + 1).collect();
            e.resize(max_rw, 0);
            let _ = writeln!(s, "{}", join(&mut e.into_iter()));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alist_roundtrip() {
        let h = SparseBinary::from_rows(4, vec![vec![0, 1], vec![1, 2, 3]]).unwrap();
        let text = h.to_alist();
        assert_eq!(SparseBinary::from_alist(&text).unwrap(), h);
        assert_eq!(h.syndrome(&[1, 1, 0, 1]), vec![0, 0]);
        assert!(h.is_codeword(&[1, 1, 0, 1]));
    }

    #[test]
    fn alist_rejects_inconsistent_input() {
        assert!(SparseBinary::from_alist("2 1\n1 2\n1 1\n2\n1\n1\n1 2").is_ok());
        assert!(SparseBinary::from_alist("2 1\n1 2\n1 1\n2\n1\n1\n1").is_err());
        assert!(SparseBinary::from_alist("2 1\n1 2\n1 1\n2\n1\n2\n1 2").is_err());
    }
}
