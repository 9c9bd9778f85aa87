//! Binary LDPC codes: alist I/O, systematic encoding and soft decoding.
//!
//! LLR sign convention: positive means bit 0 is more likely.

mod alist;
pub mod construct;
mod decoder;

use std::path::Path;

pub use decoder::{CheckRule, DecodeOutput};

use crate::{Error, Result};

/// Sparse binary parity-check matrix, stored both by rows and by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheck {
    n: usize,
    rows: Vec<Vec<usize>>,
    cols: Vec<Vec<usize>>,
}

impl ParityCheck {
    /// Builds the matrix from the column indices of each row.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &c in row {
                if c >= n {
                    return Err(Error::Alist(format!("row {r} references column {c} >= {n}")));
                }
                cols[c].push(r);
            }
        }
        for (r, row) in rows.iter().enumerate() {
            let mut sorted = row.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != row.len() {
                return Err(Error::Alist(format!("row {r} repeats a column")));
            }
        }
        Ok(Self { n, rows, cols })
    }

    pub fn num_cols(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<usize>] {
        &self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn syndrome_is_zero(&self, bits: &[u8]) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c]) == 0)
    }
}

/// Dense GF(2) row, packed 64 columns per word.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn zeros(len: usize) -> Self {
        BitRow(vec![0; len.div_ceil(64)])
    }
    fn get(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a ^= b;
        }
    }
    fn dot(&self, other: &BitRow) -> u8 {
        let ones: u32 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        (ones & 1) as u8
    }
}

/// An LDPC code with a precomputed systematic encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcCode {
    h: ParityCheck,
    info_positions: Vec<usize>,
    parity_positions: Vec<usize>,
    /// Row `r` gives parity bit `parity_positions[r]` as a GF(2) combination
    /// of the information bits.
    parity_equations: Vec<BitRow>,
}

impl LdpcCode {
    /// Prepares the encoder by Gaussian elimination; rejects rank-deficient matrices.
    pub fn new(h: ParityCheck) -> Result<Self> {
        let n = h.num_cols();
        let m = h.num_rows();
        let mut dense: Vec<BitRow> = h
            .rows()
            .iter()
            .map(|row| {
                let mut b = BitRow::zeros(n);
                row.iter().for_each(|&c| b.set(c));
                b
            })
            .collect();

        let mut pivots = Vec::with_capacity(m);
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(found) = (rank..m).find(|&r| dense[r].get(col)) else {
                continue;
            };
            dense.swap(rank, found);
            let pivot_row = dense[rank].clone();
            for (r, row) in dense.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign(&pivot_row);
                }
            }
            pivots.push(col);
            rank += 1;
        }
        if rank < m {
            return Err(Error::RankDeficient { rank, rows: m });
        }

        let mut is_pivot = vec![false; n];
        pivots.iter().for_each(|&p| is_pivot[p] = true);
        let info_positions: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let parity_equations = dense
            .iter()
            .map(|row| {
                let mut eq = BitRow::zeros(info_positions.len());
                for (i, &c) in info_positions.iter().enumerate() {
                    if row.get(c) {
                        eq.set(i);
                    }
                }
                eq
            })
            .collect();
        Ok(Self {
            h,
            info_positions,
            parity_positions: pivots,
            parity_equations,
        })
    }

    pub fn from_alist_str(text: &str) -> Result<Self> {
        Self::new(alist::parse(text)?)
    }

    pub fn load_alist(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_alist_str(&text)
    }

    pub fn to_alist(&self) -> String {
        alist::write(&self.h)
    }

    pub fn parity_check(&self) -> &ParityCheck {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.h.num_cols()
    }

    pub fn k(&self) -> usize {
        self.info_positions.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    /// Codeword positions that carry the information bits, in order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(Error::BitLength {
                expected: self.k(),
                actual: info.len(),
            });
        }
        let mut packed = BitRow::zeros(info.len());
        let mut codeword = vec![0u8; self.n()];
        for (i, (&pos, &b)) in self.info_positions.iter().zip(info).enumerate() {
            codeword[pos] = b & 1;
            if b & 1 == 1 {
                packed.set(i);
            }
        }
        for (&pos, eq) in self.parity_positions.iter().zip(&self.parity_equations) {
            codeword[pos] = eq.dot(&packed);
        }
        Ok(codeword)
    }

    pub fn info_bits(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| codeword[p]).collect()
    }

    /// Layered decoding with the default normalized min-sum rule.
    pub fn decode(&self, llrs: &[f64], max_iters: usize) -> DecodeOutput {
        decoder::decode(&self.h, llrs, max_iters, CheckRule::default())
    }

    pub fn decode_with(&self, llrs: &[f64], max_iters: usize, rule: CheckRule) -> DecodeOutput {
        decoder::decode(&self.h, llrs, max_iters, rule)
    }
}
