//! MacKay's alist format.
//!
//! ```text
//! n m
//! max_col_degree max_row_degree
//! <n column degrees>
//! <m row degrees>
//! <n lines: 1-based row indices of each column, zero padded>
//! <m lines: 1-based column indices of each row, zero padded>
//! ```
//!
//! The reader also accepts unpadded lists.

use super::ParityCheck;
use crate::{Error, Result};

fn numbers(line: &str, what: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Alist(format!("bad number {t:?} in {what}")))
        })
        .collect()
}

pub(super) fn parse(text: &str) -> Result<ParityCheck> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Alist(format!("truncated before {what}")))
    };
    let header = numbers(next("header")?, "header")?;
    let [n, m] = header[..] else {
        return Err(Error::Alist("header must be `n m`".into()));
    };
    let maxima = numbers(next("degree maxima")?, "degree maxima")?;
    let [max_col, max_row] = maxima[..] else {
        return Err(Error::Alist("second line must hold two maxima".into()));
    };
    let col_deg = numbers(next("column degrees")?, "column degrees")?;
    let row_deg = numbers(next("row degrees")?, "row degrees")?;
    if col_deg.len() != n || row_deg.len() != m {
        return Err(Error::Alist(format!(
            "expected {n} column and {m} row degrees, got {} and {}",
            col_deg.len(),
            row_deg.len()
        )));
    }
    if col_deg.iter().max().copied().unwrap_or(0) > max_col
        || row_deg.iter().max().copied().unwrap_or(0) > max_row
    {
        return Err(Error::Alist("a degree exceeds the stated maximum".into()));
    }

    let mut list = |count: usize, degrees: &[usize], bound: usize, what: &str| {
        (0..count)
            .map(|i| {
                let entries: Vec<usize> = numbers(next(what)?, what)?
                    .into_iter()
                    .filter(|&e| e != 0)
                    .collect();
                if entries.len() != degrees[i] {
                    return Err(Error::Alist(format!(
                        "{what} {i} lists {} entries, degree says {}",
                        entries.len(),
                        degrees[i]
                    )));
                }
                if let Some(&bad) = entries.iter().find(|&&e| e > bound) {
                    return Err(Error::Alist(format!("{what} {i}: index {bad} > {bound}")));
                }
                Ok(entries.into_iter().map(|e| e - 1).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()
    };
    let col_lists = list(n, &col_deg, m, "column")?;
    let row_lists = list(m, &row_deg, n, "row")?;

    let h = ParityCheck::from_rows(n, row_lists)?;
    for (c, listed) in col_lists.into_iter().enumerate() {
        let mut listed = listed;
        listed.sort_unstable();
        let mut actual = h.cols()[c].clone();
        actual.sort_unstable();
        if listed != actual {
            return Err(Error::Alist(format!(
                "column {c} disagrees with the row lists"
            )));
        }
    }
    Ok(h)
}

pub(super) fn write(h: &ParityCheck) -> String {
    use std::fmt::Write;
    let max_col = h.cols().iter().map(Vec::len).max().unwrap_or(0);
    let max_row = h.rows().iter().map(Vec::len).max().unwrap_or(0);
    let join = |v: &mut dyn Iterator<Item = usize>| {
        v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    let padded = |list: &[usize], width: usize| {
        let mut sorted: Vec<usize> = list.iter().map(|&x| x + 1).collect();
        sorted.sort_unstable();
        sorted.resize(width, 0);
        join(&mut sorted.into_iter())
    };
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", h.num_cols(), h.num_rows());
    let _ = writeln!(out, "{max_col} {max_row}");
    let _ = writeln!(out, "{}", join(&mut h.cols().iter().map(Vec::len)));
    let _ = writeln!(out, "{}", join(&mut h.rows().iter().map(Vec::len)));
    for col in h.cols() {
        let _ = writeln!(out, "{}", padded(col, max_col));
    }
    for row in h.rows() {
        let _ = writeln!(out, "{}", padded(row, max_row));
    }
    out
}
