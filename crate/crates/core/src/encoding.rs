//! Most-significant-digit-first binary encodings of natural number tuples.
//!
//! A word over the alphabet of `k`-bit columns spells `k` natural numbers at
//! once: row `j` of every column is one binary digit of the `j`-th number,
//! read left to right from the most significant digit. Columns are packed into
//! a `u32` with row `j` stored at bit `j`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::ParseError;

/// Largest column width supported by the packed representation.
pub const MAX_ARITY: usize = 16;

/// A single packed column of `arity` bits.
pub type Column = u32;

/// Returns the bit for `row` of a packed column.
#[inline]
pub fn column_bit(col: Column, row: usize) -> bool {
    (col >> row) & 1 == 1
}

/// Renders a packed column as `[b0 b1 …]` without separators, e.g. `[10]`.
pub fn column_to_string(col: Column, arity: usize) -> String {
    let mut s = String::with_capacity(arity + 2);
    s.push('[');
    for row in 0..arity {
        s.push(if column_bit(col, row) { '1' } else { '0' });
    }
    s.push(']');
    s
}

/// A word over `arity`-bit columns, msd first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    arity: usize,
    cols: Vec<Column>,
}

impl Word {
    pub fn new(arity: usize, cols: Vec<Column>) -> Self {
        assert!(arity <= MAX_ARITY, "arity {arity} exceeds {MAX_ARITY}");
        let mask = column_mask(arity);
        debug_assert!(cols.iter().all(|c| c & !mask == 0));
        Word { arity, cols }
    }

    pub fn empty(arity: usize) -> Self {
        Word::new(arity, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn columns(&self) -> &[Column] {
        &self.cols
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn push(&mut self, col: Column) {
        debug_assert!(col & !column_mask(self.arity) == 0);
        self.cols.push(col);
    }

    /// The word with `n` zero columns prepended.
    pub fn pad_front(&self, n: usize) -> Word {
        let mut cols = vec![0; n];
        cols.extend_from_slice(&self.cols);
        Word::new(self.arity, cols)
    }

    /// Parses the textual syntax `[10][00][01]`. An empty string is the empty
    /// word and needs `arity` to be given.
    pub fn parse(text: &str, arity: usize) -> Result<Word, ParseError> {
        let mut cols = Vec::new();
        let mut chars = text.chars().filter(|c| !c.is_whitespace()).peekable();
        while let Some(c) = chars.next() {
            if c != '[' {
                return Err(ParseError::msg(format!("expected '[' in word, found '{c}'")));
            }
            let mut col: Column = 0;
            let mut width = 0;
            loop {
                match chars.next() {
                    Some(']') => break,
                    Some('0') => width += 1,
                    Some('1') => {
                        col |= 1 << width;
                        width += 1;
                    }
                    Some(other) => {
                        return Err(ParseError::msg(format!("bad bit '{other}' in column")));
                    }
                    None => return Err(ParseError::msg("unterminated column")),
                }
                if width > MAX_ARITY {
                    return Err(ParseError::msg("column too wide"));
                }
            }
            if width != arity {
                return Err(ParseError::msg(format!(
                    "column width {width} does not match arity {arity}"
                )));
            }
            cols.push(col);
        }
        Ok(Word::new(arity, cols))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cols.is_empty() {
            return write!(f, "ε");
        }
        for &c in &self.cols {
            f.write_str(&column_to_string(c, self.arity))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({self})")
    }
}

/// All-ones mask over the low `arity` bits.
#[inline]
pub fn column_mask(arity: usize) -> Column {
    if arity == 32 {
        u32::MAX
    } else {
        (1u32 << arity) - 1
    }
}

/// Evaluates a word to its tuple of naturals: component `j` is the number
/// spelled by row `j`. The empty word maps to the all-zero tuple.
pub fn eval_msd(w: &Word) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); w.arity];
    for &col in &w.cols {
        for (row, v) in out.iter_mut().enumerate() {
            *v <<= 1u32;
            if column_bit(col, row) {
                *v += 1u32;
            }
        }
    }
    out
}

/// Encodes a tuple as a word with at least `min_width` columns, padding with
/// leading zero columns.
pub fn encode_msd(values: &[BigUint], min_width: usize) -> Word {
    let arity = values.len();
    let bits = values.iter().map(|v| v.bits() as usize).max().unwrap_or(0);
    let width = bits.max(min_width);
    let mut cols = vec![0 as Column; width];
    for (row, v) in values.iter().enumerate() {
        for i in 0..v.bits() {
            if v.bit(i) {
                cols[width - 1 - i as usize] |= 1 << row;
            }
        }
    }
    Word::new(arity, cols)
}

/// Convenience for small values.
pub fn encode_u64(values: &[u64], min_width: usize) -> Word {
    let big: Vec<BigUint> = values.iter().map(|&v| BigUint::from(v)).collect();
    encode_msd(&big, min_width)
}
