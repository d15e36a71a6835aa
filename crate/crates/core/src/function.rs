//! Real functions on the shift space that depend on finitely many coordinates.
//!
//! A [`LocalFunction`] of level `m` is a table over the `d^m` words of length
//! `m`, indexed with the first symbol most significant. A finite-memory
//! potential is the same object, so [`Potential`] is an alias.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{index_of, Alphabet, Point, Symbol, Word};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFunction {
    alphabet: Alphabet,
    level: usize,
    values: Vec<f64>,
}

/// A potential `A(x_1, ..., x_k)` of memory `k`.
pub type Potential = LocalFunction;

impl LocalFunction {
    pub fn new(alphabet: Alphabet, level: usize, values: Vec<f64>) -> Result<Self> {
        let expected = alphabet.count(level);
        if values.len() != expected {
            return Err(Error::Dimension { expected, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite table entry {v}")));
        }
        Ok(LocalFunction { alphabet, level, values })
    }

    pub fn constant(alphabet: Alphabet, level: usize, c: f64) -> Self {
        LocalFunction { alphabet, level, values: vec![c; alphabet.count(level)] }
    }

    pub fn from_fn(alphabet: Alphabet, level: usize, mut f: impl FnMut(&[Symbol]) -> f64) -> Self {
        let values = Word::all(alphabet, level).map(|w| f(w.symbols())).collect();
        LocalFunction { alphabet, level, values }
    }

    /// Indicator of the cylinder `[w]`.
    pub fn indicator(alphabet: Alphabet, w: &Word) -> Self {
        Self::from_fn(alphabet, w.len(), |s| if s == w.symbols() { 1.0 } else { 0.0 })
    }

    /// Uniform random table with entries in `lo..hi`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, alphabet: Alphabet, level: usize, lo: f64, hi: f64) -> Self {
        let values = (0..alphabet.count(level)).map(|_| rng.gen_range(lo..hi)).collect();
        LocalFunction { alphabet, level, values }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn d(&self) -> usize {
        self.alphabet.size()
    }

    /// Number of leading coordinates the function reads.
    pub fn level(&self) -> usize {
        self.level
    }

    /// Alias of [`LocalFunction::level`] for potentials.
    pub fn memory(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Value on the sequence starting with `symbols`; only the first
    /// `level` entries are read.
    pub fn eval_symbols(&self, symbols: &[Symbol]) -> f64 {
        self.values[index_of(&symbols[..self.level], self.d())]
    }

    pub fn eval(&self, p: &Point) -> f64 {
        let d = self.d();
        let idx = (0..self.level).fold(0, |acc, i| acc * d + p.coord(i).digit());
        self.values[idx]
    }

    /// Value on a word of length `n >= level` given by its index.
    pub fn eval_index(&self, index: usize, n: usize) -> f64 {
        self.values[index / self.d().pow((n - self.level) as u32)]
    }

    /// Same function tabulated at a deeper level.
    pub fn lift(&self, level: usize) -> Result<LocalFunction> {
        if level < self.level {
            return Err(Error::Level { level, need: self.level });
        }
        let values = (0..self.alphabet.count(level)).map(|i| self.eval_index(i, level)).collect();
        Ok(LocalFunction { alphabet: self.alphabet, level, values })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LocalFunction {
        LocalFunction {
            alphabet: self.alphabet,
            level: self.level,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination, lifting both to the larger level.
    pub fn zip_with(&self, other: &LocalFunction, f: impl Fn(f64, f64) -> f64) -> Result<LocalFunction> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(self.d(), other.d()));
        }
        let level = self.level.max(other.level);
        let values =
            (0..self.alphabet.count(level)).map(|i| f(self.eval_index(i, level), other.eval_index(i, level))).collect();
        Ok(LocalFunction { alphabet: self.alphabet, level, values })
    }

    /// The function `x -> self(σx)`.
    pub fn compose_shift(&self) -> LocalFunction {
        let d = self.d();
        let level = self.level + 1;
        let block = d.pow(self.level as u32);
        let values = (0..self.alphabet.count(level)).map(|i| self.values[i % block]).collect();
        LocalFunction { alphabet: self.alphabet, level, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &LocalFunction) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| (a - b).abs())?.max())
    }

    /// True when the value does not depend on the first `k` coordinates.
    pub fn ignores_prefix(&self, k: usize) -> bool {
        if k == 0 {
            return true;
        }
        let level = self.level.max(k);
        let d = self.d();
        let block = d.pow((level - k) as u32);
        (0..block).all(|t| {
            let first = self.eval_index(t, level);
            (1..d.pow(k as u32)).all(|h| self.eval_index(h * block + t, level) == first)
        })
    }

    /// Parses `word value` lines; blank lines and `#` comments are skipped.
    /// Every word of the common length must appear exactly once.
    pub fn parse_table(text: &str, alphabet: Alphabet) -> Result<LocalFunction> {
        let mut entries: Vec<(Word, f64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(w), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("expected `word value`, got {line:?}")));
            };
            let word: Word = w.parse()?;
            word.check(alphabet)?;
            let value: f64 = v.parse().map_err(|_| Error::Parse(format!("bad value {v:?}")))?;
            entries.push((word, value));
        }
        let level = entries.first().map(|(w, _)| w.len()).unwrap_or(0);
        let mut values = vec![f64::NAN; alphabet.count(level)];
        for (w, v) in entries {
            if w.len() != level {
                return Err(Error::Parse(format!("word {w} has length {}, expected {level}", w.len())));
            }
            let slot = &mut values[w.index(alphabet.size())];
            if !slot.is_nan() {
                return Err(Error::Parse(format!("word {w} listed twice")));
            }
            *slot = v;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("table is incomplete".into()));
        }
        LocalFunction::new(alphabet, level, values)
    }
}

impl fmt::Display for LocalFunction {
    /// Writes the `word value` table form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, v) in Word::all(self.alphabet, self.level).zip(&self.values) {
            writeln!(f, "{w} {v}")?;
        }
        Ok(())
    }
}
