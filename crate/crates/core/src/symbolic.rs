//! Symbols, words and eventually constant points of the one- and two-sided
//! full shift on `{1, ..., d}`.
//!
//! A [`Point`] stores a finite head followed by a constant tail. The head is
//! kept in canonical form (it never ends with the tail symbol), so structural
//! equality is equality of sequences.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Alphabet size `d`, between 2 and 255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(u8);

impl Alphabet {
    pub fn new(d: usize) -> Result<Self> {
        if (2..=255).contains(&d) {
            Ok(Alphabet(d as u8))
        } else {
            Err(Error::AlphabetSize(d))
        }
    }

    pub fn size(self) -> usize {
        self.0 as usize
    }

    /// Iterates the symbols `1..=d`.
    pub fn symbols(self) -> impl Iterator<Item = Symbol> {
        (1..=self.0).map(Symbol)
    }

    pub fn symbol(self, value: usize) -> Result<Symbol> {
        if value >= 1 && value <= self.size() {
            Ok(Symbol(value as u8))
        } else {
            Err(Error::SymbolRange { symbol: value, d: self.size() })
        }
    }

    /// Number of words of length `n`.
    pub fn count(self, n: usize) -> usize {
        self.size().pow(n as u32)
    }
}

/// A letter of the alphabet, stored 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(u8);

impl Symbol {
    /// Builds a symbol without checking it against an alphabet.
    pub const fn new_unchecked(value: u8) -> Self {
        Symbol(value)
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }

    /// Zero-based digit used for table indexing.
    pub fn digit(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_digit(digit: usize) -> Self {
        Symbol(digit as u8 + 1)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite, possibly empty, word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    /// Builds a word from 1-based values, checking them against `d`.
    pub fn from_values(alphabet: Alphabet, values: &[usize]) -> Result<Self> {
        values.iter().map(|&v| alphabet.symbol(v)).collect::<Result<Vec<_>>>().map(Word)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn push(&mut self, s: Symbol) {
        self.0.push(s);
    }

    /// The word followed by one more symbol.
    pub fn extended(&self, s: Symbol) -> Word {
        let mut w = self.clone();
        w.0.push(s);
        w
    }

    pub fn check(&self, alphabet: Alphabet) -> Result<()> {
        match self.0.iter().find(|s| s.value() > alphabet.size() || s.value() == 0) {
            Some(s) => Err(Error::SymbolRange { symbol: s.value(), d: alphabet.size() }),
            None => Ok(()),
        }
    }

    /// Position of the word among all words of its length, first symbol most
    /// significant.
    pub fn index(&self, d: usize) -> usize {
        index_of(&self.0, d)
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(index: usize, len: usize, d: usize) -> Word {
        let mut out = vec![Symbol(1); len];
        let mut rest = index;
        for slot in out.iter_mut().rev() {
            *slot = Symbol::from_digit(rest % d);
            rest /= d;
        }
        Word(out)
    }

    /// All words of length `n` in index order.
    pub fn all(alphabet: Alphabet, n: usize) -> impl Iterator<Item = Word> {
        let d = alphabet.size();
        (0..alphabet.count(n)).map(move |i| Word::from_index(i, n, d))
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, alphabet: Alphabet, len: usize) -> Word {
        Word((0..len).map(|_| Symbol(rng.gen_range(1..=alphabet.0))).collect())
    }
}

/// Index of a symbol slice among words of the same length.
pub fn index_of(symbols: &[Symbol], d: usize) -> usize {
    symbols.iter().fold(0, |acc, s| acc * d + s.digit())
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    /// Accepts dotted form `1.2.1`, or compact digits `121` for alphabets of
    /// at most nine symbols. The empty string and `-` give the empty word.
    fn from_str(s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(Word::empty());
        }
        let parse_one = |t: &str| -> Result<Symbol> {
            let v: usize = t.parse().map_err(|_| Error::Parse(format!("bad symbol {t:?}")))?;
            if v == 0 || v > 255 {
                return Err(Error::Parse(format!("symbol {v} out of range")));
            }
            Ok(Symbol(v as u8))
        };
        if s.contains('.') {
            s.split('.').map(parse_one).collect::<Result<Vec<_>>>().map(Word)
        } else {
            s.char_indices().map(|(i, _)| parse_one(&s[i..i + 1])).collect::<Result<Vec<_>>>().map(Word)
        }
    }
}

/// Eventually constant sequence `(head_0, ..., head_{m-1}, t, t, t, ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point {
    alphabet: Alphabet,
    head: Vec<Symbol>,
    tail: Symbol,
}

impl Point {
    pub fn new(alphabet: Alphabet, head: Word, tail: Symbol) -> Result<Self> {
        head.check(alphabet)?;
        Word(vec![tail]).check(alphabet)?;
        let mut p = Point { alphabet, head: head.0, tail };
        p.canonicalize();
        Ok(p)
    }

    /// The constant sequence `t, t, t, ...`.
    pub fn constant(alphabet: Alphabet, tail: Symbol) -> Self {
        Point { alphabet, head: Vec::new(), tail }
    }

    /// The word followed by the constant tail `tail`; symbols are assumed to
    /// lie in the alphabet.
    pub fn from_symbols(alphabet: Alphabet, head: &[Symbol], tail: Symbol) -> Self {
        let mut p = Point { alphabet, head: head.to_vec(), tail };
        p.canonicalize();
        p
    }

    fn canonicalize(&mut self) {
        while self.head.last() == Some(&self.tail) {
            self.head.pop();
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn head(&self) -> &[Symbol] {
        &self.head
    }

    pub fn tail(&self) -> Symbol {
        self.tail
    }

    /// Coordinate `i`, 0-based.
    pub fn coord(&self, i: usize) -> Symbol {
        self.head.get(i).copied().unwrap_or(self.tail)
    }

    pub fn shift(&self) -> Point {
        let head = if self.head.is_empty() { Vec::new() } else { self.head[1..].to_vec() };
        Point { alphabet: self.alphabet, head, tail: self.tail }
    }

    /// The point `(a, p_0, p_1, ...)`.
    pub fn prepend(&self, a: Symbol) -> Point {
        let mut head = Vec::with_capacity(self.head.len() + 1);
        head.push(a);
        head.extend_from_slice(&self.head);
        let mut p = Point { alphabet: self.alphabet, head, tail: self.tail };
        p.canonicalize();
        p
    }

    /// First `m` coordinates.
    pub fn cylinder_prefix(&self, m: usize) -> Word {
        Word((0..m).map(|i| self.coord(i)).collect())
    }

    /// Replaces the first `word.len()` coordinates.
    pub fn with_prefix(&self, word: &[Symbol]) -> Point {
        let len = word.len().max(self.head.len());
        let head: Vec<Symbol> = (0..len).map(|i| if i < word.len() { word[i] } else { self.coord(i) }).collect();
        Point::from_symbols(self.alphabet, &head, self.tail)
    }

    /// `2^{-N}` with `N` the first 0-based index of disagreement.
    pub fn metric(&self, other: &Point) -> Result<f64> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(self.alphabet.size(), other.alphabet.size()));
        }
        Ok(match self.first_disagreement(other) {
            None => 0.0,
            Some(n) => 0.5f64.powi(n as i32),
        })
    }

    /// First 0-based index where the sequences differ.
    pub fn first_disagreement(&self, other: &Point) -> Option<usize> {
        let span = self.head.len().max(other.head.len()) + 1;
        (0..span).find(|&i| self.coord(i) != other.coord(i))
    }

    /// Parses the text form `1.2|1` against a given alphabet.
    pub fn parse(s: &str, alphabet: Alphabet) -> Result<Point> {
        let (head, tail) = s.trim().split_once('|').ok_or_else(|| Error::Parse(format!("point {s:?} lacks '|'")))?;
        let head: Word = head.parse()?;
        let tail = Word::from_str(tail)?;
        if tail.len() != 1 {
            return Err(Error::Parse(format!("point {s:?} needs a single tail symbol")));
        }
        Point::new(alphabet, head, tail.0[0])
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, alphabet: Alphabet, max_head: usize) -> Point {
        let len = rng.gen_range(0..=max_head);
        let head = Word::random(rng, alphabet, len);
        let tail = Symbol(rng.gen_range(1..=alphabet.0));
        Point::from_symbols(alphabet, &head.0, tail)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", Word(self.head.clone()), self.tail)
    }
}

/// A point `<..., x_{-2}, x_{-1} | x_0, x_1, ...>` of the two-sided shift.
/// The past is stored read outward, so `past.coord(0)` is `x_{-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoSidedPoint {
    pub past: Point,
    pub future: Point,
}

impl TwoSidedPoint {
    pub fn new(past: Point, future: Point) -> Result<Self> {
        if past.alphabet != future.alphabet {
            return Err(Error::AlphabetMismatch(past.alphabet.size(), future.alphabet.size()));
        }
        Ok(TwoSidedPoint { past, future })
    }

    /// Coordinate `x_n` for any integer `n`.
    pub fn coord(&self, n: isize) -> Symbol {
        if n >= 0 {
            self.future.coord(n as usize)
        } else {
            self.past.coord((-n - 1) as usize)
        }
    }

    /// The left shift: `x_0` moves into the past.
    pub fn shift(&self) -> TwoSidedPoint {
        TwoSidedPoint { past: self.past.prepend(self.future.coord(0)), future: self.future.shift() }
    }

    /// `2^{-N}` with `N` the smallest `|n|` where the points differ; past
    /// coordinate `x_{-k}` counts as distance `k`.
    pub fn metric(&self, other: &TwoSidedPoint) -> Result<f64> {
        self.future.metric(&other.future)?;
        let f = self.future.first_disagreement(&other.future);
        let p = self.past.first_disagreement(&other.past).map(|k| k + 1);
        Ok(match (f, p) {
            (None, None) => 0.0,
            (a, b) => 0.5f64.powi(a.into_iter().chain(b).min().unwrap_or(0) as i32),
        })
    }

    /// Parses `past;future`, each in one-sided text form.
    pub fn parse(s: &str, alphabet: Alphabet) -> Result<TwoSidedPoint> {
        let (p, f) = s.split_once(';').ok_or_else(|| Error::Parse(format!("two-sided point {s:?} lacks ';'")))?;
        TwoSidedPoint::new(Point::parse(p, alphabet)?, Point::parse(f, alphabet)?)
    }
}

impl fmt::Display for TwoSidedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.past, self.future)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab(d: usize) -> Alphabet {
        Alphabet::new(d).unwrap()
    }

    fn pt(d: usize, head: &[usize], tail: usize) -> Point {
        let a = ab(d);
        Point::new(a, Word::from_values(a, head).unwrap(), a.symbol(tail).unwrap()).unwrap()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(pt(2, &[1, 2], 1).shift(), pt(2, &[2], 1));
        assert_eq!(pt(3, &[], 3).shift(), pt(3, &[], 3));
        assert_eq!(pt(2, &[2, 1, 1], 2).shift(), pt(2, &[1, 1], 2));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(pt(2, &[1, 2], 1).metric(&pt(2, &[1, 2], 1)).unwrap(), 0.0);
        assert_eq!(pt(2, &[], 1).metric(&pt(2, &[], 2)).unwrap(), 1.0);
        assert_eq!(pt(2, &[1, 2], 1).metric(&pt(2, &[], 1)).unwrap(), 0.5);
        assert!(pt(2, &[], 1).metric(&pt(3, &[], 1)).is_err());
    }

    #[test]
    fn prefix_and_prepend_examples() {
        let w = |v: &[usize]| Word::from_values(ab(3), v).unwrap();
        assert_eq!(pt(2, &[1, 2], 1).cylinder_prefix(4), w(&[1, 2, 1, 1]));
        assert_eq!(pt(2, &[], 2).cylinder_prefix(3), w(&[2, 2, 2]));
        assert_eq!(pt(2, &[2], 1).cylinder_prefix(1), w(&[2]));
        let s = |v: usize| ab(2).symbol(v).unwrap();
        assert_eq!(pt(2, &[], 1).prepend(s(1)), pt(2, &[], 1));
        assert_eq!(pt(2, &[], 1).prepend(s(2)), pt(2, &[2], 1));
        assert_eq!(pt(2, &[2], 2).prepend(s(1)), pt(2, &[1], 2));
    }

    #[test]
    fn canonical_form_absorbs_trailing_tail() {
        let p = pt(2, &[2, 1, 1, 1], 1);
        assert_eq!(p.head().len(), 1);
        assert_eq!(p.to_string(), "2|1");
    }

    #[test]
    fn text_round_trip() {
        let p = Point::parse("1.2|1", ab(2)).unwrap();
        assert_eq!(p, pt(2, &[1, 2], 1));
        assert_eq!(p.to_string(), "1.2|1");
        assert_eq!(Point::parse("|3", ab(3)).unwrap(), pt(3, &[], 3));
        assert!(Point::parse("1.3|1", ab(2)).is_err());
        assert!(Point::parse("1.2", ab(2)).is_err());
        assert_eq!("121".parse::<Word>().unwrap(), "1.2.1".parse::<Word>().unwrap());
    }

    #[test]
    fn word_index_round_trip() {
        let a = ab(3);
        for (i, w) in Word::all(a, 4).enumerate() {
            assert_eq!(w.index(3), i);
            assert_eq!(Word::from_index(i, 4, 3), w);
        }
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(1).is_err());
        assert!(Alphabet::new(256).is_err());
        assert_eq!(Alphabet::new(4).unwrap().count(3), 64);
    }

    #[test]
    fn two_sided_shift_moves_present_into_past() {
        let a = ab(2);
        let z = TwoSidedPoint::parse("2|1;1.2|2", a).unwrap();
        assert_eq!(z.coord(-1), a.symbol(2).unwrap());
        assert_eq!(z.coord(0), a.symbol(1).unwrap());
        let s = z.shift();
        assert_eq!(s.coord(-1), a.symbol(1).unwrap());
        assert_eq!(s.coord(-2), a.symbol(2).unwrap());
        assert_eq!(s.to_string(), "1.2|1;|2");
        let w = TwoSidedPoint::parse("1|1;1.2|2", a).unwrap();
        assert_eq!(z.metric(&w).unwrap(), 0.5);
    }
}
