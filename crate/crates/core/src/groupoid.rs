//! Equivalence relations with finite classes, Haar kernels, and functions on
//! the groupoid of related pairs.
//!
//! Every relation here lets the first `f` coordinates vary freely and fixes the
//! rest, so classes have `d^f` elements. At a word level `m >= f` a class is
//! named by its tail `x_{f+1}..x_m` and an element by its head `x_1..x_f`.
//! A word of length `m` has index `head · d^{m-f} + tail`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::LocalFunction;
use crate::symbolic::{Alphabet, Point, Symbol, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    /// `x ~ y` iff `x_i = y_i` for every `i >= 2`.
    BiggerThanTwo,
    /// `x ~ y` iff `x_i = y_i` for every `i > k`.
    KTail(usize),
    /// Eventual equality truncated to disagreements among the first `n`
    /// coordinates.
    EventuallyEqual(usize),
}

impl Relation {
    /// Number of leading coordinates that vary within a class.
    pub fn free(self) -> usize {
        match self {
            Relation::BiggerThanTwo => 1,
            Relation::KTail(k) | Relation::EventuallyEqual(k) => k,
        }
    }

    pub fn validate(self) -> Result<Self> {
        if self.free() == 0 {
            return Err(Error::Invalid("relation depth must be at least 1".into()));
        }
        Ok(self)
    }

    pub fn related(self, x: &Point, y: &Point) -> bool {
        let f = self.free();
        let span = x.head().len().max(y.head().len()) + 1;
        x.alphabet() == y.alphabet() && (f..span.max(f + 1)).all(|i| x.coord(i) == y.coord(i))
    }

    /// All points related to `p`, in head-index order. For truncated
    /// eventual equality the class is that of the truncation depth.
    pub fn fiber(self, p: &Point) -> Vec<Point> {
        let alphabet = p.alphabet();
        Word::all(alphabet, self.free()).map(|u| p.with_prefix(u.symbols())).collect()
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Relation::BiggerThanTwo => f.write_str("bigger-than-two"),
            Relation::KTail(k) => write!(f, "ktail:{k}"),
            Relation::EventuallyEqual(n) => write!(f, "eventually-equal:{n}"),
        }
    }
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let depth = || -> Result<usize> {
            arg.ok_or_else(|| Error::Parse(format!("relation {s:?} needs a depth")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad relation depth in {s:?}")))
        };
        match name {
            "bigger-than-two" => Ok(Relation::BiggerThanTwo),
            "ktail" => Relation::KTail(depth()?).validate(),
            "eventually-equal" => Relation::EventuallyEqual(depth()?).validate(),
            _ => Err(Error::Parse(format!("unknown relation {s:?}"))),
        }
    }
}

/// Haar system on a relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HaarKernel {
    /// Weight one on every element of the class.
    Counting,
    /// Weight `1/|class|` on every element.
    Normalized,
    /// Weight `Π_{i<f} J(σ^i s)` on `s`, a probability on each class when
    /// `Σ_a J(ax) = 1`.
    Jacobian(LocalFunction),
}

impl HaarKernel {
    /// Checks positivity and fiber normalization of a Jacobian.
    pub fn jacobian(j: LocalFunction) -> Result<Self> {
        if j.min() <= 0.0 {
            return Err(Error::NotPositive(j.min()));
        }
        let d = j.d();
        let level = j.level().max(1);
        let lifted = j.lift(level)?;
        let block = d.pow(level as u32 - 1);
        for t in 0..block {
            let mass: f64 = (0..d).map(|a| lifted.value_at(a * block + t)).sum();
            if (mass - 1.0).abs() > 1e-12 {
                return Err(Error::JacobianNotNormalized(mass));
            }
        }
        Ok(HaarKernel::Jacobian(j))
    }

    /// Coordinates read by the weight of an element.
    pub fn level(&self, rel: Relation) -> usize {
        match self {
            HaarKernel::Counting | HaarKernel::Normalized => 0,
            HaarKernel::Jacobian(j) => rel.free() + j.level().max(1) - 1,
        }
    }

    /// Weight of the element starting with `symbols`.
    pub fn weight_symbols(&self, rel: Relation, symbols: &[Symbol], d: usize) -> f64 {
        match self {
            HaarKernel::Counting => 1.0,
            HaarKernel::Normalized => 1.0 / d.pow(rel.free() as u32) as f64,
            HaarKernel::Jacobian(j) => (0..rel.free()).map(|i| j.eval_symbols(&symbols[i..])).product(),
        }
    }
}

impl fmt::Display for HaarKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaarKernel::Counting => f.write_str("counting"),
            HaarKernel::Normalized => f.write_str("normalized"),
            HaarKernel::Jacobian(_) => f.write_str("jacobian"),
        }
    }
}

/// A rule assigning to each point a weighted list over its class.
pub trait PointKernel {
    fn weights_at(&self, rel: Relation, p: &Point) -> Result<Vec<(Point, f64)>>;
}

impl PointKernel for HaarKernel {
    fn weights_at(&self, rel: Relation, p: &Point) -> Result<Vec<(Point, f64)>> {
        haar_weights(self, p, rel)
    }
}

/// Unit mass at the base point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeltaKernel;

impl PointKernel for DeltaKernel {
    fn weights_at(&self, rel: Relation, p: &Point) -> Result<Vec<(Point, f64)>> {
        Ok(rel
            .fiber(p)
            .into_iter()
            .map(|s| {
                let w = if &s == p { 1.0 } else { 0.0 };
                (s, w)
            })
            .collect())
    }
}

/// The class of `p` with its Haar weights.
pub fn haar_weights(kernel: &HaarKernel, p: &Point, rel: Relation) -> Result<Vec<(Point, f64)>> {
    let d = p.alphabet().size();
    let span = kernel.level(rel).max(rel.free());
    let out: Vec<(Point, f64)> = rel
        .fiber(p)
        .into_iter()
        .map(|s| {
            let w = kernel.weight_symbols(rel, s.cylinder_prefix(span).symbols(), d);
            (s, w)
        })
        .collect();
    if let HaarKernel::Jacobian(_) = kernel {
        let mass: f64 = out.iter().map(|(_, w)| w).sum();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(Error::JacobianNotNormalized(mass));
        }
    }
    Ok(out)
}

/// Outcome of a transversality check.
#[derive(Debug, Clone, PartialEq)]
pub enum Transversality {
    Transverse,
    /// `ν^x` and `ν^y` differ for this related pair.
    NotTransverse {
        x: Point,
        y: Point,
    },
}

/// Compares the measures `ν^x` and `ν^y` on every sampled related pair.
pub fn is_transverse<K: PointKernel + ?Sized>(
    kernel: &K,
    rel: Relation,
    samples: &[(Point, Point)],
) -> Result<Transversality> {
    for (x, y) in samples {
        if !rel.related(x, y) {
            return Err(Error::Unrelated);
        }
        let wx = kernel.weights_at(rel, x)?;
        let wy = kernel.weights_at(rel, y)?;
        let same = wx.iter().zip(&wy).all(|((sx, a), (sy, b))| sx == sy && (a - b).abs() <= 1e-12);
        if !same {
            return Ok(Transversality::NotTransverse { x: x.clone(), y: y.clone() });
        }
    }
    Ok(Transversality::Transverse)
}

/// Index arithmetic for words of length `level` grouped into classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    alphabet: Alphabet,
    relation: Relation,
    level: usize,
}

impl Layout {
    pub fn new(alphabet: Alphabet, relation: Relation, level: usize) -> Result<Self> {
        relation.validate()?;
        if level < relation.free() {
            return Err(Error::Level { level, need: relation.free() });
        }
        Ok(Layout { alphabet, relation, level })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn d(&self) -> usize {
        self.alphabet.size()
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn with_level(&self, level: usize) -> Result<Layout> {
        Layout::new(self.alphabet, self.relation, level)
    }

    /// Number of classes `d^{m-f}`.
    pub fn classes(&self) -> usize {
        self.alphabet.count(self.level - self.relation.free())
    }

    /// Elements per class `d^f`.
    pub fn class_size(&self) -> usize {
        self.alphabet.count(self.relation.free())
    }

    pub fn words(&self) -> usize {
        self.alphabet.count(self.level)
    }

    pub fn index(&self, head: usize, tail: usize) -> usize {
        head * self.classes() + tail
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.classes(), index % self.classes())
    }

    pub fn word(&self, head: usize, tail: usize) -> Word {
        Word::from_index(self.index(head, tail), self.level, self.d())
    }

    /// The word padded with the tail `1^∞`.
    pub fn point(&self, head: usize, tail: usize) -> Point {
        Point::from_symbols(self.alphabet, self.word(head, tail).symbols(), Symbol::from_digit(0))
    }

    /// Class tail at level `self.level` of a class tail at a deeper level.
    pub fn truncate_tail(&self, tail: usize, deeper: usize) -> usize {
        tail / self.d().pow((deeper - self.level) as u32)
    }
}

/// Complex function on related pairs of level-`m` words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupoidFunction {
    layout: Layout,
    /// `values[(t·s + x)·s + y] = f(x, y)` within class `t`.
    values: Vec<Complex64>,
}

impl GroupoidFunction {
    pub fn zeros(layout: Layout) -> Self {
        let s = layout.class_size();
        GroupoidFunction { layout, values: vec![Complex64::new(0.0, 0.0); layout.classes() * s * s] }
    }

    /// Builds from `f(tail, head_x, head_y)`.
    pub fn from_fn(layout: Layout, mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let s = layout.class_size();
        let mut values = Vec::with_capacity(layout.classes() * s * s);
        for t in 0..layout.classes() {
            for x in 0..s {
                for y in 0..s {
                    values.push(f(t, x, y));
                }
            }
        }
        GroupoidFunction { layout, values }
    }

    pub fn from_real(layout: Layout, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        Self::from_fn(layout, |t, x, y| Complex64::new(f(t, x, y), 0.0))
    }

    /// Indicator of the diagonal.
    pub fn identity(layout: Layout) -> Self {
        Self::from_real(layout, |_, x, y| if x == y { 1.0 } else { 0.0 })
    }

    pub fn constant(layout: Layout, c: Complex64) -> Self {
        Self::from_fn(layout, |_, _, _| c)
    }

    /// Diagonal function `g(x)·I_Δ` from a function on words.
    pub fn diagonal(layout: Layout, g: &LocalFunction) -> Result<Self> {
        if g.level() > layout.level() {
            return Err(Error::Level { level: layout.level(), need: g.level() });
        }
        let m = layout.level();
        Ok(Self::from_real(layout, |t, x, y| if x == y { g.eval_index(layout.index(x, t), m) } else { 0.0 }))
    }

    /// `I[x-prefix = u]·I[y-prefix = v]`, zero when `u`, `v` lie in different
    /// classes.
    pub fn indicator_pair(layout: Layout, u: usize, v: usize) -> Self {
        let (hu, tu) = layout.split(u);
        let (hv, tv) = layout.split(v);
        Self::from_real(layout, |t, x, y| if tu == tv && t == tu && x == hu && y == hv { 1.0 } else { 0.0 })
    }

    /// Entries with real and imaginary parts uniform in `-1..1`; imaginary
    /// parts are zero unless `complex` is set.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, layout: Layout, complex: bool) -> Self {
        Self::from_fn(layout, |_, _, _| {
            let re = rng.gen_range(-1.0..1.0);
            let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
            Complex64::new(re, im)
        })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn level(&self) -> usize {
        self.layout.level()
    }

    pub fn get(&self, tail: usize, x: usize, y: usize) -> Complex64 {
        let s = self.layout.class_size();
        self.values[(tail * s + x) * s + y]
    }

    pub fn set(&mut self, tail: usize, x: usize, y: usize, v: Complex64) {
        let s = self.layout.class_size();
        self.values[(tail * s + x) * s + y] = v;
    }

    /// Value on a pair of words of this level, `None` when unrelated.
    pub fn at(&self, x: &Word, y: &Word) -> Option<Complex64> {
        let d = self.layout.d();
        if x.len() != self.level() || y.len() != self.level() {
            return None;
        }
        let (hx, tx) = self.layout.split(x.index(d));
        let (hy, ty) = self.layout.split(y.index(d));
        (tx == ty).then(|| self.get(tx, hx, hy))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GroupoidFunction { layout: self.layout, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(GroupoidFunction { layout: self.layout, values })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Invalid(format!(
                "layouts differ: level {} on {} vs level {} on {}",
                self.level(),
                self.layout.relation(),
                other.level(),
                other.layout.relation()
            )));
        }
        Ok(())
    }

    /// The same function tabulated at a deeper level.
    pub fn lift(&self, level: usize) -> Result<Self> {
        let target = self.layout.with_level(level.max(self.level()))?;
        if level < self.level() {
            return Err(Error::Level { level, need: self.level() });
        }
        Ok(Self::from_fn(target, |t, x, y| self.get(self.layout.truncate_tail(t, level), x, y)))
    }

    /// Parses `wordx wordy re [im]` lines; missing pairs are zero.
    pub fn parse(text: &str, alphabet: Alphabet, relation: Relation) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if !(3..=4).contains(&parts.len()) {
                return Err(Error::Parse(format!("expected `wordx wordy re [im]`, got {line:?}")));
            }
            let x: Word = parts[0].parse()?;
            let y: Word = parts[1].parse()?;
            x.check(alphabet)?;
            y.check(alphabet)?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            let im = if parts.len() == 4 { num(parts[3])? } else { 0.0 };
            rows.push((x, y, Complex64::new(num(parts[2])?, im)));
        }
        let level = rows.iter().map(|(x, _, _)| x.len()).max().unwrap_or(relation.free()).max(relation.free());
        let layout = Layout::new(alphabet, relation, level)?;
        let mut f = Self::zeros(layout);
        for (x, y, v) in rows {
            if x.len() != level || y.len() != level {
                return Err(Error::Parse(format!("words {x} {y} must have length {level}")));
            }
            let (hx, tx) = layout.split(x.index(alphabet.size()));
            let (hy, ty) = layout.split(y.index(alphabet.size()));
            if tx != ty {
                return Err(Error::Unrelated);
            }
            f.set(tx, hx, hy, v);
        }
        Ok(f)
    }
}

impl fmt::Display for GroupoidFunction {
    /// Writes every related pair as `wordx wordy re im`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.layout.class_size();
        for t in 0..self.layout.classes() {
            for x in 0..s {
                for y in 0..s {
                    let v = self.get(t, x, y);
                    writeln!(f, "{} {} {} {}", self.layout.word(x, t), self.layout.word(y, t), v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}
