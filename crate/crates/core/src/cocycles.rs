//! Modular functions (multiplicative cocycles) `δ` on related pairs.
//!
//! Sign convention: `c(x, y) = φ(y) - φ(x)` and `δ(x, y) = e^{β(φ(y) - φ(x))}`.
//! A probability whose conditional law on each class is proportional to
//! `e^{-βφ}` is then quasi-invariant for `δ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{LocalFunction, Potential};
use crate::groupoid::{GroupoidFunction, Layout, Relation};
use crate::symbolic::Point;

/// Constants of a geometric tail estimate `C·Σ_{n>N} λ^{-nα}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBound {
    pub c: f64,
    pub alpha: f64,
    /// Expansion factor, must exceed 1.
    pub lambda: f64,
}

/// `C·Σ_{n>N} λ^{-nα} = C·λ^{-(N+1)α}/(1 - λ^{-α})`.
pub fn product_tail_bound(bound: HolderBound, n: usize) -> Result<f64> {
    if !(bound.lambda > 1.0) {
        return Err(Error::Contraction(bound.lambda));
    }
    if bound.c == 0.0 {
        return Ok(0.0);
    }
    let q = bound.lambda.powf(-bound.alpha);
    Ok(bound.c * q.powi(n as i32 + 1) / (1.0 - q))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CocycleKind {
    /// `δ(x, y) = e^{β(φ(y) - φ(x))}`.
    PotentialDiff { phi: LocalFunction },
    /// `δ(x, y) = e^{β(S_k A(y) - S_k A(x))}` with `S_k A = Σ_{j<k} A∘σ^j`.
    BirkhoffSum { a: Potential, k: usize },
    /// `δ(x, y) = Π_{j=0}^{N} e^{β(A(σ^j x) - A(σ^j y))}`.
    TruncatedProduct { a: Potential, terms: usize, holder: HolderBound },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cocycle {
    pub kind: CocycleKind,
    pub beta: f64,
}

impl Cocycle {
    pub fn potential_diff(phi: LocalFunction, beta: f64) -> Self {
        Cocycle { kind: CocycleKind::PotentialDiff { phi }, beta }
    }

    pub fn birkhoff_sum(a: Potential, k: usize, beta: f64) -> Self {
        Cocycle { kind: CocycleKind::BirkhoffSum { a, k }, beta }
    }

    pub fn truncated_product(a: Potential, terms: usize, holder: HolderBound, beta: f64) -> Self {
        Cocycle { kind: CocycleKind::TruncatedProduct { a, terms, holder }, beta }
    }

    /// `δ ≡ 1`.
    pub fn trivial(alphabet: crate::symbolic::Alphabet) -> Self {
        Self::potential_diff(LocalFunction::constant(alphabet, 0, 0.0), 0.0)
    }

    /// `log δ(x, y)`, without checking that the points are related.
    pub fn log_modular(&self, x: &Point, y: &Point) -> f64 {
        let b = self.beta;
        match &self.kind {
            CocycleKind::PotentialDiff { phi } => b * (phi.eval(y) - phi.eval(x)),
            CocycleKind::BirkhoffSum { a, k } => b * (birkhoff(a, y, *k) - birkhoff(a, x, *k)),
            CocycleKind::TruncatedProduct { a, terms, .. } => {
                b * (birkhoff(a, x, terms + 1) - birkhoff(a, y, terms + 1))
            }
        }
    }

    /// `δ(x, y)` for related points.
    pub fn modular_eval(&self, rel: Relation, x: &Point, y: &Point) -> Result<f64> {
        if !rel.related(x, y) {
            return Err(Error::Unrelated);
        }
        Ok(self.log_modular(x, y).exp())
    }

    /// `δ(x, y)` with the bound on `|log δ - log δ_true|` from truncation.
    pub fn modular_eval_with_bound(&self, rel: Relation, x: &Point, y: &Point) -> Result<(f64, f64)> {
        Ok((self.modular_eval(rel, x, y)?, self.tail_bound()?))
    }

    /// Truncation bound, zero for exact kinds.
    pub fn tail_bound(&self) -> Result<f64> {
        match &self.kind {
            CocycleKind::TruncatedProduct { terms, holder, .. } => {
                Ok(self.beta.abs() * product_tail_bound(*holder, *terms)?)
            }
            _ => Ok(0.0),
        }
    }

    /// Coordinates needed to evaluate `δ` on pairs related under `rel`.
    pub fn level(&self, rel: Relation) -> usize {
        let f = rel.free();
        match &self.kind {
            CocycleKind::PotentialDiff { phi } => phi.level(),
            CocycleKind::BirkhoffSum { a, k } => (*k).min(f) + a.memory().max(1) - 1,
            CocycleKind::TruncatedProduct { a, terms, .. } => (terms + 1).min(f) + a.memory().max(1) - 1,
        }
    }

    /// `δ` tabulated on related word pairs of a layout, words padded by `1^∞`.
    pub fn table(&self, layout: Layout) -> Result<GroupoidFunction> {
        let need = self.level(layout.relation());
        if layout.level() < need {
            return Err(Error::Level { level: layout.level(), need });
        }
        let s = layout.class_size();
        let mut out = GroupoidFunction::zeros(layout);
        for t in 0..layout.classes() {
            let pts: Vec<Point> = (0..s).map(|h| layout.point(h, t)).collect();
            for x in 0..s {
                for y in 0..s {
                    out.set(t, x, y, Complex64::new(self.log_modular(&pts[x], &pts[y]).exp(), 0.0));
                }
            }
        }
        Ok(out)
    }
}

fn birkhoff(a: &Potential, x: &Point, k: usize) -> f64 {
    let mut p = x.clone();
    let mut s = 0.0;
    for _ in 0..k {
        s += a.eval(&p);
        p = p.shift();
    }
    s
}
