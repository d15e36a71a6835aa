//! The Ruelle transfer operator `(L_A v)(x) = Σ_a e^{A(ax)} v(ax)` for
//! finite-memory potentials.
//!
//! For a potential of memory `k` the operator preserves functions of the first
//! `k - 1` coordinates, where it acts as a positive `d^{k-1}` square matrix.
//! Perron data of that matrix give the eigenvalue, the eigenfunction and,
//! through the left vector, the eigenprobability.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{LocalFunction, Potential};
use crate::measures::{reweight, CylinderMeasure};
use crate::symbolic::{Symbol, Word};

/// Power-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    pub max_steps: usize,
    /// Stop once successive eigenvalue estimates and iterates move less than
    /// this (relative to the eigenvalue for the former).
    pub tol: f64,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { max_steps: 100_000, tol: 1e-14 }
    }
}

/// Perron eigendata of `L_A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub lambda: f64,
    /// Positive eigenfunction of level `k - 1`, scaled so that `∫ h dm = 1`.
    pub eigfn: LocalFunction,
    /// Eigenprobability `m` with `L_A^* m = λ m`.
    pub eigmeasure: CylinderMeasure,
}

/// Applies `L_A` to a local function. The result has level
/// `max(k - 1, m - 1, 1)`.
pub fn apply_transfer(a: &Potential, v: &LocalFunction) -> Result<LocalFunction> {
    if a.alphabet() != v.alphabet() {
        return Err(Error::AlphabetMismatch(a.d(), v.d()));
    }
    let alphabet = a.alphabet();
    let level = a.memory().saturating_sub(1).max(v.level().saturating_sub(1)).max(1);
    let mut buf: Vec<Symbol> = Vec::with_capacity(level + 1);
    Ok(LocalFunction::from_fn(alphabet, level, |x| {
        alphabet
            .symbols()
            .map(|s| {
                buf.clear();
                buf.push(s);
                buf.extend_from_slice(x);
                a.eval_symbols(&buf).exp() * v.eval_symbols(&buf)
            })
            .sum()
    }))
}

/// Matrix of `L_A` on functions of the first `k - 1` coordinates:
/// `M[x][a x_1..x_{k-2}] = e^{A(a x)}`.
struct TransferMatrix {
    dim: usize,
    d: usize,
    /// `entries[x * d + a]` is the weight from state `x` to its `a`-preimage.
    weights: Vec<f64>,
}

impl TransferMatrix {
    fn new(a: &Potential) -> Self {
        let d = a.d();
        let r = a.memory().saturating_sub(1);
        let dim = d.pow(r as u32);
        let mut weights = vec![0.0; dim * d];
        for x in 0..dim {
            for s in 0..d {
                // word (s, x) of length k has index s·d^r + x
                weights[x * d + s] = a.value_at(s * dim + x).exp();
            }
        }
        TransferMatrix { dim, d, weights }
    }

    /// State reached from `x` by prepending `s` and dropping the last symbol.
    fn pre(&self, x: usize, s: usize) -> usize {
        if self.dim == 1 {
            0
        } else {
            s * (self.dim / self.d) + x / self.d
        }
    }

    fn apply(&self, h: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|x| (0..self.d).map(|s| self.weights[x * self.d + s] * h[self.pre(x, s)]).sum()).collect()
    }

    fn apply_transpose(&self, l: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for x in 0..self.dim {
            for s in 0..self.d {
                out[self.pre(x, s)] += self.weights[x * self.d + s] * l[x];
            }
        }
        out
    }
}

fn perron(step: impl Fn(&[f64]) -> Vec<f64>, dim: usize, ctl: PowerIteration) -> Result<(f64, Vec<f64>)> {
    let mut v = vec![1.0; dim];
    let mut lambda = 0.0;
    for _ in 0..ctl.max_steps {
        let w = step(&v);
        let norm = w.iter().copied().fold(0.0, f64::max);
        let w: Vec<f64> = w.into_iter().map(|x| x / norm).collect();
        let moved = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let settled = (norm - lambda).abs() < ctl.tol * norm && moved < ctl.tol;
        lambda = norm;
        v = w;
        if settled {
            return Ok((lambda, v));
        }
    }
    Err(Error::NonConvergence(ctl.max_steps))
}

/// Perron data with default iteration controls.
pub fn eigendata(a: &Potential) -> Result<EigenData> {
    eigendata_with(a, PowerIteration::default())
}

pub fn eigendata_with(a: &Potential, ctl: PowerIteration) -> Result<EigenData> {
    if a.memory() == 0 {
        return Err(Error::Invalid("potential must have memory at least 1".into()));
    }
    let m = TransferMatrix::new(a);
    let (lambda, h) = perron(|v| m.apply(v), m.dim, ctl)?;
    let (_, ell) = perron(|v| m.apply_transpose(v), m.dim, ctl)?;
    let mass: f64 = ell.iter().sum();
    let ell: Vec<f64> = ell.into_iter().map(|v| v / mass).collect();
    let pairing: f64 = h.iter().zip(&ell).map(|(a, b)| a * b).sum();
    let r = a.memory() - 1;
    let eigfn = LocalFunction::new(a.alphabet(), r, h.into_iter().map(|v| v / pairing).collect())?;
    let eigmeasure = CylinderMeasure::gibbs_chain(a, lambda, ell);
    Ok(EigenData { lambda, eigfn, eigmeasure })
}

impl EigenData {
    /// `‖L_A h - λh‖_∞`.
    pub fn residual(&self, a: &Potential) -> Result<f64> {
        let lh = apply_transfer(a, &self.eigfn)?;
        Ok(lh.zip_with(&self.eigfn, |x, y| (x - self.lambda * y).abs())?.max())
    }

    /// Largest `|∫ L_A u dm - λ ∫ u dm|` over indicators of level-`m` cylinders,
    /// both integrals summed exactly at depth `m + 1`.
    pub fn dual_residual(&self, a: &Potential, m: usize) -> Result<f64> {
        let alphabet = a.alphabet();
        let mut worst: f64 = 0.0;
        for u in Word::all(alphabet, m) {
            let lu = apply_transfer(a, &LocalFunction::indicator(alphabet, &u))?;
            let depth = (m + 1).max(lu.level());
            let lhs: f64 =
                self.eigmeasure.table(depth).iter().enumerate().map(|(i, w)| lu.eval_index(i, depth) * w).sum();
            let rhs = self.lambda * self.eigmeasure.weight(&u);
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }
}

/// `B = A + log h - log h∘σ - log λ`, which satisfies `L_B 1 = 1`.
pub fn normalize(a: &Potential) -> Result<Potential> {
    let eig = eigendata(a)?;
    coboundary_potential(a, &eig.eigfn, eig.lambda.ln())
}

/// `B = A + log h - log(h∘σ) - c`.
pub fn coboundary_potential(a: &Potential, h: &LocalFunction, c: f64) -> Result<Potential> {
    if h.min() <= 0.0 {
        return Err(Error::NotPositive(h.min()));
    }
    let log_h = h.map(f64::ln);
    let shifted = log_h.compose_shift();
    let level = a.memory().max(shifted.level());
    let a = a.lift(level)?;
    a.zip_with(&log_h, |x, y| x + y)?.zip_with(&shifted, |x, y| x - y - c)
}

/// Transfers a measure quasi-invariant for `A` along the coboundary
/// `B = A + log h - log(h∘σ) - c`. Returns `B` with the normalized measure
/// `h·M`.
pub fn coboundary_transfer(
    a: &Potential,
    m: &CylinderMeasure,
    h: &LocalFunction,
    c: f64,
) -> Result<(Potential, CylinderMeasure)> {
    let b = coboundary_potential(a, h, c)?;
    Ok((b, reweight(m, h, true)?))
}
