//! Cylinder-weight oracles for probabilities on the one-sided shift.
//!
//! Every measure here is a finite-order chain read backward: the weight of
//! `[x_1 ... x_n]` is a product of transition factors over sliding windows of
//! length `r + 1`, closed by an end weight on the last `r` symbols. Bernoulli
//! measures are chains of order 0, Markov measures of order 1, and the
//! eigenprobabilities of the transfer operator of a memory-`k` potential are
//! chains of order `k - 1`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{LocalFunction, Potential};
use crate::symbolic::{index_of, Alphabet, Symbol, Word};

const STOCHASTIC_TOL: f64 = 1e-12;

/// `d x d` matrix with columns summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    d: usize,
    /// Row-major entries `P_{ij}`.
    entries: Vec<f64>,
}

impl StochasticMatrix {
    /// Builds from row-major entries, so `[0.3, 0.6, 0.7, 0.4]` has columns
    /// `(0.3, 0.7)` and `(0.6, 0.4)`.
    pub fn from_rows(d: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::Dimension { expected: d * d, got: entries.len() });
        }
        Alphabet::new(d)?;
        if let Some(&v) = entries.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Negative(v));
        }
        for j in 0..d {
            let sum: f64 = (0..d).map(|i| entries[i * d + j]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { column: j + 1, sum });
            }
        }
        Ok(StochasticMatrix { d, entries })
    }

    /// Random column-stochastic matrix with strictly positive entries.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let mut entries = vec![0.0; d * d];
        for j in 0..d {
            let col: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = col.iter().sum();
            for i in 0..d {
                entries[i * d + j] = col[i] / s;
            }
        }
        StochasticMatrix { d, entries }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Entry `P_{ij}` with 0-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn rows(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.entries[i * self.d..(i + 1) * self.d].iter().sum()
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        (0..self.d).all(|i| (self.row_sum(i) - 1.0).abs() <= STOCHASTIC_TOL)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    /// Strong connectivity of the graph with an edge `j -> i` when `P_{ij} > 0`.
    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.d];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(j) = stack.pop() {
                for i in 0..self.d {
                    let w = if forward { self.get(i, j) } else { self.get(j, i) };
                    if w > 0.0 && !seen[i] {
                        seen[i] = true;
                        stack.push(i);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach(true) && reach(false)
    }

    /// The probability vector with `Pπ = π`.
    pub fn stationary_vector(&self) -> Result<Vec<f64>> {
        if !self.is_irreducible() {
            return Err(Error::Reducible);
        }
        let d = self.d;
        let mut a = DMatrix::from_row_slice(d, d, &self.entries) - DMatrix::<f64>::identity(d, d);
        for j in 0..d {
            a[(d - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(d);
        b[d - 1] = 1.0;
        let lu = a.clone().lu();
        let mut pi = lu.solve(&b).ok_or(Error::Reducible)?;
        // one step of iterative refinement
        if let Some(corr) = lu.solve(&(&b - &a * &pi)) {
            pi += corr;
        }
        let pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
        let s: f64 = pi.iter().sum();
        Ok(pi.into_iter().map(|v| v / s).collect())
    }
}

/// How a measure was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Descriptor {
    Bernoulli,
    Markov,
    Thermo,
    Reweighted,
}

/// Backward chain of order `r`: for `n >= r`,
/// `weight(x_1..x_n) = Π_{i=1}^{n-r} trans(x_i..x_{i+r}) · end(x_{n-r+1}..x_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BlockChain {
    order: usize,
    trans: Vec<f64>,
    end: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Repr {
    Chain(BlockChain),
    Reweighted { base: Box<CylinderMeasure>, density: LocalFunction, scale: f64 },
}

/// Probability on `{1..d}^ℕ` given by its cylinder weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderMeasure {
    alphabet: Alphabet,
    descriptor: Descriptor,
    repr: Repr,
}

fn check_probability(p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    let min = p.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min >= 0.0) || (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::NotProbability { sum, min });
    }
    Ok(())
}

impl CylinderMeasure {
    /// Independent coordinates with law `p`.
    pub fn bernoulli(p: &[f64]) -> Result<Self> {
        let alphabet = Alphabet::new(p.len())?;
        check_probability(p)?;
        let chain = BlockChain { order: 0, trans: p.to_vec(), end: vec![1.0] };
        Ok(CylinderMeasure { alphabet, descriptor: Descriptor::Bernoulli, repr: Repr::Chain(chain) })
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let d = alphabet.size();
        Self::bernoulli(&vec![1.0 / d as f64; d]).expect("uniform vector is a probability")
    }

    /// Markov chain read backward from the last symbol:
    /// `weight(x_1..x_n) = P_{x_1 x_2} ··· P_{x_{n-1} x_n} · π_{x_n}`.
    ///
    /// The family is projective exactly when `Pπ = π`; otherwise each depth
    /// carries a probability but the depths are not marginals of each other.
    pub fn markov(p: &StochasticMatrix, pi: &[f64]) -> Result<Self> {
        if pi.len() != p.d() {
            return Err(Error::Dimension { expected: p.d(), got: pi.len() });
        }
        check_probability(pi)?;
        let chain = BlockChain { order: 1, trans: p.rows().to_vec(), end: pi.to_vec() };
        Ok(CylinderMeasure {
            alphabet: Alphabet::new(p.d())?,
            descriptor: Descriptor::Markov,
            repr: Repr::Chain(chain),
        })
    }

    /// Chain of order `k - 1` with transition factors `e^{A(w)}/λ` on length-`k`
    /// words and end weights `ell` on length-`(k-1)` words.
    pub(crate) fn gibbs_chain(a: &Potential, lambda: f64, ell: Vec<f64>) -> Self {
        let trans = a.values().iter().map(|v| v.exp() / lambda).collect();
        let chain = BlockChain { order: a.memory().saturating_sub(1), trans, end: ell };
        CylinderMeasure { alphabet: a.alphabet(), descriptor: Descriptor::Thermo, repr: Repr::Chain(chain) }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn descriptor(&self) -> Descriptor {
        self.descriptor
    }

    pub fn weight(&self, w: &Word) -> f64 {
        self.weight_symbols(w.symbols())
    }

    pub fn weight_symbols(&self, w: &[Symbol]) -> f64 {
        let d = self.alphabet.size();
        match &self.repr {
            Repr::Chain(c) => {
                let r = c.order;
                if w.len() >= r {
                    let n = w.len();
                    let body: f64 = (0..n - r).map(|i| c.trans[index_of(&w[i..=i + r], d)]).product();
                    body * c.end[index_of(&w[n - r..], d)]
                } else {
                    let base = index_of(w, d);
                    let span = d.pow((r - w.len()) as u32);
                    c.end[base * span..(base + 1) * span].iter().sum()
                }
            }
            Repr::Reweighted { base, density, scale } => {
                let m = density.level();
                if w.len() >= m {
                    density.eval_symbols(w) * base.weight_symbols(w) / scale
                } else {
                    let mut buf = w.to_vec();
                    let total =
                        sum_refinements(&mut buf, m, d, &mut |u| density.eval_symbols(u) * base.weight_symbols(u));
                    total / scale
                }
            }
        }
    }

    /// Weights of all words of length `n`, in index order.
    pub fn table(&self, n: usize) -> Vec<f64> {
        Word::all(self.alphabet, n).map(|w| self.weight(&w)).collect()
    }

    /// Largest `|weight(w) - Σ_a weight(wa)|` over words of length below `depth`.
    pub fn consistency_defect(&self, depth: usize) -> f64 {
        (0..depth)
            .flat_map(|n| Word::all(self.alphabet, n))
            .map(|w| {
                let children: f64 = self.alphabet.symbols().map(|a| self.weight(&w.extended(a))).sum();
                (self.weight(&w) - children).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Whether the weights at different depths are marginals of each other.
    pub fn is_projective(&self) -> bool {
        match &self.repr {
            Repr::Chain(c) => {
                let d = self.alphabet.size();
                let r = c.order;
                if r == 0 {
                    return (c.trans.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
                }
                let block = d.pow(r as u32 - 1);
                (0..self.alphabet.count(r)).all(|u| {
                    let next: f64 = (0..d).map(|a| c.trans[u * d + a] * c.end[(u % block) * d + a]).sum();
                    (next - c.end[u]).abs() <= 1e-12
                })
            }
            Repr::Reweighted { base, .. } => base.is_projective(),
        }
    }
}

/// Sums `f` over all extensions of `buf` to length `len`.
fn sum_refinements(buf: &mut Vec<Symbol>, len: usize, d: usize, f: &mut impl FnMut(&[Symbol]) -> f64) -> f64 {
    if buf.len() == len {
        return f(buf);
    }
    let mut total = 0.0;
    for digit in 0..d {
        buf.push(Symbol::from_digit(digit));
        total += sum_refinements(buf, len, d, f);
        buf.pop();
    }
    total
}

/// Finite-volume Gibbs weights with boundary condition `1^∞`:
/// `p(a_1..a_n) ∝ exp(-Σ_{j=1}^n φ(a_j..a_n 1^∞))`, tabulated over length-`n`
/// words and summing to one.
pub fn thermo_weights(phi: &Potential, n: usize) -> Result<LocalFunction> {
    if n < phi.memory() {
        return Err(Error::Level { level: n, need: phi.memory() });
    }
    let alphabet = phi.alphabet();
    let one = Symbol::from_digit(0);
    let k = phi.memory();
    let mut buf = Vec::with_capacity(n + k);
    let energies: Vec<f64> = Word::all(alphabet, n)
        .map(|w| {
            buf.clear();
            buf.extend_from_slice(w.symbols());
            buf.extend(std::iter::repeat(one).take(k));
            (0..n).map(|j| phi.eval_symbols(&buf[j..])).sum::<f64>()
        })
        .collect();
    let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|e| (-(e - emin)).exp()).collect();
    let z: f64 = raw.iter().sum();
    LocalFunction::new(alphabet, n, raw.into_iter().map(|v| v / z).collect())
}

/// The measure `v·μ`, divided by its total mass when `normalize` is set.
pub fn reweight(mu: &CylinderMeasure, v: &LocalFunction, normalize: bool) -> Result<CylinderMeasure> {
    if v.alphabet() != mu.alphabet() {
        return Err(Error::AlphabetMismatch(v.d(), mu.alphabet().size()));
    }
    if v.min() < 0.0 {
        return Err(Error::Negative(v.min()));
    }
    let scale = if normalize {
        let mass: f64 =
            Word::all(mu.alphabet(), v.level()).enumerate().map(|(i, w)| v.value_at(i) * mu.weight(&w)).sum();
        if mass <= 0.0 {
            return Err(Error::Invalid("reweighted measure has zero mass".into()));
        }
        mass
    } else {
        1.0
    };
    Ok(CylinderMeasure {
        alphabet: mu.alphabet(),
        descriptor: Descriptor::Reweighted,
        repr: Repr::Reweighted { base: Box::new(mu.clone()), density: v.clone(), scale },
    })
}
