//! Quasi-invariance (KMS) checks by exact finite summation.
//!
//! For a probability `μ`, a Haar kernel `ν` and a cocycle `δ`, the KMS
//! condition asks that for every test function `h` on related pairs
//!
//! ```text
//! ∫ Σ_s h(s, x) ν^x(s) dμ(x) = ∫ Σ_s h(x, s) δ(x, s)^{-1} ν^x(s) dμ(x).
//! ```
//!
//! When `h` depends on `m` coordinates and `μ` has exact cylinder weights,
//! both sides are finite sums over cylinders of any length `>= m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{convolve, state_eval, Kernel};
use crate::cocycles::Cocycle;
use crate::error::{Error, Result};
use crate::function::{LocalFunction, Potential};
use crate::groupoid::{GroupoidFunction, HaarKernel, Layout, Relation};
use crate::measures::{reweight, CylinderMeasure, StochasticMatrix};
use crate::ruelle::eigendata;
use crate::symbolic::{Alphabet, Point, Word};

/// Default absolute tolerance on exact sums.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Both sides of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmsReport {
    pub test: String,
    pub lhs: f64,
    pub rhs: f64,
    pub abs_residual: f64,
    pub rel_residual: f64,
    pub depth: usize,
    pub pass: bool,
}

impl KmsReport {
    /// Passes when `|lhs - rhs| <= tol`.
    pub fn new(test: impl Into<String>, lhs: f64, rhs: f64, depth: usize, tol: f64) -> Self {
        let abs_residual = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        let rel_residual = if scale > 0.0 { abs_residual / scale } else { 0.0 };
        KmsReport { test: test.into(), lhs, rhs, abs_residual, rel_residual, depth, pass: abs_residual <= tol }
    }
}

/// Largest absolute residual of a batch, zero when empty.
pub fn max_residual(reports: &[KmsReport]) -> f64 {
    reports.iter().map(|r| r.abs_residual).fold(0.0, f64::max)
}

/// A probability, Haar kernel, relation and cocycle under test.
#[derive(Debug, Clone, Copy)]
pub struct KmsSetup<'a> {
    pub measure: &'a CylinderMeasure,
    pub kernel: &'a HaarKernel,
    pub relation: Relation,
    pub cocycle: &'a Cocycle,
}

/// Per-depth tables shared by all test functions.
struct Prepared {
    layout: Layout,
    mu: Vec<f64>,
    /// Haar weight of each word.
    nu: Vec<f64>,
    /// `δ(x, s)^{-1}` per class, `[(t·s + x)·s + z]`.
    dinv: Vec<f64>,
}

impl<'a> KmsSetup<'a> {
    fn prepare(&self, depth: usize) -> Result<Prepared> {
        let alphabet = self.measure.alphabet();
        let layout = Layout::new(alphabet, self.relation, depth)?;
        let need = self.cocycle.level(self.relation).max(self.kernel.level(self.relation));
        if depth < need {
            return Err(Error::Level { level: depth, need });
        }
        let mu = self.measure.table(depth);
        let nu = Kernel::haar(self.kernel, layout)?;
        let delta = self.cocycle.table(layout)?;
        let s = layout.class_size();
        let mut nu_w = vec![0.0; layout.words()];
        let mut dinv = Vec::with_capacity(layout.classes() * s * s);
        for t in 0..layout.classes() {
            for x in 0..s {
                nu_w[layout.index(x, t)] = nu.get(t, 0, x);
                for z in 0..s {
                    dinv.push(1.0 / delta.get(t, x, z).re);
                }
            }
        }
        Ok(Prepared { layout, mu, nu: nu_w, dinv })
    }

    fn sums(&self, p: &Prepared, h: &GroupoidFunction) -> Result<(f64, f64)> {
        if h.layout().relation() != self.relation || h.layout().alphabet() != p.layout.alphabet() {
            return Err(Error::Invalid("test function lives on another relation".into()));
        }
        let depth = p.layout.level();
        if h.level() > depth {
            return Err(Error::Level { level: depth, need: h.level() });
        }
        let s = p.layout.class_size();
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for t in 0..p.layout.classes() {
            let th = h.layout().truncate_tail(t, depth);
            for x in 0..s {
                let mu = p.mu[p.layout.index(x, t)];
                if mu == 0.0 {
                    continue;
                }
                let (mut l, mut r) = (0.0, 0.0);
                for z in 0..s {
                    let nu = p.nu[p.layout.index(z, t)];
                    l += h.get(th, z, x).re * nu;
                    r += h.get(th, x, z).re * p.dinv[(t * s + x) * s + z] * nu;
                }
                lhs += l * mu;
                rhs += r * mu;
            }
        }
        Ok((lhs, rhs))
    }

    /// Both sides of the KMS identity for one test function at `depth`.
    pub fn residual(&self, test: &str, h: &GroupoidFunction, depth: usize, tol: f64) -> Result<KmsReport> {
        let p = self.prepare(depth)?;
        let (lhs, rhs) = self.sums(&p, h)?;
        Ok(KmsReport::new(test, lhs, rhs, depth, tol + self.cocycle.tail_bound()?))
    }

    /// Runs a whole family at one depth, in family order.
    pub fn residual_family(
        &self,
        family: &[(String, GroupoidFunction)],
        depth: usize,
        tol: f64,
    ) -> Result<Vec<KmsReport>> {
        let p = self.prepare(depth)?;
        let tol = tol + self.cocycle.tail_bound()?;
        family
            .par_iter()
            .map(|(name, h)| self.sums(&p, h).map(|(l, r)| KmsReport::new(name.clone(), l, r, depth, tol)))
            .collect()
    }
}

/// All rank-one indicators `I[x-prefix = u]·I[y-prefix = v]` over pairs of
/// level-`m` words; pairs in different classes give the zero function.
pub fn indicator_family(layout: Layout) -> Vec<(String, GroupoidFunction)> {
    let n = layout.words();
    let d = layout.d();
    let m = layout.level();
    let mut out = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            let name = format!("u={},v={}", Word::from_index(u, m, d), Word::from_index(v, m, d));
            out.push((name, GroupoidFunction::indicator_pair(layout, u, v)));
        }
    }
    out
}

/// The cocycle paired with the eigenprobability of `L_{-βφ}` on a relation:
/// the potential difference for one free coordinate, the Birkhoff sum of
/// length `f` otherwise.
pub fn gibbs_cocycle(phi: &Potential, beta: f64, rel: Relation) -> Cocycle {
    match rel {
        Relation::BiggerThanTwo => Cocycle::potential_diff(phi.clone(), beta),
        Relation::KTail(k) | Relation::EventuallyEqual(k) => Cocycle::birkhoff_sum(phi.clone(), k, beta),
    }
}

/// Checks that the eigenprobability of `L_{-βφ}` is quasi-invariant, with the
/// counting kernel, over the level-`level` indicator family at every depth.
pub fn verify_gibbs_quasi_invariance(
    phi: &Potential,
    beta: f64,
    rel: Relation,
    depths: &[usize],
    level: usize,
    tol: f64,
) -> Result<Vec<KmsReport>> {
    let mu = eigendata(&phi.map(|v| -beta * v))?.eigmeasure;
    let cocycle = gibbs_cocycle(phi, beta, rel);
    let kernel = HaarKernel::Counting;
    let setup = KmsSetup { measure: &mu, kernel: &kernel, relation: rel, cocycle: &cocycle };
    let family = indicator_family(Layout::new(phi.alphabet(), rel, level)?);
    let mut out = Vec::new();
    for &depth in depths {
        let mut batch = setup.residual_family(&family, depth, tol)?;
        for r in &mut batch {
            r.test = format!("gibbs/depth={depth}/{}", r.test);
        }
        out.extend(batch);
    }
    Ok(out)
}

/// A base measure and its reweighting, both checked on the same family.
#[derive(Debug, Clone, PartialEq)]
pub struct NonuniquenessWitness {
    pub base: Vec<KmsReport>,
    pub reweighted: Vec<KmsReport>,
    /// Largest cylinder-weight difference up to the check depth.
    pub max_gap: f64,
}

impl NonuniquenessWitness {
    pub fn all_pass(&self) -> bool {
        self.base.iter().chain(&self.reweighted).all(|r| r.pass)
    }
}

/// Checks a measure and `v·μ` (normalized) against the same KMS family, for
/// a density `v` that ignores the free coordinates of the relation.
pub fn nonuniqueness_witness(
    setup: KmsSetup<'_>,
    v: &LocalFunction,
    family: &[(String, GroupoidFunction)],
    depth: usize,
    tol: f64,
) -> Result<NonuniquenessWitness> {
    if !v.ignores_prefix(setup.relation.free()) {
        return Err(Error::DependsOnFirstCoordinate);
    }
    let nu = reweight(setup.measure, v, true)?;
    let base = setup.residual_family(family, depth, tol)?;
    let reweighted = KmsSetup { measure: &nu, ..setup }.residual_family(family, depth, tol)?;
    let alphabet = setup.measure.alphabet();
    let max_gap = (0..=depth)
        .flat_map(|n| Word::all(alphabet, n))
        .map(|w| (setup.measure.weight(&w) - nu.weight(&w)).abs())
        .fold(0.0, f64::max);
    Ok(NonuniquenessWitness { base, reweighted, max_gap })
}

/// The closing computation for a Markov measure started from `initial`,
/// with Jacobian `J(i, k) = P_{ik}` and indices 1-based.
///
/// The left side is `ρ̂([j0])`; the right side transports the cylinder
/// `[i0 k]` to `[j0 k]` through `J(j0, k)/J(i0, k)` and sums over `k`.
/// Since `ρ̂([i0 k]) = J(i0, k)·initial_k`, the right side is
/// `Σ_k P_{j0 k}·initial_k`.
pub fn markov_counterexample_with(
    p: &StochasticMatrix,
    initial: &[f64],
    i0: usize,
    j0: usize,
    tol: f64,
) -> Result<KmsReport> {
    let d = p.d();
    if !(1..=d).contains(&i0) || !(1..=d).contains(&j0) {
        return Err(Error::Invalid(format!("indices must lie in 1..={d}")));
    }
    let rho = CylinderMeasure::markov(p, initial)?;
    let alphabet = rho.alphabet();
    let lhs = rho.weight(&Word::from_values(alphabet, &[j0])?);
    let rhs: f64 = (0..d).map(|k| p.get(j0 - 1, k) * initial[k]).sum();
    Ok(KmsReport::new(format!("markov/i0={i0},j0={j0}"), lhs, rhs, 2, tol))
}

/// [`markov_counterexample_with`] from the uniform initial vector.
pub fn markov_counterexample(p: &StochasticMatrix, i0: usize, j0: usize, tol: f64) -> Result<KmsReport> {
    markov_counterexample_with(p, &vec![1.0 / p.d() as f64; p.d()], i0, j0, tol)
}

/// Extremes `(c1, c2)` of `ρ([x_1..x_m]) / exp(-P·m - Σ_{k=1}^m φ(σ^k x))`
/// over the sampled points and `0 <= m <= m_max`. Zero-weight cylinders are
/// skipped with a warning.
pub fn bowen_ratio(
    rho: &CylinderMeasure,
    phi: &Potential,
    pressure: f64,
    points: &[Point],
    m_max: usize,
) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in points {
        let mut sum = 0.0;
        let mut p = x.clone();
        for m in 0..=m_max {
            if m > 0 {
                p = p.shift();
                sum += phi.eval(&p);
            }
            let w = rho.weight(&x.cylinder_prefix(m));
            if w == 0.0 {
                log::warn!("skipping zero-weight cylinder {} at length {m}", x.cylinder_prefix(m));
                continue;
            }
            let ratio = w / (-pressure * m as f64 - sum).exp();
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    (lo, hi)
}

/// `e^{-βc}·f`, that is `f(x, y)/δ(x, y)`.
pub fn twist(f: &GroupoidFunction, coc: &Cocycle) -> Result<GroupoidFunction> {
    let delta = coc.table(f.layout())?;
    f.zip_with(&delta, |a, b| a / b)
}

/// Checks `w(g ∗ twist(f)) = w(f ∗ g)` for the state of `μ`.
pub fn twisted_trace_report(
    mu: &CylinderMeasure,
    nu: &Kernel,
    coc: &Cocycle,
    f: &GroupoidFunction,
    g: &GroupoidFunction,
    test: &str,
    tol: f64,
) -> Result<KmsReport> {
    let lhs = state_eval(mu, &convolve(g, &twist(f, coc)?, nu)?);
    let rhs = state_eval(mu, &convolve(f, g, nu)?);
    let abs = (lhs - rhs).norm();
    let mut r = KmsReport::new(test, lhs.re, rhs.re, f.level(), tol);
    r.abs_residual = abs;
    r.pass = abs <= tol;
    Ok(r)
}

/// Gibbs vector `ρ_i = e^{-βU_i} / Σ_j e^{-βU_j}`.
pub fn matrix_kms_state(u: &[f64], beta: f64) -> Vec<f64> {
    let m = u.iter().map(|&x| -beta * x).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = u.iter().map(|&x| (-beta * x - m).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

/// Real function on two-sided cylinders `<a|b>`: past word `a` (read
/// outward) of length `past`, future word `b` of length `future`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedTable {
    alphabet: Alphabet,
    past: usize,
    future: usize,
    values: Vec<f64>,
}

impl TwoSidedTable {
    pub fn from_fn(alphabet: Alphabet, past: usize, future: usize, mut f: impl FnMut(&Word, &Word) -> f64) -> Self {
        let mut values = Vec::with_capacity(alphabet.count(past) * alphabet.count(future));
        for a in Word::all(alphabet, past) {
            for b in Word::all(alphabet, future) {
                values.push(f(&a, &b));
            }
        }
        TwoSidedTable { alphabet, past, future, values }
    }

    fn eval(&self, a: usize, a_len: usize, b: usize, b_len: usize) -> f64 {
        let d = self.alphabet.size();
        let a = a / d.pow((a_len - self.past) as u32);
        let b = b / d.pow((b_len - self.future) as u32);
        self.values[a * self.alphabet.count(self.future) + b]
    }
}

/// Real function `f(<a|b>, <a|b'>)` on pairs with the same past.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedFunction {
    alphabet: Alphabet,
    past: usize,
    future: usize,
    values: Vec<f64>,
}

impl TwoSidedFunction {
    pub fn from_fn(
        alphabet: Alphabet,
        past: usize,
        future: usize,
        mut f: impl FnMut(&Word, &Word, &Word) -> f64,
    ) -> Self {
        let mut values = Vec::new();
        for a in Word::all(alphabet, past) {
            for b in Word::all(alphabet, future) {
                for c in Word::all(alphabet, future) {
                    values.push(f(&a, &b, &c));
                }
            }
        }
        TwoSidedFunction { alphabet, past, future, values }
    }

    fn eval(&self, a: usize, a_len: usize, b: usize, c: usize, b_len: usize) -> f64 {
        let d = self.alphabet.size();
        let nf = self.alphabet.count(self.future);
        let a = a / d.pow((a_len - self.past) as u32);
        let sh = d.pow((b_len - self.future) as u32);
        self.values[(a * nf + b / sh) * nf + c / sh]
    }
}

/// Two-sided quasi-invariance check for `M = e^V·(m ⊗ ν)` on the same-past
/// relation:
/// `∫∫ f(x, y) e^{V(x)} ν(dx) dM(y) = ∫∫ f(y, x) e^{V(x)} ν(dx) dM(y)`,
/// summed over past and future cylinders of length `depth`. `M` is normalized
/// to total mass one.
pub fn twosided_check(
    m: &CylinderMeasure,
    nu: &CylinderMeasure,
    v: &TwoSidedTable,
    f: &TwoSidedFunction,
    depth: usize,
    tol: f64,
) -> Result<KmsReport> {
    let alphabet = m.alphabet();
    if nu.alphabet() != alphabet || v.alphabet != alphabet || f.alphabet != alphabet {
        return Err(Error::AlphabetMismatch(alphabet.size(), nu.alphabet().size()));
    }
    let need = v.past.max(v.future).max(f.past).max(f.future);
    if depth < need {
        return Err(Error::Level { level: depth, need });
    }
    let past_w = m.table(depth);
    let fut_w = nu.table(depth);
    let n = alphabet.count(depth);
    let (mut lhs, mut rhs, mut mass) = (0.0, 0.0, 0.0);
    for a in 0..n {
        if past_w[a] == 0.0 {
            continue;
        }
        let ev: Vec<f64> = (0..n).map(|b| v.eval(a, depth, b, depth).exp() * fut_w[b]).collect();
        let (mut l, mut r, mut z) = (0.0, 0.0, 0.0);
        for y in 0..n {
            z += ev[y];
            for x in 0..n {
                let w = ev[x] * ev[y];
                l += f.eval(a, depth, x, y, depth) * w;
                r += f.eval(a, depth, y, x, depth) * w;
            }
        }
        lhs += l * past_w[a];
        rhs += r * past_w[a];
        mass += z * past_w[a];
    }
    Ok(KmsReport::new("twosided", lhs / mass, rhs / mass, depth, tol))
}
