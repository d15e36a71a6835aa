//! The convolution algebra of groupoid functions and the calculus of kernels.
//!
//! At a fixed level every class is a finite set, so a function on related
//! pairs is a family of square matrices `F_t[x][y] = f(x, y)` and a kernel is a
//! family of row-indexed weights `K_t[y][x] = λ^y(x)`. Convolution against a
//! transverse kernel with class weights `w` reads `G·diag(w)·F`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::cocycles::Cocycle;
use crate::error::{Error, Result};
use crate::function::LocalFunction;
use crate::groupoid::{GroupoidFunction, HaarKernel, Layout};
use crate::measures::CylinderMeasure;
use crate::symbolic::Word;

/// Family of measures `y -> λ^y` on the classes of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    layout: Layout,
    /// `values[(t·s + y)·s + x] = λ^y(x)` within class `t`.
    values: Vec<f64>,
}

impl Kernel {
    pub fn from_fn(layout: Layout, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let s = layout.class_size();
        let mut values = Vec::with_capacity(layout.classes() * s * s);
        for t in 0..layout.classes() {
            for y in 0..s {
                for x in 0..s {
                    values.push(f(t, y, x));
                }
            }
        }
        Kernel { layout, values }
    }

    /// A Haar system tabulated at `layout`.
    pub fn haar(kernel: &HaarKernel, layout: Layout) -> Result<Self> {
        let rel = layout.relation();
        let need = kernel.level(rel);
        if layout.level() < need {
            return Err(Error::Level { level: layout.level(), need });
        }
        let d = layout.d();
        let s = layout.class_size();
        let mut per_word = Vec::with_capacity(layout.words());
        for t in 0..layout.classes() {
            for h in 0..s {
                per_word.push(kernel.weight_symbols(rel, layout.word(h, t).symbols(), d));
            }
        }
        Ok(Self::from_fn(layout, |t, _, x| per_word[t * s + x]))
    }

    /// The delta kernel `𝔡^y = δ_y`.
    pub fn delta(layout: Layout) -> Self {
        Self::from_fn(layout, |_, y, x| if x == y { 1.0 } else { 0.0 })
    }

    /// Independent uniform weights in `lo..hi`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, layout: Layout, lo: f64, hi: f64) -> Self {
        Self::from_fn(layout, |_, _, _| rng.gen_range(lo..hi))
    }

    /// Random kernel with `ν^y` the same for every `y` in a class.
    pub fn random_transverse<R: Rng + ?Sized>(rng: &mut R, layout: Layout, lo: f64, hi: f64) -> Self {
        let s = layout.class_size();
        let w: Vec<f64> = (0..layout.classes() * s).map(|_| rng.gen_range(lo..hi)).collect();
        Self::from_fn(layout, |t, _, x| w[t * s + x])
    }

    /// Random kernel with every `λ^y` a probability.
    pub fn random_normalized<R: Rng + ?Sized>(rng: &mut R, layout: Layout) -> Self {
        Self::random(rng, layout, 0.05, 1.0).normalized()
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn get(&self, tail: usize, y: usize, x: usize) -> f64 {
        let s = self.layout.class_size();
        self.values[(tail * s + y) * s + x]
    }

    fn check_same(&self, other: &Kernel) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::Invalid("kernels live on different layouts".into()));
        }
        Ok(())
    }

    fn check_fn(&self, f: &GroupoidFunction) -> Result<()> {
        if self.layout != f.layout() {
            return Err(Error::Invalid("kernel and function live on different layouts".into()));
        }
        if !f.is_real() {
            return Err(Error::Invalid("kernel operations take real functions".into()));
        }
        Ok(())
    }

    /// Each `λ^y` divided by its mass.
    pub fn normalized(&self) -> Kernel {
        let s = self.layout.class_size();
        let mut values = self.values.clone();
        for row in values.chunks_mut(s) {
            let m: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= m);
        }
        Kernel { layout: self.layout, values }
    }

    /// Mass of `λ^y` for every word `y`, in word-index order.
    pub fn masses(&self) -> LocalFunction {
        let l = self.layout;
        let s = l.class_size();
        LocalFunction::from_fn(l.alphabet(), l.level(), |w| {
            let (h, t) = l.split(crate::symbolic::index_of(w, l.d()));
            (0..s).map(|x| self.get(t, h, x)).sum()
        })
    }

    pub fn is_transverse(&self) -> bool {
        let s = self.layout.class_size();
        (0..self.layout.classes())
            .all(|t| (1..s).all(|y| (0..s).all(|x| (self.get(t, y, x) - self.get(t, 0, x)).abs() <= 1e-12)))
    }

    /// `(λ1∗λ2)^y(s) = Σ_x λ1^y(x)·λ2^x(s)`.
    pub fn convolve(&self, other: &Kernel) -> Result<Kernel> {
        self.check_same(other)?;
        let s = self.layout.class_size();
        Ok(Kernel::from_fn(self.layout, |t, y, z| (0..s).map(|x| self.get(t, y, x) * other.get(t, x, z)).sum()))
    }

    /// `(fν)^y(x) = f(x, y)·ν^y(x)`.
    pub fn weighted(&self, f: &GroupoidFunction) -> Result<Kernel> {
        self.check_fn(f)?;
        Ok(Kernel::from_fn(self.layout, |t, y, x| f.get(t, x, y).re * self.get(t, y, x)))
    }

    /// `(hν)^y(x) = h(x)·ν^y(x)` for a function on words.
    pub fn weighted_by(&self, h: &LocalFunction) -> Result<Kernel> {
        let l = self.layout;
        let h = h.lift(l.level())?;
        Ok(Kernel::from_fn(l, |t, y, x| h.value_at(l.index(x, t)) * self.get(t, y, x)))
    }

    /// `ν(f)(y) = Σ_s f(s, y)·ν^y(s)`.
    pub fn integrate(&self, f: &GroupoidFunction) -> Result<LocalFunction> {
        self.check_fn(f)?;
        let l = self.layout;
        let s = l.class_size();
        Ok(LocalFunction::from_fn(l.alphabet(), l.level(), |w| {
            let (y, t) = l.split(crate::symbolic::index_of(w, l.d()));
            (0..s).map(|x| f.get(t, x, y).re * self.get(t, y, x)).sum()
        }))
    }

    /// `(ν∗f)(x, y) = Σ_s f(x, s)·ν^y(s)`.
    pub fn convolve_function(&self, f: &GroupoidFunction) -> Result<GroupoidFunction> {
        self.check_fn(f)?;
        let s = self.layout.class_size();
        Ok(GroupoidFunction::from_real(self.layout, |t, x, y| {
            (0..s).map(|z| f.get(t, x, z).re * self.get(t, y, z)).sum()
        }))
    }

    /// `(f∗ν)(x, y) = Σ_s f(s, y)·ν^x(s)`.
    pub fn function_convolve(&self, f: &GroupoidFunction) -> Result<GroupoidFunction> {
        self.check_fn(f)?;
        let s = self.layout.class_size();
        Ok(GroupoidFunction::from_real(self.layout, |t, x, y| {
            (0..s).map(|z| f.get(t, z, y).re * self.get(t, x, z)).sum()
        }))
    }

    pub fn max_abs_diff(&self, other: &Kernel) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// `(f ∗ g)(x, y) = Σ_s g(x, s)·f(s, y)·ν^y(s)` against a transverse kernel.
pub fn convolve(f: &GroupoidFunction, g: &GroupoidFunction, nu: &Kernel) -> Result<GroupoidFunction> {
    f.check_same(g)?;
    if nu.layout() != f.layout() {
        return Err(Error::Invalid("kernel and functions live on different layouts".into()));
    }
    let s = f.layout().class_size();
    Ok(GroupoidFunction::from_fn(f.layout(), |t, x, y| {
        (0..s).map(|z| g.get(t, x, z) * f.get(t, z, y) * nu.get(t, y, z)).sum()
    }))
}

/// `f~(x, y) = conj f(y, x)`.
pub fn involution(f: &GroupoidFunction) -> GroupoidFunction {
    GroupoidFunction::from_fn(f.layout(), |t, x, y| f.get(t, y, x).conj())
}

/// The I-norm: the larger of `sup_y Σ_x |f(x, y)| ν^y(x)` and
/// `sup_y Σ_x |f(y, x)| ν^y(x)`, over all classes of the level.
pub fn i_norm(f: &GroupoidFunction, nu: &Kernel) -> Result<f64> {
    let classes: Vec<usize> = (0..f.layout().classes()).collect();
    i_norm_on(f, nu, &classes)
}

/// The I-norm restricted to the listed class tails.
pub fn i_norm_on(f: &GroupoidFunction, nu: &Kernel, classes: &[usize]) -> Result<f64> {
    if nu.layout() != f.layout() {
        return Err(Error::Invalid("kernel and function live on different layouts".into()));
    }
    let s = f.layout().class_size();
    let mut best: f64 = 0.0;
    for &t in classes {
        for y in 0..s {
            let col: f64 = (0..s).map(|x| f.get(t, x, y).norm() * nu.get(t, y, x)).sum();
            let row: f64 = (0..s).map(|x| f.get(t, y, x).norm() * nu.get(t, y, x)).sum();
            best = best.max(col).max(row);
        }
    }
    Ok(best)
}

/// Verdict of the positivity test on one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Positivity {
    Positive {
        min_eigenvalue: f64,
    },
    NotPositive {
        min_eigenvalue: f64,
    },
    /// The fiber matrix is not Hermitian; `asymmetry` is `max |H - H^*|`.
    NotHermitian {
        asymmetry: f64,
    },
}

impl Positivity {
    pub fn is_positive(self) -> bool {
        matches!(self, Positivity::Positive { .. })
    }
}

/// Tests whether the fiber matrix `H[x][y] = h(x, y)` of class `tail` is
/// Hermitian positive semidefinite for the kernel weighting, that is whether
/// `W^{1/2} H W^{1/2}` has no eigenvalue below `-1e-10`.
pub fn is_positive(h: &GroupoidFunction, nu: &Kernel, tail: usize) -> Result<Positivity> {
    if !nu.is_transverse() {
        return Err(Error::Invalid("positivity needs a transverse kernel".into()));
    }
    let s = h.layout().class_size();
    let mut asym: f64 = 0.0;
    for x in 0..s {
        for y in 0..s {
            asym = asym.max((h.get(tail, x, y) - h.get(tail, y, x).conj()).norm());
        }
    }
    if asym > 1e-12 {
        return Ok(Positivity::NotHermitian { asymmetry: asym });
    }
    let w: Vec<f64> = (0..s).map(|x| nu.get(tail, 0, x).sqrt()).collect();
    let m = DMatrix::<Complex64>::from_fn(s, s, |x, y| h.get(tail, x, y) * w[x] * w[y]);
    let eig = m.symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min >= -1e-10 {
        Positivity::Positive { min_eigenvalue: min }
    } else {
        Positivity::NotPositive { min_eigenvalue: min }
    })
}

/// `w(f) = Σ_{|x|=m} f(x, x)·μ(x)`.
pub fn state_eval(mu: &CylinderMeasure, f: &GroupoidFunction) -> Complex64 {
    let l = f.layout();
    Word::all(l.alphabet(), l.level())
        .enumerate()
        .map(|(i, w)| {
            let (h, t) = l.split(i);
            f.get(t, h, h) * mu.weight(&w)
        })
        .sum()
}

/// A probability together with a modular function; it defines the linear
/// functional `Λ(ν) = ∫ Σ_s δ(s, x)^{-1} ν^x(s) dμ(x)` on kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseMeasure {
    pub mu: CylinderMeasure,
    pub delta: Cocycle,
}

impl TransverseMeasure {
    pub fn new(mu: CylinderMeasure, delta: Cocycle) -> Self {
        TransverseMeasure { mu, delta }
    }

    /// `Λ(ν)` summed exactly over cylinders of length `depth`.
    pub fn eval(&self, nu: &Kernel, depth: usize) -> Result<f64> {
        let l = nu.layout();
        if depth < l.level() {
            return Err(Error::Level { level: depth, need: l.level() });
        }
        let deep = l.with_level(depth)?;
        let delta = self.delta.table(deep)?;
        let s = l.class_size();
        let weights = self.mu.table(depth);
        let mut total = 0.0;
        for t in 0..deep.classes() {
            let tt = l.truncate_tail(t, depth);
            for x in 0..s {
                let inner: f64 = (0..s).map(|z| nu.get(tt, x, z) / delta.get(t, z, x).re).sum();
                total += inner * weights[deep.index(x, t)];
            }
        }
        Ok(total)
    }

    /// `Λ_ν(h) = Λ(hν)`.
    pub fn eval_with(&self, nu: &Kernel, h: &LocalFunction, depth: usize) -> Result<f64> {
        self.eval(&nu.weighted_by(h)?, depth)
    }

    /// The kernel `(δλ)^x(s) = δ(s, x)·λ^x(s)`.
    pub fn modular_kernel(&self, lambda: &Kernel) -> Result<Kernel> {
        let l = lambda.layout();
        let delta = self.delta.table(l)?;
        Ok(Kernel::from_fn(l, |t, x, z| delta.get(t, z, x).re * lambda.get(t, x, z)))
    }
}
