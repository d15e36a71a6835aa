//! The T-Baker map `F(a, b) = (ψ_j(a), T(b))` on the torus, `j` the branch
//! of `T` containing `b`, and its quasi-invariant fiber density.
//!
//! `F^{-n}(a, b)` has vertical coordinate `b^n`, the image of `b` under the
//! inverse branches selected by the `T`-itinerary of `a`. The same branches
//! applied to a reference point `b0` give `s^n`, and
//! `V(a, b) = Π_{n>=1} T'(b^n)/T'(s^n)`. The fiber density is
//! `ψ(a, b) = V(a, b)/∫V(a, c) dc`, in which `b0` cancels.

use rayon::prelude::*;
use serde::Serialize;

use crate::cocycles::{product_tail_bound, HolderBound};
use crate::error::{Error, Result};
use crate::kms::KmsReport;
use crate::quadrature::Rule;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_STEPS: usize = 200;

/// One of the two inverse branches: `First` onto `[0, x0)`, `Second` onto
/// `[x0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    First,
    Second,
}

impl Branch {
    pub fn index(self) -> usize {
        match self {
            Branch::First => 0,
            Branch::Second => 1,
        }
    }
}

/// Degree-two expanding map of the circle `[0, 1)`.
pub trait CircleMap: Sync {
    /// Increasing lift on `[0, 1]` with `lift(0) = 0` and `lift(1) = 2`.
    fn lift(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
    /// Branch point, `lift(x0) = 1`.
    fn x0(&self) -> f64;
    /// Lower bound `λ > 1` on `T'`.
    fn expansion(&self) -> f64;
    /// Lipschitz-Hölder constants of `log T'`, with `λ` the expansion bound.
    fn holder(&self) -> HolderBound;

    fn eval(&self, x: f64) -> f64 {
        let y = self.lift(x);
        let r = y - y.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    fn branch_of(&self, x: f64) -> Branch {
        if x < self.x0() {
            Branch::First
        } else {
            Branch::Second
        }
    }

    /// `ψ_j(y)`: Newton's method on the lift, with bisection whenever a step
    /// leaves the bracket.
    fn inverse_branch(&self, j: Branch, y: f64) -> Result<f64> {
        let target = y + j.index() as f64;
        let (mut lo, mut hi) = match j {
            Branch::First => (0.0, self.x0()),
            Branch::Second => (self.x0(), 1.0),
        };
        let mut x = lo + (hi - lo) * y;
        for _ in 0..NEWTON_STEPS {
            let g = self.lift(x) - target;
            if g.abs() <= NEWTON_TOL {
                let polished = x - g / self.derivative(x);
                return Ok(if (lo..=hi).contains(&polished) { polished } else { x });
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let next = x - g / self.derivative(x);
            x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
                return Ok(x);
            }
        }
        Err(Error::NonConvergence(NEWTON_STEPS))
    }
}

/// `T(x) = 2x mod 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoublingMap;

impl CircleMap for DoublingMap {
    fn lift(&self, x: f64) -> f64 {
        2.0 * x
    }
    fn derivative(&self, _: f64) -> f64 {
        2.0
    }
    fn x0(&self) -> f64 {
        0.5
    }
    fn expansion(&self) -> f64 {
        2.0
    }
    fn holder(&self) -> HolderBound {
        HolderBound { c: 0.0, alpha: 1.0, lambda: 2.0 }
    }
    fn inverse_branch(&self, j: Branch, y: f64) -> Result<f64> {
        Ok(0.5 * (y + j.index() as f64))
    }
}

/// `T(x) = 2x + (ε/2π) sin(2πx) mod 1` for `0 <= ε < 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineMap {
    eps: f64,
}

impl SineMap {
    pub fn new(eps: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&eps) {
            return Err(Error::Invalid(format!("perturbation {eps} outside [0, 0.5)")));
        }
        Ok(SineMap { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl CircleMap for SineMap {
    fn lift(&self, x: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        2.0 * x + self.eps / tau * (tau * x).sin()
    }
    fn derivative(&self, x: f64) -> f64 {
        2.0 + self.eps * (std::f64::consts::TAU * x).cos()
    }
    fn x0(&self) -> f64 {
        0.5
    }
    fn expansion(&self) -> f64 {
        2.0 - self.eps
    }
    fn holder(&self) -> HolderBound {
        let lambda = 2.0 - self.eps;
        HolderBound { c: std::f64::consts::TAU * self.eps / lambda, alpha: 1.0, lambda }
    }
}

/// A point `(a, b)` of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BakerState {
    pub a: f64,
    pub b: f64,
}

impl BakerState {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
            return Err(Error::Invalid(format!("({a}, {b}) outside [0, 1)^2")));
        }
        Ok(BakerState { a, b })
    }
}

/// `F(a, b) = (ψ_j(a), T(b))` with `j` the branch containing `b`.
pub fn baker_apply(map: &dyn CircleMap, z: BakerState) -> Result<BakerState> {
    let a = map.inverse_branch(map.branch_of(z.b), z.a)?;
    Ok(BakerState { a, b: map.eval(z.b) })
}

/// First `n` symbols of the `T`-itinerary of `a`.
pub fn itinerary(map: &dyn CircleMap, a: f64, n: usize) -> Vec<Branch> {
    let mut x = a;
    (0..n)
        .map(|_| {
            let j = map.branch_of(x);
            x = map.eval(x);
            j
        })
        .collect()
}

/// Successive preimages of `b` along the given branches.
pub fn preimages(map: &dyn CircleMap, branches: &[Branch], b: f64) -> Result<Vec<f64>> {
    let mut x = b;
    branches
        .iter()
        .map(|&j| {
            x = map.inverse_branch(j, x)?;
            Ok(x)
        })
        .collect()
}

/// `(b^n, s^n)` for `n = 1..=N`, the vertical coordinates of `F^{-n}(a, b)`
/// and of `F^{-n}(a, b0)`.
pub fn backward_fiber_orbit(map: &dyn CircleMap, z: BakerState, b0: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::Invalid("orbit length must be at least 1".into()));
    }
    let branches = itinerary(map, z.a, n);
    let bs = preimages(map, &branches, z.b)?;
    let ss = preimages(map, &branches, b0)?;
    Ok(bs.into_iter().zip(ss).collect())
}

/// `Σ_n log T'` along the preimages of `b`.
fn log_weight(map: &dyn CircleMap, branches: &[Branch], b: f64) -> Result<f64> {
    Ok(preimages(map, branches, b)?.iter().map(|&x| map.derivative(x).ln()).sum())
}

/// `V(a, b)` truncated after `n` factors, with the bound on the error in
/// `log V`.
pub fn v_product(map: &dyn CircleMap, z: BakerState, b0: f64, n: usize) -> Result<(f64, f64)> {
    let log_v: f64 =
        backward_fiber_orbit(map, z, b0, n)?.iter().map(|&(b, s)| (map.derivative(b) / map.derivative(s)).ln()).sum();
    Ok((log_v.exp(), product_tail_bound(map.holder(), n)?))
}

/// Normalized density on one fiber, identified by its itinerary.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    branches: Vec<Branch>,
    log_z: f64,
    /// `∫_{dom j} T'(u)² ψ(u) du` for each branch domain.
    panel_moment: [f64; 2],
    /// Relative change of the normalizer and moments when the order doubles.
    quad_err: f64,
}

impl Fiber {
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn panel_moment(&self, j: Branch) -> f64 {
        self.panel_moment[j.index()]
    }

    pub fn quad_err(&self) -> f64 {
        self.quad_err
    }

    /// Itinerary of `ψ_j(a)`: `j` followed by that of `a`, same length.
    pub fn image_branches(&self, j: Branch) -> Vec<Branch> {
        let mut out = Vec::with_capacity(self.branches.len());
        out.push(j);
        out.extend_from_slice(&self.branches[..self.branches.len().saturating_sub(1)]);
        out
    }
}

/// Truncated fiber densities of a map, integrated with a two-panel rule of
/// `order` points per branch domain.
pub struct BakerDensity<'m> {
    map: &'m dyn CircleMap,
    trunc: usize,
    rule: Rule,
    fine: Rule,
}

impl<'m> BakerDensity<'m> {
    pub fn new(map: &'m dyn CircleMap, trunc: usize, order: usize) -> Result<Self> {
        if trunc == 0 {
            return Err(Error::Invalid("truncation must be at least 1".into()));
        }
        let rule = Rule::two_panel(order, map.x0())?;
        let fine = Rule::two_panel(2 * order, map.x0())?;
        Ok(BakerDensity { map, trunc, rule, fine })
    }

    pub fn map(&self) -> &dyn CircleMap {
        self.map
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Nodes and weights of the fiber rule.
    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    /// Bound on the truncation error of `log ψ` ratios.
    pub fn tail_bound(&self) -> Result<f64> {
        product_tail_bound(self.map.holder(), self.trunc - 1)
    }

    pub fn fiber_at(&self, a: f64) -> Result<Fiber> {
        self.fiber(itinerary(self.map, a, self.trunc))
    }

    pub fn fiber(&self, branches: Vec<Branch>) -> Result<Fiber> {
        let (log_z, moment) = self.integrals(&branches, &self.rule)?;
        let (log_z2, moment2) = self.integrals(&branches, &self.fine)?;
        let quad_err = [(log_z - log_z2).exp_m1().abs(), rel(moment[0], moment2[0]), rel(moment[1], moment2[1])]
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Fiber { branches, log_z, panel_moment: moment, quad_err })
    }

    fn integrals(&self, branches: &[Branch], rule: &Rule) -> Result<(f64, [f64; 2])> {
        let logs = rule.nodes.iter().map(|&u| log_weight(self.map, branches, u)).collect::<Result<Vec<_>>>()?;
        let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        let mut moment = [0.0; 2];
        for ((&u, &w), &l) in rule.nodes.iter().zip(&rule.weights).zip(&logs) {
            let v = w * (l - shift).exp();
            z += v;
            moment[self.map.branch_of(u).index()] += v * self.map.derivative(u).powi(2);
        }
        Ok((shift + z.ln(), [moment[0] / z, moment[1] / z]))
    }

    /// `ψ(a, b)` on a prepared fiber.
    pub fn psi(&self, fiber: &Fiber, b: f64) -> Result<f64> {
        Ok((log_weight(self.map, &fiber.branches, b)? - fiber.log_z).exp())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Residuals of the functional equations at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub a: f64,
    pub b: f64,
    /// `ψ(a, b)`.
    pub psi: f64,
    /// `ψ(F(a, b))`.
    pub image_psi: f64,
    /// `|ψ(F(a,b)) - ψ(a,b)·T'(b)/∫_{dom j} T'² ψ(a, ·)|`.
    pub ali: f64,
    /// `|ψ(F(a,b)) - ψ(a,b)/T'(b)|`.
    pub printed: f64,
    /// `|ψ(F(a,b)) - ψ(a,b)·2/T'(b)|`.
    pub degree: f64,
    /// `|ψ(F(a,b)) - ψ(a,b)·T'(ã)/T'(b)|`, zero for the SBR density.
    pub sbr: f64,
}

/// Functional-equation residuals on the grid `{i/n} × {k/n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BakerGrid {
    pub n: usize,
    pub trunc: usize,
    pub order: usize,
    pub tail_bound: f64,
    pub quad_err: f64,
    pub points: Vec<GridPoint>,
}

/// Summary of a grid run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliReport {
    pub ali_residual: f64,
    pub ali_budget: f64,
    pub printed_residual: f64,
    pub degree_residual: f64,
    pub sbr_discrepancy: f64,
    pub psi_max: f64,
    pub tail_bound: f64,
    pub quad_err: f64,
    pub grid: usize,
    pub trunc: usize,
    pub order: usize,
}

impl AliReport {
    pub fn ali_within_budget(&self) -> bool {
        self.ali_residual <= self.ali_budget
    }
}

impl BakerGrid {
    pub fn compute(map: &dyn CircleMap, n: usize, trunc: usize, order: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("grid size must be positive".into()));
        }
        let dens = BakerDensity::new(map, trunc, order)?;
        let rows =
            (0..n).into_par_iter().map(|i| grid_row(&dens, i as f64 / n as f64, n)).collect::<Result<Vec<_>>>()?;
        let quad_err = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        Ok(BakerGrid {
            n,
            trunc,
            order,
            tail_bound: dens.tail_bound()?,
            quad_err,
            points: rows.into_iter().flat_map(|r| r.0).collect(),
        })
    }

    fn max_of(&self, f: impl Fn(&GridPoint) -> f64) -> f64 {
        self.points.iter().map(f).fold(0.0, f64::max)
    }

    pub fn psi_max(&self) -> f64 {
        self.max_of(|p| p.psi.max(p.image_psi))
    }

    /// `10·ψ_max·((e^{4τ} - 1) + quad_err) + 1e-12`.
    pub fn ali_budget(&self) -> f64 {
        10.0 * self.psi_max() * ((4.0 * self.tail_bound).exp_m1() + self.quad_err) + 1e-12
    }

    pub fn report(&self) -> AliReport {
        AliReport {
            ali_residual: self.max_of(|p| p.ali),
            ali_budget: self.ali_budget(),
            printed_residual: self.max_of(|p| p.printed),
            degree_residual: self.max_of(|p| p.degree),
            sbr_discrepancy: self.max_of(|p| p.sbr),
            psi_max: self.psi_max(),
            tail_bound: self.tail_bound,
            quad_err: self.quad_err,
            grid: self.n,
            trunc: self.trunc,
            order: self.order,
        }
    }
}

fn grid_row(dens: &BakerDensity<'_>, a: f64, n: usize) -> Result<(Vec<GridPoint>, f64)> {
    let map = dens.map();
    let fiber = dens.fiber_at(a)?;
    let images = [dens.fiber(fiber.image_branches(Branch::First))?, dens.fiber(fiber.image_branches(Branch::Second))?];
    let tilde = [map.inverse_branch(Branch::First, a)?, map.inverse_branch(Branch::Second, a)?];
    let quad_err = images.iter().map(Fiber::quad_err).fold(fiber.quad_err(), f64::max);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let b = k as f64 / n as f64;
        let j = map.branch_of(b);
        let psi = dens.psi(&fiber, b)?;
        let image_psi = dens.psi(&images[j.index()], map.eval(b))?;
        let dt = map.derivative(b);
        out.push(GridPoint {
            a,
            b,
            psi,
            image_psi,
            ali: (image_psi - psi * dt / fiber.panel_moment(j)).abs(),
            printed: (image_psi - psi / dt).abs(),
            degree: (image_psi - 2.0 * psi / dt).abs(),
            sbr: (image_psi - psi * map.derivative(tilde[j.index()]) / dt).abs(),
        });
    }
    Ok((out, quad_err))
}

/// Corrected functional-equation residual on an `n × n` grid.
pub fn density_residual_ali(map: &dyn CircleMap, n: usize, trunc: usize, order: usize) -> Result<AliReport> {
    Ok(BakerGrid::compute(map, n, trunc, order)?.report())
}

/// Largest SBR functional-equation residual of `ψ` on an `n × n` grid.
pub fn sbr_discrepancy(map: &dyn CircleMap, n: usize, trunc: usize, order: usize) -> Result<f64> {
    Ok(BakerGrid::compute(map, n, trunc, order)?.report().sbr_discrepancy)
}

/// Both sides of
/// `∫∫∫ f(a, s, b) ψ(a, b) ds db da = ∫∫∫ f(a, b, s) V(a, s)/V(a, b) ψ(a, b) ds db da`
/// by a tensor rule: `order` Gauss points in `a`, `order/2` per branch
/// domain in `b` and `s`.
pub fn baker_kms_residual(
    map: &dyn CircleMap,
    f: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    trunc: usize,
    order: usize,
    tol: f64,
) -> Result<KmsReport> {
    if order < 2 {
        return Err(Error::Invalid("quadrature order must be at least 2".into()));
    }
    let dens = BakerDensity::new(map, trunc, order / 2)?;
    let ra = Rule::gauss_legendre(order, 0.0, 1.0)?;
    let rb = dens.rule();
    let terms = ra
        .nodes
        .par_iter()
        .zip(&ra.weights)
        .map(|(&a, &wa)| -> Result<(f64, f64)> {
            let branches = itinerary(map, a, trunc);
            let logs = rb.nodes.iter().map(|&u| log_weight(map, &branches, u)).collect::<Result<Vec<_>>>()?;
            let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = rb.weights.iter().zip(&logs).map(|(w, l)| w * (l - shift).exp()).sum();
            // ψ(a, b)·V(a, s)/V(a, b) = ψ(a, s).
            let psi: Vec<f64> = logs.iter().map(|l| (l - shift).exp() / z).collect();
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for (ib, (&b, &wb)) in rb.nodes.iter().zip(&rb.weights).enumerate() {
                for (is, (&s, &ws)) in rb.nodes.iter().zip(&rb.weights).enumerate() {
                    lhs += wb * ws * psi[ib] * f(a, s, b);
                    rhs += wb * ws * psi[is] * f(a, b, s);
                }
            }
            Ok((wa * lhs, wa * rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs = terms.iter().map(|t| t.0).sum();
    let rhs = terms.iter().map(|t| t.1).sum();
    Ok(KmsReport::new("baker", lhs, rhs, trunc, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_apply_examples() {
        let m = DoublingMap;
        assert_eq!(baker_apply(&m, BakerState::new(0.5, 0.25).unwrap()).unwrap(), BakerState { a: 0.25, b: 0.5 });
        assert_eq!(baker_apply(&m, BakerState::new(0.5, 0.75).unwrap()).unwrap(), BakerState { a: 0.75, b: 0.5 });
    }

    #[test]
    fn doubling_orbit_examples() {
        let m = DoublingMap;
        let orbit = backward_fiber_orbit(&m, BakerState::new(0.0, 0.0).unwrap(), 0.0, 5).unwrap();
        assert!(orbit.iter().all(|&(b, s)| b == 0.0 && s == 0.0));
        let orbit = backward_fiber_orbit(&m, BakerState::new(0.1, 0.5).unwrap(), 0.0, 3).unwrap();
        assert_eq!(itinerary(&m, 0.1, 3), vec![Branch::First; 3]);
        for (n, &(b, _)) in orbit.iter().enumerate() {
            assert_eq!(b, 0.5 / 2f64.powi(n as i32 + 1));
        }
    }

    #[test]
    fn sine_branch_point_and_inverse() {
        let m = SineMap::new(0.2).unwrap();
        assert!((m.lift(m.x0()) - 1.0).abs() < 1e-15);
        for &y in &[0.0, 0.3, 0.999] {
            for j in [Branch::First, Branch::Second] {
                let x = m.inverse_branch(j, y).unwrap();
                assert!((m.eval(x) - y).abs() < 1e-12);
                assert_eq!(m.branch_of(x), j);
            }
        }
        assert!(SineMap::new(0.5).is_err());
    }

    #[test]
    fn v_product_examples() {
        let m = SineMap::new(0.2).unwrap();
        let z = BakerState::new(0.3, 0.7).unwrap();
        assert_eq!(v_product(&m, z, 0.7, 40).unwrap().0, 1.0);
        let (v, tail) = v_product(&DoublingMap, z, 0.1, 40).unwrap();
        assert_eq!((v, tail), (1.0, 0.0));
    }

    #[test]
    fn doubling_density_is_flat() {
        let r = density_residual_ali(&DoublingMap, 16, 8, 8).unwrap();
        assert!(r.ali_residual < 1e-12 && r.sbr_discrepancy < 1e-12 && r.degree_residual < 1e-12);
        assert!((r.printed_residual - 0.5).abs() < 1e-12);
        assert!((r.psi_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_test_function_balances() {
        let m = SineMap::new(0.2).unwrap();
        let r = baker_kms_residual(&m, &|a, b, s| a * (b + s), 10, 16, 1e-10).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
