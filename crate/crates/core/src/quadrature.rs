//! Gauss-Legendre rules and composite panels on subintervals of `[0, 1]`.

use crate::error::{Error, Result};

/// Nodes and weights of a quadrature rule, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `n`-point Gauss-Legendre rule on `[lo, hi]`.
    ///
    /// Nodes come in mirrored pairs about the midpoint, so the rule is exact
    /// for polynomials of degree `< 2n` and symmetric under reflection.
    pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<Rule> {
        if n == 0 {
            return Err(Error::Invalid("quadrature order must be positive".into()));
        }
        let (x, w) = legendre_nodes(n);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        Ok(Rule { nodes: x.iter().map(|&t| mid + half * t).collect(), weights: w.iter().map(|&v| half * v).collect() })
    }

    /// `n` points per panel on `[0, split)` and `[split, 1)`.
    pub fn two_panel(n: usize, split: f64) -> Result<Rule> {
        if !(split > 0.0 && split < 1.0) {
            return Err(Error::Invalid(format!("panel split {split} outside (0, 1)")));
        }
        let mut left = Rule::gauss_legendre(n, 0.0, split)?;
        let right = Rule::gauss_legendre(n, split, 1.0)?;
        left.nodes.extend(right.nodes);
        left.weights.extend(right.weights);
        Ok(left)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Nodes and weights on `[-1, 1]` by Newton's method on `P_n`.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let step = p / d;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        if d.is_finite() {
            dp = d;
        }
        let weight = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `(P_n(t), P_n'(t))` by the three-term recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (t * p1 - p0) / (t * t - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_low_degree_polynomials() {
        for n in 1..12 {
            let r = Rule::gauss_legendre(n, 0.0, 1.0).unwrap();
            for k in 0..2 * n {
                let got = r.integrate(|x| x.powi(k as i32));
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn nodes_are_mirrored() {
        let r = Rule::gauss_legendre(7, -1.0, 1.0).unwrap();
        for i in 0..7 {
            assert_eq!(r.nodes[i], -r.nodes[6 - i]);
            assert_eq!(r.weights[i], r.weights[6 - i]);
        }
        assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn two_panel_examples() {
        let r = Rule::two_panel(64, 0.3).unwrap();
        assert_eq!(r.len(), 128);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let got = r.integrate(|x| (2.0 * std::f64::consts::PI * x).cos().powi(2));
        assert!((got - 0.5).abs() < 1e-14);
        assert!(Rule::two_panel(4, 1.0).is_err());
    }
}
