//! One-dimensional Gauss-Lobatto-Legendre machinery on the reference
//! interval `[-1, 1]`: nodes and weights, the nodal (Lagrange) basis, the
//! edge basis whose DOFs are integrals between consecutive nodes, their mass
//! matrices, and the dual bases obtained through the inverse mass matrices.
//!
//! Edge functions are defined analytically as `e_i = -sum_{k<i} h_k'`, so the
//! derivative of a nodal expansion is exactly the edge expansion of the
//! consecutive differences of its coefficients.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, legendre, QuadratureRule};

/// GLL nodes and weights of polynomial degree `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct GllRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GllRule {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn as_quadrature(&self) -> QuadratureRule {
        QuadratureRule {
            points: self.nodes.clone(),
            weights: self.weights.clone(),
        }
    }
}

/// Roots of `(1 - x^2) L_N'(x)` with the matching Lobatto weights.
pub fn gll_rule(order: usize) -> Result<GllRule> {
    if order < 1 {
        return Err(Error::InvalidOrder { order, min: 1 });
    }
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // interior nodes are the roots of L_N'; Newton with L_N'' from the Legendre ODE
    for i in 1..n {
        let mut x = -(PI * i as f64 / nf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let ddp = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = x;
    }
    for i in 0..=n / 2 {
        let sym = 0.5 * (nodes[n - i] - nodes[i]);
        nodes[i] = -sym;
        nodes[n - i] = sym;
    }
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok(GllRule {
        order,
        nodes,
        weights,
    })
}

/// Basis functions evaluated on a set of points, one row per point.
#[derive(Debug, Clone)]
pub struct Tabulation {
    /// `h_i(x_q)`, `(n_points, N + 1)`.
    pub nodal: DMatrix<f64>,
    /// `h_i'(x_q)`, `(n_points, N + 1)`.
    pub nodal_deriv: DMatrix<f64>,
    /// `e_i(x_q)` for `i = 1..=N`, stored in column `i - 1`, `(n_points, N)`.
    pub edge: DMatrix<f64>,
}

/// Nodal, edge and dual bases of one reference interval.
#[derive(Debug, Clone)]
pub struct Basis1D {
    rule: GllRule,
    // prod_{m != i} (x_i - x_m)
    denominators: Vec<f64>,
    m0: DMatrix<f64>,
    m1: DMatrix<f64>,
    m0_inv: DMatrix<f64>,
    m1_inv: DMatrix<f64>,
}

impl Basis1D {
    pub fn new(order: usize) -> Result<Self> {
        let rule = gll_rule(order)?;
        let x = &rule.nodes;
        let denominators = (0..=order)
            .map(|i| {
                (0..=order)
                    .filter(|&m| m != i)
                    .map(|m| x[i] - x[m])
                    .product()
            })
            .collect();
        let mut basis = Basis1D {
            rule,
            denominators,
            m0: DMatrix::zeros(0, 0),
            m1: DMatrix::zeros(0, 0),
            m0_inv: DMatrix::zeros(0, 0),
            m1_inv: DMatrix::zeros(0, 0),
        };
        // degree of exactness 2N + 3 >= 2N + 2
        let quad = gauss_legendre(order + 2);
        let tab = basis.tabulate(&quad.points);
        basis.m0 = gram(&tab.nodal, &quad.weights);
        basis.m1 = gram(&tab.edge, &quad.weights);
        basis.m0_inv = spd_inverse(&basis.m0);
        basis.m1_inv = spd_inverse(&basis.m1);
        Ok(basis)
    }

    pub fn order(&self) -> usize {
        self.rule.order
    }

    pub fn rule(&self) -> &GllRule {
        &self.rule
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    /// Nodal mass matrix `M0[i][j] = int h_i h_j`.
    pub fn m0(&self) -> &DMatrix<f64> {
        &self.m0
    }

    /// Edge mass matrix `M1[i][j] = int e_i e_j`, indices shifted by one.
    pub fn m1(&self) -> &DMatrix<f64> {
        &self.m1
    }

    pub fn m0_inv(&self) -> &DMatrix<f64> {
        &self.m0_inv
    }

    pub fn m1_inv(&self) -> &DMatrix<f64> {
        &self.m1_inv
    }

    /// `(M0, M1)`.
    pub fn mass_matrices(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.m0, &self.m1)
    }

    fn check_index(&self, what: &'static str, i: usize, lo: usize, hi: usize) -> Result<()> {
        if i < lo || i > hi {
            return Err(Error::IndexOutOfRange {
                what,
                index: i,
                lo,
                hi,
            });
        }
        Ok(())
    }

    pub(crate) fn nodal(&self, i: usize, xi: f64) -> f64 {
        let x = &self.rule.nodes;
        let mut num = 1.0;
        for (m, &xm) in x.iter().enumerate() {
            if m != i {
                num *= xi - xm;
            }
        }
        num / self.denominators[i]
    }

    pub(crate) fn nodal_deriv(&self, i: usize, xi: f64) -> f64 {
        let x = &self.rule.nodes;
        let mut sum = 0.0;
        for l in 0..x.len() {
            if l == i {
                continue;
            }
            let mut term = 1.0;
            for (m, &xm) in x.iter().enumerate() {
                if m != i && m != l {
                    term *= xi - xm;
                }
            }
            sum += term;
        }
        sum / self.denominators[i]
    }

    pub(crate) fn edge(&self, i: usize, xi: f64) -> f64 {
        -(0..i).map(|k| self.nodal_deriv(k, xi)).sum::<f64>()
    }

    /// `h_i(xi)`, `0 <= i <= N`.
    pub fn eval_nodal(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_index("nodal basis", i, 0, self.order())?;
        Ok(self.nodal(i, xi))
    }

    /// `h_i'(xi)`, `0 <= i <= N`.
    pub fn eval_nodal_deriv(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_index("nodal basis", i, 0, self.order())?;
        Ok(self.nodal_deriv(i, xi))
    }

    /// `e_i(xi)`, `1 <= i <= N`.
    pub fn eval_edge(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_index("edge basis", i, 1, self.order())?;
        Ok(self.edge(i, xi))
    }

    /// Dual nodal function `h~_i = sum_j e_j [M1^-1]_{ji}`, `1 <= i <= N`.
    pub fn eval_dual_nodal(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_index("dual nodal basis", i, 1, self.order())?;
        Ok((1..=self.order())
            .map(|j| self.edge(j, xi) * self.m1_inv[(j - 1, i - 1)])
            .sum())
    }

    /// Dual edge function `e~_i = sum_j h_j [M0^-1]_{ji}`, `0 <= i <= N`.
    pub fn eval_dual_edge(&self, i: usize, xi: f64) -> Result<f64> {
        self.check_index("dual edge basis", i, 0, self.order())?;
        Ok((0..=self.order())
            .map(|j| self.nodal(j, xi) * self.m0_inv[(j, i)])
            .sum())
    }

    pub fn tabulate(&self, points: &[f64]) -> Tabulation {
        let n = self.order();
        let q = points.len();
        let nodal = DMatrix::from_fn(q, n + 1, |r, i| self.nodal(i, points[r]));
        let nodal_deriv = DMatrix::from_fn(q, n + 1, |r, i| self.nodal_deriv(i, points[r]));
        let mut edge = DMatrix::zeros(q, n);
        for r in 0..q {
            let mut acc = 0.0;
            for i in 1..=n {
                acc -= nodal_deriv[(r, i - 1)];
                edge[(r, i - 1)] = acc;
            }
        }
        Tabulation {
            nodal,
            nodal_deriv,
            edge,
        }
    }
}

/// `G[i][j] = sum_q w_q f_i(x_q) f_j(x_q)` for a tabulation `f[q][i]`.
pub(crate) fn gram(tab: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let n = tab.ncols();
    let mut g = DMatrix::zeros(n, n);
    for (q, &w) in weights.iter().enumerate() {
        for i in 0..n {
            let wi = w * tab[(q, i)];
            for j in i..n {
                g[(i, j)] += wi * tab[(q, j)];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let inv = m
        .clone()
        .cholesky()
        .expect("mass matrix is symmetric positive definite")
        .inverse();
    // symmetrize against round-off
    (&inv + inv.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gll_low_orders() {
        let r1 = gll_rule(1).unwrap();
        assert_eq!(r1.nodes(), &[-1.0, 1.0]);
        assert_abs_diff_eq!(r1.weights()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r1.weights()[1], 1.0, epsilon = 1e-15);

        let r2 = gll_rule(2).unwrap();
        assert_eq!(r2.nodes(), &[-1.0, 0.0, 1.0]);
        for (w, e) in r2.weights().iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn gll_invalid_order() {
        assert!(matches!(
            gll_rule(0),
            Err(Error::InvalidOrder { order: 0, .. })
        ));
        assert!(Basis1D::new(0).is_err());
    }

    #[test]
    fn gll_invariants() {
        for n in 1..=12 {
            let r = gll_rule(n).unwrap();
            assert_eq!(r.nodes()[0], -1.0);
            assert_eq!(r.nodes()[n], 1.0);
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]));
            for i in 0..=n {
                assert_eq!(r.nodes()[i], -r.nodes()[n - i]);
                assert!(r.weights()[i] > 0.0);
            }
            assert_abs_diff_eq!(r.weights().iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            let q = r.as_quadrature();
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert_abs_diff_eq!(q.integrate(|x| x.powi(deg as i32)), exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn nodal_examples() {
        let b = Basis1D::new(2).unwrap();
        assert_eq!(b.eval_nodal(1, 0.0).unwrap(), 1.0);
        assert_eq!(b.eval_nodal(0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(b.eval_nodal(1, 0.5).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(
            b.eval_nodal(3, 0.0),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn kronecker_at_nodes() {
        for n in 1..=8 {
            let b = Basis1D::new(n).unwrap();
            for i in 0..=n {
                for (j, &x) in b.nodes().iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(b.eval_nodal(i, x).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn edge_examples() {
        let b1 = Basis1D::new(1).unwrap();
        for xi in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            assert_abs_diff_eq!(b1.eval_edge(1, xi).unwrap(), 0.5, epsilon = 1e-15);
        }
        assert!(b1.eval_edge(0, 0.0).is_err());
        assert!(b1.eval_edge(2, 0.0).is_err());
    }

    #[test]
    fn mass_matrices_order_one() {
        let b = Basis1D::new(1).unwrap();
        let (m0, m1) = b.mass_matrices();
        assert_abs_diff_eq!(m0[(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m0[(0, 1)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m0[(1, 1)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m1[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mass_matrices_spd() {
        for n in 1..=8 {
            let b = Basis1D::new(n).unwrap();
            for m in [b.m0(), b.m1()] {
                assert_eq!(m, &m.transpose());
                let eig = m.clone().symmetric_eigen();
                assert!(eig.eigenvalues.min() > 0.0);
            }
        }
    }

    #[test]
    fn dual_nodal_order_one_is_constant() {
        let b = Basis1D::new(1).unwrap();
        for xi in [-1.0, 0.1, 1.0] {
            assert_abs_diff_eq!(b.eval_dual_nodal(1, xi).unwrap(), 1.0, epsilon = 1e-14);
        }
        assert!(b.eval_dual_nodal(0, 0.0).is_err());
        assert!(b.eval_dual_edge(2, 0.0).is_err());
    }

    // bisection on the derivative of P_N, independent of the Newton solver
    fn bisect_interior_nodes(n: usize) -> Vec<f64> {
        let dp = |x: f64| {
            let h = 1e-6;
            crate::quadrature::legendre(n, x + h).0 - crate::quadrature::legendre(n, x - h).0
        };
        let m = 4000;
        let mut roots = Vec::new();
        for k in 0..m {
            let (mut a, mut b) = (-1.0 + 2.0 * k as f64 / m as f64, -1.0 + 2.0 * (k + 1) as f64 / m as f64);
            if a <= -1.0 + 1e-9 || b >= 1.0 - 1e-9 || dp(a).signum() == dp(b).signum() {
                continue;
            }
            for _ in 0..60 {
                let c = 0.5 * (a + b);
                if dp(a).signum() == dp(c).signum() {
                    a = c;
                } else {
                    b = c;
                }
            }
            roots.push(0.5 * (a + b));
        }
        roots
    }

    #[test]
    fn gll_order_four_nodes() {
        let r = gll_rule(4).unwrap();
        let s = (3.0f64 / 7.0).sqrt();
        assert_abs_diff_eq!(r.nodes()[1], -s, epsilon = 1e-15);
        assert_eq!(r.nodes()[2], 0.0);
        assert_abs_diff_eq!(r.nodes()[3], s, epsilon = 1e-15);
        for n in 2..=9 {
            let r = gll_rule(n).unwrap();
            let roots = bisect_interior_nodes(n);
            assert_eq!(roots.len(), n - 1);
            for (x, y) in r.nodes()[1..n].iter().zip(&roots) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn edge_integrals_are_kronecker() {
        for n in 1..=8 {
            let b = Basis1D::new(n).unwrap();
            let q = gauss_legendre(n + 2);
            for i in 1..=n {
                for j in 1..=n {
                    let v = q
                        .mapped(b.nodes()[j - 1], b.nodes()[j])
                        .integrate(|x| b.eval_edge(i, x).unwrap());
                    assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-12);
                }
                assert_abs_diff_eq!(q.integrate(|x| b.eval_edge(i, x).unwrap()), 1.0, epsilon = 1e-12);
            }
        }
        let b = Basis1D::new(2).unwrap();
        let v = gauss_legendre(4).mapped(-1.0, 0.0).integrate(|x| b.eval_edge(2, x).unwrap());
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dual_bases_are_biorthogonal() {
        for n in 1..=7 {
            let b = Basis1D::new(n).unwrap();
            let q = gauss_legendre(n + 3);
            for i in 1..=n {
                for j in 1..=n {
                    let v = q.integrate(|x| b.eval_edge(i, x).unwrap() * b.eval_dual_nodal(j, x).unwrap());
                    assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-11);
                }
            }
            for i in 0..=n {
                for j in 0..=n {
                    let v = q.integrate(|x| b.eval_nodal(i, x).unwrap() * b.eval_dual_edge(j, x).unwrap());
                    assert_abs_diff_eq!(v, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn dual_gram_is_inverse_mass() {
        for n in 1..=6 {
            let b = Basis1D::new(n).unwrap();
            let q = gauss_legendre(n + 3);
            for i in 1..=n {
                for j in 1..=n {
                    let g = q.integrate(|x| b.eval_dual_nodal(i, x).unwrap() * b.eval_dual_nodal(j, x).unwrap());
                    assert_abs_diff_eq!(g, b.m1_inv()[(i - 1, j - 1)], epsilon = 1e-11);
                }
            }
            for i in 0..=n {
                for j in 0..=n {
                    let g = q.integrate(|x| b.eval_dual_edge(i, x).unwrap() * b.eval_dual_edge(j, x).unwrap());
                    assert_abs_diff_eq!(g, b.m0_inv()[(i, j)], epsilon = 1e-11);
                }
            }
        }
    }
}
