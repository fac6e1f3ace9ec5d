//! Legendre polynomials and Gauss-Legendre quadrature on `[-1, 1]`.

use std::f64::consts::PI;

/// `(L_n(x), L_n'(x))` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (x * x - 1.0).abs() < f64::EPSILON {
        // L_n'(+-1) = (+-1)^(n+1) n(n+1)/2
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// A one-dimensional quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sum_q w_q f(x_q)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// The same rule mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> QuadratureRule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadratureRule {
            points: self.points.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        }
    }

    /// One-point midpoint rule.
    pub fn midpoint() -> QuadratureRule {
        QuadratureRule {
            points: vec![0.0],
            weights: vec![2.0],
        }
    }
}

/// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
///
/// Panics if `n == 0`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n > 0, "Gauss-Legendre rule needs at least one point");
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        points[i] = -x;
        points[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        points[n / 2] = 0.0;
    }
    QuadratureRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn legendre_known_values() {
        // L_3(x) = (5x^3 - 3x)/2
        let x = 0.3;
        let (p, dp) = legendre(3, x);
        assert_abs_diff_eq!(p, 0.5 * (5.0 * x * x * x - 3.0 * x), epsilon = 1e-15);
        assert_abs_diff_eq!(dp, 0.5 * (15.0 * x * x - 3.0), epsilon = 1e-14);
        let (_, d_end) = legendre(4, 1.0);
        assert_abs_diff_eq!(d_end, 10.0, epsilon = 1e-14);
        let (_, d_start) = legendre(4, -1.0);
        assert_abs_diff_eq!(d_start, -10.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_exactness() {
        for n in 1..12 {
            let rule = gauss_legendre(n);
            for deg in 0..2 * n {
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                let got = rule.integrate(|x| x.powi(deg as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gauss_two_point() {
        let r = gauss_legendre(2);
        assert_abs_diff_eq!(r.points[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights[0], 1.0, epsilon = 1e-15);
    }
}
