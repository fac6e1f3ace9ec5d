//! Conserved quantities and pointwise summaries of solved states.
//!
//! Momentum traces are integral-valued dual DOFs, so pairing them with a
//! nodal field is a plain dot product. Nodal velocities at a time level are
//! recovered from the traces through the trace mass matrix.

use nalgebra::{DMatrix, DVector};

use crate::constitutive::{assemble_trace_mass, MaterialLaw};
use crate::error::Result;
use crate::fields::{det, to_reference, Discretization, FieldState, LevelState, LevelTable, SampleGrid};
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// One row of the invariants table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub t: f64,
    pub px: f64,
    pub py: f64,
    pub l: f64,
    pub mass: f64,
    pub e_kin: f64,
    pub e_int: f64,
    pub e_tot: f64,
    pub picard_iters: usize,
}

/// `1^T pi`.
pub fn linear_momentum(pi: &[f64]) -> f64 {
    pi.iter().sum()
}

/// `pi_x . phi_y - pi_y . phi_x` about the origin.
pub fn angular_momentum(level: &LevelState) -> f64 {
    let a: f64 = level.pi_x.iter().zip(&level.phi_y).map(|(p, f)| p * f).sum();
    let b: f64 = level.pi_y.iter().zip(&level.phi_x).map(|(p, f)| p * f).sum();
    a - b
}

/// Pointwise output at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSample {
    pub x_ref: f64,
    pub y_ref: f64,
    pub x: f64,
    pub y: f64,
    pub pressure: f64,
    pub density: f64,
    pub mach: f64,
    /// `false` if `J <= 0` here; pressure, density and Mach are then NaN.
    pub valid: bool,
}

/// Quadrature and trace mass used by every diagnostic of a run.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    law: MaterialLaw,
    rule: QuadratureRule,
    table: LevelTable,
    trace_mass_inv: DMatrix<f64>,
}

impl Diagnostics {
    /// `N + 3` Gauss points per direction.
    pub fn new(disc: &Discretization, law: MaterialLaw) -> Self {
        let rule = gauss_legendre(disc.order() + 3);
        let table = LevelTable::new(&disc.space, &rule.points);
        let trace_mass_inv = crate::basis1d::spd_inverse(&assemble_trace_mass(&law, disc));
        Diagnostics {
            law,
            rule,
            table,
            trace_mass_inv,
        }
    }

    pub fn law(&self) -> &MaterialLaw {
        &self.law
    }

    fn jacobians(&self, level: &LevelState) -> Result<Vec<f64>> {
        let q = self.rule.len();
        self.table
            .deformation(&level.phi_x, &level.phi_y)
            .iter()
            .enumerate()
            .map(|(p, f)| {
                let j = det(f);
                if j.is_nan() || j <= 0.0 {
                    Err(crate::Error::InvertedElement {
                        jacobian: j,
                        xi: self.rule.points[p % q],
                        eta: self.rule.points[p / q],
                        tau: f64::NAN,
                    })
                } else {
                    Ok(j)
                }
            })
            .collect()
    }

    /// `sum_q w_q f(J_q) / 4` over the reference square.
    fn integrate(&self, js: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
        let q = self.rule.len();
        let w = &self.rule.weights;
        let mut acc = 0.0;
        for (p, &j) in js.iter().enumerate() {
            acc += w[p % q] * w[p / q] * f(j)?;
        }
        Ok(0.25 * acc)
    }

    /// `int rho J dB` with `rho = rho0 / J`.
    pub fn total_mass(&self, level: &LevelState) -> Result<f64> {
        let rho0 = self.law.rho0;
        let js = self.jacobians(level)?;
        self.integrate(&js, |j| Ok(rho0 / j * j))
    }

    /// Nodal velocities `M_s^-1 pi` of a time level.
    pub fn nodal_velocity(&self, level: &LevelState) -> (Vec<f64>, Vec<f64>) {
        let solve = |p: &[f64]| {
            (&self.trace_mass_inv * DVector::from_column_slice(p))
                .as_slice()
                .to_vec()
        };
        (solve(&level.pi_x), solve(&level.pi_y))
    }

    /// `(E_kin, E_int)`; the internal part includes the work `P_env (J - 1)`
    /// against the external pressure.
    pub fn energies(&self, level: &LevelState) -> Result<(f64, f64)> {
        let (vx, vy) = self.nodal_velocity(level);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let e_kin = 0.5 * (dot(&level.pi_x, &vx) + dot(&level.pi_y, &vy));
        let js = self.jacobians(level)?;
        let e_int = self.integrate(&js, |j| self.law.energy_density(j))?;
        Ok((e_kin, e_int))
    }

    pub fn record(&self, level: &LevelState, picard_iters: usize) -> Result<InvariantRecord> {
        let (e_kin, e_int) = self.energies(level)?;
        Ok(InvariantRecord {
            t: level.t,
            px: linear_momentum(&level.pi_x),
            py: linear_momentum(&level.pi_y),
            l: angular_momentum(level),
            mass: self.total_mass(level)?,
            e_kin,
            e_int,
            e_tot: e_kin + e_int,
            picard_iters,
        })
    }

    /// Position, pressure, density and Mach number on a sample grid of a
    /// time level.
    pub fn point_fields(&self, disc: &Discretization, level: &LevelState, grid: &SampleGrid) -> Vec<PointSample> {
        let (vx, vy) = self.nodal_velocity(level);
        grid.points()
            .into_iter()
            .map(|(xr, yr)| {
                let table = LevelTable::new(&disc.space, &[to_reference(xr)]);
                let row = LevelTable::new(&disc.space, &[to_reference(yr)]);
                let eval = |c: &[f64]| tensor_value(&table, &row, c);
                let x = eval(&level.phi_x);
                let y = eval(&level.phi_y);
                let f = deformation_at(&table, &row, &level.phi_x, &level.phi_y);
                let j = det(&f);
                let speed = eval(&vx).hypot(eval(&vy));
                self.sample(xr, yr, x, y, j, speed)
            })
            .collect()
    }

    /// Like [`Diagnostics::point_fields`] at the grid's reference time inside
    /// a solved slab; interior times take the velocity from temporal edges.
    pub fn point_fields_in_slab(
        &self,
        disc: &Discretization,
        state: &FieldState,
        grid: &SampleGrid,
    ) -> Result<Vec<PointSample>> {
        let tau = grid.tau();
        if tau == -1.0 || tau == 1.0 {
            let k = if tau < 0.0 { 0 } else { disc.t_order() };
            let (phi_x, phi_y) = state.level(disc, k);
            let (pi_x, pi_y) = if k == 0 {
                (state.trace_start_x.clone(), state.trace_start_y.clone())
            } else {
                (state.trace_end_x.clone(), state.trace_end_y.clone())
            };
            let level = LevelState {
                t: state.time_at(tau),
                phi_x,
                phi_y,
                pi_x,
                pi_y,
            };
            return Ok(self.point_fields(disc, &level, grid));
        }
        use crate::fields::Field;
        grid.points()
            .into_iter()
            .map(|(xr, yr)| {
                let (xi, eta) = (to_reference(xr), to_reference(yr));
                let p = state.reconstruct(disc, Field::FlowMap, xi, eta, tau)?;
                let v = state.reconstruct(disc, Field::Velocity, xi, eta, tau)?;
                let f = state.reconstruct(disc, Field::DeformationGradient, xi, eta, tau)?;
                let j = f[0] * f[3] - f[1] * f[2];
                Ok(self.sample(xr, yr, p[0], p[1], j, v[0].hypot(v[1])))
            })
            .collect()
    }

    fn sample(&self, xr: f64, yr: f64, x: f64, y: f64, j: f64, speed: f64) -> PointSample {
        let valid = j > 0.0;
        let (pressure, density, mach) = if valid {
            let c = self.law.sound_speed(j).unwrap_or(f64::NAN);
            (
                self.law.pressure_pw(j).unwrap_or(f64::NAN),
                self.law.rho0 / j,
                speed / c,
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        PointSample {
            x_ref: xr,
            y_ref: yr,
            x,
            y,
            pressure,
            density,
            mach,
            valid,
        }
    }
}

fn tensor_value(tx: &LevelTable, ty: &LevelTable, c: &[f64]) -> f64 {
    let n1 = tx.nodal.ncols();
    let mut v = 0.0;
    for j in 0..n1 {
        for i in 0..n1 {
            v += c[i + n1 * j] * tx.nodal[(0, i)] * ty.nodal[(0, j)];
        }
    }
    v
}

fn deformation_at(tx: &LevelTable, ty: &LevelTable, px: &[f64], py: &[f64]) -> [f64; 4] {
    let n1 = tx.nodal.ncols();
    let mut f = [0.0; 4];
    for j in 0..n1 {
        for i in 0..n1 {
            let dx = tx.nodal_deriv[(0, i)] * ty.nodal[(0, j)];
            let dy = tx.nodal[(0, i)] * ty.nodal_deriv[(0, j)];
            let a = i + n1 * j;
            f[0] += px[a] * dx;
            f[1] += px[a] * dy;
            f[2] += py[a] * dx;
            f[3] += py[a] * dy;
        }
    }
    f.map(|v| crate::fields::SPATIAL_SCALE * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::reduce_trace_momentum;
    use approx::assert_abs_diff_eq;

    fn law(rho0: f64) -> MaterialLaw {
        MaterialLaw::with_alpha(rho0, 1.4, 1.0, 1.0).unwrap()
    }

    #[test]
    fn rest_state_values() {
        let disc = Discretization::new(3, 1).unwrap();
        let d = Diagnostics::new(&disc, law(1.25));
        let rest = LevelState::rest(&disc, 0.0);
        let r = d.record(&rest, 0).unwrap();
        assert_eq!(r.px, 0.0);
        assert_eq!(r.l, 0.0);
        assert_eq!(r.e_kin, 0.0);
        assert_abs_diff_eq!(r.e_int, 2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.mass, 1.25, epsilon = 1e-14);
        assert_eq!(r.e_tot, r.e_kin + r.e_int);
        let half = Diagnostics::new(&disc, law(0.625));
        assert_abs_diff_eq!(half.total_mass(&rest).unwrap(), 0.625, epsilon = 1e-15);
    }

    #[test]
    fn uniform_velocity_kinetic_energy() {
        let disc = Discretization::new(3, 1).unwrap();
        let d = Diagnostics::new(&disc, law(1.25));
        let rule = gauss_legendre(6);
        let (vx, vy) = (0.3, -0.2);
        let (pi_x, pi_y) = reduce_trace_momentum(&disc, &rule, |_, _| (1.25 * vx, 1.25 * vy));
        let mut level = LevelState::rest(&disc, 0.0);
        level.pi_x = pi_x;
        level.pi_y = pi_y;
        let (ek, _) = d.energies(&level).unwrap();
        assert_abs_diff_eq!(ek, 0.5 * 1.25 * (vx * vx + vy * vy), epsilon = 1e-14);
        assert_abs_diff_eq!(linear_momentum(&level.pi_x), 1.25 * vx, epsilon = 1e-15);
    }

    #[test]
    fn rigid_rotation_moment_of_inertia() {
        // counter-clockwise v = w (-(Y - 1/2), X - 1/2) about the centre; the
        // pairing pi_x phi_y - pi_y phi_x counts it negative, and the total
        // momentum is zero so the origin-based moment equals the central one
        let disc = Discretization::new(4, 1).unwrap();
        let rule = gauss_legendre(8);
        let w = 0.7;
        let (pi_x, pi_y) =
            reduce_trace_momentum(&disc, &rule, |x, y| (-1.25 * w * (y - 0.5), 1.25 * w * (x - 0.5)));
        let mut level = LevelState::rest(&disc, 0.0);
        level.pi_x = pi_x;
        level.pi_y = pi_y;
        // int r^2 about the centre of the unit square = 1/6
        let expect = -1.25 * w / 6.0;
        assert_abs_diff_eq!(angular_momentum(&level), expect, epsilon = 1e-13);
    }

    #[test]
    fn rest_point_fields() {
        let disc = Discretization::new(2, 1).unwrap();
        let d = Diagnostics::new(&disc, law(1.25));
        let grid = SampleGrid::new(4, 1.0).unwrap();
        let pts = d.point_fields(&disc, &LevelState::rest(&disc, 0.0), &grid);
        assert_eq!(pts.len(), 16);
        for p in pts {
            assert!(p.valid);
            assert_abs_diff_eq!(p.pressure, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(p.density, 1.25, epsilon = 1e-14);
            assert_eq!(p.mach, 0.0);
            assert_abs_diff_eq!(p.x, p.x_ref, epsilon = 1e-15);
        }
    }

    #[test]
    fn dilated_point_fields() {
        let disc = Discretization::new(2, 1).unwrap();
        let d = Diagnostics::new(&disc, law(1.25));
        let mut level = LevelState::rest(&disc, 0.0);
        for v in level.phi_x.iter_mut().chain(level.phi_y.iter_mut()) {
            *v *= 1.1;
        }
        let grid = SampleGrid::new(3, 1.0).unwrap();
        for p in d.point_fields(&disc, &level, &grid) {
            assert_abs_diff_eq!(p.pressure, 1.21f64.powf(-1.4), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(d.total_mass(&level).unwrap(), 1.25, epsilon = 1e-14);
    }

    #[test]
    fn inverted_sample_flagged() {
        let disc = Discretization::new(2, 1).unwrap();
        let d = Diagnostics::new(&disc, law(1.25));
        let mut level = LevelState::rest(&disc, 0.0);
        for v in level.phi_x.iter_mut() {
            *v = -*v;
        }
        let grid = SampleGrid::new(2, 1.0).unwrap();
        assert!(d.point_fields(&disc, &level, &grid).iter().all(|p| !p.valid && p.mach.is_nan()));
        assert!(d.total_mass(&level).is_err());
    }
}
