//! DOF containers, reduction and reconstruction of slab fields.
//!
//! The physical domain is the unit square `[0, 1]^2`, mapped affinely from the
//! reference square, and a slab `[t0, t0 + dt]` maps from `tau in [-1, 1]`.
//! Edge DOFs hold physical edge integrals, so `F` and `V` DOFs are plain
//! differences of flow-map DOFs; metric factors appear only when a field is
//! evaluated at a point.

use crate::basis1d::Basis1D;
use crate::constitutive::MaterialLaw;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureRule;
use crate::topology::{build_topology, IncidenceSet, SlabTopology};

/// `dxi/dX` for the affine map of `[0, 1]` onto `[-1, 1]`.
pub const SPATIAL_SCALE: f64 = 2.0;

/// Reference coordinate of a physical coordinate in `[0, 1]`.
pub fn to_reference(x: f64) -> f64 {
    2.0 * x - 1.0
}

/// Physical coordinate in `[0, 1]` of a reference coordinate.
pub fn to_physical(xi: f64) -> f64 {
    0.5 * (xi + 1.0)
}

/// Topology, incidence and 1D bases shared by every slab of a run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub topology: SlabTopology,
    pub incidence: IncidenceSet,
    pub space: Basis1D,
    pub time: Basis1D,
}

impl Discretization {
    pub fn new(order: usize, t_order: usize) -> Result<Self> {
        let (topology, incidence) = build_topology(order, t_order)?;
        Ok(Discretization {
            topology,
            incidence,
            space: Basis1D::new(order)?,
            time: Basis1D::new(t_order)?,
        })
    }

    pub fn order(&self) -> usize {
        self.topology.order()
    }

    pub fn t_order(&self) -> usize {
        self.topology.t_order()
    }

    /// Physical positions of the GLL nodes of one time level, trace order.
    pub fn level_points(&self) -> Vec<(f64, f64)> {
        let x = self.space.nodes();
        let mut pts = Vec::with_capacity(self.topology.n_trace());
        for &eta in x {
            for &xi in x {
                pts.push((to_physical(xi), to_physical(eta)));
            }
        }
        pts
    }

    /// Identity flow map of one time level, as `(phi_x, phi_y)` nodal values.
    pub fn identity_level(&self) -> (Vec<f64>, Vec<f64>) {
        self.level_points().into_iter().unzip()
    }
}

/// Which field to evaluate with [`FieldState::reconstruct`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// `[x, y]` in metres.
    FlowMap,
    /// `[v_x, v_y]` in m/s.
    Velocity,
    /// `[F_xx, F_xy, F_yx, F_yy]`, `F_xy = d phi_x / dY`.
    DeformationGradient,
    /// Momentum density `[pi_x, pi_y]` per unit reference area.
    Momentum,
    /// First Piola-Kirchhoff stress `P_W J F^-T`, row-major.
    Stress(MaterialLaw),
}

/// DOFs of every field on one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t0: f64,
    pub dt: f64,
    pub phi_x: Vec<f64>,
    pub phi_y: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub fxx: Vec<f64>,
    pub fyx: Vec<f64>,
    pub fxy: Vec<f64>,
    pub fyy: Vec<f64>,
    pub pi_x: Vec<f64>,
    pub pi_y: Vec<f64>,
    pub trace_start_x: Vec<f64>,
    pub trace_start_y: Vec<f64>,
    pub trace_end_x: Vec<f64>,
    pub trace_end_y: Vec<f64>,
}

fn check_len(context: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

fn check_reference(x: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::OutOfReferenceDomain { value: x });
    }
    Ok(())
}

impl FieldState {
    /// Builds a state from flow-map and momentum DOFs; `V` and `F` follow from
    /// the incidence matrices.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dofs(
        disc: &Discretization,
        t0: f64,
        dt: f64,
        phi_x: Vec<f64>,
        phi_y: Vec<f64>,
        pi_x: Vec<f64>,
        pi_y: Vec<f64>,
        trace_start: (Vec<f64>, Vec<f64>),
        trace_end: (Vec<f64>, Vec<f64>),
    ) -> Result<Self> {
        let t = &disc.topology;
        check_len("phi_x", &phi_x, t.n_node())?;
        check_len("phi_y", &phi_y, t.n_node())?;
        check_len("pi_x", &pi_x, t.n_tedge())?;
        check_len("pi_y", &pi_y, t.n_tedge())?;
        for v in [&trace_start.0, &trace_start.1, &trace_end.0, &trace_end.1] {
            check_len("momentum trace", v, t.n_trace())?;
        }
        let inc = &disc.incidence;
        Ok(FieldState {
            t0,
            dt,
            vx: inc.et.mul_vec(&phi_x),
            vy: inc.et.mul_vec(&phi_y),
            fxx: inc.ex.mul_vec(&phi_x),
            fyx: inc.ex.mul_vec(&phi_y),
            fxy: inc.ey.mul_vec(&phi_x),
            fyy: inc.ey.mul_vec(&phi_y),
            phi_x,
            phi_y,
            pi_x,
            pi_y,
            trace_start_x: trace_start.0,
            trace_start_y: trace_start.1,
            trace_end_x: trace_end.0,
            trace_end_y: trace_end.1,
        })
    }

    /// Reduces an analytic flow map `(X, Y, t) -> (x, y)` with zero momentum.
    pub fn from_flowmap(
        disc: &Discretization,
        t0: f64,
        dt: f64,
        map: impl Fn(f64, f64, f64) -> (f64, f64),
    ) -> Result<Self> {
        let (phi_x, phi_y) = reduce_flowmap(disc, t0, dt, map);
        let t = &disc.topology;
        let zt = vec![0.0; t.n_tedge()];
        let zs = vec![0.0; t.n_trace()];
        Self::from_dofs(
            disc,
            t0,
            dt,
            phi_x,
            phi_y,
            zt.clone(),
            zt,
            (zs.clone(), zs.clone()),
            (zs.clone(), zs),
        )
    }

    /// `true` iff `V` and `F` DOFs equal the incidence images of `phi` exactly.
    pub fn is_compatible(&self, disc: &Discretization) -> bool {
        let inc = &disc.incidence;
        inc.et.mul_vec(&self.phi_x) == self.vx
            && inc.et.mul_vec(&self.phi_y) == self.vy
            && inc.ex.mul_vec(&self.phi_x) == self.fxx
            && inc.ex.mul_vec(&self.phi_y) == self.fyx
            && inc.ey.mul_vec(&self.phi_x) == self.fxy
            && inc.ey.mul_vec(&self.phi_y) == self.fyy
    }

    /// Nodal flow map of time level `k`, trace order.
    pub fn level(&self, disc: &Discretization, k: usize) -> (Vec<f64>, Vec<f64>) {
        let r = disc.topology.level_nodes(k);
        (self.phi_x[r.clone()].to_vec(), self.phi_y[r].to_vec())
    }

    /// Nodal flow map at the end of the slab.
    pub fn end_level(&self, disc: &Discretization) -> (Vec<f64>, Vec<f64>) {
        self.level(disc, disc.t_order())
    }

    /// Physical time of reference time `tau`.
    pub fn time_at(&self, tau: f64) -> f64 {
        self.t0 + 0.5 * (tau + 1.0) * self.dt
    }

    /// Evaluates `field` at reference point `(xi, eta, tau)`.
    pub fn reconstruct(
        &self,
        disc: &Discretization,
        field: Field,
        xi: f64,
        eta: f64,
        tau: f64,
    ) -> Result<Vec<f64>> {
        for c in [xi, eta, tau] {
            check_reference(c)?;
        }
        let n = disc.order();
        let nt = disc.t_order();
        let t = &disc.topology;
        let (s, tb) = (&disc.space, &disc.time);
        Ok(match field {
            Field::FlowMap => {
                let (mut x, mut y) = (0.0, 0.0);
                for k in 0..=nt {
                    for j in 0..=n {
                        for i in 0..=n {
                            let w = s.nodal(i, xi) * s.nodal(j, eta) * tb.nodal(k, tau);
                            let a = t.node(i, j, k);
                            x += w * self.phi_x[a];
                            y += w * self.phi_y[a];
                        }
                    }
                }
                vec![x, y]
            }
            Field::Velocity => {
                let (mut x, mut y) = (0.0, 0.0);
                for k in 1..=nt {
                    for j in 0..=n {
                        for i in 0..=n {
                            let w = s.nodal(i, xi) * s.nodal(j, eta) * tb.edge(k, tau);
                            let a = t.tedge(i, j, k);
                            x += w * self.vx[a];
                            y += w * self.vy[a];
                        }
                    }
                }
                let scale = 2.0 / self.dt;
                vec![scale * x, scale * y]
            }
            Field::DeformationGradient => self.deformation(disc, xi, eta, tau).to_vec(),
            Field::Momentum => {
                let (mut x, mut y) = (0.0, 0.0);
                for k in 1..=nt {
                    let hk = tb.eval_dual_nodal(k, tau)?;
                    for j in 0..=n {
                        let ej = s.eval_dual_edge(j, eta)?;
                        for i in 0..=n {
                            let w = s.eval_dual_edge(i, xi)? * ej * hk;
                            let a = t.tedge(i, j, k);
                            x += w * self.pi_x[a];
                            y += w * self.pi_y[a];
                        }
                    }
                }
                let scale = SPATIAL_SCALE * SPATIAL_SCALE;
                vec![scale * x, scale * y]
            }
            Field::Stress(law) => {
                let (f, j) = self.jacobian_at(disc, xi, eta, tau)?;
                let p = law.pressure_pw(j)?;
                // J F^-T = cofactor(F)
                let cof = [f[3], -f[2], -f[1], f[0]];
                cof.iter().map(|c| p * c).collect()
            }
        })
    }

    /// `F` at a reference point, row-major, without the sign check.
    fn deformation(&self, disc: &Discretization, xi: f64, eta: f64, tau: f64) -> [f64; 4] {
        let n = disc.order();
        let nt = disc.t_order();
        let t = &disc.topology;
        let (s, tb) = (&disc.space, &disc.time);
        let mut f = [0.0; 4];
        for k in 0..=nt {
            let hk = tb.nodal(k, tau);
            for j in 0..=n {
                for i in 1..=n {
                    let w = s.edge(i, xi) * s.nodal(j, eta) * hk;
                    let a = t.xedge(i, j, k);
                    f[0] += w * self.fxx[a];
                    f[2] += w * self.fyx[a];
                }
            }
            for j in 1..=n {
                for i in 0..=n {
                    let w = s.nodal(i, xi) * s.edge(j, eta) * hk;
                    let a = t.yedge(i, j, k);
                    f[1] += w * self.fxy[a];
                    f[3] += w * self.fyy[a];
                }
            }
        }
        f.map(|v| SPATIAL_SCALE * v)
    }

    /// `(F, J)` at a reference point; `J <= 0` is an inverted element.
    pub fn jacobian_at(
        &self,
        disc: &Discretization,
        xi: f64,
        eta: f64,
        tau: f64,
    ) -> Result<([f64; 4], f64)> {
        for c in [xi, eta, tau] {
            check_reference(c)?;
        }
        let f = self.deformation(disc, xi, eta, tau);
        let j = f[0] * f[3] - f[1] * f[2];
        if j.is_nan() || j <= 0.0 {
            return Err(Error::InvertedElement {
                jacobian: j,
                xi,
                eta,
                tau,
            });
        }
        Ok((f, j))
    }
}

/// Flow map and trace momentum of one time level; what one slab hands to
/// the next.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelState {
    pub t: f64,
    pub phi_x: Vec<f64>,
    pub phi_y: Vec<f64>,
    pub pi_x: Vec<f64>,
    pub pi_y: Vec<f64>,
}

impl LevelState {
    /// Undeformed body at rest.
    pub fn rest(disc: &Discretization, t: f64) -> Self {
        let (phi_x, phi_y) = disc.identity_level();
        let n = phi_x.len();
        LevelState {
            t,
            phi_x,
            phi_y,
            pi_x: vec![0.0; n],
            pi_y: vec![0.0; n],
        }
    }

    pub fn check(&self, disc: &Discretization) -> Result<()> {
        let n = disc.topology.n_trace();
        check_len("level phi_x", &self.phi_x, n)?;
        check_len("level phi_y", &self.phi_y, n)?;
        check_len("level pi_x", &self.pi_x, n)?;
        check_len("level pi_y", &self.pi_y, n)
    }
}

/// Nodal samples of `map(X, Y, t)` at the mapped tensor GLL points.
pub fn reduce_flowmap(
    disc: &Discretization,
    t0: f64,
    dt: f64,
    map: impl Fn(f64, f64, f64) -> (f64, f64),
) -> (Vec<f64>, Vec<f64>) {
    let x = disc.space.nodes();
    let tn = disc.time.nodes();
    let n = disc.topology.n_node();
    let (mut px, mut py) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for &tau in tn {
        let t = t0 + 0.5 * (tau + 1.0) * dt;
        for &eta in x {
            for &xi in x {
                let (a, b) = map(to_physical(xi), to_physical(eta), t);
                px.push(a);
                py.push(b);
            }
        }
    }
    (px, py)
}

/// Trace momentum DOFs `int pi h_i h_j dX dY` of a momentum density field.
pub fn reduce_trace_momentum(
    disc: &Discretization,
    rule: &QuadratureRule,
    density: impl Fn(f64, f64) -> (f64, f64),
) -> (Vec<f64>, Vec<f64>) {
    let n1 = disc.order() + 1;
    let tab = disc.space.tabulate(&rule.points);
    let mut px = vec![0.0; n1 * n1];
    let mut py = vec![0.0; n1 * n1];
    let area = 1.0 / (SPATIAL_SCALE * SPATIAL_SCALE);
    for (b, &eta) in rule.points.iter().enumerate() {
        for (a, &xi) in rule.points.iter().enumerate() {
            let w = rule.weights[a] * rule.weights[b] * area;
            let (dx, dy) = density(to_physical(xi), to_physical(eta));
            for j in 0..n1 {
                for i in 0..n1 {
                    let h = w * tab.nodal[(a, i)] * tab.nodal[(b, j)];
                    px[i + n1 * j] += h * dx;
                    py[i + n1 * j] += h * dy;
                }
            }
        }
    }
    (px, py)
}

/// Tabulated spatial basis for evaluating one time level on a tensor grid
/// of 1D points. Grid index is `a + q * b` with `a` along `xi`.
#[derive(Debug, Clone)]
pub struct LevelTable {
    pub points: Vec<f64>,
    pub nodal: nalgebra::DMatrix<f64>,
    pub nodal_deriv: nalgebra::DMatrix<f64>,
}

impl LevelTable {
    pub fn new(basis: &Basis1D, points: &[f64]) -> Self {
        let tab = basis.tabulate(points);
        LevelTable {
            points: points.to_vec(),
            nodal: tab.nodal,
            nodal_deriv: tab.nodal_deriv,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodal expansion and its two physical derivatives at every grid point.
    fn eval(&self, level: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let q = self.len();
        let n1 = self.nodal.ncols();
        // contract over i first: c[a][j] = sum_i level[i + n1 j] * table[a][i]
        let mut val_i = vec![0.0; q * n1];
        let mut der_i = vec![0.0; q * n1];
        for a in 0..q {
            for j in 0..n1 {
                let (mut v, mut d) = (0.0, 0.0);
                for i in 0..n1 {
                    let c = level[i + n1 * j];
                    v += c * self.nodal[(a, i)];
                    d += c * self.nodal_deriv[(a, i)];
                }
                val_i[a * n1 + j] = v;
                der_i[a * n1 + j] = d;
            }
        }
        let mut val = vec![0.0; q * q];
        let mut dx = vec![0.0; q * q];
        let mut dy = vec![0.0; q * q];
        for b in 0..q {
            for a in 0..q {
                let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
                for j in 0..n1 {
                    let h = self.nodal[(b, j)];
                    v += val_i[a * n1 + j] * h;
                    gx += der_i[a * n1 + j] * h;
                    gy += val_i[a * n1 + j] * self.nodal_deriv[(b, j)];
                }
                val[a + q * b] = v;
                dx[a + q * b] = SPATIAL_SCALE * gx;
                dy[a + q * b] = SPATIAL_SCALE * gy;
            }
        }
        (val, dx, dy)
    }

    /// Values of a nodal level at every grid point.
    pub fn values(&self, level: &[f64]) -> Vec<f64> {
        self.eval(level).0
    }

    /// `F` (row-major) at every grid point of a flow-map level.
    pub fn deformation(&self, phi_x: &[f64], phi_y: &[f64]) -> Vec<[f64; 4]> {
        let (_, xx, xy) = self.eval(phi_x);
        let (_, yx, yy) = self.eval(phi_y);
        (0..xx.len())
            .map(|p| [xx[p], xy[p], yx[p], yy[p]])
            .collect()
    }
}

/// `det F` of a row-major 2x2 matrix.
pub fn det(f: &[f64; 4]) -> f64 {
    f[0] * f[3] - f[1] * f[2]
}

/// Uniform `m x m` grid of sample points on the unit square at a fixed
/// reference time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    m: usize,
    tau: f64,
}

impl SampleGrid {
    pub fn new(m: usize, tau: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::config("sample_resolution", "must be at least 2"));
        }
        check_reference(tau)?;
        Ok(SampleGrid { m, tau })
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Physical 1D coordinates `0, 1/(m-1), .., 1`.
    pub fn coordinates(&self) -> Vec<f64> {
        let d = (self.m - 1) as f64;
        (0..self.m).map(|a| a as f64 / d).collect()
    }

    /// `(X, Y)` with `X` fastest.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let c = self.coordinates();
        let mut out = Vec::with_capacity(self.m * self.m);
        for &y in &c {
            for &x in &c {
                out.push((x, y));
            }
        }
        out
    }
}
