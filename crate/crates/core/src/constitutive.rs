//! Barotropic equation of state and the two weighted mass matrices.
//!
//! The closure is the isentropic ideal gas `p = P_ref (rho / rho0)^gamma`,
//! so with `rho = rho0 / J`
//!
//! ```text
//! P_W(J) = P_ref J^-gamma
//! W(J)   = P_ref J^(1 - gamma) / (rho0 (gamma - 1))
//! c(J)   = sqrt(gamma P_W(J) J / rho0)
//! ```
//!
//! A constant external pressure `P_env` enters only through the gauge weight
//! `P_W - P_env`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fields::{det, Discretization, LevelTable};
use crate::quadrature::{gauss_legendre, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialLaw {
    pub rho0: f64,
    pub gamma: f64,
    pub p_ref: f64,
    pub p_env: f64,
}

fn positive_j(j: f64) -> Result<()> {
    if j.is_nan() || j <= 0.0 {
        return Err(Error::NonPositiveJacobian(j));
    }
    Ok(())
}

impl MaterialLaw {
    pub fn new(rho0: f64, gamma: f64, p_ref: f64, p_env: f64) -> Result<Self> {
        let bad = |name, value| Err(Error::InvalidMaterial { name, value });
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return bad("rho0", rho0);
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return bad("gamma", gamma);
        }
        if !(p_ref > 0.0 && p_ref.is_finite()) {
            return bad("p_ref", p_ref);
        }
        if !(p_env >= 0.0 && p_env.is_finite()) {
            return bad("p_env", p_env);
        }
        Ok(MaterialLaw {
            rho0,
            gamma,
            p_ref,
            p_env,
        })
    }

    /// Law with `P_env = alpha * P_ref`.
    pub fn with_alpha(rho0: f64, gamma: f64, p_ref: f64, alpha: f64) -> Result<Self> {
        Self::new(rho0, gamma, p_ref, alpha * p_ref)
    }

    /// `P_W(J) = P_ref J^-gamma`.
    pub fn pressure_pw(&self, j: f64) -> Result<f64> {
        positive_j(j)?;
        Ok(self.pw(j))
    }

    /// Specific internal energy `W(J)`, no additive constant.
    pub fn internal_energy_w(&self, j: f64) -> Result<f64> {
        positive_j(j)?;
        Ok(self.p_ref * j.powf(1.0 - self.gamma) / (self.rho0 * (self.gamma - 1.0)))
    }

    pub fn sound_speed(&self, j: f64) -> Result<f64> {
        positive_j(j)?;
        Ok((self.gamma * self.pw(j) * j / self.rho0).sqrt())
    }

    /// Gauge weight `P_W(J) - P_env`.
    pub fn gauge_pressure(&self, j: f64) -> Result<f64> {
        positive_j(j)?;
        Ok(self.pw(j) - self.p_env)
    }

    /// Stored energy per reference area, `rho0 W(J) + P_env (J - 1)`.
    ///
    /// Its derivative is minus the gauge weight.
    pub fn energy_density(&self, j: f64) -> Result<f64> {
        positive_j(j)?;
        Ok(self.stored(j) + self.p_env * (j - 1.0))
    }

    /// Secant of the gauge weight between two volume ratios,
    /// `-(G(j1) - G(j0)) / (j1 - j0)` with `G` the energy density.
    pub fn secant_gauge_pressure(&self, j0: f64, j1: f64) -> Result<f64> {
        positive_j(j0)?;
        positive_j(j1)?;
        let dj = j1 - j0;
        if dj == 0.0 {
            return Ok(self.pw(j0) - self.p_env);
        }
        let a = 1.0 - self.gamma;
        // j1^a - j0^a without cancellation
        let diff = j0.powf(a) * (a * (dj / j0).ln_1p()).exp_m1();
        Ok(-self.p_ref / (self.gamma - 1.0) * diff / dj - self.p_env)
    }

    fn pw(&self, j: f64) -> f64 {
        self.p_ref * j.powf(-self.gamma)
    }

    fn stored(&self, j: f64) -> f64 {
        self.p_ref * j.powf(1.0 - self.gamma) / (self.gamma - 1.0)
    }
}

/// How the pressure weight is sampled in time inside one slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeWeighting {
    /// Pointwise `P_W(J(tau)) - P_env` at `Nt + 3` Gauss points in time.
    Gauss,
    /// Secant weight between the slab's end levels with a midpoint rule in
    /// time. Requires `Nt = 1`; conserves the discrete energy exactly.
    DiscreteGradient,
}

impl TimeWeighting {
    /// `DiscreteGradient` for linear-in-time slabs, `Gauss` otherwise.
    pub fn default_for(t_order: usize) -> Self {
        if t_order == 1 {
            TimeWeighting::DiscreteGradient
        } else {
            TimeWeighting::Gauss
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TimeWeighting::Gauss => "gauss",
            TimeWeighting::DiscreteGradient => "discrete-gradient",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gauss" => Some(TimeWeighting::Gauss),
            "discrete-gradient" | "dg" => Some(TimeWeighting::DiscreteGradient),
            _ => None,
        }
    }
}

/// `M_rho0 = rho0 / (2 dt) M1_t (x) M0 (x) M0` on temporal edges.
pub fn assemble_m_rho0(law: &MaterialLaw, disc: &Discretization, dt: f64) -> DMatrix<f64> {
    let m0 = disc.space.m0();
    let m1t = disc.time.m1();
    let spatial = m1t.kronecker(&m0.kronecker(m0));
    spatial * (law.rho0 / (2.0 * dt))
}

/// Trace mass `rho0 / 4 M0 (x) M0` relating nodal velocities to trace momenta.
pub fn assemble_trace_mass(law: &MaterialLaw, disc: &Discretization) -> DMatrix<f64> {
    let m0 = disc.space.m0();
    m0.kronecker(m0) * (law.rho0 / 4.0)
}

/// Quadrature set used for the pressure-weighted mass matrix.
#[derive(Debug, Clone)]
pub struct PressureQuadrature {
    pub space: QuadratureRule,
    pub time: QuadratureRule,
    pub weighting: TimeWeighting,
    table: LevelTable,
    // time nodal basis h_k at the time points, [q][k]
    time_nodal: DMatrix<f64>,
    // edge e_i (xi) and nodal h_j at spatial points, [a][i]
    edge: DMatrix<f64>,
    nodal: DMatrix<f64>,
}

impl PressureQuadrature {
    /// `space_points` Gauss points per spatial direction.
    pub fn new(disc: &Discretization, space_points: usize, weighting: TimeWeighting) -> Result<Self> {
        if space_points == 0 {
            return Err(Error::config("quad_points", "must be positive"));
        }
        if weighting == TimeWeighting::DiscreteGradient && disc.t_order() != 1 {
            return Err(Error::config(
                "time_weighting",
                "discrete-gradient weighting needs t_order = 1",
            ));
        }
        let space = gauss_legendre(space_points);
        let time = match weighting {
            TimeWeighting::Gauss => gauss_legendre(disc.t_order() + 3),
            TimeWeighting::DiscreteGradient => QuadratureRule::midpoint(),
        };
        let table = LevelTable::new(&disc.space, &space.points);
        let stab = disc.space.tabulate(&space.points);
        let ttab = disc.time.tabulate(&time.points);
        Ok(PressureQuadrature {
            space,
            time,
            weighting,
            table,
            time_nodal: ttab.nodal,
            edge: stab.edge,
            nodal: stab.nodal,
        })
    }

    /// Default rule: `N + 3` spatial points.
    pub fn default_for(disc: &Discretization, weighting: TimeWeighting) -> Result<Self> {
        Self::new(disc, disc.order() + 3, weighting)
    }

    pub fn n_time(&self) -> usize {
        self.time.len()
    }

    pub fn n_space(&self) -> usize {
        self.space.len()
    }

    /// Gauge weights `w[t][a + q b]` for a slab flow map.
    pub fn weights(
        &self,
        law: &MaterialLaw,
        disc: &Discretization,
        phi_x: &[f64],
        phi_y: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        let n_tr = disc.topology.n_trace();
        let nt = disc.t_order();
        let level = |k: usize| {
            let r = disc.topology.level_nodes(k);
            (&phi_x[r.clone()], &phi_y[r])
        };
        match self.weighting {
            TimeWeighting::DiscreteGradient => {
                let (sx, sy) = level(0);
                let (ex, ey) = level(nt);
                let js = self.jacobians(sx, sy, -1.0)?;
                let je = self.jacobians(ex, ey, 1.0)?;
                let w = js
                    .iter()
                    .zip(&je)
                    .map(|(&a, &b)| law.secant_gauge_pressure(a, b))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![w])
            }
            TimeWeighting::Gauss => {
                let mut out = Vec::with_capacity(self.time.len());
                for (q, &tau) in self.time.points.iter().enumerate() {
                    let mut px = vec![0.0; n_tr];
                    let mut py = vec![0.0; n_tr];
                    for k in 0..=nt {
                        let h = self.time_nodal[(q, k)];
                        let (lx, ly) = level(k);
                        for a in 0..n_tr {
                            px[a] += h * lx[a];
                            py[a] += h * ly[a];
                        }
                    }
                    let js = self.jacobians(&px, &py, tau)?;
                    out.push(
                        js.iter()
                            .map(|&j| law.gauge_pressure(j))
                            .collect::<Result<Vec<_>>>()?,
                    );
                }
                Ok(out)
            }
        }
    }

    fn jacobians(&self, px: &[f64], py: &[f64], tau: f64) -> Result<Vec<f64>> {
        let q = self.table.len();
        let f = self.table.deformation(px, py);
        f.iter()
            .enumerate()
            .map(|(p, f)| {
                let j = det(f);
                if j.is_nan() || j <= 0.0 {
                    Err(Error::InvertedElement {
                        jacobian: j,
                        xi: self.space.points[p % q],
                        eta: self.space.points[p / q],
                        tau,
                    })
                } else {
                    Ok(j)
                }
            })
            .collect()
    }

    /// `M_Pw[a][b] = dt/2 sum w e_i(xi) h_j(eta) h_k(tau) h_I(xi) e_J(eta) h_K(tau)`
    /// with rows on x-edges `(i, j, k)` and columns on y-edges `(I, J, K)`.
    pub fn assemble_m_pw(
        &self,
        disc: &Discretization,
        weights: &[Vec<f64>],
        dt: f64,
    ) -> Result<DMatrix<f64>> {
        let topo = &disc.topology;
        let n = disc.order();
        let nt = disc.t_order();
        let q = self.space.len();
        if weights.len() != self.time.len() {
            return Err(Error::DimensionMismatch {
                context: "pressure weights (time points)",
                expected: self.time.len(),
                got: weights.len(),
            });
        }
        let mut m = DMatrix::zeros(topo.n_xedge(), topo.n_yedge());
        for (t, wt) in weights.iter().enumerate() {
            if wt.len() != q * q {
                return Err(Error::DimensionMismatch {
                    context: "pressure weights (space points)",
                    expected: q * q,
                    got: wt.len(),
                });
            }
            let wtime = self.time.weights[t] * 0.5 * dt;
            // S[i, I, j, J] = sum_{a,b} w_ab wa wb e_i(a) h_I(a) h_j(b) e_J(b)
            let mut s = vec![0.0; n * (n + 1) * (n + 1) * n];
            let idx = |i: usize, ii: usize, j: usize, jj: usize| {
                ((i * (n + 1) + ii) * (n + 1) + j) * n + jj
            };
            for b in 0..q {
                for a in 0..q {
                    let w = wt[a + q * b] * self.space.weights[a] * self.space.weights[b];
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let ei = w * self.edge[(a, i)];
                        for ii in 0..=n {
                            let x = ei * self.nodal[(a, ii)];
                            for j in 0..=n {
                                let y = x * self.nodal[(b, j)];
                                for jj in 0..n {
                                    s[idx(i, ii, j, jj)] += y * self.edge[(b, jj)];
                                }
                            }
                        }
                    }
                }
            }
            for k in 0..=nt {
                for kk in 0..=nt {
                    let tk = wtime * self.time_nodal[(t, k)] * self.time_nodal[(t, kk)];
                    if tk == 0.0 {
                        continue;
                    }
                    for j in 0..=n {
                        for i in 1..=n {
                            let r = topo.xedge(i, j, k);
                            for jj in 1..=n {
                                for ii in 0..=n {
                                    let c = topo.yedge(ii, jj, kk);
                                    m[(r, c)] += tk * s[idx(i - 1, ii, j, jj - 1)];
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(m)
    }
}

/// `M_Pw` for a slab flow map with the given quadrature.
pub fn assemble_m_pw(
    law: &MaterialLaw,
    disc: &Discretization,
    quad: &PressureQuadrature,
    phi_x: &[f64],
    phi_y: &[f64],
    dt: f64,
) -> Result<DMatrix<f64>> {
    let w = quad.weights(law, disc, phi_x, phi_y)?;
    quad.assemble_m_pw(disc, &w, dt)
}

/// Solution-independent mass matrices of a run.
#[derive(Debug, Clone)]
pub struct WeightedMassMatrices {
    pub m_rho0: DMatrix<f64>,
    pub m_rho0_inv: DMatrix<f64>,
    pub trace_mass: DMatrix<f64>,
    pub trace_mass_inv: DMatrix<f64>,
}

impl WeightedMassMatrices {
    pub fn new(law: &MaterialLaw, disc: &Discretization, dt: f64) -> Self {
        let m_rho0 = assemble_m_rho0(law, disc, dt);
        let trace_mass = assemble_trace_mass(law, disc);
        WeightedMassMatrices {
            m_rho0_inv: crate::basis1d::spd_inverse(&m_rho0),
            trace_mass_inv: crate::basis1d::spd_inverse(&trace_mass),
            m_rho0,
            trace_mass,
        }
    }
}
