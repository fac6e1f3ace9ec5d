//! Block system of one space-time slab, its Picard loop, and time stacking.
//!
//! Unknowns are ordered `[pi_x, pi_y, phi_x, phi_y, pi^end_x, pi^end_y]`:
//!
//! ```text
//! | M_rho0^-1      0     -E_t     0       0       0    | | pi_x  |   |     0          |
//! |     0      M_rho0^-1  0     -E_t      0       0    | | pi_y  |   |     0          |
//! |   E_t^T        0      0     D_PK   -N_end     0    | | phi_x | = | -N_start pi^s_x |
//! |     0        E_t^T  -D_PK    0       0     -N_end  | | phi_y |   | -N_start pi^s_y |
//! |     0          0   N_start^T  0       0       0    | | pe_x  |   |  phi^s_x        |
//! |     0          0      0  N_start^T    0       0    | | pe_y  |   |  phi^s_y        |
//! ```
//!
//! `D_PK = A - A^T` with `A = E_x^T M_Pw E_y`, so it is skew by construction.

use nalgebra::{DMatrix, DVector};

pub use crate::constitutive::TimeWeighting;
use crate::constitutive::{MaterialLaw, PressureQuadrature, WeightedMassMatrices};
use crate::error::{Error, Result};
use crate::fields::{det, Discretization, FieldState, LevelState, LevelTable};
use crate::quadrature::gauss_legendre;
use crate::topology::{IncidenceMatrix, IncidenceSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub tol: f64,
    pub max_picard: usize,
    /// Weight blending factor in `(0, 1]`; 1 is plain reassembly.
    pub relaxation: f64,
    /// `None` picks [`TimeWeighting::default_for`] the temporal order.
    pub time_weighting: Option<TimeWeighting>,
    /// Spatial Gauss points per direction; `None` means `N + 3`.
    pub quad_points: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            tol: 1e-12,
            max_picard: 50,
            relaxation: 1.0,
            time_weighting: None,
            quad_points: None,
        }
    }
}

impl SolverConfig {
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be positive"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be positive"));
        }
        if self.max_picard == 0 {
            return Err(Error::config("max_picard", "must be at least 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::config("relaxation", "must lie in (0, 1]"));
        }
        if self.quad_points == Some(0) {
            return Err(Error::config("quad_points", "must be positive"));
        }
        Ok(())
    }

    pub fn weighting_for(&self, t_order: usize) -> TimeWeighting {
        self.time_weighting
            .unwrap_or_else(|| TimeWeighting::default_for(t_order))
    }
}

/// `(E_x^T M E_y) - (E_x^T M E_y)^T`.
pub fn build_dpk(m_pw: &DMatrix<f64>, inc: &IncidenceSet) -> Result<DMatrix<f64>> {
    let (ex, ey) = (&inc.ex, &inc.ey);
    if m_pw.nrows() != ex.nrows() || m_pw.ncols() != ey.nrows() {
        return Err(Error::DimensionMismatch {
            context: "M_Pw against incidence",
            expected: ex.nrows() * ey.nrows(),
            got: m_pw.nrows() * m_pw.ncols(),
        });
    }
    let n = ex.ncols();
    // B = M E_y
    let mut b = DMatrix::<f64>::zeros(m_pw.nrows(), n);
    for &(e, node, v) in ey.entries() {
        let v = v as f64;
        for r in 0..m_pw.nrows() {
            b[(r, node)] += v * m_pw[(r, e)];
        }
    }
    let mut a = DMatrix::zeros(n, n);
    for &(e, node, v) in ex.entries() {
        let v = v as f64;
        for c in 0..n {
            a[(node, c)] += v * b[(e, c)];
        }
    }
    let at = a.transpose();
    Ok(a - at)
}

/// Assembled linear system of one slab.
#[derive(Debug, Clone)]
pub struct SlabSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    offsets: [usize; 7],
}

impl SlabSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// Start offsets of the six unknown blocks plus the total size.
    pub fn offsets(&self) -> [usize; 7] {
        self.offsets
    }

    /// LU with partial pivoting followed by one step of iterative refinement.
    pub fn solve(&self) -> Result<DVector<f64>> {
        let lu = self.matrix.clone().lu();
        let mut u = lu.solve(&self.rhs).ok_or(Error::SingularSystem)?;
        let r = &self.rhs - &self.matrix * &u;
        if let Some(du) = lu.solve(&r) {
            u += du;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(u)
    }

    /// Block `b` (0..6) of a solution vector.
    pub fn block<'a>(&self, u: &'a DVector<f64>, b: usize) -> &'a [f64] {
        &u.as_slice()[self.offsets[b]..self.offsets[b + 1]]
    }
}

fn put_dense(a: &mut DMatrix<f64>, r0: usize, c0: usize, m: &DMatrix<f64>, s: f64) {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            a[(r0 + r, c0 + c)] += s * m[(r, c)];
        }
    }
}

fn put_sparse(a: &mut DMatrix<f64>, r0: usize, c0: usize, m: &IncidenceMatrix, s: f64) {
    for &(r, c, v) in m.entries() {
        a[(r0 + r, c0 + c)] += s * v as f64;
    }
}

/// Builds the block system for given `D_PK` and slab-start data.
pub fn assemble_slab(
    disc: &Discretization,
    m_rho0_inv: &DMatrix<f64>,
    dpk: &DMatrix<f64>,
    start: &LevelState,
) -> Result<SlabSystem> {
    start.check(disc)?;
    let t = &disc.topology;
    let inc = &disc.incidence;
    let (nte, nn, ntr) = (t.n_tedge(), t.n_node(), t.n_trace());
    if m_rho0_inv.shape() != (nte, nte) {
        return Err(Error::DimensionMismatch {
            context: "M_rho0 inverse",
            expected: nte,
            got: m_rho0_inv.nrows(),
        });
    }
    if dpk.shape() != (nn, nn) {
        return Err(Error::DimensionMismatch {
            context: "D_PK",
            expected: nn,
            got: dpk.nrows(),
        });
    }
    let o = [
        0,
        nte,
        2 * nte,
        2 * nte + nn,
        2 * nte + 2 * nn,
        2 * nte + 2 * nn + ntr,
        2 * (nte + nn + ntr),
    ];
    let n = o[6];
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let et_t = inc.et.transpose();
    let ns_t = inc.n_start.transpose();

    put_dense(&mut a, o[0], o[0], m_rho0_inv, 1.0);
    put_sparse(&mut a, o[0], o[2], &inc.et, -1.0);
    put_dense(&mut a, o[1], o[1], m_rho0_inv, 1.0);
    put_sparse(&mut a, o[1], o[3], &inc.et, -1.0);

    put_sparse(&mut a, o[2], o[0], &et_t, 1.0);
    put_dense(&mut a, o[2], o[3], dpk, 1.0);
    put_sparse(&mut a, o[2], o[4], &inc.n_end, -1.0);
    put_sparse(&mut a, o[3], o[1], &et_t, 1.0);
    put_dense(&mut a, o[3], o[2], dpk, -1.0);
    put_sparse(&mut a, o[3], o[5], &inc.n_end, -1.0);

    put_sparse(&mut a, o[4], o[2], &ns_t, 1.0);
    put_sparse(&mut a, o[5], o[3], &ns_t, 1.0);

    let sx = inc.n_start.mul_vec(&start.pi_x);
    let sy = inc.n_start.mul_vec(&start.pi_y);
    for r in 0..nn {
        b[o[2] + r] = -sx[r];
        b[o[3] + r] = -sy[r];
    }
    for r in 0..ntr {
        b[o[4] + r] = start.phi_x[r];
        b[o[5] + r] = start.phi_y[r];
    }
    Ok(SlabSystem {
        matrix: a,
        rhs: b,
        offsets: o,
    })
}

/// Converged solution of one slab.
#[derive(Debug, Clone)]
pub struct SlabSolution {
    pub slab: usize,
    pub state: FieldState,
    pub end: LevelState,
    pub iterations: usize,
    /// Monitor change after each iteration.
    pub history: Vec<f64>,
}

/// Everything needed to solve slabs of one run.
#[derive(Debug, Clone)]
pub struct SlabSolver {
    pub disc: Discretization,
    pub law: MaterialLaw,
    pub config: SolverConfig,
    pub masses: WeightedMassMatrices,
    pub quadrature: PressureQuadrature,
    monitor_space: LevelTable,
    // h_k at the monitor's time points, [q][k]
    monitor_time: DMatrix<f64>,
}

impl SlabSolver {
    pub fn new(disc: Discretization, law: MaterialLaw, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let weighting = config.weighting_for(disc.t_order());
        let points = config.quad_points.unwrap_or(disc.order() + 3);
        let quadrature = PressureQuadrature::new(&disc, points, weighting)?;
        let masses = WeightedMassMatrices::new(&law, &disc, config.dt);
        let monitor_space = LevelTable::new(&disc.space, &quadrature.space.points);
        let tq = gauss_legendre(disc.t_order() + 3);
        let monitor_time = disc.time.tabulate(&tq.points).nodal;
        Ok(SlabSolver {
            disc,
            law,
            config,
            masses,
            quadrature,
            monitor_space,
            monitor_time,
        })
    }

    pub fn weighting(&self) -> TimeWeighting {
        self.quadrature.weighting
    }

    /// `J` and `tr F` at spatial x temporal Gauss points of a slab flow map.
    pub fn monitor(&self, phi_x: &[f64], phi_y: &[f64]) -> Vec<f64> {
        let topo = &self.disc.topology;
        let n_tr = topo.n_trace();
        let mut out = Vec::new();
        for q in 0..self.monitor_time.nrows() {
            let mut px = vec![0.0; n_tr];
            let mut py = vec![0.0; n_tr];
            for k in 0..=self.disc.t_order() {
                let h = self.monitor_time[(q, k)];
                let r = topo.level_nodes(k);
                for (a, g) in r.enumerate() {
                    px[a] += h * phi_x[g];
                    py[a] += h * phi_y[g];
                }
            }
            for f in self.monitor_space.deformation(&px, &py) {
                out.push(det(&f));
                out.push(f[0] + f[3]);
            }
        }
        out
    }

    /// Block system for the pressure weight of a slab flow-map iterate.
    pub fn assemble(
        &self,
        start: &LevelState,
        weights: &[Vec<f64>],
    ) -> Result<SlabSystem> {
        let m_pw = self
            .quadrature
            .assemble_m_pw(&self.disc, weights, self.config.dt)?;
        let dpk = build_dpk(&m_pw, &self.disc.incidence)?;
        assemble_slab(&self.disc, &self.masses.m_rho0_inv, &dpk, start)
    }

    /// Fixed-point iteration on the pressure weight, starting from the flow
    /// map frozen at its slab-start value.
    pub fn picard_solve(&self, slab: usize, start: &LevelState) -> Result<SlabSolution> {
        let wrap = |iteration: usize, e: Error| Error::Slab {
            slab,
            t: start.t,
            iteration,
            source: Box::new(e),
        };
        start.check(&self.disc).map_err(|e| wrap(0, e))?;
        let nt = self.disc.t_order();
        let mut phi_x: Vec<f64> = (0..=nt).flat_map(|_| start.phi_x.iter().copied()).collect();
        let mut phi_y: Vec<f64> = (0..=nt).flat_map(|_| start.phi_y.iter().copied()).collect();
        let mut samples = self.monitor(&phi_x, &phi_y);
        let mut prev_w: Option<Vec<Vec<f64>>> = None;
        let mut history = Vec::new();
        let omega = self.config.relaxation;

        for it in 1..=self.config.max_picard {
            let mut w = self
                .quadrature
                .weights(&self.law, &self.disc, &phi_x, &phi_y)
                .map_err(|e| wrap(it, e))?;
            if let Some(pw) = &prev_w {
                if omega < 1.0 {
                    for (row, prow) in w.iter_mut().zip(pw) {
                        for (v, p) in row.iter_mut().zip(prow) {
                            *v = omega * *v + (1.0 - omega) * p;
                        }
                    }
                }
            }
            let sys = self.assemble(start, &w).map_err(|e| wrap(it, e))?;
            let u = sys.solve().map_err(|e| wrap(it, e))?;
            phi_x = sys.block(&u, 2).to_vec();
            phi_y = sys.block(&u, 3).to_vec();
            let next = self.monitor(&phi_x, &phi_y);
            let change = samples
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            history.push(change);
            samples = next;
            prev_w = Some(w);
            if change <= self.config.tol {
                return self.finish(slab, start, &sys, &u, it, history);
            }
        }
        let last = history.last().copied().unwrap_or(f64::NAN);
        Err(wrap(
            self.config.max_picard,
            Error::PicardNonConvergence {
                tol: self.config.tol,
                iterations: self.config.max_picard,
                last,
                history,
            },
        ))
    }

    fn finish(
        &self,
        slab: usize,
        start: &LevelState,
        sys: &SlabSystem,
        u: &DVector<f64>,
        iterations: usize,
        history: Vec<f64>,
    ) -> Result<SlabSolution> {
        let dt = self.config.dt;
        let end_x = sys.block(u, 4).to_vec();
        let end_y = sys.block(u, 5).to_vec();
        let state = FieldState::from_dofs(
            &self.disc,
            start.t,
            dt,
            sys.block(u, 2).to_vec(),
            sys.block(u, 3).to_vec(),
            sys.block(u, 0).to_vec(),
            sys.block(u, 1).to_vec(),
            (start.pi_x.clone(), start.pi_y.clone()),
            (end_x.clone(), end_y.clone()),
        )?;
        let (phi_x, phi_y) = state.end_level(&self.disc);
        let end = LevelState {
            t: start.t + dt,
            phi_x,
            phi_y,
            pi_x: end_x,
            pi_y: end_y,
        };
        Ok(SlabSolution {
            slab,
            state,
            end,
            iterations,
            history,
        })
    }
}

/// A run in progress: the solver plus the current time level.
#[derive(Debug, Clone)]
pub struct Simulation {
    solver: SlabSolver,
    current: LevelState,
    slab: usize,
    /// Time of level 0; slab end times are `t0 + n dt`.
    t0: f64,
}

impl Simulation {
    /// Starts from the undeformed body at rest at `t = 0`.
    pub fn new(order: usize, t_order: usize, law: MaterialLaw, config: SolverConfig) -> Result<Self> {
        let disc = Discretization::new(order, t_order)?;
        let start = LevelState::rest(&disc, 0.0);
        Self::from_state(disc, law, config, start)
    }

    pub fn from_state(
        disc: Discretization,
        law: MaterialLaw,
        config: SolverConfig,
        start: LevelState,
    ) -> Result<Self> {
        start.check(&disc)?;
        let t0 = start.t;
        Ok(Simulation {
            solver: SlabSolver::new(disc, law, config)?,
            current: start,
            slab: 0,
            t0,
        })
    }

    pub fn solver(&self) -> &SlabSolver {
        &self.solver
    }

    pub fn discretization(&self) -> &Discretization {
        &self.solver.disc
    }

    pub fn law(&self) -> &MaterialLaw {
        &self.solver.law
    }

    pub fn current(&self) -> &LevelState {
        &self.current
    }

    /// Number of slabs solved so far.
    pub fn slabs_done(&self) -> usize {
        self.slab
    }

    /// Solves the next slab and hands its end level forward.
    pub fn step(&mut self) -> Result<SlabSolution> {
        let sol = self.solver.picard_solve(self.slab, &self.current)?;
        self.slab += 1;
        self.current = sol.end.clone();
        // end times as t0 + n dt rather than accumulated sums
        self.current.t = self.t0 + self.slab as f64 * self.solver.config.dt;
        let mut sol = sol;
        sol.end.t = self.current.t;
        Ok(sol)
    }
}

/// Runs `n_steps` slabs from rest and returns every slab solution.
pub fn time_stack(
    order: usize,
    t_order: usize,
    law: MaterialLaw,
    config: SolverConfig,
    n_steps: usize,
) -> Result<Vec<SlabSolution>> {
    let mut sim = Simulation::new(order, t_order, law, config)?;
    (0..n_steps).map(|_| sim.step()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn law(alpha: f64) -> MaterialLaw {
        MaterialLaw::with_alpha(1.25, 1.4, 1.0, alpha).unwrap()
    }

    #[test]
    fn system_size_order_two() {
        let disc = Discretization::new(2, 1).unwrap();
        let m = WeightedMassMatrices::new(&law(1.0), &disc, 0.01);
        let dpk = DMatrix::zeros(18, 18);
        let sys = assemble_slab(&disc, &m.m_rho0_inv, &dpk, &LevelState::rest(&disc, 0.0)).unwrap();
        assert_eq!(sys.matrix.shape(), (72, 72));
        assert_eq!(sys.size(), 72);
    }

    #[test]
    fn dpk_skew_and_kernel() {
        let disc = Discretization::new(3, 1).unwrap();
        let s = FieldState::from_flowmap(&disc, 0.0, 0.01, |x, y, t| {
            (x * (1.0 + 0.1 * y) + t, y + 0.05 * x * x)
        })
        .unwrap();
        let q = PressureQuadrature::default_for(&disc, TimeWeighting::Gauss).unwrap();
        let m = crate::constitutive::assemble_m_pw(&law(0.85), &disc, &q, &s.phi_x, &s.phi_y, 0.01)
            .unwrap();
        let d = build_dpk(&m, &disc.incidence).unwrap();
        assert_eq!((&d + d.transpose()).amax(), 0.0);
        let ones = DVector::from_element(d.nrows(), 1.0);
        assert!((d.transpose() * &ones).amax() <= 1e-15 * d.amax().max(1.0) * 10.0);
        assert!((&d * &ones).amax() <= 1e-15 * d.amax().max(1.0) * 10.0);
    }

    #[test]
    fn dpk_rejects_bad_shape() {
        let disc = Discretization::new(2, 1).unwrap();
        assert!(build_dpk(&DMatrix::zeros(3, 3), &disc.incidence).is_err());
    }

    #[test]
    fn equilibrium_converges_in_one_iteration() {
        let mut sim = Simulation::new(2, 1, law(1.0), SolverConfig::default()).unwrap();
        let start = sim.current().clone();
        let sol = sim.step().unwrap();
        assert_eq!(sol.iterations, 1);
        for (a, b) in sol.end.phi_x.iter().zip(&start.phi_x) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert!(sol.state.pi_x.iter().all(|v| v.abs() <= 1e-15));
        assert!(sol.end.pi_y.iter().all(|v| v.abs() <= 1e-15));
    }

    #[test]
    fn expansion_moves_boundary_outward() {
        let sols = time_stack(2, 1, law(0.85), SolverConfig::default(), 3).unwrap();
        // right-most node of the bottom row, x at X = 1
        let mut last = 1.0;
        for s in &sols {
            let x = s.end.phi_x[2];
            assert!(x > last, "{x} <= {last}");
            last = x;
        }
        let sols = time_stack(2, 1, law(1.15), SolverConfig::default(), 3).unwrap();
        assert!(sols[2].end.phi_x[2] < 1.0);
    }

    #[test]
    fn looser_tolerance_needs_fewer_iterations() {
        let tight = time_stack(3, 1, law(0.85), SolverConfig::default(), 1).unwrap();
        let cfg = SolverConfig {
            tol: 1e-3,
            ..SolverConfig::default()
        };
        let loose = time_stack(3, 1, law(0.85), cfg, 1).unwrap();
        assert!(loose[0].iterations <= tight[0].iterations);
    }

    #[test]
    fn non_convergence_reported() {
        let cfg = SolverConfig {
            max_picard: 1,
            ..SolverConfig::default()
        };
        let err = time_stack(2, 1, law(0.85), cfg, 1).unwrap_err();
        assert!(matches!(err.root(), Error::PicardNonConvergence { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SolverConfig { dt: 0.0, ..Default::default() },
            SolverConfig { tol: -1.0, ..Default::default() },
            SolverConfig { max_picard: 0, ..Default::default() },
            SolverConfig { relaxation: 1.5, ..Default::default() },
            SolverConfig { relaxation: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err());
        }
        assert!(SolverConfig::default().validate().is_ok());
    }
}
