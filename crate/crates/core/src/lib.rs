//! Structure-preserving space-time solver for two-dimensional Lagrangian
//! barotropic flow.
//!
//! The flow map is carried on the nodes of a tensor-product space-time
//! spectral element (one spatial element over `[0, 1]^2`, one time slab per
//! step), velocity and deformation gradient live on primal edges as edge
//! integrals, and momentum lives on the dual mesh. Discrete gradients are
//! integer incidence matrices, so linear momentum, angular momentum and mass
//! are conserved by construction and the slab update is energy-conserving.
//!
//! Module map:
//!
//! * [`basis1d`]: Gauss-Lobatto-Legendre nodes, nodal/edge/dual bases, 1D mass matrices.
//! * [`topology`]: DOF numbering and incidence matrices on a slab.
//! * [`fields`]: DOF containers, reduction and reconstruction.
//! * [`constitutive`]: barotropic equation of state and weighted mass matrices.
//! * [`assembly`]: the block system of one slab, Picard loop and time stacking.
//! * [`diagnostics`]: conserved quantities and point samples.
//! * [`config`] and [`io`]: run configuration and output files used by the CLI.

pub mod assembly;
pub mod basis1d;
pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod io;
pub mod quadrature;
pub mod topology;

pub use nalgebra;

pub use assembly::{Simulation, SlabSolution, SlabSolver, SolverConfig, TimeWeighting};
pub use basis1d::{gll_rule, Basis1D, GllRule};
pub use config::RunConfig;
pub use constitutive::MaterialLaw;
pub use diagnostics::{Diagnostics, InvariantRecord};
pub use error::{Error, Result};
pub use fields::{Discretization, Field, FieldState, LevelState, SampleGrid};
pub use topology::{build_topology, IncidenceSet, SlabTopology};
