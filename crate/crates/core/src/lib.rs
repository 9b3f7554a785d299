//! Solver core for an incompressible flow model on a ring cylinder
//! (annulus in the (x1, x2)-plane, periodic in x3), written in a reduced
//! scalar stream-function form:
//!
//! ```text
//!     w_t = nu * Delta w + N(psi),      Delta psi = w,
//!     N(psi) = int_{r0}^{r} [ Delta_r psi * d_s d_3 w
//!                           - s d_s((1/s) d_s w) * d_s d_3 psi ] ds,
//! ```
//!
//! with `Delta_r = d_r^2 + (1/r) d_r`, `Delta = Delta_r + d_3^2`, homogeneous
//! Neumann wall conditions `d_r psi = d_r w = 0`, and periodicity in x3.
//! The 3D velocity is reconstructed from psi as
//! `u = ((x1/r) d_r d_3 psi, (x2/r) d_r d_3 psi, -Delta_r psi)`,
//! which is divergence-free by construction.
//!
//! Modules, bottom up:
//! - [`sum`]: compensated (Neumaier) summation for deterministic reductions
//! - [`quad`]: Gauss-Legendre quadrature (geometry weights and test oracles)
//! - [`jet`]: truncated Taylor arithmetic for radial profile derivatives
//! - [`fdweights`]: finite-difference weights on arbitrary stencils
//! - [`grid`]: the (r, x3) tensor grid and weighted integrals
//! - [`operators`]: stencil and conservative (flux-form) difference operators
//! - [`elliptic`]: mode-decoupled Poisson/Helmholtz solves with wall-Neumann
//!   closure
//! - [`presets`]: built-in initial stream functions
//! - [`timestepper`]: Crank-Nicolson / Adams-Bashforth-2 IMEX integration
//! - [`diagnostics`]: energy functionals, identity residuals, inequality checks
//! - [`cutoff`]: radial cutoff sequence, initial-data projection, and the
//!   domain-expansion study
//! - [`reconstruct`]: Cartesian velocity/vorticity sampling and the
//!   vorticity-equation residual
//! - [`manufactured`]: forced manufactured-solution runs for convergence
//!   measurement

pub mod cutoff;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod fdweights;
pub mod grid;
pub mod jet;
pub mod manufactured;
pub mod operators;
pub mod presets;
pub mod quad;
pub mod reconstruct;
pub mod sum;
pub mod timestepper;

pub use error::CnsError;
pub use grid::{build_grid, CylGrid, ScalarField};
pub use operators::OperatorSet;
pub use elliptic::{Gauge, HelmholtzBc, ModalSolver};
pub use presets::Preset;
pub use timestepper::{RunConfig, SolverState, Stepper, TimeStep};
pub use diagnostics::EnergyReport;
pub use reconstruct::{BoxGrid, VelocityField};
pub use cutoff::CutoffProfile;
