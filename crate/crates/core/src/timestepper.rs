//! Time integration of the coupled system `w_t = nu Delta w + N(psi)`,
//! `Delta psi = w`, with implicit (Crank-Nicolson) viscosity and explicit
//! (Adams-Bashforth-2) treatment of the quadratic term.
//!
//! One step from (psi, w) at time t:
//!
//! 1. `Nbar` = AB2 extrapolation of `N(psi)` (first step: the plain current
//!    value, i.e. explicit Euler); with unequal consecutive steps the
//!    variable-coefficient form `N(1 + dt/(2 dt_prev)) - N_prev dt/(2 dt_prev)`
//!    keeps second order.
//! 2. `G = Nbar + forcing(t + dt/2)`, projected to zero r-weighted mean (the
//!    discrete term is compatible only to O(h^2); the Crank-Nicolson update
//!    preserves the weighted mean exactly, so the projection keeps the
//!    Poisson solvability defect at roundoff forever).
//! 3. `w+ = (1 - (nu dt/2) Delta)^{-1} [w + (nu dt/2) Delta w + dt G]` using
//!    the conservative Laplacian on the right and the matching modal
//!    Helmholtz solve on the left.
//! 4. `psi+ = Poisson(w+)` with the zero-mean gauge.
//!
//! A blow-up guard rejects steps that grow the vorticity sup norm past 1e6
//! times its initial value.

use crate::diagnostics::{self, EnergyReport};
use crate::elliptic::{Gauge, HelmholtzBc, ModalSolver};
use crate::error::{CnsError, Result};
use crate::grid::{project_weighted_mean, CylGrid, ScalarField};
use crate::operators::OperatorSet;
use crate::presets::Preset;
use std::sync::Arc;

/// Fixed or CFL-adaptive step size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// dt = cfl * min(h_min^2 / nu, h_min / max|u|), re-evaluated each step.
    Adaptive { cfl: f64 },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub nu: f64,
    pub time_step: TimeStep,
    pub t_end: f64,
    pub preset: Preset,
    pub linear_only: bool,
    /// Emit an EnergyReport every this many steps (plus t = 0 and the end).
    pub report_every: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(CnsError::InvalidConfig(format!(
                "viscosity must be positive, got {}",
                self.nu
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(CnsError::InvalidConfig(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        match self.time_step {
            TimeStep::Fixed(dt) if !(dt > 0.0) => Err(CnsError::InvalidConfig(format!(
                "time step must be positive, got {dt}"
            ))),
            TimeStep::Adaptive { cfl } if !(cfl > 0.0 && cfl <= 1.0) => Err(
                CnsError::InvalidConfig(format!("cfl must lie in (0, 1], got {cfl}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Trajectory point: the pair (psi, w), the explicit-term history, and the
/// bookkeeping the guard and the variable-step extrapolation need.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub psi: ScalarField,
    pub w: ScalarField,
    pub prev_nonlinear: ScalarField,
    pub prev_dt: Option<f64>,
    pub step_index: usize,
    /// Sup norm of the initial w, the blow-up guard reference.
    pub w0_linf: f64,
}

pub struct Stepper {
    grid: Arc<CylGrid>,
    pub ops: OperatorSet,
    pub modal: ModalSolver,
}

impl Stepper {
    pub fn new(grid: &Arc<CylGrid>) -> Self {
        Stepper {
            grid: Arc::clone(grid),
            ops: OperatorSet::new(grid),
            modal: ModalSolver::new(grid),
        }
    }

    pub fn grid(&self) -> &Arc<CylGrid> {
        &self.grid
    }

    /// Build a t = 0 state from an arbitrary stream function: psi is gauged
    /// to zero weighted mean, w = apply_delta(psi) with its weighted mean
    /// projected once (which keeps the per-step Poisson solves compatible at
    /// roundoff forever), and the explicit-term history is seeded at t = 0.
    pub fn state_from_psi(&self, mut psi: ScalarField) -> SolverState {
        project_weighted_mean(&mut psi);
        let mut w = self.ops.apply_delta(&psi);
        project_weighted_mean(&mut w);
        let prev_nonlinear = self.ops.nonlinear_terms(&psi, &w);
        let w0_linf = w.linf();
        SolverState {
            t: 0.0,
            psi,
            w,
            prev_nonlinear,
            prev_dt: None,
            step_index: 0,
            w0_linf,
        }
    }

    /// Build the t = 0 state from a preset (the Gaussian preset is first run
    /// through the cutoff projection, which requires a `[1/(2n), 2n]`
    /// domain).
    pub fn initial_state(&self, preset: &Preset) -> Result<SolverState> {
        let psi = match preset {
            Preset::GaussCos { .. } => {
                let n = infer_expansion_index(&self.grid).ok_or_else(|| {
                    CnsError::PresetDomainMismatch {
                        preset: preset.name().to_string(),
                        reason: format!(
                            "domain [{}, {}] is not of the form [1/(2n), 2n]",
                            self.grid.r0, self.grid.r1
                        ),
                    }
                })?;
                let chi = crate::cutoff::build_chi(n)?;
                let seed = preset.sample(&self.grid);
                crate::cutoff::project_initial(&seed, &chi, &self.ops, &self.modal)?
            }
            _ => preset.sample(&self.grid),
        };
        Ok(self.state_from_psi(psi))
    }

    /// Advance one step. `linear_only` drops the quadratic term (Stokes
    /// limit).
    pub fn step(
        &self,
        state: &SolverState,
        dt: f64,
        nu: f64,
        linear_only: bool,
    ) -> Result<SolverState> {
        self.step_forced(state, dt, nu, linear_only, None)
    }

    /// Advance one step with an extra explicit source sampled at t + dt/2
    /// (manufactured-solution plumbing).
    pub fn step_forced(
        &self,
        state: &SolverState,
        dt: f64,
        nu: f64,
        linear_only: bool,
        forcing: Option<&ScalarField>,
    ) -> Result<SolverState> {
        assert!(dt > 0.0 && nu > 0.0);
        let n_cur = if linear_only {
            ScalarField::zeros(&self.grid)
        } else {
            self.ops.nonlinear_terms(&state.psi, &state.w)
        };
        // explicit term, AB2-extrapolated to t + dt/2
        let mut explicit = if linear_only && forcing.is_none() {
            None
        } else {
            let mut nbar = n_cur.clone();
            if !linear_only && state.step_index > 0 {
                let ratio = dt / (2.0 * state.prev_dt.unwrap_or(dt));
                nbar.scale(1.0 + ratio);
                nbar.axpy(-ratio, &state.prev_nonlinear);
            }
            if let Some(f) = forcing {
                nbar.axpy(1.0, f);
            }
            Some(nbar)
        };
        if let Some(g) = explicit.as_mut() {
            project_weighted_mean(g);
        }
        // Crank-Nicolson right-hand side, then the implicit solve
        let c = 0.5 * nu * dt;
        let mut rhs = state.w.clone();
        let lap_w = self.ops.conservative_delta(&state.w);
        rhs.axpy(c, &lap_w);
        if let Some(g) = &explicit {
            rhs.axpy(dt, g);
        }
        let w_next = self
            .modal
            .solve_helmholtz(1.0, c, &rhs, HelmholtzBc::NeumannWalls);
        let guard = 1e6 * if state.w0_linf > 0.0 { state.w0_linf } else { 1.0 };
        if !w_next.values.iter().all(|v| v.is_finite()) || w_next.linf() > guard {
            return Err(CnsError::SolverDiverged { t: state.t + dt });
        }
        let psi_next = self.modal.solve_poisson_neumann(&w_next, Gauge::ZeroMean)?;
        Ok(SolverState {
            t: state.t + dt,
            psi: psi_next,
            w: w_next,
            prev_nonlinear: n_cur,
            prev_dt: Some(dt),
            step_index: state.step_index + 1,
            w0_linf: state.w0_linf,
        })
    }

    /// Largest pointwise velocity magnitude implied by psi (the components
    /// are d_r d_3 psi and -Delta_r psi), for the advective CFL bound.
    pub fn velocity_sup(&self, psi: &ScalarField) -> f64 {
        let a = self.ops.apply_dr(&self.ops.apply_dz(psi));
        let c = self.ops.apply_delta_r(psi);
        a.values
            .iter()
            .zip(&c.values)
            .map(|(x, y)| (x * x + y * y).sqrt())
            .fold(0.0, f64::max)
    }

    /// Step size the configured policy selects from the current state,
    /// clamped to the time remaining. Drivers that interleave their own
    /// output with stepping use this to reproduce `run` exactly.
    pub fn pick_dt(&self, cfg: &RunConfig, state: &SolverState, remaining: f64) -> f64 {
        match cfg.time_step {
            TimeStep::Fixed(dt) => dt.min(remaining),
            TimeStep::Adaptive { cfl } => {
                let h_min = self.grid.dr.min(self.grid.dz);
                let mut dt = cfl * h_min * h_min / cfg.nu;
                let umax = self.velocity_sup(&state.psi);
                if umax > 1e-12 {
                    dt = dt.min(cfl * h_min / umax);
                }
                dt.min(remaining)
            }
        }
    }

    /// Integrate to `t_end`, reporting energies at the configured cadence
    /// (first report at t = 0, final state always reported).
    pub fn run(&self, cfg: &RunConfig) -> Result<(SolverState, Vec<EnergyReport>)> {
        cfg.validate()?;
        let mut state = self.initial_state(&cfg.preset)?;
        let mut reports = vec![diagnostics::report(&state)];
        let every = cfg.report_every.max(1);
        let tiny = 1e-12 * cfg.t_end.max(1.0);
        while state.t < cfg.t_end - tiny {
            let dt = self.pick_dt(cfg, &state, cfg.t_end - state.t);
            state = self.step(&state, dt, cfg.nu, cfg.linear_only)?;
            let done = state.t >= cfg.t_end - tiny;
            if state.step_index % every == 0 || done {
                reports.push(diagnostics::report(&state));
            }
        }
        Ok((state, reports))
    }
}

/// Recognize a `[1/(2n), 2n]` expansion-level domain and return n.
pub fn infer_expansion_index(grid: &CylGrid) -> Option<u32> {
    let n = (grid.r1 / 2.0).round();
    if n >= 1.0
        && n <= 1e6
        && (grid.r1 - 2.0 * n).abs() <= 1e-9
        && (grid.r0 - 1.0 / (2.0 * n)).abs() <= 1e-9
    {
        Some(n as u32)
    } else {
        None
    }
}
