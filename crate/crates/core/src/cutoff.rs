//! Radial cutoff masks, projection of initial data onto annuli, and the
//! domain-expansion convergence study.
//!
//! The mask family chi^n equals 1 on [1/n, n], vanishes outside
//! [1/(2n), 2n], and ramps with quintic smoothsteps (C^2). Because both
//! ramps have width comparable to their location, r |chi'| is bounded by a
//! single constant for every n — the discrete analogue of the uniform bound
//! that lets annuli exhaust the whole space.
//!
//! Projection replaces the radial slope of Delta psi0 by its chi-weighted
//! version: g = chi d_r(Delta psi0), Delta psi0^n = antiderivative of g
//! vanishing at the inner wall, psi0^n = Poisson(Delta psi0^n). Both wall
//! conditions hold by construction, and |g| <= |d_r Delta psi0| pointwise
//! makes the r- and 1/r-weighted bounds on the projected data exact.

use crate::elliptic::{Gauge, ModalSolver};
use crate::error::{CnsError, Result};
use crate::grid::{
    build_grid, project_weighted_mean, weighted_integral, CylGrid, ScalarField,
};
use crate::operators::{face_weighted_integral, OperatorSet};
use crate::presets::Preset;
use crate::timestepper::{RunConfig, Stepper, TimeStep};
use rayon::prelude::*;
use std::sync::Arc;

/// Quintic smoothstep: s^3 (6 s^2 - 15 s + 10), monotone C^2 bridge 0 -> 1.
fn smoothstep5(s: f64) -> f64 {
    s * s * s * (6.0 * s * s - 15.0 * s + 10.0)
}

/// Derivative 30 s^2 (s - 1)^2, peak 15/8 at s = 1/2.
fn smoothstep5_deriv(s: f64) -> f64 {
    30.0 * s * s * (s - 1.0) * (s - 1.0)
}

/// Radial mask: 0 below `inner.0`, quintic ramp up across `inner`, 1 between,
/// quintic ramp down across `outer`, 0 above `outer.1`.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    pub n: u32,
    inner: (f64, f64),
    outer: (f64, f64),
}

impl CutoffProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let (a, b) = self.inner;
        let (c, d) = self.outer;
        if r <= a || r >= d {
            0.0
        } else if r < b {
            smoothstep5((r - a) / (b - a))
        } else if r <= c {
            1.0
        } else {
            smoothstep5((d - r) / (d - c))
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let (a, b) = self.inner;
        let (c, d) = self.outer;
        if r <= a || r >= d || (r >= b && r <= c) {
            0.0
        } else if r < b {
            smoothstep5_deriv((r - a) / (b - a)) / (b - a)
        } else {
            -smoothstep5_deriv((d - r) / (d - c)) / (d - c)
        }
    }

    /// sup over r of r |chi'(r)| by dense sampling (1e5 points per ramp).
    /// Both ramps span a factor of 2 in r, so the sup reduces to
    /// max_s (1+s) S'(s) independently of n.
    pub fn sup_r_dchi(&self) -> f64 {
        const K: usize = 100_000;
        let mut sup = 0.0f64;
        for &(lo, hi) in &[self.inner, self.outer] {
            for k in 0..=K {
                let s = k as f64 / K as f64;
                let r = lo + s * (hi - lo);
                sup = sup.max((r * self.deriv(r)).abs());
            }
        }
        sup
    }
}

/// Build the n-th mask. The ramps sit on [1/(2n), 1/n] and [n, 2n].
pub fn build_chi(n: u32) -> Result<CutoffProfile> {
    if n < 1 {
        return Err(CnsError::InvalidConfig(
            "cutoff index must be at least 1".into(),
        ));
    }
    let nf = n as f64;
    Ok(CutoffProfile {
        n,
        inner: (1.0 / (2.0 * nf), 1.0 / nf),
        outer: (nf, 2.0 * nf),
    })
}

/// The chi-weighted radial slope g = chi(r) d_r(Delta psi0), the field whose
/// antiderivative defines the projected data. Delta is taken in conservative
/// form so that re-projecting a projected field reproduces g exactly (the
/// elliptic solve inverts the conservative operator at machine precision).
fn chi_weighted_slope(
    psi0: &ScalarField,
    chi: &CutoffProfile,
    ops: &OperatorSet,
) -> ScalarField {
    let grid = psi0.grid.clone();
    let lap = ops.conservative_delta(psi0);
    let mut g = ops.apply_dr(&lap);
    for j in 0..grid.nz {
        for i in 0..grid.nr {
            *g.at_mut(i, j) *= chi.eval(grid.r[i]);
        }
    }
    g
}

/// Row-wise antiderivative W of g with W(r0) = 0, built so the centered
/// difference recovers g exactly: W_{i+1} = W_{i-1} + 2 dr g_i (midpoint
/// rule on each parity class, seeded by one trapezoid cell). This is what
/// makes the projection idempotent at roundoff rather than merely to O(h^2).
fn centered_antiderivative(g: &ScalarField) -> ScalarField {
    let grid = g.grid.clone();
    let (nr, dr) = (grid.nr, grid.dr);
    let mut w = ScalarField::zeros(&grid);
    for j in 0..grid.nz {
        *w.at_mut(1, j) = 0.5 * dr * (g.at(0, j) + g.at(1, j));
        for i in 1..nr - 1 {
            *w.at_mut(i + 1, j) = w.at(i - 1, j) + 2.0 * dr * g.at(i, j);
        }
    }
    w
}

/// Project initial data onto the annulus carrying `chi`: build g, integrate
/// it radially from the inner wall, and solve the Neumann Poisson problem.
/// The result satisfies d_r psi = 0 at both walls by the solve and
/// d_r Delta psi = g by construction.
pub fn project_initial(
    psi0: &ScalarField,
    chi: &CutoffProfile,
    ops: &OperatorSet,
    modal: &ModalSolver,
) -> Result<ScalarField> {
    let g = chi_weighted_slope(psi0, chi, ops);
    let mut wn = centered_antiderivative(&g);
    project_weighted_mean(&mut wn);
    modal.solve_poisson_neumann(&wn, Gauge::ZeroMean)
}

/// Both sides of the two projection bounds
/// `int g^2 r^p  <=  int (d_r Delta psi0)^2 r^p`, p = +1 and p = -1.
/// They hold exactly because g is a pointwise product with |chi| <= 1.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionBounds {
    pub lhs_r: f64,
    pub rhs_r: f64,
    pub lhs_inv_r: f64,
    pub rhs_inv_r: f64,
}

impl ProjectionBounds {
    /// Largest relative amount by which either bound is violated (0 = clean).
    pub fn worst_violation(&self) -> f64 {
        let v1 = (self.lhs_r - self.rhs_r) / self.rhs_r.max(1e-300);
        let v2 = (self.lhs_inv_r - self.rhs_inv_r) / self.rhs_inv_r.max(1e-300);
        v1.max(v2).max(0.0)
    }
}

pub fn projection_bounds(
    psi0: &ScalarField,
    chi: &CutoffProfile,
    ops: &OperatorSet,
) -> ProjectionBounds {
    let grid = psi0.grid.clone();
    let lap = ops.conservative_delta(psi0);
    let slope = ops.apply_dr(&lap);
    let mut g = slope.clone();
    for j in 0..grid.nz {
        for i in 0..grid.nr {
            *g.at_mut(i, j) *= chi.eval(grid.r[i]);
        }
    }
    let sq = |f: &ScalarField| {
        let mut out = f.clone();
        for v in &mut out.values {
            *v *= *v;
        }
        out
    };
    let (g2, s2) = (sq(&g), sq(&slope));
    ProjectionBounds {
        lhs_r: weighted_integral(&g2, 1),
        rhs_r: weighted_integral(&s2, 1),
        lhs_inv_r: weighted_integral(&g2, -1),
        rhs_inv_r: weighted_integral(&s2, -1),
    }
}

/// L2 norm and H1 seminorm of the velocity a stream function represents,
/// via the norm-equivalence integrals: |u|^2 integrates
/// (Delta_r psi)^2 + (d_r d_3 psi)^2 over the annulus cross-section times
/// 2 pi, and the H1 seminorm integrates |d_r Delta psi|^2 likewise.
pub fn velocity_norms(psi: &ScalarField) -> (f64, f64) {
    let grid = psi.grid.clone();
    let ops = OperatorSet::new(&grid);
    let sq_field = {
        let mut f = ops.conservative_delta_r(psi);
        for v in &mut f.values {
            *v *= *v;
        }
        f
    };
    let sq_faces = |mut h: Vec<f64>| {
        for v in &mut h {
            *v *= *v;
        }
        h
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let l2 = two_pi
        * (weighted_integral(&sq_field, 1)
            + face_weighted_integral(&grid, &sq_faces(ops.face_dr(&ops.apply_dz(psi))), 1));
    let h1 = two_pi
        * face_weighted_integral(&grid, &sq_faces(ops.face_dr(&ops.conservative_delta(psi))), 1);
    (l2.sqrt(), h1.sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct ExpansionLevel {
    pub n: u32,
    pub nr: usize,
    pub l2_u: f64,
    pub h1_u: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ExpansionDiff {
    pub n_coarse: u32,
    pub n_fine: u32,
    /// ||u^n - u^{2n}||_{L2} over the base annulus.
    pub l2: f64,
    /// H1 seminorm of the same difference.
    pub h1: f64,
}

#[derive(Debug, Clone)]
pub struct ExpansionStudy {
    pub levels: Vec<ExpansionLevel>,
    pub diffs: Vec<ExpansionDiff>,
}

/// Run the solver on nested annuli [1/(2n), 2n], n = base_n 2^k, all sharing
/// the same physical spacing dr and axial grid, from the projected Gaussian
/// initial data, and measure successive velocity differences over the base
/// annulus. Levels run in parallel; each is independently deterministic.
#[allow(clippy::too_many_arguments)]
pub fn expansion_study(
    base_n: u32,
    levels: usize,
    dr: f64,
    nz: usize,
    l3: f64,
    nu: f64,
    dt: f64,
    t_end: f64,
    amplitude: f64,
    axial_mode: u32,
) -> Result<ExpansionStudy> {
    if levels < 2 {
        return Err(CnsError::InsufficientLevels(levels));
    }
    if levels > 12 || base_n.checked_shl(levels as u32).is_none() {
        return Err(CnsError::InvalidConfig(format!(
            "expansion with {levels} levels from base {base_n} overflows"
        )));
    }
    let level_grid = |n: u32| -> Result<Arc<CylGrid>> {
        let (r0, r1) = (1.0 / (2.0 * n as f64), 2.0 * n as f64);
        let cells = (r1 - r0) / dr;
        let rounded = cells.round();
        if (cells - rounded).abs() > 1e-9 {
            return Err(CnsError::InvalidDomain(format!(
                "spacing {dr} does not tile the level-{n} annulus [{r0}, {r1}]"
            )));
        }
        Ok(Arc::new(build_grid(r0, r1, l3, rounded as usize + 1, nz)?))
    };
    let runs: Vec<Result<(Arc<CylGrid>, ScalarField, ExpansionLevel)>> = (0..levels)
        .into_par_iter()
        .map(|k| {
            let n = base_n << k;
            let grid = level_grid(n)?;
            let stepper = Stepper::new(&grid);
            let cfg = RunConfig {
                nu,
                time_step: TimeStep::Fixed(dt),
                t_end,
                preset: Preset::GaussCos {
                    amplitude,
                    axial_mode,
                },
                linear_only: false,
                report_every: usize::MAX / 2,
            };
            let (state, _) = stepper.run(&cfg)?;
            let (l2_u, h1_u) = velocity_norms(&state.psi);
            Ok((
                grid,
                state.psi,
                ExpansionLevel {
                    n,
                    nr: 0,
                    l2_u,
                    h1_u,
                },
            ))
        })
        .collect();
    let mut fields = Vec::with_capacity(levels);
    let mut level_rows = Vec::with_capacity(levels);
    for run in runs {
        let (grid, psi, mut row) = run?;
        row.nr = grid.nr;
        fields.push((grid, psi));
        level_rows.push(row);
    }
    let base_grid = fields[0].0.clone();
    let restrict = |grid_k: &Arc<CylGrid>, psi: &ScalarField| -> ScalarField {
        let off = ((base_grid.r0 - grid_k.r0) / grid_k.dr).round() as usize;
        debug_assert!((grid_k.r[off] - base_grid.r0).abs() < 1e-9);
        ScalarField::from_values(
            &base_grid,
            (0..base_grid.nz)
                .flat_map(|j| {
                    (0..base_grid.nr).map(move |i| psi.values[j * grid_k.nr + off + i])
                })
                .collect(),
        )
    };
    let mut diffs = Vec::with_capacity(levels - 1);
    for k in 0..levels - 1 {
        let coarse = restrict(&fields[k].0, &fields[k].1);
        let fine = restrict(&fields[k + 1].0, &fields[k + 1].1);
        let mut d = coarse;
        d.axpy(-1.0, &fine);
        project_weighted_mean(&mut d);
        let (l2, h1) = velocity_norms(&d);
        diffs.push(ExpansionDiff {
            n_coarse: base_n << k,
            n_fine: base_n << (k + 1),
            l2,
            h1,
        });
    }
    Ok(ExpansionStudy {
        levels: level_rows,
        diffs,
    })
}
