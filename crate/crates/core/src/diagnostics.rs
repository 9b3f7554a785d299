//! Weighted energy functionals of a trajectory and the discrete balance laws
//! they satisfy.
//!
//! Two families of quantities are tracked:
//!
//! * flux-form functionals built from the conservative operators, so that the
//!   summation-by-parts cancellations behind the energy balances hold at the
//!   discrete level: `E0/D1` (r-weighted) and `Ew/Dw` (1/r-weighted),
//! * higher-order functionals `D2/E3` of the stream function alone, evaluated
//!   per axial Fourier mode with high-order radial stencils (they involve up
//!   to fifth radial derivatives, beyond what second-order node stencils can
//!   resolve).
//!
//! The balance checks compare centered time differences of the energies
//! against trapezoid averages of the matching dissipations:
//! `dE0/dt = -2 nu D1` and `(1/2) dEw/dt = -nu Dw`.

use crate::error::{CnsError, Result};
use crate::fdweights;
use crate::grid::{weighted_integral, ScalarField};
use crate::operators::{face_weighted_integral, OperatorSet};
use crate::sum::Neumaier;
use crate::timestepper::SolverState;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;

/// Snapshot of the energy functionals at one output time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// r-weighted energy: |Delta_r psi|^2 + |d_r d_3 psi|^2, weight r.
    pub e0: f64,
    /// Matching dissipation: |d_r w|^2 on faces, weight r.
    pub d1: f64,
    /// 1/r-weighted slope energy: |d_r w|^2 on faces, weight 1/r.
    pub ew: f64,
    /// 1/r-weighted dissipation: |r d_r((1/r) d_r w)|^2 + |d_r d_3 w|^2, weight 1/r.
    pub dw: f64,
    /// Gradient energy of w; identical to d1 by construction.
    pub e1: f64,
    /// Second-level dissipation |Delta_r(Delta psi)|^2 + |d_r d_3 Delta psi|^2, weight r.
    pub d2: f64,
    /// Third-level energy |d_r Delta(Delta psi)|^2-type functional, weight r.
    pub e3: f64,
    /// Sup norm of d_r d_3 psi (the radial velocity amplitude).
    pub linf_dr_dz_psi: f64,
}

fn squared(f: &ScalarField) -> ScalarField {
    let mut out = f.clone();
    for v in &mut out.values {
        *v *= *v;
    }
    out
}

fn squared_faces(mut h: Vec<f64>) -> Vec<f64> {
    for v in &mut h {
        *v *= *v;
    }
    h
}

/// Evaluate all energy functionals on the current (psi, w) pair. The pair is
/// used as-is: psi-based quantities ignore w and vice versa, so the report is
/// meaningful for any consistent state.
pub fn report(state: &SolverState) -> EnergyReport {
    let grid = state.psi.grid.clone();
    let ops = OperatorSet::new(&grid);
    let psi = &state.psi;
    let w = &state.w;

    let fv_dr_psi = ops.conservative_delta_r(psi);
    let dz_psi = ops.apply_dz(psi);
    let face_dz_psi = squared_faces(ops.face_dr(&dz_psi));
    let sq_dr_psi = squared(&fv_dr_psi);
    let e0 = weighted_integral(&sq_dr_psi, 1) + face_weighted_integral(&grid, &face_dz_psi, 1);

    // D1, E1, and Ew share the face values of d_r w; only the weight differs
    let face_dr_w = squared_faces(ops.face_dr(w));
    let d1 = face_weighted_integral(&grid, &face_dr_w, 1);
    let ew = face_weighted_integral(&grid, &face_dr_w, -1);

    let star_w = ops.conservative_star_r(w);
    let dz_w = ops.apply_dz(w);
    let dw = weighted_integral(&squared(&star_w), -1)
        + face_weighted_integral(&grid, &squared_faces(ops.face_dr(&dz_w)), -1);

    let (d2, e3) = modal_high_order(psi);
    let linf = ops.apply_dr(&dz_psi).linf();

    EnergyReport {
        t: state.t,
        e0,
        d1,
        ew,
        dw,
        e1: d1,
        d2,
        e3,
        linf_dr_dz_psi: linf,
    }
}

/// D2 and E3 from the stream function, mode by axial mode.
///
/// For each Fourier mode with wavenumber kappa = m pi / l3 the radial profile
/// is differentiated with high-order one-application stencils, the Laplacian
/// chain `D psi, (D psi)', (D psi)'', (D psi)'''` is assembled from exact
/// cylindrical identities, and the integrals are summed by the discrete
/// Parseval relation (trapezoid in r, exact in z).
fn modal_high_order(psi: &ScalarField) -> (f64, f64) {
    let g = &psi.grid;
    let (nr, nz) = (g.nr, g.nz);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(nz);
    let mut spec = vec![Complex::new(0.0, 0.0); nr * nz];
    let mut buf = vec![Complex::new(0.0, 0.0); nz];
    for i in 0..nr {
        for j in 0..nz {
            buf[j] = Complex::new(psi.at(i, j), 0.0);
        }
        fft.process(&mut buf);
        spec[i * nz..(i + 1) * nz].copy_from_slice(&buf);
    }
    let mut acc_d2 = Neumaier::new();
    let mut acc_e3 = Neumaier::new();
    for m in 0..=nz / 2 {
        let kap = m as f64 * PI / g.l3;
        let k2 = kap * kap;
        let weight = if m == 0 || 2 * m == nz { 1.0 } else { 2.0 };
        let re: Vec<f64> = (0..nr).map(|i| spec[i * nz + m].re).collect();
        let im: Vec<f64> = (0..nr).map(|i| spec[i * nz + m].im).collect();
        // d[k-1][part] holds the k-th radial derivative of each part
        let d: Vec<[Vec<f64>; 2]> = (1..=5)
            .map(|k| {
                [
                    fdweights::deriv_profile(&re, g.dr, k),
                    fdweights::deriv_profile(&im, g.dr, k),
                ]
            })
            .collect();
        for i in 0..nr {
            let r = g.r[i];
            let mut int_d2 = 0.0;
            let mut int_e3 = 0.0;
            for p in 0..2 {
                let f1 = d[0][p][i];
                let f2 = d[1][p][i];
                let f3 = d[2][p][i];
                let f4 = d[3][p][i];
                let f5 = d[4][p][i];
                // radial derivatives of D psi = f'' + f'/r - kappa^2 f
                let dp1 = f3 + f2 / r - f1 / (r * r) - k2 * f1;
                let dp2 = f4 + f3 / r - 2.0 * f2 / (r * r) + 2.0 * f1 / r.powi(3) - k2 * f2;
                let dp3 = f5 + f4 / r - 3.0 * f3 / (r * r) + 6.0 * f2 / r.powi(3)
                    - 6.0 * f1 / r.powi(4)
                    - k2 * f3;
                let lap = dp2 + dp1 / r;
                int_d2 += lap * lap + k2 * dp1 * dp1;
                let grad3 = dp3 + dp2 / r - dp1 / (r * r) - k2 * dp1;
                int_e3 += grad3 * grad3;
            }
            acc_d2.add(weight * g.wr[i] * r * int_d2);
            acc_e3.add(weight * g.wr[i] * r * int_e3);
        }
    }
    let factor = 2.0 * g.l3 / (nz as f64 * nz as f64);
    (factor * acc_d2.value(), factor * acc_e3.value())
}

/// Relative residual of the r-weighted balance on each report interval:
/// `(E0_{k+1} - E0_k)/dt + 2 nu (D1_k + D1_{k+1})/2`, normalized by the
/// dissipation scale. Returns (midpoint time, residual) pairs.
pub fn identity_residual_l2(reports: &[EnergyReport], nu: f64) -> Vec<(f64, f64)> {
    reports
        .windows(2)
        .map(|p| {
            let dt = p[1].t - p[0].t;
            let de = (p[1].e0 - p[0].e0) / dt;
            let dmid = 0.5 * (p[0].d1 + p[1].d1);
            let rho = (de + 2.0 * nu * dmid) / (2.0 * nu * dmid).abs().max(1e-14);
            (0.5 * (p[0].t + p[1].t), rho)
        })
        .collect()
}

/// Relative residual of the 1/r-weighted balance:
/// `(Ew_{k+1} - Ew_k)/(2 dt) + nu (Dw_k + Dw_{k+1})/2`, normalized by the
/// dissipation scale.
pub fn identity_residual_weighted(reports: &[EnergyReport], nu: f64) -> Vec<(f64, f64)> {
    reports
        .windows(2)
        .map(|p| {
            let dt = p[1].t - p[0].t;
            let de = (p[1].ew - p[0].ew) / (2.0 * dt);
            let dmid = 0.5 * (p[0].dw + p[1].dw);
            let rho = (de + nu * dmid) / (nu * dmid).abs().max(1e-14);
            (0.5 * (p[0].t + p[1].t), rho)
        })
        .collect()
}

/// Worst ratio of E1(t) against the a-priori bound
/// `E1(0) * exp(2 Ew(0) t) * 1.1`, and whether every report respects it.
pub fn gronwall_bound(reports: &[EnergyReport]) -> (f64, bool) {
    if reports.is_empty() {
        return (0.0, true);
    }
    let e10 = reports[0].e1;
    let ew0 = reports[0].ew;
    let t0 = reports[0].t;
    let mut worst = 0.0f64;
    for r in reports {
        let bound = e10 * (2.0 * ew0 * (r.t - t0)).exp() * 1.1;
        let ratio = if bound > 0.0 {
            r.e1 / bound
        } else if r.e1 == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(ratio);
    }
    (worst, worst <= 1.0)
}

/// Worst step-to-step growth factor of Ew, and whether it stays within the
/// given slack (exact decay would give factors <= 1).
pub fn ew_monotone(reports: &[EnergyReport], slack: f64) -> (f64, bool) {
    let mut worst = 0.0f64;
    for p in reports.windows(2) {
        worst = worst.max(p[1].ew / p[0].ew.max(1e-300));
    }
    (worst, worst <= slack)
}

/// Result of the sup-norm interpolation bound
/// `max|f|  <=  sqrt(2) (||f|| ||f'||)^{1/2}` on a radial profile.
#[derive(Debug, Clone, Copy)]
pub struct InterpolationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Check the interpolation bound on a uniform profile with spacing `dr`.
/// Norms are plain (unweighted) trapezoid L2 norms; the derivative uses the
/// same one-application stencils as the energy functionals. The bound needs
/// decay at the interval ends, so profiles whose endpoint values exceed
/// 1e-6 of the sup are rejected as `DecayViolation`. Quadrature and stencil
/// errors are absorbed by a `(1 + 10 dr)` slack on the right-hand side.
pub fn check_linf_interpolation(f: &[f64], dr: f64) -> Result<InterpolationCheck> {
    assert!(f.len() >= 8 && dr > 0.0);
    let n = f.len();
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let endpoint = f[0].abs().max(f[n - 1].abs());
    if sup > 0.0 && endpoint > 1e-6 * sup {
        return Err(CnsError::DecayViolation { endpoint, sup });
    }
    let df = fdweights::deriv_profile(f, dr, 1);
    let trapz = |v: &[f64]| -> f64 {
        let mut acc = Neumaier::new();
        for (i, x) in v.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc.add(w * dr * x * x);
        }
        acc.value().sqrt()
    };
    let rhs = f64::sqrt(2.0) * (trapz(f) * trapz(&df)).sqrt();
    let ok = sup <= rhs * (1.0 + 10.0 * dr);
    Ok(InterpolationCheck { lhs: sup, rhs, ok })
}

/// Both sides of the two structural decompositions of w-derivative energies
/// into stream-function pieces (w derived from psi by the conservative
/// Laplacian, so the decompositions close at the discrete level).
#[derive(Debug, Clone, Copy)]
pub struct ObservationIdentities {
    /// ||d_r w||^2 (r-weight) and its three-piece decomposition.
    pub lhs_grad: f64,
    pub rhs_grad: f64,
    /// ||Delta_r w||^2 (r-weight) and its four-piece decomposition.
    pub lhs_lap: f64,
    pub rhs_lap: f64,
}

impl ObservationIdentities {
    pub fn rel_grad(&self) -> f64 {
        (self.lhs_grad - self.rhs_grad).abs() / self.lhs_grad.max(self.rhs_grad).max(1e-300)
    }
    pub fn rel_lap(&self) -> f64 {
        (self.lhs_lap - self.rhs_lap).abs() / self.lhs_lap.max(self.rhs_lap).max(1e-300)
    }
}

/// Evaluate the decompositions on w = Delta psi (conservative form).
pub fn check_observation_identities(psi: &ScalarField) -> ObservationIdentities {
    let grid = psi.grid.clone();
    let ops = OperatorSet::new(&grid);
    let w = ops.conservative_delta(psi);
    let dzz = ops.apply_d2z(psi);
    let dz_psi = ops.apply_dz(psi);

    let lhs_grad = face_weighted_integral(&grid, &squared_faces(ops.face_dr(&w)), 1);
    let rhs_grad = face_weighted_integral(
        &grid,
        &squared_faces(ops.face_dr(&ops.conservative_delta_r(psi))),
        1,
    ) + face_weighted_integral(&grid, &squared_faces(ops.face_dr(&dzz)), 1)
        + 2.0 * weighted_integral(&squared(&ops.conservative_delta_r(&dz_psi)), 1);

    let lhs_lap = weighted_integral(&squared(&ops.conservative_delta_r(&w)), 1);
    let star_dzz = ops.conservative_star_r(&dzz);
    let dr_dzz = ops.apply_dr(&dzz);
    let mut axial_piece = star_dzz.clone();
    for j in 0..grid.nz {
        for i in 0..grid.nr {
            *axial_piece.at_mut(i, j) += dr_dzz.at(i, j) / grid.r[i];
        }
    }
    let rhs_lap = weighted_integral(
        &squared(&ops.conservative_delta_r(&ops.conservative_delta_r(psi))),
        1,
    ) + weighted_integral(&squared(&axial_piece), 1)
        + face_weighted_integral(&grid, &squared_faces(ops.face_dr(&dzz)), -1)
        + 2.0 * face_weighted_integral(
            &grid,
            &squared_faces(ops.face_dr(&ops.conservative_delta_r(&dz_psi))),
            1,
        );

    ObservationIdentities {
        lhs_grad,
        rhs_grad,
        lhs_lap,
        rhs_lap,
    }
}
