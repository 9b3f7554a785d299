//! Modal elliptic solves: the Neumann Poisson problem `Delta psi = w` and the
//! implicit Helmholtz step `(a - b Delta) x = f`.
//!
//! The axial direction is periodic and uniform, so a discrete Fourier
//! transform decouples the 2D problems into independent radial tridiagonal
//! systems, one per axial mode m with the *stencil* symbol
//! `lambda_m = (2 - 2 cos(2 pi m / nz)) / dz^2` (not the continuous kappa^2),
//! which keeps the round trip against the discrete Laplacian exact.
//!
//! The radial operator is the conservative finite-volume form with zero wall
//! flux: in the r-weighted inner product it is symmetric negative
//! semidefinite with nullspace exactly the constants. The m = 0 Neumann mode
//! therefore needs (and gets) a solvability check, a mean projection, and a
//! gauge; every other mode is strictly negative definite.

use crate::error::{CnsError, Result};
use crate::grid::{project_weighted_mean, weighted_integral, CylGrid, ScalarField};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Nullspace gauge for the Neumann Poisson solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// r-weighted mean of the solution is zero.
    ZeroMean,
}

/// Boundary condition of the Helmholtz solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HelmholtzBc {
    /// Zero normal derivative at both walls (flux-form closure).
    NeumannWalls,
}

/// Relative solvability tolerance of the Neumann compatibility integral.
pub const COMPAT_TOL: f64 = 1e-8;

pub struct ModalSolver {
    grid: Arc<CylGrid>,
    /// Symmetric tridiagonal M = diag(rho) * A_fv (rho = trapezoid weight * r).
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
    rho: Vec<f64>,
    /// Axial stencil symbols for m = 0..=nz/2.
    lam: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl ModalSolver {
    pub fn new(grid: &Arc<CylGrid>) -> Self {
        let g = grid.as_ref();
        let (nr, nz) = (g.nr, g.nz);
        let mut lo = vec![0.0; nr];
        let mut di = vec![0.0; nr];
        let mut up = vec![0.0; nr];
        // face radii r_{i+1/2} between nodes i and i+1
        for i in 0..nr - 1 {
            let rf = g.r[i] + 0.5 * g.dr;
            up[i] = rf / g.dr;
            lo[i + 1] = rf / g.dr;
        }
        for i in 1..nr - 1 {
            di[i] = -(lo[i] + up[i]);
        }
        di[0] = -up[0];
        di[nr - 1] = -lo[nr - 1];
        let rho: Vec<f64> = (0..nr).map(|i| g.wr[i] * g.r[i]).collect();
        let lam: Vec<f64> = (0..=nz / 2)
            .map(|m| {
                (2.0 - 2.0 * (2.0 * std::f64::consts::PI * m as f64 / nz as f64).cos())
                    / (g.dz * g.dz)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nz);
        let inv = planner.plan_fft_inverse(nz);
        ModalSolver {
            grid: Arc::clone(grid),
            lo,
            di,
            up,
            rho,
            lam,
            fwd,
            inv,
        }
    }

    pub fn grid(&self) -> &Arc<CylGrid> {
        &self.grid
    }

    /// Axial stencil symbol of mode m (0 <= m <= nz/2).
    pub fn modal_symbol(&self, m: usize) -> f64 {
        self.lam[m]
    }

    /// Forward transform: modes[m * nr + i] = sum_j f(i, j) e^{-2 pi i jm/nz}.
    fn to_modes(&self, f: &ScalarField) -> Vec<Complex<f64>> {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let mut modes = vec![Complex::new(0.0, 0.0); nr * nz];
        let mut buf = vec![Complex::new(0.0, 0.0); nz];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        for i in 0..nr {
            for j in 0..nz {
                buf[j] = Complex::new(f.values[j * nr + i], 0.0);
            }
            self.fwd.process_with_scratch(&mut buf, &mut scratch);
            for m in 0..nz {
                modes[m * nr + i] = buf[m];
            }
        }
        modes
    }

    /// Inverse transform (normalized), discarding the roundoff imaginary part.
    fn from_modes(&self, modes: &[Complex<f64>]) -> ScalarField {
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let mut out = ScalarField::zeros(&self.grid);
        let mut buf = vec![Complex::new(0.0, 0.0); nz];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.inv.get_inplace_scratch_len()];
        let norm = 1.0 / nz as f64;
        for i in 0..nr {
            for m in 0..nz {
                buf[m] = modes[m * nr + i];
            }
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..nz {
                out.values[j * nr + i] = buf[j].re * norm;
            }
        }
        out
    }

    /// Thomas solve of (M - shift * diag(rho)) x = rhs; `drop_last` pins
    /// x[nr-1] = 0 and solves the leading (nr-1)-system (nullspace removal
    /// for the shift-free Neumann mode).
    fn solve_mode(&self, shift: f64, rhs: &[f64], drop_last: bool) -> Vec<f64> {
        let nr = self.grid.nr;
        let n = if drop_last { nr - 1 } else { nr };
        let mut c = vec![0.0; n]; // modified upper diagonal
        let mut d = vec![0.0; n]; // modified rhs
        let diag = |i: usize| self.di[i] - shift * self.rho[i];
        let mut beta = diag(0);
        c[0] = self.up[0] / beta;
        d[0] = rhs[0] / beta;
        for i in 1..n {
            beta = diag(i) - self.lo[i] * c[i - 1];
            if i < n - 1 {
                c[i] = self.up[i] / beta;
            }
            d[i] = (rhs[i] - self.lo[i] * d[i - 1]) / beta;
        }
        let mut x = vec![0.0; nr];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        if drop_last {
            x[nr - 1] = 0.0;
        }
        x
    }

    /// Solve `Delta psi = w` with wall-Neumann/axially periodic boundary
    /// conditions. The right-hand side must satisfy the discrete solvability
    /// condition (r-weighted mean ~ 0); the residual mean is projected out
    /// after the check, and the gauge fixes the additive constant.
    pub fn solve_poisson_neumann(&self, w: &ScalarField, gauge: Gauge) -> Result<ScalarField> {
        let total = weighted_integral(w, 1);
        let mut wa = ScalarField::zeros(&self.grid);
        for (a, v) in wa.values.iter_mut().zip(&w.values) {
            *a = v.abs();
        }
        let den = weighted_integral(&wa, 1).max(1e-300);
        let rel = total.abs() / den;
        if rel > COMPAT_TOL {
            return Err(CnsError::IncompatibleRHS {
                mean: rel,
                tol: COMPAT_TOL,
            });
        }
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let mut modes = self.to_modes(w);
        let rho_sum: f64 = self.rho.iter().sum();
        for m in 0..=nz / 2 {
            let re: Vec<f64> = (0..nr).map(|i| modes[m * nr + i].re).collect();
            let im: Vec<f64> = (0..nr).map(|i| modes[m * nr + i].im).collect();
            let (xr, xi) = if m == 0 {
                // project the residual weighted mean, then pin the nullspace
                let solve0 = |v: &[f64]| -> Vec<f64> {
                    let c: f64 = v
                        .iter()
                        .zip(&self.rho)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / rho_sum;
                    let rhs: Vec<f64> = v
                        .iter()
                        .zip(&self.rho)
                        .map(|(a, b)| (a - c) * b)
                        .collect();
                    self.solve_mode(0.0, &rhs, true)
                };
                (solve0(&re), solve0(&im))
            } else {
                let rhs_re: Vec<f64> = re.iter().zip(&self.rho).map(|(a, b)| a * b).collect();
                let rhs_im: Vec<f64> = im.iter().zip(&self.rho).map(|(a, b)| a * b).collect();
                (
                    self.solve_mode(self.lam[m], &rhs_re, false),
                    self.solve_mode(self.lam[m], &rhs_im, false),
                )
            };
            for i in 0..nr {
                modes[m * nr + i] = Complex::new(xr[i], xi[i]);
            }
        }
        // conjugate mirror for the upper half-spectrum
        for m in nz / 2 + 1..nz {
            for i in 0..nr {
                modes[m * nr + i] = modes[(nz - m) * nr + i].conj();
            }
        }
        let mut psi = self.from_modes(&modes);
        match gauge {
            Gauge::ZeroMean => {
                project_weighted_mean(&mut psi);
            }
        }
        Ok(psi)
    }

    /// Solve `(a - b Delta) x = f` with zero-flux walls; uniformly invertible
    /// for a, b > 0, no compatibility condition.
    pub fn solve_helmholtz(
        &self,
        a: f64,
        b: f64,
        f: &ScalarField,
        _bc: HelmholtzBc,
    ) -> ScalarField {
        assert!(a > 0.0 && b > 0.0, "Helmholtz needs a, b > 0");
        let (nr, nz) = (self.grid.nr, self.grid.nz);
        let mut modes = self.to_modes(f);
        // (a rho - b (M - lam rho)) x = rho f : tridiagonal per mode
        for m in 0..=nz / 2 {
            let lam = self.lam[m];
            let solve = |v: Vec<f64>| -> Vec<f64> {
                let rhs: Vec<f64> = v.iter().zip(&self.rho).map(|(x, r)| x * r).collect();
                self.solve_shifted_helmholtz(a, b, lam, &rhs)
            };
            let re: Vec<f64> = (0..nr).map(|i| modes[m * nr + i].re).collect();
            let im: Vec<f64> = (0..nr).map(|i| modes[m * nr + i].im).collect();
            let xr = solve(re);
            let xi = solve(im);
            for i in 0..nr {
                modes[m * nr + i] = Complex::new(xr[i], xi[i]);
            }
        }
        for m in nz / 2 + 1..nz {
            for i in 0..nr {
                modes[m * nr + i] = modes[(nz - m) * nr + i].conj();
            }
        }
        self.from_modes(&modes)
    }

    /// Thomas solve of (a rho - b (M - lam rho)) x = rhs.
    fn solve_shifted_helmholtz(&self, a: f64, b: f64, lam: f64, rhs: &[f64]) -> Vec<f64> {
        let nr = self.grid.nr;
        let diag = |i: usize| a * self.rho[i] - b * (self.di[i] - lam * self.rho[i]);
        let off = |v: f64| -b * v;
        let mut c = vec![0.0; nr];
        let mut d = vec![0.0; nr];
        let mut beta = diag(0);
        c[0] = off(self.up[0]) / beta;
        d[0] = rhs[0] / beta;
        for i in 1..nr {
            beta = diag(i) - off(self.lo[i]) * c[i - 1];
            if i < nr - 1 {
                c[i] = off(self.up[i]) / beta;
            }
            d[i] = (rhs[i] - off(self.lo[i]) * d[i - 1]) / beta;
        }
        let mut x = vec![0.0; nr];
        x[nr - 1] = d[nr - 1];
        for i in (0..nr - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}
