//! Initial-data presets.
//!
//! Every preset is a separable seed `psi0 = A * p(r) * cos(k_m z)` with
//! `k_m = mode * pi / l3`. The radial profiles are chosen so the wall
//! conditions `d_r psi0 = d_r Delta psi0 = 0` hold exactly where the solver
//! needs them:
//!
//! * `quartic-cos`: the double-wall quartic `(r-r0)^2 (r1-r)^2` multiplied by
//!   an analytic completion factor `s(r) = exp(g0 u + (g1-g0) u^2 / (2W))`
//!   (`u = r-r0`, `W = r1-r0`) whose two parameters are solved so that
//!   `d_r Delta_r p` also vanishes at both walls. Without the factor the bare
//!   quartic leaves an O(1) third-derivative residual at the walls that
//!   excites a boundary-layer transient.
//! * `gauss-cos`: a Gaussian radial bump `exp(-beta (r - rc)^2)` with decaying
//!   tails, meant to be run through the cutoff projection on `[1/(2n), 2n]`
//!   domains (domain-expansion studies); the projection enforces the wall
//!   conditions at every level.

use crate::error::{CnsError, Result};
use crate::grid::{CylGrid, ScalarField};
use crate::jet::Jet;
use std::sync::Arc;

/// Gaussian seed sharpness (fixed; the expansion studies pin it).
pub const GAUSS_BETA: f64 = 6.0;
/// Gaussian seed center radius (fixed).
pub const GAUSS_CENTER: f64 = 1.3;

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Zero,
    QuarticCos { amplitude: f64, axial_mode: u32 },
    GaussCos { amplitude: f64, axial_mode: u32 },
}

/// Wall-completed quartic radial profile `(r-r0)^2 (r1-r)^2 s(r)`, as a jet
/// so oracles get exact derivatives through order 5.
pub fn completed_profile_jet(r: Jet, r0: f64, r1: f64) -> Jet {
    let w = r1 - r0;
    let g0 = 2.0 / w - 1.0 / (3.0 * r0);
    let g1 = -2.0 / w - 1.0 / (3.0 * r1);
    let u = r - Jet::con(r0);
    let s = (u.scale(g0) + (u * u).scale((g1 - g0) / (2.0 * w))).exp();
    let q = (r - Jet::con(r0)).powi(2) * (Jet::con(r1) - r).powi(2);
    q * s
}

/// Gaussian radial bump as a jet.
pub fn gauss_profile_jet(r: Jet) -> Jet {
    let d = r - Jet::con(GAUSS_CENTER);
    (d * d).scale(-GAUSS_BETA).exp()
}

impl Preset {
    /// Preset by name; `amplitude` and `axial_mode` apply to the non-zero
    /// presets.
    pub fn from_name(name: &str, amplitude: f64, axial_mode: u32) -> Result<Preset> {
        match name {
            "zero" => Ok(Preset::Zero),
            "quartic-cos" => Ok(Preset::QuarticCos {
                amplitude,
                axial_mode,
            }),
            "gauss-cos" => Ok(Preset::GaussCos {
                amplitude,
                axial_mode,
            }),
            other => Err(CnsError::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Zero => "zero",
            Preset::QuarticCos { .. } => "quartic-cos",
            Preset::GaussCos { .. } => "gauss-cos",
        }
    }

    /// Raw seed samples on the grid (before any projection).
    pub fn sample(&self, grid: &Arc<CylGrid>) -> ScalarField {
        match *self {
            Preset::Zero => ScalarField::zeros(grid),
            Preset::QuarticCos {
                amplitude,
                axial_mode,
            } => {
                let (r0, r1) = (grid.r0, grid.r1);
                let kap = axial_mode as f64 * std::f64::consts::PI / grid.l3;
                ScalarField::from_fn(grid, |r, z| {
                    amplitude * completed_profile_jet(Jet::var(r), r0, r1).val() * (kap * z).cos()
                })
            }
            Preset::GaussCos {
                amplitude,
                axial_mode,
            } => {
                let kap = axial_mode as f64 * std::f64::consts::PI / grid.l3;
                ScalarField::from_fn(grid, |r, z| {
                    amplitude * gauss_profile_jet(Jet::var(r)).val() * (kap * z).cos()
                })
            }
        }
    }
}
