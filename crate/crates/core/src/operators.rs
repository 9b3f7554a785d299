//! Discrete differential operators on the ring-cylinder grid.
//!
//! Two families live here and are kept deliberately distinct:
//!
//! * **Node stencils** (`apply_dr`, `apply_dz`, `apply_delta_r`, `apply_delta`,
//!   ...): centered second-order interior differences with one-sided wall
//!   closures of cubic accuracy. These define the PDE right-hand side, the
//!   nonlinear term, and the initialization `w = apply_delta(psi)`.
//! * **Conservative (flux) forms** (`conservative_delta_r`,
//!   `conservative_star_r`, `face_dr`): finite-volume operators built from
//!   face fluxes with zero wall flux. They agree with the centered interior
//!   stencils exactly and are symmetric negative-semidefinite in the
//!   r-weighted inner product, so discrete integration by parts telescopes
//!   with no wall defect — the property the energy-identity residuals need.
//!
//! The nonlinear term is the pair of radial antiderivatives
//! `N(psi) = Int_r(Delta_r psi * d_r d_3 w) - Int_r(r d_r((1/r) d_r w) * d_r d_3 psi)`,
//! evaluated pointwise then integrated by cumulative trapezoid from the inner
//! wall.

use crate::grid::{CylGrid, ScalarField};
use crate::sum::Neumaier;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct OperatorSet {
    grid: Arc<CylGrid>,
}

impl OperatorSet {
    pub fn new(grid: &Arc<CylGrid>) -> Self {
        OperatorSet {
            grid: Arc::clone(grid),
        }
    }

    pub fn grid(&self) -> &Arc<CylGrid> {
        &self.grid
    }

    fn check(&self, f: &ScalarField) {
        assert_eq!(f.grid.nr, self.grid.nr, "radial size mismatch");
        assert_eq!(f.grid.nz, self.grid.nz, "axial size mismatch");
    }

    /// Radial derivative: centered interior, cubic-accuracy one-sided walls.
    pub fn apply_dr(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz, dr) = (g.nr, g.nz, g.dr);
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            let orow = &mut out.values[j * nr..(j + 1) * nr];
            for i in 1..nr - 1 {
                orow[i] = (row[i + 1] - row[i - 1]) / (2.0 * dr);
            }
            // difference grouping: the closure annihilates constants exactly
            orow[0] = (18.0 * (row[1] - row[0]) - 9.0 * (row[2] - row[0])
                + 2.0 * (row[3] - row[0]))
                / (6.0 * dr);
            orow[nr - 1] = (-18.0 * (row[nr - 2] - row[nr - 1])
                + 9.0 * (row[nr - 3] - row[nr - 1])
                - 2.0 * (row[nr - 4] - row[nr - 1]))
                / (6.0 * dr);
        }
        out
    }

    /// Second radial derivative: centered interior, 5-point one-sided walls.
    pub fn apply_d2r(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz) = (g.nr, g.nz);
        let dr2 = g.dr * g.dr;
        // one-sided closure exact through quartics; difference grouping
        // annihilates constants exactly (the weights sum to zero)
        const C: [f64; 4] = [-26.0 / 3.0, 19.0 / 2.0, -14.0 / 3.0, 11.0 / 12.0];
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            let orow = &mut out.values[j * nr..(j + 1) * nr];
            for i in 1..nr - 1 {
                orow[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) / dr2;
            }
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (k, c) in C.iter().enumerate() {
                lo += c * (row[k + 1] - row[0]);
                hi += c * (row[nr - 2 - k] - row[nr - 1]);
            }
            orow[0] = lo / dr2;
            orow[nr - 1] = hi / dr2;
        }
        out
    }

    /// Axial derivative, periodic centered.
    pub fn apply_dz(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz) = (g.nr, g.nz);
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let jp = (j + 1) % nz;
            let jm = (j + nz - 1) % nz;
            for i in 0..nr {
                out.values[j * nr + i] =
                    (f.values[jp * nr + i] - f.values[jm * nr + i]) / (2.0 * g.dz);
            }
        }
        out
    }

    /// Second axial derivative, periodic centered.
    pub fn apply_d2z(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz) = (g.nr, g.nz);
        let dz2 = g.dz * g.dz;
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let jp = (j + 1) % nz;
            let jm = (j + nz - 1) % nz;
            for i in 0..nr {
                out.values[j * nr + i] = (f.values[jp * nr + i] - 2.0 * f.values[j * nr + i]
                    + f.values[jm * nr + i])
                    / dz2;
            }
        }
        out
    }

    /// Radial Laplacian d_r^2 + (1/r) d_r (node stencils).
    pub fn apply_delta_r(&self, f: &ScalarField) -> ScalarField {
        let mut out = self.apply_d2r(f);
        let d1 = self.apply_dr(f);
        let g = &self.grid;
        for j in 0..g.nz {
            for i in 0..g.nr {
                out.values[j * g.nr + i] += d1.values[j * g.nr + i] / g.r[i];
            }
        }
        out
    }

    /// Full Laplacian Delta = Delta_r + d_3^2 (node stencils).
    pub fn apply_delta(&self, f: &ScalarField) -> ScalarField {
        let mut out = self.apply_delta_r(f);
        let az = self.apply_d2z(f);
        for (o, a) in out.values.iter_mut().zip(&az.values) {
            *o += a;
        }
        out
    }

    /// Cumulative radial antiderivative from the inner wall (trapezoid):
    /// g(r, z) = Int_{r0}^{r} f(s, z) ds, with g(r0, .) = 0.
    pub fn radial_cumulative(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz, dr) = (g.nr, g.nz, g.dr);
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            let orow = &mut out.values[j * nr..(j + 1) * nr];
            let mut acc = Neumaier::new();
            for i in 1..nr {
                acc.add((row[i - 1] + row[i]) * (0.5 * dr));
                orow[i] = acc.value();
            }
        }
        out
    }

    /// The quadratic term of the evolution equation,
    /// `N(psi) = Int_r(Delta_r psi * d_r d_3 w) - Int_r(r d_r((1/r) d_r w) * d_r d_3 psi)`,
    /// with w the vorticity potential paired to psi. Both factors of each
    /// product carry an axial derivative, so N vanishes on axially constant
    /// data.
    pub fn nonlinear_terms(&self, psi: &ScalarField, w: &ScalarField) -> ScalarField {
        self.check(psi);
        self.check(w);
        let g = &self.grid;
        let drdz_w = self.apply_dr(&self.apply_dz(w));
        let drdz_psi = self.apply_dr(&self.apply_dz(psi));
        let delta_r_psi = self.apply_delta_r(psi);
        // r * d_r((1/r) d_r w), node form
        let mut dw_over_r = self.apply_dr(w);
        for j in 0..g.nz {
            for i in 0..g.nr {
                dw_over_r.values[j * g.nr + i] /= g.r[i];
            }
        }
        let mut star = self.apply_dr(&dw_over_r);
        for j in 0..g.nz {
            for i in 0..g.nr {
                star.values[j * g.nr + i] *= g.r[i];
            }
        }
        let mut t1 = ScalarField::zeros(&self.grid);
        let mut t2 = ScalarField::zeros(&self.grid);
        for k in 0..g.len() {
            t1.values[k] = delta_r_psi.values[k] * drdz_w.values[k];
            t2.values[k] = star.values[k] * drdz_psi.values[k];
        }
        let mut out = self.radial_cumulative(&t1);
        let i2 = self.radial_cumulative(&t2);
        for (o, b) in out.values.iter_mut().zip(&i2.values) {
            *o -= b;
        }
        out
    }

    // ---- conservative (finite-volume) forms ----

    /// Conservative radial Laplacian: interior
    /// `(r_{i+1/2}(f_{i+1}-f_i) - r_{i-1/2}(f_i-f_{i-1})) / (r_i dr^2)`,
    /// wall rows close with zero exterior flux over half cells. Agrees with
    /// `apply_delta_r` exactly on interior rows.
    pub fn conservative_delta_r(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz, dr) = (g.nr, g.nz, g.dr);
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            let orow = &mut out.values[j * nr..(j + 1) * nr];
            // flux[i] = r_{i+1/2} (f_{i+1} - f_i) / dr
            for i in 1..nr - 1 {
                let flux_hi = (g.r[i] + 0.5 * dr) * (row[i + 1] - row[i]) / dr;
                let flux_lo = (g.r[i] - 0.5 * dr) * (row[i] - row[i - 1]) / dr;
                orow[i] = (flux_hi - flux_lo) / (g.r[i] * dr);
            }
            let flux0 = (g.r[0] + 0.5 * dr) * (row[1] - row[0]) / dr;
            orow[0] = flux0 / (g.r[0] * dr * 0.5);
            let fluxn = (g.r[nr - 1] - 0.5 * dr) * (row[nr - 1] - row[nr - 2]) / dr;
            orow[nr - 1] = -fluxn / (g.r[nr - 1] * dr * 0.5);
        }
        out
    }

    /// Conservative full Laplacian (finite-volume radial + centered axial).
    pub fn conservative_delta(&self, f: &ScalarField) -> ScalarField {
        let mut out = self.conservative_delta_r(f);
        let az = self.apply_d2z(f);
        for (o, a) in out.values.iter_mut().zip(&az.values) {
            *o += a;
        }
        out
    }

    /// Conservative form of `r d_r((1/r) d_r f)` (equivalently
    /// `d_r^2 - (1/r) d_r`), zero wall flux.
    pub fn conservative_star_r(&self, f: &ScalarField) -> ScalarField {
        self.check(f);
        let g = &self.grid;
        let (nr, nz, dr) = (g.nr, g.nz, g.dr);
        let mut out = ScalarField::zeros(&self.grid);
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            let orow = &mut out.values[j * nr..(j + 1) * nr];
            // flux[i] = (f_{i+1} - f_i) / (dr r_{i+1/2}),  out = r d(flux)/dr
            for i in 1..nr - 1 {
                let flux_hi = (row[i + 1] - row[i]) / (dr * (g.r[i] + 0.5 * dr));
                let flux_lo = (row[i] - row[i - 1]) / (dr * (g.r[i] - 0.5 * dr));
                orow[i] = g.r[i] * (flux_hi - flux_lo) / dr;
            }
            let flux0 = (row[1] - row[0]) / (dr * (g.r[0] + 0.5 * dr));
            orow[0] = g.r[0] * flux0 / (0.5 * dr);
            let fluxn = (row[nr - 1] - row[nr - 2]) / (dr * (g.r[nr - 1] - 0.5 * dr));
            orow[nr - 1] = -g.r[nr - 1] * fluxn / (0.5 * dr);
        }
        out
    }

    /// Face-staggered radial difference `(f_{i+1} - f_i)/dr`, one value per
    /// radial face: returns a z-major vector of length (nr-1) * nz.
    pub fn face_dr(&self, f: &ScalarField) -> Vec<f64> {
        self.check(f);
        let g = &self.grid;
        let (nr, nz, dr) = (g.nr, g.nz, g.dr);
        let mut out = vec![0.0; (nr - 1) * nz];
        for j in 0..nz {
            let row = &f.values[j * nr..(j + 1) * nr];
            for i in 0..nr - 1 {
                out[j * (nr - 1) + i] = (row[i + 1] - row[i]) / dr;
            }
        }
        out
    }
}

/// Quadrature of a face field against the midpoint radii:
/// `dz * dr * sum h_{i+1/2,j} * r_{i+1/2}^p`.
pub fn face_weighted_integral(grid: &CylGrid, h: &[f64], p: i32) -> f64 {
    let (nr, nz) = (grid.nr, grid.nz);
    assert_eq!(h.len(), (nr - 1) * nz, "face field length mismatch");
    let mut acc = Neumaier::new();
    for j in 0..nz {
        for i in 0..nr - 1 {
            let rf = grid.r[i] + 0.5 * grid.dr;
            let rw = match p {
                1 => rf,
                -1 => 1.0 / rf,
                _ => 1.0,
            };
            acc.add(h[j * (nr - 1) + i] * rw * grid.dr * grid.dz);
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, weighted_integral};
    use crate::jet::Jet;
    use crate::presets::completed_profile_jet;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn grid(nr: usize, nz: usize) -> Arc<CylGrid> {
        Arc::new(build_grid(1.0, 2.0, PI, nr, nz).unwrap())
    }

    #[test]
    fn dr_exact_on_quadratics_and_constants() {
        let g = grid(17, 8);
        let ops = OperatorSet::new(&g);
        let f = ScalarField::from_fn(&g, |r, _| r * r);
        let d = ops.apply_dr(&f);
        let mut max_err = 0.0f64;
        for j in 0..g.nz {
            for i in 0..g.nr {
                max_err = max_err.max((d.at(i, j) - 2.0 * g.r[i]).abs());
            }
        }
        assert!(max_err < 1e-12, "max err {max_err:.3e}");
        let c = ScalarField::from_fn(&g, |_, _| 7.25);
        assert!(ops.apply_dr(&c).linf() < 1e-13);
    }

    #[test]
    fn dr_second_order_on_sine() {
        let mut prev = f64::NAN;
        for &n in &[32usize, 64, 128] {
            let g = grid(n + 1, 8);
            let ops = OperatorSet::new(&g);
            let f = ScalarField::from_fn(&g, |r, _| (PI * r).sin());
            let d = ops.apply_dr(&f);
            let mut err = 0.0f64;
            for i in 0..g.nr {
                err = err.max((d.at(i, 0) - PI * (PI * g.r[i]).cos()).abs());
            }
            if prev.is_finite() {
                let order = (prev / err).log2();
                println!("Nr={} dr err={err:.3e} order={order:.2}", n + 1);
                assert!(order > 1.8);
            }
            prev = err;
        }
    }

    #[test]
    fn dz_periodic_modes() {
        let g = grid(9, 16);
        let ops = OperatorSet::new(&g);
        // axially constant -> exactly zero
        let c = ScalarField::from_fn(&g, |r, _| r.exp());
        assert_eq!(ops.apply_dz(&c).linf(), 0.0);
        // mode-k cosine, order-2 refinement
        let mut errs = vec![];
        for &nz in &[8usize, 16] {
            let g = grid(9, nz);
            let ops = OperatorSet::new(&g);
            let k = 1.0; // kappa = k pi / l3 = 1
            let f = ScalarField::from_fn(&g, |_, z| (k * z).cos());
            let d = ops.apply_dz(&f);
            let mut err = 0.0f64;
            for j in 0..g.nz {
                err = err.max((d.at(4, j) + k * (k * g.z[j]).sin()).abs());
            }
            errs.push(err);
        }
        let ratio = errs[0] / errs[1];
        println!("dz err ratio Nz 8->16: {ratio:.2}");
        assert!((ratio - 4.0).abs() < 0.5);
    }

    #[test]
    fn delta_r_closed_forms() {
        let g = grid(65, 8);
        let ops = OperatorSet::new(&g);
        // r^2 -> 4 exactly everywhere (closures exact through quartics)
        let f = ScalarField::from_fn(&g, |r, _| r * r);
        let d = ops.apply_delta_r(&f);
        let mut err = 0.0f64;
        for i in 0..g.nr {
            err = err.max((d.at(i, 0) - 4.0).abs());
        }
        assert!(err < 1e-10, "r^2 err {err:.3e}");
        // ln r is harmonic for the radial operator
        let f = ScalarField::from_fn(&g, |r, _| r.ln());
        let d = ops.apply_delta_r(&f);
        println!("delta_r ln r max = {:.3e}", d.linf());
        assert!(d.linf() < 1e-3);
        // r^4 -> 16 r^2 + exactly 6 dr^2 in the interior (centered second
        // difference contributes 2 dr^2, the first-derivative term 4 dr^2,
        // and the fifth derivative vanishes so there is no higher tail)
        let f = ScalarField::from_fn(&g, |r, _| r.powi(4));
        let d = ops.apply_delta_r(&f);
        let mut err = 0.0f64;
        for i in 0..g.nr {
            err = err.max((d.at(i, 0) - 16.0 * g.r[i] * g.r[i]).abs());
        }
        let truncation = 6.0 * g.dr * g.dr;
        println!("r^4 max defect = {err:.6e} (6 dr^2 = {truncation:.6e})");
        assert!(err < 1.01 * truncation, "r^4 err {err:.3e}");
        assert!(err > 0.99 * truncation, "r^4 err {err:.3e} below known truncation");
    }

    #[test]
    fn delta_matches_symbolic_on_profile_cosine() {
        let mut prev = f64::NAN;
        for &n in &[32usize, 64, 128] {
            let g = grid(n + 1, n);
            let ops = OperatorSet::new(&g);
            let f = ScalarField::from_fn(&g, |r, z| {
                completed_profile_jet(Jet::var(r), 1.0, 2.0).val() * z.cos()
            });
            let d = ops.apply_delta(&f);
            let mut err = 0.0f64;
            for j in 0..g.nz {
                for i in 0..g.nr {
                    let p = completed_profile_jet(Jet::var(g.r[i]), 1.0, 2.0);
                    let exact =
                        (p.deriv(2) + p.deriv(1) / g.r[i] - p.val()) * g.z[j].cos();
                    err = err.max((d.at(i, j) - exact).abs());
                }
            }
            if prev.is_finite() {
                let order = (prev / err).log2();
                println!("N={n} delta err={err:.3e} order={order:.2}");
                assert!(order > 1.8);
            }
            prev = err;
        }
    }

    #[test]
    fn cumulative_integral_exactness() {
        let g = grid(33, 8);
        let ops = OperatorSet::new(&g);
        let one = ScalarField::from_fn(&g, |_, _| 1.0);
        let c = ops.radial_cumulative(&one);
        for i in 0..g.nr {
            assert!((c.at(i, 0) - (g.r[i] - 1.0)).abs() < 1e-14);
        }
        let lin = ScalarField::from_fn(&g, |r, _| 2.0 * r);
        let c = ops.radial_cumulative(&lin);
        for i in 0..g.nr {
            assert!((c.at(i, 0) - (g.r[i] * g.r[i] - 1.0)).abs() < 1e-13);
        }
        let cosf = ScalarField::from_fn(&g, |r, _| r.cos());
        let c = ops.radial_cumulative(&cosf);
        let mut err = 0.0f64;
        for i in 0..g.nr {
            err = err.max((c.at(i, 0) - (g.r[i].sin() - 1.0f64.sin())).abs());
        }
        println!("cumtrapz cos err = {err:.3e}");
        assert!(err < 1e-4);
    }

    #[test]
    fn nonlinear_vanishes_without_axial_dependence() {
        let g = grid(33, 16);
        let ops = OperatorSet::new(&g);
        let psi = ScalarField::from_fn(&g, |r, _| (r - 1.0).powi(2) * (2.0 - r).powi(2));
        let w = ops.apply_delta(&psi);
        let n = ops.nonlinear_terms(&psi, &w);
        assert_eq!(n.linf(), 0.0);
    }

    #[test]
    fn nonlinear_quadratic_homogeneity() {
        let g = grid(33, 32);
        let ops = OperatorSet::new(&g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let psi = ScalarField::from_fn(&g, |r, z| {
            completed_profile_jet(Jet::var(r), 1.0, 2.0).val() * z.cos()
        });
        let w = ops.apply_delta(&psi);
        let n1 = ops.nonlinear_terms(&psi, &w);
        for _ in 0..10 {
            let a: f64 = rng.gen_range(0.1..3.0);
            let mut psi_a = psi.clone();
            psi_a.scale(a);
            let mut w_a = w.clone();
            w_a.scale(a);
            let na = ops.nonlinear_terms(&psi_a, &w_a);
            let mut rel = 0.0f64;
            let scale = n1.linf() * a * a;
            for (x, y) in na.values.iter().zip(&n1.values) {
                rel = rel.max((x - a * a * y).abs() / scale);
            }
            assert!(rel < 1e-12, "a={a}: rel dev {rel:.3e}");
        }
    }

    #[test]
    fn nonlinear_matches_termwise_symbolic_integrands() {
        // integrands of both products evaluated from exact derivatives, then
        // run through the same cumulative trapezoid: difference isolates the
        // stencil truncation, which must refine at order ~2
        let kap = 1.0;
        let exact_parts = |r: f64, z: f64| {
            let p = completed_profile_jet(Jet::var(r), 1.0, 2.0);
            let (p1, p2, p3, p4) = (p.deriv(1), p.deriv(2), p.deriv(3), p.deriv(4));
            let cz = (kap * z).cos();
            let sz = (kap * z).sin();
            // psi = p cos, w = Delta psi = cap cos with cap = p'' + p'/r - kap^2 p
            let cap1 = p3 + p2 / r - p1 / (r * r) - kap * kap * p1; // cap'
            let cap2 = p4 + p3 / r - 2.0 * p2 / (r * r) + 2.0 * p1 / (r * r * r)
                - kap * kap * p2; // cap''
            let delta_r_psi = (p2 + p1 / r) * cz;
            let drdz_w = -kap * cap1 * sz;
            let drdz_psi = -kap * p1 * sz;
            // r d_r((1/r) d_r w) radial factor = cap'' - cap'/r
            let star_w = (cap2 - cap1 / r) * cz;
            (delta_r_psi * drdz_w, star_w * drdz_psi)
        };
        let mut prev = f64::NAN;
        for &n in &[32usize, 64, 128] {
            let g = grid(n + 1, n);
            let ops = OperatorSet::new(&g);
            let psi = ScalarField::from_fn(&g, |r, z| {
                completed_profile_jet(Jet::var(r), 1.0, 2.0).val() * (kap * z).cos()
            });
            let w = ScalarField::from_fn(&g, |r, z| {
                let p = completed_profile_jet(Jet::var(r), 1.0, 2.0);
                (p.deriv(2) + p.deriv(1) / r - kap * kap * p.val()) * (kap * z).cos()
            });
            let n_disc = ops.nonlinear_terms(&psi, &w);
            let t1 = ScalarField::from_fn(&g, |r, z| exact_parts(r, z).0);
            let t2 = ScalarField::from_fn(&g, |r, z| exact_parts(r, z).1);
            let mut n_sym = ops.radial_cumulative(&t1);
            let i2 = ops.radial_cumulative(&t2);
            for (a, b) in n_sym.values.iter_mut().zip(&i2.values) {
                *a -= b;
            }
            let mut err = 0.0f64;
            for (a, b) in n_disc.values.iter().zip(&n_sym.values) {
                err = err.max((a - b).abs());
            }
            let rel = err / n_sym.linf();
            if prev.is_finite() {
                let order = (prev / rel).log2();
                println!("N={n} nonlinear vs symbolic rel={rel:.3e} order={order:.2}");
                assert!(order > 1.7);
            }
            prev = rel;
        }
    }

    #[test]
    fn stencil_commutativity_dr_dz() {
        let g = grid(33, 32);
        let ops = OperatorSet::new(&g);
        let f = ScalarField::from_fn(&g, |r, z| (r * r + z).sin() * r.exp());
        let a = ops.apply_dr(&ops.apply_dz(&f));
        let b = ops.apply_dz(&ops.apply_dr(&f));
        let scale = a.linf();
        let mut dev = 0.0f64;
        for (x, y) in a.values.iter().zip(&b.values) {
            dev = dev.max((x - y).abs());
        }
        assert!(dev <= 1e-14 * scale, "commutator {dev:.3e} vs scale {scale:.3e}");
    }

    #[test]
    fn conservative_forms_match_interior_stencils_and_telescope() {
        let g = grid(33, 16);
        let ops = OperatorSet::new(&g);
        let f = ScalarField::from_fn(&g, |r, z| (2.0 * r).sin() * (1.0 + 0.3 * z.cos()));
        let fv = ops.conservative_delta_r(&f);
        let st = ops.apply_delta_r(&f);
        // interior rows agree to roundoff (algebraically identical)
        let mut dev = 0.0f64;
        for j in 0..g.nz {
            for i in 1..g.nr - 1 {
                dev = dev.max((fv.at(i, j) - st.at(i, j)).abs());
            }
        }
        assert!(dev < 1e-11, "interior dev {dev:.3e}");
        // zero total flux: r-weighted integral of the conservative form
        // telescopes to exactly zero
        let total = weighted_integral(&fv, 1);
        println!("fv delta_r weighted total = {total:.3e}");
        assert!(total.abs() < 1e-10 * f.linf());
        // star form: (1/r)-weighted integral telescopes likewise
        let star = ops.conservative_star_r(&f);
        let total = weighted_integral(&star, -1);
        assert!(total.abs() < 1e-10 * f.linf());
    }

    #[test]
    fn by_parts_symmetry_on_wall_flat_fields() {
        // fields with zero wall slope: conservative delta_r is exactly
        // symmetric in the r-weighted product; node stencils are O(h^2) close
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut prev = f64::NAN;
        for &n in &[32usize, 64, 128] {
            let g = grid(n + 1, 16);
            let ops = OperatorSet::new(&g);
            let (a1, a2): (f64, f64) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let f = ScalarField::from_fn(&g, |r, z| {
                a1 * (PI * (r - 1.0)).cos() * (1.0 + 0.5 * z.sin())
            });
            let h = ScalarField::from_fn(&g, |r, z| {
                a2 * (2.0 * PI * (r - 1.0)).cos() * (1.0 - 0.25 * (2.0 * z).cos())
            });
            let mut fg = ScalarField::zeros(&g);
            let dg = ops.apply_delta_r(&h);
            let df = ops.apply_delta_r(&f);
            let mut gf = ScalarField::zeros(&g);
            for k in 0..g.len() {
                fg.values[k] = f.values[k] * dg.values[k];
                gf.values[k] = h.values[k] * df.values[k];
            }
            let gap = (weighted_integral(&fg, 1) - weighted_integral(&gf, 1)).abs();
            let scale = f.linf() * h.linf();
            let rel = gap / scale;
            if prev.is_finite() {
                let order = (prev / rel).log2();
                println!("N={n} by-parts gap={rel:.3e} order={order:.2}");
                assert!(order > 1.5);
            }
            prev = rel;
        }
    }

    #[test]
    fn face_quadrature_consistency() {
        // face integral of (face_dr f)^2 equals the trapezoid integral of
        // (d_r f)^2 up to O(h^2) on smooth fields
        let g = grid(129, 16);
        let ops = OperatorSet::new(&g);
        let f = ScalarField::from_fn(&g, |r, z| (r.powi(3) - r).cos() + 0.1 * z.sin());
        let faces = ops.face_dr(&f);
        let sq: Vec<f64> = faces.iter().map(|v| v * v).collect();
        let fi = face_weighted_integral(&g, &sq, 1);
        let d = ops.apply_dr(&f);
        let mut dsq = ScalarField::zeros(&g);
        for k in 0..g.len() {
            dsq.values[k] = d.values[k] * d.values[k];
        }
        let ni = weighted_integral(&dsq, 1);
        let rel = (fi - ni).abs() / ni.abs();
        println!("face vs node quadrature rel gap = {rel:.3e}");
        assert!(rel < 5e-3);
    }
}
