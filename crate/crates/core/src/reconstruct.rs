//! Cartesian reconstruction of the 3D velocity and vorticity fields.
//!
//! The scalar stream function determines a divergence-free 3D velocity
//!
//! ```text
//!     u = ( (x1/r) d_r d_3 psi,  (x2/r) d_r d_3 psi,  -Delta_r psi ),
//! ```
//!
//! so two axisymmetric node fields, `a = d_r d_3 psi` and `c = Delta_r psi`,
//! carry everything.  This module samples them onto a cell-centered Cartesian
//! box (Lagrange-4 in r, Catmull-Rom in the periodic axial direction), forms
//! u and `omega = curl u` by centered differences, and assembles the residual
//! of the vorticity transport equation
//!
//! ```text
//!     omega_t - nu Lap omega + (u . grad) omega - (omega . grad) u = 0,
//! ```
//!
//! which is the pressure-free form of the 3D momentum balance: a residual
//! that vanishes under refinement certifies that the reduced scalar solve
//! tracks the full system without ever reconstructing the pressure.
//!
//! Box quadrature of |u|^2 and |grad u|^2 over the annular cross-section
//! uses exact cell/annulus overlap areas, so partially covered boundary
//! cells contribute their true geometric weight and the sums can be compared
//! against the annulus-side energy functionals at second order.

use crate::diagnostics::EnergyReport;
use crate::error::{CnsError, Result};
use crate::grid::{CylGrid, ScalarField};
use crate::operators::OperatorSet;
use crate::quad::gauss_legendre;
use crate::sum::Neumaier;
use crate::timestepper::SolverState;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Cell-centered uniform Cartesian sampling box.
///
/// Cell `(i, j, k)` has center `(x0 + (i+1/2) h1, y0 + (j+1/2) h2,
/// z0 + (k+1/2) h3)`; linear storage is x3-major with x1 fastest,
/// `idx = (k*n2 + j)*n1 + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxGrid {
    /// Cell counts along x1, x2, x3.
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// Minimum corner of the box.
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    /// Cell spacings.
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl BoxGrid {
    /// A box with the given cell counts spanning the given closed ranges.
    pub fn new(
        counts: [usize; 3],
        x_range: (f64, f64),
        y_range: (f64, f64),
        z_range: (f64, f64),
    ) -> Result<BoxGrid> {
        let [n1, n2, n3] = counts;
        if n1 == 0 || n2 == 0 || n3 == 0 {
            return Err(CnsError::InvalidConfig(format!(
                "box cell counts must be positive, got {n1} x {n2} x {n3}"
            )));
        }
        for (lo, hi) in [x_range, y_range, z_range] {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(CnsError::InvalidConfig(format!(
                    "box extent [{lo}, {hi}] is not an increasing finite range"
                )));
            }
        }
        Ok(BoxGrid {
            n1,
            n2,
            n3,
            x0: x_range.0,
            y0: y_range.0,
            z0: z_range.0,
            h1: (x_range.1 - x_range.0) / n1 as f64,
            h2: (y_range.1 - y_range.0) / n2 as f64,
            h3: (z_range.1 - z_range.0) / n3 as f64,
        })
    }

    /// The box `[-R0, R0]^2 x [-L3, L3]` that covers the full annulus
    /// cross-section and one axial period of the cylinder grid.
    pub fn covering(grid: &CylGrid, n_xy: usize, n3: usize) -> Result<BoxGrid> {
        BoxGrid::new(
            [n_xy, n_xy, n3],
            (-grid.r1, grid.r1),
            (-grid.r1, grid.r1),
            (-grid.l3, grid.l3),
        )
    }

    /// Cell-center coordinates.
    pub fn xc(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h1
    }
    pub fn yc(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h2
    }
    pub fn zc(&self, k: usize) -> f64 {
        self.z0 + (k as f64 + 0.5) * self.h3
    }

    /// Linear index of cell (i, j, k).
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n2 + j) * self.n1 + i
    }

    /// Total cell count.
    pub fn len(&self) -> usize {
        self.n1 * self.n2 * self.n3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sampled 3D velocity on a [`BoxGrid`].
///
/// Entries whose cell center falls outside the open annulus `r0 < r < R0`
/// are masked and exactly zero.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub box_grid: BoxGrid,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub u3: Vec<f64>,
    /// True where the cell center lies strictly inside the annulus.
    pub mask: Vec<bool>,
    /// Annulus radii carried along for collar bookkeeping.
    pub r_inner: f64,
    pub r_outer: f64,
}

impl VelocityField {
    /// Sup norm over all three components (masked entries are zero).
    pub fn sup(&self) -> f64 {
        let mut s = 0.0f64;
        for v in [&self.u1, &self.u2, &self.u3] {
            for &x in v.iter() {
                s = s.max(x.abs());
            }
        }
        s
    }

    /// True when the cell center keeps a radial margin of `cells * h` from
    /// both annulus walls; all centered stencils up to two cells wide stay
    /// strictly inside the annulus at such points once `cells >= 3`.
    pub fn in_collar(&self, i: usize, j: usize, cells: f64) -> bool {
        let b = &self.box_grid;
        let margin = cells * b.h1.max(b.h2);
        let rc = b.xc(i).hypot(b.yc(j));
        rc > self.r_inner + margin && rc < self.r_outer - margin
    }
}

/// A scalar diagnostic (e.g. divergence) on a [`BoxGrid`], with a validity
/// flag marking the cells where the full stencil was available.
#[derive(Debug, Clone)]
pub struct BoxScalar {
    pub box_grid: BoxGrid,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Sampled vorticity (curl of a [`VelocityField`]) with a validity flag.
#[derive(Debug, Clone)]
pub struct VorticityField {
    pub box_grid: BoxGrid,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub w3: Vec<f64>,
    pub valid: Vec<bool>,
}

/// Norms of the vorticity-equation residual over the evaluation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    /// sqrt( sum R^2 * h1 h2 h3 ) over all three components.
    pub l2: f64,
    /// Pointwise maximum |R|.
    pub max: f64,
    /// Number of evaluation cells (per component).
    pub points: usize,
}

/// Box-quadrature velocity norms over the annulus cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxNorms {
    /// Integral of |u|^2.
    pub l2_sq: f64,
    /// Integral of |grad u|^2 (all nine Cartesian entries).
    pub grad_sq: f64,
}

/// Four-point Lagrange weights on the radial node window starting at `base`.
#[derive(Debug, Clone, Copy)]
struct RadialStencil {
    base: usize,
    w: [f64; 4],
}

/// Clamped cubic window: the sample point sits between nodes `base+1` and
/// `base+2` except at the walls, where the window slides inward.
fn radial_stencil(grid: &CylGrid, r: f64) -> RadialStencil {
    let tr = (r - grid.r0) / grid.dr;
    let cell = (tr.floor() as i64).clamp(0, grid.nr as i64 - 2);
    let base = (cell - 1).clamp(0, grid.nr as i64 - 4) as usize;
    let x = tr - base as f64;
    let mut w = [0.0; 4];
    for (jn, wj) in w.iter_mut().enumerate() {
        let mut p = 1.0;
        for m in 0..4 {
            if m != jn {
                p *= (x - m as f64) / (jn as f64 - m as f64);
            }
        }
        *wj = p;
    }
    RadialStencil { base, w }
}

/// Catmull-Rom row indices (periodic) and weights for an axial sample.
fn axial_stencil(grid: &CylGrid, z: f64) -> ([usize; 4], [f64; 4]) {
    let tz = (z - grid.z[0]) / grid.dz;
    let j0 = tz.floor();
    let u = tz - j0;
    let jj = j0 as i64;
    let nz = grid.nz as i64;
    let rows = std::array::from_fn(|b| (jj - 1 + b as i64).rem_euclid(nz) as usize);
    let (u2, u3) = (u * u, u * u * u);
    let wz = [
        0.5 * (-u3 + 2.0 * u2 - u),
        0.5 * (3.0 * u3 - 5.0 * u2 + 2.0),
        0.5 * (-3.0 * u3 + 4.0 * u2 + u),
        0.5 * (u3 - u2),
    ];
    (rows, wz)
}

/// Bicubic sample of a node field at one point (tensor product of the two
/// stencils above).
fn sample(f: &ScalarField, rs: &RadialStencil, rows: &[usize; 4], wz: &[f64; 4]) -> f64 {
    let nr = f.grid.nr;
    let mut acc = 0.0;
    for b in 0..4 {
        let v = &f.values[rows[b] * nr + rs.base..rows[b] * nr + rs.base + 4];
        acc += wz[b] * (rs.w[0] * v[0] + rs.w[1] * v[1] + rs.w[2] * v[2] + rs.w[3] * v[3]);
    }
    acc
}

/// Per-column (x1, x2) sampling data shared by every axial slab.
struct Column {
    mask: bool,
    cos: f64,
    sin: f64,
    rs: RadialStencil,
}

fn columns(grid: &CylGrid, bx: &BoxGrid) -> Vec<Column> {
    let mut cols = Vec::with_capacity(bx.n1 * bx.n2);
    for j in 0..bx.n2 {
        for i in 0..bx.n1 {
            let (x, y) = (bx.xc(i), bx.yc(j));
            let rc = x.hypot(y);
            let guard = rc.max(1e-300);
            cols.push(Column {
                mask: rc > grid.r0 && rc < grid.r1,
                cos: x / guard,
                sin: y / guard,
                rs: radial_stencil(grid, rc.clamp(grid.r0, grid.r1)),
            });
        }
    }
    cols
}

/// Sample the velocity `u = ((x1/r) a, (x2/r) a, -c)` with `a = d_r d_3 psi`
/// and `c = Delta_r psi` onto the box.  Masked cells are exactly zero.
///
/// Errors with `EmptyIntersection` when no cell center lies inside the
/// annulus.
pub fn to_cartesian(psi: &ScalarField, bx: &BoxGrid) -> Result<VelocityField> {
    let grid = &psi.grid;
    let ops = OperatorSet::new(grid);
    let a = ops.apply_dr(&ops.apply_dz(psi));
    let c = ops.apply_delta_r(psi);

    let cols = columns(grid, bx);
    if !cols.iter().any(|col| col.mask) {
        return Err(CnsError::EmptyIntersection);
    }

    let slab = bx.n1 * bx.n2;
    let mut u1 = vec![0.0; bx.len()];
    let mut u2 = vec![0.0; bx.len()];
    let mut u3 = vec![0.0; bx.len()];
    u1.par_chunks_mut(slab)
        .zip(u2.par_chunks_mut(slab))
        .zip(u3.par_chunks_mut(slab))
        .enumerate()
        .for_each(|(k, ((s1, s2), s3))| {
            let (rows, wz) = axial_stencil(grid, bx.zc(k));
            for (p, col) in cols.iter().enumerate() {
                if !col.mask {
                    continue;
                }
                let av = sample(&a, &col.rs, &rows, &wz);
                let cv = sample(&c, &col.rs, &rows, &wz);
                s1[p] = col.cos * av;
                s2[p] = col.sin * av;
                s3[p] = -cv;
            }
        });

    let mut mask = Vec::with_capacity(bx.len());
    for _ in 0..bx.n3 {
        mask.extend(cols.iter().map(|col| col.mask));
    }
    Ok(VelocityField {
        box_grid: bx.clone(),
        u1,
        u2,
        u3,
        mask,
        r_inner: grid.r0,
        r_outer: grid.r1,
    })
}

/// Fourth-order centered divergence `d_1 u1 + d_2 u2 + d_3 u3`.
///
/// Valid where every tap of the five-point stencil is in-grid (x3 wraps) and
/// unmasked; invalid cells hold zero.  The reconstruction is divergence-free
/// analytically, so on reconstructed fields this measures pure discretization
/// error.
pub fn divergence(u: &VelocityField) -> BoxScalar {
    let b = u.box_grid.clone();
    let (n1, n2, n3) = (b.n1, b.n2, b.n3);
    let slab = n1 * n2;
    let mut values = vec![0.0; b.len()];
    let mut valid = vec![false; b.len()];
    values
        .par_chunks_mut(slab)
        .zip(valid.par_chunks_mut(slab))
        .enumerate()
        .for_each(|(k, (vs, ok))| {
            let kp = (k + 1) % n3;
            let km = (k + n3 - 1) % n3;
            let kp2 = (k + 2) % n3;
            let km2 = (k + n3 - 2) % n3;
            for j in 2..n2.saturating_sub(2) {
                for i in 2..n1 - 2 {
                    let p = j * n1 + i;
                    let taps = [
                        b.idx(i, j, k),
                        b.idx(i + 1, j, k),
                        b.idx(i + 2, j, k),
                        b.idx(i - 1, j, k),
                        b.idx(i - 2, j, k),
                        b.idx(i, j + 1, k),
                        b.idx(i, j + 2, k),
                        b.idx(i, j - 1, k),
                        b.idx(i, j - 2, k),
                        b.idx(i, j, kp),
                        b.idx(i, j, kp2),
                        b.idx(i, j, km),
                        b.idx(i, j, km2),
                    ];
                    if !taps.iter().all(|&q| u.mask[q]) {
                        continue;
                    }
                    let d1 = (-u.u1[taps[2]] + 8.0 * u.u1[taps[1]] - 8.0 * u.u1[taps[3]]
                        + u.u1[taps[4]])
                        / (12.0 * b.h1);
                    let d2 = (-u.u2[taps[6]] + 8.0 * u.u2[taps[5]] - 8.0 * u.u2[taps[7]]
                        + u.u2[taps[8]])
                        / (12.0 * b.h2);
                    let d3 = (-u.u3[taps[10]] + 8.0 * u.u3[taps[9]] - 8.0 * u.u3[taps[11]]
                        + u.u3[taps[12]])
                        / (12.0 * b.h3);
                    vs[p] = d1 + d2 + d3;
                    ok[p] = true;
                }
            }
        });
    BoxScalar {
        box_grid: b,
        values,
        valid,
    }
}

/// Max |div u| over the interior collar, and the velocity sup norm used to
/// normalize it.  Collar depth 3 keeps every divergence tap strictly inside
/// the annulus with one cell to spare.
pub fn max_divergence_ratio(u: &VelocityField, collar_cells: f64) -> (f64, f64) {
    let d = divergence(u);
    let b = &u.box_grid;
    let mut worst = 0.0f64;
    for k in 0..b.n3 {
        for j in 0..b.n2 {
            for i in 0..b.n1 {
                let p = b.idx(i, j, k);
                if d.valid[p] && u.in_collar(i, j, collar_cells) {
                    worst = worst.max(d.values[p].abs());
                }
            }
        }
    }
    (worst, u.sup())
}

/// Second-order centered curl.  Valid where the cell and its six face
/// neighbors are in-grid (x3 wraps) and unmasked; invalid cells hold zero.
pub fn vorticity(u: &VelocityField) -> VorticityField {
    let b = u.box_grid.clone();
    let (n1, n2, n3) = (b.n1, b.n2, b.n3);
    let slab = n1 * n2;
    let mut w1 = vec![0.0; b.len()];
    let mut w2 = vec![0.0; b.len()];
    let mut w3 = vec![0.0; b.len()];
    let mut valid = vec![false; b.len()];
    w1.par_chunks_mut(slab)
        .zip(w2.par_chunks_mut(slab))
        .zip(w3.par_chunks_mut(slab))
        .zip(valid.par_chunks_mut(slab))
        .enumerate()
        .for_each(|(k, (((s1, s2), s3), ok))| {
            let kp = (k + 1) % n3;
            let km = (k + n3 - 1) % n3;
            for j in 1..n2.saturating_sub(1) {
                for i in 1..n1 - 1 {
                    let p = j * n1 + i;
                    let c = b.idx(i, j, k);
                    let xp = b.idx(i + 1, j, k);
                    let xm = b.idx(i - 1, j, k);
                    let yp = b.idx(i, j + 1, k);
                    let ym = b.idx(i, j - 1, k);
                    let zp = b.idx(i, j, kp);
                    let zm = b.idx(i, j, km);
                    if ![c, xp, xm, yp, ym, zp, zm].iter().all(|&q| u.mask[q]) {
                        continue;
                    }
                    let dy_u3 = (u.u3[yp] - u.u3[ym]) / (2.0 * b.h2);
                    let dz_u2 = (u.u2[zp] - u.u2[zm]) / (2.0 * b.h3);
                    let dz_u1 = (u.u1[zp] - u.u1[zm]) / (2.0 * b.h3);
                    let dx_u3 = (u.u3[xp] - u.u3[xm]) / (2.0 * b.h1);
                    let dx_u2 = (u.u2[xp] - u.u2[xm]) / (2.0 * b.h1);
                    let dy_u1 = (u.u1[yp] - u.u1[ym]) / (2.0 * b.h2);
                    s1[p] = dy_u3 - dz_u2;
                    s2[p] = dz_u1 - dx_u3;
                    s3[p] = dx_u2 - dy_u1;
                    ok[p] = true;
                }
            }
        });
    VorticityField {
        box_grid: b,
        w1,
        w2,
        w3,
        valid,
    }
}

/// Residual of `omega_t - nu Lap omega + (u.grad) omega - (omega.grad) u`
/// between two consecutive accepted states (backward difference in time,
/// centered differences in space), evaluated on the radial collar of depth 3
/// where every nested stencil tap stays strictly inside the annulus.
pub fn vorticity_equation_residual(
    state_a: &SolverState,
    state_b: &SolverState,
    nu: f64,
    bx: &BoxGrid,
) -> Result<ResidualNorms> {
    let dt = state_b.t - state_a.t;
    if !(dt > 0.0) {
        return Err(CnsError::InvalidConfig(format!(
            "states must be ordered in time, got dt = {dt}"
        )));
    }
    let ua = to_cartesian(&state_a.psi, bx)?;
    let ub = to_cartesian(&state_b.psi, bx)?;
    let oa = vorticity(&ua);
    let ob = vorticity(&ub);

    let b = bx;
    let (n1, n2, n3) = (b.n1, b.n2, b.n3);
    // Geometric collar: every tap of the nested (curl, then transport)
    // stencils deviates from the evaluation center by at most two cells.
    let keep: Vec<bool> = (0..n2 * n1)
        .map(|p| {
            let (j, i) = (p / n1, p % n1);
            i >= 3 && i + 3 < n1 && j >= 3 && j + 3 < n2 && ub.in_collar(i, j, 3.0)
        })
        .collect();
    if !keep.iter().any(|&m| m) {
        return Err(CnsError::EmptyIntersection);
    }

    let (h1, h2, h3) = (b.h1, b.h2, b.h3);
    let per_slab: Vec<(f64, f64, usize)> = (0..n3)
        .into_par_iter()
        .map(|k| {
            let kp = (k + 1) % n3;
            let km = (k + n3 - 1) % n3;
            let mut acc = Neumaier::new();
            let mut mx = 0.0f64;
            let mut count = 0usize;
            let comps_b = [&ob.w1, &ob.w2, &ob.w3];
            let comps_a = [&oa.w1, &oa.w2, &oa.w3];
            let vels = [&ub.u1, &ub.u2, &ub.u3];
            for j in 3..n2 - 3 {
                for i in 3..n1 - 3 {
                    if !keep[j * n1 + i] {
                        continue;
                    }
                    let c = b.idx(i, j, k);
                    debug_assert!(ob.valid[c] && oa.valid[c]);
                    let xp = b.idx(i + 1, j, k);
                    let xm = b.idx(i - 1, j, k);
                    let yp = b.idx(i, j + 1, k);
                    let ym = b.idx(i, j - 1, k);
                    let zp = b.idx(i, j, kp);
                    let zm = b.idx(i, j, km);
                    count += 1;
                    for comp in 0..3 {
                        let wb = comps_b[comp];
                        let dwdt = (wb[c] - comps_a[comp][c]) / dt;
                        let lap = (wb[xp] - 2.0 * wb[c] + wb[xm]) / (h1 * h1)
                            + (wb[yp] - 2.0 * wb[c] + wb[ym]) / (h2 * h2)
                            + (wb[zp] - 2.0 * wb[c] + wb[zm]) / (h3 * h3);
                        let adv = ub.u1[c] * (wb[xp] - wb[xm]) / (2.0 * h1)
                            + ub.u2[c] * (wb[yp] - wb[ym]) / (2.0 * h2)
                            + ub.u3[c] * (wb[zp] - wb[zm]) / (2.0 * h3);
                        let uc = vels[comp];
                        let stretch = ob.w1[c] * (uc[xp] - uc[xm]) / (2.0 * h1)
                            + ob.w2[c] * (uc[yp] - uc[ym]) / (2.0 * h2)
                            + ob.w3[c] * (uc[zp] - uc[zm]) / (2.0 * h3);
                        let r = dwdt - nu * lap + adv - stretch;
                        acc.add(r * r);
                        mx = mx.max(r.abs());
                    }
                }
            }
            (acc.value(), mx, count)
        })
        .collect();

    let mut total = Neumaier::new();
    let mut max = 0.0f64;
    let mut points = 0usize;
    for (s, m, c) in per_slab {
        total.add(s);
        max = max.max(m);
        points += c;
    }
    Ok(ResidualNorms {
        l2: (total.value() * h1 * h2 * h3).sqrt(),
        max,
        points,
    })
}

/// Area of the intersection of the disk `x1^2 + x2^2 < rad^2` with the
/// rectangle `(x0, x1) x (y0, y1)`: Gauss-Legendre integration of the
/// clamped vertical extent of the disk over the clamped horizontal range.
fn disk_rect_area(rad: f64, x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, gl: &[(f64, f64)]) -> f64 {
    let lo = x_lo.max(-rad);
    let hi = x_hi.min(rad);
    if hi <= lo {
        return 0.0;
    }
    let mid = 0.5 * (hi + lo);
    let half = 0.5 * (hi - lo);
    let mut acc = 0.0;
    for &(t, w) in gl {
        let x = mid + half * t;
        let ytop = (rad * rad - x * x).max(0.0).sqrt();
        acc += w * (y_hi.min(ytop) - y_lo.max(-ytop)).max(0.0);
    }
    acc * half
}

/// Quadrature weight of one box cell against the annulus cross-section:
/// full cell area inside, zero outside, exact overlap for straddling cells.
fn annulus_cell_weight(
    r_in: f64,
    r_out: f64,
    xc: f64,
    yc: f64,
    h1: f64,
    h2: f64,
    gl: &[(f64, f64)],
) -> f64 {
    let rc = xc.hypot(yc);
    let half_diag = 0.5 * (h1 * h1 + h2 * h2).sqrt();
    if rc >= r_out + half_diag || rc <= r_in - half_diag {
        return 0.0;
    }
    if rc >= r_in + half_diag && rc <= r_out - half_diag {
        return h1 * h2;
    }
    let (x_lo, x_hi) = (xc - 0.5 * h1, xc + 0.5 * h1);
    let (y_lo, y_hi) = (yc - 0.5 * h2, yc + 0.5 * h2);
    let outer = disk_rect_area(r_out, x_lo, x_hi, y_lo, y_hi, gl);
    let inner = disk_rect_area(r_in, x_lo, x_hi, y_lo, y_hi, gl);
    (outer - inner).max(0.0)
}

/// Box quadrature of |u|^2 and |grad u|^2 over (annulus) x (axial period).
///
/// Every Cartesian derivative of `u = ((x1/r) a, (x2/r) a, -c)` is expanded
/// by the chain rule into the sampled axisymmetric fields `a, a_r, a_z, c,
/// c_r, c_z`, so no finite differences are taken on the box and partially
/// covered boundary cells can carry their exact overlap weight.  The results
/// match `2 pi E0` and `2 pi D1` of the energy reports at second order.
pub fn box_velocity_norms(psi: &ScalarField, bx: &BoxGrid) -> Result<BoxNorms> {
    let grid = &psi.grid;
    let ops = OperatorSet::new(grid);
    let a = ops.apply_dr(&ops.apply_dz(psi));
    let c = ops.apply_delta_r(psi);
    let ar = ops.apply_dr(&a);
    let az = ops.apply_dz(&a);
    let cr = ops.apply_dr(&c);
    let cz = ops.apply_dz(&c);

    let (nodes, weights) = gauss_legendre(24);
    let gl: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();

    struct QuadCell {
        w2: f64,
        cos: f64,
        sin: f64,
        inv_r: f64,
        rs: RadialStencil,
    }
    let mut cells = Vec::new();
    for j in 0..bx.n2 {
        for i in 0..bx.n1 {
            let (x, y) = (bx.xc(i), bx.yc(j));
            let w2 = annulus_cell_weight(grid.r0, grid.r1, x, y, bx.h1, bx.h2, &gl);
            if w2 <= 0.0 {
                continue;
            }
            let rc = x.hypot(y);
            let guard = rc.max(1e-300);
            let rq = rc.clamp(grid.r0, grid.r1);
            cells.push(QuadCell {
                w2,
                cos: x / guard,
                sin: y / guard,
                inv_r: 1.0 / rq,
                rs: radial_stencil(grid, rq),
            });
        }
    }
    if cells.is_empty() {
        return Err(CnsError::EmptyIntersection);
    }

    let per_slab: Vec<(f64, f64)> = (0..bx.n3)
        .into_par_iter()
        .map(|k| {
            let (rows, wz) = axial_stencil(grid, bx.zc(k));
            let mut l2 = Neumaier::new();
            let mut grad = Neumaier::new();
            for cell in &cells {
                let av = sample(&a, &cell.rs, &rows, &wz);
                let cv = sample(&c, &cell.rs, &rows, &wz);
                let arv = sample(&ar, &cell.rs, &rows, &wz);
                let azv = sample(&az, &cell.rs, &rows, &wz);
                let crv = sample(&cr, &cell.rs, &rows, &wz);
                let czv = sample(&cz, &cell.rs, &rows, &wz);
                l2.add(cell.w2 * (av * av + cv * cv));
                let (c2, s2) = (cell.cos * cell.cos, cell.sin * cell.sin);
                let aor = av * cell.inv_r;
                let t11 = c2 * arv + s2 * aor;
                let t22 = s2 * arv + c2 * aor;
                let cross = arv - aor;
                let g = t11 * t11
                    + t22 * t22
                    + 2.0 * s2 * c2 * cross * cross
                    + azv * azv
                    + crv * crv
                    + czv * czv;
                grad.add(cell.w2 * g);
            }
            (l2.value(), grad.value())
        })
        .collect();

    let mut l2 = Neumaier::new();
    let mut grad = Neumaier::new();
    for (a_, b_) in per_slab {
        l2.add(a_);
        grad.add(b_);
    }
    Ok(BoxNorms {
        l2_sq: l2.value() * bx.h3,
        grad_sq: grad.value() * bx.h3,
    })
}

/// One row of the discrete energy-budget check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudgetRow {
    pub t: f64,
    /// `2 pi E0(t) + 2 nu * int_0^t 2 pi D1` (trapezoid in time).
    pub lhs: f64,
    /// `2 pi E0(0) * (1 + 10 (dt^2 + h^2))`.
    pub rhs: f64,
    pub ok: bool,
}

/// Verify the energy budget `|u(t)|^2 + 2 nu int |grad u|^2 <= |u(0)|^2`
/// (with the discretization slack `1 + 10 (dt^2 + h^2)`) on a report series.
pub fn energy_inequality_check(
    reports: &[EnergyReport],
    nu: f64,
    dt: f64,
    h: f64,
) -> Vec<EnergyBudgetRow> {
    let two_pi = 2.0 * PI;
    let mut rows = Vec::with_capacity(reports.len());
    if reports.is_empty() {
        return rows;
    }
    let rhs = two_pi * reports[0].e0 * (1.0 + 10.0 * (dt * dt + h * h));
    let mut dissipated = Neumaier::new();
    for (k, rep) in reports.iter().enumerate() {
        if k > 0 {
            let prev = &reports[k - 1];
            dissipated.add(0.5 * (prev.d1 + rep.d1) * (rep.t - prev.t));
        }
        let lhs = two_pi * rep.e0 + 2.0 * nu * two_pi * dissipated.value();
        rows.push(EnergyBudgetRow {
            t: rep.t,
            lhs,
            rhs,
            ok: lhs <= rhs,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::jet::Jet;
    use crate::presets::{completed_profile_jet, Preset};
    use crate::timestepper::{RunConfig, Stepper, TimeStep};

    fn quartic_grid(n: usize) -> std::sync::Arc<CylGrid> {
        std::sync::Arc::new(build_grid(1.0, 2.0, PI, n + 1, n).unwrap())
    }

    /// Radial profile of the built-in quartic preset, as a jet.
    fn profile(r: f64) -> Jet {
        completed_profile_jet(Jet::var(r), 1.0, 2.0)
    }

    #[test]
    fn z_independent_data_gives_axial_flow_only() {
        let mut sups = Vec::new();
        for n in [64usize, 128] {
            let grid = quartic_grid(n);
            let psi = ScalarField::from_fn(&grid, |r, _| profile(r).val());
            let bx = BoxGrid::covering(&grid, n, 8).unwrap();
            let u = to_cartesian(&psi, &bx).unwrap();
            // d_3 psi vanishes node-wise, so the planar components are zero.
            assert!(u.u1.iter().all(|&v| v == 0.0));
            assert!(u.u2.iter().all(|&v| v == 0.0));
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for j in 0..bx.n2 {
                for i in 0..bx.n1 {
                    let p = bx.idx(i, j, 0);
                    if !u.mask[p] {
                        continue;
                    }
                    let rc = bx.xc(i).hypot(bx.yc(j));
                    let pj = profile(rc);
                    let exact = -(pj.deriv(2) + pj.deriv(1) / rc);
                    worst = worst.max((u.u3[p] - exact).abs());
                    scale = scale.max(exact.abs());
                }
            }
            let rel = worst / scale;
            println!("n={n}: sup rel error of u3 vs -Delta_r psi = {rel:.3e}");
            sups.push(rel);
        }
        let order = (sups[0] / sups[1]).log2();
        println!("axial-flow reconstruction order: {order:.2}");
        assert!(sups[1] < 5e-3);
        assert!(order > 1.5);
    }

    #[test]
    fn pure_axial_coordinate_maps_to_zero_velocity() {
        // psi = x3 is r-constant row by row (even at the periodic wrap,
        // where d_3 is wrong but still r-constant), and every radial stencil
        // annihilates constants exactly, so u vanishes bitwise.
        let grid = std::sync::Arc::new(build_grid(1.0, 2.0, PI, 33, 32).unwrap());
        let psi = ScalarField::from_fn(&grid, |_, z| z);
        let bx = BoxGrid::covering(&grid, 32, 16).unwrap();
        let u = to_cartesian(&psi, &bx).unwrap();
        assert!(u.u1.iter().all(|&v| v == 0.0));
        assert!(u.u2.iter().all(|&v| v == 0.0));
        assert!(u.u3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_intersection_is_rejected() {
        let grid = std::sync::Arc::new(build_grid(1.0, 2.0, PI, 33, 32).unwrap());
        // A box tucked entirely inside the inner hole.
        let bx = BoxGrid::new([4, 4, 4], (-0.3, 0.3), (-0.3, 0.3), (-1.0, 1.0)).unwrap();
        match to_cartesian(&ScalarField::zeros(&grid), &bx) {
            Err(CnsError::EmptyIntersection) => {}
            other => panic!("expected EmptyIntersection, got {other:?}"),
        }
    }

    #[test]
    fn divergence_stencil_exact_on_linear_field() {
        let bx = BoxGrid::new([12, 12, 12], (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let mut u = VelocityField {
            box_grid: bx.clone(),
            u1: vec![0.0; bx.len()],
            u2: vec![0.0; bx.len()],
            u3: vec![0.0; bx.len()],
            mask: vec![true; bx.len()],
            r_inner: 0.0,
            r_outer: f64::INFINITY,
        };
        for k in 0..bx.n3 {
            for j in 0..bx.n2 {
                for i in 0..bx.n1 {
                    let p = bx.idx(i, j, k);
                    u.u1[p] = bx.xc(i);
                    u.u2[p] = bx.yc(j);
                    u.u3[p] = bx.zc(k);
                }
            }
        }
        let d = divergence(&u);
        // Skip the periodic wrap in x3, where the linear u3 is discontinuous.
        for k in 2..bx.n3 - 2 {
            for j in 2..bx.n2 - 2 {
                for i in 2..bx.n1 - 2 {
                    let p = bx.idx(i, j, k);
                    assert!(d.valid[p]);
                    assert!(
                        (d.values[p] - 3.0).abs() < 1e-11,
                        "div = {} at ({i},{j},{k})",
                        d.values[p]
                    );
                }
            }
        }
    }

    #[test]
    fn divergence_of_reconstruction_refines_at_second_order() {
        let mut ratios = Vec::new();
        for (n, nbox) in [(96usize, 64usize), (192, 128)] {
            let grid = quartic_grid(n);
            let psi = Preset::from_name("quartic-cos", 1.0, 1)
                .unwrap()
                .sample(&grid);
            let bx = BoxGrid::covering(&grid, nbox, nbox).unwrap();
            let u = to_cartesian(&psi, &bx).unwrap();
            let (worst, scale) = max_divergence_ratio(&u, 3.0);
            let ratio = worst / scale;
            println!("n={n} nbox={nbox}: max|div| = {worst:.3e}, sup|u| = {scale:.3}, ratio = {ratio:.3e}");
            ratios.push(ratio);
        }
        let order = (ratios[0] / ratios[1]).log2();
        println!("divergence order: {order:.2}");
        assert!(ratios[1] < 5e-4);
        assert!(order > 2.0);
    }

    #[test]
    fn vorticity_of_uniform_flow_vanishes_exactly() {
        let bx = BoxGrid::new([8, 8, 8], (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let u = VelocityField {
            box_grid: bx.clone(),
            u1: vec![1.25; bx.len()],
            u2: vec![-0.5; bx.len()],
            u3: vec![3.0; bx.len()],
            mask: vec![true; bx.len()],
            r_inner: 0.0,
            r_outer: f64::INFINITY,
        };
        let o = vorticity(&u);
        assert!(o.valid.iter().filter(|&&v| v).count() > 0);
        assert!(o.w1.iter().all(|&v| v == 0.0));
        assert!(o.w2.iter().all(|&v| v == 0.0));
        assert!(o.w3.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vorticity_matches_symbolic_curl_for_axisymmetric_data() {
        // For z-independent psi: u = (0, 0, -Delta_r psi), so
        // omega = ( -(x2/r) P', (x1/r) P', 0 ) with P = Delta_r psi.
        let mut sups = Vec::new();
        for n in [64usize, 128] {
            let grid = quartic_grid(n);
            let psi = ScalarField::from_fn(&grid, |r, _| profile(r).val());
            let bx = BoxGrid::covering(&grid, n, 8).unwrap();
            let u = to_cartesian(&psi, &bx).unwrap();
            let o = vorticity(&u);
            // Planar velocity is exactly zero, so omega_3 is exactly zero.
            assert!(o.w3.iter().all(|&v| v == 0.0));
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for j in 0..bx.n2 {
                for i in 0..bx.n1 {
                    let p = bx.idx(i, j, 0);
                    if !o.valid[p] || !u.in_collar(i, j, 2.0) {
                        continue;
                    }
                    let (x, y) = (bx.xc(i), bx.yc(j));
                    let rc = x.hypot(y);
                    let pj = profile(rc);
                    // P' = (p'' + p'/r)' = p''' + p''/r - p'/r^2
                    let dp = pj.deriv(3) + pj.deriv(2) / rc - pj.deriv(1) / (rc * rc);
                    let e1 = -(y / rc) * dp;
                    let e2 = (x / rc) * dp;
                    worst = worst.max((o.w1[p] - e1).abs().max((o.w2[p] - e2).abs()));
                    scale = scale.max(dp.abs());
                }
            }
            let rel = worst / scale;
            println!("n={n}: sup rel error of curl vs symbolic = {rel:.3e}");
            sups.push(rel);
        }
        let order = (sups[0] / sups[1]).log2();
        println!("curl reconstruction order: {order:.2}");
        assert!(sups[1] < 1e-2);
        assert!(order > 1.5);
    }

    #[test]
    fn axial_vorticity_component_is_small_for_reconstructed_flow() {
        // The representation forces omega_3 = 0 analytically; the discrete
        // value is pure truncation error.
        let mut sups = Vec::new();
        for (n, nbox) in [(96usize, 64usize), (192, 128)] {
            let grid = quartic_grid(n);
            let psi = Preset::from_name("quartic-cos", 1.0, 1)
                .unwrap()
                .sample(&grid);
            let bx = BoxGrid::covering(&grid, nbox, nbox).unwrap();
            let u = to_cartesian(&psi, &bx).unwrap();
            let o = vorticity(&u);
            let mut w3 = 0.0f64;
            let mut planar = 0.0f64;
            for k in 0..bx.n3 {
                for j in 0..bx.n2 {
                    for i in 0..bx.n1 {
                        let p = bx.idx(i, j, k);
                        if !o.valid[p] || !u.in_collar(i, j, 3.0) {
                            continue;
                        }
                        w3 = w3.max(o.w3[p].abs());
                        planar = planar.max(o.w1[p].abs().max(o.w2[p].abs()));
                    }
                }
            }
            let rel = w3 / planar;
            println!("n={n} nbox={nbox}: sup|omega_3| = {w3:.3e}, sup|omega_12| = {planar:.3}, ratio = {rel:.3e}");
            sups.push(rel);
        }
        let order = (sups[0] / sups[1]).log2();
        println!("omega_3 decay order: {order:.2}");
        assert!(sups[1] < 1e-3);
        assert!(order > 1.5);
    }

    #[test]
    fn box_norms_match_annulus_quadrature() {
        for (n, nbox, tol_u, tol_g) in [(96usize, 64usize, 1e-3, 5e-3), (192, 128, 1e-4, 1e-3)] {
            let grid = quartic_grid(n);
            let stepper = Stepper::new(&grid);
            let state = stepper
                .initial_state(&Preset::from_name("quartic-cos", 1.0, 1).unwrap())
                .unwrap();
            let rep = crate::diagnostics::report(&state);
            let bx = BoxGrid::covering(&grid, nbox, nbox).unwrap();
            let norms = box_velocity_norms(&state.psi, &bx).unwrap();
            let two_pi = 2.0 * PI;
            let rel_u = (norms.l2_sq - two_pi * rep.e0).abs() / (two_pi * rep.e0);
            let rel_g = (norms.grad_sq - two_pi * rep.d1).abs() / (two_pi * rep.d1);
            println!(
                "n={n} nbox={nbox}: |u|^2 = {:.6} vs 2piE0 = {:.6} (rel {rel_u:.3e}); \
                 |grad u|^2 = {:.4} vs 2piD1 = {:.4} (rel {rel_g:.3e})",
                norms.l2_sq,
                two_pi * rep.e0,
                norms.grad_sq,
                two_pi * rep.d1
            );
            assert!(rel_u < tol_u, "rel_u = {rel_u:.3e} at n = {n}");
            assert!(rel_g < tol_g, "rel_g = {rel_g:.3e} at n = {n}");
        }
    }

    #[test]
    fn residual_vanishes_on_zero_trajectory() {
        let grid = std::sync::Arc::new(build_grid(1.0, 2.0, PI, 33, 32).unwrap());
        let stepper = Stepper::new(&grid);
        let a = stepper.state_from_psi(ScalarField::zeros(&grid));
        let mut b = stepper.state_from_psi(ScalarField::zeros(&grid));
        b.t = 1e-3;
        // box cells must be fine enough that the 3-cell wall collar leaves
        // interior annulus cells (h1 = 4/48, collar 0.25 < (2-1)/2)
        let bx = BoxGrid::covering(&grid, 48, 16).unwrap();
        let norms = vorticity_equation_residual(&a, &b, 0.5, &bx).unwrap();
        assert_eq!(norms.l2, 0.0);
        assert_eq!(norms.max, 0.0);
        assert!(norms.points > 0);
    }

    #[test]
    fn residual_requires_ordered_states() {
        let grid = std::sync::Arc::new(build_grid(1.0, 2.0, PI, 33, 32).unwrap());
        let stepper = Stepper::new(&grid);
        let a = stepper.state_from_psi(ScalarField::zeros(&grid));
        let b = stepper.state_from_psi(ScalarField::zeros(&grid));
        let bx = BoxGrid::covering(&grid, 24, 16).unwrap();
        assert!(matches!(
            vorticity_equation_residual(&a, &b, 0.5, &bx),
            Err(CnsError::InvalidConfig(_))
        ));
    }

    /// Run the quartic preset for a few steps and return the last two states.
    fn consecutive_states(n: usize, dt: f64, steps: usize) -> (Stepper, SolverState, SolverState) {
        let grid = quartic_grid(n);
        let stepper = Stepper::new(&grid);
        let mut state = stepper
            .initial_state(&Preset::from_name("quartic-cos", 1.0, 1).unwrap())
            .unwrap();
        let mut prev = state.clone();
        for _ in 0..steps {
            prev = state.clone();
            state = stepper.step(&state, dt, 0.5, false).unwrap();
        }
        (stepper, prev, state)
    }

    #[test]
    fn residual_refines_under_scaled_resolution() {
        // dt scales with h^2, so both the backward time difference and the
        // centered space differences shrink together.
        let mut vals = Vec::new();
        for (n, dt) in [(48usize, 8e-4), (96, 2e-4)] {
            let steps = (8e-3_f64 / dt).round() as usize;
            let (_s, a, b) = consecutive_states(n, dt, steps);
            let grid = a.psi.grid.clone();
            let bx = BoxGrid::covering(&grid, n, n).unwrap();
            let norms = vorticity_equation_residual(&a, &b, 0.5, &bx).unwrap();
            println!(
                "n=nbox={n} dt={dt:.1e}: residual L2 = {:.4e}, max = {:.4e} over {} cells",
                norms.l2, norms.max, norms.points
            );
            vals.push(norms.l2);
        }
        let order = (vals[0] / vals[1]).log2();
        println!("scaled-refinement order: {order:.2}");
        assert!(order > 1.5);
    }

    #[test]
    fn energy_budget_holds_for_linear_decay() {
        let grid = quartic_grid(64);
        let stepper = Stepper::new(&grid);
        let dt = 2e-3;
        let cfg = RunConfig {
            nu: 0.5,
            time_step: TimeStep::Fixed(dt),
            t_end: 0.1,
            preset: Preset::from_name("quartic-cos", 1.0, 1).unwrap(),
            linear_only: true,
            report_every: 1,
        };
        let (_state, reports) = stepper.run(&cfg).unwrap();
        let rows = energy_inequality_check(&reports, 0.5, dt, grid.dr);
        assert!(rows.iter().all(|r| r.ok));
        // Pure diffusion balances dissipation against decay, so the budget
        // line stays within a fraction of a percent of its initial value.
        let first = rows.first().unwrap().lhs;
        let last = rows.last().unwrap();
        let drift = (last.lhs - first).abs() / first;
        println!(
            "budget drift over [0, 0.1]: {drift:.3e} (lhs {:.6} -> {:.6}, bound {:.6})",
            first, last.lhs, last.rhs
        );
        assert!(drift < 0.01);

        // Zero data: equality 0 = 0 at every time.
        let z0 = stepper.state_from_psi(ScalarField::zeros(&grid));
        let zrep = crate::diagnostics::report(&z0);
        let zrows = energy_inequality_check(&[zrep, zrep], 0.5, dt, grid.dr);
        assert!(zrows.iter().all(|r| r.ok && r.lhs == 0.0));
    }
}
