//! Ring-cylinder domain: annulus `r0 < r < r1` crossed with a periodic
//! axial interval `[-l3, l3)`, with node coordinates and quadrature weights.
//!
//! The radial grid holds both walls (`nr` nodes, spacing `dr = (r1-r0)/(nr-1)`)
//! and carries trapezoid weights; the axial grid is a uniform periodic cover
//! (`nz` cells, spacing `dz = 2*l3/nz`, rectangle rule — exact for periodic
//! smooth integrands). Field storage is axial-major with the radial index
//! fastest: `values[j*nr + i]` holds the sample at `(r[i], z[j])`.

use crate::error::{CnsError, Result};
use crate::sum::Neumaier;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct CylGrid {
    /// Inner wall radius (> 0).
    pub r0: f64,
    /// Outer wall radius.
    pub r1: f64,
    /// Axial half-period: z covers [-l3, l3).
    pub l3: f64,
    /// Radial node count (walls included).
    pub nr: usize,
    /// Axial node count (even).
    pub nz: usize,
    /// Radial spacing.
    pub dr: f64,
    /// Axial spacing.
    pub dz: f64,
    /// Radial node coordinates, r[0] = r0, r[nr-1] = r1.
    pub r: Vec<f64>,
    /// Axial node coordinates, z[j] = -l3 + j*dz.
    pub z: Vec<f64>,
    /// Trapezoid weights in r (dr at interior nodes, dr/2 at walls).
    pub wr: Vec<f64>,
}

/// Build the discrete ring-cylinder domain, validating the geometry.
pub fn build_grid(r0: f64, r1: f64, l3: f64, nr: usize, nz: usize) -> Result<CylGrid> {
    if !(r0 > 0.0) {
        return Err(CnsError::InvalidDomain(format!(
            "inner radius must be positive, got {r0}"
        )));
    }
    if !(r1 > r0) {
        return Err(CnsError::InvalidDomain(format!(
            "outer radius must exceed inner radius, got [{r0}, {r1}]"
        )));
    }
    if !(l3 > 0.0) {
        return Err(CnsError::InvalidDomain(format!(
            "axial half-period must be positive, got {l3}"
        )));
    }
    if nr < 8 {
        return Err(CnsError::InvalidDomain(format!(
            "need at least 8 radial nodes, got {nr}"
        )));
    }
    if nz < 8 || nz % 2 != 0 {
        return Err(CnsError::InvalidDomain(format!(
            "need an even axial node count of at least 8, got {nz}"
        )));
    }
    let dr = (r1 - r0) / (nr - 1) as f64;
    let dz = 2.0 * l3 / nz as f64;
    let r: Vec<f64> = (0..nr).map(|i| r0 + i as f64 * dr).collect();
    let z: Vec<f64> = (0..nz).map(|j| -l3 + j as f64 * dz).collect();
    let mut wr = vec![dr; nr];
    wr[0] = 0.5 * dr;
    wr[nr - 1] = 0.5 * dr;
    Ok(CylGrid {
        r0,
        r1,
        l3,
        nr,
        nz,
        dr,
        dz,
        r,
        z,
        wr,
    })
}

impl CylGrid {
    /// Flat index of the node (i, j) = (radial, axial).
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nr + i
    }

    /// Total node count.
    #[inline]
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A scalar sample on every grid node, axial-major with r fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Arc<CylGrid>,
    pub values: Vec<f64>,
}

impl ScalarField {
    /// The zero field.
    pub fn zeros(grid: &Arc<CylGrid>) -> Self {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    /// Wrap an existing axial-major value vector.
    pub fn from_values(grid: &Arc<CylGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        ScalarField {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Sample a function of (r, z) at every node.
    pub fn from_fn(grid: &Arc<CylGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for j in 0..grid.nz {
            for i in 0..grid.nr {
                values[grid.idx(i, j)] = f(grid.r[i], grid.z[j]);
            }
        }
        ScalarField {
            grid: Arc::clone(grid),
            values,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }

    /// Sup norm.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// In-place a*x + y style update: self += s * other.
    pub fn axpy(&mut self, s: f64, other: &ScalarField) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += s * o;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }
}

/// Quadrature of `f(r, z) * r^p` over the ring-cylinder section
/// (trapezoid in r, rectangle in periodic z), `p` in {-1, 0, +1}.
///
/// The summation order is fixed (axial-major, compensated), so the result is
/// bit-identical across runs and thread counts.
pub fn weighted_integral(f: &ScalarField, p: i32) -> f64 {
    assert!((-1..=1).contains(&p), "radial weight exponent must be -1, 0, or +1");
    let g = &f.grid;
    assert!(
        f.values.iter().all(|v| v.is_finite()),
        "weighted_integral requires finite samples"
    );
    let mut acc = Neumaier::new();
    for j in 0..g.nz {
        for i in 0..g.nr {
            let rw = match p {
                1 => g.r[i],
                -1 => 1.0 / g.r[i],
                _ => 1.0,
            };
            acc.add(f.values[g.idx(i, j)] * g.wr[i] * rw * g.dz);
        }
    }
    acc.value()
}

/// Subtract the r-weighted mean constant from `f` in place and return it.
///
/// This is the projection onto the complement of the Neumann nullspace
/// (constants) in the r-weighted inner product; the Poisson solvability
/// condition is exactly that this constant vanish.
pub fn project_weighted_mean(f: &mut ScalarField) -> f64 {
    let total = weighted_integral(f, 1);
    let g = &f.grid;
    let mass: f64 = {
        let mut acc = Neumaier::new();
        for _ in 0..g.nz {
            for i in 0..g.nr {
                acc.add(g.wr[i] * g.r[i] * g.dz);
            }
        }
        acc.value()
    };
    let c = total / mass;
    for v in &mut f.values {
        *v -= c;
    }
    c
}
