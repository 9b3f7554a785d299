//! Finite-difference weights on arbitrary node sets (Fornberg's recurrence).
//!
//! Given nodes `x[0..n]` and an evaluation point `x0`, `weights` returns the
//! coefficients of the interpolating-polynomial derivative of every order up
//! to `m` at `x0`. The recurrence is exact in exact arithmetic, so the usual
//! stencils fall out as special cases ([-1/2, 0, 1/2] for d1 on three equal
//! nodes, [1, -2, 1]/h^2 for d2, ...). The high-order single-application
//! radial stencils used by the spectral energy functionals are built here.

/// Weights for derivatives 0..=m at `x0` from samples at `x`.
///
/// Returns `w` with `w[k][i]` the coefficient of `f(x[i])` in the order-k
/// derivative. Requires `x.len() > m`.
pub fn weights(x0: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[i][k], Fornberg 1988
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    // transpose to w[k][i]
    let mut w = vec![vec![0.0; n]; m + 1];
    for (i, row) in c.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            w[k][i] = *v;
        }
    }
    w
}

/// Stencil (node window + weights) for the order-`k` derivative at grid
/// index `i` of an `n`-point uniform grid with spacing `dr`.
///
/// The window holds `min(k + 4, n)` nodes centered on `i` where possible and
/// clamped at the boundaries, which keeps the single-application truncation
/// error at roughly fourth order everywhere for k up to 5.
pub fn deriv_stencil(i: usize, n: usize, dr: f64, k: usize) -> (usize, Vec<f64>) {
    let width = (k + 4).min(n);
    let lo = (i.saturating_sub(width / 2)).min(n - width);
    let offsets: Vec<f64> = (lo..lo + width).map(|j| (j as f64 - i as f64) * dr).collect();
    let w = weights(0.0, &offsets, k);
    (lo, w[k].clone())
}

/// Apply the order-`k` single-application derivative to a radial profile.
pub fn deriv_profile(f: &[f64], dr: f64, k: usize) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (lo, w) = deriv_stencil(i, n, dr, k);
        let mut s = 0.0;
        for (j, wv) in w.iter().enumerate() {
            s += wv * f[lo + j];
        }
        out[i] = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_stencils_recovered() {
        // centered first derivative on 3 nodes
        let w = weights(0.0, &[-1.0, 0.0, 1.0], 1);
        for (got, want) in w[1].iter().zip([-0.5, 0.0, 0.5]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        // centered second derivative on 3 nodes
        let w = weights(0.0, &[-1.0, 0.0, 1.0], 2);
        for (got, want) in w[2].iter().zip([1.0, -2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        // centered third derivative on 5 nodes
        let w = weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 3);
        for (got, want) in w[3].iter().zip([-0.5, 1.0, 0.0, -1.0, 0.5]) {
            assert!((got - want).abs() < 1e-13);
        }
        // one-sided first derivative on 3 nodes
        let w = weights(0.0, &[0.0, 1.0, 2.0], 1);
        for (got, want) in w[1].iter().zip([-1.5, 2.0, -0.5]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn interpolation_row_reproduces_polynomials() {
        // order-0 weights at an off-node point interpolate exactly
        let nodes = [0.0, 0.3, 0.9, 1.4, 2.0];
        let w = weights(0.77, &nodes, 0);
        for p in 0..nodes.len() {
            let exact = 0.77f64.powi(p as i32);
            let got: f64 = nodes.iter().zip(&w[0]).map(|(x, wv)| x.powi(p as i32) * wv).sum();
            assert!((got - exact).abs() < 1e-12, "degree {p}");
        }
    }

    fn sin_deriv_err(n: usize, k: usize) -> f64 {
        let dr = 1.0 / (n as f64 - 1.0);
        let r: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * dr).collect();
        let f: Vec<f64> = r.iter().map(|x| x.sin()).collect();
        let d = deriv_profile(&f, dr, k);
        let exact = |x: f64| match k {
            1 => x.cos(),
            2 => -x.sin(),
            3 => -x.cos(),
            4 => x.sin(),
            _ => x.cos(),
        };
        d.iter()
            .zip(&r)
            .map(|(a, x)| (a - exact(*x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn profile_derivatives_converge_on_sin() {
        // orders measured for d1..d5 of sin on [1,2]; the k+4 window keeps
        // everything at ~4th order (d5 window is 9 wide -> ~4th as well).
        // The k-th derivative divides by dr^k, so its roundoff floor rises
        // as dr^-k; high derivatives must be measured on grids coarse
        // enough that truncation still dominates.
        for (k, ns) in [
            (1usize, vec![64usize, 128, 256]),
            (2, vec![32, 64, 128]),
            (3, vec![32, 64, 128]),
            (4, vec![10, 20, 40]),
            (5, vec![10, 20]),
        ] {
            let errs: Vec<f64> = ns.iter().map(|&n| sin_deriv_err(n, k)).collect();
            for (pair, n) in errs.windows(2).zip(&ns[1..]) {
                let order = (pair[0] / pair[1]).log2();
                println!("n={n} d{k} err={:.3e} order={order:.2}", pair[1]);
                assert!(order > 2.5, "d{k} refines at order {order:.2}");
            }
        }
        // finer-grid evaluation of the high derivatives sits on the
        // amplified-roundoff floor, still far below the profile scale
        for k in [4usize, 5] {
            let floor = sin_deriv_err(64, k);
            println!("d{k} floor at n=64: {floor:.3e}");
            assert!(floor < 1e-2, "d{k} fine-grid floor {floor:.3e}");
        }
    }
}
