//! Truncated Taylor arithmetic (6 coefficients: value + 5 derivatives).
//!
//! A `Jet` carries the Taylor coefficients `c[k] = f^(k)(x) / k!` of a
//! function at a point. Arithmetic propagates them exactly (Cauchy products,
//! power-series reciprocals, the exp ODE recurrence), so radial profiles that
//! are built once as closures yield machine-exact derivatives up to order 5.
//! That is every derivative the energy functionals and the manufactured
//! forcing need, with no symbolic layer and no finite-difference noise.

pub const JET_LEN: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    /// Taylor coefficients c[k] = f^(k)/k! at the expansion point.
    pub c: [f64; JET_LEN],
}

impl Jet {
    /// The independent variable at position `x`.
    pub fn var(x: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = x;
        c[1] = 1.0;
        Jet { c }
    }

    /// A constant.
    pub fn con(v: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet { c }
    }

    /// Value of the function.
    pub fn val(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative (k! * c[k]).
    pub fn deriv(&self, k: usize) -> f64 {
        const FACT: [f64; JET_LEN] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0];
        self.c[k] * FACT[k]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        for v in &mut c {
            *v *= s;
        }
        Jet { c }
    }

    /// Power-series reciprocal; requires a nonzero value.
    pub fn recip(&self) -> Self {
        let a = &self.c;
        assert!(a[0] != 0.0, "reciprocal of a jet with zero value");
        let mut b = [0.0; JET_LEN];
        b[0] = 1.0 / a[0];
        for k in 1..JET_LEN {
            let mut s = 0.0;
            for j in 1..=k {
                s += a[j] * b[k - j];
            }
            b[k] = -s / a[0];
        }
        Jet { c: b }
    }

    /// exp of the jet via the ODE recurrence b' = a' b.
    pub fn exp(&self) -> Self {
        let a = &self.c;
        let mut b = [0.0; JET_LEN];
        b[0] = a[0].exp();
        for k in 1..JET_LEN {
            // k*b[k] = sum_{j=1..k} j*a[j]*b[k-j]
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * a[j] * b[k - j];
            }
            b[k] = s / k as f64;
        }
        Jet { c: b }
    }

    /// sin and cos of the jet via the coupled ODE recurrences.
    pub fn sin_cos(&self) -> (Self, Self) {
        let a = &self.c;
        let mut s = [0.0; JET_LEN];
        let mut c = [0.0; JET_LEN];
        s[0] = a[0].sin();
        c[0] = a[0].cos();
        for k in 1..JET_LEN {
            let (mut ds, mut dc) = (0.0, 0.0);
            for j in 1..=k {
                ds += j as f64 * a[j] * c[k - j];
                dc -= j as f64 * a[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            c[k] = dc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Jet::con(1.0);
        for _ in 0..n {
            out = out * *self;
        }
        out
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = self.c;
        for (v, r) in c.iter_mut().zip(rhs.c) {
            *v += r;
        }
        Jet { c }
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let mut c = self.c;
        for (v, r) in c.iter_mut().zip(rhs.c) {
            *v -= r;
        }
        Jet { c }
    }
}

impl std::ops::Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            c[k] = s;
        }
        Jet { c }
    }
}

impl std::ops::Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn polynomial_derivatives_exact() {
        // f = (x-1)^2 (2-x)^2 at x = 1.3
        let x = Jet::var(1.3);
        let f = (x - Jet::con(1.0)).powi(2) * (Jet::con(2.0) - x).powi(2);
        // closed forms
        let u = 0.3f64;
        let v = 0.7f64;
        assert!(close(f.val(), u * u * v * v, 1e-15));
        let d1 = 2.0 * u * v * v - 2.0 * u * u * v;
        assert!(close(f.deriv(1), d1, 1e-14));
        let d2 = 2.0 * v * v - 8.0 * u * v + 2.0 * u * u;
        assert!(close(f.deriv(2), d2, 1e-14));
        assert!(close(f.deriv(3), -12.0 * v + 12.0 * u, 1e-13));
        assert!(close(f.deriv(4), 24.0, 1e-13));
        assert!(close(f.deriv(5), 0.0, 1e-12));
    }

    #[test]
    fn exp_and_recip_match_closed_forms() {
        // f = exp(-2x)/x at x = 0.7: f^(k) via Leibniz on exp(-2x) * x^{-1}
        let x = Jet::var(0.7);
        let f = (x.scale(-2.0)).exp() / x;
        let x0 = 0.7f64;
        let e = (-2.0 * x0).exp();
        // derivatives of exp(-2x): (-2)^j e ; of 1/x: (-1)^i i! x^{-(i+1)}
        for k in 0..JET_LEN {
            let mut want = 0.0;
            for j in 0..=k {
                let binom = (1..=k).product::<usize>() as f64
                    / ((1..=j).product::<usize>() as f64 * (1..=(k - j)).product::<usize>() as f64);
                let dj_exp = (-2.0f64).powi(j as i32) * e;
                let i = k - j;
                let di_inv = (if i % 2 == 0 { 1.0 } else { -1.0 })
                    * (1..=i).product::<usize>() as f64
                    * x0.powi(-(i as i32) - 1);
                want += binom * dj_exp * di_inv;
            }
            assert!(
                close(f.deriv(k), want, 1e-12),
                "k={k}: got {} want {want}",
                f.deriv(k)
            );
        }
    }

    #[test]
    fn sin_cos_derivative_cycle() {
        let x = Jet::var(0.9);
        let (s, c) = x.sin_cos();
        let x0 = 0.9f64;
        let want_s = [x0.sin(), x0.cos(), -x0.sin(), -x0.cos(), x0.sin(), x0.cos()];
        for (k, w) in want_s.iter().enumerate() {
            assert!(close(s.deriv(k), *w, 1e-14), "sin deriv {k}");
            let wc = if k == 0 { x0.cos() } else { want_s[k - 1] * -1.0 };
            let _ = wc;
        }
        assert!(close(c.deriv(1), -x0.sin(), 1e-14));
        assert!(close(c.deriv(2), -x0.cos(), 1e-14));
    }

    #[test]
    fn chain_of_ops_matches_symbolic_spotcheck() {
        // g = x^2 * exp(x) - sin(x)/x at x = 1.1, d3 checked against the
        // hand-expanded closed form
        let xv = 1.1f64;
        let x = Jet::var(xv);
        let (s, _) = x.sin_cos();
        let g = x * x * x.exp() - s / x;
        // d3[x^2 e^x] = e^x (x^2 + 6x + 6)
        let t1 = xv.exp() * (xv * xv + 6.0 * xv + 6.0);
        // d3[sin x / x] via Leibniz
        let inv = [1.0 / xv, -1.0 / (xv * xv), 2.0 / xv.powi(3), -6.0 / xv.powi(4)];
        let sn = [xv.sin(), xv.cos(), -xv.sin(), -xv.cos()];
        let t2 = sn[3] * inv[0] + 3.0 * sn[2] * inv[1] + 3.0 * sn[1] * inv[2] + sn[0] * inv[3];
        assert!(close(g.deriv(3), t1 - t2, 1e-12));
    }
}
