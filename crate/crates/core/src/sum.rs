//! Deterministic compensated summation.
//!
//! All quadratures and norms in this crate reduce with Neumaier's variant of
//! Kahan summation, strictly left to right. The result is bit-reproducible
//! across runs and thread counts (parallel callers must reduce over fixed
//! shapes, never over work-stealing order).

/// Running Neumaier sum. `total + comp` is the corrected value.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    total: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.total + x;
        if self.total.abs() >= x.abs() {
            self.comp += (self.total - t) + x;
        } else {
            self.comp += (x - t) + self.total;
        }
        self.total = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.total + self.comp
    }
}

/// Left-to-right compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Left-to-right compensated dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Neumaier::new();
    for (&x, &y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation_naive_sum_loses() {
        // 1 + 1e100 - 1e100 + 1: naive = 1, compensated = 2.
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(&xs), 2.0);
    }

    #[test]
    fn matches_exact_on_harmonic_series() {
        let xs: Vec<f64> = (1..=100_000).map(|k| 1.0 / k as f64).collect();
        let compensated = sum(&xs);
        // reference: two-pass pairwise at f64 is good to ~1e-13 here
        let mut pair = xs.clone();
        while pair.len() > 1 {
            pair = pair
                .chunks(2)
                .map(|c| if c.len() == 2 { c[0] + c[1] } else { c[0] })
                .collect();
        }
        assert!((compensated - pair[0]).abs() < 1e-10);
    }

    #[test]
    fn dot_is_order_deterministic() {
        let a: Vec<f64> = (0..1000).map(|k| ((k * 37 % 101) as f64).sin()).collect();
        let b: Vec<f64> = (0..1000).map(|k| ((k * 53 % 97) as f64).cos()).collect();
        let d1 = dot(&a, &b);
        let d2 = dot(&a, &b);
        assert_eq!(d1.to_bits(), d2.to_bits());
    }
}
