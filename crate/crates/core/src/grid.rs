//! The shell lattice `q^Z` and the elementary measures on it.

use crate::error::{Error, Result};

/// `q^x` for the residue-field cardinality `q`.
///
/// Every power of `q` in the crate goes through this routine, so equal
/// exponents always yield bit-identical values. Integral exponents use
/// repeated multiplication and are exact whenever the result is representable.
#[inline]
pub fn qpow(q: u32, x: f64) -> f64 {
    let base = f64::from(q);
    if x.fract() == 0.0 && x.abs() <= 1024.0 {
        base.powi(x as i32)
    } else {
        base.powf(x)
    }
}

/// A finite window `[k_min, k_max]` of shells `|t| = q^k` together with the base `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RadialGrid {
    q: u32,
    k_min: i64,
    k_max: i64,
}

impl RadialGrid {
    pub fn new(q: u32, k_min: i64, k_max: i64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidGrid(format!("q must be at least 2, got {q}")));
        }
        if k_min > k_max {
            return Err(Error::InvalidGrid(format!(
                "empty shell window [{k_min}, {k_max}]"
            )));
        }
        Ok(Self { q, k_min, k_max })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    #[inline]
    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    #[inline]
    pub fn k_max(&self) -> i64 {
        self.k_max
    }

    /// Number of shells in the window.
    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, k: i64) -> bool {
        self.k_min <= k && k <= self.k_max
    }

    /// Same base, different window.
    pub fn with_window(&self, k_min: i64, k_max: i64) -> Result<Self> {
        Self::new(self.q, k_min, k_max)
    }

    pub fn shells(&self) -> impl Iterator<Item = i64> {
        self.k_min..=self.k_max
    }

    #[inline]
    pub fn pow(&self, x: f64) -> f64 {
        qpow(self.q, x)
    }

    /// Radius `q^k` of shell `k`.
    #[inline]
    pub fn radius(&self, k: i64) -> f64 {
        qpow(self.q, k as f64)
    }

    pub fn ln_q(&self) -> f64 {
        f64::from(self.q).ln()
    }

    /// Haar measure of the sphere `|x| = q^n`: `(1 - 1/q) q^n`.
    pub fn shell_measure(&self, n: i64) -> f64 {
        shell_measure(self.q, n)
    }

    /// `∫_{|x| <= q^n} |x|^(a-1) dx = (1 - 1/q) / (1 - q^-a) * q^(a n)`.
    pub fn ball_power_integral(&self, n: i64, a: f64) -> Result<f64> {
        ball_power_integral(self.q, n, a)
    }
}

pub fn shell_measure(q: u32, n: i64) -> f64 {
    // q^n - q^(n-1): exact for integral results
    qpow(q, n as f64) - qpow(q, (n - 1) as f64)
}

pub fn ball_power_integral(q: u32, n: i64, a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ball power integral diverges for exponent a = {a}"
        )));
    }
    let qf = f64::from(q);
    Ok((1.0 - 1.0 / qf) / (1.0 - qpow(q, -a)) * qpow(q, a * n as f64))
}

/// Measure of `{ y : |y| = q^n, |x - y| = q^m }` for a fixed `x` with `|x| = q^n`.
///
/// By the ultrametric inequality `m <= n`; the strata `m < n` are translated
/// spheres of measure `(1 - 1/q) q^m`, and the remaining stratum `m = n` has
/// measure `(1 - 2/q) q^n`, which vanishes for `q = 2`.
pub fn sphere_stratum_measure(q: u32, n: i64, m: i64) -> f64 {
    use std::cmp::Ordering;
    match m.cmp(&n) {
        Ordering::Less => shell_measure(q, m),
        Ordering::Equal => (1.0 - 2.0 / f64::from(q)) * qpow(q, n as f64),
        Ordering::Greater => 0.0,
    }
}

/// Number of shells after which a geometric series with ratio `q^-s`
/// (`s > 0`) has remainder below `rel` times its first term.
pub(crate) fn truncation_depth(q: u32, s: f64, rel: f64) -> i64 {
    let ln_q = f64::from(q).ln();
    let denom = 1.0 - qpow(q, -s);
    ((1.0 / (rel * denom)).ln() / (s * ln_q)).ceil().max(1.0) as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_measure_values() {
        assert_eq!(shell_measure(2, 0), 0.5);
        assert!((shell_measure(3, 0) - 2.0 / 3.0).abs() <= f64::EPSILON);
        assert_eq!(shell_measure(3, 2), 6.0);
    }

    #[test]
    fn ball_power_values() {
        assert_eq!(ball_power_integral(2, 0, 1.0).unwrap(), 1.0);
        assert!((ball_power_integral(3, 0, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(ball_power_integral(2, 0, 0.0).is_err());
        assert!(ball_power_integral(2, 0, -1.0).is_err());
    }

    #[test]
    fn ball_power_half_matches_shell_sum() {
        // explicit shells j in [-200, 3] plus the geometric remainder below -200
        let (q, n, a) = (2u32, 3i64, 0.5);
        let mut s = 0.0;
        for j in -200..=n {
            s += shell_measure(q, j) * qpow(q, (a - 1.0) * j as f64);
        }
        let ratio = qpow(q, a);
        let first = shell_measure(q, -201) * qpow(q, (a - 1.0) * -201.0);
        s += first / (1.0 - 1.0 / ratio);
        let closed = ball_power_integral(q, n, a).unwrap();
        assert!((s - closed).abs() <= 1e-12 * closed, "{s} vs {closed}");
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(RadialGrid::new(1, 0, 1).is_err());
        assert!(RadialGrid::new(2, 3, 1).is_err());
        let g = RadialGrid::new(3, -2, 2).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.contains(-2) && !g.contains(3));
    }

    #[test]
    fn strata_partition_the_sphere() {
        for q in [2, 3, 5] {
            for n in [-3, 0, 4] {
                let total: f64 = (n - 80..=n).map(|m| sphere_stratum_measure(q, n, m)).sum();
                assert!((total - shell_measure(q, n)).abs() < 1e-13 * shell_measure(q, n));
            }
        }
        assert_eq!(sphere_stratum_measure(2, 3, 3), 0.0);
        assert_eq!(sphere_stratum_measure(3, 0, 1), 0.0);
    }

    #[test]
    fn qpow_is_exact_on_integers() {
        assert_eq!(qpow(3, 2.0), 9.0);
        assert_eq!(qpow(2, -3.0), 0.125);
        assert_eq!(qpow(5, 0.0), 1.0);
    }
}
