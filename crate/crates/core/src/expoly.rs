//! Exponential polynomials `Σ c · k^p · q^(e k)` in the shell index `k`.
//!
//! Tails of radial functions and of operator outputs are closed under the
//! operations used here (scaling by `q^(s k)`, multiplication by `k`, shifts
//! and indefinite summation), which makes every infinite shell series exact.

use crate::grid::qpow;

/// Exponents closer than this are treated as equal; an exponent this close to
/// zero makes the geometric ratio exactly one.
pub const EXPONENT_EPS: f64 = 1e-12;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// One term `coeff · k^degree · q^(exponent · k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coeff: f64,
    pub degree: u32,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coeff: f64, degree: u32, exponent: f64) -> Self {
        Self {
            coeff,
            degree,
            exponent,
        }
    }

    pub fn eval(&self, q: u32, k: i64) -> f64 {
        let kf = k as f64;
        self.coeff * kf.powi(self.degree as i32) * qpow(q, self.exponent * kf)
    }
}

/// A finite sum of [`PowerTerm`]s. Terms are kept merged by `(degree, exponent)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPoly {
    terms: Vec<PowerTerm>,
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * f64::from(n - i) / f64::from(i + 1);
    }
    r
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([PowerTerm::new(c, 0, 0.0)])
    }

    pub fn power(c: f64, exponent: f64) -> Self {
        Self::from_terms([PowerTerm::new(c, 0, exponent)])
    }

    pub fn from_terms<I: IntoIterator<Item = PowerTerm>>(terms: I) -> Self {
        let mut groups: Vec<(PowerTerm, CompensatedSum)> = Vec::new();
        for t in terms {
            if t.coeff == 0.0 {
                continue;
            }
            match groups.iter_mut().find(|(s, _)| {
                s.degree == t.degree && (s.exponent - t.exponent).abs() <= EXPONENT_EPS
            }) {
                Some((_, sum)) => sum.add(t.coeff),
                None => {
                    let mut sum = CompensatedSum::new();
                    sum.add(t.coeff);
                    groups.push((t, sum));
                }
            }
        }
        let terms = groups
            .into_iter()
            .map(|(t, sum)| PowerTerm {
                coeff: sum.value(),
                ..t
            })
            .filter(|t| t.coeff != 0.0)
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }

    pub fn eval(&self, q: u32, k: i64) -> f64 {
        compensated_sum(self.terms.iter().map(|t| t.eval(q, k)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).copied())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| PowerTerm::new(t.coeff * c, t.degree, t.exponent)),
        )
    }

    /// Multiply by `q^(s k)`.
    pub fn shift_exponent(&self, s: f64) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| PowerTerm::new(t.coeff, t.degree, t.exponent + s)),
        )
    }

    /// Multiply by `k^p`.
    pub fn times_k_pow(&self, p: u32) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| PowerTerm::new(t.coeff, t.degree + p, t.exponent)),
        )
    }

    /// The function `k ↦ self(k + 1)`.
    pub fn shifted_by_one(&self, q: u32) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            let c = t.coeff * qpow(q, t.exponent);
            for i in 0..=t.degree {
                out.push(PowerTerm::new(c * binomial(t.degree, i), i, t.exponent));
            }
        }
        Self::from_terms(out)
    }

    /// An antidifference `A` with `A(k + 1) - A(k) = self(k)`.
    ///
    /// For `r = q^e ≠ 1` the term `k^p r^k` has antidifference `r^k Q(k)` with
    /// `deg Q = p`; for `r = 1` it is a polynomial of degree `p + 1` vanishing at 0.
    /// In the first case `A(k) → 0` as `k → -∞` when `r > 1` and as `k → +∞` when `r < 1`.
    pub fn antidifference(&self, q: u32) -> Self {
        let mut out = Vec::new();
        for t in &self.terms {
            let p = t.degree as usize;
            if t.exponent.abs() <= EXPONENT_EPS {
                // Σ_i c_i [(k+1)^i - k^i] = k^p, c_0 = 0
                let mut c = vec![0.0; p + 2];
                c[p + 1] = 1.0 / (p as f64 + 1.0);
                for k in (0..p).rev() {
                    let mut s = 0.0;
                    for (i, ci) in c.iter().enumerate().skip(k + 2) {
                        s += ci * binomial(i as u32, k as u32);
                    }
                    c[k + 1] = -s / (k as f64 + 1.0);
                }
                for (i, ci) in c.iter().enumerate() {
                    out.push(PowerTerm::new(t.coeff * ci, i as u32, 0.0));
                }
            } else {
                // (r - 1) c_k + r Σ_{i>k} C(i,k) c_i = δ_{kp}
                let r = qpow(q, t.exponent);
                let mut c = vec![0.0; p + 1];
                for k in (0..=p).rev() {
                    let mut s = 0.0;
                    for (i, ci) in c.iter().enumerate().skip(k + 1) {
                        s += ci * binomial(i as u32, k as u32);
                    }
                    let rhs = if k == p { 1.0 } else { 0.0 };
                    c[k] = (rhs - r * s) / (r - 1.0);
                }
                for (i, ci) in c.iter().enumerate() {
                    out.push(PowerTerm::new(t.coeff * ci, i as u32, t.exponent));
                }
            }
        }
        Self::from_terms(out)
    }

    /// Smallest exponent among nonzero terms (dominant as `k → -∞`).
    pub fn min_exponent(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .map(|t| t.exponent)
            .reduce(f64::min)
    }

    /// Largest exponent among nonzero terms (dominant as `k → +∞`).
    pub fn max_exponent(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter(|t| t.coeff != 0.0)
            .map(|t| t.exponent)
            .reduce(f64::max)
    }

    /// First nonzero term that would make `Σ_{k <= k0}` diverge.
    pub fn lower_divergence(&self) -> Option<&PowerTerm> {
        self.terms
            .iter()
            .find(|t| t.coeff != 0.0 && t.exponent <= EXPONENT_EPS)
    }

    /// First nonzero term that would make `Σ_{k >= k0}` diverge.
    pub fn upper_divergence(&self) -> Option<&PowerTerm> {
        self.terms
            .iter()
            .find(|t| t.coeff != 0.0 && t.exponent >= -EXPONENT_EPS)
    }

    /// `lim_{k → -∞}` if finite: all terms decay except plain constants.
    pub fn limit_at_neg_infinity(&self) -> Option<f64> {
        let mut limit = 0.0;
        for t in self.terms.iter().filter(|t| t.coeff != 0.0) {
            if t.exponent.abs() <= EXPONENT_EPS && t.degree == 0 {
                limit += t.coeff;
            } else if t.exponent <= EXPONENT_EPS {
                return None;
            }
        }
        Some(limit)
    }
}
