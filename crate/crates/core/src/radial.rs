//! Radial functions on the shell lattice with closed-form tail models.

use std::fmt;

use crate::error::{Error, Result};
use crate::expoly::{CompensatedSum, ExpPoly, PowerTerm};
use crate::grid::RadialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Lower => f.write_str("lower"),
            Side::Upper => f.write_str("upper"),
        }
    }
}

/// Model of a radial function outside its explicit shell window.
#[derive(Debug, Clone, PartialEq)]
pub enum TailSpec {
    Zero,
    Constant(f64),
    /// `c · q^(e k)`.
    PowerLaw {
        c: f64,
        e: f64,
    },
    /// General exponential polynomial; produced by the operators, whose
    /// outputs are sums of several power laws (with `k`-polynomial factors on
    /// resonant or logarithmic branches).
    Sum(ExpPoly),
    /// Values outside the window are unknown. Evaluation yields NaN and any
    /// series reaching into this tail fails with [`Error::UnmodeledTail`].
    Unmodeled,
}

impl TailSpec {
    pub fn to_expoly(&self) -> Option<ExpPoly> {
        match self {
            TailSpec::Zero => Some(ExpPoly::zero()),
            TailSpec::Constant(c) => Some(ExpPoly::constant(*c)),
            TailSpec::PowerLaw { c, e } => Some(ExpPoly::power(*c, *e)),
            TailSpec::Sum(p) => Some(p.clone()),
            TailSpec::Unmodeled => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            TailSpec::Zero => true,
            TailSpec::Unmodeled => false,
            other => other.to_expoly().is_some_and(|p| p.is_zero()),
        }
    }

    pub fn is_modeled(&self) -> bool {
        !matches!(self, TailSpec::Unmodeled)
    }
}

/// Values `u(q^k)` on a window of shells plus tail models below and above it.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: RadialGrid,
    values: Vec<f64>,
    value_at_zero: f64,
    lower_tail: TailSpec,
    upper_tail: TailSpec,
}

impl RadialFunction {
    /// The value at the origin is taken as the limit of the lower tail when it
    /// exists, and 0 otherwise.
    pub fn new(
        grid: RadialGrid,
        values: Vec<f64>,
        lower_tail: TailSpec,
        upper_tail: TailSpec,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidFunction(format!(
                "{} values for a window of {} shells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "non-finite value at shell {}",
                grid.k_min() + k as i64
            )));
        }
        for tail in [&lower_tail, &upper_tail] {
            if let Some(p) = tail.to_expoly() {
                if p.terms()
                    .iter()
                    .any(|t| !t.coeff.is_finite() || !t.exponent.is_finite())
                {
                    return Err(Error::InvalidFunction("non-finite tail parameter".into()));
                }
            }
        }
        let value_at_zero = lower_tail
            .to_expoly()
            .and_then(|p| p.limit_at_neg_infinity())
            .unwrap_or(0.0);
        Ok(Self {
            grid,
            values,
            value_at_zero,
            lower_tail,
            upper_tail,
        })
    }

    pub fn from_fn<F: FnMut(i64) -> f64>(
        grid: RadialGrid,
        mut f: F,
        lower_tail: TailSpec,
        upper_tail: TailSpec,
    ) -> Result<Self> {
        let values = grid.shells().map(&mut f).collect();
        Self::new(grid, values, lower_tail, upper_tail)
    }

    /// `u ≡ c` on all of the field.
    pub fn constant(grid: RadialGrid, c: f64) -> Self {
        Self::new(
            grid,
            vec![c; grid.len()],
            TailSpec::Constant(c),
            TailSpec::Constant(c),
        )
        .expect("constant function is well formed")
    }

    /// Indicator of the unit ball `|x| <= 1`; the window must contain shell 0.
    pub fn unit_ball_indicator(grid: RadialGrid) -> Result<Self> {
        if !grid.contains(0) {
            return Err(Error::InvalidFunction(
                "unit ball indicator needs shell 0 inside the window".into(),
            ));
        }
        Self::from_fn(
            grid,
            |k| if k <= 0 { 1.0 } else { 0.0 },
            TailSpec::Constant(1.0),
            TailSpec::Zero,
        )
    }

    /// Compactly supported function given by its window values.
    pub fn compact(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, values, TailSpec::Zero, TailSpec::Zero)
    }

    /// Override the value at the origin. When the lower tail has a limit, the
    /// value must agree with it.
    pub fn with_value_at_zero(mut self, value: f64) -> Result<Self> {
        if let Some(limit) = self
            .lower_tail
            .to_expoly()
            .and_then(|p| p.limit_at_neg_infinity())
        {
            if (limit - value).abs() > 1e-12 * (1.0 + limit.abs()) {
                return Err(Error::InvalidFunction(format!(
                    "value at zero {value} contradicts the lower-tail limit {limit}"
                )));
            }
        }
        self.value_at_zero = value;
        Ok(self)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn q(&self) -> u32 {
        self.grid.q()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_zero(&self) -> f64 {
        self.value_at_zero
    }

    pub fn lower_tail(&self) -> &TailSpec {
        &self.lower_tail
    }

    pub fn upper_tail(&self) -> &TailSpec {
        &self.upper_tail
    }

    pub fn tail(&self, side: Side) -> &TailSpec {
        match side {
            Side::Lower => &self.lower_tail,
            Side::Upper => &self.upper_tail,
        }
    }

    /// `u(q^k)` for any shell `k`.
    pub fn eval(&self, k: i64) -> f64 {
        if self.grid.contains(k) {
            return self.values[(k - self.grid.k_min()) as usize];
        }
        let tail = if k < self.grid.k_min() {
            &self.lower_tail
        } else {
            &self.upper_tail
        };
        tail.to_expoly().map_or(f64::NAN, |p| p.eval(self.q(), k))
    }

    fn tail_poly(&self, side: Side) -> Result<ExpPoly> {
        self.tail(side)
            .to_expoly()
            .ok_or(Error::UnmodeledTail { side })
    }

    /// Σ `k^degree · q^(w k) · u(q^k)` over the tail segment `[from, to]`
    /// lying wholly outside the window.
    fn finite_tail_sum(
        &self,
        side: Side,
        w: f64,
        degree: u32,
        from: i64,
        to: i64,
        center: f64,
    ) -> Result<f64> {
        if from > to {
            return Ok(0.0);
        }
        let p = self.centered_tail(side, center)?;
        if p.is_zero() {
            return Ok(0.0);
        }
        let q = self.q();
        let mut acc = CompensatedSum::new();
        let kp = p.shift_exponent(w).times_k_pow(degree);
        for k in from..=to {
            acc.add(kp.eval(q, k));
        }
        Ok(acc.value())
    }

    fn centered_tail(&self, side: Side, center: f64) -> Result<ExpPoly> {
        let p = self.tail_poly(side)?;
        Ok(if center == 0.0 {
            p
        } else {
            p.add(&ExpPoly::constant(-center))
        })
    }

    fn window_sum(&self, w: f64, degree: u32, from: i64, to: i64, center: f64) -> f64 {
        let from = from.max(self.grid.k_min());
        let to = to.min(self.grid.k_max());
        let mut acc = CompensatedSum::new();
        for k in from..=to {
            let v = self.values[(k - self.grid.k_min()) as usize] - center;
            if v != 0.0 {
                let kf = k as f64;
                acc.add(kf.powi(degree as i32) * self.grid.pow(w * kf) * v);
            }
        }
        acc.value()
    }

    /// `Σ_{k <= k0} q^(w k) u(q^k)` (lower) or `Σ_{k >= k0} q^(w k) u(q^k)` (upper).
    pub fn weighted_tail_sum(&self, w: f64, side: Side, k0: i64) -> Result<f64> {
        self.weighted_sum(w, 0, side, k0)
    }

    /// As [`weighted_tail_sum`](Self::weighted_tail_sum) with an extra `k^degree` weight.
    ///
    /// Window shells are summed explicitly in ascending order; the infinite tail
    /// part is an exact closed-form geometric series.
    pub fn weighted_sum(&self, w: f64, degree: u32, side: Side, k0: i64) -> Result<f64> {
        self.weighted_sum_centered(w, degree, side, k0, 0.0)
    }

    /// As [`weighted_sum`](Self::weighted_sum) for the function `u - center`.
    pub fn weighted_sum_centered(
        &self,
        w: f64,
        degree: u32,
        side: Side,
        k0: i64,
        center: f64,
    ) -> Result<f64> {
        let (a, b) = (self.grid.k_min(), self.grid.k_max());
        let q = self.q();
        match side {
            Side::Lower => {
                // infinite lower-tail part: k <= min(k0, a - 1)
                let cut = k0.min(a - 1);
                let lower = self.centered_tail(Side::Lower, center)?;
                let weighted = lower.shift_exponent(w).times_k_pow(degree);
                let mut acc = CompensatedSum::new();
                if !weighted.is_zero() {
                    if let Some(t) = weighted.lower_divergence() {
                        return Err(Error::DivergentTail {
                            side: Side::Lower,
                            exponent: t.exponent - w,
                            weight: w,
                        });
                    }
                    acc.add(weighted.antidifference(q).eval(q, cut + 1));
                }
                acc.add(self.window_sum(w, degree, a, k0, center));
                if k0 > b {
                    acc.add(self.finite_tail_sum(Side::Upper, w, degree, b + 1, k0, center)?);
                }
                Ok(acc.value())
            }
            Side::Upper => {
                let cut = k0.max(b + 1);
                let upper = self.centered_tail(Side::Upper, center)?;
                let weighted = upper.shift_exponent(w).times_k_pow(degree);
                let mut acc = CompensatedSum::new();
                if k0 < a {
                    acc.add(self.finite_tail_sum(Side::Lower, w, degree, k0, a - 1, center)?);
                }
                acc.add(self.window_sum(w, degree, k0, b, center));
                if !weighted.is_zero() {
                    if let Some(t) = weighted.upper_divergence() {
                        return Err(Error::DivergentTail {
                            side: Side::Upper,
                            exponent: t.exponent - w,
                            weight: w,
                        });
                    }
                    acc.add(-weighted.antidifference(q).eval(q, cut));
                }
                Ok(acc.value())
            }
        }
    }

    /// `u + c` everywhere, including the tails and the origin.
    pub fn offset(&self, c: f64) -> Result<Self> {
        let shift = |t: &TailSpec| match t.to_expoly() {
            Some(p) => TailSpec::Sum(p.add(&ExpPoly::constant(c))),
            None => TailSpec::Unmodeled,
        };
        let values = self.values.iter().map(|v| v + c).collect();
        Self::new(
            self.grid,
            values,
            shift(&self.lower_tail),
            shift(&self.upper_tail),
        )?
        .with_value_at_zero(self.value_at_zero + c)
    }

    /// `a·self + b·other` on a common grid.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidFunction("grids differ".into()));
        }
        let tail = |s: &TailSpec, o: &TailSpec| match (s.to_expoly(), o.to_expoly()) {
            (Some(x), Some(y)) => TailSpec::Sum(x.scale(a).add(&y.scale(b))),
            _ => TailSpec::Unmodeled,
        };
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(
            self.grid,
            values,
            tail(&self.lower_tail, &other.lower_tail),
            tail(&self.upper_tail, &other.upper_tail),
        )
    }

    /// Same function with `extra` tail shells on each side written out explicitly.
    pub fn widened(&self, extra: i64) -> Result<Self> {
        let grid = self
            .grid
            .with_window(self.grid.k_min() - extra, self.grid.k_max() + extra)?;
        let values = grid.shells().map(|k| self.eval(k)).collect();
        let mut f = Self::new(
            grid,
            values,
            self.lower_tail.clone(),
            self.upper_tail.clone(),
        )?;
        f.value_at_zero = self.value_at_zero;
        Ok(f)
    }

    /// Replace the tails with power laws fitted by the log-ratio of the two
    /// outermost window shells on each side. Approximate by nature; a side whose
    /// two shells are not of one strict sign gets a zero tail.
    pub fn with_fitted_power_tails(&self) -> Result<Self> {
        let fit = |k1: i64, k2: i64| -> TailSpec {
            let (v1, v2) = (self.eval(k1), self.eval(k2));
            if v1 == 0.0 || v2 == 0.0 || v1.signum() != v2.signum() || k1 == k2 {
                return TailSpec::Zero;
            }
            let e = (v2 / v1).ln() / ((k2 - k1) as f64 * self.grid.ln_q());
            TailSpec::PowerLaw {
                c: v2 / self.grid.pow(e * k2 as f64),
                e,
            }
        };
        let (a, b) = (self.grid.k_min(), self.grid.k_max());
        Self::new(self.grid, self.values.clone(), fit(a + 1, a), fit(b - 1, b))
    }
}

/// Terms of a tail as exponent/degree pairs, used by condition checks.
pub(crate) fn tail_terms(tail: &TailSpec) -> Option<Vec<PowerTerm>> {
    tail.to_expoly().map(|p| p.terms().to_vec())
}
