//! The regularized fractional integral `I^α`, right inverse of `D^α` on radial
//! functions, and the kernel constants used to bound it.

use crate::conditions::{check_growth_conditions, ConditionKind};
use crate::error::{Error, Result};
use crate::expoly::{CompensatedSum, ExpPoly, PowerTerm};
use crate::grid::{qpow, shell_measure, sphere_stratum_measure, truncation_depth, RadialGrid};
use crate::radial::{RadialFunction, Side, TailSpec};

/// Exponents within this distance of 1 use the logarithmic kernel.
pub const LOG_BRANCH_TOL: f64 = 1e-12;

/// Largest `m` scanned when estimating the amplitude of the kernel constants.
pub const KERNEL_SCAN_MAX: u32 = 40;

pub fn is_log_branch(alpha: f64) -> bool {
    (alpha - 1.0).abs() <= LOG_BRANCH_TOL
}

/// `(1 - q^-α) / (1 - q^(α-1))`, or `(1 - q) / (q ln q)` on the log branch.
pub fn front_coeff(alpha: f64, q: u32) -> f64 {
    let qf = f64::from(q);
    if is_log_branch(alpha) {
        (1.0 - qf) / (qf * qf.ln())
    } else {
        (1.0 - qpow(q, -alpha)) / (1.0 - qpow(q, alpha - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IalphaParams {
    pub alpha: f64,
    pub q: u32,
    pub front_coeff: f64,
    pub is_log_branch: bool,
}

impl IalphaParams {
    pub fn new(alpha: f64, q: u32) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if q < 2 {
            return Err(Error::InvalidGrid(format!("q must be at least 2, got {q}")));
        }
        Ok(Self {
            alpha,
            q,
            front_coeff: front_coeff(alpha, q),
            is_log_branch: is_log_branch(alpha),
        })
    }

    /// Factor in front of the inner-ball sums: `front (1 - 1/q)`, times `ln q`
    /// on the log branch where the kernel is `(n - j) ln q`.
    fn kappa(&self) -> f64 {
        let qf = f64::from(self.q);
        let k = self.front_coeff * (1.0 - 1.0 / qf);
        if self.is_log_branch {
            k * qf.ln()
        } else {
            k
        }
    }

    /// Kernel `K(n, j)` for `j < n`.
    pub fn kernel(&self, n: i64, j: i64) -> f64 {
        if self.is_log_branch {
            (n - j) as f64 * f64::from(self.q).ln()
        } else {
            qpow(self.q, (self.alpha - 1.0) * n as f64)
                - qpow(self.q, (self.alpha - 1.0) * j as f64)
        }
    }
}

fn ensure_domain(u: &RadialFunction, alpha: f64) -> Result<()> {
    let report = check_growth_conditions(u, alpha, ConditionKind::IalphaDomain);
    if report.all_hold() {
        Ok(())
    } else {
        Err(Error::DomainViolation(report.to_string()))
    }
}

// I^α annihilates constants, so the sums are taken for u - u(q^n); the
// diagonal term then drops out.
fn at_shell(u: &RadialFunction, p: &IalphaParams, n: i64) -> Result<f64> {
    let g = u.grid();
    let nf = n as f64;
    let un = u.eval(n);
    let s0 = u.weighted_sum_centered(1.0, 0, Side::Lower, n - 1, un)?;
    let mut acc = CompensatedSum::new();
    if p.is_log_branch {
        acc.add(nf * s0);
        acc.add(-u.weighted_sum_centered(1.0, 1, Side::Lower, n - 1, un)?);
    } else {
        acc.add(g.pow((p.alpha - 1.0) * nf) * s0);
        acc.add(-u.weighted_sum_centered(p.alpha, 0, Side::Lower, n - 1, un)?);
    }
    Ok(p.kappa() * acc.value())
}

/// `(I^α u)(q^n)` at a single shell.
pub fn ialpha_at(u: &RadialFunction, alpha: f64, n: i64) -> Result<f64> {
    let p = IalphaParams::new(alpha, u.q())?;
    ensure_domain(u, alpha)?;
    at_shell(u, &p, n)
}

fn converging(poly: ExpPoly, side: Side, weight: f64) -> Result<ExpPoly> {
    let bad = match side {
        Side::Lower => poly.lower_divergence(),
        Side::Upper => poly.upper_divergence(),
    };
    match bad {
        Some(t) => Err(Error::DivergentTail {
            side,
            exponent: t.exponent - weight,
            weight,
        }),
        None => Ok(poly),
    }
}

fn upper_output_tail(u: &RadialFunction, p: &IalphaParams) -> Result<ExpPoly> {
    let q = p.q;
    let alpha = p.alpha;
    let b = u.grid().k_max();
    let t = u
        .upper_tail()
        .to_expoly()
        .ok_or(Error::UnmodeledTail { side: Side::Upper })?;
    let diag = t.shift_exponent(alpha).scale(qpow(q, -alpha));

    let p1 = u.weighted_sum(1.0, 0, Side::Lower, b)?;
    let a1 = t.shift_exponent(1.0).antidifference(q);
    let c1 = p1 - a1.eval(q, b + 1);
    let inner = if p.is_log_branch {
        let pk = u.weighted_sum(1.0, 1, Side::Lower, b)?;
        let ak = t.shift_exponent(1.0).times_k_pow(1).antidifference(q);
        ExpPoly::from_terms([PowerTerm::new(c1, 1, 0.0)])
            .add(&a1.times_k_pow(1))
            .add(&ExpPoly::constant(-(pk - ak.eval(q, b + 1))))
            .add(&ak.scale(-1.0))
    } else {
        let pa = u.weighted_sum(alpha, 0, Side::Lower, b)?;
        let aa = t.shift_exponent(alpha).antidifference(q);
        ExpPoly::power(c1, alpha - 1.0)
            .add(&a1.shift_exponent(alpha - 1.0))
            .add(&ExpPoly::constant(-(pa - aa.eval(q, b + 1))))
            .add(&aa.scale(-1.0))
    };
    Ok(diag.add(&inner.scale(p.kappa())))
}

fn lower_output_tail(u: &RadialFunction, p: &IalphaParams) -> Result<ExpPoly> {
    let q = p.q;
    let alpha = p.alpha;
    let l = u
        .lower_tail()
        .to_expoly()
        .ok_or(Error::UnmodeledTail { side: Side::Lower })?;
    let diag = l.shift_exponent(alpha).scale(qpow(q, -alpha));
    let a1 = converging(l.shift_exponent(1.0), Side::Lower, 1.0)?.antidifference(q);
    let inner = if p.is_log_branch {
        let ak =
            converging(l.shift_exponent(1.0).times_k_pow(1), Side::Lower, 1.0)?.antidifference(q);
        a1.times_k_pow(1).add(&ak.scale(-1.0))
    } else {
        let aa = converging(l.shift_exponent(alpha), Side::Lower, alpha)?.antidifference(q);
        a1.shift_exponent(alpha - 1.0).add(&aa.scale(-1.0))
    };
    Ok(diag.add(&inner.scale(p.kappa())))
}

/// `I^α u` on the shells `[n_lo, n_hi]`, with value 0 at the origin.
///
/// Only shells below each output shell contribute besides the diagonal, so the
/// input's upper tail is used only for output shells above the input window.
/// Exact closed-form output tails are attached when the output window covers
/// the input window; otherwise the tails are [`TailSpec::Unmodeled`].
pub fn apply_ialpha(
    u: &RadialFunction,
    alpha: f64,
    out_window: (i64, i64),
) -> Result<RadialFunction> {
    let p = IalphaParams::new(alpha, u.q())?;
    ensure_domain(u, alpha)?;
    let grid = u.grid().with_window(out_window.0, out_window.1)?;
    let values = grid
        .shells()
        .map(|n| at_shell(u, &p, n))
        .collect::<Result<Vec<_>>>()?;
    let covers = out_window.0 <= u.grid().k_min() && out_window.1 >= u.grid().k_max();
    let (lower, upper) = if covers {
        let centered = u.offset(-u.value_at_zero())?;
        let upper = if u.upper_tail().is_modeled() {
            TailSpec::Sum(upper_output_tail(&centered, &p)?)
        } else {
            TailSpec::Unmodeled
        };
        (TailSpec::Sum(lower_output_tail(&centered, &p)?), upper)
    } else {
        (TailSpec::Unmodeled, TailSpec::Unmodeled)
    };
    let out = RadialFunction::new(grid, values, lower, upper)?;
    out.with_value_at_zero(0.0)
}

pub fn apply_ialpha_same_window(u: &RadialFunction, alpha: f64) -> Result<RadialFunction> {
    let g = u.grid();
    apply_ialpha(u, alpha, (g.k_min(), g.k_max()))
}

/// Direct evaluation of `front ∫_{|y| <= |x|} (|x - y|^(α-1) - |y|^(α-1)) u(|y|) dy`
/// (log kernel for α = 1) at `|x| = q^n`, for compactly supported `u`.
///
/// Inner spheres `|y| = q^j < q^n` have `|x - y| = q^n`; the sphere `|y| = q^n`
/// is split into strata of constant `|x - y| = q^m`.
pub fn ialpha_oracle(u: &RadialFunction, alpha: f64, n: i64) -> Result<f64> {
    if !u.lower_tail().is_zero() || !u.upper_tail().is_zero() {
        return Err(Error::NonZeroTails);
    }
    let p = IalphaParams::new(alpha, u.q())?;
    let q = p.q;
    let ln_q = f64::from(q).ln();
    let kernel = |outer: i64, inner: i64| -> f64 {
        // |x - y| = q^outer, |y| = q^inner
        if p.is_log_branch {
            (outer - inner) as f64 * ln_q
        } else {
            qpow(q, (alpha - 1.0) * outer as f64) - qpow(q, (alpha - 1.0) * inner as f64)
        }
    };

    let mut acc = CompensatedSum::new();
    for j in u.grid().k_min()..n.min(u.grid().k_max() + 1) {
        let uj = u.eval(j);
        if uj != 0.0 {
            acc.add(shell_measure(q, j) * kernel(n, j) * uj);
        }
    }
    let un = u.eval(n);
    if un != 0.0 {
        let depth = truncation_depth(q, alpha.min(1.0), 1e-17) + 8;
        for m in (n - depth)..=n {
            let measure = sphere_stratum_measure(q, n, m);
            if measure != 0.0 {
                acc.add(measure * kernel(m, n) * un);
            }
        }
    }
    Ok(p.front_coeff * acc.value())
}

/// `d_{α,m}` with `I_{α,m}(q^n) = d_{α,m} q^(α(m+1) n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstant {
    pub alpha: f64,
    pub m: u32,
    pub d_value: f64,
}

/// `I_{α,m}(q^n) = Σ_{j<n} (1 - 1/q) q^j |K(n,j)| q^(α m j)` in closed form.
pub fn kernel_integral(alpha: f64, m: u32, q: u32, n: i64) -> Result<f64> {
    let p = IalphaParams::new(alpha, q)?;
    let am = alpha * f64::from(m);
    let lower = |poly: ExpPoly| poly.antidifference(q).eval(q, n);
    let measure = 1.0 - 1.0 / f64::from(q);
    let value = if p.is_log_branch {
        let s0 = lower(ExpPoly::power(1.0, 1.0 + am));
        let s1 = lower(ExpPoly::from_terms([PowerTerm::new(1.0, 1, 1.0 + am)]));
        measure * f64::from(q).ln() * (n as f64 * s0 - s1)
    } else {
        let s0 = lower(ExpPoly::power(1.0, 1.0 + am));
        let sa = lower(ExpPoly::power(1.0, alpha + am));
        measure * (qpow(q, (alpha - 1.0) * n as f64) * s0 - sa).abs()
    };
    Ok(value)
}

/// Kernel constant `d_{α,m}`, checked for the `q^(α(m+1))` scaling between the
/// two ends of the grid window (or shells `k` and `k+1` for a one-shell grid).
pub fn kernel_constant(alpha: f64, m: u32, grid: &RadialGrid) -> Result<KernelConstant> {
    let q = grid.q();
    let n1 = grid.k_min();
    let n2 = if grid.k_max() > n1 {
        grid.k_max()
    } else {
        n1 + 1
    };
    let i1 = kernel_integral(alpha, m, q, n1)?;
    let i2 = kernel_integral(alpha, m, q, n2)?;
    let expected = qpow(q, alpha * f64::from(m + 1) * (n2 - n1) as f64);
    let ratio = i2 / i1;
    if !((ratio - expected).abs() <= 1e-10 * expected) {
        return Err(Error::ScalingViolation { ratio, expected });
    }
    let d_value = i1 / qpow(q, alpha * f64::from(m + 1) * n1 as f64);
    Ok(KernelConstant { alpha, m, d_value })
}

/// `max_{m <= 40} d_{α,m} q^(α m)`.
fn max_scaled_kernel(alpha: f64, q: u32) -> Result<f64> {
    let grid = RadialGrid::new(q, 0, 1)?;
    let mut best: f64 = 0.0;
    for m in 0..=KERNEL_SCAN_MAX {
        let d = kernel_constant(alpha, m, &grid)?;
        best = best.max(d.d_value * qpow(q, alpha * f64::from(m)));
    }
    Ok(best)
}

/// Amplitude `A` with `d_{α,m} <= A q^(-α m)`: the scanned maximum plus 10%.
pub fn kernel_amplitude(alpha: f64, q: u32) -> Result<f64> {
    Ok(1.1 * max_scaled_kernel(alpha, q)?)
}

/// Constant `C` with `|(I^α φ)(q^n)| <= C μ q^(α(m+1) n)` whenever
/// `|φ(q^j)| <= μ q^(α m j)`, `m >= 0`: the diagonal weight plus
/// `|front| max_m d_{α,m} q^(α m)`.
pub fn bound_constant(alpha: f64, q: u32) -> Result<f64> {
    let p = IalphaParams::new(alpha, q)?;
    Ok(qpow(q, -alpha) + p.front_coeff.abs() * max_scaled_kernel(alpha, q)?)
}
