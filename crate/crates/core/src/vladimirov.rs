//! The Vladimirov fractional derivative `D^α` on radial functions.
//!
//! Evaluated through the three-term shell series: a lower sum over the inner
//! ball, a diagonal term, and an upper sum over the outer shells. The
//! hypersingular-integral oracle evaluates the defining integral by an
//! independent ultrametric decomposition of the domain.

use crate::conditions::{check_growth_conditions, ConditionKind};
use crate::error::{Error, Result};
use crate::expoly::{CompensatedSum, ExpPoly};
use crate::grid::{qpow, shell_measure, sphere_stratum_measure, truncation_depth, RadialGrid};
use crate::radial::{RadialFunction, Side, TailSpec};

/// `θ_α = (1 - q^α) / (1 - q^(-α-1))`.
pub fn theta(alpha: f64, q: u32) -> f64 {
    (1.0 - qpow(q, alpha)) / (1.0 - qpow(q, -alpha - 1.0))
}

/// Coefficient `(q^α + q - 2) / (1 - q^(-α-1))` of the diagonal term.
pub fn diag_coeff(alpha: f64, q: u32) -> f64 {
    (qpow(q, alpha) + f64::from(q) - 2.0) / (1.0 - qpow(q, -alpha - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DalphaParams {
    pub alpha: f64,
    pub q: u32,
    pub theta_alpha: f64,
    pub diag_coeff: f64,
}

impl DalphaParams {
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
            theta_alpha: theta(alpha, q),
            diag_coeff: diag_coeff(alpha, q),
        })
    }

    /// `θ_α (1 - 1/q)`, the factor in front of both infinite sums.
    fn kappa(&self) -> f64 {
        self.theta_alpha * (1.0 - 1.0 / f64::from(self.q))
    }
}

fn ensure_domain(u: &RadialFunction, alpha: f64) -> Result<()> {
    let report = check_growth_conditions(u, alpha, ConditionKind::DalphaDomain);
    if report.all_hold() {
        Ok(())
    } else {
        Err(Error::DomainViolation(report.to_string()))
    }
}

// D^α annihilates constants, so the series is summed for u - u(q^n), which
// drops the diagonal term and avoids cancellation between large sums.
fn at_shell(u: &RadialFunction, p: &DalphaParams, n: i64) -> Result<f64> {
    let g = u.grid();
    let alpha = p.alpha;
    let un = u.eval(n);
    let s1 = g.pow(-(alpha + 1.0) * n as f64)
        * u.weighted_sum_centered(1.0, 0, Side::Lower, n - 1, un)?;
    let s3 = u.weighted_sum_centered(-alpha, 0, Side::Upper, n + 1, un)?;
    let mut acc = CompensatedSum::new();
    acc.add(s1);
    acc.add(s3);
    Ok(p.kappa() * acc.value())
}

/// `(D^α u)(q^n)` at a single shell.
pub fn dalpha_at(u: &RadialFunction, alpha: f64, n: i64) -> Result<f64> {
    let p = DalphaParams::new(alpha, u.q())?;
    ensure_domain(u, alpha)?;
    at_shell(u, &p, n)
}

fn divergent(side: Side, poly: &ExpPoly, weight: f64) -> Option<Error> {
    let t = match side {
        Side::Lower => poly.lower_divergence(),
        Side::Upper => poly.upper_divergence(),
    }?;
    Some(Error::DivergentTail {
        side,
        exponent: t.exponent - weight,
        weight,
    })
}

/// Closed form of `D^α u` for shells above the input window.
fn upper_output_tail(u: &RadialFunction, p: &DalphaParams) -> Result<ExpPoly> {
    let q = p.q;
    let alpha = p.alpha;
    let kappa = p.kappa();
    let b = u.grid().k_max();
    let t = u
        .upper_tail()
        .to_expoly()
        .ok_or(Error::UnmodeledTail { side: Side::Upper })?;

    let p1 = u.weighted_sum(1.0, 0, Side::Lower, b)?;
    let a1 = t.shift_exponent(1.0).antidifference(q);
    let s1 = ExpPoly::power(kappa * (p1 - a1.eval(q, b + 1)), -(alpha + 1.0))
        .add(&a1.shift_exponent(-(alpha + 1.0)).scale(kappa));

    let s2 = t.shift_exponent(-alpha).scale(p.diag_coeff / f64::from(q));

    let outer = t.shift_exponent(-alpha);
    if let Some(e) = divergent(Side::Upper, &outer, -alpha) {
        return Err(e);
    }
    let s3 = outer.antidifference(q).shifted_by_one(q).scale(-kappa);
    Ok(s1.add(&s2).add(&s3))
}

/// Closed form of `D^α u` for shells below the input window.
fn lower_output_tail(u: &RadialFunction, p: &DalphaParams) -> Result<ExpPoly> {
    let q = p.q;
    let alpha = p.alpha;
    let kappa = p.kappa();
    let a = u.grid().k_min();
    let l = u
        .lower_tail()
        .to_expoly()
        .ok_or(Error::UnmodeledTail { side: Side::Lower })?;

    let inner = l.shift_exponent(1.0);
    if let Some(e) = divergent(Side::Lower, &inner, 1.0) {
        return Err(e);
    }
    let s1 = inner
        .antidifference(q)
        .shift_exponent(-(alpha + 1.0))
        .scale(kappa);

    let s2 = l.shift_exponent(-alpha).scale(p.diag_coeff / f64::from(q));

    let a3 = l.shift_exponent(-alpha).antidifference(q);
    let p3 = u.weighted_sum(-alpha, 0, Side::Upper, a)?;
    let s3 =
        ExpPoly::constant(kappa * (a3.eval(q, a) + p3)).add(&a3.shifted_by_one(q).scale(-kappa));
    Ok(s1.add(&s2).add(&s3))
}

/// `D^α u` on the shells `[n_lo, n_hi]`.
///
/// When the output window covers the input window and both input tails are
/// modeled, the output carries the exact closed-form tails; otherwise its
/// tails are [`TailSpec::Unmodeled`].
pub fn apply_dalpha(
    u: &RadialFunction,
    alpha: f64,
    out_window: (i64, i64),
) -> Result<RadialFunction> {
    let p = DalphaParams::new(alpha, u.q())?;
    ensure_domain(u, alpha)?;
    let grid = u.grid().with_window(out_window.0, out_window.1)?;
    let values = grid
        .shells()
        .map(|n| at_shell(u, &p, n))
        .collect::<Result<Vec<_>>>()?;
    let covers = out_window.0 <= u.grid().k_min() && out_window.1 >= u.grid().k_max();
    let (lower, upper) = if covers {
        // the tail formulas split sums at the window edges; removing u(0) first
        // keeps a constant from producing large cancelling pieces
        let centered = u.offset(-u.value_at_zero())?;
        (
            TailSpec::Sum(lower_output_tail(&centered, &p)?),
            TailSpec::Sum(upper_output_tail(&centered, &p)?),
        )
    } else {
        (TailSpec::Unmodeled, TailSpec::Unmodeled)
    };
    RadialFunction::new(grid, values, lower, upper)
}

/// `D^α u` on the input's own window.
pub fn apply_dalpha_same_window(u: &RadialFunction, alpha: f64) -> Result<RadialFunction> {
    let g = u.grid();
    apply_dalpha(u, alpha, (g.k_min(), g.k_max()))
}

/// Direct evaluation of `θ_α ∫ |y|^(-α-1) [u(|x - y|) - u(|x|)] dy` at `|x| = q^n`
/// for compactly supported `u`.
///
/// The domain splits into `|y| < q^n` (where `|x - y| = |x|`, integrand zero),
/// `|y| > q^n` (where `|x - y| = |y|`) and the sphere `|y| = q^n`, which is cut
/// into strata of constant `|x - y| = q^m`, `m <= n`.
pub fn dalpha_oracle(u: &RadialFunction, alpha: f64, n: i64) -> Result<f64> {
    if !u.lower_tail().is_zero() || !u.upper_tail().is_zero() {
        return Err(Error::NonZeroTails);
    }
    let p = DalphaParams::new(alpha, u.q())?;
    let q = p.q;
    let g: &RadialGrid = u.grid();
    let un = u.eval(n);

    let mut acc = CompensatedSum::new();
    let depth_out = truncation_depth(q, alpha, 1e-17);
    for j in (n + 1)..=(n + depth_out).max(g.k_max()) {
        let diff = u.eval(j) - un;
        if diff != 0.0 {
            acc.add(shell_measure(q, j) * qpow(q, -(alpha + 1.0) * j as f64) * diff);
        }
    }

    let weight_n = qpow(q, -(alpha + 1.0) * n as f64);
    let depth_in = truncation_depth(q, 1.0, 1e-17);
    for m in (n - depth_in).min(g.k_min())..=n {
        let diff = u.eval(m) - un;
        let measure = sphere_stratum_measure(q, n, m);
        if diff != 0.0 && measure != 0.0 {
            acc.add(measure * weight_n * diff);
        }
    }
    Ok(p.theta_alpha * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(q: u32, a: i64, b: i64) -> RadialGrid {
        RadialGrid::new(q, a, b).unwrap()
    }

    #[test]
    fn theta_values() {
        assert!((theta(1.0, 2) + 4.0 / 3.0).abs() < 1e-15);
        assert!((theta(2.0, 3) + 108.0 / 13.0).abs() < 1e-13);
        for q in [2u32, 3, 5, 7] {
            let t = theta(1e-8, q);
            let lq = f64::from(q).ln();
            assert!(t.abs() < 1e-7 * lq * f64::from(q) / f64::from(q - 1) * 2.0);
            for alpha in [0.1, 0.5, 1.0, 2.5, 6.0] {
                assert!(theta(alpha, q) < 0.0);
                assert!(diag_coeff(alpha, q) > 0.0);
            }
        }
    }

    #[test]
    fn annihilates_constants() {
        for q in [2, 3, 5] {
            for alpha in [0.3, 1.0, 2.5] {
                let c = 2.5;
                let u = RadialFunction::constant(grid(q, -5, 5), c);
                let d = apply_dalpha_same_window(&u, alpha).unwrap();
                for (i, n) in d.grid().shells().enumerate() {
                    let scale = c * theta(alpha, q).abs() * qpow(q, -alpha * n as f64);
                    assert!(
                        d.values()[i].abs() <= 1e-12 * scale.max(1e-300) * 10.0,
                        "q={q} a={alpha} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let u = RadialFunction::compact(grid(3, 0, 2), vec![0.0; 3]).unwrap();
        let d = apply_dalpha(&u, 0.7, (-3, 5)).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));
        assert_eq!(dalpha_oracle(&u, 0.7, 1).unwrap(), 0.0);
    }

    #[test]
    fn unit_ball_above_support() {
        // only the inner-ball sum survives: θ_α q^(-(α+1) n)
        for q in [2, 3, 5] {
            for alpha in [0.5, 1.0, 1.7] {
                let u = RadialFunction::unit_ball_indicator(grid(q, -4, 4)).unwrap();
                for n in 1..6 {
                    let got = dalpha_at(&u, alpha, n).unwrap();
                    let want = theta(alpha, q) * qpow(q, -(alpha + 1.0) * n as f64);
                    assert!((got - want).abs() <= 1e-13 * want.abs(), "{got} {want}");
                }
            }
        }
    }

    #[test]
    fn oracle_unit_ball_q3() {
        let g = grid(3, -6, 4);
        let u = RadialFunction::compact(
            g,
            g.shells().map(|k| if k <= 0 { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap();
        // compactly supported version of the unit ball: agree away from the cut
        let a = dalpha_at(&u, 0.5, 2).unwrap();
        let b = dalpha_oracle(&u, 0.5, 2).unwrap();
        assert!((a - b).abs() <= 1e-10 * b.abs());
    }

    #[test]
    fn oracle_single_bump_diagonal() {
        let u = RadialFunction::compact(grid(5, 0, 0), vec![1.0]).unwrap();
        let b = dalpha_oracle(&u, 1.0, 0).unwrap();
        let want = diag_coeff(1.0, 5) / 5.0;
        assert!((b - want).abs() <= 1e-12 * want, "{b} vs {want}");
        let a = dalpha_at(&u, 1.0, 0).unwrap();
        assert!((a - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn oracle_rejects_tails() {
        let u = RadialFunction::constant(grid(2, 0, 1), 1.0);
        assert_eq!(dalpha_oracle(&u, 0.5, 0), Err(Error::NonZeroTails));
    }

    #[test]
    fn domain_violation() {
        let u = RadialFunction::from_fn(
            grid(2, 0, 2),
            |_| 1.0,
            TailSpec::Zero,
            TailSpec::PowerLaw { c: 1.0, e: 0.8 },
        )
        .unwrap();
        assert!(matches!(
            apply_dalpha_same_window(&u, 0.5),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn exact_tails_match_wide_window() {
        let g = grid(3, -3, 3);
        let u = RadialFunction::from_fn(
            g,
            |k| 0.3 * k as f64 + 1.0,
            TailSpec::PowerLaw { c: 2.0, e: 0.4 },
            TailSpec::PowerLaw { c: -1.0, e: 0.2 },
        )
        .unwrap();
        let alpha = 0.6;
        let d = apply_dalpha_same_window(&u, alpha).unwrap();
        for n in [-12, -7, -4, 4, 6, 11] {
            let direct = dalpha_at(&u, alpha, n).unwrap();
            let tail = d.eval(n);
            assert!(
                (direct - tail).abs() <= 1e-11 * (1.0 + direct.abs()),
                "n={n}: {direct} {tail}"
            );
        }
    }
}
