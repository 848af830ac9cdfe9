//! The Cauchy problem `D^α u = f(|t|, u)`, `u(0) = u0`, through its mild form
//! `u = u0 + I^α f(·, u)`.
//!
//! A local solution on the ball `|t| <= q^N` comes from Picard iteration; it is
//! continued outward one shell at a time by a scalar fixed-point problem, and
//! finally checked against the differential equation itself.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conditions::{check_growth_conditions, ConditionItem, ConditionKind, ConditionReport};
use crate::error::{Error, Result};
use crate::expoly::{CompensatedSum, ExpPoly, PowerTerm};
use crate::expr::{Bindings, EvalError, Expr};
use crate::fracint::{apply_ialpha, bound_constant, front_coeff, is_log_branch};
use crate::grid::{qpow, shell_measure, RadialGrid};
use crate::radial::{RadialFunction, TailSpec};
use crate::vladimirov::dalpha_at;

pub type RhsFn = Arc<dyn Fn(f64, f64) -> std::result::Result<f64, EvalError> + Send + Sync>;
pub type ShellRule = Arc<dyn Fn(i64) -> std::result::Result<f64, EvalError> + Send + Sync>;

/// Fixed seed for the sampled condition checks.
const SAMPLING_SEED: u64 = 0x5eed_2024;

/// The nonlinearity `f(r, x)` with its declared constants.
#[derive(Clone)]
pub struct RhsSpec {
    f: RhsFn,
    /// Uniform bound `|f| <= M`.
    pub m_bound: f64,
    /// Global Lipschitz constant `F` in `x`.
    pub lipschitz: f64,
    shell_lipschitz: Option<ShellRule>,
    /// Decay exponent: `|f(q^l, x)| <= C_f q^(-β l)` for `l >= 1`.
    pub beta: Option<f64>,
    /// `C_f` of the decay bound; defaults to `M q^β`.
    pub beta_constant: Option<f64>,
    label: String,
}

impl fmt::Debug for RhsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsSpec")
            .field("f", &self.label)
            .field("m_bound", &self.m_bound)
            .field("lipschitz", &self.lipschitz)
            .field("shell_lipschitz", &self.shell_lipschitz.is_some())
            .field("beta", &self.beta)
            .finish()
    }
}

impl RhsSpec {
    pub fn new<F>(f: F, m_bound: f64, lipschitz: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::try_new(move |r, x| Ok(f(r, x)), m_bound, lipschitz, "closure")
    }

    pub fn try_new<F>(f: F, m_bound: f64, lipschitz: f64, label: impl Into<String>) -> Result<Self>
    where
        F: Fn(f64, f64) -> std::result::Result<f64, EvalError> + Send + Sync + 'static,
    {
        for (name, v) in [("M", m_bound), ("F", lipschitz)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(Self {
            f: Arc::new(f),
            m_bound,
            lipschitz,
            shell_lipschitz: None,
            beta: None,
            beta_constant: None,
            label: label.into(),
        })
    }

    /// `f(r, x)` given as an expression in `r`, `x` and the constant `q`.
    pub fn from_expr(expr: Expr, q: u32, m_bound: f64, lipschitz: f64) -> Result<Self> {
        let label = expr.to_string();
        let qf = f64::from(q);
        Self::try_new(
            move |r, x| {
                expr.eval(&Bindings {
                    r: Some(r),
                    x: Some(x),
                    q: Some(qf),
                    l: None,
                })
            },
            m_bound,
            lipschitz,
            label,
        )
    }

    pub fn with_shell_lipschitz<F>(mut self, rule: F) -> Self
    where
        F: Fn(i64) -> f64 + Send + Sync + 'static,
    {
        self.shell_lipschitz = Some(Arc::new(move |l| Ok(rule(l))));
        self
    }

    /// Per-shell Lipschitz constants `F_l` given as an expression in `l` and `q`.
    pub fn with_shell_lipschitz_expr(mut self, expr: Expr, q: u32) -> Self {
        let qf = f64::from(q);
        self.shell_lipschitz = Some(Arc::new(move |l| {
            expr.eval(&Bindings {
                l: Some(l as f64),
                q: Some(qf),
                ..Default::default()
            })
        }));
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_beta_constant(mut self, c: f64) -> Self {
        self.beta_constant = Some(c);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `f(q^l, x)`.
    pub fn eval(&self, q: u32, l: i64, x: f64) -> Result<f64> {
        (self.f)(qpow(q, l as f64), x).map_err(|source| Error::RhsEvaluation {
            shell: l,
            x,
            source,
        })
    }

    /// `F_l`, falling back to the global constant.
    pub fn shell_lipschitz(&self, l: i64) -> Result<f64> {
        match &self.shell_lipschitz {
            Some(rule) => rule(l).map_err(|source| Error::RhsEvaluation {
                shell: l,
                x: f64::NAN,
                source,
            }),
            None => Ok(self.lipschitz),
        }
    }

    pub fn has_shell_rule(&self) -> bool {
        self.shell_lipschitz.is_some()
    }

    fn decay_constant(&self, q: u32, beta: f64) -> f64 {
        self.beta_constant.unwrap_or(self.m_bound * qpow(q, beta))
    }
}

/// Base field data and initial value of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyProblem {
    pub q: u32,
    pub alpha: f64,
    pub u0: f64,
}

impl CauchyProblem {
    pub fn new(q: u32, alpha: f64, u0: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidGrid(format!("q must be at least 2, got {q}")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !u0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "u0 must be finite, got {u0}"
            )));
        }
        Ok(Self { q, alpha, u0 })
    }
}

/// Settings of the local Picard solve on the ball `|t| <= q^frontier`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub frontier: i64,
    /// Lowest explicit shell; chosen by [`certified_k_min`] when absent.
    pub k_min: Option<i64>,
    pub tol: f64,
    pub max_iter: usize,
}

/// Bound on the contribution of the shells below `k_min` to `(I^α φ)(q^n)`
/// for any `|φ| <= m_bound`.
pub fn truncation_bound(problem: &CauchyProblem, m_bound: f64, k_min: i64, n: i64) -> f64 {
    let q = problem.q;
    let qf = f64::from(q);
    let alpha = problem.alpha;
    let c = front_coeff(alpha, q).abs() * (1.0 - 1.0 / qf) * m_bound;
    if is_log_branch(alpha) {
        let gap = (n - k_min) as f64;
        c * qf.ln() * qpow(q, k_min as f64) * (gap / (qf - 1.0) + qf / ((qf - 1.0) * (qf - 1.0)))
    } else {
        c * (qpow(q, (alpha - 1.0) * n as f64) * qpow(q, k_min as f64) / (qf - 1.0)
            + qpow(q, alpha * k_min as f64) / (qpow(q, alpha) - 1.0))
    }
}

/// Largest `k_min <= frontier - 10` whose truncation bound at the frontier is at most `tol / 10`.
pub fn certified_k_min(
    problem: &CauchyProblem,
    m_bound: f64,
    frontier: i64,
    tol: f64,
) -> Result<i64> {
    let allowed = tol / 10.0;
    let mut k = frontier - 10;
    while truncation_bound(problem, m_bound, k, frontier) > allowed {
        k -= 1;
        if frontier - k > 100_000 {
            return Err(Error::CutoffTooHigh {
                k_min: k,
                bound: truncation_bound(problem, m_bound, k, frontier),
                allowed,
            });
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Picard,
    Continuation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellDiagnostics {
    pub stage: Stage,
    pub iterations: usize,
    pub contraction_factor: f64,
}

/// Solution of the mild equation on the shells `[k_min, frontier]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MildSolution {
    grid: RadialGrid,
    pub alpha: f64,
    pub u0: f64,
    values: Vec<f64>,
    /// Sup-norm successive differences of the Picard iterates.
    pub picard_history: Vec<f64>,
    /// Predicted Picard contraction factor `C F q^(α N)`.
    pub rho: f64,
    pub bound_constant: f64,
    /// Local frontier `N` reached by Picard iteration.
    pub picard_frontier: i64,
    /// Truncation bound of the shells below `k_min`, at the current frontier.
    pub cutoff_bound: f64,
    /// Whether every Picard difference stayed inside the a-priori envelope.
    pub envelope_ok: bool,
    /// Largest ratio of successive Picard differences above the rounding floor.
    pub max_ratio: f64,
    pub diagnostics: Vec<ShellDiagnostics>,
}

impl MildSolution {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn q(&self) -> u32 {
        self.grid.q()
    }

    pub fn k_min(&self) -> i64 {
        self.grid.k_min()
    }

    pub fn frontier(&self) -> i64 {
        self.grid.k_max()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `u(q^k)`; the initial value below the window, where the truncated
    /// right-hand side vanishes.
    pub fn value(&self, k: i64) -> Option<f64> {
        if k < self.k_min() {
            Some(self.u0)
        } else if k <= self.frontier() {
            Some(self.values[(k - self.k_min()) as usize])
        } else {
            None
        }
    }

    pub fn problem(&self) -> CauchyProblem {
        CauchyProblem {
            q: self.q(),
            alpha: self.alpha,
            u0: self.u0,
        }
    }

    /// `f(q^k, u(q^k))` on the window.
    pub fn rhs_values(&self, rhs: &RhsSpec) -> Result<Vec<f64>> {
        self.grid
            .shells()
            .zip(&self.values)
            .map(|(k, &u)| rhs.eval(self.q(), k, u))
            .collect()
    }

    /// `|u - u0 - I^α f(·, u)|` per shell, recomputed from scratch.
    pub fn mild_residuals(&self, rhs: &RhsSpec) -> Result<Vec<f64>> {
        let g = RadialFunction::compact(self.grid, self.rhs_values(rhs)?)?;
        let ig = apply_ialpha(&g, self.alpha, (self.k_min(), self.frontier()))?;
        Ok(self
            .values
            .iter()
            .zip(ig.values())
            .map(|(u, i)| (u - self.u0 - i).abs())
            .collect())
    }

    /// The solution as a radial function: constant `u0` below the window and
    /// a fitted tail above it.
    ///
    /// The upper tail is `a + b q^((α-1) k) + c q^((α-β) k)` (with `a + b k`
    /// replacing the first two terms for α = 1), matched exactly on the
    /// outermost shells; it is approximate by nature.
    pub fn to_radial_function(&self, beta: Option<f64>) -> Result<RadialFunction> {
        let alpha = self.alpha;
        let mut basis: Vec<(u32, f64)> = if is_log_branch(alpha) {
            vec![(0, 0.0), (1, 0.0)]
        } else {
            vec![(0, 0.0), (0, alpha - 1.0)]
        };
        if let Some(beta) = beta {
            let e = alpha - beta;
            if e < 0.0 && basis.iter().all(|&(p, b)| p != 0 || (b - e).abs() > 1e-6) {
                basis.push((0, e));
            }
        }
        let upper = fit_tail(self, &basis)?;
        let f = RadialFunction::new(
            self.grid,
            self.values.clone(),
            TailSpec::Constant(self.u0),
            TailSpec::Sum(upper),
        )?;
        f.with_value_at_zero(self.u0)
    }
}

fn fit_tail(sol: &MildSolution, basis: &[(u32, f64)]) -> Result<ExpPoly> {
    let n = basis.len().min(sol.grid.len());
    let basis = &basis[..n];
    let top = sol.frontier();
    let q = sol.q();
    let col = |k: i64, (p, e): (u32, f64)| -> f64 {
        (k as f64).powi(p as i32) * qpow(q, e * (k - top) as f64)
    };
    let shells: Vec<i64> = (top - n as i64 + 1..=top).collect();
    let a = DMatrix::from_fn(n, n, |i, j| col(shells[i], basis[j]));
    let b = DVector::from_iterator(n, shells.iter().map(|&k| sol.value(k).unwrap_or(sol.u0)));
    let coeffs = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidFunction("singular tail fit".into()))?;
    Ok(ExpPoly::from_terms(basis.iter().zip(coeffs.iter()).map(
        |(&(p, e), &c)| PowerTerm::new(c * qpow(q, -e * top as f64), p, e),
    )))
}

/// Local mild solution by Picard iteration from the constant iterate `u0`.
pub fn picard_solve(
    rhs: &RhsSpec,
    problem: &CauchyProblem,
    settings: &PicardSettings,
) -> Result<MildSolution> {
    picard_solve_from(rhs, problem, settings, None)
}

/// Picard iteration started from `initial` (window values) instead of `u0`.
/// The a-priori envelope is only checked for the constant start.
pub fn picard_solve_from(
    rhs: &RhsSpec,
    problem: &CauchyProblem,
    settings: &PicardSettings,
    initial: Option<&[f64]>,
) -> Result<MildSolution> {
    let CauchyProblem { q, alpha, u0 } = *problem;
    let frontier = settings.frontier;
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be positive, got {}",
            settings.tol
        )));
    }
    let k_min = match settings.k_min {
        Some(k) => k,
        None => certified_k_min(problem, rhs.m_bound, frontier, settings.tol)?,
    };
    let grid = RadialGrid::new(q, k_min, frontier)?;
    let cutoff_bound = truncation_bound(problem, rhs.m_bound, k_min, frontier);
    if cutoff_bound > settings.tol / 10.0 {
        return Err(Error::CutoffTooHigh {
            k_min,
            bound: cutoff_bound,
            allowed: settings.tol / 10.0,
        });
    }
    let c = bound_constant(alpha, q)?;
    let big_f = rhs.lipschitz;
    let rho = c * big_f * qpow(q, alpha * frontier as f64);

    let mut u: Vec<f64> = match initial {
        Some(v) if v.len() == grid.len() => v.to_vec(),
        Some(v) => {
            return Err(Error::InvalidParameter(format!(
                "initial iterate has {} values for {} shells",
                v.len(),
                grid.len()
            )))
        }
        None => vec![u0; grid.len()],
    };
    let check_envelope = initial.is_none();
    let mut history = Vec::new();
    let mut envelope_ok = true;
    let mut max_ratio: f64 = 0.0;
    let scale_q = qpow(q, alpha * frontier as f64);

    for k in 0..settings.max_iter {
        let g: Vec<f64> = grid
            .shells()
            .zip(&u)
            .map(|(s, &x)| rhs.eval(q, s, x))
            .collect::<Result<_>>()?;
        let ig = apply_ialpha(&RadialFunction::compact(grid, g)?, alpha, (k_min, frontier))?;
        let next: Vec<f64> = ig.values().iter().map(|i| u0 + i).collect();
        let diff = u
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if !diff.is_finite() {
            return Err(Error::NoContraction {
                rho,
                iterations: k + 1,
                last_diff: diff,
            });
        }
        let magnitude = next.iter().fold(u0.abs(), |m, v| m.max(v.abs()));
        let floor = 64.0 * f64::EPSILON * (1.0 + magnitude);
        if check_envelope {
            let envelope = c.powi(k as i32 + 1)
                * rhs.m_bound
                * big_f.powi(k as i32)
                * scale_q.powi(k as i32 + 1);
            if diff > envelope * (1.0 + 1e-6) + floor {
                envelope_ok = false;
            }
        }
        if let Some(&prev) = history.last() {
            if prev > 1e-14 * (1.0 + magnitude) {
                max_ratio = max_ratio.max(diff / prev);
            }
        }
        history.push(diff);
        u = next;
        if diff <= settings.tol {
            let diagnostics = vec![
                ShellDiagnostics {
                    stage: Stage::Picard,
                    iterations: history.len(),
                    contraction_factor: rho
                };
                grid.len()
            ];
            return Ok(MildSolution {
                grid,
                alpha,
                u0,
                values: u,
                picard_history: history,
                rho,
                bound_constant: c,
                picard_frontier: frontier,
                cutoff_bound,
                envelope_ok,
                max_ratio,
                diagnostics,
            });
        }
    }
    let last_diff = history.last().copied().unwrap_or(f64::INFINITY);
    let decreasing = history.len() < 2 || history[history.len() - 1] < history[history.len() - 2];
    if rho >= 1.0 || !decreasing {
        Err(Error::NoContraction {
            rho,
            iterations: settings.max_iter,
            last_diff,
        })
    } else {
        Err(Error::ToleranceNotReached {
            iterations: settings.max_iter,
            last_diff,
        })
    }
}

/// `v0^(N) = front ∫_{|y| <= q^N} (q^((N+1)(α-1)) - |y|^(α-1)) f(|y|, u(|y|)) dy`,
/// with the log kernel `(N + 1 - j) ln q` for α = 1.
pub fn v0_constant(sol: &MildSolution, rhs: &RhsSpec, n: i64) -> Result<f64> {
    if sol.frontier() < n {
        return Err(Error::FrontierTooLow {
            frontier: sol.frontier(),
            requested: n,
        });
    }
    v0_split(sol, rhs, n, sol.k_min(), n)
}

/// Part of `v0^(n)` contributed by the shells `[from, to]`.
fn v0_split(sol: &MildSolution, rhs: &RhsSpec, n: i64, from: i64, to: i64) -> Result<f64> {
    let q = sol.q();
    let alpha = sol.alpha;
    let log = is_log_branch(alpha);
    let ln_q = f64::from(q).ln();
    let outer = qpow(q, (n + 1) as f64 * (alpha - 1.0));
    let mut acc = CompensatedSum::new();
    for j in from.max(sol.k_min())..=to.min(n) {
        let u = sol.value(j).expect("shell inside the solved window");
        let g = rhs.eval(q, j, u)?;
        let kernel = if log {
            (n + 1 - j) as f64 * ln_q
        } else {
            outer - qpow(q, (alpha - 1.0) * j as f64)
        };
        acc.add(shell_measure(q, j) * kernel * g);
    }
    Ok(front_coeff(alpha, q) * acc.value())
}

/// Extend a solution shell by shell up to `k_max`, solving
/// `x = u0 + v0^(l) + q^(α l) f(q^(l+1), x)` by successive substitution.
pub fn continue_solution(
    sol: &MildSolution,
    rhs: &RhsSpec,
    k_max: i64,
    tol: f64,
    max_iter: usize,
) -> Result<MildSolution> {
    let mut out = sol.clone();
    let q = sol.q();
    let alpha = sol.alpha;
    let u0 = sol.u0;
    for l in sol.frontier()..k_max {
        let shell = l + 1;
        let v0 = v0_constant(&out, rhs, l)?;
        let diag = qpow(q, alpha * l as f64);
        let factor = diag * rhs.shell_lipschitz(shell)?;
        let limit = 10.0 * (u0.abs() + v0.abs() + diag * rhs.m_bound) + 1.0;
        let mut x = out.value(l).unwrap_or(u0);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < max_iter {
            iterations += 1;
            let next = u0 + v0 + diag * rhs.eval(q, shell, x)?;
            if !next.is_finite() || next.abs() > limit {
                break;
            }
            let step = (next - x).abs();
            x = next;
            if step <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ContractionFailure { shell, factor });
        }
        out.values.push(x);
        out.grid = out.grid.with_window(out.k_min(), shell)?;
        out.diagnostics.push(ShellDiagnostics {
            stage: Stage::Continuation,
            iterations,
            contraction_factor: factor,
        });
    }
    out.cutoff_bound = truncation_bound(&out.problem(), rhs.m_bound, out.k_min(), out.frontier());
    Ok(out)
}

/// One part of the decomposition of `v0^(l)` into the contributions of the unit
/// ball and of the shells `1..=l`, with the ratios to their growth envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct V0Split {
    pub l: i64,
    pub inner: f64,
    pub outer: f64,
    /// `|inner| / (q^((l+1)(α-1)) + 1)`.
    pub inner_ratio: f64,
    /// `|outer| / (1 + q^((α-β) l))`.
    pub outer_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub shells: Vec<i64>,
    /// `|(D^α u)(q^n) - f(q^n, u(q^n))|`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub conditions: ConditionReport,
    pub v0_splits: Vec<V0Split>,
}

/// Margin required on each side of the verification window.
pub const VERIFY_MARGIN: i64 = 10;

/// Check that the mild solution solves `D^α u = f(·, u)` on `[n_lo, n_hi]`.
///
/// With `force`, the check also runs without a valid decay exponent; the
/// residuals then show whether the equation actually holds.
pub fn verify_strict(
    sol: &MildSolution,
    rhs: &RhsSpec,
    window: (i64, i64),
    force: bool,
) -> Result<ResidualReport> {
    let (n_lo, n_hi) = window;
    if n_lo > n_hi {
        return Err(Error::InvalidParameter(format!(
            "empty window [{n_lo}, {n_hi}]"
        )));
    }
    let alpha = sol.alpha;
    let q = sol.q();
    let mut conditions = ConditionReport::default();
    match rhs.beta {
        None if !force => return Err(Error::MissingBeta),
        None => conditions.push("beta > alpha", false, "no decay exponent declared"),
        Some(beta) if beta <= alpha && !force => {
            return Err(Error::DomainViolation(format!(
                "decay exponent beta = {beta} must exceed alpha = {alpha}"
            )))
        }
        Some(beta) => conditions.push(
            "beta > alpha",
            beta > alpha,
            format!("beta = {beta}, alpha = {alpha}"),
        ),
    }
    let available = (n_lo - sol.k_min()).min(sol.frontier() - n_hi);
    if available < VERIFY_MARGIN {
        return Err(Error::MarginTooSmall {
            required: VERIFY_MARGIN,
            available,
        });
    }

    let u = sol.to_radial_function(rhs.beta)?;
    conditions.extend(check_growth_conditions(
        &u,
        alpha,
        ConditionKind::DalphaDomain,
    ));

    let mut shells = Vec::new();
    let mut residuals = Vec::new();
    for n in n_lo..=n_hi {
        let d = dalpha_at(&u, alpha, n)?;
        let f = rhs.eval(q, n, u.eval(n))?;
        shells.push(n);
        residuals.push((d - f).abs());
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);

    let mut v0_splits = Vec::new();
    if let Some(beta) = rhs.beta {
        for l in 1..sol.frontier() {
            let inner = v0_split(sol, rhs, l, sol.k_min(), 0)?;
            let outer = v0_split(sol, rhs, l, 1, l)?;
            v0_splits.push(V0Split {
                l,
                inner,
                outer,
                inner_ratio: inner.abs() / (qpow(q, (l + 1) as f64 * (alpha - 1.0)) + 1.0),
                outer_ratio: outer.abs() / (1.0 + qpow(q, (alpha - beta) * l as f64)),
            });
        }
    }
    Ok(ResidualReport {
        shells,
        residuals,
        max_residual,
        conditions,
        v0_splits,
    })
}

fn sample_item(name: &str, failure: Option<(i64, f64, String)>) -> ConditionItem {
    match failure {
        None => ConditionItem {
            name: name.into(),
            holds: true,
            detail: "no violation on the sampling grid".into(),
            witness: None,
        },
        Some((l, x, detail)) => ConditionItem {
            name: name.into(),
            holds: false,
            detail,
            witness: Some((l, x)),
        },
    }
}

/// Sampled verification of the declared constants `M`, `F`, `F_l` and `β`.
///
/// `x` runs over an even grid on `[-R, R]`, `R = 10 (|u0| + M)`, plus seeded
/// random pairs; `l` runs over the grid window.
pub fn check_rhs_conditions(
    rhs: &RhsSpec,
    grid: &RadialGrid,
    alpha: f64,
    u0: f64,
    samples: usize,
) -> ConditionReport {
    let samples = samples.max(100);
    let q = grid.q();
    let radius = 10.0 * (u0.abs() + rhs.m_bound).max(0.1);
    let xs: Vec<f64> = (0..samples)
        .map(|i| -radius + 2.0 * radius * i as f64 / (samples - 1) as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
    let pairs: Vec<(f64, f64)> = (0..samples)
        .map(|_| {
            (
                rng.gen_range(-radius..radius),
                rng.gen_range(-radius..radius),
            )
        })
        .collect();
    let slack = 1.0 + 1e-9;

    let mut bound_fail = None;
    let mut lip_fail = None;
    let mut shell_fail = None;
    let mut shell_range_fail = None;
    let mut decay_fail = None;
    let mut eval_fail = None;

    'shells: for l in grid.shells() {
        let mut values = Vec::with_capacity(samples);
        for &x in &xs {
            match rhs.eval(q, l, x) {
                Ok(v) => values.push(v),
                Err(e) => {
                    eval_fail.get_or_insert((l, x, e.to_string()));
                    continue 'shells;
                }
            }
        }
        let mut pair_values = Vec::with_capacity(samples);
        for &(x, y) in &pairs {
            match (rhs.eval(q, l, x), rhs.eval(q, l, y)) {
                (Ok(a), Ok(b)) => pair_values.push((x, y, a, b)),
                (Err(e), _) | (_, Err(e)) => {
                    eval_fail.get_or_insert((l, x, e.to_string()));
                    continue 'shells;
                }
            }
        }
        let diffs = xs
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, v)| (x[0], x[1], v[0], v[1]))
            .chain(pair_values.iter().copied());

        if bound_fail.is_none() {
            if let Some((x, v)) = xs
                .iter()
                .zip(&values)
                .find(|(_, v)| v.abs() > rhs.m_bound * slack)
            {
                bound_fail = Some((
                    l,
                    *x,
                    format!("|f(q^{l}, {x})| = {} > M = {}", v.abs(), rhs.m_bound),
                ));
            }
        }
        let shell_lip = if rhs.has_shell_rule() {
            match rhs.shell_lipschitz(l) {
                Ok(v) => {
                    let cap = qpow(q, -alpha * l as f64);
                    if shell_range_fail.is_none() && !(v > 0.0 && v < cap) {
                        shell_range_fail = Some((
                            l,
                            f64::NAN,
                            format!("F_{l} = {v} not in (0, q^(-alpha l) = {cap})"),
                        ));
                    }
                    Some(v)
                }
                Err(e) => {
                    eval_fail.get_or_insert((l, f64::NAN, e.to_string()));
                    None
                }
            }
        } else {
            None
        };
        for (x, y, a, b) in diffs {
            let dx = (x - y).abs();
            let df = (a - b).abs();
            if lip_fail.is_none() && df > rhs.lipschitz * dx * slack {
                lip_fail = Some((
                    l,
                    x,
                    format!(
                        "|f(x) - f(y)| = {df} > F |x - y| = {} at y = {y}",
                        rhs.lipschitz * dx
                    ),
                ));
            }
            if let Some(fl) = shell_lip {
                if shell_fail.is_none() && df > fl * dx * slack {
                    shell_fail = Some((
                        l,
                        x,
                        format!(
                            "|f(x) - f(y)| = {df} > F_{l} |x - y| = {} at y = {y}",
                            fl * dx
                        ),
                    ));
                }
            }
        }
        if let Some(beta) = rhs.beta {
            if l >= 1 && decay_fail.is_none() {
                let cap = rhs.decay_constant(q, beta) * qpow(q, -beta * l as f64);
                if let Some((x, v)) = xs.iter().zip(&values).find(|(_, v)| v.abs() > cap * slack) {
                    decay_fail = Some((
                        l,
                        *x,
                        format!("|f(q^{l}, {x})| = {} > C_f q^(-beta l) = {cap}", v.abs()),
                    ));
                }
            }
        }
    }

    let mut report = ConditionReport::default();
    report.push_item(sample_item("|f| <= M", bound_fail));
    report.push_item(sample_item("Lipschitz F", lip_fail));
    if rhs.has_shell_rule() {
        report.push_item(sample_item("Lipschitz F_l", shell_fail));
        report.push_item(sample_item("0 < F_l < q^(-alpha l)", shell_range_fail));
    }
    if rhs.beta.is_some() {
        report.push_item(sample_item("decay q^(-beta l)", decay_fail));
    }
    if let Some(fail) = eval_fail {
        report.push_item(sample_item("f evaluates on the grid", Some(fail)));
    }
    report
}
