//! Summability and growth predicates on tail models.

use std::fmt;

use crate::expoly::EXPONENT_EPS;
use crate::fracint::is_log_branch;
use crate::radial::{tail_terms, RadialFunction, Side};

/// One required series or bound and whether it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionItem {
    pub name: String,
    pub holds: bool,
    pub detail: String,
    /// Shell and argument at which a sampled check failed.
    pub witness: Option<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub items: Vec<ConditionItem>,
}

impl ConditionReport {
    pub fn push(&mut self, name: impl Into<String>, holds: bool, detail: impl Into<String>) {
        self.items.push(ConditionItem {
            name: name.into(),
            holds,
            detail: detail.into(),
            witness: None,
        });
    }

    pub fn push_item(&mut self, item: ConditionItem) {
        self.items.push(item);
    }

    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|i| i.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionItem> {
        self.items.iter().filter(|i| !i.holds)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn extend(&mut self, other: ConditionReport) {
        self.items.extend(other.items);
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for item in &self.items {
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(
                f,
                "{}: {} ({})",
                item.name,
                if item.holds { "ok" } else { "FAILS" },
                item.detail
            )?;
        }
        Ok(())
    }
}

/// Which family of hypotheses to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    /// Existence of the shell series for `D^α u`.
    DalphaDomain,
    /// Lower-tail summability needed to evaluate `I^α u`.
    IalphaDomain,
    /// Hypotheses under which `D^α I^α v = v`.
    RightInverse,
    /// Growth bounds under which `I^α D^α u = u`.
    LeftInverse,
}

/// Whether `Σ q^(w k) |u(q^k)|` over the given tail converges.
fn series_item(f: &RadialFunction, side: Side, w: f64, name: &str) -> ConditionItem {
    let (holds, detail) = match tail_terms(f.tail(side)) {
        None => (false, format!("{side} tail not modeled")),
        Some(terms) => {
            let bad = terms.iter().find(|t| {
                let s = t.exponent + w;
                t.coeff != 0.0
                    && match side {
                        Side::Lower => s <= EXPONENT_EPS,
                        Side::Upper => s >= -EXPONENT_EPS,
                    }
            });
            match bad {
                Some(t) => (
                    false,
                    format!("{side} tail exponent {} with weight {w}", t.exponent),
                ),
                None => (
                    true,
                    format!("{side} series with weight q^({w} k) converges"),
                ),
            }
        }
    };
    ConditionItem {
        name: name.into(),
        holds,
        detail,
        witness: None,
    }
}

fn lower_integral_items(f: &RadialFunction, alpha: f64, report: &mut ConditionReport) {
    if is_log_branch(alpha) {
        report.push_item(series_item(
            f,
            Side::Lower,
            1.0,
            "lower |k| q^k |u| summable",
        ));
    } else {
        report.push_item(series_item(f, Side::Lower, 1.0, "lower q^k |u| summable"));
        report.push_item(series_item(
            f,
            Side::Lower,
            alpha,
            "lower q^(alpha k) |u| summable",
        ));
    }
}

pub fn check_growth_conditions(
    f: &RadialFunction,
    alpha: f64,
    kind: ConditionKind,
) -> ConditionReport {
    let mut report = ConditionReport::default();
    if !(alpha > 0.0) {
        report.push("alpha > 0", false, format!("alpha = {alpha}"));
        return report;
    }
    match kind {
        ConditionKind::DalphaDomain => {
            report.push_item(series_item(f, Side::Lower, 1.0, "lower q^k |u| summable"));
            report.push_item(series_item(
                f,
                Side::Upper,
                -alpha,
                "upper q^(-alpha l) |u| summable",
            ));
        }
        ConditionKind::IalphaDomain => lower_integral_items(f, alpha, &mut report),
        ConditionKind::RightInverse => {
            lower_integral_items(f, alpha, &mut report);
            let name = if is_log_branch(alpha) {
                "upper l |v| summable"
            } else {
                "upper |v| summable"
            };
            report.push_item(series_item(f, Side::Upper, 0.0, name));
        }
        ConditionKind::LeftInverse => {
            let u0 = f.value_at_zero();
            report.push("u(0) = 0", u0.abs() <= 1e-12, format!("u(0) = {u0}"));
            let d_bound = (alpha - 1.0).max(0.0);
            match tail_terms(f.lower_tail()) {
                None => report.push("d > max(0, alpha-1)", false, "lower tail not modeled"),
                Some(terms) => {
                    let d = terms
                        .iter()
                        .filter(|t| t.coeff != 0.0)
                        .map(|t| t.exponent)
                        .fold(f64::INFINITY, f64::min);
                    report.push(
                        "d > max(0, alpha-1)",
                        d > d_bound + EXPONENT_EPS,
                        format!("d = {d}, bound {d_bound}"),
                    );
                }
            }
            match tail_terms(f.upper_tail()) {
                None => report.push("0 <= h < alpha", false, "upper tail not modeled"),
                Some(terms) => {
                    let h = terms
                        .iter()
                        .filter(|t| t.coeff != 0.0)
                        .map(|t| t.exponent)
                        .fold(0.0, f64::max);
                    report.push(
                        "0 <= h < alpha",
                        h < alpha - EXPONENT_EPS,
                        format!("h = {h}"),
                    );
                    if alpha > 1.0 {
                        report.push(
                            "h < alpha-1",
                            h < alpha - 1.0 - EXPONENT_EPS,
                            format!("h = {h}"),
                        );
                    }
                }
            }
        }
    }
    report
}
