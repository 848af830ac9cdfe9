use std::io::Write;

use padic_radial::expr::{parse_expression, parse_with_vars, Bindings, Var};
use padic_radial::{
    apply_dalpha, apply_ialpha, bound_constant, check_rhs_conditions, continue_solution,
    kernel_constant, picard_solve, qpow, verify_strict, CauchyProblem, MildSolution,
    PicardSettings, RadialFunction, RadialGrid, RhsSpec, Stage,
};

use crate::config::{RunConfig, Shell};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    ApplyD,
    ApplyI,
    Solve,
    Verify,
    Constants,
}

/// Largest frontier tried by the automatic choice of `N`.
const MAX_AUTO_FRONTIER: i64 = 20;

/// Default strict-verification window length below its upper end.
const DEFAULT_VERIFY_SPAN: i64 = 20;

/// A CSV table with a fixed header; floats are written with 17 significant digits.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let io = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Output(e.to_string()))
    }
}

fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn int(k: impl ToString) -> String {
    k.to_string()
}

pub fn run(cfg: &RunConfig, command: Command) -> Result<Table, CliError> {
    match command {
        Command::ApplyD => apply(cfg, false),
        Command::ApplyI => apply(cfg, true),
        Command::Solve => solve(cfg),
        Command::Verify => verify(cfg),
        Command::Constants => constants(cfg),
    }
}

fn input_function(cfg: &RunConfig) -> Result<RadialFunction, CliError> {
    let text = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Config("missing required key input".into()))?;
    let expr = parse_with_vars(text, &[Var::R, Var::Q]).map_err(|source| CliError::Parse {
        field: "input",
        source,
    })?;
    let k_min = match cfg.k_min {
        Shell::At(k) => k,
        Shell::Auto => {
            return Err(CliError::Config(
                "k_min must be explicit for operator applications".into(),
            ))
        }
    };
    let k_max = cfg
        .k_max
        .ok_or_else(|| CliError::Config("missing required key k_max".into()))?;
    let grid = RadialGrid::new(cfg.q, k_min, k_max)?;
    let q = f64::from(cfg.q);
    let values = grid
        .shells()
        .map(|k| {
            expr.eval(&Bindings {
                r: Some(grid.radius(k)),
                q: Some(q),
                ..Default::default()
            })
            .map_err(|source| CliError::Eval {
                field: "input",
                shell: k,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RadialFunction::new(
        grid,
        values,
        cfg.lower_tail.clone(),
        cfg.upper_tail.clone(),
    )?)
}

fn apply(cfg: &RunConfig, integral: bool) -> Result<Table, CliError> {
    let u = input_function(cfg)?;
    let lo = cfg.out_k_min.unwrap_or(u.grid().k_min());
    let hi = cfg.out_k_max.unwrap_or(u.grid().k_max());
    let out = if integral {
        apply_ialpha(&u, cfg.alpha, (lo, hi))?
    } else {
        apply_dalpha(&u, cfg.alpha, (lo, hi))?
    };
    let mut table = Table::new(&["k", "radius", "input", "output"]);
    for (k, v) in out.grid().shells().zip(out.values()) {
        table.push(vec![
            int(k),
            num(out.grid().radius(k)),
            num(u.eval(k)),
            num(*v),
        ]);
    }
    Ok(table)
}

fn rhs_spec(cfg: &RunConfig) -> Result<RhsSpec, CliError> {
    let text = cfg
        .rhs
        .as_deref()
        .ok_or_else(|| CliError::Config("missing required key rhs".into()))?;
    let expr = parse_expression(text).map_err(|source| CliError::Parse {
        field: "rhs",
        source,
    })?;
    let m = cfg
        .m_bound
        .ok_or_else(|| CliError::Config("missing required key M".into()))?;
    let f = cfg
        .lipschitz
        .ok_or_else(|| CliError::Config("missing required key F".into()))?;
    let mut rhs = RhsSpec::from_expr(expr, cfg.q, m, f)?;
    if let Some(rule) = &cfg.shell_lipschitz {
        let expr = parse_with_vars(rule, &[Var::L, Var::Q]).map_err(|source| CliError::Parse {
            field: "F_l",
            source,
        })?;
        rhs = rhs.with_shell_lipschitz_expr(expr, cfg.q);
    }
    if let Some(beta) = cfg.beta {
        rhs = rhs.with_beta(beta);
    }
    Ok(rhs)
}

/// Largest `N` with predicted Picard factor `C F q^(α N) <= 1/2`.
fn auto_frontier(cfg: &RunConfig, rhs: &RhsSpec) -> Result<i64, CliError> {
    let c = bound_constant(cfg.alpha, cfg.q)?;
    let mut n = MAX_AUTO_FRONTIER;
    while c * rhs.lipschitz * qpow(cfg.q, cfg.alpha * n as f64) > 0.5 {
        n -= 1;
        if n < -10_000 {
            return Err(CliError::Config(
                "no frontier gives a contraction factor below 1/2".into(),
            ));
        }
    }
    Ok(n)
}

fn solve_pipeline(cfg: &RunConfig) -> Result<(RhsSpec, MildSolution), CliError> {
    let rhs = rhs_spec(cfg)?;
    let problem = CauchyProblem::new(cfg.q, cfg.alpha, cfg.u0)?;
    let frontier = match cfg.frontier {
        Shell::At(n) => n,
        Shell::Auto => auto_frontier(cfg, &rhs)?,
    };
    let k_max = cfg.k_max.unwrap_or(frontier);
    if k_max < frontier {
        return Err(CliError::Config(format!(
            "k_max = {k_max} lies below the local frontier N = {frontier}"
        )));
    }
    let settings = PicardSettings {
        frontier,
        k_min: match cfg.k_min {
            Shell::Auto => None,
            Shell::At(k) => Some(k),
        },
        tol: cfg.tol,
        max_iter: cfg.max_iter,
    };
    let local = picard_solve(&rhs, &problem, &settings)?;
    let sol = if k_max > frontier {
        continue_solution(&local, &rhs, k_max, cfg.tol, cfg.max_iter)?
    } else {
        local
    };

    let report = check_rhs_conditions(&rhs, sol.grid(), cfg.alpha, cfg.u0, cfg.samples);
    for item in report.failures() {
        let at = item
            .witness
            .map(|(l, x)| format!(" at l={l} x={x}"))
            .unwrap_or_default();
        eprintln!("warning condition=\"{}\"{at}: {}", item.name, item.detail);
    }
    Ok((rhs, sol))
}

fn solve(cfg: &RunConfig) -> Result<Table, CliError> {
    let (rhs, sol) = solve_pipeline(cfg)?;
    let residuals = sol.mild_residuals(&rhs)?;
    let mut table = Table::new(&[
        "k",
        "radius",
        "u",
        "mild_residual",
        "picard_or_fp_iterations",
        "contraction_factor",
    ]);
    for (i, k) in sol.grid().shells().enumerate() {
        let d = sol.diagnostics[i];
        table.push(vec![
            int(k),
            num(sol.grid().radius(k)),
            num(sol.values()[i]),
            num(residuals[i]),
            int(d.iterations),
            num(d.contraction_factor),
        ]);
    }
    let continued = sol
        .diagnostics
        .iter()
        .filter(|d| d.stage == Stage::Continuation)
        .count();
    eprintln!(
        "solve k_min={} N={} k_max={} rho={} picard_iterations={} continued_shells={}",
        sol.k_min(),
        sol.picard_frontier,
        sol.frontier(),
        sol.rho,
        sol.picard_history.len(),
        continued
    );
    Ok(table)
}

fn verify(cfg: &RunConfig) -> Result<Table, CliError> {
    let (rhs, sol) = solve_pipeline(cfg)?;
    let hi = cfg.verify_hi.unwrap_or(sol.frontier() - 10);
    let lo = cfg
        .verify_lo
        .unwrap_or((sol.k_min() + 10).max(hi - DEFAULT_VERIFY_SPAN));
    let report = verify_strict(&sol, &rhs, (lo, hi), cfg.force_verify)?;
    let mut table = Table::new(&["k", "radius", "u", "strict_residual"]);
    for (i, k) in sol.grid().shells().enumerate() {
        let residual = if (lo..=hi).contains(&k) {
            num(report.residuals[(k - lo) as usize])
        } else {
            String::new()
        };
        table.push(vec![
            int(k),
            num(sol.grid().radius(k)),
            num(sol.values()[i]),
            residual,
        ]);
    }
    for item in report.conditions.failures() {
        eprintln!("warning condition=\"{}\": {}", item.name, item.detail);
    }
    eprintln!(
        "verify window=[{lo},{hi}] max_residual={}",
        report.max_residual
    );
    Ok(table)
}

fn constants(cfg: &RunConfig) -> Result<Table, CliError> {
    let grid = RadialGrid::new(cfg.q, -1, 1)?;
    let mut table = Table::new(&["m", "d_alpha_m", "d_alpha_m_times_q_alpha_m"]);
    for m in 0..=cfg.m_max {
        let d = kernel_constant(cfg.alpha, m, &grid)?;
        table.push(vec![
            int(m),
            num(d.d_value),
            num(d.d_value * qpow(cfg.q, cfg.alpha * f64::from(m))),
        ]);
    }
    Ok(table)
}
