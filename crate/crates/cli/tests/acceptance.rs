//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use padic_radial::{
    apply_dalpha, apply_ialpha, bound_constant, continue_solution, dalpha_oracle, front_coeff,
    ialpha_oracle, kernel_constant, kernel_integral, picard_solve, picard_solve_from, qpow,
    verify_strict, CauchyProblem, ExpPoly, PicardSettings, PowerTerm, RadialFunction, RadialGrid,
    RhsSpec, TailSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const QS: [u32; 3] = [2, 3, 5];
const ALPHAS: [f64; 5] = [0.3, 0.5, 1.0, 1.7, 2.5];
const BIN: &str = env!("CARGO_BIN_EXE_padic-radial");

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn random_compact(rng: &mut ChaCha8Rng, q: u32) -> RadialFunction {
    let start = rng.gen_range(-8..=4);
    let width = rng.gen_range(1..=12);
    let g = RadialGrid::new(q, start, start + width - 1).unwrap();
    RadialFunction::compact(g, (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn annihilation() -> Outcome {
    let mut worst = 0.0f64;
    for q in QS {
        for alpha in ALPHAS {
            let one = RadialFunction::constant(RadialGrid::new(q, -20, 20).unwrap(), 1.0);
            let out = apply_ialpha(&one, alpha, (-20, 20)).map_err(|e| e.to_string())?;
            for (n, v) in (-20..=20).zip(out.values()) {
                let r = v.abs() / (1e-12 * qpow(q, alpha * n as f64));
                worst = worst.max(r);
                if r > 1.0 {
                    return Err(format!("q={q} alpha={alpha} n={n}: |I 1| = {v:e}"));
                }
            }
        }
    }
    Ok(format!("worst |I 1| / (1e-12 q^(alpha n)) = {worst:.2e}"))
}

fn right_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for q in QS {
        for alpha in ALPHAS {
            for _ in 0..50 {
                let v = random_compact(&mut rng, q);
                let g = *v.grid();
                let iv =
                    apply_ialpha(&v, alpha, (g.k_min(), g.k_max())).map_err(|e| e.to_string())?;
                let back =
                    apply_dalpha(&iv, alpha, (g.k_min(), g.k_max())).map_err(|e| e.to_string())?;
                let tol = 1e-9 * (1.0 + sup(v.values()));
                for (a, b) in back.values().iter().zip(v.values()) {
                    worst = worst.max((a - b).abs() / tol);
                    if (a - b).abs() > tol {
                        return Err(format!("q={q} alpha={alpha}: {a} vs {b}"));
                    }
                }
            }
        }
    }
    Ok(format!("750 cases, worst error / tolerance = {worst:.2e}"))
}

fn power_family(q: u32, d: f64, h: f64, shift: f64) -> RadialFunction {
    let g = RadialGrid::new(q, -25, 25).unwrap();
    let lower = ExpPoly::from_terms([PowerTerm::new(shift, 0, 0.0), PowerTerm::new(1.0, 0, d)]);
    let upper = ExpPoly::from_terms([PowerTerm::new(shift, 0, 0.0), PowerTerm::new(1.0, 0, h)]);
    RadialFunction::from_fn(
        g,
        |k| {
            shift
                + if k <= 0 {
                    qpow(q, d * k as f64)
                } else {
                    qpow(q, h * k as f64)
                }
        },
        TailSpec::Sum(lower),
        TailSpec::Sum(upper),
    )
    .unwrap()
}

/// Absolute error of `I^α g` at shell `n` induced by unit relative perturbations of `g`.
fn ialpha_condition(g: &RadialFunction, alpha: f64, n: i64) -> f64 {
    let q = g.q();
    let c = front_coeff(alpha, q).abs() * (1.0 - 1.0 / f64::from(q));
    let mut s = qpow(q, alpha * (n - 1) as f64) * g.eval(n).abs();
    for j in n - 400..n {
        let k = if (alpha - 1.0).abs() < 1e-12 {
            (n - j) as f64 * f64::from(q).ln()
        } else {
            (qpow(q, (alpha - 1.0) * n as f64) - qpow(q, (alpha - 1.0) * j as f64)).abs()
        };
        s += c * k * qpow(q, j as f64) * g.eval(j).abs();
    }
    s
}

/// Strict 1e-8 relative gate at q = 2; q = 3, 5 reported against the same
/// tolerance, with shells beyond it required to stay within `100 eps cond`.
fn left_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut limited: Vec<String> = Vec::new();
    let mut checked = [0usize; 2];
    let mut worst_q2 = 0.0f64;
    for q in QS {
        for alpha in ALPHAS {
            let d_min = (alpha - 1.0f64).max(0.0);
            let h_max = if alpha > 1.0 { alpha - 1.0 } else { alpha };
            for _ in 0..3 {
                let d = d_min + rng.gen_range(0.05..1.5);
                let h = rng.gen_range(0.0..0.9 * h_max);
                for shift in [0.0, 0.75] {
                    let u = power_family(q, d, h, shift);
                    let du = apply_dalpha(&u, alpha, (-25, 25)).map_err(|e| e.to_string())?;
                    let back = apply_ialpha(&du, alpha, (-12, 12)).map_err(|e| e.to_string())?;
                    for (n, b) in (-12..=12).zip(back.values()) {
                        let want = u.eval(n) - shift;
                        let tol = 1e-8 * u.eval(n).abs();
                        let err = (b - want).abs();
                        let case =
                            format!("q={q} alpha={alpha} d={d:.3} h={h:.3} shift={shift} n={n}");
                        checked[usize::from(q != 2)] += 1;
                        if q == 2 {
                            worst_q2 = worst_q2.max(err / tol);
                            if err > tol {
                                return Err(format!("{case}: {b} vs {want}"));
                            }
                        } else if err > tol {
                            let cond = ialpha_condition(&du, alpha, n);
                            if err > 100.0 * f64::EPSILON * cond {
                                return Err(format!(
                                    "{case}: {b} vs {want}, not explained by conditioning"
                                ));
                            }
                            limited.push(format!("q={q} alpha={alpha}"));
                        }
                    }
                }
            }
        }
    }
    let count = limited.len();
    limited.sort();
    limited.dedup();
    let supplement = if count == 0 {
        format!("q=3,5: all {} shells within 1e-8", checked[1])
    } else {
        format!(
            "q=3,5: {count} of {} shells exceed 1e-8 by forward conditioning of I^alpha ({})",
            checked[1],
            limited.join(", ")
        )
    };
    Ok(format!(
        "q=2: {} shells incl. constant shift, worst error / tol = {worst_q2:.2e}; {supplement}",
        checked[0]
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut log_cases = 0;
    let mut q2_cases = 0;
    for integral in [false, true] {
        for i in 0..100 {
            let q = QS[i % 3];
            let alpha = ALPHAS[(i / 3) % 5];
            log_cases += usize::from(alpha == 1.0);
            q2_cases += usize::from(q == 2);
            let v = random_compact(&mut rng, q);
            let (lo, hi) = (v.grid().k_min() - 3, v.grid().k_max() + 3);
            let (fast, slow) = if integral {
                let f = apply_ialpha(&v, alpha, (lo, hi)).map_err(|e| e.to_string())?;
                let s: Result<Vec<f64>, _> =
                    (lo..=hi).map(|n| ialpha_oracle(&v, alpha, n)).collect();
                (f, s.map_err(|e| e.to_string())?)
            } else {
                let f = apply_dalpha(&v, alpha, (lo, hi)).map_err(|e| e.to_string())?;
                let s: Result<Vec<f64>, _> =
                    (lo..=hi).map(|n| dalpha_oracle(&v, alpha, n)).collect();
                (f, s.map_err(|e| e.to_string())?)
            };
            let scale = sup(&slow);
            for (a, b) in fast.values().iter().zip(&slow) {
                let r = (a - b).abs() / (1e-10 * scale);
                worst = worst.max(r);
                if r > 1.0 {
                    return Err(format!(
                        "integral={integral} q={q} alpha={alpha}: {a} vs {b}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "200 cases ({q2_cases} with q=2, {log_cases} with alpha=1), worst error / tolerance = {worst:.2e}"
    ))
}

fn kernel_constants() -> Outcome {
    let mut worst = 0.0f64;
    for q in QS {
        for alpha in ALPHAS {
            for m in 0..=5u32 {
                for n in -6..6 {
                    let a = kernel_integral(alpha, m, q, n).map_err(|e| e.to_string())?;
                    let b = kernel_integral(alpha, m, q, n + 1).map_err(|e| e.to_string())?;
                    let want = qpow(q, alpha * f64::from(m + 1));
                    let r = (b / a - want).abs() / want;
                    worst = worst.max(r);
                    if r > 1e-10 {
                        return Err(format!(
                            "q={q} alpha={alpha} m={m} n={n}: ratio {} vs {want}",
                            b / a
                        ));
                    }
                }
            }
            let grid = RadialGrid::new(q, -1, 1).unwrap();
            let scaled: Vec<f64> = (0..=40u32)
                .map(|m| {
                    kernel_constant(alpha, m, &grid)
                        .map(|d| d.d_value * qpow(q, alpha * f64::from(m)))
                })
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let head = scaled[..=5].iter().cloned().fold(0.0, f64::max);
            if let Some(m) = scaled.iter().position(|&s| s > 1.1 * head) {
                return Err(format!(
                    "q={q} alpha={alpha}: d_m q^(alpha m) at m={m} exceeds 1.1 x head"
                ));
            }
        }
    }
    Ok(format!(
        "scaling ratios within {worst:.1e} relative; d_m q^(alpha m) bounded for m <= 40"
    ))
}

fn catalog(q: u32, alpha: f64) -> RhsSpec {
    RhsSpec::new(|r, x| 0.1 * x.tanh() * r.powi(-2).min(1.0), 0.1, 0.1)
        .unwrap()
        .with_shell_lipschitz(move |l| 0.1f64.min(qpow(q, -alpha * l as f64) / 2.0))
        .with_beta(alpha + 1.0)
}

fn frontier_for(q: u32, alpha: f64, f: f64) -> i64 {
    let c = bound_constant(alpha, q).unwrap();
    let mut n = 40;
    while c * f * qpow(q, alpha * n as f64) > 0.5 {
        n -= 1;
    }
    n
}

fn picard() -> Outcome {
    let (q, alpha) = (2, 0.5);
    let rhs = catalog(q, alpha);
    let p = CauchyProblem::new(q, alpha, 1.0).unwrap();
    let n = frontier_for(q, alpha, 0.1);
    let s = PicardSettings {
        frontier: n,
        k_min: None,
        tol: 1e-12,
        max_iter: 60,
    };
    let a = picard_solve(&rhs, &p, &s).map_err(|e| e.to_string())?;
    if a.rho > 0.5 {
        return Err(format!("rho = {}", a.rho));
    }
    let h = &a.picard_history;
    let floor = 64.0 * f64::EPSILON * (1.0 + sup(a.values()));
    let worst_ratio = h
        .windows(2)
        .filter(|w| w[1] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    if worst_ratio > a.rho * (1.0 + 1e-6) {
        return Err(format!(
            "difference ratio {worst_ratio} above rho {}",
            a.rho
        ));
    }
    let start: Vec<f64> = (0..a.values().len())
        .map(|i| 1.0 + 0.5 * (i as f64).sin())
        .collect();
    let s = PicardSettings {
        k_min: Some(a.k_min()),
        ..s
    };
    let b = picard_solve_from(&rhs, &p, &s, Some(&start)).map_err(|e| e.to_string())?;
    let gap = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if gap > 1e-10 {
        return Err(format!("restart differs by {gap:e}"));
    }
    Ok(format!(
        "N={n} rho={:.3} iterations={} worst ratio={worst_ratio:.3} restart gap={gap:.1e}",
        a.rho,
        h.len()
    ))
}

fn continuation() -> Outcome {
    let (q, alpha) = (2, 0.5);
    let rhs = catalog(q, alpha);
    let p = CauchyProblem::new(q, alpha, 1.0).unwrap();
    let n = frontier_for(q, alpha, 0.1);
    let s = PicardSettings {
        frontier: n,
        k_min: None,
        tol: 1e-12,
        max_iter: 60,
    };
    let local = picard_solve(&rhs, &p, &s).map_err(|e| e.to_string())?;
    let sol = continue_solution(&local, &rhs, 8, 1e-12, 60).map_err(|e| e.to_string())?;
    let worst_factor = sol
        .diagnostics
        .iter()
        .skip(local.values().len())
        .map(|d| d.contraction_factor)
        .fold(0.0, f64::max);
    if worst_factor > 0.5 {
        return Err(format!("contraction factor {worst_factor}"));
    }
    let mild = sup(&sol.mild_residuals(&rhs).map_err(|e| e.to_string())?);
    if mild > 1e-9 {
        return Err(format!("mild residual {mild:e}"));
    }
    let c = 0.3;
    let flat = RhsSpec::new(move |_, _| c, c, 0.0)
        .unwrap()
        .with_shell_lipschitz(|_| 0.0);
    let local = picard_solve(
        &flat,
        &p,
        &PicardSettings {
            frontier: 0,
            k_min: None,
            tol: 1e-12,
            max_iter: 60,
        },
    )
    .map_err(|e| e.to_string())?;
    let ext = continue_solution(&local, &flat, 8, 1e-12, 60).map_err(|e| e.to_string())?;
    let drift = ext
        .values()
        .iter()
        .map(|u| (u - 1.0).abs())
        .fold(0.0, f64::max);
    if drift > 1e-12 {
        return Err(format!("f = c drifts from u0 by {drift:e}"));
    }
    Ok(format!(
        "N={n} to k_max=8, worst factor={worst_factor:.3}, mild residual={mild:.1e}; f = c drift={drift:.1e}"
    ))
}

fn strict() -> Outcome {
    let (q, alpha) = (2, 0.5);
    let rhs = catalog(q, alpha);
    let p = CauchyProblem::new(q, alpha, 1.0).unwrap();
    let local = picard_solve(
        &rhs,
        &p,
        &PicardSettings {
            frontier: -2,
            k_min: None,
            tol: 1e-12,
            max_iter: 60,
        },
    )
    .map_err(|e| e.to_string())?;
    let sol = continue_solution(&local, &rhs, 14, 1e-12, 60).map_err(|e| e.to_string())?;
    let report = verify_strict(&sol, &rhs, (-6, 4), false).map_err(|e| e.to_string())?;
    let bound = 1e-8 * (1.0 + rhs.m_bound);
    if report.max_residual > bound {
        return Err(format!(
            "max residual {:e} above {bound:e}",
            report.max_residual
        ));
    }
    let c = 0.3;
    let flat = RhsSpec::new(move |_, _| c, c, 0.0)
        .unwrap()
        .with_shell_lipschitz(|_| 0.0);
    let local = picard_solve(
        &flat,
        &p,
        &PicardSettings {
            frontier: 0,
            k_min: None,
            tol: 1e-12,
            max_iter: 60,
        },
    )
    .map_err(|e| e.to_string())?;
    let ext = continue_solution(&local, &flat, 14, 1e-12, 60).map_err(|e| e.to_string())?;
    let forced = verify_strict(&ext, &flat, (-6, 4), true).map_err(|e| e.to_string())?;
    let off = forced
        .residuals
        .iter()
        .map(|r| (r - c).abs())
        .fold(0.0, f64::max);
    if off > 1e-10 {
        return Err(format!("f = c residual deviates from |c| by {off:e}"));
    }
    Ok(format!(
        "catalog max residual={:.2e} (bound {bound:.1e}); f = c residual |c| within {off:.1e}",
        report.max_residual
    ))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run_cli(args: &[&str], config: &Path) -> std::process::Output {
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

const MALFORMED: [&str; 20] = [
    "sin(",
    "sin(x",
    "1 +",
    "* x",
    "x ** 2",
    "(x",
    "x)",
    "2 ^",
    "min(1)",
    "foo(x)",
    "y",
    "l * x",
    "1..2",
    "x , r",
    "@x",
    "sin x",
    "tanh()",
    "max(1, 2, 3)",
    "3 4",
    "((x) + 1",
];

fn cli_determinism() -> Outcome {
    for (cmd, conf, csv) in [
        ("solve", "solve.conf", "solve.csv"),
        ("verify", "verify.conf", "verify.csv"),
    ] {
        let a = run_cli(&[cmd], &golden(conf));
        let b = run_cli(&[cmd], &golden(conf));
        if !a.status.success() || !b.status.success() {
            return Err(format!(
                "{cmd} failed: {}",
                String::from_utf8_lossy(&a.stderr)
            ));
        }
        if a.stdout != b.stdout {
            return Err(format!("{cmd}: two runs differ"));
        }
        if a.stdout != std::fs::read(golden(csv)).map_err(|e| e.to_string())? {
            return Err(format!("{cmd}: output differs from {csv}"));
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for text in MALFORMED {
        let cfg = dir.path().join("bad.conf");
        std::fs::write(
            &cfg,
            format!("q = 2\nalpha = 0.5\nu0 = 1\nM = 1\nF = 1\nrhs = {text}\n"),
        )
        .unwrap();
        let out = run_cli(&["solve"], &cfg);
        let err = String::from_utf8_lossy(&out.stderr);
        match out.status.code() {
            Some(4)
                if err.starts_with("error code=expression_parse ") && err.lines().count() == 1 => {}
            code => return Err(format!("{text:?}: exit {code:?}, stderr {err:?}")),
        }
    }
    Ok("solve and verify byte-identical across runs and equal to golden files; 20/20 malformed inputs exit 4".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        (
            "annihilation of constants",
            Duration::from_secs(1),
            annihilation,
        ),
        (
            "right inverse D I v = v",
            Duration::from_secs(10),
            right_inverse,
        ),
        (
            "left inverse I D u = u",
            Duration::from_secs(10),
            left_inverse,
        ),
        (
            "oracle equivalence",
            Duration::from_secs(30),
            oracle_equivalence,
        ),
        ("kernel constants", Duration::from_secs(1), kernel_constants),
        ("Picard convergence", Duration::from_secs(5), picard),
        ("continuation", Duration::from_secs(5), continuation),
        ("strict solution", Duration::from_secs(10), strict),
        (
            "CLI determinism and malformed input",
            Duration::from_secs(2),
            cli_determinism,
        ),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = t.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > limit => {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {} {name}: {msg} ({elapsed:.2?})", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg} ({elapsed:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
