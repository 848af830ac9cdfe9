//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use padic_radial::TailSpec;

use crate::error::CliError;

const KNOWN_KEYS: &[&str] = &[
    "q",
    "alpha",
    "u0",
    "k_min",
    "k_max",
    "N",
    "tol",
    "max_iter",
    "rhs",
    "M",
    "F",
    "beta",
    "F_l",
    "input",
    "lower_tail",
    "upper_tail",
    "out_k_min",
    "out_k_max",
    "verify_lo",
    "verify_hi",
    "force_verify",
    "m_max",
    "samples",
    "output",
];

/// Either an explicit shell index or `auto`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shell {
    Auto,
    At(i64),
}

impl fmt::Display for Shell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shell::Auto => f.write_str("auto"),
            Shell::At(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub q: u32,
    pub alpha: f64,
    pub u0: f64,
    pub k_min: Shell,
    pub k_max: Option<i64>,
    pub frontier: Shell,
    pub tol: f64,
    pub max_iter: usize,
    pub rhs: Option<String>,
    pub m_bound: Option<f64>,
    pub lipschitz: Option<f64>,
    pub beta: Option<f64>,
    pub shell_lipschitz: Option<String>,
    pub input: Option<String>,
    pub lower_tail: TailSpec,
    pub upper_tail: TailSpec,
    pub out_k_min: Option<i64>,
    pub out_k_max: Option<i64>,
    pub verify_lo: Option<i64>,
    pub verify_hi: Option<i64>,
    pub force_verify: bool,
    pub m_max: u32,
    pub samples: usize,
    pub output: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("line {line}: {key} must be {what}, got {v:?}"))
            }),
        }
    }

    fn finite(&self, key: &str) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.parse(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(CliError::Config(format!("{key} must be finite"))),
            other => Ok(other),
        }
    }

    fn required<T>(&self, key: &str, v: Option<T>) -> Result<T, CliError> {
        v.ok_or_else(|| CliError::Config(format!("missing required key {key}")))
    }

    fn shell(&self, key: &str) -> Result<Shell, CliError> {
        match self.raw(key) {
            None | Some((_, "auto")) => Ok(Shell::Auto),
            Some(_) => Ok(Shell::At(
                self.parse(key, "an integer or auto")?.expect("present"),
            )),
        }
    }

    fn tail(&self, key: &str) -> Result<TailSpec, CliError> {
        match self.raw(key) {
            None => Ok(TailSpec::Zero),
            Some((line, v)) => {
                parse_tail(v).map_err(|m| CliError::Config(format!("line {line}: {key}: {m}")))
            }
        }
    }
}

fn parse_tail(text: &str) -> Result<TailSpec, String> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| -> Result<f64, String> {
        s.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("bad number {s:?}"))
    };
    match parts.as_slice() {
        ["zero"] => Ok(TailSpec::Zero),
        ["const", c] => Ok(TailSpec::Constant(num(c)?)),
        ["power", c, e] => Ok(TailSpec::PowerLaw {
            c: num(c)?,
            e: num(e)?,
        }),
        _ => Err(format!(
            "expected zero, const:<c> or power:<c>:<e>, got {text:?}"
        )),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }
}

impl std::str::FromStr for RunConfig {
    type Err = CliError;

    fn from_str(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {lineno}: expected key = value")))?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!(
                    "line {lineno}: unknown key {key:?}"
                )));
            }
            if value.is_empty() {
                return Err(CliError::Config(format!(
                    "line {lineno}: empty value for {key}"
                )));
            }
            if map
                .insert(key.to_string(), (lineno, value.to_string()))
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "line {lineno}: duplicate key {key}"
                )));
            }
        }
        let e = Entries { map };

        let q: Option<u32> = e.parse("q", "an integer prime power")?;
        let alpha = e.finite("alpha")?;
        let cfg = RunConfig {
            q: e.required("q", q)?,
            alpha: e.required("alpha", alpha)?,
            u0: e.finite("u0")?.unwrap_or(0.0),
            k_min: e.shell("k_min")?,
            k_max: e.parse("k_max", "an integer")?,
            frontier: e.shell("N")?,
            tol: e.finite("tol")?.unwrap_or(1e-12),
            max_iter: e.parse("max_iter", "a non-negative integer")?.unwrap_or(60),
            rhs: e.raw("rhs").map(|(_, v)| v.to_string()),
            m_bound: e.finite("M")?,
            lipschitz: e.finite("F")?,
            beta: e.finite("beta")?,
            shell_lipschitz: e.raw("F_l").map(|(_, v)| v.to_string()),
            input: e.raw("input").map(|(_, v)| v.to_string()),
            lower_tail: e.tail("lower_tail")?,
            upper_tail: e.tail("upper_tail")?,
            out_k_min: e.parse("out_k_min", "an integer")?,
            out_k_max: e.parse("out_k_max", "an integer")?,
            verify_lo: e.parse("verify_lo", "an integer")?,
            verify_hi: e.parse("verify_hi", "an integer")?,
            force_verify: e.parse("force_verify", "true or false")?.unwrap_or(false),
            m_max: e.parse("m_max", "a non-negative integer")?.unwrap_or(20),
            samples: e.parse("samples", "a non-negative integer")?.unwrap_or(200),
            output: e.raw("output").map(|(_, v)| PathBuf::from(v)),
        };
        if cfg.q < 2 {
            return Err(CliError::Config(format!(
                "q must be at least 2, got {}",
                cfg.q
            )));
        }
        if cfg.alpha <= 0.0 {
            return Err(CliError::Config(format!(
                "alpha must be positive, got {}",
                cfg.alpha
            )));
        }
        if cfg.tol <= 0.0 {
            return Err(CliError::Config(format!(
                "tol must be positive, got {}",
                cfg.tol
            )));
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_comments() {
        let cfg: RunConfig = "# catalog\nq = 2\nalpha=0.5   # order\nrhs = 0.1*tanh(x)\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.q, 2);
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.k_min, Shell::Auto);
        assert_eq!(cfg.frontier, Shell::Auto);
        assert_eq!(cfg.tol, 1e-12);
        assert_eq!(cfg.max_iter, 60);
        assert_eq!(cfg.m_max, 20);
        assert_eq!(cfg.rhs.as_deref(), Some("0.1*tanh(x)"));
        assert_eq!(cfg.lower_tail, TailSpec::Zero);
    }

    #[test]
    fn rejects_bad_lines() {
        for text in [
            "q = 2\nalpha = 0.5\nbogus = 1\n",
            "q = 2\nq = 3\nalpha = 1\n",
            "q = 2\nalpha\n",
            "q = 1\nalpha = 0.5\n",
            "q = 2\nalpha = -1\n",
            "q = 2\nalpha = 0.5\nk_min = low\n",
            "q = 2\nalpha = 0.5\nlower_tail = power:1\n",
            "alpha = 0.5\n",
            "q = 2\nalpha = nan\n",
        ] {
            assert!(
                matches!(text.parse::<RunConfig>(), Err(CliError::Config(_))),
                "{text:?}"
            );
        }
    }

    #[test]
    fn tail_forms() {
        assert_eq!(parse_tail("const:1.5"), Ok(TailSpec::Constant(1.5)));
        assert_eq!(
            parse_tail("power: 2 : -0.5"),
            Ok(TailSpec::PowerLaw { c: 2.0, e: -0.5 })
        );
        assert!(parse_tail("linear").is_err());
    }
}
