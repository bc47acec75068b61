//! Flat `key = value` study configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use eplp_core::eplp::{DEFAULT_DECAY_CONSTANT, EplpConfig};
use eplp_core::saddle::DEFAULT_TOL;
use eplp_core::{ExtensionMode, Family, ProblemId};

use crate::CliError;

/// Which solvers a study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sfem,
    Eplp,
    Both,
}

impl Method {
    pub fn runs_sfem(self) -> bool {
        matches!(self, Method::Sfem | Method::Both)
    }

    pub fn runs_eplp(self) -> bool {
        matches!(self, Method::Eplp | Method::Both)
    }
}

impl FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "sfem" => Ok(Method::Sfem),
            "eplp" => Ok(Method::Eplp),
            "both" => Ok(Method::Both),
            _ => Err(CliError::Config(format!("unknown method `{s}` (sfem, eplp or both)"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sfem => "sfem",
            Method::Eplp => "eplp",
            Method::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Config(format!("unknown format `{s}` (csv or json)"))),
        }
    }
}

/// Iteration count of a row: fixed, or from the decay formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationSpec {
    Auto,
    Fixed(usize),
}

/// One `(n_coarse, m_refine, K)` row: `H = 1/n_coarse`, `h = H/m_refine`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSpec {
    pub n_coarse: usize,
    pub m_refine: usize,
    pub k: IterationSpec,
}

impl RowSpec {
    pub fn coarse_h(&self) -> f64 {
        1.0 / self.n_coarse as f64
    }

    pub fn fine_h(&self) -> f64 {
        1.0 / (self.n_coarse * self.m_refine) as f64
    }
}

impl FromStr for RowSpec {
    type Err = CliError;

    /// `n:m:K`, `n:m:auto` or `n:m`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("row `{s}` is not of the form n:m:K"));
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let n_coarse = parts[0].parse().map_err(|_| bad())?;
        let m_refine = parts[1].parse().map_err(|_| bad())?;
        let k = match parts.get(2) {
            None | Some(&"auto") => IterationSpec::Auto,
            Some(k) => IterationSpec::Fixed(k.parse().map_err(|_| bad())?),
        };
        if n_coarse == 0 || m_refine == 0 || k == IterationSpec::Fixed(0) {
            return Err(bad());
        }
        Ok(RowSpec { n_coarse, m_refine, k })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub problem: ProblemId,
    pub family: Family,
    pub method: Method,
    pub rows: Vec<RowSpec>,
    pub nu: f64,
    pub c: f64,
    pub tol: f64,
    /// `None` uses every core.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

const KEYS: [&str; 10] = ["problem", "family", "method", "rows", "nu", "c", "tol", "threads", "output", "format"];

impl StudyConfig {
    /// Parses `key = value` lines; `#` starts a comment. `problem` and
    /// `rows` are required.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = StudyConfig {
            problem: ProblemId::Polynomial,
            family: Family::TaylorHood,
            method: Method::Eplp,
            rows: Vec::new(),
            nu: 1.0,
            c: DEFAULT_DECAY_CONSTANT,
            tol: DEFAULT_TOL,
            threads: None,
            output: None,
            format: Format::Csv,
        };
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if seen.contains(&key) {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            seen.push(key);
            let num = |v: &str| -> Result<f64, CliError> {
                v.parse().map_err(|_| CliError::Config(format!("{key}: `{v}` is not a number")))
            };
            match key {
                "problem" => cfg.problem = value.parse()?,
                "family" => cfg.family = value.parse()?,
                "method" => cfg.method = value.parse()?,
                "rows" => {
                    cfg.rows = value.split(',').filter(|r| !r.trim().is_empty()).map(str::parse).collect::<Result<_, _>>()?
                }
                "nu" => cfg.nu = num(value)?,
                "c" => cfg.c = num(value)?,
                "tol" => cfg.tol = num(value)?,
                "threads" => {
                    cfg.threads = match value {
                        "max" | "auto" => None,
                        v => Some(v.parse().map_err(|_| CliError::Config(format!("threads: `{v}` is not a count")))?),
                    }
                }
                "output" => cfg.output = Some(PathBuf::from(value)),
                "format" => cfg.format = value.parse()?,
                _ => unreachable!(),
            }
        }
        for required in ["problem", "rows"] {
            if !seen.contains(&required) {
                return Err(CliError::Config(format!("missing key `{required}`")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rows.is_empty() {
            return Err(CliError::Config("rows must not be empty".into()));
        }
        if self.method.runs_eplp() {
            if let Some(r) = self.rows.iter().find(|r| r.m_refine < 2) {
                return Err(CliError::Config(format!("eplp rows need m_refine >= 2, got {}", r.m_refine)));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if self.nu.is_nan() || self.nu <= 0.0 {
            return Err(CliError::Config(format!("nu must be positive, got {}", self.nu)));
        }
        Ok(())
    }

    /// Solver configuration for one row.
    pub fn eplp_config(&self, row: &RowSpec, extension: ExtensionMode) -> EplpConfig<f64> {
        let mut c = EplpConfig::new(row.n_coarse, row.m_refine, self.family);
        c.nu = self.nu;
        c.c = self.c;
        c.tol = self.tol;
        c.threads = self.threads;
        c.extension = extension;
        c.k_override = match row.k {
            IterationSpec::Auto => None,
            IterationSpec::Fixed(k) => Some(k),
        };
        c
    }
}

impl FromStr for StudyConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        StudyConfig::parse(s)
    }
}

/// Shipped row lists with the solver settings they were tuned for.
pub const PRESETS: [(&str, &str); 4] = [
    ("problem1-h1", include_str!("../presets/problem1-h1.conf")),
    ("problem1-l2", include_str!("../presets/problem1-l2.conf")),
    ("problem2-th", include_str!("../presets/problem2-th.conf")),
    ("problem2-mini", include_str!("../presets/problem2-mini.conf")),
];

pub fn preset(name: &str) -> Result<StudyConfig, CliError> {
    let text = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
    StudyConfig::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_parse() {
        let r: RowSpec = "16:4:2".parse().unwrap();
        assert_eq!(r, RowSpec { n_coarse: 16, m_refine: 4, k: IterationSpec::Fixed(2) });
        assert_eq!("8:2:auto".parse::<RowSpec>().unwrap().k, IterationSpec::Auto);
        assert_eq!("8:2".parse::<RowSpec>().unwrap().k, IterationSpec::Auto);
        for bad in ["16", "16:x:2", "0:2:1", "4:2:0", "1:2:3:4"] {
            assert!(bad.parse::<RowSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_parse_and_errors() {
        let c = StudyConfig::parse("problem = problem2\nfamily = mini # comment\nrows = 4:2:1, 8:2:auto\nthreads = 2\nformat = json\n").unwrap();
        assert_eq!(c.problem, ProblemId::Trigonometric);
        assert_eq!(c.family, Family::Mini);
        assert_eq!(c.rows.len(), 2);
        assert_eq!(c.threads, Some(2));
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.method, Method::Eplp);

        assert!(StudyConfig::parse("rows = 4:2:1").is_err());
        assert!(StudyConfig::parse("problem = problem1").is_err());
        assert!(StudyConfig::parse("problem = problem1\nrows = ").is_err());
        assert!(StudyConfig::parse("problem = problem1\nrows = 4:1:1").is_err());
        assert!(StudyConfig::parse("problem = problem1\nmethod = sfem\nrows = 4:1").is_ok());
        assert!(StudyConfig::parse("problem = problem1\nrows = 4:2\nspeed = 3").is_err());
        assert!(StudyConfig::parse("problem = problem1\nrows = 4:2\nrows = 4:2").is_err());
        assert!(StudyConfig::parse("problem = problem9\nrows = 4:2").is_err());
    }

    #[test]
    fn presets_parse_with_pinned_iteration_counts() {
        for (name, _) in PRESETS {
            let c = preset(name).unwrap();
            assert!(c.rows.iter().all(|r| matches!(r.k, IterationSpec::Fixed(_))), "{name}");
        }
        let h1 = preset("problem1-h1").unwrap();
        assert_eq!(h1.rows[1], RowSpec { n_coarse: 25, m_refine: 5, k: IterationSpec::Fixed(3) });
        assert!(preset("nope").is_err());
    }
}
