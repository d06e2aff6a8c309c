//! Plain-text run configuration: one `key = value` per line, `#` starts a comment.
//!
//! ```text
//! m = 1
//! model = mode
//! n = 1          # or a range: n = 0..2
//! N = 16
//! degree = all
//! eps_start = 1
//! eps_ratio = 0.5
//! eps_count = 9
//! K = 8
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::NullTol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Invariant,
    Mode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DegreeChoice {
    All,
    One(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub m: usize,
    pub model: ModelChoice,
    /// Inclusive range of Reeb modes; a single mode has `lo == hi`.
    pub n: (i64, i64),
    #[serde(rename = "N")]
    pub grid: usize,
    pub degree: DegreeChoice,
    pub eps_start: f64,
    pub eps_ratio: f64,
    pub eps_count: usize,
    #[serde(rename = "K")]
    pub count: usize,
    /// `None`: the model default (relative `1e-8` exact, gap rule below `1e-3` on grids).
    pub tol_nullspace: Option<f64>,
    pub tol_tracking: f64,
    pub class_band: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            m: 1,
            model: ModelChoice::Invariant,
            n: (1, 1),
            grid: 16,
            degree: DegreeChoice::All,
            eps_start: 1.0,
            eps_ratio: 0.5,
            eps_count: 9,
            count: 8,
            tol_nullspace: None,
            tol_tracking: 0.5,
            class_band: 0.3,
            seed: 0,
            out: None,
        }
    }
}

const MAX_M: usize = 3;

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::Config { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(line, format!("{key}: cannot parse {v:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body.split_once('=').ok_or_else(|| bad(line, format!("expected key = value, got {body:?}")))?;
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key {key}")));
            }
            match key {
                "m" => c.m = num(line, key, val)?,
                "model" => {
                    c.model = match val {
                        "invariant" => ModelChoice::Invariant,
                        "mode" => ModelChoice::Mode,
                        _ => return Err(bad(line, format!("model must be invariant or mode, got {val:?}"))),
                    }
                }
                "n" => {
                    c.n = match val.split_once("..") {
                        Some((a, b)) => (num(line, key, a.trim())?, num(line, key, b.trim())?),
                        None => {
                            let n: f64 = num(line, key, val)?;
                            if n.fract() != 0.0 {
                                return Err(bad(line, Error::FluxQuantization(n).to_string()));
                            }
                            (n as i64, n as i64)
                        }
                    }
                }
                "N" => c.grid = num(line, key, val)?,
                "degree" => {
                    c.degree = if val == "all" { DegreeChoice::All } else { DegreeChoice::One(num(line, key, val)?) }
                }
                "eps_start" => c.eps_start = num(line, key, val)?,
                "eps_ratio" => c.eps_ratio = num(line, key, val)?,
                "eps_count" => c.eps_count = num(line, key, val)?,
                "K" => c.count = num(line, key, val)?,
                "tol_nullspace" => c.tol_nullspace = if val == "auto" { None } else { Some(num(line, key, val)?) },
                "tol_tracking" => c.tol_tracking = num(line, key, val)?,
                "class_band" => c.class_band = num(line, key, val)?,
                "seed" => c.seed = num(line, key, val)?,
                "out" => c.out = Some(PathBuf::from(val)),
                _ => return Err(bad(line, format!("unknown key {key:?}"))),
            }
            c.check_field(key).map_err(|msg| bad(line, msg))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn check_field(&self, key: &str) -> std::result::Result<(), String> {
        let ok = match key {
            "m" => (1..=MAX_M).contains(&self.m),
            "n" => self.n.0 <= self.n.1,
            "N" => self.grid >= 4 && self.grid % 2 == 0,
            "eps_start" => self.eps_start > 0.0 && self.eps_start.is_finite(),
            "eps_ratio" => self.eps_ratio > 0.0 && self.eps_ratio < 1.0,
            "eps_count" => self.eps_count >= 1,
            "K" => self.count >= 1,
            "tol_nullspace" => self.tol_nullspace.is_none_or(|t| t > 0.0 && t < 1.0),
            "tol_tracking" => self.tol_tracking > 0.0 && self.tol_tracking <= 1.0,
            "class_band" => self.class_band > 0.0 && self.class_band < 1.0,
            _ => true,
        };
        if ok {
            return Ok(());
        }
        Err(match key {
            "m" => format!("m must be in 1..={MAX_M}"),
            "n" => "n range must be lo..hi with lo <= hi".into(),
            "N" => format!("N must be even and >= 4, got {}", self.grid),
            "eps_start" => "eps_start must be positive".into(),
            "eps_ratio" => "eps_ratio must lie in (0, 1)".into(),
            "eps_count" => "eps_count must be >= 1 (empty schedule)".into(),
            "K" => "K must be >= 1".into(),
            "tol_nullspace" => "tol_nullspace must lie in (0, 1) or be auto".into(),
            "tol_tracking" => "tol_tracking must lie in (0, 1]".into(),
            _ => "class_band must lie in (0, 1)".into(),
        })
    }

    /// Whole-config checks, reported against line 0.
    pub fn validate(&self) -> Result<()> {
        for key in ["m", "n", "N", "eps_start", "eps_ratio", "eps_count", "K", "tol_nullspace", "tol_tracking", "class_band"] {
            self.check_field(key).map_err(|msg| bad(0, msg))?;
        }
        if let DegreeChoice::One(k) = self.degree {
            if k > 2 * self.m + 1 {
                return Err(bad(0, format!("degree {k} exceeds top degree {}", 2 * self.m + 1)));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let model = match self.model {
            ModelChoice::Invariant => "invariant",
            ModelChoice::Mode => "mode",
        };
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "model = {model}");
        if self.n.0 == self.n.1 {
            let _ = writeln!(s, "n = {}", self.n.0);
        } else {
            let _ = writeln!(s, "n = {}..{}", self.n.0, self.n.1);
        }
        let _ = writeln!(s, "N = {}", self.grid);
        match self.degree {
            DegreeChoice::All => s.push_str("degree = all\n"),
            DegreeChoice::One(k) => {
                let _ = writeln!(s, "degree = {k}");
            }
        }
        let _ = writeln!(s, "eps_start = {:?}", self.eps_start);
        let _ = writeln!(s, "eps_ratio = {:?}", self.eps_ratio);
        let _ = writeln!(s, "eps_count = {}", self.eps_count);
        let _ = writeln!(s, "K = {}", self.count);
        match self.tol_nullspace {
            None => s.push_str("tol_nullspace = auto\n"),
            Some(t) => {
                let _ = writeln!(s, "tol_nullspace = {t:?}");
            }
        }
        let _ = writeln!(s, "tol_tracking = {:?}", self.tol_tracking);
        let _ = writeln!(s, "class_band = {:?}", self.class_band);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s
    }

    pub fn degrees(&self) -> Vec<usize> {
        match self.degree {
            DegreeChoice::All => (0..=2 * self.m + 1).collect(),
            DegreeChoice::One(k) => vec![k],
        }
    }

    pub fn modes(&self) -> Vec<i64> {
        (self.n.0..=self.n.1).collect()
    }

    pub fn null_tol(&self) -> NullTol {
        match (self.model, self.tol_nullspace) {
            (ModelChoice::Invariant, None) => NullTol::INVARIANT,
            (ModelChoice::Invariant, Some(t)) => NullTol::Relative(t),
            (ModelChoice::Mode, None) => NullTol::GRID,
            (ModelChoice::Mode, Some(t)) => NullTol::Gap { ceiling: t, min_ratio: 100.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("m = 1\n\nfoo = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn odd_grid_rejected() {
        let err = RunConfig::parse("model = mode\nN = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn fractional_mode_rejected() {
        assert!(RunConfig::parse("n = 0.5").is_err());
    }

    #[test]
    fn range_and_overrides() {
        let c = RunConfig::parse("model = mode\nn = -1..2  # sectors\ndegree = 2\nout = runs/a\n").unwrap();
        assert_eq!(c.modes(), vec![-1, 0, 1, 2]);
        assert_eq!(c.degrees(), vec![2]);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }
}
