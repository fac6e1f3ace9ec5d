//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment. Later pairs win, so command-line
//! overrides are applied by appending them after the file contents.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::assembly::{SolverConfig, TimeWeighting};
use crate::constitutive::MaterialLaw;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub order: usize,
    pub t_order: usize,
    pub dt: f64,
    pub t_final: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho0: f64,
    pub p_ref: f64,
    pub tol: f64,
    pub max_picard: usize,
    pub relaxation: f64,
    pub snapshot_times: Vec<f64>,
    pub out_dir: PathBuf,
    pub sample_resolution: usize,
    pub time_weighting: Option<TimeWeighting>,
    pub quad_points: Option<usize>,
}

pub const KEYS: &[&str] = &[
    "order",
    "t_order",
    "dt",
    "t_final",
    "alpha",
    "gamma",
    "rho0",
    "p_ref",
    "tol",
    "max_picard",
    "relaxation",
    "snapshots",
    "out_dir",
    "sample_resolution",
    "time_weighting",
    "quad_points",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

/// Parses a comma-separated list of numbers; empty input gives an empty list.
pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Splits config text into `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", lineno + 1),
                format!("expected key=value, got `{line}`"),
            )
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Resolves pairs in order on top of the defaults, then validates.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self> {
        let mut alpha = None;
        let mut c = RunConfig {
            order: 5,
            t_order: 1,
            dt: 0.01,
            t_final: 7.0,
            alpha: f64::NAN,
            gamma: 1.4,
            rho0: 1.25,
            p_ref: 1.0,
            tol: 1e-12,
            max_picard: 50,
            relaxation: 1.0,
            snapshot_times: Vec::new(),
            out_dir: PathBuf::from("out"),
            sample_resolution: 40,
            time_weighting: None,
            quad_points: None,
        };
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref());
            match k {
                "order" => c.order = parse_value(k, v)?,
                "t_order" => c.t_order = parse_value(k, v)?,
                "dt" => c.dt = parse_value(k, v)?,
                "t_final" => c.t_final = parse_value(k, v)?,
                "alpha" => alpha = Some(parse_value(k, v)?),
                "gamma" => c.gamma = parse_value(k, v)?,
                "rho0" => c.rho0 = parse_value(k, v)?,
                "p_ref" => c.p_ref = parse_value(k, v)?,
                "tol" => c.tol = parse_value(k, v)?,
                "max_picard" => c.max_picard = parse_value(k, v)?,
                "relaxation" => c.relaxation = parse_value(k, v)?,
                "snapshots" => c.snapshot_times = parse_list(k, v)?,
                "out_dir" => c.out_dir = PathBuf::from(v),
                "sample_resolution" => c.sample_resolution = parse_value(k, v)?,
                "time_weighting" => {
                    c.time_weighting = match v {
                        "auto" => None,
                        other => Some(TimeWeighting::parse(other).ok_or_else(|| {
                            Error::config(k, "expected gauss, discrete-gradient or auto")
                        })?),
                    }
                }
                "quad_points" => c.quad_points = Some(parse_value(k, v)?),
                _ => return Err(Error::config(k, "unknown key")),
            }
        }
        c.alpha = alpha.ok_or_else(|| Error::config("alpha", "required, no default"))?;
        c.validate()?;
        Ok(c)
    }

    /// Config text followed by overrides.
    pub fn parse(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend_from_slice(overrides);
        Self::from_pairs(&pairs)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        };
        if self.order < 1 {
            return Err(Error::config("order", "must be at least 1"));
        }
        if self.t_order < 1 {
            return Err(Error::config("t_order", "must be at least 1"));
        }
        pos("dt", self.dt)?;
        pos("t_final", self.t_final)?;
        pos("rho0", self.rho0)?;
        pos("p_ref", self.p_ref)?;
        pos("tol", self.tol)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be non-negative"));
        }
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "must exceed 1"));
        }
        if self.max_picard < 1 {
            return Err(Error::config("max_picard", "must be at least 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::config("relaxation", "must lie in (0, 1]"));
        }
        if self.sample_resolution < 2 {
            return Err(Error::config("sample_resolution", "must be at least 2"));
        }
        if self.quad_points == Some(0) {
            return Err(Error::config("quad_points", "must be positive"));
        }
        if self.time_weighting == Some(TimeWeighting::DiscreteGradient) && self.t_order != 1 {
            return Err(Error::config(
                "time_weighting",
                "discrete-gradient weighting needs t_order = 1",
            ));
        }
        self.n_steps()?;
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final).contains(&t) {
                return Err(Error::config(
                    "snapshots",
                    format!("time {t} outside [0, {}]", self.t_final),
                ));
            }
        }
        Ok(())
    }

    /// `t_final / dt`, which must be an integer to within half an ulp.
    pub fn n_steps(&self) -> Result<usize> {
        let r = self.t_final / self.dt;
        let n = r.round();
        let half_ulp = 0.5 * (f64::from_bits(r.to_bits() + 1) - r);
        if (r - n).abs() > half_ulp || n < 1.0 {
            return Err(Error::config(
                "t_final",
                format!(
                    "t_final / dt = {r} is not an integer step count (t_final = {}, dt = {})",
                    self.t_final, self.dt
                ),
            ));
        }
        Ok(n as usize)
    }

    /// Snapshot times snapped to slab indices, sorted and deduplicated.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.n_steps().unwrap_or(0);
        let mut steps: Vec<usize> = self
            .snapshot_times
            .iter()
            .map(|&t| ((t / self.dt).round() as usize).min(n))
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    pub fn material(&self) -> Result<MaterialLaw> {
        MaterialLaw::with_alpha(self.rho0, self.gamma, self.p_ref, self.alpha)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            tol: self.tol,
            max_picard: self.max_picard,
            relaxation: self.relaxation,
            time_weighting: self.time_weighting,
            quad_points: self.quad_points,
        }
    }

    /// Resolved configuration as `key=value` lines, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| {
            v.iter()
                .map(|t| format!("{t:?}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(s, "order={}", self.order);
        let _ = writeln!(s, "t_order={}", self.t_order);
        let _ = writeln!(s, "dt={:?}", self.dt);
        let _ = writeln!(s, "t_final={:?}", self.t_final);
        let _ = writeln!(s, "alpha={:?}", self.alpha);
        let _ = writeln!(s, "gamma={:?}", self.gamma);
        let _ = writeln!(s, "rho0={:?}", self.rho0);
        let _ = writeln!(s, "p_ref={:?}", self.p_ref);
        let _ = writeln!(s, "tol={:?}", self.tol);
        let _ = writeln!(s, "max_picard={}", self.max_picard);
        let _ = writeln!(s, "relaxation={:?}", self.relaxation);
        let _ = writeln!(s, "snapshots={}", list(&self.snapshot_times));
        let _ = writeln!(s, "out_dir={}", self.out_dir.display());
        let _ = writeln!(s, "sample_resolution={}", self.sample_resolution);
        let tw = self
            .time_weighting
            .unwrap_or_else(|| TimeWeighting::default_for(self.t_order));
        let _ = writeln!(s, "time_weighting={}", tw.name());
        let _ = writeln!(s, "quad_points={}", self.quad_points.unwrap_or(self.order + 3));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn alpha_is_required() {
        let err = RunConfig::parse("", &[]).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "alpha"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn defaults() {
        let c = RunConfig::parse("alpha = 0.85\n", &[]).unwrap();
        assert_eq!((c.order, c.t_order), (5, 1));
        assert_eq!((c.dt, c.t_final, c.gamma, c.rho0, c.p_ref, c.tol), (0.01, 7.0, 1.4, 1.25, 1.0, 1e-12));
        assert_eq!(c.n_steps().unwrap(), 700);
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::parse("alpha=0.85\norder=5 # comment\n", &[ov("order", "3")]).unwrap();
        assert_eq!(c.order, 3);
        assert_eq!(c.alpha, 0.85);
    }

    #[test]
    fn non_integer_steps() {
        let err = RunConfig::parse("alpha=1\ndt=0.03\nt_final=0.10", &[]).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "t_final"));
    }

    #[test]
    fn errors_name_the_key() {
        for (text, key) in [
            ("alpha=1\nfoo=2", "foo"),
            ("alpha=1\norder=x", "order"),
            ("alpha=1\ngamma=0.9", "gamma"),
            ("alpha=1\nsnapshots=0.5,9", "snapshots"),
            ("alpha=1\nt_order=2\ntime_weighting=dg", "time_weighting"),
            ("alpha=-1", "alpha"),
        ] {
            match RunConfig::parse(text, &[]) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_pairs("just words").is_err());
    }

    #[test]
    fn round_trip_text() {
        let c = RunConfig::parse(
            "alpha=1.15\norder=3\nsnapshots=0,0.25,1\nt_final=1\ntime_weighting=gauss",
            &[],
        )
        .unwrap();
        let d = RunConfig::parse(&c.to_text(), &[]).unwrap();
        assert_eq!(c.order, d.order);
        assert_eq!(c.snapshot_times, d.snapshot_times);
        assert_eq!(d.time_weighting, Some(TimeWeighting::Gauss));
        assert_eq!(d.quad_points, Some(6));
    }

    #[test]
    fn snapshot_steps_snap() {
        let c = RunConfig::parse("alpha=1\nt_final=1\nsnapshots=0.5,0.004,0.506,1", &[]).unwrap();
        assert_eq!(c.snapshot_steps(), vec![0, 50, 51, 100]);
    }
}
