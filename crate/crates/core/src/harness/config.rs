//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! kind = consistency
//! eps = 0.5, 0.2, 0.1, 0.05
//! replications = 400
//! ```
//!
//! Lists are comma-separated. Overrides (command-line flags) are applied to
//! the raw key map before validation, so they go through the same parser.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::hermite::{GeneratorKind, HermiteSpec, DEFAULT_REFINEMENT};
use crate::ou::OuSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Consistency,
    LimitDist,
    Maximal,
    CovarianceAudit,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Consistency,
        ExperimentKind::LimitDist,
        ExperimentKind::Maximal,
        ExperimentKind::CovarianceAudit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::LimitDist => "limit-dist",
            ExperimentKind::Maximal => "maximal",
            ExperimentKind::CovarianceAudit => "covariance-audit",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown experiment kind `{s}`; valid kinds: {}",
                    names.join(", ")
                ))
            })
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keys accepted in configuration files and as overrides.
pub const KEYS: &[&str] = &[
    "kind",
    "theta0",
    "x0",
    "q",
    "H",
    "n",
    "m",
    "generator",
    "eps",
    "delta",
    "T",
    "p",
    "replications",
    "ks_samples",
    "seed",
    "out_dir",
    "theta_lo",
    "theta_hi",
    "coarse_points",
    "refine_tol",
];

/// Unvalidated key map, remembering where each value came from.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
}

impl RawConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{origin}:{}: expected `key = value`",
                    idx + 1
                )));
            };
            raw.insert(key.trim(), value.trim(), format!("{origin}:{}", idx + 1))?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn insert(&mut self, key: &str, value: &str, origin: String) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "{origin}: unknown key `{key}`; valid keys: {}",
                KEYS.join(", ")
            )));
        }
        self.entries
            .insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    /// Sets `key`, replacing any value read from a file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.insert(key, value, format!("--{key}"))
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((v, origin)) = self.entries.get(key) else {
            return Ok(None);
        };
        v.parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{origin}: cannot parse `{key}` from `{v}`")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some((v, origin)) = self.entries.get(key) else {
            return Ok(None);
        };
        let items: std::result::Result<Vec<f64>, _> = v
            .split(',')
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        match items {
            Ok(items) if !items.is_empty() => Ok(Some(items)),
            Ok(_) => Err(Error::Config(format!(
                "{origin}: `{key}` must not be empty"
            ))),
            Err(_) => Err(Error::Config(format!(
                "{origin}: cannot parse `{key}` from `{v}`"
            ))),
        }
    }
}

/// A validated experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub theta0: f64,
    pub x0: f64,
    pub q: u32,
    pub h: f64,
    pub n: usize,
    pub m: usize,
    pub generator: GeneratorKind,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub replications: usize,
    pub ks_samples: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub coarse_points: usize,
    pub refine_tol: f64,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (eps, replications) = match kind {
            ExperimentKind::Consistency => (vec![0.5, 0.2, 0.1, 0.05], 400),
            ExperimentKind::LimitDist => (vec![1e-2, 1e-3], 200),
            ExperimentKind::Maximal => (vec![0.1], 2000),
            ExperimentKind::CovarianceAudit => (vec![0.1], 4000),
        };
        ExperimentConfig {
            kind,
            theta0: 1.0,
            x0: 1.0,
            q: 1,
            h: 0.7,
            n: 512,
            m: DEFAULT_REFINEMENT,
            generator: GeneratorKind::Auto,
            eps,
            delta: vec![0.5],
            t_values: vec![1.0, 2.0, 4.0],
            p_values: vec![1.0, 2.0],
            replications,
            ks_samples: 500,
            seed: 1,
            out_dir: PathBuf::from("."),
            theta_lo: -2.0,
            theta_hi: 4.0,
            coarse_points: EstimatorConfig::DEFAULT_COARSE_POINTS,
            refine_tol: EstimatorConfig::DEFAULT_REFINE_TOL,
        }
    }

    /// Builds and validates a configuration. `kind` must be set either in
    /// `raw` or through `kind`; `theta_lo`/`theta_hi` default to `θ0 ∓ 3`.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let kind: ExperimentKind = raw
            .get("kind")
            .ok_or_else(|| Error::Config("missing `kind`".into()))?
            .parse()?;
        let mut c = Self::defaults(kind);
        macro_rules! take {
            ($field:expr, $key:literal) => {
                if let Some(v) = raw.value($key)? {
                    $field = v;
                }
            };
        }
        take!(c.theta0, "theta0");
        take!(c.x0, "x0");
        take!(c.q, "q");
        take!(c.h, "H");
        take!(c.n, "n");
        take!(c.m, "m");
        take!(c.replications, "replications");
        take!(c.ks_samples, "ks_samples");
        take!(c.seed, "seed");
        take!(c.coarse_points, "coarse_points");
        take!(c.refine_tol, "refine_tol");
        if let Some(g) = raw.get("generator") {
            c.generator = g.parse()?;
        }
        if let Some(d) = raw.get("out_dir") {
            c.out_dir = PathBuf::from(d);
        }
        if let Some(v) = raw.list("eps")? {
            c.eps = v;
        }
        if let Some(v) = raw.list("delta")? {
            c.delta = v;
        }
        if let Some(v) = raw.list("T")? {
            c.t_values = v;
        }
        if let Some(v) = raw.list("p")? {
            c.p_values = v;
        }
        c.theta_lo = raw.value("theta_lo")?.unwrap_or(c.theta0 - 3.0);
        c.theta_hi = raw.value("theta_hi")?.unwrap_or(c.theta0 + 3.0);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.hermite()?;
        if !self.theta0.is_finite() || !self.x0.is_finite() {
            return Err(Error::param("theta0", "theta0 and x0 must be finite"));
        }
        if self.replications < 1 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        if self.n < 2 {
            return Err(Error::param("n", "must be at least 2"));
        }
        if self.m < 1 {
            return Err(Error::param("m", "must be at least 1"));
        }
        for &e in &self.eps {
            OuSpec::new(self.theta0, e, self.x0)?;
        }
        if self.delta.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::param("delta", "all values must be positive"));
        }
        for &t in &self.t_values {
            let steps = t * self.n as f64;
            if !(t > 0.0) || (steps - steps.round()).abs() > 1e-9 {
                return Err(Error::param(
                    "T",
                    format!("T·n must be a positive integer, got T = {t}"),
                ));
            }
        }
        if self.p_values.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::param("p", "moments must be positive"));
        }
        let est = self.estimator()?;
        if !est.contains(self.theta0) {
            return Err(Error::param(
                "theta0",
                "must lie inside [theta_lo, theta_hi]",
            ));
        }
        match self.kind {
            ExperimentKind::LimitDist => {
                if self.x0 == 0.0 {
                    return Err(Error::param(
                        "x0",
                        "must be nonzero for the limit experiment",
                    ));
                }
                if self.ks_samples < 1 {
                    return Err(Error::param("ks_samples", "must be at least 1"));
                }
            }
            ExperimentKind::Consistency if self.x0 == 0.0 => {
                return Err(Error::param(
                    "x0",
                    "must be nonzero: the drift is not identifiable",
                ));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn hermite(&self) -> Result<HermiteSpec> {
        HermiteSpec::new(self.q, self.h)
    }

    pub fn estimator(&self) -> Result<EstimatorConfig> {
        EstimatorConfig::new(
            self.theta_lo,
            self.theta_hi,
            self.coarse_points,
            self.refine_tol,
        )
    }

    /// Resolved settings as `key=value` lines, in [`KEYS`] order.
    pub fn to_lines(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        vec![
            format!("kind={}", self.kind),
            format!("theta0={}", self.theta0),
            format!("x0={}", self.x0),
            format!("q={}", self.q),
            format!("H={}", self.h),
            format!("n={}", self.n),
            format!("m={}", self.m),
            format!("generator={}", self.generator),
            format!("eps={}", list(&self.eps)),
            format!("delta={}", list(&self.delta)),
            format!("T={}", list(&self.t_values)),
            format!("p={}", list(&self.p_values)),
            format!("replications={}", self.replications),
            format!("ks_samples={}", self.ks_samples),
            format!("seed={}", self.seed),
            format!("theta_lo={}", self.theta_lo),
            format!("theta_hi={}", self.theta_hi),
            format!("coarse_points={}", self.coarse_points),
            format!("refine_tol={}", self.refine_tol),
        ]
    }
}
