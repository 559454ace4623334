//! Uniform-grid sample paths and their CSV form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Where a path came from: the random stream and the generator that built it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub seed: u64,
    pub stream: u64,
    pub generator: String,
}

impl Provenance {
    pub fn new(seed: u64, stream: u64, generator: impl Into<String>) -> Self {
        Provenance {
            seed,
            stream,
            generator: generator.into(),
        }
    }

    /// Same stream, generator tag extended with a derivation step.
    pub fn derived(&self, step: &str) -> Self {
        Provenance {
            seed: self.seed,
            stream: self.stream,
            generator: format!("{}>{}", self.generator, step),
        }
    }
}

/// A process sampled at `t_i = i·T/n`, `i = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    t_max: f64,
    values: Vec<f64>,
    provenance: Option<Provenance>,
}

impl GridPath {
    pub fn new(t_max: f64, values: Vec<f64>, provenance: Option<Provenance>) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param(
                "t_max",
                format!("must be positive, got {t_max}"),
            ));
        }
        if values.len() < 2 {
            return Err(Error::param(
                "values",
                "a path needs at least two grid points",
            ));
        }
        Ok(GridPath {
            t_max,
            values,
            provenance,
        })
    }

    /// Zero path on the grid of `other`.
    pub fn zeros_like(other: &GridPath) -> GridPath {
        GridPath {
            t_max: other.t_max,
            values: vec![0.0; other.values.len()],
            provenance: None,
        }
    }

    pub(crate) fn from_parts(t_max: f64, values: Vec<f64>, provenance: Option<Provenance>) -> Self {
        debug_assert!(t_max > 0.0 && values.len() >= 2);
        GridPath {
            t_max,
            values,
            provenance,
        }
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Number of grid steps.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_max * i as f64 / self.n() as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.time(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    /// Index of the grid point at time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.t_max * self.n() as f64;
        let i = x.round();
        if i < 0.0 || i > self.n() as f64 || (x - i).abs() > 1e-9 {
            return None;
        }
        Some(i as usize)
    }

    /// Value at an on-grid time.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.index_of(t).map(|i| self.values[i])
    }

    pub fn same_grid(&self, other: &GridPath) -> bool {
        self.values.len() == other.values.len()
            && (self.t_max - other.t_max).abs() <= 1e-12 * self.t_max
    }

    /// CSV text: `#`-prefixed comment lines, a `t,value` header, then one row
    /// per grid point with 17 significant digits.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("t,value\n");
        for (t, v) in self.times().zip(&self.values) {
            let _ = writeln!(out, "{},{}", format_real(t), format_real(*v));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        fs::write(path, self.to_csv(comments)).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<GridPath> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    /// Parses the `t,value` format; errors carry a 1-based line number.
    pub fn parse_csv(text: &str) -> std::result::Result<GridPath, (usize, String)> {
        let mut header_seen = false;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            last_line = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line != "t,value" {
                    return Err((
                        idx + 1,
                        format!("expected header `t,value`, found `{line}`"),
                    ));
                }
                header_seen = true;
                continue;
            }
            let mut parts = line.split(',');
            let (Some(t), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err((idx + 1, "expected two comma-separated fields".into()));
            };
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| (idx + 1, format!("bad time `{t}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| (idx + 1, format!("bad value `{v}`")))?;
            times.push(t);
            values.push(v);
        }
        if !header_seen {
            return Err((last_line.max(1), "missing `t,value` header".into()));
        }
        if values.len() < 2 {
            return Err((last_line.max(1), "need at least two rows".into()));
        }
        let n = values.len() - 1;
        let t_max = times[n];
        if times[0].abs() > 1e-12 || !(t_max > 0.0) {
            return Err((last_line, "grid must start at t = 0 and increase".into()));
        }
        for (i, &t) in times.iter().enumerate() {
            let expected = t_max * i as f64 / n as f64;
            if (t - expected).abs() > 1e-9 * t_max.max(1.0) {
                return Err((0, format!("row {i}: time {t} is off the uniform grid")));
            }
        }
        Ok(GridPath::from_parts(t_max, values, None))
    }
}

/// Real number with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `values[i] = max_{j≤i} |input[j]|`.
pub fn running_max_abs(path: &GridPath) -> GridPath {
    let mut acc = 0.0f64;
    let values = path
        .values
        .iter()
        .map(|v| {
            acc = acc.max(v.abs());
            acc
        })
        .collect();
    GridPath {
        t_max: path.t_max,
        values,
        provenance: path.provenance.as_ref().map(|p| p.derived("running-max")),
    }
}

/// `sup_i |values[i]|`.
pub fn sup_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
