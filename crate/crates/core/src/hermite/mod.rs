//! Hermite processes `Z^{q,H}` on a uniform grid.
//!
//! Three generators are provided:
//!
//! * [`FbmGenerator`]: exact fractional Brownian motion (the `q = 1` case) from
//!   cumulated fractional Gaussian noise.
//! * [`PartialSumGenerator`]: normalized partial sums of `H_q(ξ_j)` where `ξ`
//!   is fractional Gaussian noise with Hurst index `H0`. This is the default
//!   for `q ≥ 2`. Normalization uses the exact finite-size variance so that
//!   `E[Z_1²] = 1` at every resolution.
//! * [`KernelGenerator`]: a direct discretization of the multiple Wiener
//!   integral representation, used as a slow cross-check.

mod fbm;
mod kernel;
mod partial_sum;

use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::noise::RngState;
use crate::path::GridPath;

pub use fbm::{simulate_fbm, FbmGenerator};
pub use kernel::{simulate_kernel, KernelConfig, KernelGenerator};
pub use partial_sum::{hermite_polynomial, simulate_partial_sum, PartialSumGenerator};

/// Default number of underlying noise points per output grid step.
pub const DEFAULT_REFINEMENT: usize = 32;

fn check_order_and_hurst(q: u32, h: f64) -> Result<()> {
    if q < 1 {
        return Err(Error::param("q", "order must be at least 1"));
    }
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::param("H", format!("must lie in (1/2, 1), got {h}")));
    }
    Ok(())
}

/// `H0 = 1 + (H − 1)/q`, the per-factor kernel exponent.
pub fn hermite_exponent(q: u32, h: f64) -> Result<f64> {
    check_order_and_hurst(q, h)?;
    Ok(1.0 + (h - 1.0) / q as f64)
}

/// `c(q,H) = sqrt(H(2H−1) / (q! β(H0−½, 2−2H0)^q))`, evaluated in log space.
pub fn hermite_constant(q: u32, h: f64) -> Result<f64> {
    let h0 = hermite_exponent(q, h)?;
    let (a, b) = (h0 - 0.5, 2.0 - 2.0 * h0);
    let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    let ln_fact: f64 = (1..=q).map(|k| (k as f64).ln()).sum();
    let ln_c2 = (h * (2.0 * h - 1.0)).ln() - ln_fact - q as f64 * ln_beta;
    Ok((0.5 * ln_c2).exp())
}

/// Order, self-similarity index and the derived constants of a Hermite process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermiteSpec {
    q: u32,
    h: f64,
    h0: f64,
    c: f64,
}

impl HermiteSpec {
    pub fn new(q: u32, h: f64) -> Result<Self> {
        Ok(HermiteSpec {
            q,
            h,
            h0: hermite_exponent(q, h)?,
            c: hermite_constant(q, h)?,
        })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn hurst(&self) -> f64 {
        self.h
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// `½(t^{2H} + s^{2H} − |t−s|^{2H})`.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        let e = 2.0 * self.h;
        0.5 * (t.abs().powf(e) + s.abs().powf(e) - (t - s).abs().powf(e))
    }
}

impl fmt::Display for HermiteSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q={} H={}", self.q, self.h)
    }
}

/// Which generator builds the Hermite paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GeneratorKind {
    /// fBm for `q = 1`, partial sums otherwise.
    #[default]
    Auto,
    Fbm,
    PartialSum,
    Kernel,
}

impl GeneratorKind {
    pub const NAMES: [&'static str; 4] = ["auto", "fbm", "partial-sum", "kernel"];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Auto => "auto",
            GeneratorKind::Fbm => "fbm",
            GeneratorKind::PartialSum => "partial-sum",
            GeneratorKind::Kernel => "kernel",
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(GeneratorKind::Auto),
            "fbm" => Ok(GeneratorKind::Fbm),
            "partial-sum" => Ok(GeneratorKind::PartialSum),
            "kernel" => Ok(GeneratorKind::Kernel),
            other => Err(Error::param(
                "generator",
                format!(
                    "unknown generator `{other}`; expected one of {}",
                    Self::NAMES.join(", ")
                ),
            )),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A prepared generator: all deterministic set-up is done once, and
/// [`sample`](PathSampler::sample) only draws randomness.
#[derive(Clone, Debug)]
pub enum PathSampler {
    Fbm(FbmGenerator),
    PartialSum(PartialSumGenerator),
    Kernel(KernelGenerator),
}

impl PathSampler {
    /// `m` is the partial-sum refinement factor; ignored by other generators.
    pub fn new(
        kind: GeneratorKind,
        spec: &HermiteSpec,
        n: usize,
        t_max: f64,
        m: usize,
    ) -> Result<Self> {
        let kind = match kind {
            GeneratorKind::Auto if spec.q() == 1 => GeneratorKind::Fbm,
            GeneratorKind::Auto => GeneratorKind::PartialSum,
            k => k,
        };
        match kind {
            GeneratorKind::Fbm => {
                if spec.q() != 1 {
                    return Err(Error::param("generator", "fbm generator requires q = 1"));
                }
                Ok(PathSampler::Fbm(FbmGenerator::new(spec.hurst(), n, t_max)?))
            }
            GeneratorKind::PartialSum => Ok(PathSampler::PartialSum(PartialSumGenerator::new(
                spec, n, m, t_max,
            )?)),
            GeneratorKind::Kernel => Ok(PathSampler::Kernel(KernelGenerator::new(
                spec,
                n,
                t_max,
                &KernelConfig::default(),
            )?)),
            GeneratorKind::Auto => unreachable!(),
        }
    }

    pub fn sample(&self, rng: &mut RngState) -> GridPath {
        match self {
            PathSampler::Fbm(g) => g.sample(rng),
            PathSampler::PartialSum(g) => g.sample(rng),
            PathSampler::Kernel(g) => g.sample(rng),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            PathSampler::Fbm(g) => g.n(),
            PathSampler::PartialSum(g) => g.n(),
            PathSampler::Kernel(g) => g.n(),
        }
    }

    pub fn t_max(&self) -> f64 {
        match self {
            PathSampler::Fbm(g) => g.t_max(),
            PathSampler::PartialSum(g) => g.t_max(),
            PathSampler::Kernel(g) => g.t_max(),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            PathSampler::Fbm(g) => g.tag(),
            PathSampler::PartialSum(g) => g.tag(),
            PathSampler::Kernel(g) => g.tag(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_values() {
        assert!((hermite_exponent(1, 0.7).unwrap() - 0.7).abs() < 1e-15);
        assert!((hermite_exponent(2, 0.7).unwrap() - 0.85).abs() < 1e-15);
        assert!((hermite_exponent(3, 0.9).unwrap() - 0.966_666_666_666_666_7).abs() < 1e-12);
    }

    #[test]
    fn exponent_range() {
        for q in 1..6 {
            for h in [0.51, 0.6, 0.75, 0.99] {
                let h0 = hermite_exponent(q, h).unwrap();
                assert!(h0 > 1.0 - 0.5 / q as f64 && h0 < 1.0);
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(hermite_exponent(0, 0.7).is_err());
        assert!(hermite_exponent(1, 0.5).is_err());
        assert!(hermite_constant(2, 1.0).is_err());
        assert!(HermiteSpec::new(1, 0.3).is_err());
    }

    // Reference values from an independent arbitrary-precision evaluation of
    // the beta function (mpmath).
    #[test]
    fn constant_values() {
        let cases = [
            (1, 0.7, 0.218_361_826_176_782_47),
            (2, 0.7, 0.068_024_764_095_287_47),
            (1, 0.6, 0.107_600_518_413_180_69),
            (2, 0.6, 0.047_915_610_767_686_74),
        ];
        for (q, h, want) in cases {
            let got = hermite_constant(q, h).unwrap();
            assert!(
                (got - want).abs() < 1e-12 * want,
                "c({q},{h}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn generator_kind_parse() {
        for name in GeneratorKind::NAMES {
            assert_eq!(name.parse::<GeneratorKind>().unwrap().name(), name);
        }
        assert!("davies".parse::<GeneratorKind>().is_err());
    }

    #[test]
    fn fbm_generator_requires_q1() {
        let spec = HermiteSpec::new(2, 0.7).unwrap();
        assert!(PathSampler::new(GeneratorKind::Fbm, &spec, 16, 1.0, 4).is_err());
        assert!(matches!(
            PathSampler::new(GeneratorKind::Auto, &spec, 16, 1.0, 4).unwrap(),
            PathSampler::PartialSum(_)
        ));
    }
}
