//! Seeded random streams and exact sampling of stationary Gaussian sequences.
//!
//! Every stochastic object in the crate is a pure function of an [`RngState`],
//! which is keyed by `(seed, stream)`. Monte Carlo replications use one stream
//! each, so results do not depend on how work is scheduled across threads.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance below which negative embedding eigenvalues are treated
/// as round-off and clipped to zero.
pub const EIGEN_CLIP_TOL: f64 = 1e-10;

/// A deterministic random stream identified by `(seed, stream)`.
///
/// Uniforms come from ChaCha8 with the stream id selecting one of its 2^64
/// independent streams; normals are produced pairwise by the Box-Muller
/// transform.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

pub fn make_rng(seed: u64, stream: u64) -> RngState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    RngState {
        seed,
        stream,
        rng,
        spare: None,
    }
}

impl RngState {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform deviate on the open interval (0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }

    /// Two independent standard normals from one Box-Muller step.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        (r * c, r * s)
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.normal();
        }
    }
}

/// Autocovariances `γ(0), γ(1), …` of a stationary sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct AutocovSequence {
    values: Vec<f64>,
}

impl AutocovSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let Some(&g0) = values.first() else {
            return Err(Error::param(
                "acov",
                "at least one autocovariance is required",
            ));
        };
        if !(g0 > 0.0) || !g0.is_finite() {
            return Err(Error::param(
                "acov",
                format!("γ(0) must be positive, got {g0}"),
            ));
        }
        if let Some((k, g)) = values
            .iter()
            .enumerate()
            .find(|(_, g)| !g.is_finite() || g.abs() > g0 * (1.0 + 1e-12))
        {
            return Err(Error::param(
                "acov",
                format!("|γ({k})| = {} exceeds γ(0) = {g0}", g.abs()),
            ));
        }
        Ok(AutocovSequence { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Autocovariance of unit-variance fractional Gaussian noise at integer lag.
pub fn fgn_lag(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// `γ(k) = ½(|k+1|^{2h} − 2|k|^{2h} + |k−1|^{2h})` for `k = 0..n`.
pub fn fgn_autocov(h: f64, n: usize) -> Result<AutocovSequence> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::param("h", format!("must lie in (0, 1), got {h}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    AutocovSequence::new((0..n).map(|k| fgn_lag(h, k)).collect())
}

/// Circulant-embedding sampler for a fixed autocovariance and length.
///
/// The embedding uses the even extension of length `2(n−1)`. Construction does
/// the eigen-decomposition once; each [`sample`](Self::sample) costs one FFT.
#[derive(Clone)]
pub struct CirculantSampler {
    n: usize,
    gamma0: f64,
    scale: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("n", &self.n)
            .field("embedding_len", &self.scale.len())
            .finish()
    }
}

impl CirculantSampler {
    pub fn new(acov: &AutocovSequence, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        if acov.len() < n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: acov.len(),
            });
        }
        let gamma = &acov.values()[..n];
        if n == 1 {
            return Ok(CirculantSampler {
                n,
                gamma0: gamma[0],
                scale: Vec::new(),
                fft: None,
            });
        }

        let m = 2 * (n - 1);
        let mut row: Vec<Complex64> = Vec::with_capacity(m);
        row.extend(gamma.iter().map(|&g| Complex64::new(g, 0.0)));
        row.extend(
            gamma[1..n - 1]
                .iter()
                .rev()
                .map(|&g| Complex64::new(g, 0.0)),
        );

        let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
        fft.process(&mut row);

        let max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let mut scale = Vec::with_capacity(m);
        for (index, c) in row.iter().enumerate() {
            let mut lambda = c.re;
            if lambda < 0.0 {
                if lambda < -EIGEN_CLIP_TOL * max {
                    return Err(Error::NegativeEigenvalue {
                        index,
                        value: lambda,
                        max,
                    });
                }
                lambda = 0.0;
            }
            scale.push((lambda / m as f64).sqrt());
        }

        Ok(CirculantSampler {
            n,
            gamma0: gamma[0],
            scale,
            fft: Some(fft),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sample(&self, rng: &mut RngState) -> Vec<f64> {
        let Some(fft) = &self.fft else {
            return vec![self.gamma0.sqrt() * rng.normal()];
        };
        let mut buf: Vec<Complex64> = self
            .scale
            .iter()
            .map(|&s| {
                let (a, b) = rng.normal_pair();
                Complex64::new(s * a, s * b)
            })
            .collect();
        fft.process(&mut buf);
        buf.truncate(self.n);
        buf.into_iter().map(|c| c.re).collect()
    }
}

/// Exact-in-distribution stationary Gaussian sequence of length `n` with the
/// first `n` autocovariances of `acov`.
pub fn sample_stationary_gaussian(
    acov: &AutocovSequence,
    n: usize,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    Ok(CirculantSampler::new(acov, n)?.sample(rng))
}
