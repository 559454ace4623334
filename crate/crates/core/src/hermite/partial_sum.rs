use super::HermiteSpec;
use crate::error::{Error, Result};
use crate::noise::{fgn_autocov, fgn_lag, CirculantSampler, RngState};
use crate::path::{GridPath, Provenance};

/// Probabilists' Hermite polynomial `H_q(x)` (`H_1 = x`, `H_2 = x² − 1`, …).
pub fn hermite_polynomial(q: u32, x: f64) -> f64 {
    match q {
        0 => 1.0,
        1 => x,
        2 => x * x - 1.0,
        _ => {
            let (mut prev, mut cur) = (x, x * x - 1.0);
            for k in 2..q {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Hermite-process approximation by normalized partial sums of `H_q(ξ_j)`,
/// with `ξ` unit-variance fractional Gaussian noise of Hurst index `H0`.
///
/// The output grid has `n` steps and each step aggregates `m` noise points.
/// The normalization is the exact variance of the sum over one unit of time,
/// `q! Σ_{j,k<L} ρ(|j−k|)^q` with `L = n·m/T`, so `E[Z_1²] = 1`.
#[derive(Clone, Debug)]
pub struct PartialSumGenerator {
    spec: HermiteSpec,
    n: usize,
    m: usize,
    t_max: f64,
    inv_sigma: f64,
    sampler: CirculantSampler,
}

/// `Var(Σ_{j<len} H_q(ξ_j)) = q! Σ_{|l|<len} (len − |l|) ρ(l)^q`.
fn partial_sum_variance(q: u32, h0: f64, len: usize) -> f64 {
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    let mut acc = len as f64;
    for l in 1..len {
        acc += 2.0 * (len - l) as f64 * fgn_lag(h0, l).powi(q as i32);
    }
    fact * acc
}

impl PartialSumGenerator {
    pub fn new(spec: &HermiteSpec, n: usize, m: usize, t_max: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::param("n", "need at least one grid step"));
        }
        if m < 1 {
            return Err(Error::param("m", "refinement must be at least 1"));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param(
                "t_max",
                format!("must be positive, got {t_max}"),
            ));
        }
        let total = n * m;
        // Noise points per unit time; grids with a non-integer count round it.
        let unit = ((total as f64) / t_max).round().max(1.0) as usize;
        let sigma2 = partial_sum_variance(spec.q(), spec.h0(), unit);
        let acov = fgn_autocov(spec.h0(), total + 1)?;
        let sampler = CirculantSampler::new(&acov, total + 1)?;
        Ok(PartialSumGenerator {
            spec: *spec,
            n,
            m,
            t_max,
            inv_sigma: sigma2.sqrt().recip(),
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn refinement(&self) -> usize {
        self.m
    }

    pub fn spec(&self) -> &HermiteSpec {
        &self.spec
    }

    pub fn tag(&self) -> String {
        format!(
            "partial-sum(q={},H={},m={})",
            self.spec.q(),
            self.spec.hurst(),
            self.m
        )
    }

    pub fn sample(&self, rng: &mut RngState) -> GridPath {
        let xi = self.sampler.sample(rng);
        let q = self.spec.q();
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for block in xi[..self.n * self.m].chunks_exact(self.m) {
            acc += block.iter().map(|&x| hermite_polynomial(q, x)).sum::<f64>();
            values.push(acc * self.inv_sigma);
        }
        GridPath::from_parts(
            self.t_max,
            values,
            Some(Provenance::new(rng.seed(), rng.stream(), self.tag())),
        )
    }
}

pub fn simulate_partial_sum(
    spec: &HermiteSpec,
    n: usize,
    m: usize,
    t_max: f64,
    rng: &mut RngState,
) -> Result<GridPath> {
    Ok(PartialSumGenerator::new(spec, n, m, t_max)?.sample(rng))
}
