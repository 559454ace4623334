use crate::error::{Error, Result};
use crate::noise::{fgn_autocov, CirculantSampler, RngState};
use crate::path::{GridPath, Provenance};

/// Fractional Brownian motion on `[0, T]` with `n` steps, built by cumulating
/// exactly sampled fractional Gaussian noise.
#[derive(Clone, Debug)]
pub struct FbmGenerator {
    hurst: f64,
    n: usize,
    t_max: f64,
    scale: f64,
    sampler: CirculantSampler,
}

impl FbmGenerator {
    /// Accepts any `H` in (0, 1); the Hermite family itself needs `H > ½`.
    pub fn new(hurst: f64, n: usize, t_max: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::param(
                "H",
                format!("must lie in (0, 1), got {hurst}"),
            ));
        }
        if n < 2 {
            return Err(Error::param("n", "need at least 2 grid steps"));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param(
                "t_max",
                format!("must be positive, got {t_max}"),
            ));
        }
        // One extra point makes the embedding length 2n (a power of two for
        // the usual grid sizes); the extra draw is discarded.
        let acov = fgn_autocov(hurst, n + 1)?;
        let sampler = CirculantSampler::new(&acov, n + 1)?;
        Ok(FbmGenerator {
            hurst,
            n,
            t_max,
            scale: (t_max / n as f64).powf(hurst),
            sampler,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn tag(&self) -> String {
        format!("fbm(H={})", self.hurst)
    }

    pub fn sample(&self, rng: &mut RngState) -> GridPath {
        let noise = self.sampler.sample(rng);
        let mut values = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for x in &noise[..self.n] {
            acc += self.scale * x;
            values.push(acc);
        }
        GridPath::from_parts(
            self.t_max,
            values,
            Some(Provenance::new(rng.seed(), rng.stream(), self.tag())),
        )
    }
}

pub fn simulate_fbm(hurst: f64, n: usize, t_max: f64, rng: &mut RngState) -> Result<GridPath> {
    Ok(FbmGenerator::new(hurst, n, t_max)?.sample(rng))
}
