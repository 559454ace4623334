//! Reference generator discretizing the multiple Wiener integral
//! `Z_t = c ∫ (∫_0^t Π_j (s − ψ_j)_+^{H0−3/2} ds) dW_{ψ_1}…dW_{ψ_q}`.
//!
//! The ψ-axis is cut into cells on `[−M, T]`: uniform cells of width `Δs` on
//! `[−T, T]` and geometrically growing cells further into the past. The
//! kernel `ψ ↦ (s − ψ)_+^{H0−3/2}` is replaced by its exact average over each
//! cell, which removes the singularity at `ψ = s`.
//!
//! For `q = 1` the inner `ds`-integral is also done exactly per cell. For
//! `q = 2` the `ds`-integral uses a midpoint rule on a grid of `Δs` and the
//! double integral of the resulting step kernel is evaluated exactly as a
//! Wick square: `Δs (X_j² − Var X_j)` with `X_j = Σ_k F_k(s_j) ΔW_k`.
//! Diagonal cells are kept through that Wick correction rather than dropped.
//!
//! The generator knows its own covariance exactly, so it reports the
//! truncation/discretization bias of `Var(Z_T)` against `T^{2H}`.

use super::{hermite_polynomial, HermiteSpec};
use crate::error::{Error, Result};
use crate::noise::RngState;
use crate::path::{GridPath, Provenance};

/// Largest midpoint grid for which the exact variance diagnostic is computed.
const MAX_DIAGNOSTIC_STEPS: usize = 1024;

#[derive(Clone, Debug)]
pub struct KernelConfig {
    /// Past truncation `M`; the ψ-domain is `[−M, T]`. Defaults to `10·T`.
    pub trunc: Option<f64>,
    /// Midpoint steps per output step; defaults to `ceil(512 / n)`.
    pub sub_steps: Option<usize>,
    /// Width ratio of consecutive cells beyond `−T`.
    pub growth: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            trunc: None,
            sub_steps: None,
            growth: 1.05,
        }
    }
}

#[derive(Clone, Debug)]
enum Plan {
    /// `Z_{t_i} = Σ_k coef[i·cells + k] N_k`, rows for `i = 1..=n`.
    Linear { coef: Vec<f64> },
    /// Midpoint rows: `X_j = Σ_{k<len_j} f[off_j + k] N_k`.
    Chaos {
        rows: Vec<(usize, usize)>,
        f: Vec<f64>,
        sigma: Vec<f64>,
        ds: f64,
        sub_steps: usize,
    },
}

#[derive(Clone, Debug)]
pub struct KernelGenerator {
    spec: HermiteSpec,
    n: usize,
    t_max: f64,
    trunc: f64,
    cells: usize,
    plan: Plan,
    variances: Option<Vec<f64>>,
}

fn pos_pow(x: f64, p: f64) -> f64 {
    if x > 0.0 {
        x.powf(p)
    } else {
        0.0
    }
}

fn build_cells(t_max: f64, h: f64, trunc: f64, growth: f64) -> Vec<(f64, f64)> {
    let fine_lo = -trunc.min(t_max);
    let fine = ((t_max - fine_lo) / h).round() as usize;
    let mut cells = Vec::new();
    // Geometric cells first so the list is ascending in ψ.
    let mut past = Vec::new();
    let mut hi = fine_lo;
    let mut w = h * growth;
    while hi > -trunc + 1e-12 * trunc {
        let lo = (hi - w).max(-trunc);
        past.push((lo, hi));
        hi = lo;
        w *= growth;
    }
    cells.extend(past.into_iter().rev());
    for k in 0..fine {
        let lo = fine_lo + k as f64 * h;
        let hi = if k + 1 == fine {
            t_max
        } else {
            fine_lo + (k + 1) as f64 * h
        };
        cells.push((lo, hi));
    }
    cells
}

impl KernelGenerator {
    pub fn new(spec: &HermiteSpec, n: usize, t_max: f64, cfg: &KernelConfig) -> Result<Self> {
        if spec.q() > 2 {
            return Err(Error::Unsupported(format!(
                "kernel generator supports q ∈ {{1, 2}}, got q = {}",
                spec.q()
            )));
        }
        if n < 1 {
            return Err(Error::param("n", "need at least one grid step"));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::param(
                "t_max",
                format!("must be positive, got {t_max}"),
            ));
        }
        let trunc = cfg.trunc.unwrap_or(10.0 * t_max);
        if !(trunc > 0.0) {
            return Err(Error::param(
                "trunc",
                format!("must be positive, got {trunc}"),
            ));
        }
        if !(cfg.growth >= 1.0) {
            return Err(Error::param(
                "growth",
                "cell growth ratio must be at least 1",
            ));
        }
        let sub_steps = cfg.sub_steps.unwrap_or_else(|| 512usize.div_ceil(n)).max(1);
        let steps = n * sub_steps;
        let ds = t_max / steps as f64;
        let cells = build_cells(t_max, ds, trunc, cfg.growth);
        let c = spec.constant();
        let a1 = spec.h0() - 0.5; // exponent of the cell-averaged kernel

        let (plan, variances) = if spec.q() == 1 {
            let a2 = a1 + 1.0;
            let mut coef = Vec::with_capacity(n * cells.len());
            let mut variances = Vec::with_capacity(n + 1);
            variances.push(0.0);
            for i in 1..=n {
                let t = t_max * i as f64 / n as f64;
                let mut var = 0.0;
                for &(lo, hi) in &cells {
                    let w = hi - lo;
                    let avg = (pos_pow(t - lo, a2) - pos_pow(-lo, a2) - pos_pow(t - hi, a2)
                        + pos_pow(-hi, a2))
                        / (a1 * a2 * w);
                    let k = c * avg * w.sqrt();
                    var += k * k;
                    coef.push(k);
                }
                variances.push(var);
            }
            (Plan::Linear { coef }, Some(variances))
        } else {
            let mut rows = Vec::with_capacity(steps);
            let mut f = Vec::new();
            let mut sigma = Vec::with_capacity(steps);
            for j in 0..steps {
                let s = (j as f64 + 0.5) * ds;
                let off = f.len();
                let mut var = 0.0;
                for &(lo, hi) in cells.iter().take_while(|(lo, _)| *lo < s) {
                    let w = hi - lo;
                    let v = (pos_pow(s - lo, a1) - pos_pow(s - hi, a1)) / (a1 * w) * w.sqrt();
                    var += v * v;
                    f.push(v);
                }
                rows.push((off, f.len() - off));
                sigma.push(var.sqrt());
            }
            let variances = (steps <= MAX_DIAGNOSTIC_STEPS)
                .then(|| chaos_variances(spec.q(), c, ds, &rows, &f, n, sub_steps));
            (
                Plan::Chaos {
                    rows,
                    f,
                    sigma,
                    ds,
                    sub_steps,
                },
                variances,
            )
        };

        Ok(KernelGenerator {
            spec: *spec,
            n,
            t_max,
            trunc,
            cells: cells.len(),
            plan,
            variances,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn trunc(&self) -> f64 {
        self.trunc
    }

    pub fn cell_count(&self) -> usize {
        self.cells
    }

    /// Exact variance of the generated `Z_{t_i}` for `i = 0..=n`, when the grid
    /// is small enough for the diagnostic to have been computed.
    pub fn discrete_variances(&self) -> Option<&[f64]> {
        self.variances.as_deref()
    }

    /// `Var(Z_T) − T^{2H}` for the discretized process.
    pub fn variance_bias(&self) -> Option<f64> {
        self.variances
            .as_ref()
            .map(|v| v[self.n] - self.t_max.powf(2.0 * self.spec.hurst()))
    }

    pub fn tag(&self) -> String {
        match self.variance_bias() {
            Some(b) => format!(
                "kernel(q={},H={},M={},var_bias={:.3e})",
                self.spec.q(),
                self.spec.hurst(),
                self.trunc,
                b
            ),
            None => format!(
                "kernel(q={},H={},M={})",
                self.spec.q(),
                self.spec.hurst(),
                self.trunc
            ),
        }
    }

    pub fn sample(&self, rng: &mut RngState) -> GridPath {
        let mut noise = vec![0.0; self.cells];
        rng.fill_normal(&mut noise);
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        match &self.plan {
            Plan::Linear { coef } => {
                for row in coef.chunks_exact(self.cells) {
                    values.push(row.iter().zip(&noise).map(|(a, b)| a * b).sum());
                }
            }
            Plan::Chaos {
                rows,
                f,
                sigma,
                ds,
                sub_steps,
            } => {
                let q = self.spec.q();
                let c = self.spec.constant();
                let mut acc = 0.0;
                for (j, (&(off, len), &sd)) in rows.iter().zip(sigma).enumerate() {
                    if sd > 0.0 {
                        let x: f64 = f[off..off + len]
                            .iter()
                            .zip(&noise)
                            .map(|(a, b)| a * b)
                            .sum();
                        acc += c * ds * sd.powi(q as i32) * hermite_polynomial(q, x / sd);
                    }
                    if (j + 1) % sub_steps == 0 {
                        values.push(acc);
                    }
                }
            }
        }
        GridPath::from_parts(
            self.t_max,
            values,
            Some(Provenance::new(rng.seed(), rng.stream(), self.tag())),
        )
    }
}

/// `Var(Z_{t_i}) = q! c² Δs² Σ_{j,j'<J_i} ⟨F_j, F_j'⟩^q`.
fn chaos_variances(
    q: u32,
    c: f64,
    ds: f64,
    rows: &[(usize, usize)],
    f: &[f64],
    n: usize,
    sub_steps: usize,
) -> Vec<f64> {
    let fact: f64 = (1..=q).map(|k| k as f64).product();
    let scale = fact * c * c * ds * ds;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut total = 0.0;
    for (j, &(oj, lj)) in rows.iter().enumerate() {
        let fj = &f[oj..oj + lj];
        let mut cross = 0.0;
        for &(ok, lk) in &rows[..j] {
            let len = lk.min(lj);
            let g: f64 = f[ok..ok + len].iter().zip(fj).map(|(a, b)| a * b).sum();
            cross += g.powi(q as i32);
        }
        let diag: f64 = fj.iter().map(|a| a * a).sum::<f64>().powi(q as i32);
        total += 2.0 * cross + diag;
        if (j + 1) % sub_steps == 0 {
            out.push(scale * total);
        }
    }
    out
}

/// Convenience wrapper that builds the plan for a single draw.
pub fn simulate_kernel(
    spec: &HermiteSpec,
    n: usize,
    t_max: f64,
    trunc: f64,
    rng: &mut RngState,
) -> Result<GridPath> {
    let cfg = KernelConfig {
        trunc: Some(trunc),
        ..KernelConfig::default()
    };
    Ok(KernelGenerator::new(spec, n, t_max, &cfg)?.sample(rng))
}
