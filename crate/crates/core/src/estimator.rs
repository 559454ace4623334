//! Minimum L1-distance drift estimation and the limit variable `ζ`.
//!
//! Every L1 functional of a path here is the same trapezoid sum over the
//! grid, so `S(θ)` for `θ = θ0 + εu` is exactly `ε·J_ε(u)` and the scaled
//! error of the estimator is the minimizer of `J_ε`.

use crate::error::{Error, Result};
use crate::path::GridPath;

const TIE_TOL: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Search interval `Θ` and minimizer settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub coarse_points: usize,
    pub refine_tol: f64,
}

impl EstimatorConfig {
    pub const DEFAULT_COARSE_POINTS: usize = 201;
    pub const DEFAULT_REFINE_TOL: f64 = 1e-8;

    pub fn new(
        theta_lo: f64,
        theta_hi: f64,
        coarse_points: usize,
        refine_tol: f64,
    ) -> Result<Self> {
        let cfg = EstimatorConfig {
            theta_lo,
            theta_hi,
            coarse_points,
            refine_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_bounds(theta_lo: f64, theta_hi: f64) -> Result<Self> {
        Self::new(
            theta_lo,
            theta_hi,
            Self::DEFAULT_COARSE_POINTS,
            Self::DEFAULT_REFINE_TOL,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_lo.is_finite() && self.theta_hi.is_finite()) {
            return Err(Error::param("theta_lo", "bounds must be finite"));
        }
        if !(self.theta_lo < self.theta_hi) {
            return Err(Error::param(
                "theta_lo",
                format!(
                    "need theta_lo < theta_hi, got [{}, {}]",
                    self.theta_lo, self.theta_hi
                ),
            ));
        }
        if self.coarse_points < 3 {
            return Err(Error::param("coarse_points", "need at least 3 scan points"));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::param("refine_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.theta_lo && theta <= self.theta_hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub objective_value: f64,
    pub n_evals: usize,
    /// Coarse-scan neighbours of the best scan point; an end equal to a
    /// bound of `Θ` means the minimizer may sit on the boundary.
    pub bracket: (f64, f64),
}

impl EstimateResult {
    pub fn at_boundary(&self, cfg: &EstimatorConfig) -> bool {
        self.bracket.0 <= cfg.theta_lo || self.bracket.1 >= cfg.theta_hi
    }
}

/// Trapezoid weights on the grid of `x`.
pub fn quadrature_weights(x: &GridPath) -> Vec<f64> {
    let dt = x.dt();
    let mut w = vec![dt; x.values().len()];
    w[0] = 0.5 * dt;
    w[x.n()] = 0.5 * dt;
    w
}

fn trapezoid(dt: f64, integrand: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in integrand {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    dt * (sum - 0.5 * (first.unwrap_or(0.0) + last))
}

/// `S(θ) = ∫ |X_t − x0 e^{θt}| dt` by the trapezoid rule.
pub fn objective_s(x: &GridPath, theta: f64, x0: f64) -> f64 {
    trapezoid(
        x.dt(),
        x.values()
            .iter()
            .zip(x.times())
            .map(|(xi, t)| (xi - x0 * (theta * t).exp()).abs()),
    )
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a >= tol {
        // `<=` keeps the left part on ties, moving toward smaller θ.
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `θ̂ = argmin_{θ∈Θ} S(θ)`: a coarse scan of `Θ`, then golden-section
/// refinement between the neighbours of the first best scan point.
pub fn minimize_l1(x: &GridPath, x0: f64, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let mut evals = 0usize;
    let mut s = |theta: f64| {
        evals += 1;
        objective_s(x, theta, x0)
    };

    let k = cfg.coarse_points;
    let step = (cfg.theta_hi - cfg.theta_lo) / (k - 1) as f64;
    let grid = |i: usize| {
        if i == k - 1 {
            cfg.theta_hi
        } else {
            cfg.theta_lo + step * i as f64
        }
    };
    let scan: Vec<f64> = (0..k).map(|i| s(grid(i))).collect();
    let best_val = scan.iter().copied().fold(f64::INFINITY, f64::min);
    let best = scan
        .iter()
        .position(|&v| v <= best_val + TIE_TOL)
        .unwrap_or(0);

    let lo = grid(best.saturating_sub(1));
    let hi = grid((best + 1).min(k - 1));
    let (theta, val) = golden_section(&mut s, lo, hi, cfg.refine_tol);

    let (theta_hat, objective_value) =
        if val < scan[best] - TIE_TOL || (val <= scan[best] + TIE_TOL && theta < grid(best)) {
            (theta, val)
        } else {
            (grid(best), scan[best])
        };
    Ok(EstimateResult {
        theta_hat,
        objective_value,
        n_evals: evals,
        bracket: (lo, hi),
    })
}

/// `E(a) = ∫_0^1 e^{at} dt`.
fn mean_exp(a: f64) -> f64 {
    if a.abs() < 1e-300 {
        1.0
    } else {
        a.exp_m1() / a
    }
}

fn check_separation_args(delta: f64, theta0: f64, cfg: &EstimatorConfig) -> Result<()> {
    cfg.validate()?;
    if !(delta > 0.0) {
        return Err(Error::param(
            "delta",
            format!("must be positive, got {delta}"),
        ));
    }
    if !(theta0 - delta > cfg.theta_lo && theta0 + delta < cfg.theta_hi) {
        return Err(Error::param(
            "delta",
            format!(
                "[{}, {}] must lie inside Θ = ({}, {})",
                theta0 - delta,
                theta0 + delta,
                cfg.theta_lo,
                cfg.theta_hi
            ),
        ));
    }
    Ok(())
}

/// `g(δ) = inf_{|θ−θ0|>δ} ∫_0^1 |x_t(θ) − x_t(θ0)| dt` for the exponential
/// skeleton. The integrand grows pointwise with `|θ − θ0|` on each side, so
/// the infimum is attained at `θ0 ± δ`. Returns 0 for the degenerate `x0 = 0`.
pub fn separation_g(delta: f64, theta0: f64, x0: f64, cfg: &EstimatorConfig) -> Result<f64> {
    check_separation_args(delta, theta0, cfg)?;
    let base = mean_exp(theta0);
    let up = (mean_exp(theta0 + delta) - base).abs();
    let down = (mean_exp(theta0 - delta) - base).abs();
    Ok(x0.abs() * up.min(down))
}

/// `g(δ)` for an arbitrary skeleton `x(θ, t)` by scanning `Θ \ (θ0−δ, θ0+δ)`
/// with `scan_points` values of `θ` and a trapezoid rule of `n_t` steps on
/// `[0, 1]`.
pub fn separation_g_numeric(
    delta: f64,
    theta0: f64,
    cfg: &EstimatorConfig,
    skeleton: impl Fn(f64, f64) -> f64,
    scan_points: usize,
    n_t: usize,
) -> Result<f64> {
    check_separation_args(delta, theta0, cfg)?;
    if scan_points < 2 || n_t < 1 {
        return Err(Error::param(
            "scan_points",
            "need at least 2 scan points and 1 step",
        ));
    }
    let times: Vec<f64> = (0..=n_t).map(|i| i as f64 / n_t as f64).collect();
    let base: Vec<f64> = times.iter().map(|&t| skeleton(theta0, t)).collect();
    let dist = |theta: f64| {
        trapezoid(
            1.0 / n_t as f64,
            times
                .iter()
                .zip(&base)
                .map(|(&t, b)| (skeleton(theta, t) - b).abs()),
        )
    };
    let step = (cfg.theta_hi - cfg.theta_lo) / (scan_points - 1) as f64;
    let mut best = dist(theta0 - delta).min(dist(theta0 + delta));
    for i in 0..scan_points {
        let theta = cfg.theta_lo + step * i as f64;
        if (theta - theta0).abs() > delta {
            best = best.min(dist(theta));
        }
    }
    Ok(best)
}

/// Minimizer of `Σ w_i |r_i − u|`: the first sorted ratio whose cumulative
/// weight reaches half the total. Exact ties of the two halves resolve to
/// the lower median.
pub fn weighted_median(ratios: &[f64], weights: &[f64]) -> Result<f64> {
    if ratios.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: ratios.len(),
            found: weights.len(),
        });
    }
    if ratios.is_empty() {
        return Err(Error::EmptySample);
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::param("weights", "must be nonnegative"));
    }
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::param("weights", "total weight must be positive"));
    }
    let half = 0.5 * total;
    let mut acc = 0.0;
    for &i in &order {
        acc += weights[i];
        if acc >= half {
            return Ok(ratios[i]);
        }
    }
    Ok(ratios[order[order.len() - 1]])
}

/// Tangent direction `x'_t(θ0) = x0 t e^{θ0 t}` and the L1 weights of each
/// grid point, skipping `t = 0` where the tangent vanishes.
fn tangent_terms(y: &GridPath, theta0: f64, x0: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    let c = quadrature_weights(y);
    (1..=y.n()).map(move |i| {
        let t = y.time(i);
        (y.values()[i], x0 * t * (theta0 * t).exp(), c[i])
    })
}

/// `ζ = argmin_u ∫ |Y_t − u x0 t e^{θ0 t}| dt`, solved exactly as a weighted
/// median of `Y_i / w_i` with the trapezoid weights of [`objective_s`].
pub fn zeta_solver(y: &GridPath, theta0: f64, x0: f64) -> Result<f64> {
    if x0 == 0.0 || !x0.is_finite() {
        return Err(Error::param(
            "x0",
            "the tangent direction vanishes for x0 = 0",
        ));
    }
    let (ratios, weights): (Vec<f64>, Vec<f64>) = tangent_terms(y, theta0, x0)
        .map(|(yi, wi, ci)| (yi / wi, ci * wi.abs()))
        .unzip();
    weighted_median(&ratios, &weights)
}

/// `J_0(u) = ∫ |Y_t − u x0 t e^{θ0 t}| dt` on the grid.
pub fn j0_objective(y: &GridPath, u: f64, theta0: f64, x0: f64) -> f64 {
    tangent_terms(y, theta0, x0)
        .map(|(yi, wi, ci)| ci * (yi - u * wi).abs())
        .sum()
}

/// `J_ε(u) = ∫ |Y_t − ε^{-1}(x_t(θ0 + εu) − x_t(θ0))| dt` on the grid.
pub fn j_eps_objective(y: &GridPath, u: f64, eps: f64, theta0: f64, x0: f64) -> f64 {
    let c = quadrature_weights(y);
    (1..=y.n())
        .map(|i| {
            let t = y.time(i);
            let secant = x0 * (theta0 * t).exp() * (eps * u * t).exp_m1() / eps;
            c[i] * (y.values()[i] - secant).abs()
        })
        .sum()
}
