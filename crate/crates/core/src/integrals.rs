//! Pathwise Wiener integrals against Hermite paths and their covariance.
//!
//! For deterministic `f, g`, `E[∫f dZ ∫g dZ] = H(2H−1) ∫∫ f(u) g(v) |u−v|^{2H−2} du dv`
//! regardless of the order `q`. [`covariance_functional`] evaluates the right
//! hand side exactly for piecewise constant or piecewise linear `f, g`, so the
//! diagonal singularity of the kernel never meets a quadrature node.

use crate::error::{Error, Result};
use crate::path::{GridPath, Provenance};

/// How grid values are extended to a function on `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    /// Value `f(t_i)` on `[t_i, t_{i+1})`; the last grid value is unused.
    /// Integrals of indicators `1_{[0,s)}` with on-grid `s` are exact.
    Step,
    /// Linear between grid values; second-order accurate for smooth `f`.
    Linear,
}

/// A deterministic integrand sampled on the grid of a [`GridPath`].
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    t_max: f64,
    values: Vec<f64>,
    interp: Interp,
}

impl SampledFunction {
    pub fn new(t_max: f64, values: Vec<f64>, interp: Interp) -> Result<Self> {
        if !(t_max > 0.0) {
            return Err(Error::param(
                "t_max",
                format!("must be positive, got {t_max}"),
            ));
        }
        if values.len() < 2 {
            return Err(Error::param("values", "need at least two grid values"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::param(
                "values",
                format!("integrand must be finite, got {v}"),
            ));
        }
        Ok(SampledFunction {
            t_max,
            values,
            interp,
        })
    }

    /// Samples `f` at `t_i = i·T/n`.
    pub fn from_fn(t_max: f64, n: usize, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=n).map(|i| f(t_max * i as f64 / n as f64)).collect();
        Self::new(t_max, values, interp)
    }

    /// `f` sampled on the grid of `path`.
    pub fn on_grid_of(path: &GridPath, interp: Interp, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(path.t_max(), path.n(), interp, f)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn scaled(&self, a: f64) -> Self {
        SampledFunction {
            t_max: self.t_max,
            values: self.values.iter().map(|v| a * v).collect(),
            interp: self.interp,
        }
    }

    /// Coefficients of the falling and rising ramps on each cell.
    fn ramp_coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let left = self.values[..n].to_vec();
        let right = match self.interp {
            Interp::Step => left.clone(),
            Interp::Linear => self.values[1..].to_vec(),
        };
        (left, right)
    }

    fn same_grid(&self, other: &SampledFunction) -> bool {
        self.values.len() == other.values.len()
            && (self.t_max - other.t_max).abs() <= 1e-12 * self.t_max
    }
}

/// Left-endpoint Riemann–Stieltjes sum `Σ_i f(t_i)(z_{i+1} − z_i)`.
pub fn wiener_integral(f: &SampledFunction, z: &GridPath) -> Result<f64> {
    if f.values.len() != z.values().len() {
        return Err(Error::LengthMismatch {
            expected: z.values().len(),
            found: f.values.len(),
        });
    }
    if (f.t_max - z.t_max()).abs() > 1e-12 * z.t_max() {
        return Err(Error::param(
            "f",
            "integrand and path live on different intervals",
        ));
    }
    Ok(z.values()
        .windows(2)
        .zip(&f.values)
        .map(|(w, fi)| fi * (w[1] - w[0]))
        .sum())
}

// Successive antiderivatives of the kernel k(z) = H(2H−1)|z|^{2H−2}:
// P2' = k, P3' = P2, and so on. All are continuous at 0 because 2H − 1 > 0.
#[derive(Clone, Copy)]
struct Antiderivatives {
    h: f64,
}

impl Antiderivatives {
    fn p(&self, order: u8, z: f64) -> f64 {
        let e = 2.0 * self.h;
        let a = z.abs();
        let s = z.signum();
        match order {
            2 => self.h * s * a.powf(e - 1.0),
            3 => 0.5 * a.powf(e),
            4 => 0.5 * s * a.powf(e + 1.0) / (e + 1.0),
            5 => 0.5 * a.powf(e + 2.0) / ((e + 1.0) * (e + 2.0)),
            _ => unreachable!(),
        }
    }
}

/// Linear function on the unit cell given by its endpoint values.
#[derive(Clone, Copy)]
struct Ramp {
    at0: f64,
    at1: f64,
}

impl Ramp {
    const FALLING: Ramp = Ramp { at0: 1.0, at1: 0.0 };
    const RISING: Ramp = Ramp { at0: 0.0, at1: 1.0 };

    fn slope(&self) -> f64 {
        self.at1 - self.at0
    }

    fn eval(&self, x: f64) -> f64 {
        self.at0 + (self.at1 - self.at0) * x
    }
}

/// Lags beyond which the unit-cell integrals are done by Gauss–Legendre
/// quadrature; closer lags use the closed form, which loses digits to
/// cancellation as the lag grows.
const CLOSED_FORM_MAX_LAG: i64 = 8;

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_69,
    0.222_381_034_453_374_34,
    0.313_706_645_877_887_05,
    0.362_683_783_378_361_8,
    0.362_683_783_378_361_8,
    0.313_706_645_877_887_05,
    0.222_381_034_453_374_34,
    0.101_228_536_290_376_69,
];

/// `∫_0^1 ∫_0^1 a(x) b(y) k(x − y + d) dy dx` in closed form, by two
/// integrations by parts in each variable.
fn cell_integral_closed(h: f64, a: Ramp, b: Ramp, d: f64) -> f64 {
    let p = Antiderivatives { h };
    // A_j(c) = ∫_0^1 a(x) P_j(x + c) dx
    let outer = |j: u8, c: f64| {
        a.at1 * p.p(j + 1, 1.0 + c)
            - a.at0 * p.p(j + 1, c)
            - a.slope() * (p.p(j + 2, 1.0 + c) - p.p(j + 2, c))
    };
    -b.at1 * outer(2, d - 1.0) + b.at0 * outer(2, d) + b.slope() * (outer(3, d) - outer(3, d - 1.0))
}

fn cell_integral_gauss(h: f64, a: Ramp, b: Ramp, d: f64) -> f64 {
    let k = h * (2.0 * h - 1.0);
    let mut acc = 0.0;
    for (xi, wi) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
        let x = 0.5 * (xi + 1.0);
        for (yj, wj) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            let y = 0.5 * (yj + 1.0);
            acc += wi * wj * a.eval(x) * b.eval(y) * (x - y + d).abs().powf(2.0 * h - 2.0);
        }
    }
    0.25 * k * acc
}

fn cell_integral(h: f64, a: Ramp, b: Ramp, lag: i64) -> f64 {
    if lag.abs() <= CLOSED_FORM_MAX_LAG {
        cell_integral_closed(h, a, b, lag as f64)
    } else {
        cell_integral_gauss(h, a, b, lag as f64)
    }
}

/// `H(2H−1) ∫∫ f(u) g(v) |u−v|^{2H−2} du dv` over the common interval of `f`
/// and `g`, integrated exactly for their step or linear interpolants.
pub fn covariance_functional(f: &SampledFunction, g: &SampledFunction, h: f64) -> Result<f64> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::param("H", format!("must lie in (1/2, 1), got {h}")));
    }
    if !f.same_grid(g) {
        return Err(Error::LengthMismatch {
            expected: f.values.len(),
            found: g.values.len(),
        });
    }
    let n = f.n();
    let dt = f.t_max / n as f64;
    let (fl, fr) = f.ramp_coefficients();
    let (gl, gr) = g.ramp_coefficients();
    let ramps = [Ramp::FALLING, Ramp::RISING];
    let fc = [&fl, &fr];
    let gc = [&gl, &gr];

    let mut total = 0.0;
    for lag in -(n as i64 - 1)..=(n as i64 - 1) {
        // Cell pairs (i, j) with i − j = lag.
        let (i0, j0) = if lag >= 0 {
            (lag as usize, 0)
        } else {
            (0, (-lag) as usize)
        };
        let len = n - lag.unsigned_abs() as usize;
        for (fa, ra) in fc.iter().zip(ramps) {
            for (gb, rb) in gc.iter().zip(ramps) {
                let s: f64 = fa[i0..i0 + len]
                    .iter()
                    .zip(&gb[j0..j0 + len])
                    .map(|(x, y)| x * y)
                    .sum();
                if s != 0.0 {
                    total += s * cell_integral(h, ra, rb, lag);
                }
            }
        }
    }
    Ok(dt.powf(2.0 * h) * total)
}

/// `Y_{t_i} = e^{θ0 t_i} Σ_{j<i} e^{−θ0 t_j}(z_{j+1} − z_j)`.
///
/// Evaluated in summation-by-parts form
/// `Y_i = e^{θ0Δ} z_i + (e^{θ0Δ} − 1) Σ_{0<j<i} e^{θ0(t_i−t_j)} z_j`,
/// which is algebraically the same sum and returns `z` unchanged for `θ0 = 0`.
pub fn build_y(z: &GridPath, theta0: f64) -> GridPath {
    let growth = (theta0 * z.dt()).exp();
    let step = (theta0 * z.dt()).exp_m1();
    let mut tail = 0.0;
    let values = z
        .values()
        .iter()
        .map(|&zi| {
            let y = growth * zi + step * tail;
            tail = growth * (tail + zi);
            y
        })
        .collect();
    GridPath::from_parts(
        z.t_max(),
        values,
        z.provenance()
            .map(|p: &Provenance| p.derived(&format!("Y(theta0={theta0})"))),
    )
}

// Composite Gauss–Legendre on [lo, hi] with `panels` panels.
fn gauss(lo: f64, hi: f64, panels: usize, f: &mut impl FnMut(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let w = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * w;
        for (x, wt) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            acc += wt * f(a + 0.5 * w * (x + 1.0));
        }
    }
    0.5 * w * acc
}

/// Integral over `[0, t]` with a breakpoint at `kink` when it falls inside.
fn gauss_split(t: f64, kink: f64, panels: usize, f: &mut impl FnMut(f64) -> f64) -> f64 {
    if kink > 0.0 && kink < t {
        gauss(0.0, kink, panels, f) + gauss(kink, t, panels, f)
    } else {
        gauss(0.0, t, panels, f)
    }
}

/// `R(t,s) = Cov(Y_t, Y_s) = e^{θ0(t+s)} H(2H−1) ∫_0^t∫_0^s e^{−θ0 u} e^{−θ0 v} |u−v|^{2H−2} du dv`.
///
/// Computed from `Y_t = Z_t + θ0 ∫_0^t e^{θ0(t−u)} Z_u du`, which turns the
/// singular kernel into the continuous covariance of `Z`; the remaining
/// integrals use composite Gauss–Legendre split at the kinks of `|u−v|^{2H}`.
pub fn covariance_r(t: f64, s: f64, theta0: f64, h: f64) -> Result<f64> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::param("H", format!("must lie in (1/2, 1), got {h}")));
    }
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::param("t", "times must be nonnegative"));
    }
    const PANELS: usize = 24;
    let e = 2.0 * h;
    let k = |u: f64, v: f64| 0.5 * (u.powf(e) + v.powf(e) - (u - v).abs().powf(e));
    let th = theta0;

    let mut total = k(t, s);
    if th != 0.0 {
        total += th * gauss_split(s, t, PANELS, &mut |v| (th * (s - v)).exp() * k(t, v));
        total += th * gauss_split(t, s, PANELS, &mut |u| (th * (t - u)).exp() * k(u, s));
        total += th
            * th
            * gauss_split(t, s, PANELS, &mut |u| {
                (th * (t - u)).exp()
                    * gauss_split(s, u, PANELS, &mut |v| (th * (s - v)).exp() * k(u, v))
            });
    }
    Ok(total)
}
