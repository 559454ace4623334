//! `dX_t = θ X_t dt + ε dZ_t`, `X_0 = x0`, solved on the grid of the driver.

use crate::error::{Error, Result};
use crate::integrals::build_y;
use crate::path::GridPath;

/// Drift, noise scale and initial value of the SDE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuSpec {
    theta: f64,
    eps: f64,
    x0: f64,
}

impl OuSpec {
    pub fn new(theta: f64, eps: f64, x0: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::param(
                "theta",
                format!("must be finite, got {theta}"),
            ));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::param("eps", format!("must be positive, got {eps}")));
        }
        if !x0.is_finite() {
            return Err(Error::param("x0", format!("must be finite, got {x0}")));
        }
        Ok(OuSpec { theta, eps, x0 })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        OuSpec::new(self.theta, eps, self.x0)
    }
}

/// `x_t(θ) = x0 e^{θt}` on the grid `t_i = i·T/n`.
pub fn deterministic_solution(theta: f64, x0: f64, t_max: f64, n: usize) -> Result<GridPath> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let values = (0..=n)
        .map(|i| x0 * (theta * t_max * i as f64 / n as f64).exp())
        .collect();
    GridPath::new(t_max, values, None)
}

/// `x_t(θ)` on the grid of `like`.
pub fn skeleton_like(theta: f64, x0: f64, like: &GridPath) -> GridPath {
    let values = like.times().map(|t| x0 * (theta * t).exp()).collect();
    GridPath::from_parts(like.t_max(), values, None)
}

fn check_driver(z: &GridPath) -> Result<()> {
    let z0 = z.values()[0];
    if z0 != 0.0 {
        return Err(Error::param(
            "z",
            format!("driver must start at 0, got {z0}"),
        ));
    }
    Ok(())
}

/// Variation of constants: `X_t = x0 e^{θt} + ε Y_t` with `Y` from
/// [`build_y`], so `X − x(θ) = εY` holds to round-off.
pub fn exact_solution(spec: &OuSpec, z: &GridPath) -> Result<GridPath> {
    check_driver(z)?;
    let y = build_y(z, spec.theta);
    let values = y
        .values()
        .iter()
        .zip(z.times())
        .map(|(yi, t)| spec.x0 * (spec.theta * t).exp() + spec.eps * yi)
        .collect();
    Ok(GridPath::from_parts(
        z.t_max(),
        values,
        z.provenance().map(|p| {
            p.derived(&format!(
                "exact(theta={},eps={},x0={})",
                spec.theta, spec.eps, spec.x0
            ))
        }),
    ))
}

/// Explicit Euler: `X_{i+1} = X_i + θ X_i Δt + ε (z_{i+1} − z_i)`.
pub fn euler_solution(spec: &OuSpec, z: &GridPath) -> Result<GridPath> {
    check_driver(z)?;
    let dt = z.dt();
    let mut x = spec.x0;
    let mut values = Vec::with_capacity(z.values().len());
    values.push(x);
    for w in z.values().windows(2) {
        x += spec.theta * x * dt + spec.eps * (w[1] - w[0]);
        values.push(x);
    }
    Ok(GridPath::from_parts(
        z.t_max(),
        values,
        z.provenance().map(|p| {
            p.derived(&format!(
                "euler(theta={},eps={},x0={})",
                spec.theta, spec.eps, spec.x0
            ))
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::simulate_fbm;
    use crate::noise::make_rng;

    fn fbm(seed: u64, n: usize) -> GridPath {
        simulate_fbm(0.7, n, 1.0, &mut make_rng(seed, 0)).unwrap()
    }

    #[test]
    fn rejects_nonpositive_eps() {
        assert!(OuSpec::new(1.0, 0.0, 1.0).is_err());
        assert!(OuSpec::new(1.0, -0.1, 1.0).is_err());
        assert!(OuSpec::new(f64::NAN, 0.1, 1.0).is_err());
    }

    #[test]
    fn skeleton_closed_form() {
        let x = deterministic_solution(0.0, 2.5, 1.0, 8).unwrap();
        assert!(x.values().iter().all(|&v| v == 2.5));
        let x = deterministic_solution(1.3, 0.0, 1.0, 8).unwrap();
        assert!(x.values().iter().all(|&v| v == 0.0));
        let x = deterministic_solution(1.0, 1.0, 1.0, 8).unwrap();
        assert!((x.last() - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn zero_driver_gives_skeleton() {
        let z = GridPath::new(1.0, vec![0.0; 17], None).unwrap();
        let spec = OuSpec::new(-0.7, 0.3, 2.0).unwrap();
        let x = exact_solution(&spec, &z).unwrap();
        let d = deterministic_solution(-0.7, 2.0, 1.0, 16).unwrap();
        assert_eq!(x.values(), d.values());
    }

    #[test]
    fn zero_drift_solutions_coincide() {
        let z = fbm(3, 64);
        let spec = OuSpec::new(0.0, 0.2, 1.5).unwrap();
        let x = exact_solution(&spec, &z).unwrap();
        let e = euler_solution(&spec, &z).unwrap();
        for ((xi, ei), zi) in x.values().iter().zip(e.values()).zip(z.values()) {
            assert_eq!(*xi, 1.5 + 0.2 * zi);
            assert!((ei - xi).abs() < 1e-14);
        }
    }

    #[test]
    fn deviation_is_eps_times_y() {
        let z = fbm(4, 128);
        let spec = OuSpec::new(1.2, 0.05, 1.0).unwrap();
        let x = exact_solution(&spec, &z).unwrap();
        let y = build_y(&z, 1.2);
        let skel = skeleton_like(1.2, 1.0, &z);
        for i in 0..=z.n() {
            let dev = x.values()[i] - skel.values()[i];
            assert!((dev - 0.05 * y.values()[i]).abs() < 1e-14, "i={i}");
        }
    }

    #[test]
    fn exact_solution_is_affine_in_eps() {
        let z = fbm(5, 128);
        let a = OuSpec::new(-1.0, 0.1, 1.0).unwrap();
        let skel = skeleton_like(-1.0, 1.0, &z);
        let x1 = exact_solution(&a, &z).unwrap();
        let x2 = exact_solution(&a.with_eps(0.2).unwrap(), &z).unwrap();
        for i in 0..=z.n() {
            let d1 = x1.values()[i] - skel.values()[i];
            let d2 = x2.values()[i] - skel.values()[i];
            assert!((d2 - 2.0 * d1).abs() < 1e-14);
        }
    }

    #[test]
    fn euler_compound_growth() {
        let z = GridPath::new(1.0, vec![0.0; 1025], None).unwrap();
        let spec = OuSpec::new(1.0, 0.1, 1.0).unwrap();
        let x = euler_solution(&spec, &z).unwrap();
        assert!((x.last() - std::f64::consts::E).abs() < 2e-3);
        assert!(x.last() < std::f64::consts::E);
    }

    #[test]
    fn driver_must_start_at_zero() {
        let z = GridPath::new(1.0, vec![0.1, 0.2], None).unwrap();
        let spec = OuSpec::new(1.0, 0.1, 1.0).unwrap();
        assert!(exact_solution(&spec, &z).is_err());
        assert!(euler_solution(&spec, &z).is_err());
    }

    #[test]
    fn provenance_is_carried() {
        let z = fbm(6, 16);
        let spec = OuSpec::new(1.0, 0.1, 1.0).unwrap();
        let x = exact_solution(&spec, &z).unwrap();
        let p = x.provenance().unwrap();
        assert_eq!(p.stream, 0);
        assert!(p.generator.starts_with("fbm"));
    }
}
