use hermite_ou::estimator::{j_eps_objective, weighted_median};
use hermite_ou::hermite::simulate_fbm;
use hermite_ou::{
    build_y, deterministic_solution, exact_solution, j0_objective, make_rng, minimize_l1,
    objective_s, separation_g, zeta_solver, EstimatorConfig, OuSpec,
};
use proptest::prelude::*;

fn observed(seed: u64, stream: u64, theta: f64, eps: f64) -> hermite_ou::GridPath {
    let z = simulate_fbm(0.7, 512, 1.0, &mut make_rng(seed, stream)).unwrap();
    exact_solution(&OuSpec::new(theta, eps, 1.0).unwrap(), &z).unwrap()
}

#[test]
fn estimator_is_consistent_at_small_noise() {
    let cfg = EstimatorConfig::with_bounds(-2.0, 4.0).unwrap();
    let hits = (0..200)
        .filter(|&r| {
            (minimize_l1(&observed(200, r, 1.0, 0.05), 1.0, &cfg)
                .unwrap()
                .theta_hat
                - 1.0)
                .abs()
                < 0.5
        })
        .count();
    assert!(hits >= 190, "{hits} of 200 within 0.5");
}

#[test]
fn widening_theta_does_not_move_interior_minimizer() {
    let narrow = EstimatorConfig::with_bounds(-2.0, 4.0).unwrap();
    let wide = EstimatorConfig::with_bounds(-3.5, 5.5).unwrap();
    for r in 0..20 {
        let x = observed(201, r, 1.0, 0.1);
        let a = minimize_l1(&x, 1.0, &narrow).unwrap();
        assert!(!a.at_boundary(&narrow));
        let b = minimize_l1(&x, 1.0, &wide).unwrap();
        assert!(
            (a.theta_hat - b.theta_hat).abs() <= 2.0 * narrow.refine_tol,
            "stream {r}: {} vs {}",
            a.theta_hat,
            b.theta_hat
        );
    }
}

#[test]
fn objective_is_continuous() {
    let x = observed(202, 0, 0.5, 0.1);
    for k in -20..=20 {
        let theta = k as f64 / 10.0;
        let d = (objective_s(&x, theta + 1e-6, 1.0) - objective_s(&x, theta, 1.0)).abs();
        assert!(d < 1e-4, "theta {theta}: {d}");
    }
}

#[test]
fn separation_is_positive_and_nondecreasing() {
    let cfg = EstimatorConfig::with_bounds(-5.0, 5.0).unwrap();
    for theta0 in [-1.0, 0.0, 1.0] {
        let mut last = 0.0;
        for k in 1..40 {
            let g = separation_g(k as f64 * 0.1, theta0, 1.0, &cfg).unwrap();
            assert!(g > 0.0 && g >= last);
            last = g;
        }
    }
}

#[test]
fn zeta_minimizes_j0() {
    for r in 0..20 {
        let z = simulate_fbm(0.7, 512, 1.0, &mut make_rng(203, r)).unwrap();
        let y = build_y(&z, 1.0);
        let zeta = zeta_solver(&y, 1.0, 1.0).unwrap();
        let j = |u| j0_objective(&y, u, 1.0, 1.0);
        assert!(j(zeta) <= j(zeta + 0.1) && j(zeta) <= j(zeta - 0.1));
        let h = 1e-6;
        assert!((j(zeta + h) - j(zeta)) / h >= -1e-9);
        assert!((j(zeta) - j(zeta - h)) / h <= 1e-9);
    }
}

#[test]
fn scaled_error_minimizes_j_eps() {
    // θ̂ = θ0 + ε u_ε where u_ε minimizes J_ε.
    let cfg = EstimatorConfig::with_bounds(-2.0, 4.0).unwrap();
    let eps = 1e-2;
    let z = simulate_fbm(0.7, 512, 1.0, &mut make_rng(204, 0)).unwrap();
    let x = exact_solution(&OuSpec::new(1.0, eps, 1.0).unwrap(), &z).unwrap();
    let y = build_y(&z, 1.0);
    let u = (minimize_l1(&x, 1.0, &cfg).unwrap().theta_hat - 1.0) / eps;
    let j = |v| j_eps_objective(&y, v, eps, 1.0, 1.0);
    for du in [-1e-2, -1e-4, 1e-4, 1e-2] {
        assert!(j(u) <= j(u + du) + 1e-12);
    }
}

#[test]
fn j_eps_converges_to_j0_at_first_order() {
    let z = simulate_fbm(0.7, 512, 1.0, &mut make_rng(205, 0)).unwrap();
    let y = build_y(&z, 1.0);
    for u in [-1.0, 0.3, 2.0] {
        let j0 = j0_objective(&y, u, 1.0, 1.0);
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e| (j_eps_objective(&y, u, e, 1.0, 1.0) - j0).abs())
            .collect();
        for w in gaps.windows(2) {
            let slope = (w[0] / w[1]).log10();
            assert!((slope - 1.0).abs() < 0.1, "u={u}: slope {slope}");
        }
    }
}

proptest! {
    #[test]
    fn noise_free_paths_are_recovered(theta0 in -1.8f64..1.8, x0 in prop::sample::select(vec![-2.0, -0.5, 0.7, 3.0])) {
        let x = deterministic_solution(theta0, x0, 1.0, 128).unwrap();
        let cfg = EstimatorConfig::with_bounds(-2.0, 2.0).unwrap();
        let r = minimize_l1(&x, x0, &cfg).unwrap();
        prop_assert!((r.theta_hat - theta0).abs() <= 2.0 * cfg.refine_tol);
    }

    #[test]
    fn weighted_median_is_optimal(
        pairs in prop::collection::vec((-10.0f64..10.0, 0.01f64..5.0), 1..40),
        probe in -12.0f64..12.0,
    ) {
        let (r, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let m = weighted_median(&r, &w).unwrap();
        let obj = |u: f64| r.iter().zip(&w).map(|(ri, wi)| wi * (ri - u).abs()).sum::<f64>();
        prop_assert!(obj(m) <= obj(probe) + 1e-9);
        prop_assert!(r.contains(&m));
    }

    #[test]
    fn objective_is_homogeneous(scale in 0.1f64..10.0, theta in -2.0f64..2.0) {
        let x = observed(206, 0, 0.5, 0.1);
        let sx = hermite_ou::GridPath::new(1.0, x.values().iter().map(|v| scale * v).collect(), None).unwrap();
        let a = objective_s(&sx, theta, scale);
        let b = scale * objective_s(&x, theta, 1.0);
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + b));
    }
}
