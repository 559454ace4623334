use hermite_ou::hermite::{simulate_fbm, PartialSumGenerator};
use hermite_ou::ou::skeleton_like;
use hermite_ou::path::sup_abs;
use hermite_ou::{euler_solution, exact_solution, make_rng, GridPath, HermiteSpec, OuSpec};

fn refine(z: &GridPath, factor: usize) -> GridPath {
    let n = z.n() * factor;
    let v = z.values();
    let values = (0..=n)
        .map(|i| {
            let (k, r) = (i / factor, i % factor);
            if r == 0 {
                v[k]
            } else {
                v[k] + (v[k + 1] - v[k]) * r as f64 / factor as f64
            }
        })
        .collect();
    GridPath::new(z.t_max(), values, None).unwrap()
}

fn euler_gaps(theta: f64, seed: u64) -> Vec<f64> {
    let z = simulate_fbm(0.7, 64, 1.0, &mut make_rng(seed, 0)).unwrap();
    let spec = OuSpec::new(theta, 0.5, 1.0).unwrap();
    [1, 2, 4, 8]
        .iter()
        .map(|&f| {
            let zf = refine(&z, f);
            let a = exact_solution(&spec, &zf).unwrap();
            let b = euler_solution(&spec, &zf).unwrap();
            a.values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

// The gap ratio under halving tends to 2 but sits slightly below it at
// coarse levels (1.97 to 1.999 observed), so the assertion is on the order.
#[test]
fn euler_gap_is_first_order() {
    for theta in [-1.0, 1.0] {
        for seed in 0..5 {
            let g = euler_gaps(theta, seed);
            for w in g.windows(2) {
                let r = w[0] / w[1];
                assert!(
                    r > 1.95 && r < 2.05,
                    "theta {theta}, seed {seed}: ratio {r}"
                );
            }
        }
    }
}

fn check_gronwall(z: &GridPath, theta: f64, eps: f64) -> (bool, bool) {
    let spec = OuSpec::new(theta, eps, 1.0).unwrap();
    let x = exact_solution(&spec, z).unwrap();
    let skel = skeleton_like(theta, 1.0, z);
    let v: Vec<f64> = x
        .values()
        .iter()
        .zip(skel.values())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let sup_ok = sup_abs(&v) <= 1.01 * eps * theta.abs().exp() * sup_abs(z.values());
    // Discrete form of V_t ≤ |θ| ∫_0^t V ds + ε|Z_t| with a right-endpoint sum.
    let dt = z.dt();
    let mut acc = 0.0;
    let mut integral_ok = true;
    for (i, (&vi, &zi)) in v.iter().zip(z.values()).enumerate() {
        if i > 0 {
            acc += vi;
        }
        if vi > 1.01 * (theta.abs() * dt * acc + eps * zi.abs()) + 1e-15 {
            integral_ok = false;
        }
    }
    (sup_ok, integral_ok)
}

#[test]
fn gronwall_bounds_hold_for_rosenblatt_paths() {
    let spec = HermiteSpec::new(2, 0.7).unwrap();
    let g = PartialSumGenerator::new(&spec, 256, 16, 1.0).unwrap();
    for r in 0..200 {
        let z = g.sample(&mut make_rng(11, r));
        for theta in [-1.0, 1.0, 2.5] {
            let (sup_ok, integral_ok) = check_gronwall(&z, theta, 0.1);
            assert!(sup_ok && integral_ok, "stream {r}, theta {theta}");
        }
    }
}

#[test]
fn gronwall_bounds_hold_for_fbm_paths() {
    for r in 0..200 {
        let z = simulate_fbm(0.6, 512, 1.0, &mut make_rng(12, r)).unwrap();
        for theta in [-2.0, 1.0] {
            let (sup_ok, integral_ok) = check_gronwall(&z, theta, 0.3);
            assert!(sup_ok && integral_ok, "stream {r}, theta {theta}");
        }
    }
}

#[test]
fn exact_and_euler_agree_on_fine_grids() {
    let z = simulate_fbm(0.7, 4096, 1.0, &mut make_rng(3, 0)).unwrap();
    let spec = OuSpec::new(0.8, 0.2, 1.0).unwrap();
    let a = exact_solution(&spec, &z).unwrap();
    let b = euler_solution(&spec, &z).unwrap();
    assert!((a.last() - b.last()).abs() < 2e-3);
}
