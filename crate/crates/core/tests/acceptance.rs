//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::process::Command;
use std::time::Instant;

use hermite_ou::harness::stats::{mean, se_mean, variance};
use hermite_ou::harness::{
    self, Check, ExperimentConfig, ExperimentKind, Report, BIAS_ALLOWANCE_Q2,
};
use hermite_ou::ou::skeleton_like;
use hermite_ou::par::map_streams;
use hermite_ou::path::sup_abs;
use hermite_ou::{
    build_y, exact_solution, make_rng, minimize_l1, zeta_solver, EstimatorConfig, GeneratorKind,
    HermiteSpec, OuSpec, PathSampler,
};

const SEED: u64 = 1;

fn sampler(q: u32, h: f64, n: usize, t_max: f64) -> PathSampler {
    PathSampler::new(
        GeneratorKind::Auto,
        &HermiteSpec::new(q, h).unwrap(),
        n,
        t_max,
        32,
    )
    .unwrap()
}

fn check<'a>(report: &'a Report, name: &str) -> &'a Check {
    report
        .checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no check named `{name}`"))
}

fn audit(q: u32, h: f64) -> Report {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::CovarianceAudit);
    cfg.q = q;
    cfg.h = h;
    cfg.seed = SEED;
    harness::run(&cfg).unwrap()
}

const CASES: [(u32, f64); 3] = [(1, 0.6), (1, 0.7), (2, 0.7)];

fn normalization() -> (bool, String) {
    let mut pass = true;
    let mut detail = Vec::new();
    for (q, h) in CASES {
        let s = sampler(q, h, 512, 1.0);
        let z1 = map_streams(0..4000, |r| s.sample(&mut make_rng(SEED, r)).last());
        let m = mean(&z1);
        let centred: Vec<f64> = z1.iter().map(|z| (z - m).powi(2)).collect();
        let (v, se) = (variance(&z1), se_mean(&centred));
        let allowance = if q == 1 { 0.0 } else { BIAS_ALLOWANCE_Q2 };
        pass &= (v - 1.0).abs() <= 3.0 * se + allowance;
        detail.push(format!("(q={q},H={h}) Var={v:.4} SE={se:.4}"));
    }
    (pass, detail.join("; "))
}

fn covariance(audits: &[Report]) -> (bool, String) {
    let pass = audits.iter().all(|a| check(a, "path covariance").pass);
    let detail = CASES
        .iter()
        .zip(audits)
        .map(|((q, h), a)| format!("(q={q},H={h}) {}", check(a, "path covariance").detail))
        .collect::<Vec<_>>()
        .join("; ");
    (pass, detail)
}

fn wiener(a: &Report) -> (bool, String) {
    let row = a
        .rows
        .iter()
        .find(|r| r[0] == "exp(-u)" && r[1] == "1")
        .expect("wiener row");
    let num = |i: usize| row[i].parse::<f64>().unwrap();
    let (target, est, se, z) = (num(2), num(3), num(4), num(5));
    let doubling = check(a, "quadrature doubling");
    (
        z.abs() <= 3.0 && doubling.pass,
        format!(
            "MC {est:.5} vs quadrature {target:.5} (SE {se:.5}, z={z:.2}); {}",
            doubling.detail
        ),
    )
}

fn gronwall() -> (bool, String) {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for q in [1, 2] {
        let s = sampler(q, 0.7, 512, 1.0);
        for theta0 in [-1.0, 1.0] {
            let ratios = map_streams(0..1000, |r| {
                let z = s.sample(&mut make_rng(SEED, r));
                let x = exact_solution(&OuSpec::new(theta0, 0.1, 1.0).unwrap(), &z).unwrap();
                let skel = skeleton_like(theta0, 1.0, &z);
                let gap: Vec<f64> = x
                    .values()
                    .iter()
                    .zip(skel.values())
                    .map(|(a, b)| a - b)
                    .collect();
                sup_abs(&gap) / (0.1 * f64::exp(1.0) * sup_abs(z.values()))
            });
            violations += ratios.iter().filter(|&&r| r > 1.01).count();
            worst = ratios.iter().copied().fold(worst, f64::max);
        }
    }
    (
        violations == 0,
        format!("{violations} violations in 4000 paths (q=1,2; theta0=-1,1); max ratio to bound {worst:.4}"),
    )
}

fn maximal() -> (bool, String) {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Maximal);
    cfg.p_values = vec![1.0];
    cfg.seed = SEED;
    let c = check(&harness::run(&cfg).unwrap(), "maximal spread (p=1)").clone();
    (c.pass, c.detail)
}

fn consistency() -> (bool, String) {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Consistency);
    cfg.seed = SEED;
    let r = harness::run(&cfg).unwrap();
    let p: Vec<String> = r.column("p_hat").iter().map(|v| format!("{v}")).collect();
    (
        r.all_pass(),
        format!(
            "p_hat by eps {}; {}",
            p.join(" "),
            r.checks
                .iter()
                .map(|c| c.detail.clone())
                .collect::<Vec<_>>()
                .join("; ")
        ),
    )
}

fn limit(q: u32) -> (bool, String) {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LimitDist);
    cfg.q = q;
    cfg.seed = SEED;
    let r = harness::run(&cfg).unwrap();
    (
        r.all_pass(),
        r.checks
            .iter()
            .map(|c| c.detail.clone())
            .collect::<Vec<_>>()
            .join("; "),
    )
}

const GRID: usize = 100_000;

/// Brute-force trapezoid `∫ |Y_t − u x0 t e^{θ0 t}| dt`.
fn j0_direct(y: &[f64], dt: f64, u: f64, theta0: f64) -> f64 {
    let n = y.len() - 1;
    (0..=n)
        .map(|i| {
            let t = i as f64 * dt;
            let w = if i == 0 || i == n { 0.5 * dt } else { dt };
            w * (y[i] - u * t * (theta0 * t).exp()).abs()
        })
        .sum()
}

/// Brute-force trapezoid `∫ |X_t − x0 e^{θt}| dt`, with `e^{θt}` built by
/// repeated multiplication.
fn s_direct(x: &[f64], dt: f64, theta: f64) -> f64 {
    let n = x.len() - 1;
    let step = (theta * dt).exp();
    let mut e = 1.0;
    let mut sum = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        sum += w * (xi - e).abs();
        e *= step;
    }
    sum * dt
}

fn argmin_on_grid(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let step = (hi - lo) / (GRID - 1) as f64;
    let mut best = (f64::INFINITY, lo);
    for k in 0..GRID {
        let u = lo + k as f64 * step;
        let v = f(u);
        if v < best.0 {
            best = (v, u);
        }
    }
    (best.1, step)
}

fn oracles() -> (bool, String) {
    let s = sampler(1, 0.7, 512, 1.0);
    let zeta_gaps = map_streams(0..100, |r| {
        let y = build_y(&s.sample(&mut make_rng(SEED, r)), 1.0);
        let zeta = zeta_solver(&y, 1.0, 1.0).unwrap();
        let ratios: Vec<f64> = (1..=y.n())
            .map(|i| y.values()[i] / (y.time(i) * y.time(i).exp()))
            .collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (u, step) = argmin_on_grid(lo, hi, |u| j0_direct(y.values(), y.dt(), u, 1.0));
        (zeta - u).abs() / step
    });
    let zeta_bad = zeta_gaps.iter().filter(|&&g| g > 1.0).count();

    let cfg = EstimatorConfig::with_bounds(-2.0, 4.0).unwrap();
    let min_gaps = map_streams(0..20, |r| {
        let z = s.sample(&mut make_rng(SEED, r));
        let x = exact_solution(&OuSpec::new(1.0, 0.1, 1.0).unwrap(), &z).unwrap();
        let theta_hat = minimize_l1(&x, 1.0, &cfg).unwrap().theta_hat;
        let (t, step) = argmin_on_grid(cfg.theta_lo, cfg.theta_hi, |th| {
            s_direct(x.values(), x.dt(), th)
        });
        (theta_hat - t).abs() / (10.0 * cfg.refine_tol + step)
    });
    let min_bad = min_gaps.iter().filter(|&&g| g > 1.0).count();
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    (
        zeta_bad == 0 && min_bad == 0,
        format!(
            "zeta: {zeta_bad} of 100 beyond one grid step (max {:.3} steps); minimize: {min_bad} of 20 beyond tolerance (max {:.3} of tolerance)",
            worst(&zeta_gaps),
            worst(&min_gaps)
        ),
    )
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    let d = dir.path().to_str().unwrap().to_string();
    let invocations: Vec<Vec<String>> = [
        vec![
            "simulate",
            "--process",
            "hermite",
            "--q",
            "1",
            "--H",
            "0.7",
            "--n",
            "512",
            "--seed",
            "1",
        ],
        vec![
            "simulate",
            "--process",
            "hermite",
            "--q",
            "2",
            "--n",
            "256",
            "--m",
            "16",
            "--seed",
            "3",
        ],
        vec![
            "simulate",
            "--process",
            "hermite",
            "--q",
            "2",
            "--n",
            "64",
            "--generator",
            "kernel",
        ],
        vec![
            "simulate",
            "--process",
            "ou",
            "--theta",
            "1",
            "--eps",
            "0.1",
            "--x0",
            "1",
            "--out",
            &p("x.csv"),
        ],
        vec![
            "simulate",
            "--process",
            "ou",
            "--theta",
            "-1",
            "--scheme",
            "euler",
            "--seed",
            "9",
        ],
        vec!["estimate", "--input", &p("x.csv"), "--out", &p("est.csv")],
        vec![
            "experiment",
            "--kind",
            "consistency",
            "--replications",
            "40",
            "--out-dir",
            &d,
        ],
        vec![
            "experiment",
            "--kind",
            "limit-dist",
            "--replications",
            "40",
            "--set",
            "ks_samples=40",
            "--out-dir",
            &d,
        ],
        vec![
            "experiment",
            "--kind",
            "maximal",
            "--replications",
            "100",
            "--out-dir",
            &d,
        ],
        vec![
            "experiment",
            "--kind",
            "covariance-audit",
            "--replications",
            "200",
            "--out-dir",
            &d,
        ],
    ]
    .iter()
    .map(|v| v.iter().map(|s| s.to_string()).collect())
    .collect();
    let files = [
        "x.csv",
        "est.csv",
        "consistency.csv",
        "limit-dist.csv",
        "maximal.csv",
        "covariance-audit.csv",
    ];
    let snapshot = || -> Vec<Vec<u8>> {
        let mut out: Vec<Vec<u8>> = invocations
            .iter()
            .map(|args| {
                let o = Command::new(env!("CARGO_BIN_EXE_hermite-ou"))
                    .args(args)
                    .output()
                    .unwrap();
                assert!(
                    o.status.success(),
                    "{args:?}: {}",
                    String::from_utf8_lossy(&o.stderr)
                );
                o.stdout
            })
            .collect();
        for f in files {
            out.push(std::fs::read(dir.path().join(f)).unwrap());
            std::fs::remove_file(dir.path().join(f)).unwrap();
        }
        out
    };
    let (a, b) = (snapshot(), snapshot());
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    (
        differing == 0,
        format!(
            "{differing} of {} outputs differ across repeated invocations",
            a.len()
        ),
    )
}

fn main() {
    // Forwarded by `cargo test`; a name filter that excludes this target skips it.
    let args: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    let started = Instant::now();
    let mut checks = Vec::new();
    let mut record = |k: usize, name: &str, (pass, detail): (bool, String)| {
        let c = Check::new(
            format!("criterion {k} {name}"),
            pass,
            format!("{detail} [{:.0?}]", started.elapsed()),
        );
        println!("{}", c.line());
        checks.push(c);
    };

    let audits: Vec<Report> = CASES.iter().map(|&(q, h)| audit(q, h)).collect();
    record(1, "normalization", normalization());
    record(2, "covariance", covariance(&audits));
    record(3, "wiener covariance", wiener(&audits[1]));
    record(4, "gronwall bound", gronwall());
    record(5, "maximal identity", maximal());
    record(6, "consistency", consistency());
    record(7, "limit distribution q=1", limit(1));
    record(8, "limit distribution q=2", limit(2));
    record(9, "oracle equivalence", oracles());
    record(10, "determinism", determinism());

    let failed = checks.iter().filter(|c| !c.pass).count();
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
