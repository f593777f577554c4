//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Criteria 1-12 run in a single-threaded pool; criterion 13 reruns all of
//! them (once single-threaded, once on four threads) and compares every
//! reported scalar bit for bit.

mod common;

use std::f64::consts::E;
use std::time::{Duration, Instant};

use burgers3d::moments::*;
use burgers3d::noise::{doob_sup_moment_bound_sharp, sample_path, NoiseConfig};
use burgers3d::solver::*;
use burgers3d::spectral::*;
use burgers3d::verify::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    scalars: Vec<f64>,
}

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, DealiasRule::TwoThirds).unwrap()
}

fn heat_kernel_exactness() -> Outcome {
    let start = Instant::now();
    let g = grid(16);
    let mut v0 = InitialCondition::RandomSmooth { amplitude: 1.0, decay_r: 2.0, seed: 1 }
        .build(&g)
        .unwrap();
    for (k, comp) in [([1, 0, 0], 0), ([0, 3, -2], 1), ([4, 4, 4], 2)] {
        let m = InitialCondition::SingleMode { k, component: comp, amplitude: 0.5 }
            .build(&g)
            .unwrap();
        v0.add_scaled(&m, 1.0);
    }
    let mut cfg = SolverConfig::new(g, 0.1, NoiseConfig::new(0.0, 0));
    cfg.nonlinear = false;
    let mut worst = 0.0f64;
    let mut instants = 0;
    integrate_observed(&v0, &cfg.sample_path().unwrap(), &cfg, |t, v| {
        worst = worst.max(v.max_abs_diff(&heat_oracle(&v0, t, cfg.nu).unwrap()));
        instants += 1;
    })
    .unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-12 && elapsed < Duration::from_secs(1),
        detail: format!("max coefficient error {worst:.2e} over {instants} instants, {elapsed:.2?}"),
        scalars: vec![worst],
    }
}

fn cole_hopf() -> Outcome {
    let start = Instant::now();
    let g = grid(64);
    let mut cfg = SolverConfig::new(g, 1.0, NoiseConfig::new(0.0, 0));
    cfg.nu = 0.1;
    cfg.record_every = 100;
    let v0 = InitialCondition::SineShear { amplitude: 1.0 }.build(&g).unwrap();
    let u0 = x1_profile(&v0, &g).unwrap();
    let mut worst = 0.0f64;
    integrate_observed(&v0, &cfg.sample_path().unwrap(), &cfg, |t, v| {
        let exact = cole_hopf_oracle_1d(&u0, cfg.nu, t).unwrap();
        let got = x1_profile(v, &g).unwrap();
        let scale = exact.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let err = got.iter().zip(&exact).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        worst = worst.max(err / scale);
    })
    .unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-4 && elapsed < Duration::from_secs(60),
        detail: format!("max relative |.|_inf error {worst:.2e} at N=64, {elapsed:.2?}"),
        scalars: vec![worst],
    }
}

fn brute_force_nonlinearity() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..100u64 {
        let n = 2 + (i % 7) as usize;
        let g = grid(n);
        let u = common::random_field(n, 1000 + i);
        let fast = convective_term(&u, &g).unwrap();
        let slow = common::brute_force_convection(&u, g.dealias_cutoff());
        worst = worst.max(fast.max_abs_diff(&slow) / slow.max_abs());
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-10 && elapsed < Duration::from_secs(30),
        detail: format!("max relative error {worst:.2e} on 100 fields, N = 2..8, {elapsed:.2?}"),
        scalars: vec![worst],
    }
}

fn route_equivalence() -> Outcome {
    let g = grid(32);
    let v0 = InitialCondition::SineShear { amplitude: 1.0 }.build(&g).unwrap();
    let mut mean_gap = [0.0; 2];
    for seed in 0..5 {
        let noise = NoiseConfig::new(0.5, seed);
        let path = sample_path(&noise, 1e-3, 0.5).unwrap();
        for (j, dt) in [2e-3, 1e-3].into_iter().enumerate() {
            let mut cfg = SolverConfig::new(g, 0.5, noise);
            cfg.dt = dt;
            cfg.record_every = 1000;
            let v = integrate(&v0, &path, &cfg).unwrap();
            let u = integrate_direct_stratonovich(&v0, &path, &cfg).unwrap();
            let mut gap = recover_u_field(v.final_state.as_ref().unwrap(), *v.alpha.last().unwrap());
            gap.add_scaled(u.final_state.as_ref().unwrap(), -1.0);
            mean_gap[j] += l2_norm(&gap) / 5.0;
        }
    }
    let ratio = mean_gap[0] / mean_gap[1];
    let order = ratio.log2();
    Outcome {
        pass: (1.6..=2.4).contains(&ratio) && order >= 0.9,
        detail: format!(
            "mean terminal L2 gap {:.3e} -> {:.3e}, ratio {ratio:.3}, order {order:.3}",
            mean_gap[0], mean_gap[1]
        ),
        scalars: vec![mean_gap[0], mean_gap[1]],
    }
}

struct Member {
    n: usize,
    traj: TrajectoryRecord,
    u0_l1: f64,
}

/// Sine shear, b = 0.5, seeds 0..10 at N = 16, 32, 64 on shared paths.
fn max_principle_ensemble() -> Vec<Member> {
    let mut out = Vec::new();
    for n in [16, 32, 64] {
        let g = grid(n);
        let v0 = InitialCondition::SineShear { amplitude: 1.0 }.build(&g).unwrap();
        let l1 = lp_norm(&synthesize(&v0, &g).unwrap(), 1.0).unwrap();
        for seed in 0..10 {
            let mut cfg = SolverConfig::new(g, 2.0, NoiseConfig::new(0.5, seed));
            cfg.nu = 0.04;
            cfg.record_every = 1;
            let traj = integrate(&v0, &cfg.sample_path().unwrap(), &cfg).unwrap();
            out.push(Member { n, traj, u0_l1: l1 });
        }
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    0.5 * (xs[(n - 1) / 2] + xs[n / 2])
}

fn maximum_principle(ens: &[Member], elapsed: Duration) -> Outcome {
    let initial_ok = ens.iter().all(|m| m.traj.linf[0] == 1.0);
    let worst32 = ens
        .iter()
        .filter(|m| m.n == 32)
        .flat_map(|m| m.traj.linf.iter().copied())
        .fold(0.0, f64::max);
    let medians: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            median(
                ens.iter()
                    .filter(|m| m.n == n)
                    .map(|m| max_principle_violation(&m.traj))
                    .collect(),
            )
        })
        .collect();
    let decreasing = medians[0] > medians[1] && medians[1] > medians[2];
    Outcome {
        pass: initial_ok && worst32 <= 1.01 && decreasing && elapsed < Duration::from_secs(600),
        detail: format!(
            "worst sup|v|_inf at N=32 {worst32:.5}; median violation N=16/32/64 {:.3e} > {:.3e} > {:.3e}; {elapsed:.2?}",
            medians[0], medians[1], medians[2]
        ),
        scalars: [vec![worst32], medians].concat(),
    }
}

fn mean_drift(ens: &[Member]) -> Outcome {
    let tol = ToleranceConfig::default();
    let mut worst = f64::INFINITY;
    let mut pass = true;
    let mut checked = 0;
    for m in ens.iter().filter(|m| m.traj.status == RunStatus::Completed) {
        let r = check_mean_drift(&recover_u_from_record(&m.traj).unwrap(), &tol).unwrap();
        pass &= r.pass;
        worst = worst.min(r.worst_margin / r.scale.max(f64::MIN_POSITIVE));
        checked += 1;
    }
    Outcome {
        pass: pass && checked == ens.len(),
        detail: format!("{checked} trajectories, worst margin/scale {worst:.3e}"),
        scalars: vec![worst],
    }
}

fn norm_domination(ens: &[Member]) -> Outcome {
    let tol = ToleranceConfig::default();
    let mut worst = f64::INFINITY;
    let mut pass = true;
    let mut checked = 0;
    for m in ens.iter().filter(|m| m.traj.status == RunStatus::Completed) {
        for s in [0.5, 1.0, 1.5] {
            let r = check_norm_domination(&m.traj, s, m.u0_l1, &tol).unwrap();
            pass &= r.pass;
            worst = worst.min(r.worst_margin / r.scale);
        }
        checked += 1;
    }
    Outcome {
        pass: pass && checked == ens.len(),
        detail: format!("{checked} trajectories x s in {{1/2, 1, 3/2}}, worst margin/scale {worst:.3e}"),
        scalars: vec![worst],
    }
}

fn alpha_ensemble(n_paths: usize, b: f64) -> EnsembleConfig {
    let mut solver = SolverConfig::new(grid(2), 1.0, NoiseConfig::new(b, 0));
    solver.dt = 1e-3;
    EnsembleConfig::new(n_paths, 0, solver, InitialCondition::SineShear { amplitude: 1.0 })
}

fn doob_sharp() -> Outcome {
    let start = Instant::now();
    let cfg = alpha_ensemble(10_000, 1.0);
    let e = check_alpha_sup_moment(&cfg).unwrap();
    let bound = doob_sup_moment_bound_sharp(2.0, 1.0, 1.0).unwrap();
    let floor = E * E;
    let elapsed = start.elapsed();
    let upper = e.value <= bound + 3.0 * e.stderr;
    let lower = e.value >= floor - 3.0 * e.stderr;
    Outcome {
        pass: upper && lower && e.pass == Some(true) && elapsed < Duration::from_secs(120),
        detail: format!(
            "E sup alpha^-2 = {:.4} +/- {:.4}; bound {bound:.4}, floor e^2 = {floor:.4}; {elapsed:.2?}",
            e.value, e.stderr
        ),
        scalars: vec![e.value, e.stderr],
    }
}

fn exp_moment() -> Outcome {
    let mut cfg = alpha_ensemble(100_000, 1.0);
    cfg.big_q = 1.0;
    let e = check_exp_moment(&cfg).unwrap();
    let exact = 0.5f64.exp();
    Outcome {
        pass: (e.value - exact).abs() <= 3.0 * e.stderr,
        detail: format!("E exp(W(1)) = {:.5} +/- {:.5}, exact {exact:.5}", e.value, e.stderr),
        scalars: vec![e.value, e.stderr],
    }
}

fn alpha_power_moments() -> Outcome {
    let cfg = alpha_ensemble(10_000, 1.0);
    let plus = check_alpha_power_moment(&cfg, 1.0).unwrap();
    let minus = check_alpha_power_moment(&cfg, -1.0).unwrap();
    let bound = 2.0 * E;
    let ok = |m: &MomentEstimate| m.value <= bound + 3.0 * m.stderr;
    Outcome {
        pass: ok(&plus) && ok(&minus),
        detail: format!(
            "E sup alpha = {:.4} +/- {:.4}, E sup alpha^-1 = {:.4} +/- {:.4}, bound 2e = {bound:.4}",
            plus.value, plus.stderr, minus.value, minus.stderr
        ),
        scalars: vec![plus.value, plus.stderr, minus.value, minus.stderr],
    }
}

fn log_moment_shape() -> Outcome {
    let g = grid(8);
    let mut solver = SolverConfig::new(g, 2.0, NoiseConfig::new(0.5, 0));
    solver.record_every = 10;
    let mut cfg = EnsembleConfig::new(200, 0, solver, InitialCondition::SineShear { amplitude: 1.0 });
    cfg.horizons = vec![0.5, 1.0, 2.0];
    let r = estimate_log_h1_moment(&cfg).unwrap();
    let values: Vec<f64> = r.estimates.iter().map(|e| e.value).collect();
    let finite = values.iter().all(|x| x.is_finite()) && r.estimates.iter().all(|e| e.aborted == 0);
    let nondecreasing = values.windows(2).all(|w| w[1] >= w[0]);
    let fit = r.fit;
    let rate_ok = fit.is_some_and(|f| f.r >= 0.0);
    let (a, rate, res) = fit.map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.a, f.r, f.residual));
    Outcome {
        pass: finite && nondecreasing && rate_ok,
        detail: format!(
            "E sup log(1+|u|_H1^2) at T=0.5/1/2: {:.4} / {:.4} / {:.4}; fit a={a:.4}, r={rate:.4}, residual {res:.2e}",
            values[0], values[1], values[2]
        ),
        scalars: [values, vec![a, rate, res]].concat(),
    }
}

fn formula_evaluators() -> Outcome {
    let tau = blowup_time_h1(1.0, 0.0, 0.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut at_zero = true;
    let mut monotone = true;
    for _ in 0..1000 {
        let h = rng.random_range(0.0..5.0);
        let l = rng.random_range(0.0..5.0);
        let a = rng.random_range(0.0..3.0);
        let c = rng.random_range(0.01..10.0);
        let d = rng.random_range(1e-3..1.0);
        let base = blowup_time_h1(h, l, a, c).unwrap();
        monotone &= blowup_time_h1(h + d, l, a, c).unwrap() <= base;
        monotone &= blowup_time_h1(h, l + d, a, c).unwrap() <= base;
        monotone &= blowup_time_h1(h, l, a + d, c).unwrap() <= base;
        monotone &= blowup_time_h1(h, l, a, c + d).unwrap() <= base;

        let s = rng.random_range(0.0..2.0);
        let l1 = rng.random_range(0.0..1.0);
        let a2 = rng.random_range(0.1..2.0);
        let c2 = rng.random_range(1e-9..1e-5);
        let t = rng.random_range(0.0..1.0);
        let f = |t: f64, s: f64, l: f64, a2: f64| blowup_bound_h32(t, s, l, a2, c2).unwrap().value();
        at_zero &= f(0.0, s, l1, a2) == s;
        let base = f(t, s, l1, a2);
        let dt = rng.random_range(0.0..0.5);
        monotone &= base >= s;
        monotone &= f(t + dt, s, l1, a2) >= base;
        monotone &= f(t, s + d, l1, a2) >= base;
        monotone &= f(t, s, l1 + d, a2) >= base;
        monotone &= f(t, s, l1, a2 + d) >= base;
    }
    Outcome {
        pass: tau == 1.0 / 64.0 && at_zero && monotone,
        detail: format!(
            "tau*(A=B=1, |u0|_1=1) = {tau}; h32 bound at t=0 exact: {at_zero}; monotone on 1000 tuples: {monotone}"
        ),
        scalars: vec![tau],
    }
}

type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn run_all() -> Vec<(usize, &'static str, Outcome)> {
    let standalone: Vec<Criterion> = vec![
        ("heat-kernel exactness", Box::new(heat_kernel_exactness)),
        ("Cole-Hopf oracle", Box::new(cole_hopf)),
        ("brute-force nonlinearity", Box::new(brute_force_nonlinearity)),
        ("route equivalence", Box::new(route_equivalence)),
    ];
    let mut out: Vec<(usize, &'static str, Outcome)> = standalone
        .into_iter()
        .enumerate()
        .map(|(i, (name, f))| (i + 1, name, f()))
        .collect();

    let start = Instant::now();
    let ens = max_principle_ensemble();
    out.push((5, "maximum principle", maximum_principle(&ens, start.elapsed())));
    out.push((6, "mean drift, constant 8 pi^3", mean_drift(&ens)));
    out.push((7, "norm domination, explicit c", norm_domination(&ens)));

    let rest: Vec<Criterion> = vec![
        ("Doob sharp alpha moment", Box::new(doob_sharp)),
        ("exact exponential moment", Box::new(exp_moment)),
        ("alpha^{+-1} sup moments", Box::new(alpha_power_moments)),
        ("log-moment growth shape", Box::new(log_moment_shape)),
        ("formula evaluators", Box::new(formula_evaluators)),
    ];
    for (i, (name, f)) in rest.into_iter().enumerate() {
        out.push((i + 8, name, f()));
    }
    out
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn main() {
    let first = pool(1).install(run_all);
    let mut failures = 0;
    for (id, name, o) in &first {
        println!("[{}] criterion {id:2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += usize::from(!o.pass);
    }

    let bits = |runs: &[(usize, &'static str, Outcome)]| -> Vec<Vec<u64>> {
        runs.iter()
            .map(|(_, _, o)| o.scalars.iter().map(|x| x.to_bits()).collect())
            .collect()
    };
    let reference = bits(&first);
    let again = bits(&pool(1).install(run_all));
    let threaded = bits(&pool(4).install(run_all));
    let differing: Vec<usize> = (0..reference.len())
        .filter(|&i| reference[i] != again[i] || reference[i] != threaded[i])
        .map(|i| first[i].0)
        .collect();
    let scalars: usize = reference.iter().map(Vec::len).sum();
    let pass = differing.is_empty();
    println!(
        "[{}] criterion 13 determinism: {scalars} reported scalars of criteria 1-12 {} across reruns on 1 and 4 threads",
        if pass { "PASS" } else { "FAIL" },
        if pass { "bit-identical".to_string() } else { format!("differ in criteria {differing:?}") }
    );
    failures += usize::from(!pass);

    println!("acceptance: {} of 13 criteria passed", 13 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
