use burgers3d::noise::{sample_path, NoiseConfig};
use burgers3d::solver::*;
use burgers3d::spectral::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, DealiasRule::TwoThirds).unwrap()
}

fn mixed_modes(g: &GridSpec) -> SpectralField {
    let mut v = InitialCondition::RandomSmooth { amplitude: 1.0, decay_r: 1.5, seed: 21 }
        .build(g)
        .unwrap();
    let extra = InitialCondition::SingleMode { k: [2, -1, 3], component: 2, amplitude: 0.4 }
        .build(g)
        .unwrap();
    v.add_scaled(&extra, 1.0);
    v
}

#[test]
fn heat_only_matches_oracle_for_any_dt() {
    let g = grid(6);
    let v0 = mixed_modes(&g);
    for dt in [1e-3, 7e-3, 0.05] {
        let mut cfg = SolverConfig::new(g, 0.35, NoiseConfig::new(0.0, 1));
        cfg.nonlinear = false;
        cfg.nu = 0.8;
        cfg.dt = dt;
        cfg.record_every = 1;
        let cfg = SolverConfig { horizon: dt * (0.35 / dt).round(), ..cfg };
        let mut worst = 0.0f64;
        integrate_observed(&v0, &cfg.sample_path().unwrap(), &cfg, |t, v| {
            let exact = heat_oracle(&v0, t, cfg.nu).unwrap();
            worst = worst.max(v.max_abs_diff(&exact));
        })
        .unwrap();
        assert!(worst <= 1e-12, "dt = {dt}: {worst:e}");
    }
}

#[test]
fn heat_oracle_norms_decay() {
    let g = grid(5);
    let v0 = mixed_modes(&g);
    let mut prev = (l2_norm(&v0), seminorm(&v0, 2.0) / seminorm(&v0, 0.0));
    for t in [0.1, 0.2, 0.4] {
        let v = heat_oracle(&v0, t, 1.0).unwrap();
        let now = (l2_norm(&v), seminorm(&v, 2.0) / seminorm(&v, 0.0));
        assert!(now.0 < prev.0);
        // high wavenumbers lose weight fastest
        assert!(now.1 < prev.1);
        prev = now;
    }
}

#[test]
fn step_halving_shows_third_order_local_error() {
    let g = grid(5);
    let v0 = InitialCondition::RandomSmooth { amplitude: 0.5, decay_r: 3.0, seed: 2 }
        .build(&g)
        .unwrap();
    let cfg = SolverConfig::new(g, 0.04, NoiseConfig::new(0.0, 0));
    let path = sample_path(&cfg.noise, 2.5e-3, 0.04).unwrap();
    let local = |dt: f64| {
        let full = step_random_pde(&v0, 0.0, dt, &path, &cfg).unwrap();
        let half = step_random_pde(&v0, 0.0, dt / 2.0, &path, &cfg).unwrap();
        let two = step_random_pde(&half, dt / 2.0, dt / 2.0, &path, &cfg).unwrap();
        let mut d = full;
        d.add_scaled(&two, -1.0);
        l2_norm(&d)
    };
    let order = (local(0.02) / local(0.01)).log2();
    assert!(order >= 2.0, "observed local order {order}");
}

#[test]
fn direct_route_linear_mode_is_exact_in_the_limit() {
    let g = grid(3);
    let k = WaveVector::new(1, 1, 0);
    let u0 = InitialCondition::SingleMode { k: [1, 1, 0], component: 0, amplitude: 2.0 }
        .build(&g)
        .unwrap();
    let path = sample_path(&NoiseConfig::new(0.7, 5), 1.25e-4, 0.5).unwrap();
    let w_t = *path.w().last().unwrap();
    let exact = (-2.0 * 0.5 + w_t).exp();
    let error = |dt: f64| {
        let mut cfg = SolverConfig::new(g, 0.5, NoiseConfig::new(0.7, 5));
        cfg.nonlinear = false;
        cfg.dt = dt;
        let rec = integrate_direct_stratonovich(&u0, &path, &cfg).unwrap();
        (rec.final_state.unwrap().get(k)[0].re - exact).abs()
    };
    let coarse = error(4e-3);
    let fine = error(5e-4);
    assert!(fine < coarse / 4.0, "{coarse:e} {fine:e}");
    assert!(fine < 1e-3);
}

#[test]
fn deterministic_routes_agree() {
    let g = grid(32);
    let mut cfg = SolverConfig::new(g, 0.5, NoiseConfig::new(0.0, 0));
    cfg.record_every = 100;
    let u0 = InitialCondition::SineShear { amplitude: 1.0 }.build(&g).unwrap();
    let path = cfg.sample_path().unwrap();
    let v = integrate(&u0, &path, &cfg).unwrap();
    let u = integrate_direct_stratonovich(&u0, &path, &cfg).unwrap();
    let recovered = recover_u(&v, &path).unwrap();
    assert_eq!(recovered.linf, v.linf);
    let mut d = v.final_state.unwrap();
    d.add_scaled(u.final_state.as_ref().unwrap(), -1.0);
    assert!(d.max_abs() <= 1e-6, "{:e}", d.max_abs());
}

#[test]
fn cole_hopf_agreement_at_moderate_resolution() {
    let g = grid(32);
    let mut cfg = SolverConfig::new(g, 0.5, NoiseConfig::new(0.0, 0));
    cfg.nu = 0.2;
    cfg.record_every = 100;
    let v0 = InitialCondition::OneDimensional { sine: vec![1.0], cosine: vec![0.0, 0.3] }
        .build(&g)
        .unwrap();
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
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn cole_hopf_rejects_three_dimensional_data() {
    let g = grid(4);
    let v = InitialCondition::SingleMode { k: [1, 1, 0], component: 0, amplitude: 1.0 }
        .build(&g)
        .unwrap();
    assert!(matches!(x1_profile(&v, &g), Err(burgers3d::Error::Domain(_))));
}

#[test]
fn trajectory_csv_roundtrip() {
    let g = grid(4);
    let mut cfg = SolverConfig::new(g, 0.05, NoiseConfig::new(0.5, 9));
    cfg.record_lp = Some(3.0);
    let v0 = InitialCondition::SineShear { amplitude: 1.0 }.build(&g).unwrap();
    let rec = integrate(&v0, &cfg.sample_path().unwrap(), &cfg).unwrap();
    let mut buf = Vec::new();
    rec.write_csv(&mut buf, &serde_json::json!({ "seed": 9 })).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with(&CSV_COLUMNS.join(",")));
    let (back, meta) = TrajectoryRecord::read_csv(buf.as_slice()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(back.times, rec.times);
    assert_eq!(back.semi_three_half, rec.semi_three_half);
    assert_eq!(back.lp, rec.lp);
    assert_eq!(back.stats, rec.stats);

    let broken = text.replacen(",", ";", 40);
    assert!(matches!(
        TrajectoryRecord::read_csv(broken.as_bytes()),
        Err(burgers3d::Error::Parse { .. })
    ));
}
