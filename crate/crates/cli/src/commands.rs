use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use burgers3d::moments::*;
use burgers3d::solver::*;
use burgers3d::spectral::{l2_norm, lp_norm, synthesize, SpectralField};
use burgers3d::verify::{verify_trajectory, ToleranceConfig};
use serde_json::{json, Value};

use crate::config::{Functional, RunConfig};
use crate::output::RunDir;
use crate::UsageError;

/// How a finished command should exit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A check with an exact constant failed.
    Failed,
    /// The solver stopped at the blow-up threshold.
    Blowup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleKind {
    Heat,
    #[value(alias = "cole_hopf")]
    ColeHopf,
    #[value(alias = "route_compare")]
    RouteCompare,
}

pub const CHECK_NAMES: [&str; 5] = ["mean_drift", "norm_domination", "max_principle", "seminorm_chain", "energy"];

fn u0_l1(cfg: &RunConfig, v0: &SpectralField) -> Result<f64> {
    Ok(lp_norm(&synthesize(v0, &cfg.solver.grid)?, 1.0)?)
}

pub fn simulate(cfg: &RunConfig, dir: &mut RunDir) -> Result<(Outcome, Value)> {
    let s = &cfg.solver;
    let v0 = cfg.initial.build(&s.grid)?;
    let path = s.sample_path()?;
    let v = integrate(&v0, &path, s)?;
    let u = recover_u(&v, &path)?;
    let meta = json!({
        "seed": s.noise.seed,
        "n": s.grid.n(),
        "nu": s.nu,
        "b": s.noise.b,
        "horizon": s.horizon,
        "u0_l1": u0_l1(cfg, &v0)?,
    });
    let mut out = dir.file("trajectory_v.csv")?;
    v.write_csv(&mut out, &meta)?;
    out.flush()?;
    let mut out = dir.file("trajectory_u.csv")?;
    u.write_csv(&mut out, &meta)?;
    out.flush()?;
    let mut out = dir.file("path.bin")?;
    path.write_binary(&mut out)?;
    out.flush()?;
    let mut out = dir.file("path.csv")?;
    path.write_csv(&mut out)?;
    out.flush()?;

    let summary = json!({
        "status": v.status,
        "blowup_time": v.blowup_time,
        "recorded": v.len(),
        "steps": v.stats.steps,
        "max_cfl": v.stats.max_cfl,
    });
    let outcome = match v.status {
        RunStatus::Completed => Outcome::Success,
        RunStatus::AbortedBlowup => Outcome::Blowup,
    };
    Ok((outcome, summary))
}

pub fn ensemble(
    cfg: &RunConfig,
    functionals: &[Functional],
    csv: bool,
    dir: &mut RunDir,
) -> Result<(Outcome, Value)> {
    let e = cfg
        .ensemble_config()
        .ok_or_else(|| UsageError("ensemble needs an [ensemble] section or --n-paths".into()))?;
    let params = json!({
        "n": e.solver.grid.n(),
        "nu": e.solver.nu,
        "b": e.solver.noise.b,
        "dt": e.solver.dt,
        "n_paths": e.n_paths,
        "base_seed": e.base_seed,
        "p": e.p,
        "q": e.q,
        "big_q": e.big_q,
    });
    let mut estimates: Vec<(MomentEstimate, Value)> = Vec::new();
    let mut fits = serde_json::Map::new();
    for f in functionals {
        match f {
            Functional::SupLp => estimates.push((estimate_sup_lp_moment(&e)?, params.clone())),
            Functional::SupLinf => {
                let l = estimate_sup_linf_moment(&e)?;
                estimates.push((l.direct, params.clone()));
                estimates.push((l.factorized, params.clone()));
            }
            Functional::LogH1 => {
                let r = estimate_log_h1_moment(&e)?;
                let mut p = params.clone();
                p["fit"] = json!(r.fit);
                p["monotone"] = json!(r.monotone);
                fits.insert(r.functional.clone(), json!({ "fit": r.fit, "monotone": r.monotone }));
                estimates.extend(r.estimates.into_iter().map(|m| (m, p.clone())));
            }
            Functional::AlphaSup => estimates.push((check_alpha_sup_moment(&e)?, params.clone())),
            Functional::AlphaPower => {
                for n in [1.0, -1.0] {
                    let mut p = params.clone();
                    p["power"] = json!(n);
                    estimates.push((check_alpha_power_moment(&e, n)?, p));
                }
            }
            Functional::ExpMoment => estimates.push((check_exp_moment(&e)?, params.clone())),
        }
    }

    let mut out = dir.file("moments.ndjson")?;
    for (m, p) in &estimates {
        writeln!(out, "{}", m.to_ndjson(p))?;
    }
    out.flush()?;
    if csv {
        let mut out = dir.file("moments.csv")?;
        writeln!(out, "functional,horizon,estimate,stderr,n,median,aborted,bound,check,pass")?;
        for (m, _) in &estimates {
            let opt = |x: Option<String>| x.unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                m.functional,
                m.horizon,
                m.value,
                m.stderr,
                m.n,
                m.median,
                m.aborted,
                opt(m.bound.map(|b| b.to_string())),
                serde_json::to_value(m.check)?.as_str().unwrap_or_default(),
                opt(m.pass.map(|b| b.to_string())),
            )?;
        }
        out.flush()?;
    }
    let failed = estimates.iter().filter(|(m, _)| m.pass == Some(false)).count();
    let outcome = if failed > 0 { Outcome::Failed } else { Outcome::Success };
    Ok((outcome, json!({ "estimates": estimates.len(), "failed": failed, "fits": fits })))
}

pub struct VerifyArgs {
    pub files: Vec<PathBuf>,
    pub checks: Vec<String>,
    pub u0_l1: Option<f64>,
    pub eps_time: Option<f64>,
}

pub fn verify(args: &VerifyArgs, tol: &ToleranceConfig, dir: &mut RunDir) -> Result<(Outcome, Value)> {
    if let Some(bad) = args.checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return Err(UsageError(format!("unknown check {bad:?}; expected one of {CHECK_NAMES:?}")).into());
    }
    let mut lines = Vec::new();
    let mut gating_failures = 0;
    for file in &args.files {
        let f = File::open(file).with_context(|| format!("cannot open {}", file.display()))?;
        let (traj, meta) = TrajectoryRecord::read_csv(BufReader::new(f))
            .with_context(|| format!("cannot parse {}", file.display()))?;
        let l1 = args.u0_l1.or_else(|| meta["u0_l1"].as_f64());
        let seed = meta["seed"].as_u64();
        for r in verify_trajectory(&traj, l1, args.eps_time, tol)? {
            if !args.checks.is_empty() && !args.checks.contains(&r.check) {
                continue;
            }
            if r.gating && !r.pass {
                gating_failures += 1;
            }
            let mut line: Value = serde_json::from_str(&r.to_ndjson(seed))?;
            line["file"] = json!(file.display().to_string());
            lines.push(line.to_string());
        }
    }
    let mut out = dir.file("report.ndjson")?;
    let mut stdout = std::io::stdout().lock();
    for l in &lines {
        writeln!(out, "{l}")?;
        // a closed pipe downstream is not an error for the report
        let _ = writeln!(stdout, "{l}");
    }
    out.flush()?;
    let outcome = if gating_failures > 0 { Outcome::Failed } else { Outcome::Success };
    Ok((outcome, json!({ "reports": lines.len(), "gating_failures": gating_failures })))
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn oracle(kind: OracleKind, cfg: &RunConfig, dir: &mut RunDir) -> Result<(Outcome, Value)> {
    let mut s = cfg.solver.clone();
    let g = s.grid;
    let v0 = cfg.initial.build(&g)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let header = match kind {
        OracleKind::Heat => {
            s.nonlinear = false;
            integrate_observed(&v0, &s.sample_path()?, &s, |t, v| {
                let exact = heat_oracle(&v0, t, s.nu).expect("t >= 0");
                let mut d = v.clone();
                d.add_scaled(&exact, -1.0);
                rows.push(vec![t, v.max_abs_diff(&exact), l2_norm(&d)]);
            })?;
            "t,max_abs_error,l2_error"
        }
        OracleKind::ColeHopf => {
            if s.noise.b != 0.0 {
                return Err(UsageError("cole_hopf oracle needs b = 0".into()).into());
            }
            if !s.nonlinear {
                return Err(UsageError("cole_hopf oracle needs the nonlinear solver".into()).into());
            }
            let u0 = x1_profile(&v0, &g).map_err(|e| UsageError(format!("cole_hopf oracle needs 1D data: {e}")))?;
            let mut failure = None;
            integrate_observed(&v0, &s.sample_path()?, &s, |t, v| {
                let res = cole_hopf_oracle_1d(&u0, s.nu, t).and_then(|exact| Ok((exact, x1_profile(v, &g)?)));
                match res {
                    Ok((exact, got)) => {
                        let diff: Vec<f64> = got.iter().zip(&exact).map(|(a, b)| a - b).collect();
                        let err = max_abs(&diff);
                        rows.push(vec![t, err, err / max_abs(&exact)]);
                    }
                    Err(e) => failure = failure.take().or(Some(e)),
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            "t,max_abs_error,rel_linf_error"
        }
        OracleKind::RouteCompare => {
            // both step sizes share one path sampled at the finer step
            let path = burgers3d::noise::sample_path(&s.noise, s.dt / 2.0, s.horizon)?;
            let mut half = s.clone();
            half.dt = s.dt / 2.0;
            half.record_every = 2 * s.record_every;
            let gaps = |c: &SolverConfig| -> Result<Vec<(f64, f64)>> {
                let mut vs = Vec::new();
                integrate_observed(&v0, &path, c, |t, v| vs.push((t, v.clone())))?;
                let mut us = Vec::new();
                integrate_direct_observed(&v0, &path, c, |_, u| us.push(u.clone()))?;
                Ok(vs
                    .iter()
                    .zip(&us)
                    .map(|((t, v), u)| {
                        let i = (t / path.dt()).round() as usize;
                        let mut d = recover_u_field(v, path.alpha()[i]);
                        d.add_scaled(u, -1.0);
                        (*t, l2_norm(&d))
                    })
                    .collect())
            };
            let coarse = gaps(&s)?;
            let fine = gaps(&half)?;
            for ((t, a), (_, b)) in coarse.iter().zip(&fine) {
                rows.push(vec![*t, *a, *b, a / b]);
            }
            "t,gap_dt,gap_half_dt,ratio"
        }
    };

    let mut out = dir.file("oracle.csv")?;
    writeln!(out, "{header}")?;
    for r in &rows {
        let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    let worst = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let summary = match kind {
        OracleKind::ColeHopf => json!({ "max_rel_linf_error": rows.iter().map(|r| r[2]).fold(0.0, f64::max) }),
        OracleKind::RouteCompare => json!({ "terminal_ratio": rows.last().map(|r| r[3]) }),
        OracleKind::Heat => json!({ "max_abs_error": worst }),
    };
    Ok((Outcome::Success, summary))
}
