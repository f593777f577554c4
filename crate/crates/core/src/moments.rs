//! Monte Carlo moments of the solution and of the noise factor `α`, compared
//! with their closed-form bounds.
//!
//! Paths use seeds `base_seed + i`. Members run in parallel; every reported
//! scalar is a sequential fold in path order, so results do not depend on the
//! thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{
    doob_sup_moment_bound, doob_sup_moment_bound_sharp, exp_moment_exact, sample_path, NoiseConfig,
    NoisePath,
};
use crate::solver::{integrate, recover_u, InitialCondition, RunStatus, SolverConfig, TrajectoryRecord};
use crate::spectral::{lp_norm, sobolev_norm, synthesize};

fn default_p() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub solver: SolverConfig,
    pub initial: InitialCondition,
    /// Horizons for the growth study; empty means `[solver.horizon]`.
    #[serde(default)]
    pub horizons: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "one")]
    pub q: f64,
    /// Exponent `Q` of the `α`-moment checks.
    #[serde(default = "two", rename = "big_q")]
    pub big_q: f64,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, base_seed: u64, solver: SolverConfig, initial: InitialCondition) -> Self {
        Self {
            n_paths,
            base_seed,
            solver,
            initial,
            horizons: Vec::new(),
            p: default_p(),
            q: 1.0,
            big_q: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::Config(format!("n_paths must be >= 2, got {}", self.n_paths)));
        }
        if self.horizons.iter().any(|&t| !(t > 0.0)) || self.horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("horizons must be positive and strictly ascending".into()));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(Error::Config(format!("need p >= 1 and q >= 1, got p = {}, q = {}", self.p, self.q)));
        }
        self.solver.validate()
    }

    pub fn horizons(&self) -> Vec<f64> {
        if self.horizons.is_empty() {
            vec![self.solver.horizon]
        } else {
            self.horizons.clone()
        }
    }

    pub fn path_seed(&self, i: usize) -> u64 {
        self.base_seed.wrapping_add(i as u64)
    }

    fn noise(&self, i: usize) -> NoiseConfig {
        NoiseConfig::new(self.solver.noise.b, self.path_seed(i))
    }

    fn path(&self, i: usize, dt: f64, horizon: f64) -> Result<NoisePath> {
        sample_path(&self.noise(i), dt, horizon)
    }
}

/// How an estimate is compared with its reference value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Pass iff `value ≤ bound + 3·stderr`.
    OneSided,
    /// Pass iff `|value - bound| ≤ 3·stderr`.
    TwoSided,
    /// Reference value reported, not tested.
    Informational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub functional: String,
    pub horizon: f64,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub median: f64,
    /// Paths excluded because the solver aborted on blow-up.
    pub aborted: usize,
    pub bound: Option<f64>,
    pub bound_source: Option<String>,
    pub check: CheckKind,
    /// `None` for informational comparisons.
    pub pass: Option<bool>,
}

impl MomentEstimate {
    /// Mean, `std/√n` and median of `samples`, summed in order.
    pub fn from_samples(functional: &str, horizon: f64, samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = match n {
            0 => f64::NAN,
            _ if n % 2 == 1 => sorted[n / 2],
            _ => 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]),
        };
        Self {
            functional: functional.to_string(),
            horizon,
            value: mean,
            stderr: (var / n as f64).sqrt(),
            n,
            median,
            aborted: 0,
            bound: None,
            bound_source: None,
            check: CheckKind::Informational,
            pass: None,
        }
    }

    fn compare(mut self, bound: f64, source: &str, check: CheckKind) -> Self {
        let slack = 3.0 * self.stderr;
        self.pass = match check {
            CheckKind::OneSided => Some(self.value <= bound + slack),
            CheckKind::TwoSided => Some((self.value - bound).abs() <= slack),
            CheckKind::Informational => None,
        };
        self.bound = Some(bound);
        self.bound_source = Some(source.to_string());
        self.check = check;
        self
    }

    /// Whether this is an estimate over completed paths only.
    pub fn is_conditional(&self) -> bool {
        self.aborted > 0
    }

    /// NDJSON object `{functional, horizon, estimate, stderr, n, bound, pass, params}`.
    pub fn to_ndjson(&self, params: &serde_json::Value) -> String {
        serde_json::json!({
            "functional": self.functional,
            "horizon": self.horizon,
            "estimate": self.value,
            "stderr": self.stderr,
            "n": self.n,
            "median": self.median,
            "aborted": self.aborted,
            "bound": self.bound,
            "bound_source": self.bound_source,
            "check": self.check,
            "pass": self.pass,
            "params": params,
        })
        .to_string()
    }
}

/// Least-squares fit of `ln y = ln a + r T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub a: f64,
    pub r: f64,
    /// Root-mean-square residual of `ln y`.
    pub residual: f64,
}

impl GrowthFit {
    /// Fits the envelope; `None` when fewer than two positive values exist.
    pub fn fit(horizons: &[f64], values: &[f64]) -> Option<Self> {
        let pts: Vec<(f64, f64)> = horizons
            .iter()
            .zip(values)
            .filter(|(_, y)| **y > 0.0)
            .map(|(t, y)| (*t, y.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let r = if stt > 0.0 { sty / stt } else { 0.0 };
        let ln_a = my - r * mt;
        let residual = (pts.iter().map(|p| (p.1 - ln_a - r * p.0).powi(2)).sum::<f64>() / n).sqrt();
        Some(Self {
            a: ln_a.exp(),
            r,
            residual,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub functional: String,
    pub estimates: Vec<MomentEstimate>,
    pub fit: Option<GrowthFit>,
    /// No estimate drops below an earlier one by more than 3 combined stderr.
    pub monotone: bool,
}

/// Runs the solver on every path up to `horizon`, returning the recovered
/// `u` trajectories in path order; aborted runs are `None`.
fn run_ensemble(cfg: &EnsembleConfig, horizon: f64, record_lp: Option<f64>) -> Result<Vec<Option<TrajectoryRecord>>> {
    cfg.validate()?;
    let mut solver = cfg.solver.clone();
    solver.horizon = horizon;
    solver.record_lp = record_lp;
    solver.validate()?;
    let v0 = cfg.initial.build(&solver.grid)?;
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let path = cfg.path(i, solver.dt, horizon)?;
            let v = integrate(&v0, &path, &solver)?;
            if v.status == RunStatus::AbortedBlowup {
                return Ok(None);
            }
            recover_u(&v, &path).map(Some)
        })
        .collect()
}

fn completed(runs: &[Option<TrajectoryRecord>]) -> (Vec<&TrajectoryRecord>, usize) {
    let done: Vec<_> = runs.iter().flatten().collect();
    let aborted = runs.len() - done.len();
    (done, aborted)
}

fn sup(col: &[f64]) -> f64 {
    col.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `E sup_t |u(t)|_p^q` over recorded instants, with the moment bound
/// `‖u₀‖^q_{H^{3/2}} 2^{1/(2q')} (qq'/(qq'-1))^q e^{bTq²q'/2}` evaluated at
/// `p' = q' = 2` and unit constant, reported for reference.
pub fn estimate_sup_lp_moment(cfg: &EnsembleConfig) -> Result<MomentEstimate> {
    let horizon = cfg.solver.horizon;
    let lp = if cfg.p.is_infinite() { None } else { Some(cfg.p) };
    let runs = run_ensemble(cfg, horizon, lp)?;
    let (done, aborted) = completed(&runs);
    let samples: Vec<f64> = done
        .iter()
        .map(|u| {
            let col = match &u.lp {
                Some((_, col)) => col,
                None => &u.linf,
            };
            sup(col).powf(cfg.q)
        })
        .collect();
    let u0 = cfg.initial.build(&cfg.solver.grid)?;
    let h32 = sobolev_norm(&u0, 1.5);
    let (q, qq) = (cfg.q, 2.0 * cfg.q);
    let bound = h32.powf(q)
        * 2f64.powf(0.25)
        * (qq / (qq - 1.0)).powf(q)
        * (cfg.solver.noise.b * horizon * q * q).exp();
    let mut est = MomentEstimate::from_samples(&format!("sup_lp_moment(p={},q={})", cfg.p, cfg.q), horizon, &samples)
        .compare(bound, "moment bound, p'=q'=2, c=1", CheckKind::Informational);
    est.aborted = aborted;
    Ok(est)
}

/// Direct `E sup_t |u(t)|_∞^q` and the factorized bound
/// `|u₀|_∞^q E sup_t α^{-q}` estimated on the same paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinfMoment {
    pub direct: MomentEstimate,
    pub factorized: MomentEstimate,
    /// `direct ≤ factorized + 3·(combined stderr)`.
    pub pass: bool,
}

pub fn estimate_sup_linf_moment(cfg: &EnsembleConfig) -> Result<LinfMoment> {
    let horizon = cfg.solver.horizon;
    let runs = run_ensemble(cfg, horizon, None)?;
    let (done, aborted) = completed(&runs);
    let u0 = cfg.initial.build(&cfg.solver.grid)?;
    let u0_linf = synthesize(&u0, &cfg.solver.grid)?.max_magnitude();
    let mut direct_samples = Vec::with_capacity(done.len());
    let mut factor_samples = Vec::with_capacity(done.len());
    for u in &done {
        direct_samples.push(sup(&u.linf).powf(cfg.q));
        let alpha_inv = u.alpha.iter().map(|a| a.powf(-cfg.q)).fold(0.0, f64::max);
        factor_samples.push(u0_linf.powf(cfg.q) * alpha_inv);
    }
    let name = format!("sup_linf_moment(q={})", cfg.q);
    let mut direct = MomentEstimate::from_samples(&name, horizon, &direct_samples);
    let mut factorized = MomentEstimate::from_samples(&format!("{name}_factorized"), horizon, &factor_samples);
    direct.aborted = aborted;
    factorized.aborted = aborted;
    let slack = 3.0 * direct.stderr.hypot(factorized.stderr);
    let pass = direct.value <= factorized.value + slack;
    direct.bound = Some(factorized.value);
    direct.bound_source = Some("|u0|_inf^q E sup alpha^-q".into());
    direct.check = CheckKind::OneSided;
    direct.pass = Some(pass);
    Ok(LinfMoment {
        direct,
        factorized,
        pass,
    })
}

/// `E sup_{t ≤ T} log(1 + ‖u(t)‖²_{H¹})` for every configured horizon, from
/// one run per path to the largest horizon.
pub fn estimate_log_h1_moment(cfg: &EnsembleConfig) -> Result<EnsembleReport> {
    let horizons = cfg.horizons();
    let t_max = *horizons.last().expect("nonempty");
    let runs = run_ensemble(cfg, t_max, None)?;
    let (done, aborted) = completed(&runs);
    let mut estimates = Vec::with_capacity(horizons.len());
    for &h in &horizons {
        let samples: Vec<f64> = done
            .iter()
            .map(|u| {
                u.times
                    .iter()
                    .zip(&u.h1)
                    .filter(|(t, _)| **t <= h + 1e-9 * h)
                    .map(|(_, x)| (x * x).ln_1p())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut est = MomentEstimate::from_samples("sup_log_h1", h, &samples);
        est.aborted = aborted;
        estimates.push(est);
    }
    let monotone = estimates
        .windows(2)
        .all(|w| w[1].value >= w[0].value - 3.0 * w[0].stderr.hypot(w[1].stderr));
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    Ok(EnsembleReport {
        functional: "sup_log_h1".into(),
        fit: GrowthFit::fit(&horizons, &values),
        estimates,
        monotone,
    })
}

fn alpha_samples(cfg: &EnsembleConfig, f: impl Fn(&NoisePath) -> f64 + Sync) -> Result<Vec<f64>> {
    cfg.validate()?;
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| cfg.path(i, cfg.solver.dt, cfg.solver.horizon).map(|p| f(&p)))
        .collect()
}

/// `E sup_{t ≤ T} α^{-Q}` against `√2 (Q/(Q-1))^Q e^{bTQ²/2}`, one-sided.
pub fn check_alpha_sup_moment(cfg: &EnsembleConfig) -> Result<MomentEstimate> {
    let q = cfg.big_q;
    let bound = doob_sup_moment_bound_sharp(q, cfg.solver.noise.b, cfg.solver.horizon)?;
    let samples = alpha_samples(cfg, |p| p.sup_alpha_pow(-q))?;
    Ok(
        MomentEstimate::from_samples(&format!("sup_alpha_inv_pow(Q={q})"), cfg.solver.horizon, &samples)
            .compare(bound, "Doob maximal inequality, sharp constant", CheckKind::OneSided),
    )
}

/// `E sup_{t ≤ T} α^{n}` for `n = ±|n|` against `2 e^{n² b T}`, one-sided.
pub fn check_alpha_power_moment(cfg: &EnsembleConfig, n: f64) -> Result<MomentEstimate> {
    let bound = doob_sup_moment_bound(n.abs(), cfg.solver.noise.b, cfg.solver.horizon);
    let samples = alpha_samples(cfg, |p| p.sup_alpha_pow(n))?;
    Ok(
        MomentEstimate::from_samples(&format!("sup_alpha_pow(n={n})"), cfg.solver.horizon, &samples)
            .compare(bound, "Doob maximal inequality", CheckKind::OneSided),
    )
}

/// `E exp(Q W(T))` against `exp(Q² b T / 2)`, two-sided. Only `W(T)` is
/// drawn, as a single step of each path.
pub fn check_exp_moment(cfg: &EnsembleConfig) -> Result<MomentEstimate> {
    cfg.validate()?;
    let q = cfg.big_q;
    let horizon = cfg.solver.horizon;
    let samples: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| cfg.path(i, horizon, horizon).map(|p| (q * p.w()[1]).exp()))
        .collect::<Result<_>>()?;
    Ok(
        MomentEstimate::from_samples(&format!("exp_moment(Q={q})"), horizon, &samples).compare(
            exp_moment_exact(q, cfg.solver.noise.b, horizon),
            "lognormal mean",
            CheckKind::TwoSided,
        ),
    )
}

/// `|u₀|_p` on the solver grid, handy for reports.
pub fn initial_lp(cfg: &EnsembleConfig, p: f64) -> Result<f64> {
    let u0 = cfg.initial.build(&cfg.solver.grid)?;
    lp_norm(&synthesize(&u0, &cfg.solver.grid)?, p)
}
