//! Pathwise integration of the transformed equation
//! `dv = νΔv dt - α⁻¹(t) P_n[(v·∇)v] dt`, recovery of `u = α⁻¹ v`, and
//! independent reference solutions.
//!
//! The random PDE is advanced with an integrating factor (the heat multiplier
//! `exp(-ν|k|² dt)` is applied exactly) and a two-stage explicit Heun rule for
//! the nonlinear term, with `α` read at both stage times from the path grid.

mod initial;
mod oracle;
mod record;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{refine_path, step_count, NoiseConfig, NoisePath};
use crate::spectral::{
    convective_term, galerkin_project, l2_norm, lp_norm, seminorm, sobolev_norm, spatial_mean,
    synthesize, GridSpec, SpectralField,
};

pub use initial::InitialCondition;
pub use oracle::{cole_hopf_oracle_1d, embed_x1_profile, heat_oracle, x1_profile};
pub use record::{RunStatus, StepStats, TrajectoryRecord, Variable, CSV_COLUMNS};

fn default_true() -> bool {
    true
}

fn default_blowup() -> f64 {
    1e6
}

fn default_record_every() -> usize {
    10
}

fn default_dt() -> f64 {
    1e-3
}

fn default_nu() -> f64 {
    1.0
}

/// Parameters of one pathwise integration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: GridSpec,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Final time `T`.
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub noise: NoiseConfig,
    /// When false the convective term is dropped (pure heat flow).
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Abort level for `‖v‖₁`.
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Also record `|·|_p` for this order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_lp: Option<f64>,
}

impl SolverConfig {
    pub fn new(grid: GridSpec, horizon: f64, noise: NoiseConfig) -> Self {
        Self {
            grid,
            nu: default_nu(),
            horizon,
            dt: default_dt(),
            noise,
            nonlinear: true,
            blowup_threshold: default_blowup(),
            record_every: default_record_every(),
            record_lp: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.nu)));
        }
        if !(self.dt <= self.horizon) {
            return Err(Error::Config(format!("dt = {} exceeds T = {}", self.dt, self.horizon)));
        }
        step_count(self.dt, self.horizon)?;
        self.noise.validate()?;
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::Config("blowup_threshold must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        if let Some(p) = self.record_lp {
            if !(p >= 1.0) {
                return Err(Error::Config(format!("record_lp must be >= 1, got {p}")));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> Result<usize> {
        step_count(self.dt, self.horizon)
    }

    /// Samples the driving path for this configuration on the solver grid.
    pub fn sample_path(&self) -> Result<NoisePath> {
        crate::noise::sample_path(&self.noise, self.dt, self.horizon)
    }
}

/// Heat multipliers `exp(-ν |k|² dt)` indexed by `|k|²`.
struct HeatFactors(Vec<f64>);

impl HeatFactors {
    fn new(n: usize, nu: f64, dt: f64) -> Self {
        let max = 3 * n * n;
        Self((0..=max).map(|k2| (-nu * k2 as f64 * dt).exp()).collect())
    }

    fn apply(&self, f: &mut SpectralField) {
        f.for_each_mut(|k, c| {
            let e = self.0[k.norm_sq() as usize];
            for z in c.iter_mut() {
                *z *= e;
            }
        });
    }
}

/// Fixed-step machinery shared by both integrators.
struct Stepper<'a> {
    cfg: &'a SolverConfig,
    heat: HeatFactors,
    evals: usize,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SolverConfig, dt: f64) -> Self {
        Self {
            cfg,
            heat: HeatFactors::new(cfg.grid.n(), cfg.nu, dt),
            evals: 0,
        }
    }

    /// `-P_n[(v·∇)v]`, or zero when the nonlinearity is switched off.
    fn drift(&mut self, v: &SpectralField) -> Result<SpectralField> {
        if !self.cfg.nonlinear {
            return Ok(SpectralField::zeros(v.resolution()));
        }
        self.evals += 1;
        let mut w = galerkin_project(&convective_term(v, &self.cfg.grid)?, self.cfg.grid.n());
        w.scale(-1.0);
        Ok(w)
    }

    /// One integrating-factor Heun step of the random PDE.
    fn random_pde(&mut self, v: &SpectralField, dt: f64, alpha_inv: [f64; 2]) -> Result<SpectralField> {
        let f0 = self.drift(v)?;
        let mut pred = v.clone();
        pred.add_scaled(&f0, dt * alpha_inv[0]);
        self.heat.apply(&mut pred);
        let f1 = self.drift(&pred)?;
        let mut next = v.clone();
        next.add_scaled(&f0, 0.5 * dt * alpha_inv[0]);
        self.heat.apply(&mut next);
        next.add_scaled(&f1, 0.5 * dt * alpha_inv[1]);
        Ok(galerkin_project(&next, self.cfg.grid.n()))
    }

    /// One stochastic Heun step of `du = (νΔu - (u·∇)u) dt + u ∘ dW`,
    /// heat part by integrating factor.
    fn stratonovich(&mut self, u: &SpectralField, dt: f64, dw: f64) -> Result<SpectralField> {
        let f0 = self.drift(u)?;
        let mut pred = u.clone();
        pred.add_scaled(&f0, dt);
        pred.add_scaled(u, dw);
        self.heat.apply(&mut pred);
        let f1 = self.drift(&pred)?;
        let mut next = u.clone();
        next.add_scaled(&f0, 0.5 * dt);
        next.add_scaled(u, 0.5 * dw);
        self.heat.apply(&mut next);
        next.add_scaled(&f1, 0.5 * dt);
        next.add_scaled(&pred, 0.5 * dw);
        Ok(galerkin_project(&next, self.cfg.grid.n()))
    }
}

fn check_state(next: SpectralField, prev: &SpectralField, t: f64, threshold: f64) -> Result<SpectralField> {
    if !next.is_finite() {
        return Err(Error::NumericalFailure {
            t,
            last_valid: Box::new(prev.clone()),
        });
    }
    let s1 = seminorm(&next, 1.0);
    if s1 > threshold {
        return Err(Error::Blowup { t, seminorm: s1 });
    }
    Ok(next)
}

/// Index of `t` on the path grid, if it lies on it.
fn path_index(path: &NoisePath, t: f64) -> Result<usize> {
    let i = (t / path.dt()).round();
    if (i * path.dt() - t).abs() > 1e-9 * path.dt().max(t) || i < 0.0 || i as usize > path.steps() {
        return Err(Error::Domain(format!("t = {t} is not on the path grid (dt = {})", path.dt())));
    }
    Ok(i as usize)
}

/// Returns a path whose grid contains the solver grid, and the stride between
/// solver steps on it. Coarser paths are refined by Brownian bridges.
fn align_path(path: &NoisePath, cfg: &SolverConfig, steps: usize) -> Result<(NoisePath, usize)> {
    let ratio = cfg.dt / path.dt();
    let (path, stride) = if ratio >= 1.0 - 1e-9 {
        let stride = ratio.round();
        if (stride - ratio).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "solver dt = {} is not a multiple of path dt = {}",
                cfg.dt,
                path.dt()
            )));
        }
        (path.clone(), stride as usize)
    } else {
        let factor = (1.0 / ratio).round();
        if (factor * ratio - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "path dt = {} is not a multiple of solver dt = {}",
                path.dt(),
                cfg.dt
            )));
        }
        (refine_path(path, factor as usize)?, 1)
    };
    if path.steps() < steps * stride {
        return Err(Error::Config(format!(
            "path covers T = {}, solver needs T = {}",
            path.horizon(),
            cfg.horizon
        )));
    }
    Ok((path, stride))
}

/// One step of the transformed equation from `t` to `t + dt`, reading `α` at
/// both ends from `path`.
pub fn step_random_pde(
    v: &SpectralField,
    t: f64,
    dt: f64,
    path: &NoisePath,
    cfg: &SolverConfig,
) -> Result<SpectralField> {
    let i0 = path_index(path, t)?;
    let i1 = path_index(path, t + dt)?;
    let alpha_inv = [1.0 / path.alpha()[i0], 1.0 / path.alpha()[i1]];
    let mut stepper = Stepper::new(cfg, dt);
    let next = stepper.random_pde(v, dt, alpha_inv)?;
    check_state(next, v, t + dt, cfg.blowup_threshold)
}

struct Recorder {
    rec: TrajectoryRecord,
    lp: Option<f64>,
    n: usize,
    grid: GridSpec,
}

impl Recorder {
    fn push(&mut self, t: f64, alpha: f64, field: &SpectralField, dissipation: f64) -> Result<()> {
        let phys = synthesize(field, &self.grid)?;
        let linf = phys.max_magnitude();
        let r = &mut self.rec;
        r.times.push(t);
        r.alpha.push(alpha);
        r.linf.push(linf);
        r.semi_half.push(seminorm(field, 0.5));
        r.semi_one.push(seminorm(field, 1.0));
        r.semi_three_half.push(seminorm(field, 1.5));
        r.l2.push(l2_norm(field));
        r.h1.push(sobolev_norm(field, 1.0));
        r.mean.push(spatial_mean(field)?);
        r.dissipation.push(dissipation);
        if let Some(p) = self.lp {
            let value = lp_norm(&phys, p)?;
            r.lp.get_or_insert_with(|| (p, Vec::new())).1.push(value);
        }
        let speed = match r.variable {
            Variable::Transformed => linf / alpha,
            Variable::Physical => linf,
        };
        r.stats.max_cfl = r.stats.max_cfl.max(speed * self.n as f64 * r.stats.dt);
        Ok(())
    }
}

/// Shared time loop. `advance(state, step_index)` produces the next state.
fn run(
    initial: &SpectralField,
    path: &NoisePath,
    cfg: &SolverConfig,
    variable: Variable,
    observer: &mut dyn FnMut(f64, &SpectralField),
    mut advance: impl FnMut(&mut Stepper, &SpectralField, usize, &NoisePath, usize) -> Result<SpectralField>,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let n = cfg.grid.n();
    if initial.resolution() != n {
        return Err(Error::Config(format!(
            "initial field has N = {}, grid has N = {n}",
            initial.resolution()
        )));
    }
    let defect = initial.hermitian_defect();
    if defect > 1e-12 * initial.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!("initial field is not real-valued (defect {defect:e})")));
    }
    let steps = cfg.steps()?;
    let (path, stride) = align_path(path, cfg, steps)?;
    let mut stepper = Stepper::new(cfg, cfg.dt);
    let mut recorder = Recorder {
        rec: TrajectoryRecord::empty(variable, cfg.dt),
        lp: cfg.record_lp,
        n,
        grid: cfg.grid,
    };

    let mut state = galerkin_project(initial, n);
    let mut dissipation = 0.0;
    let mut rate = seminorm(&state, 2.0).powi(2);
    recorder.push(0.0, path.alpha()[0], &state, 0.0)?;
    observer(0.0, &state);
    let mut last_recorded = 0;

    for step in 0..steps {
        let t_next = (step + 1) as f64 * cfg.dt;
        let next = advance(&mut stepper, &state, step, &path, stride)
            .and_then(|next| check_state(next, &state, t_next, cfg.blowup_threshold));
        let next = match next {
            Ok(next) => next,
            Err(Error::Blowup { t, .. }) => {
                if last_recorded != step {
                    let t = step as f64 * cfg.dt;
                    recorder.push(t, path.alpha()[step * stride], &state, dissipation)?;
                    observer(t, &state);
                }
                let rec = &mut recorder.rec;
                rec.status = RunStatus::AbortedBlowup;
                rec.blowup_time = Some(t);
                rec.stats.steps = step;
                rec.stats.nonlinear_evals = stepper.evals;
                rec.final_state = Some(state);
                return Ok(recorder.rec);
            }
            Err(e) => return Err(e),
        };
        let next_rate = seminorm(&next, 2.0).powi(2);
        dissipation += 0.5 * cfg.dt * (rate + next_rate);
        rate = next_rate;
        state = next;
        let done = step + 1;
        if done % cfg.record_every == 0 || done == steps {
            recorder.push(t_next, path.alpha()[done * stride], &state, dissipation)?;
            observer(t_next, &state);
            last_recorded = done;
        }
    }
    let rec = &mut recorder.rec;
    rec.stats.steps = steps;
    rec.stats.nonlinear_evals = stepper.evals;
    rec.final_state = Some(state);
    Ok(recorder.rec)
}

/// Integrates the transformed equation for `v` on `[0, T]` along `path`.
pub fn integrate(v0: &SpectralField, path: &NoisePath, cfg: &SolverConfig) -> Result<TrajectoryRecord> {
    integrate_observed(v0, path, cfg, |_, _| {})
}

/// As [`integrate`], calling `observer(t, v)` at every recorded instant.
pub fn integrate_observed(
    v0: &SpectralField,
    path: &NoisePath,
    cfg: &SolverConfig,
    mut observer: impl FnMut(f64, &SpectralField),
) -> Result<TrajectoryRecord> {
    run(v0, path, cfg, Variable::Transformed, &mut observer, |stepper, v, step, path, stride| {
        let a = path.alpha();
        let alpha_inv = [1.0 / a[step * stride], 1.0 / a[(step + 1) * stride]];
        stepper.random_pde(v, cfg.dt, alpha_inv)
    })
}

/// Integrates `du = (νΔu - (u·∇)u) dt + u ∘ dW` directly with the stochastic
/// Heun scheme, driven by the increments of the same path.
pub fn integrate_direct_stratonovich(
    u0: &SpectralField,
    path: &NoisePath,
    cfg: &SolverConfig,
) -> Result<TrajectoryRecord> {
    integrate_direct_observed(u0, path, cfg, |_, _| {})
}

pub fn integrate_direct_observed(
    u0: &SpectralField,
    path: &NoisePath,
    cfg: &SolverConfig,
    mut observer: impl FnMut(f64, &SpectralField),
) -> Result<TrajectoryRecord> {
    run(u0, path, cfg, Variable::Physical, &mut observer, |stepper, u, step, path, stride| {
        let w = path.w();
        let dw = w[(step + 1) * stride] - w[step * stride];
        stepper.stratonovich(u, cfg.dt, dw)
    })
}

/// `u = α⁻¹ v` for a single state.
pub fn recover_u_field(v: &SpectralField, alpha: f64) -> SpectralField {
    v.scaled(1.0 / alpha)
}

/// Converts a trajectory of `v` into the trajectory of `u = α⁻¹ v`, reading
/// `α` from `path` at each recorded instant.
///
/// Norms and means scale by `α⁻¹(t)`. The dissipation integral is rebuilt
/// from its increments weighted by the trapezoid average of `α⁻²`.
pub fn recover_u(record: &TrajectoryRecord, path: &NoisePath) -> Result<TrajectoryRecord> {
    let alpha = record
        .times
        .iter()
        .map(|&t| path_index(path, t).map(|i| path.alpha()[i]))
        .collect::<Result<Vec<_>>>()?;
    rescale_to_physical(record, &alpha)
}

/// As [`recover_u`], using the `α` column stored in the record.
pub fn recover_u_from_record(record: &TrajectoryRecord) -> Result<TrajectoryRecord> {
    rescale_to_physical(record, &record.alpha)
}

fn rescale_to_physical(record: &TrajectoryRecord, alpha: &[f64]) -> Result<TrajectoryRecord> {
    if record.variable != Variable::Transformed {
        return Err(Error::Config("record already describes u".into()));
    }
    let inv: Vec<f64> = alpha.iter().map(|a| 1.0 / a).collect();
    let scale = |col: &[f64]| col.iter().zip(&inv).map(|(x, s)| x * s).collect::<Vec<_>>();
    let mut out = record.clone();
    out.variable = Variable::Physical;
    out.alpha = alpha.to_vec();
    out.linf = scale(&record.linf);
    out.semi_half = scale(&record.semi_half);
    out.semi_one = scale(&record.semi_one);
    out.semi_three_half = scale(&record.semi_three_half);
    out.l2 = scale(&record.l2);
    out.h1 = scale(&record.h1);
    out.mean = record
        .mean
        .iter()
        .zip(&inv)
        .map(|(m, s)| m.map(|x| x * s))
        .collect();
    if let Some((p, col)) = &record.lp {
        out.lp = Some((*p, scale(col)));
    }
    let mut acc = 0.0;
    out.dissipation = (0..record.len())
        .map(|i| {
            if i > 0 {
                let w = 0.5 * (inv[i - 1].powi(2) + inv[i].powi(2));
                acc += w * (record.dissipation[i] - record.dissipation[i - 1]);
            }
            acc
        })
        .collect();
    out.stats.max_cfl = record.stats.max_cfl;
    out.final_state = record
        .final_state
        .as_ref()
        .zip(inv.last())
        .map(|(f, s)| f.scaled(*s));
    Ok(out)
}
