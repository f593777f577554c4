//! Checks of the explicit inequalities satisfied by solutions, evaluated on
//! recorded trajectories, plus the closed-form blow-up bounds.
//!
//! Every check produces a [`VerificationReport`] whose margins are
//! `bound - observed` per recorded instant. A check passes when its worst
//! margin is at least `-rel_tol · scale`, where `scale` is the largest
//! magnitude of either side over the trajectory.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{recover_u_from_record, TrajectoryRecord, Variable};

/// Largest constant the energy fit may return before the check fails.
pub const ENERGY_C_CAP: f64 = 1e6;

fn default_rel_tol() -> f64 {
    1e-8
}

fn default_slack() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_slack")]
    pub max_principle_slack: f64,
    /// Restricts the energy fit to instants in `[start, end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_rel_tol(),
            max_principle_slack: default_slack(),
            fit_window: None,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol >= 0.0 && self.max_principle_slack >= 0.0) {
            return Err(Error::Config("tolerances must be nonnegative".into()));
        }
        if let Some([a, b]) = self.fit_window {
            if !(a <= b) {
                return Err(Error::Config(format!("fit_window [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub times: Vec<f64>,
    /// `bound - observed` at each instant.
    pub margins: Vec<f64>,
    pub worst_margin: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Whether a failure of this check is a hard failure.
    pub gating: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_c: Option<f64>,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl VerificationReport {
    fn from_margins(check: &str, times: &[f64], margins: Vec<f64>, scale: f64, tolerance: f64) -> Self {
        let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = if margins.is_empty() { 0.0 } else { worst };
        Self {
            check: check.to_string(),
            times: times.to_vec(),
            pass: worst >= -tolerance * scale,
            margins,
            worst_margin: worst,
            scale,
            tolerance,
            gating: true,
            fitted_c: None,
            params: Default::default(),
        }
    }

    fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params
            .insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    /// One NDJSON object: `{check, seed, pass, worst_margin, fitted_c?, params}`.
    pub fn to_ndjson(&self, seed: Option<u64>) -> String {
        let mut obj = serde_json::json!({
            "check": self.check,
            "seed": seed,
            "pass": self.pass,
            "gating": self.gating,
            "worst_margin": self.worst_margin,
            "scale": self.scale,
            "params": self.params,
        });
        if let Some(c) = self.fitted_c {
            obj["fitted_c"] = c.into();
        }
        obj.to_string()
    }
}

fn scale_of<'a>(cols: impl IntoIterator<Item = &'a f64>) -> f64 {
    cols.into_iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Running trapezoid integral of `f` over the record times.
fn cumulative_trapezoid(times: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.len());
    for i in 0..f.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (f[i] + f[i - 1]);
        }
        out.push(acc);
    }
    out
}

fn require(rec: &TrajectoryRecord, variable: Variable, check: &str) -> Result<()> {
    rec.validate()?;
    if rec.variable != variable {
        return Err(Error::Config(format!(
            "{check} needs a trajectory of {}, got one of {}",
            if variable == Variable::Physical { "u" } else { "v" },
            if rec.variable == Variable::Physical { "u" } else { "v" },
        )));
    }
    if rec.is_empty() {
        return Err(Error::Config(format!("{check}: trajectory has no rows")));
    }
    Ok(())
}

/// `|∫u(t)dx| ≤ 8π³ ∫₀ᵗ α⁻¹ ‖u‖²_{1/2} ds + |∫u₀ dx|` on a trajectory of `u`.
pub fn check_mean_drift(traj: &TrajectoryRecord, tol: &ToleranceConfig) -> Result<VerificationReport> {
    require(traj, Variable::Physical, "mean_drift")?;
    let integrand: Vec<f64> = traj
        .semi_half
        .iter()
        .zip(&traj.alpha)
        .map(|(s, a)| s * s / a)
        .collect();
    let integral = cumulative_trapezoid(&traj.times, &integrand);
    let observed = traj.mean_magnitude();
    let bound: Vec<f64> = integral
        .iter()
        .map(|i| 8.0 * PI.powi(3) * i + observed[0])
        .collect();
    let margins = bound.iter().zip(&observed).map(|(b, o)| b - o).collect();
    let scale = scale_of(bound.iter().chain(&observed));
    Ok(VerificationReport::from_margins("mean_drift", &traj.times, margins, scale, tol.rel_tol))
}

/// `‖v‖_s ≤ ‖v‖_{H^s} ≤ ‖v‖_s + c∫₀ᵗ‖v‖²_{1/2} + c|u₀|₁` with
/// `c = max{(2π)^{9/2} α⁻¹(t), (2π)^{3/2}}`, for `s ∈ {1/2, 1, 3/2}`.
pub fn check_norm_domination(
    traj: &TrajectoryRecord,
    s: f64,
    u0_l1: f64,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    let semi = match s {
        x if x == 0.5 => &traj.semi_half,
        x if x == 1.0 => &traj.semi_one,
        x if x == 1.5 => &traj.semi_three_half,
        _ => return Err(Error::Domain(format!("norm domination supports s in {{1/2, 1, 3/2}}, got {s}"))),
    };
    require(traj, Variable::Transformed, "norm_domination")?;
    if !(u0_l1 >= 0.0) {
        return Err(Error::Domain(format!("|u0|_1 must be nonnegative, got {u0_l1}")));
    }
    let half_sq: Vec<f64> = traj.semi_half.iter().map(|x| x * x).collect();
    let integral = cumulative_trapezoid(&traj.times, &half_sq);
    let two_pi = 2.0 * PI;
    let mut margins = Vec::with_capacity(traj.len());
    let mut scale = 0.0f64;
    for i in 0..traj.len() {
        let c = (two_pi.powf(4.5) / traj.alpha[i]).max(two_pi.powf(1.5));
        let hs = traj.l2[i] + semi[i];
        let upper = semi[i] + c * integral[i] + c * u0_l1;
        margins.push((hs - semi[i]).min(upper - hs));
        scale = scale.max(hs).max(upper);
    }
    Ok(
        VerificationReport::from_margins("norm_domination", &traj.times, margins, scale, tol.rel_tol)
            .param("s", s)
            .param("u0_l1", u0_l1),
    )
}

/// `sup_t |v(t)|_∞ ≤ (1 + slack)|v(0)|_∞`.
pub fn check_max_principle(traj: &TrajectoryRecord, tol: &ToleranceConfig) -> Result<VerificationReport> {
    require(traj, Variable::Transformed, "max_principle")?;
    let limit = (1.0 + tol.max_principle_slack) * traj.linf[0];
    let margins = traj.linf.iter().map(|x| limit - x).collect();
    let scale = scale_of(traj.linf.iter().chain([&limit]));
    Ok(
        VerificationReport::from_margins("max_principle", &traj.times, margins, scale, tol.rel_tol)
            .param("slack", tol.max_principle_slack)
            .param("excess", max_principle_excess(traj))
            .param("max_rise", max_principle_violation(traj)),
    )
}

/// `max_t |v(t)|_∞ - |v(0)|_∞`, clipped at zero.
pub fn max_principle_excess(traj: &TrajectoryRecord) -> f64 {
    let first = traj.linf.first().copied().unwrap_or(0.0);
    traj.linf.iter().fold(0.0f64, |a, x| a.max(x - first))
}

/// Largest increase `|v(t)|_∞ - |v(s)|_∞` over recorded `s ≤ t`.
///
/// The maximum principle applies from every starting time, so in the
/// continuum this vanishes; at finite `N` it measures how far truncation
/// lets `|v|_∞` grow.
pub fn max_principle_violation(traj: &TrajectoryRecord) -> f64 {
    let mut low = f64::INFINITY;
    let mut rise = 0.0f64;
    for &x in &traj.linf {
        low = low.min(x);
        rise = rise.max(x - low);
    }
    rise
}

/// `‖·‖_{1/2} ≤ ‖·‖₁ ≤ ‖·‖_{3/2}` per instant.
pub fn check_seminorm_chain(traj: &TrajectoryRecord, tol: &ToleranceConfig) -> Result<VerificationReport> {
    traj.validate()?;
    let margins = (0..traj.len())
        .map(|i| (traj.semi_one[i] - traj.semi_half[i]).min(traj.semi_three_half[i] - traj.semi_one[i]))
        .collect();
    let scale = scale_of(&traj.semi_three_half);
    Ok(VerificationReport::from_margins("seminorm_chain", &traj.times, margins, scale, tol.rel_tol))
}

fn index_of(times: &[f64], t: f64) -> Result<usize> {
    times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
        .ok_or_else(|| Error::Domain(format!("time {t} is not a recorded instant")))
}

/// Fits the smallest `c` with
/// `‖v(t)‖²_{H¹} + ∫₀ᵗ‖v‖₂² ≤ ‖u₀‖²_{H¹} + c‖v(ε)‖²_{H¹} exp(c‖v(ε)‖²_{H^{3/2}} ∫₀ᵀα⁻²)`
/// at every recorded `t` (inside the fit window, if any).
///
/// Not gating: it fails only when no `c ≤ 10⁶` works.
pub fn check_energy_inequality(
    traj: &TrajectoryRecord,
    eps_time: f64,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    require(traj, Variable::Transformed, "energy")?;
    let eps = index_of(&traj.times, eps_time)?;
    let inv_sq: Vec<f64> = traj.alpha.iter().map(|a| a.powi(-2)).collect();
    let alpha_int = *cumulative_trapezoid(&traj.times, &inv_sq).last().expect("nonempty");
    let u0_sq = (traj.h1[0] / traj.alpha[0]).powi(2);
    let h1_eps = traj.h1[eps].powi(2);
    let h32_eps = (traj.l2[eps] + traj.semi_three_half[eps]).powi(2);
    let rhs = |c: f64| u0_sq + c * h1_eps * (c * h32_eps * alpha_int).exp();

    let in_window = |t: f64| tol.fit_window.map_or(true, |[a, b]| t >= a && t <= b);
    let lhs: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(traj.h1.iter().zip(&traj.dissipation))
        .filter(|(t, _)| in_window(**t))
        .map(|(t, (h, d))| (*t, h * h + d))
        .collect();
    let lhs_max = lhs.iter().map(|x| x.1).fold(0.0f64, f64::max);
    let holds = |c: f64| lhs_max <= rhs(c);

    let fitted = if holds(0.0) {
        Some(0.0)
    } else if !holds(ENERGY_C_CAP) {
        None
    } else {
        let (mut lo, mut hi) = (0.0, ENERGY_C_CAP);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Some(hi)
    };
    let c = fitted.unwrap_or(ENERGY_C_CAP);
    let bound = rhs(c);
    let times: Vec<f64> = lhs.iter().map(|x| x.0).collect();
    let margins = lhs.iter().map(|x| bound - x.1).collect();
    let mut report = VerificationReport::from_margins("energy", &times, margins, bound.max(lhs_max), tol.rel_tol)
        .param("eps_time", eps_time)
        .param("alpha_inv_sq_integral", alpha_int);
    report.pass = fitted.is_some();
    report.gating = false;
    report.fitted_c = fitted;
    Ok(report)
}

/// Runs every applicable check on one trajectory.
///
/// A trajectory of `v` gets the `v` checks plus the mean-drift check on the
/// recovered `u`; a trajectory of `u` gets the mean-drift and seminorm checks.
pub fn verify_trajectory(
    traj: &TrajectoryRecord,
    u0_l1: Option<f64>,
    eps_time: Option<f64>,
    tol: &ToleranceConfig,
) -> Result<Vec<VerificationReport>> {
    tol.validate()?;
    let mut out = Vec::new();
    match traj.variable {
        Variable::Transformed => {
            out.push(check_mean_drift(&recover_u_from_record(traj)?, tol)?);
            if let Some(l1) = u0_l1 {
                for s in [0.5, 1.0, 1.5] {
                    out.push(check_norm_domination(traj, s, l1, tol)?);
                }
            }
            out.push(check_max_principle(traj, tol)?);
            out.push(check_seminorm_chain(traj, tol)?);
            let eps = eps_time.unwrap_or(traj.times[0]);
            out.push(check_energy_inequality(traj, eps, tol)?);
        }
        Variable::Physical => {
            out.push(check_mean_drift(traj, tol)?);
            out.push(check_seminorm_chain(traj, tol)?);
        }
    }
    Ok(out)
}

/// `τ* = 1 / (4A (A‖u₀‖₁² + B)⁴)` with `A = c(1 + a⁴)`,
/// `B = c(1 + |u₀|₁⁴)^{1/5}(1 + a⁴)`, `a = sup α⁻¹`.
///
/// Viscosity-one formula; nonincreasing in each argument.
pub fn blowup_time_h1(u0_h1_seminorm: f64, u0_l1: f64, alpha_sup_inv: f64, c_model: f64) -> Result<f64> {
    if !(c_model > 0.0) {
        return Err(Error::Domain(format!("c_model must be positive, got {c_model}")));
    }
    if !(u0_h1_seminorm >= 0.0 && u0_l1 >= 0.0 && alpha_sup_inv >= 0.0) {
        return Err(Error::Domain("norms and alpha bound must be nonnegative".into()));
    }
    let a4 = 1.0 + alpha_sup_inv.powi(4);
    let big_a = c_model * a4;
    let big_b = c_model * (1.0 + u0_l1.powi(4)).powf(0.2) * a4;
    Ok(1.0 / (4.0 * big_a * (big_a * u0_h1_seminorm * u0_h1_seminorm + big_b).powi(4)))
}

/// Value of the `‖v(t)‖²_{3/2}` comparison bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupBound {
    Finite(f64),
    /// The denominator has reached zero: the bound no longer applies.
    Expired,
}

impl BlowupBound {
    pub fn value(self) -> f64 {
        match self {
            BlowupBound::Finite(x) => x,
            BlowupBound::Expired => f64::INFINITY,
        }
    }
}

/// `(A + s) / [1 - 13 c a₂ t (A + s)^{13}]^{1/13} - A` with `A = 1 + |u₀|₁²`,
/// `s = ‖u₀‖²_{3/2}`, `a₂ = sup α⁻²`.
pub fn blowup_bound_h32(
    t: f64,
    u0_h32_seminorm_sq: f64,
    u0_l1: f64,
    alpha_sup_inv_sq: f64,
    c_model: f64,
) -> Result<BlowupBound> {
    if !(c_model > 0.0) {
        return Err(Error::Domain(format!("c_model must be positive, got {c_model}")));
    }
    if !(t >= 0.0 && u0_h32_seminorm_sq >= 0.0 && u0_l1 >= 0.0 && alpha_sup_inv_sq >= 0.0) {
        return Err(Error::Domain("arguments must be nonnegative".into()));
    }
    let a = 1.0 + u0_l1 * u0_l1;
    let x = a + u0_h32_seminorm_sq;
    let rate = 13.0 * c_model * alpha_sup_inv_sq * t * x.powi(13);
    if rate >= 1.0 {
        return Ok(BlowupBound::Expired);
    }
    // x·(1 - rate)^{-1/13} - a, written so that t = 0 returns s exactly.
    let growth = x * (-(-rate).ln_1p() / 13.0).exp_m1();
    Ok(BlowupBound::Finite(growth + u0_h32_seminorm_sq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{RunStatus, StepStats};

    fn record(variable: Variable, rows: usize) -> TrajectoryRecord {
        TrajectoryRecord {
            variable,
            status: RunStatus::Completed,
            times: (0..rows).map(|i| i as f64 * 0.1).collect(),
            alpha: vec![1.0; rows],
            linf: vec![0.0; rows],
            semi_half: vec![0.0; rows],
            semi_one: vec![0.0; rows],
            semi_three_half: vec![0.0; rows],
            l2: vec![0.0; rows],
            h1: vec![0.0; rows],
            mean: vec![[0.0; 3]; rows],
            dissipation: vec![0.0; rows],
            lp: None,
            stats: StepStats::default(),
            blowup_time: None,
            final_state: None,
        }
    }

    #[test]
    fn zero_trajectory_passes_with_zero_margin() {
        let tol = ToleranceConfig::default();
        let r = check_mean_drift(&record(Variable::Physical, 4), &tol).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_margin, 0.0);
        let v = record(Variable::Transformed, 4);
        assert!(check_max_principle(&v, &tol).unwrap().pass);
        assert!(check_seminorm_chain(&v, &tol).unwrap().pass);
        let nd = check_norm_domination(&v, 0.5, 0.0, &tol).unwrap();
        assert!(nd.pass && nd.worst_margin == 0.0);
        let e = check_energy_inequality(&v, 0.0, &tol).unwrap();
        assert_eq!(e.fitted_c, Some(0.0));
    }

    #[test]
    fn wrong_variable_or_order_is_rejected() {
        let tol = ToleranceConfig::default();
        assert!(matches!(
            check_mean_drift(&record(Variable::Transformed, 2), &tol),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            check_norm_domination(&record(Variable::Transformed, 2), 2.0, 1.0, &tol),
            Err(Error::Domain(_))
        ));
        assert!(check_energy_inequality(&record(Variable::Transformed, 3), 0.05, &tol).is_err());
    }

    #[test]
    fn mean_drift_trapezoid_by_hand() {
        let mut u = record(Variable::Physical, 3);
        u.semi_half = vec![1.0, 2.0, 3.0];
        u.alpha = vec![1.0, 0.5, 2.0];
        u.mean = vec![[1.0, 0.0, 0.0], [0.0, 3.0, 4.0], [0.0, 0.0, 0.0]];
        let r = check_mean_drift(&u, &ToleranceConfig::default()).unwrap();
        // integrand 1, 8, 4.5 → integrals 0, 0.45, 1.075
        let k = 8.0 * PI.powi(3);
        assert!((r.margins[1] - (k * 0.45 + 1.0 - 5.0)).abs() < 1e-12);
        assert!((r.margins[2] - (k * 1.075 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn corrupted_linf_fails_max_principle() {
        let mut v = record(Variable::Transformed, 3);
        v.linf = vec![1.0, 0.9, 1.5];
        let r = check_max_principle(&v, &ToleranceConfig::default()).unwrap();
        assert!(!r.pass);
        assert!((r.worst_margin + 0.49).abs() < 1e-12);
        assert_eq!(max_principle_excess(&v), 0.5);
        assert!((max_principle_violation(&v) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn energy_fit_brackets_minimal_constant() {
        let mut v = record(Variable::Transformed, 3);
        v.h1 = vec![1.0, 1.2, 1.1];
        v.l2 = vec![0.5; 3];
        v.semi_three_half = vec![0.5; 3];
        let r = check_energy_inequality(&v, 0.0, &ToleranceConfig::default()).unwrap();
        let c = r.fitted_c.unwrap();
        // 1 + c e^{c·0.2} = 1.44
        let f = |c: f64| 1.0 + c * (c * 0.2f64).exp();
        assert!(f(c) >= 1.44 && f(c * (1.0 - 1e-9)) < 1.44);
        assert!(r.pass && !r.gating);
    }

    #[test]
    fn blowup_formulas() {
        assert_eq!(blowup_time_h1(1.0, 0.0, 0.0, 1.0).unwrap(), 1.0 / 64.0);
        assert!(blowup_time_h1(1.0, 0.0, 0.0, 0.0).is_err());
        assert_eq!(
            blowup_bound_h32(0.0, 2.75, 1.3, 4.0, 0.5).unwrap(),
            BlowupBound::Finite(2.75)
        );
        assert_eq!(blowup_bound_h32(1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), BlowupBound::Expired);
        let small = blowup_bound_h32(1e-12, 0.1, 0.0, 1.0, 1.0).unwrap().value();
        assert!(small > 0.1 && small.is_finite());
        assert_eq!(BlowupBound::Expired.value(), f64::INFINITY);
    }

    #[test]
    fn ndjson_has_required_keys() {
        let r = check_seminorm_chain(&record(Variable::Transformed, 2), &ToleranceConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_ndjson(Some(7))).unwrap();
        for key in ["check", "seed", "pass", "worst_margin", "params"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["seed"], 7);
    }
}
