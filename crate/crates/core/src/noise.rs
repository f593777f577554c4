//! The scalar driving noise `W(t) = Σ_k b_k B_k(t)` and the integrating
//! factor `α(t) = exp(-W(t))`.
//!
//! Only `b = Σ_k b_k²` enters the equation, and `W` is then a Brownian motion
//! with variance rate `b`, so a single scalar path is sampled.
//!
//! Random numbers come from `ChaCha8Rng` (rand_chacha 0.9) seeded with
//! `seed_from_u64`, with Gaussian variates from `rand_distr` 0.5.1's
//! `StandardNormal`. Both are pinned in the workspace manifest. Stream 0 draws
//! the coarse path; refinement `g` of a path draws from stream `g`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PATH_MAGIC: &[u8; 4] = b"B3DP";
pub const PATH_VERSION: u32 = 1;

/// Aggregate noise intensity and generator seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// `Σ b_k²`, the variance rate of `W`.
    pub b: f64,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseConfig {
    pub fn new(b: f64, seed: u64) -> Self {
        Self { b, seed }
    }

    pub fn deterministic() -> Self {
        Self { b: 0.0, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::Domain(format!("noise intensity b must be finite and >= 0, got {}", self.b)));
        }
        Ok(())
    }
}

/// `W` and `α = exp(-W)` on the uniform grid `t_i = i·dt`, `i = 0..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    b: f64,
    dt: f64,
    seed: u64,
    generation: u32,
    w: Vec<f64>,
    alpha: Vec<f64>,
}

/// Number of steps of size `dt` in `horizon`, if `dt` divides it.
pub(crate) fn step_count(dt: f64, horizon: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let steps = (horizon / dt).round();
    if steps < 1.0 || (steps * dt - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::Domain(format!("dt = {dt} does not divide T = {horizon}")));
    }
    Ok(steps as usize)
}

fn rng_for(seed: u64, stream: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(stream));
    rng
}

/// Samples `W` on `[0, T]` with increments `N(0, b·dt)`, reproducibly from `config.seed`.
pub fn sample_path(config: &NoiseConfig, dt: f64, horizon: f64) -> Result<NoisePath> {
    config.validate()?;
    let steps = step_count(dt, horizon)?;
    let mut rng = rng_for(config.seed, 0);
    let sd = (config.b * dt).sqrt();
    let mut w = Vec::with_capacity(steps + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        w.push(acc);
    }
    Ok(NoisePath::from_parts(config.b, dt, config.seed, 0, w))
}

/// Refines the grid by `factor` with Brownian-bridge samples between the
/// existing points, which are kept exactly.
pub fn refine_path(path: &NoisePath, factor: usize) -> Result<NoisePath> {
    if factor < 2 {
        return Err(Error::Domain(format!("refinement factor must be >= 2, got {factor}")));
    }
    let generation = path.generation + 1;
    let mut rng = rng_for(path.seed, generation);
    let fine_dt = path.dt / factor as f64;
    let mut w = Vec::with_capacity((path.w.len() - 1) * factor + 1);
    w.push(path.w[0]);
    for pair in path.w.windows(2) {
        let (start, end) = (pair[0], pair[1]);
        let mut x = start;
        for j in 1..factor {
            let remaining = (factor - j + 1) as f64;
            let mean = x + (end - x) / remaining;
            let var = path.b * fine_dt * (remaining - 1.0) / remaining;
            let z: f64 = rng.sample(StandardNormal);
            x = mean + var.sqrt() * z;
            w.push(x);
        }
        w.push(end);
    }
    Ok(NoisePath::from_parts(path.b, fine_dt, path.seed, generation, w))
}

impl NoisePath {
    /// Builds a path from explicit `W` values; `α` is derived as `exp(-W)`.
    pub fn from_parts(b: f64, dt: f64, seed: u64, generation: u32, w: Vec<f64>) -> Self {
        assert!(!w.is_empty(), "a path needs at least one point");
        let alpha = w.iter().map(|x| (-x).exp()).collect();
        Self {
            b,
            dt,
            seed,
            generation,
            w,
            alpha,
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    /// Number of steps `L`; the path has `L + 1` points.
    pub fn steps(&self) -> usize {
        self.w.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.w.len()).map(|i| self.time(i)).collect()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `max_i α(t_i)^n`, i.e. `exp(max_i(-n W_i))`; negative `n` gives `α^{-|n|}`.
    pub fn sup_alpha_pow(&self, n: f64) -> f64 {
        self.w
            .iter()
            .map(|x| -n * x)
            .fold(f64::NEG_INFINITY, f64::max)
            .exp()
    }

    /// Sub-path on every `stride`-th point.
    pub fn restrict(&self, stride: usize) -> Result<NoisePath> {
        if stride == 0 || self.steps() % stride != 0 {
            return Err(Error::Domain(format!(
                "stride {stride} does not divide {} steps",
                self.steps()
            )));
        }
        let w = self.w.iter().step_by(stride).copied().collect();
        Ok(NoisePath::from_parts(self.b, self.dt * stride as f64, self.seed, self.generation, w))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,W,alpha")?;
        for (i, (w, a)) in self.w.iter().zip(&self.alpha).enumerate() {
            writeln!(out, "{},{},{}", self.time(i), w, a)?;
        }
        Ok(())
    }

    /// Binary container: magic `B3DP`, u32 version, u64 seed, u32 generation,
    /// f64 b, f64 dt, u64 point count, then `W` values (all little-endian).
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(PATH_MAGIC)?;
        out.write_all(&PATH_VERSION.to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        out.write_all(&self.generation.to_le_bytes())?;
        out.write_all(&self.b.to_le_bytes())?;
        out.write_all(&self.dt.to_le_bytes())?;
        out.write_all(&(self.w.len() as u64).to_le_bytes())?;
        for w in &self.w {
            out.write_all(&w.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<NoisePath> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != PATH_MAGIC {
            return Err(Error::Data(format!("bad path magic {magic:?}")));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != PATH_VERSION {
            return Err(Error::Data(format!("unsupported path version {version}")));
        }
        input.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        input.read_exact(&mut b4)?;
        let generation = u32::from_le_bytes(b4);
        input.read_exact(&mut b8)?;
        let b = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let dt = f64::from_le_bytes(b8);
        input.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        if len == 0 {
            return Err(Error::Data("empty path".into()));
        }
        let mut w = Vec::with_capacity(len);
        for _ in 0..len {
            input.read_exact(&mut b8)?;
            w.push(f64::from_le_bytes(b8));
        }
        Ok(NoisePath::from_parts(b, dt, seed, generation, w))
    }
}

/// `2·exp(n²·b·T)`: bound on `E sup_{t≤T} α^{±n}(t)` from Doob's inequality
/// and the Novikov martingale.
pub fn doob_sup_moment_bound(n: f64, b: f64, horizon: f64) -> f64 {
    2.0 * (n * n * b * horizon).exp()
}

/// `√2·(Q/(Q-1))^Q·exp(b·T·Q²/2)`: bound on `E sup_{t≤T} α^{-Q}(t)` through
/// Doob's `L^Q` maximal inequality.
pub fn doob_sup_moment_bound_sharp(q: f64, b: f64, horizon: f64) -> Result<f64> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!("maximal inequality needs Q > 1, got {q}")));
    }
    Ok(std::f64::consts::SQRT_2 * (q / (q - 1.0)).powf(q) * (b * horizon * q * q / 2.0).exp())
}

/// `E exp(Q·W(t)) = exp(Q²·b·t/2)`.
pub fn exp_moment_exact(q: f64, b: f64, t: f64) -> f64 {
    (q * q * b * t / 2.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_intensity_gives_unit_alpha() {
        let p = sample_path(&NoiseConfig::new(0.0, 9), 0.01, 1.0).unwrap();
        assert_eq!(p.steps(), 100);
        assert!(p.w().iter().all(|&x| x == 0.0));
        assert!(p.alpha().iter().all(|&a| a == 1.0));
        let r = refine_path(&p, 4).unwrap();
        assert!(r.w().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = NoiseConfig::new(0.7, 1234);
        let a = sample_path(&cfg, 1e-3, 0.5).unwrap();
        let b = sample_path(&cfg, 1e-3, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_path(&NoiseConfig::new(0.7, 1235), 1e-3, 0.5).unwrap());
        assert_eq!(a.w()[0], 0.0);
        assert_eq!(a.alpha()[0], 1.0);
        for (w, al) in a.w().iter().zip(a.alpha()) {
            assert_eq!(*al, (-w).exp());
            assert!(*al > 0.0);
        }
    }

    #[test]
    fn bad_grids_rejected() {
        let cfg = NoiseConfig::new(1.0, 0);
        assert!(matches!(sample_path(&cfg, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(sample_path(&cfg, 0.1, -1.0), Err(Error::Domain(_))));
        assert!(matches!(sample_path(&cfg, 0.3, 1.0), Err(Error::Domain(_))));
        assert!(sample_path(&NoiseConfig::new(-1.0, 0), 0.1, 1.0).is_err());
    }

    #[test]
    fn refine_then_restrict_is_identity() {
        let p = sample_path(&NoiseConfig::new(1.3, 5), 0.01, 1.0).unwrap();
        for factor in [2, 3, 8] {
            let r = refine_path(&p, factor).unwrap();
            assert_eq!(r.steps(), p.steps() * factor);
            assert_eq!(r.restrict(factor).unwrap().w(), p.w());
        }
        assert!(refine_path(&p, 1).is_err());
    }

    #[test]
    fn closed_form_bounds() {
        assert_eq!(doob_sup_moment_bound(0.0, 3.0, 2.0), 2.0);
        assert!((doob_sup_moment_bound(1.0, 1.0, 1.0) - 5.436_563_656_918_09).abs() < 1e-12);
        let sharp = doob_sup_moment_bound_sharp(2.0, 1.0, 1.0).unwrap();
        assert!((sharp - 41.798_813_392_973_44).abs() < 1e-12);
        let flat = doob_sup_moment_bound_sharp(2.0, 0.0, 1.0).unwrap();
        assert!((flat - 5.656_854_249_492_38).abs() < 1e-12);
        assert!(matches!(doob_sup_moment_bound_sharp(1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!((exp_moment_exact(1.0, 1.0, 1.0) - 1.648_721_270_700_128).abs() < 1e-15);
        assert_eq!(exp_moment_exact(3.0, 2.0, 0.0), 1.0);
    }

    #[test]
    fn binary_roundtrip() {
        let p = refine_path(&sample_path(&NoiseConfig::new(0.5, 77), 0.1, 1.0).unwrap(), 2).unwrap();
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        assert_eq!(NoisePath::read_binary(buf.as_slice()).unwrap(), p);
        let mut csv = Vec::new();
        p.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,W,alpha\n0,0,1\n"));
        assert_eq!(text.lines().count(), p.steps() + 2);
    }
}
