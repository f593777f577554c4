use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{galerkin_project, l2_norm, GridSpec, SpectralField, WaveVector, TORUS_VOLUME};

/// Library of initial velocity fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `amplitude · cos(k·x)` in one component.
    SingleMode {
        k: [i32; 3],
        #[serde(default)]
        component: usize,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `(amplitude · sin x1, 0, 0)`.
    SineShear {
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Mean-zero Gaussian coefficients scaled by `|k|^{-decay_r}`, normalized
    /// to root-mean-square velocity `amplitude`.
    RandomSmooth {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "two")]
        decay_r: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `(Σ_j sine[j] sin((j+1) x1) + cosine[j] cos((j+1) x1), 0, 0)`.
    OneDimensional {
        #[serde(default)]
        sine: Vec<f64>,
        #[serde(default)]
        cosine: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn set_pair(f: &mut SpectralField, k: WaveVector, comp: usize, value: Complex64) {
    let mut m = f.get(k);
    m[comp] += value;
    f.set(k, m);
    let mut m = f.get(-k);
    m[comp] += value.conj();
    f.set(-k, m);
}

impl InitialCondition {
    /// Spectral coefficients on `grid`, projected onto `|k| ≤ N`.
    pub fn build(&self, grid: &GridSpec) -> Result<SpectralField> {
        let n = grid.n();
        let mut f = SpectralField::zeros(n);
        match self {
            InitialCondition::SingleMode { k, component, amplitude } => {
                let k = WaveVector::from_array(*k);
                if *component > 2 {
                    return Err(Error::Config(format!("component {component} out of range")));
                }
                if k.max_abs() as usize > n {
                    return Err(Error::Config(format!("mode {k:?} exceeds N = {n}")));
                }
                if k == WaveVector::ZERO {
                    let mut m = f.get(k);
                    m[*component] = c(*amplitude, 0.0);
                    f.set(k, m);
                } else {
                    let mut m = f.get(k);
                    m[*component] = c(amplitude / 2.0, 0.0);
                    f.set(k, m);
                    let mut m = f.get(-k);
                    m[*component] = c(amplitude / 2.0, 0.0);
                    f.set(-k, m);
                }
            }
            InitialCondition::SineShear { amplitude } => {
                set_pair(&mut f, WaveVector::new(1, 0, 0), 0, c(0.0, -amplitude / 2.0));
            }
            InitialCondition::RandomSmooth { amplitude, decay_r, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let ni = n as i32;
                let n_sq = (n * n) as i64;
                f = SpectralField::with_extent(n, [n; 3]);
                // Draw each ±k pair once, in lexicographic order of the positive representative.
                for k1 in -ni..=ni {
                    for k2 in -ni..=ni {
                        for k3 in -ni..=ni {
                            let k = WaveVector::new(k1, k2, k3);
                            if k <= -k || k.norm_sq() > n_sq {
                                continue;
                            }
                            let w = (k.norm_sq() as f64).powf(-0.5 * decay_r);
                            for comp in 0..3 {
                                let re: f64 = rng.sample(StandardNormal);
                                let im: f64 = rng.sample(StandardNormal);
                                set_pair(&mut f, k, comp, c(re * w, im * w));
                            }
                        }
                    }
                }
                let rms = l2_norm(&f) / TORUS_VOLUME.sqrt();
                if rms > 0.0 {
                    f.scale(amplitude / rms);
                }
            }
            InitialCondition::OneDimensional { sine, cosine } => {
                for (j, (&s, &cs)) in sine
                    .iter()
                    .chain(std::iter::repeat(&0.0))
                    .zip(cosine.iter().chain(std::iter::repeat(&0.0)))
                    .take(sine.len().max(cosine.len()))
                    .enumerate()
                {
                    if j + 1 > n {
                        return Err(Error::Config(format!("x1 mode {} exceeds N = {n}", j + 1)));
                    }
                    set_pair(&mut f, WaveVector::new(j as i32 + 1, 0, 0), 0, c(cs / 2.0, -s / 2.0));
                }
            }
        }
        Ok(galerkin_project(&f, n))
    }
}
