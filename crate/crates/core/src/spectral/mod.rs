//! Periodic vector fields on the torus `[0, 2π)³` in spectral and physical form.
//!
//! Coefficients follow the expansion `f(x) = Σ_k f̂_k e^{ik·x}`. All norms carry
//! the `(2π)³` Parseval factor, so `‖f‖_s = |Λ^s f|₂` holds literally and the
//! grid quadrature of `|f|₂²` equals `(2π)³ Σ_k |f̂_k|²` for band-limited data.

pub(crate) mod fft;
mod field;
pub mod io;
mod ops;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use field::{Mode, PhysicalField, SpectralField};
pub use ops::{
    analyze, convective_term, galerkin_project, l2_norm, lambda_pow, lp_norm, seminorm,
    sobolev_norm, spatial_mean, synthesize,
};

/// `(2π)³`, the volume of the torus.
pub const TORUS_VOLUME: f64 = 8.0 * std::f64::consts::PI * std::f64::consts::PI * std::f64::consts::PI;

/// Integer Fourier mode index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector {
    pub k1: i32,
    pub k2: i32,
    pub k3: i32,
}

impl WaveVector {
    pub const ZERO: WaveVector = WaveVector { k1: 0, k2: 0, k3: 0 };

    pub const fn new(k1: i32, k2: i32, k3: i32) -> Self {
        Self { k1, k2, k3 }
    }

    pub fn norm_sq(self) -> i64 {
        let [a, b, c] = self.as_array().map(i64::from);
        a * a + b * b + c * c
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    /// Largest absolute component.
    pub fn max_abs(self) -> u32 {
        self.as_array().iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn as_array(self) -> [i32; 3] {
        [self.k1, self.k2, self.k3]
    }

    pub fn from_array(k: [i32; 3]) -> Self {
        Self::new(k[0], k[1], k[2])
    }
}

impl std::ops::Neg for WaveVector {
    type Output = WaveVector;

    fn neg(self) -> WaveVector {
        WaveVector::new(-self.k1, -self.k2, -self.k3)
    }
}

/// How quadratic products are de-aliased.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DealiasRule {
    /// Keep only modes with `|k_j| ≤ (M-1)/3` after a product.
    #[default]
    TwoThirds,
    /// Keep every mode representable at the spectral truncation.
    None,
}

/// Spectral truncation `N`, physical points per axis `M`, and de-aliasing rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRepr", into = "GridSpecRepr")]
pub struct GridSpec {
    n: usize,
    m: usize,
    dealias: DealiasRule,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpecRepr {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(default)]
    dealias: DealiasRule,
}

impl TryFrom<GridSpecRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridSpecRepr) -> Result<Self> {
        match r.m {
            Some(m) => GridSpec::with_points(r.n, m, r.dealias),
            None => GridSpec::new(r.n, r.dealias),
        }
    }
}

impl From<GridSpec> for GridSpecRepr {
    fn from(g: GridSpec) -> Self {
        GridSpecRepr {
            n: g.n,
            m: Some(g.m),
            dealias: g.dealias,
        }
    }
}

impl GridSpec {
    /// Grid with the default physical resolution: the smallest 5-smooth
    /// multiple of four that makes products of retained modes alias-free
    /// under the two-thirds rule (`M ≥ 3N + 1`), or `M ≥ 2N + 2` otherwise.
    ///
    /// Multiples of four put `x = π/2` on the grid.
    pub fn new(n: usize, dealias: DealiasRule) -> Result<Self> {
        let min = match dealias {
            DealiasRule::TwoThirds => 3 * n + 1,
            DealiasRule::None => 2 * n + 2,
        };
        let mut m = 4 * min.div_ceil(4);
        while fft::next_smooth(m) != m {
            m += 4;
        }
        Self::with_points(n, m, dealias)
    }

    pub fn with_points(n: usize, m: usize, dealias: DealiasRule) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("spectral truncation N must be positive".into()));
        }
        if m % 2 != 0 {
            return Err(Error::Config(format!("physical grid size M = {m} must be even")));
        }
        if m < 2 * n + 2 {
            return Err(Error::Config(format!(
                "physical grid size M = {m} is too small for N = {n} (need M >= 2N + 2)"
            )));
        }
        if i32::try_from(n).is_err() {
            return Err(Error::Config(format!("N = {n} is too large")));
        }
        Ok(Self { n, m, dealias })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dealias(&self) -> DealiasRule {
        self.dealias
    }

    /// Largest `|k_j|` kept after a quadratic product.
    pub fn dealias_cutoff(&self) -> usize {
        match self.dealias {
            DealiasRule::TwoThirds => self.n.min((self.m - 1) / 3),
            DealiasRule::None => self.n,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.m as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids_cover_three_halves() {
        for n in 1..=64 {
            let g = GridSpec::new(n, DealiasRule::TwoThirds).unwrap();
            assert!(g.m() > 3 * n && g.m() % 4 == 0);
            assert_eq!(g.dealias_cutoff(), n);
        }
        assert_eq!(GridSpec::new(64, DealiasRule::TwoThirds).unwrap().m(), 200);
        assert_eq!(GridSpec::new(8, DealiasRule::TwoThirds).unwrap().m(), 32);
    }

    #[test]
    fn small_grid_rejected() {
        assert!(matches!(
            GridSpec::with_points(8, 16, DealiasRule::TwoThirds),
            Err(Error::Config(_))
        ));
        assert!(GridSpec::with_points(8, 17, DealiasRule::None).is_err());
        let g = GridSpec::with_points(8, 18, DealiasRule::TwoThirds).unwrap();
        assert_eq!(g.dealias_cutoff(), 5);
    }

    #[test]
    fn wave_vector_norms_are_exact() {
        let k = WaveVector::new(-3, 4, 12);
        assert_eq!(k.norm_sq(), 169);
        assert_eq!(k.norm(), 13.0);
        assert_eq!(k.max_abs(), 12);
        assert_eq!(-k, WaveVector::new(3, -4, -12));
    }
}
