use num_complex::Complex64;

use super::{GridSpec, WaveVector};

/// Coefficients of the three velocity components at one wave vector.
pub type Mode = [Complex64; 3];

const ZERO_MODE: Mode = [Complex64::new(0.0, 0.0); 3];

/// Fourier coefficients of a real 3-component field, truncated to `|k|_∞ ≤ N`.
///
/// Storage is a dense box `|k_j| ≤ extent[j]` inside the retained cube; modes
/// outside the box are zero. Fields that depend on fewer than three
/// coordinates therefore stay cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    resolution: usize,
    extent: [usize; 3],
    coeffs: Vec<Mode>,
}

impl SpectralField {
    pub fn zeros(resolution: usize) -> Self {
        Self::with_extent(resolution, [0; 3])
    }

    /// Zero field whose storage box already spans `extent`.
    pub fn with_extent(resolution: usize, extent: [usize; 3]) -> Self {
        assert!(
            extent.iter().all(|&e| e <= resolution),
            "extent {extent:?} exceeds resolution {resolution}"
        );
        let len = extent.iter().map(|e| 2 * e + 1).product();
        Self {
            resolution,
            extent,
            coeffs: vec![ZERO_MODE; len],
        }
    }

    pub(crate) fn from_parts(resolution: usize, extent: [usize; 3], coeffs: Vec<Mode>) -> Self {
        debug_assert_eq!(coeffs.len(), extent.iter().map(|e| 2 * e + 1).product::<usize>());
        Self {
            resolution,
            extent,
            coeffs,
        }
    }

    /// Builds a field from `(k, mode)` pairs; later entries overwrite earlier ones.
    pub fn from_modes(resolution: usize, modes: impl IntoIterator<Item = (WaveVector, Mode)>) -> Self {
        let mut f = Self::zeros(resolution);
        for (k, c) in modes {
            f.set(k, c);
        }
        f
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extent(&self) -> [usize; 3] {
        self.extent
    }

    fn dims(&self) -> [usize; 3] {
        self.extent.map(|e| 2 * e + 1)
    }

    fn index(&self, k: WaveVector) -> Option<usize> {
        let [d1, d2, d3] = self.dims();
        let mut idx = [0usize; 3];
        for (j, kj) in k.as_array().into_iter().enumerate() {
            if kj.unsigned_abs() as usize > self.extent[j] {
                return None;
            }
            idx[j] = (kj + self.extent[j] as i32) as usize;
        }
        debug_assert!(idx[0] < d1);
        Some((idx[0] * d2 + idx[1]) * d3 + idx[2])
    }

    fn wave_vector_at(&self, i: usize) -> WaveVector {
        let [_, d2, d3] = self.dims();
        let e = self.extent.map(|e| e as i32);
        WaveVector::new(
            (i / (d2 * d3)) as i32 - e[0],
            ((i / d3) % d2) as i32 - e[1],
            (i % d3) as i32 - e[2],
        )
    }

    pub fn get(&self, k: WaveVector) -> Mode {
        self.index(k).map_or(ZERO_MODE, |i| self.coeffs[i])
    }

    /// Sets one mode, growing the storage box if needed.
    ///
    /// Panics if `|k|_∞` exceeds the resolution.
    pub fn set(&mut self, k: WaveVector, value: Mode) {
        if self.index(k).is_none() {
            let [a, b, c] = k.as_array().map(|x| x.unsigned_abs() as usize);
            let ext = [
                self.extent[0].max(a),
                self.extent[1].max(b),
                self.extent[2].max(c),
            ];
            *self = self.relayout(ext);
        }
        let i = self.index(k).expect("mode inside storage box");
        self.coeffs[i] = value;
    }

    /// Copy of the field stored on a different box; modes outside `extent` are dropped.
    pub fn relayout(&self, extent: [usize; 3]) -> Self {
        if extent == self.extent {
            return self.clone();
        }
        let mut out = Self::with_extent(self.resolution, extent);
        // copy the overlap of the two boxes one k3-row at a time
        let common = [0, 1, 2].map(|j| self.extent[j].min(extent[j]) as i32);
        let len = 2 * common[2] as usize + 1;
        for k1 in -common[0]..=common[0] {
            for k2 in -common[1]..=common[1] {
                let k = WaveVector::new(k1, k2, -common[2]);
                let (src, dst) = (self.index(k).expect("in box"), out.index(k).expect("in box"));
                out.coeffs[dst..dst + len].copy_from_slice(&self.coeffs[src..src + len]);
            }
        }
        out
    }

    /// Iterates over every stored mode in lexicographic `(k1, k2, k3)` order.
    pub fn modes(&self) -> impl Iterator<Item = (WaveVector, &Mode)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.wave_vector_at(i), c))
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(WaveVector, &mut Mode)) {
        for i in 0..self.coeffs.len() {
            let k = self.wave_vector_at(i);
            f(k, &mut self.coeffs[i]);
        }
    }

    pub(crate) fn coeffs(&self) -> &[Mode] {
        &self.coeffs
    }

    /// `self += scale * other`, growing the storage box to cover both.
    pub fn add_scaled(&mut self, other: &SpectralField, scale: f64) {
        assert_eq!(self.resolution, other.resolution, "resolution mismatch");
        if other.extent != self.extent {
            let ext = [0, 1, 2].map(|j| self.extent[j].max(other.extent[j]));
            if ext != self.extent {
                *self = self.relayout(ext);
            }
        }
        if other.extent == self.extent {
            for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
                for c in 0..3 {
                    a[c] += b[c] * scale;
                }
            }
        } else {
            for (k, b) in other.modes() {
                let i = self.index(k).expect("box covers other");
                for c in 0..3 {
                    self.coeffs[i][c] += b[c] * scale;
                }
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for m in &mut self.coeffs {
            for c in m.iter_mut() {
                *c *= factor;
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// Largest coefficient modulus over all modes and components.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|m| m.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Largest modulus of `self - other` over the union of both boxes.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        let mut d = self.clone();
        d.add_scaled(other, -1.0);
        d.max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .flat_map(|m| m.iter())
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `max_k |f̂_k - conj(f̂_{-k})|`; zero for real-valued fields.
    pub fn hermitian_defect(&self) -> f64 {
        // reversing the dense box index maps k to -k
        let mut worst = 0.0f64;
        for (c, partner) in self.coeffs.iter().zip(self.coeffs.iter().rev()) {
            for j in 0..3 {
                worst = worst.max((c[j] - partner[j].conj()).norm());
            }
        }
        worst
    }

    /// Replaces each coefficient pair by its Hermitian average, making the
    /// field exactly real-valued.
    pub fn symmetrize(&mut self) {
        let n = self.coeffs.len();
        // Reversing the dense box index maps k to -k.
        for i in 0..n / 2 + 1 {
            let j = n - 1 - i;
            for c in 0..3 {
                let avg = (self.coeffs[i][c] + self.coeffs[j][c].conj()) * 0.5;
                self.coeffs[i][c] = avg;
                self.coeffs[j][c] = avg.conj();
            }
        }
    }

    /// Shrinks the storage box to the smallest one holding every nonzero mode.
    pub fn compact(&self) -> Self {
        let mut ext = [0usize; 3];
        for (k, c) in self.modes() {
            if c.iter().any(|z| z.re != 0.0 || z.im != 0.0) {
                for (j, kj) in k.as_array().into_iter().enumerate() {
                    ext[j] = ext[j].max(kj.unsigned_abs() as usize);
                }
            }
        }
        if ext == self.extent {
            self.clone()
        } else {
            self.relayout(ext)
        }
    }
}

/// Real 3-component field sampled on the uniform `M³` grid.
///
/// An axis stored with length one means the field is constant along it; the
/// value is replicated to all `M` nodes of that axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    resolution: usize,
    shape: [usize; 3],
    values: Vec<[f64; 3]>,
}

impl PhysicalField {
    pub fn new(resolution: usize, shape: [usize; 3], values: Vec<[f64; 3]>) -> Self {
        assert!(
            shape.iter().all(|&s| s == 1 || s == resolution),
            "each axis must have length 1 or {resolution}"
        );
        assert_eq!(values.len(), shape.iter().product::<usize>());
        Self {
            resolution,
            shape,
            values,
        }
    }

    /// Samples `f` at every node `x = 2π i / M` of the full grid.
    pub fn from_fn(grid: &GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let m = grid.m();
        let h = grid.spacing();
        let mut values = Vec::with_capacity(m * m * m);
        for i1 in 0..m {
            for i2 in 0..m {
                for i3 in 0..m {
                    values.push(f([i1 as f64 * h, i2 as f64 * h, i3 as f64 * h]));
                }
            }
        }
        Self::new(m, [m; 3], values)
    }

    /// Samples a field depending on `x1` only, stored collapsed along `x2, x3`.
    pub fn from_fn_x1(grid: &GridSpec, f: impl Fn(f64) -> [f64; 3]) -> Self {
        let m = grid.m();
        let h = grid.spacing();
        let values = (0..m).map(|i| f(i as f64 * h)).collect();
        Self::new(m, [m, 1, 1], values)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    /// Value at full-grid node `(i1, i2, i3)`.
    pub fn at(&self, i: [usize; 3]) -> [f64; 3] {
        let [s1, s2, s3] = self.shape;
        let j = i.map(|x| x % self.resolution);
        let idx = [
            if s1 == 1 { 0 } else { j[0] },
            if s2 == 1 { 0 } else { j[1] },
            if s3 == 1 { 0 } else { j[2] },
        ];
        self.values[(idx[0] * s2 + idx[1]) * s3 + idx[2]]
    }

    /// Expands collapsed axes to the full `M³` grid.
    pub fn expanded(&self) -> Self {
        let m = self.resolution;
        let mut values = Vec::with_capacity(m * m * m);
        for i1 in 0..m {
            for i2 in 0..m {
                for i3 in 0..m {
                    values.push(self.at([i1, i2, i3]));
                }
            }
        }
        Self::new(m, [m; 3], values)
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        self.values
            .iter()
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn set_grows_box_and_preserves_modes() {
        let mut f = SpectralField::zeros(4);
        f.set(WaveVector::new(1, 0, 0), [c(1.0, 2.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(f.extent(), [1, 0, 0]);
        f.set(WaveVector::new(0, -3, 2), [c(0.0, 0.0), c(5.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(f.extent(), [1, 3, 2]);
        assert_eq!(f.get(WaveVector::new(1, 0, 0))[0], c(1.0, 2.0));
        assert_eq!(f.get(WaveVector::new(0, -3, 2))[1], c(5.0, 0.0));
        assert_eq!(f.get(WaveVector::new(4, 4, 4))[0], c(0.0, 0.0));
    }

    #[test]
    fn reversed_index_is_negated_wave_vector() {
        let f = SpectralField::with_extent(3, [2, 1, 3]);
        let n = f.coeffs().len();
        for i in 0..n {
            assert_eq!(f.wave_vector_at(n - 1 - i), -f.wave_vector_at(i));
        }
    }

    #[test]
    fn symmetrize_makes_field_hermitian() {
        let mut f = SpectralField::zeros(2);
        f.set(WaveVector::new(1, 2, 0), [c(1.0, 1.0), c(0.0, 3.0), c(2.0, 0.0)]);
        f.set(WaveVector::ZERO, [c(1.0, 0.5), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(f.hermitian_defect() > 0.1);
        f.symmetrize();
        assert_eq!(f.hermitian_defect(), 0.0);
        assert_eq!(f.get(WaveVector::new(-1, -2, 0))[1], c(0.0, -1.5));
        assert_eq!(f.get(WaveVector::ZERO)[0], c(1.0, 0.0));
    }

    #[test]
    fn compact_drops_zero_border() {
        let mut f = SpectralField::with_extent(5, [5, 5, 5]);
        f.set(WaveVector::new(2, 0, -1), [c(1.0, 0.0); 3]);
        let g = f.compact();
        assert_eq!(g.extent(), [2, 0, 1]);
        assert_eq!(g.max_abs_diff(&f), 0.0);
    }
}
