use num_complex::Complex64;
use rustfft::FftDirection;

use super::fft::{fft3_banded, next_smooth};
use super::{GridSpec, PhysicalField, SpectralField, WaveVector, TORUS_VOLUME};
use crate::error::{Error, Result};

/// Relative Hermitian defect tolerated by [`synthesize`].
const HERMITIAN_TOL: f64 = 1e-12;

fn check_resolution(field: &SpectralField, grid: &GridSpec) -> Result<()> {
    if field.resolution() != grid.n() {
        return Err(Error::Config(format!(
            "field resolution N = {} does not match grid N = {}",
            field.resolution(),
            grid.n()
        )));
    }
    Ok(())
}

/// Wrap-around position of mode `k` on an axis with `m` points.
fn wrap(k: i32, m: usize) -> usize {
    k.rem_euclid(m as i32) as usize
}

/// One real field derived from a spectral field: component `comp`,
/// optionally differentiated along `derivative`.
#[derive(Clone, Copy)]
struct Source {
    comp: usize,
    derivative: Option<usize>,
}

/// Inverse transforms of up to two real fields on `shape`, packed into one
/// complex transform as `a + i b`. Exact for Hermitian input.
fn to_physical(field: &SpectralField, a: Source, b: Option<Source>, shape: [usize; 3]) -> (Vec<f64>, Vec<f64>) {
    let [_, m2, m3] = shape;
    let mut buf = vec![Complex64::default(); shape.iter().product()];
    let ext = field.extent();
    for (k, c) in field.modes() {
        let ka = k.as_array();
        let value = |src: Source| match src.derivative {
            Some(axis) => c[src.comp] * Complex64::new(0.0, ka[axis] as f64),
            None => c[src.comp],
        };
        let mut z = value(a);
        if let Some(b) = b {
            z += Complex64::i() * value(b);
        }
        let idx = (wrap(ka[0], shape[0]) * m2 + wrap(ka[1], m2)) * m3 + wrap(ka[2], m3);
        buf[idx] += z;
    }
    fft3_banded(&mut buf, shape, FftDirection::Inverse, ext);
    let re = buf.iter().map(|z| z.re).collect();
    let im = if b.is_some() { buf.iter().map(|z| z.im).collect() } else { Vec::new() };
    (re, im)
}

/// Forward transforms of one or two real sample sets on `shape`, keeping
/// modes `|k_j| ≤ extent[j]` with `1/M³` normalization. Two sets share one
/// complex transform and are separated by Hermitian symmetry.
fn to_spectral(a: &[f64], b: Option<&[f64]>, shape: [usize; 3], extent: [usize; 3]) -> (Vec<Complex64>, Vec<Complex64>) {
    let [_, m2, m3] = shape;
    let norm = 1.0 / shape.iter().product::<usize>() as f64;
    let mut buf: Vec<Complex64> = match b {
        Some(b) => a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect(),
        None => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
    };
    fft3_banded(&mut buf, shape, FftDirection::Forward, extent);
    let e = extent.map(|e| e as i32);
    let index = |k1: i32, k2: i32, k3: i32| (wrap(k1, shape[0]) * m2 + wrap(k2, m2)) * m3 + wrap(k3, m3);
    let len = extent.iter().map(|e| 2 * e + 1).product();
    let mut out_a = Vec::with_capacity(len);
    let mut out_b = Vec::with_capacity(if b.is_some() { len } else { 0 });
    for k1 in -e[0]..=e[0] {
        for k2 in -e[1]..=e[1] {
            for k3 in -e[2]..=e[2] {
                let z = buf[index(k1, k2, k3)] * norm;
                if b.is_some() {
                    let w = buf[index(-k1, -k2, -k3)].conj() * norm;
                    out_a.push(0.5 * (z + w));
                    out_b.push(Complex64::new(0.0, -0.5) * (z - w));
                } else {
                    out_a.push(z);
                }
            }
        }
    }
    (out_a, out_b)
}

/// Forward transforms of three real component arrays.
fn to_spectral3(comps: [&[f64]; 3], shape: [usize; 3], extent: [usize; 3]) -> [Vec<Complex64>; 3] {
    let (c0, c1) = to_spectral(comps[0], Some(comps[1]), shape, extent);
    let (c2, _) = to_spectral(comps[2], None, shape, extent);
    [c0, c1, c2]
}

/// Inverse transforms of the three components of `field`.
fn to_physical3(field: &SpectralField, shape: [usize; 3]) -> [Vec<f64>; 3] {
    let plain = |comp| Source { comp, derivative: None };
    let (c0, c1) = to_physical(field, plain(0), Some(plain(1)), shape);
    let (c2, _) = to_physical(field, plain(2), None, shape);
    [c0, c1, c2]
}

fn assemble(resolution: usize, extent: [usize; 3], comps: [Vec<Complex64>; 3]) -> SpectralField {
    let coeffs = (0..comps[0].len())
        .map(|i| [comps[0][i], comps[1][i], comps[2][i]])
        .collect();
    let mut f = SpectralField::from_parts(resolution, extent, coeffs);
    f.symmetrize();
    f
}

/// Forward transform with `1/M³` normalization, truncated to `|k|_∞ ≤ N`.
///
/// The result is exactly Hermitian.
pub fn analyze(field: &PhysicalField, grid: &GridSpec) -> Result<SpectralField> {
    if field.resolution() != grid.m() {
        return Err(Error::Config(format!(
            "physical field has {} points per axis, grid expects {}",
            field.resolution(),
            grid.m()
        )));
    }
    let shape = field.shape();
    let extent = shape.map(|s| if s == 1 { 0 } else { grid.n() });
    let split: [Vec<f64>; 3] = [0, 1, 2].map(|c| field.values().iter().map(|v| v[c]).collect());
    let comps = to_spectral3([&split[0], &split[1], &split[2]], shape, extent);
    Ok(assemble(grid.n(), extent, comps))
}

/// Inverse transform onto the grid. Axes along which the field has no
/// modes are stored collapsed.
pub fn synthesize(field: &SpectralField, grid: &GridSpec) -> Result<PhysicalField> {
    check_resolution(field, grid)?;
    let scale = field.max_abs();
    let defect = field.hermitian_defect();
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Data(format!(
            "field is not Hermitian-symmetric (defect {defect:e}, scale {scale:e})"
        )));
    }
    let shape = field.extent().map(|e| if e == 0 { 1 } else { grid.m() });
    let comps = to_physical3(field, shape);
    let values = (0..comps[0].len()).map(|i| [comps[0][i], comps[1][i], comps[2][i]]).collect();
    Ok(PhysicalField::new(grid.m(), shape, values))
}

/// Multiplies mode `k` by `|k|^s`.
pub fn lambda_pow(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("Λ^s requires s >= 0, got {s}")));
    }
    let mut out = field.clone();
    if s == 0.0 {
        return Ok(out);
    }
    let weights = radial_weights(&out, 0.5 * s);
    out.for_each_mut(|k, c| {
        let factor = weights(k.norm_sq());
        for z in c.iter_mut() {
            *z *= factor;
        }
    });
    Ok(out)
}

/// `‖f‖_s = ((2π)³ Σ_{k≠0} |k|^{2s} |f̂_k|²)^{1/2}`.
pub fn seminorm(field: &SpectralField, s: f64) -> f64 {
    let weights = radial_weights(field, s);
    let sum: f64 = field
        .modes()
        .filter(|(k, _)| *k != WaveVector::ZERO)
        .map(|(k, c)| weights(k.norm_sq()) * c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    (TORUS_VOLUME * sum).sqrt()
}

/// `|k|² ↦ (|k|²)^p`, tabulated when the field has more modes than
/// distinct values of `|k|²`.
fn radial_weights(field: &SpectralField, p: f64) -> impl Fn(i64) -> f64 {
    let max: usize = field.extent().iter().map(|e| e * e).sum();
    let modes: usize = field.extent().iter().map(|e| 2 * e + 1).product();
    let table: Option<Vec<f64>> = (modes > max + 1).then(|| (0..=max).map(|k2| (k2 as f64).powf(p)).collect());
    move |k2| match &table {
        Some(t) => t[k2 as usize],
        None => (k2 as f64).powf(p),
    }
}

/// `|f|₂ = ((2π)³ Σ_k |f̂_k|²)^{1/2}`.
pub fn l2_norm(field: &SpectralField) -> f64 {
    let sum: f64 = field
        .coeffs()
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    (TORUS_VOLUME * sum).sqrt()
}

/// `‖f‖_{H^s} = |f|₂ + ‖f‖_s`.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> f64 {
    l2_norm(field) + seminorm(field, s)
}

/// Rectangle-rule `(∫|f|^p dx)^{1/p}` on the grid, or the grid maximum of `|f|` for `p = ∞`.
pub fn lp_norm(field: &PhysicalField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("L^p norm requires p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(field.max_magnitude());
    }
    let values = field.values();
    let mean = values
        .iter()
        .map(|v| {
            let m2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if p == 2.0 {
                m2
            } else {
                m2.sqrt().powf(p)
            }
        })
        .sum::<f64>()
        / values.len() as f64;
    Ok((TORUS_VOLUME * mean).powf(1.0 / p))
}

/// `P_n`: keeps modes with `|k| ≤ n` (Euclidean ball).
pub fn galerkin_project(field: &SpectralField, n: usize) -> SpectralField {
    let extent = field.extent().map(|e| e.min(n));
    let mut out = field.relayout(extent);
    let n_sq = (n as i64) * (n as i64);
    out.for_each_mut(|k, c| {
        if k.norm_sq() > n_sq {
            *c = [Complex64::default(); 3];
        }
    });
    out
}

/// Pseudo-spectral `(u·∇)u`, de-aliased according to the grid's rule.
///
/// Each axis is evaluated on the smallest grid that reproduces the result of
/// the full `M`-point grid: an alias-free size when one no larger than `M`
/// exists, `M` itself otherwise, and a single point along axes where `u` is
/// constant.
pub fn convective_term(u: &SpectralField, grid: &GridSpec) -> Result<SpectralField> {
    check_resolution(u, grid)?;
    let cutoff = grid.dealias_cutoff();
    let input = u.extent();
    if input.iter().any(|&e| 2 * e + 1 > grid.m()) {
        return Err(Error::Config(format!(
            "grid M = {} cannot hold field extent {input:?}",
            grid.m()
        )));
    }
    let output = input.map(|e| (2 * e).min(cutoff));
    let shape = [0, 1, 2].map(|j| {
        if input[j] == 0 {
            1
        } else {
            let alias_free = 2 * input[j] + output[j] + 1;
            if alias_free <= grid.m() {
                next_smooth(alias_free).min(grid.m())
            } else {
                grid.m()
            }
        }
    });

    let points: usize = shape.iter().product();
    let velocity = to_physical3(u, shape);
    // ∂_axis u_comp for every axis along which u varies, two per transform
    let grads: Vec<(usize, Source)> = (0..3)
        .filter(|&axis| input[axis] > 0)
        .flat_map(|axis| (0..3).map(move |comp| (axis, Source { comp, derivative: Some(axis) })))
        .collect();
    let mut product = [0, 1, 2].map(|_| vec![0.0; points]);
    for pair in grads.chunks(2) {
        let (re, im) = to_physical(u, pair[0].1, pair.get(1).map(|p| p.1), shape);
        for ((axis, src), values) in pair.iter().zip([re, im]) {
            for ((w, a), g) in product[src.comp].iter_mut().zip(&velocity[*axis]).zip(&values) {
                *w += a * g;
            }
        }
    }
    let comps = to_spectral3([&product[0], &product[1], &product[2]], shape, output);
    Ok(assemble(u.resolution(), output, comps))
}

/// `∫ f dx = (2π)³ f̂_0`.
pub fn spatial_mean(field: &SpectralField) -> Result<[f64; 3]> {
    let c0 = field.get(WaveVector::ZERO);
    let mut out = [0.0; 3];
    for (o, z) in out.iter_mut().zip(c0) {
        if z.im.abs() > 1e-12 * z.re.abs().max(1.0) {
            return Err(Error::Data(format!("zero mode is not real: {z}")));
        }
        *o = TORUS_VOLUME * z.re;
    }
    Ok(out)
}
