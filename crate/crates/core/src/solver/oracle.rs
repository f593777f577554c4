//! Reference solutions independent of the time stepper.

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{Error, Result};
use crate::spectral::fft::fft3;
use crate::spectral::{synthesize, GridSpec, SpectralField, WaveVector};

/// Exact solution of `∂_t z = νΔz`: every mode decays by `exp(-ν|k|²t)`.
pub fn heat_oracle(v0: &SpectralField, t: f64, nu: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("heat oracle needs t >= 0, got {t}")));
    }
    let mut out = v0.clone();
    out.for_each_mut(|k, c| {
        let e = (-nu * k.norm_sq() as f64 * t).exp();
        for z in c.iter_mut() {
            *z *= e;
        }
    });
    Ok(out)
}

/// Samples of the first component along the `x1` axis, or a domain error if
/// the field depends on `x2`, `x3` or has other nonzero components.
pub fn x1_profile(field: &SpectralField, grid: &GridSpec) -> Result<Vec<f64>> {
    let scale = field.max_abs();
    let tol = 1e-14 * scale.max(f64::MIN_POSITIVE);
    for (k, c) in field.modes() {
        let off_axis = k.k2 != 0 || k.k3 != 0;
        if (off_axis && c.iter().any(|z| z.norm() > tol)) || c[1].norm() > tol || c[2].norm() > tol {
            return Err(Error::Domain(format!(
                "field is not of the form (f(x1), 0, 0): mode {:?} is nonzero",
                k.as_array()
            )));
        }
    }
    let phys = synthesize(field, grid)?;
    Ok((0..grid.m()).map(|i| phys.at([i, 0, 0])[0]).collect())
}

/// Field `(f(x1), 0, 0)` interpolating `samples` at the grid nodes, truncated to `|k1| ≤ N`.
pub fn embed_x1_profile(samples: &[f64], grid: &GridSpec) -> Result<SpectralField> {
    if samples.len() != grid.m() {
        return Err(Error::Config(format!(
            "profile has {} samples, grid has {} points",
            samples.len(),
            grid.m()
        )));
    }
    let hat = forward(samples);
    let n = grid.n();
    let m = samples.len();
    let mut out = SpectralField::with_extent(n, [n, 0, 0]);
    for k in -(n as i64)..=(n as i64) {
        let z = hat[k.rem_euclid(m as i64) as usize];
        let mut mode = out.get(WaveVector::new(k as i32, 0, 0));
        mode[0] = z;
        out.set(WaveVector::new(k as i32, 0, 0), mode);
    }
    out.symmetrize();
    Ok(out)
}

/// Normalized forward DFT of real samples.
fn forward(samples: &[f64]) -> Vec<Complex64> {
    let m = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft3(&mut buf, [m, 1, 1], FftDirection::Forward);
    let inv = 1.0 / m as f64;
    buf.iter_mut().for_each(|z| *z *= inv);
    buf
}

fn inverse(mut hat: Vec<Complex64>) -> Vec<f64> {
    let m = hat.len();
    fft3(&mut hat, [m, 1, 1], FftDirection::Inverse);
    hat.into_iter().map(|z| z.re).collect()
}

/// Signed wavenumber of DFT bin `j` out of `m`; the Nyquist bin maps to 0.
fn wavenumber(j: usize, m: usize) -> f64 {
    if 2 * j < m {
        j as f64
    } else if 2 * j == m {
        0.0
    } else {
        j as f64 - m as f64
    }
}

/// Evaluates Cole–Hopf on a grid `r` times finer than the input and returns
/// the values at the input nodes.
fn cole_hopf_at(hat_u: &[Complex64], nu: f64, t: f64, r: usize) -> Vec<f64> {
    let m = hat_u.len();
    let mf = m * r;
    // Primitive of u0, interpolated to the fine grid.
    let mut hat_p = vec![Complex64::default(); mf];
    for (j, z) in hat_u.iter().enumerate() {
        let k = wavenumber(j, m);
        if k != 0.0 {
            let jf = if k > 0.0 { k as usize } else { mf - (-k) as usize };
            hat_p[jf] = z / Complex64::new(0.0, k);
        }
    }
    let p = inverse(hat_p);
    let p_min = p.iter().copied().fold(f64::INFINITY, f64::min);
    let phi0: Vec<f64> = p.iter().map(|&x| (-(x - p_min) / (2.0 * nu)).exp()).collect();
    let mut hat_phi = forward(&phi0);
    let mut hat_dphi = hat_phi.clone();
    for j in 0..mf {
        let k = wavenumber(j, mf);
        let e = (-nu * k * k * t).exp();
        hat_phi[j] *= e;
        hat_dphi[j] *= Complex64::new(0.0, k) * e;
    }
    let phi = inverse(hat_phi);
    let dphi = inverse(hat_dphi);
    (0..m).map(|i| -2.0 * nu * dphi[i * r] / phi[i * r]).collect()
}

const FINE_CAP: usize = 1 << 16;
const SELF_TOL: f64 = 1e-11;

/// Exact viscous Burgers solution in 1D through the Cole–Hopf transform.
///
/// `u0` holds samples of a mean-zero periodic profile at `x_i = 2π i / M`;
/// the result is `u(t)` at the same nodes. The heat problem for `φ` is solved
/// spectrally on a refined grid, doubled until successive answers agree to
/// about `1e-11` relative to `max |u0|`.
pub fn cole_hopf_oracle_1d(u0: &[f64], nu: f64, t: f64) -> Result<Vec<f64>> {
    if u0.len() < 2 {
        return Err(Error::Domain("profile needs at least two samples".into()));
    }
    if !(nu > 0.0) || !(t >= 0.0) {
        return Err(Error::Domain(format!("need nu > 0 and t >= 0, got nu = {nu}, t = {t}")));
    }
    let scale = u0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0; u0.len()]);
    }
    let hat = forward(u0);
    if hat[0].norm() > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "Cole-Hopf oracle needs a mean-zero profile (mean {:e})",
            hat[0].re
        )));
    }
    let mut r = 1;
    let mut prev = cole_hopf_at(&hat, nu, t, r);
    loop {
        r *= 2;
        let next = cole_hopf_at(&hat, nu, t, r);
        let diff = prev
            .iter()
            .zip(&next)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        if !next.iter().all(|x| x.is_finite()) {
            return Err(Error::Domain(format!(
                "Cole-Hopf factor underflows at nu = {nu}; viscosity too small for this profile"
            )));
        }
        if diff <= SELF_TOL * scale || u0.len() * r * 2 > FINE_CAP {
            return Ok(next);
        }
        prev = next;
    }
}
