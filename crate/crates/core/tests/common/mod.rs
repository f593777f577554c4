#![allow(dead_code)]

use burgers3d::spectral::{SpectralField, WaveVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Real-valued field with independent uniform coefficients on the box
/// `|k_j| ≤ n`.
pub fn random_field(n: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::with_extent(n, [n; 3]);
    let ni = n as i32;
    for k1 in -ni..=ni {
        for k2 in -ni..=ni {
            for k3 in -ni..=ni {
                let k = WaveVector::new(k1, k2, k3);
                if k < -k {
                    continue;
                }
                let mut mode = [Complex64::default(); 3];
                for z in mode.iter_mut() {
                    let re = rng.random_range(-1.0..1.0);
                    let im = if k == WaveVector::ZERO { 0.0 } else { rng.random_range(-1.0..1.0) };
                    *z = Complex64::new(re, im);
                }
                f.set(k, mode);
                f.set(-k, mode.map(|z| z.conj()));
            }
        }
    }
    f
}

/// `(u·∇)u` by direct summation over all pairs `p + q = k`, restricted to
/// the box `|k_j| ≤ cutoff`.
pub fn brute_force_convection(u: &SpectralField, cutoff: usize) -> SpectralField {
    let modes: Vec<([i32; 3], [Complex64; 3])> = u.modes().map(|(k, m)| (k.as_array(), *m)).collect();
    let c = cutoff.min(u.resolution()) as i32;
    let side = (2 * c + 1) as usize;
    let mut acc = vec![[Complex64::default(); 3]; side * side * side];
    for (p, up) in &modes {
        for (q, uq) in &modes {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            if k.iter().any(|x| x.abs() > c) {
                continue;
            }
            // (û_p · i q) û_q
            let dot = Complex64::new(0.0, 1.0)
                * (up[0] * q[0] as f64 + up[1] * q[1] as f64 + up[2] * q[2] as f64);
            let idx = ((k[0] + c) as usize * side + (k[1] + c) as usize) * side + (k[2] + c) as usize;
            for j in 0..3 {
                acc[idx][j] += dot * uq[j];
            }
        }
    }
    let mut out = SpectralField::with_extent(u.resolution(), [c as usize; 3]);
    out.for_each_mut(|k, m| {
        let idx = ((k.k1 + c) as usize * side + (k.k2 + c) as usize) * side + (k.k3 + c) as usize;
        *m = acc[idx];
    });
    out
}
