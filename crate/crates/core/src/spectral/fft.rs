//! Separable 3D complex transforms on row-major `[m1, m2, m3]` buffers.
//!
//! Axes of length one are skipped, so fields that are constant along an axis
//! are transformed on a collapsed grid at no loss of exactness.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Unnormalized in-place transform along every axis of `data`.
pub(crate) fn fft3(data: &mut [Complex64], shape: [usize; 3], direction: FftDirection) {
    fft3_banded(data, shape, direction, [usize::MAX; 3]);
}

/// As [`fft3`], where only the wavenumber band `|k_j| ≤ band[j]` matters:
/// for an inverse transform it is the only nonzero input, for a forward
/// transform the only output that will be read. Lines outside the band are
/// skipped; the in-band values are exactly those of the full transform.
pub(crate) fn fft3_banded(data: &mut [Complex64], shape: [usize; 3], direction: FftDirection, band: [usize; 3]) {
    let [m1, m2, m3] = shape;
    debug_assert_eq!(data.len(), m1 * m2 * m3);
    let s1 = band_indices(band[0], m1);
    let s2 = band_indices(band[1], m2);

    let pass3 = |data: &mut [Complex64]| {
        if m3 > 1 {
            let starts = s1.iter().flat_map(|&i1| s2.iter().map(move |&i2| (i1 * m2 + i2) * m3));
            line_pass(data, m3, 1, starts, direction);
        }
    };
    let pass2 = |data: &mut [Complex64]| {
        if m2 > 1 {
            let starts = s1.iter().flat_map(|&i1| (0..m3).map(move |i3| i1 * m2 * m3 + i3));
            line_pass(data, m2, m3, starts, direction);
        }
    };
    let pass1 = |data: &mut [Complex64]| {
        if m1 > 1 {
            line_pass(data, m1, m2 * m3, 0..m2 * m3, direction);
        }
    };
    // inverse: spread the band outwards; forward: contract onto it
    match direction {
        FftDirection::Inverse => {
            pass3(data);
            pass2(data);
            pass1(data);
        }
        FftDirection::Forward => {
            pass1(data);
            pass2(data);
            pass3(data);
        }
    }
}

/// Buffer positions of wavenumbers `-e..=e` on an axis of `m` points.
fn band_indices(e: usize, m: usize) -> Vec<usize> {
    if e >= m / 2 {
        (0..m).collect()
    } else {
        (0..=e).chain(m - e..m).collect()
    }
}

// Transforms the lines of `len` elements `stride` apart beginning at `starts`.
fn line_pass(
    data: &mut [Complex64],
    len: usize,
    stride: usize,
    starts: impl Iterator<Item = usize>,
    direction: FftDirection,
) {
    let fft = plan(len, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    if stride == 1 {
        for s in starts {
            fft.process_with_scratch(&mut data[s..s + len], &mut scratch);
        }
        return;
    }
    let mut line = vec![Complex64::default(); len];
    for s in starts {
        for (i, z) in line.iter_mut().enumerate() {
            *z = data[s + i * stride];
        }
        fft.process_with_scratch(&mut line, &mut scratch);
        for (i, z) in line.iter().enumerate() {
            data[s + i * stride] = *z;
        }
    }
}

/// Smallest 5-smooth integer that is at least `n`.
pub(crate) fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
