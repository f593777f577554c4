//! Binary container and plain-text dump for spectral fields.
//!
//! Binary layout (all integers and floats little-endian):
//!
//! ```text
//! magic  b"B3DS"
//! u32    format version (1)
//! u32    N
//! u32    component count (3)
//! then for k1, k2, k3 each in -N..=N (k3 fastest), for each component:
//! f64    re
//! f64    im
//! ```

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{SpectralField, WaveVector};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"B3DS";
pub const FIELD_VERSION: u32 = 1;

pub fn write_binary<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    let n = field.resolution();
    w.write_all(FIELD_MAGIC)?;
    for v in [FIELD_VERSION, n as u32, 3] {
        w.write_all(&v.to_le_bytes())?;
    }
    let n = n as i32;
    for k1 in -n..=n {
        for k2 in -n..=n {
            for k3 in -n..=n {
                for z in field.get(WaveVector::new(k1, k2, k3)) {
                    w.write_all(&z.re.to_le_bytes())?;
                    w.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Reads a field written by [`write_binary`]; the storage box is compacted.
pub fn read_binary<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Data(format!("bad field magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != FIELD_VERSION {
        return Err(Error::Data(format!("unsupported field version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let comps = read_u32(&mut r)?;
    if comps != 3 {
        return Err(Error::Data(format!("expected 3 components, found {comps}")));
    }
    let mut field = SpectralField::with_extent(n, [n; 3]);
    let mut err = None;
    field.for_each_mut(|_, mode| {
        if err.is_some() {
            return;
        }
        for z in mode.iter_mut() {
            match (read_f64(&mut r), read_f64(&mut r)) {
                (Ok(re), Ok(im)) => *z = Complex64::new(re, im),
                (Err(e), _) | (_, Err(e)) => {
                    err = Some(e);
                    return;
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(field.compact()),
    }
}

/// One line per stored mode and component: `k1 k2 k3 comp re im`.
pub fn write_text<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    writeln!(w, "# N = {}", field.resolution())?;
    for (k, mode) in field.modes() {
        for (comp, z) in mode.iter().enumerate() {
            writeln!(w, "{} {} {} {} {:e} {:e}", k.k1, k.k2, k.k3, comp, z.re, z.im)?;
        }
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<SpectralField> {
    let mut field: Option<SpectralField> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("# N =") {
            let n = rest
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad resolution: {e}")))?;
            field = Some(SpectralField::zeros(n));
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let f = field
            .as_mut()
            .ok_or_else(|| parse_err("mode line before '# N =' header".into()))?;
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(parse_err(format!("expected 6 columns, found {}", parts.len())));
        }
        let int = |s: &str| s.parse::<i32>().map_err(|e| parse_err(format!("{s}: {e}")));
        let float = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("{s}: {e}")));
        let k = WaveVector::new(int(parts[0])?, int(parts[1])?, int(parts[2])?);
        let comp = int(parts[3])?;
        if !(0..3).contains(&comp) || k.max_abs() as usize > f.resolution() {
            return Err(parse_err(format!("mode {k:?} component {comp} out of range")));
        }
        let mut mode = f.get(k);
        mode[comp as usize] = Complex64::new(float(parts[4])?, float(parts[5])?);
        f.set(k, mode);
    }
    field.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing '# N =' header".into(),
    })
}
