use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use super::{PathParams, SignalTensor, TensorKind};
use crate::error::{Error, Result};

/// Leading bytes of the binary tensor format.
pub const TENSOR_MAGIC: &[u8; 8] = b"RAATNSR1";

const SCENARIO_HEADER: &str = "alpha_re,alpha_im,aoa_deg,delay_s,doppler_hz";

/// Writes `magic | kind | chains | subcarriers | symbols` (u64 little endian
/// after the magic), then interleaved re/im f64 little-endian samples with
/// the chain index fastest, then symbol, then subcarrier.
pub fn write_tensor<W: Write>(w: &mut W, t: &SignalTensor) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    let kind: u64 = match t.kind {
        TensorKind::Raw => 0,
        TensorKind::DataRemoved => 1,
    };
    for v in [
        kind,
        t.chains as u64,
        t.subcarriers as u64,
        t.symbols as u64,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.as_slice().len() * 16);
    for s in t.as_slice() {
        buf.extend_from_slice(&s.re.to_le_bytes());
        buf.extend_from_slice(&s.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<SignalTensor> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format("not a tensor file (bad magic)".into()));
    }
    let mut header = [0u64; 4];
    for h in header.iter_mut() {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *h = u64::from_le_bytes(b);
    }
    let kind = match header[0] {
        0 => TensorKind::Raw,
        1 => TensorKind::DataRemoved,
        k => return Err(Error::Format(format!("unknown tensor kind {k}"))),
    };
    let dims = [header[1], header[2], header[3]].map(|d| d as usize);
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("tensor dimensions overflow".into()))?;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != count * 16 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            count * 16,
            raw.len()
        )));
    }
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    SignalTensor::from_vec(dims[0], dims[1], dims[2], kind, data)
}

pub fn write_scenario_csv<W: Write>(w: &mut W, paths: &[PathParams]) -> Result<()> {
    writeln!(w, "{SCENARIO_HEADER}")?;
    for p in paths {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.gain.re,
            p.gain.im,
            p.aoa.to_degrees(),
            p.delay,
            p.doppler
        )?;
    }
    Ok(())
}

/// Reads a scenario list; the first row is taken as the line-of-sight path.
pub fn read_scenario_csv<R: BufRead>(r: R) -> Result<Vec<PathParams>> {
    let mut lines = r.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => String::new(),
    };
    if header.trim() != SCENARIO_HEADER {
        return Err(Error::Format(format!(
            "scenario CSV must start with '{SCENARIO_HEADER}'"
        )));
    }
    let mut paths = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!(
                "line {}: expected 5 fields, found {}",
                i + 1,
                fields.len()
            )));
        }
        let mut v = [0.0; 5];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number '{f}'", i + 1)))?;
        }
        paths.push(PathParams {
            gain: Complex64::new(v[0], v[1]),
            aoa: v[2].to_radians(),
            delay: v[3],
            doppler: v[4],
            is_los: paths.is_empty(),
        });
    }
    Ok(paths)
}
