//! On-disk formats: the EEGT trial-tensor container and the ratings CSV.
//!
//! EEGT layout, all integers little-endian:
//!
//! ```text
//! bytes 0..4    magic "EEGT"
//! bytes 4..8    version u32 (currently 1)
//! bytes 8..12   n_trials u32
//! bytes 12..16  n_channels u32
//! bytes 16..20  n_samples u32
//! bytes 20..24  subject_id u32
//! bytes 24..32  sample_rate_hz f64
//! bytes 32..    n_trials * n_channels * n_samples f32 values,
//!               trial-major, then channel, then sample
//! ```
//!
//! Samples are stored as f32 and widened to f64 in memory; the source data's
//! precision sits below the f32 noise floor.

use crate::error::{Error, Result};
use crate::tensor::{Ratings, TrialTensor};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const EEGT_MAGIC: [u8; 4] = *b"EEGT";
pub const EEGT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 32;

/// Serialize a tensor. Identical tensors produce identical bytes.
pub fn write_tensor(tensor: &TrialTensor, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(&EEGT_MAGIC)?;
    out.write_all(&EEGT_VERSION.to_le_bytes())?;
    out.write_all(&(tensor.n_trials() as u32).to_le_bytes())?;
    out.write_all(&(tensor.n_channels() as u32).to_le_bytes())?;
    out.write_all(&(tensor.n_samples() as u32).to_le_bytes())?;
    out.write_all(&tensor.subject_id().to_le_bytes())?;
    out.write_all(&tensor.sample_rate_hz().to_le_bytes())?;
    for &v in tensor.data() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u32(buf: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(buf[offset..offset + 4].try_into().unwrap())
}

/// Read a tensor back. Dimension and payload-length mismatches are reported
/// with the expected and actual byte counts.
pub fn read_tensor(path: &Path) -> Result<TrialTensor> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut header = [0u8; HEADER_LEN as usize];
    reader.read_exact(&mut header).map_err(|_| Error::Format(
        "file too short to hold an EEGT header".into(),
    ))?;

    if header[0..4] != EEGT_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"EEGT\"",
            &header[0..4]
        )));
    }
    let version = read_u32(&header, 4);
    if version != EEGT_VERSION {
        return Err(Error::Format(format!(
            "unsupported EEGT version {version}, expected {EEGT_VERSION}"
        )));
    }
    let n_trials = read_u32(&header, 8) as usize;
    let n_channels = read_u32(&header, 12) as usize;
    let n_samples = read_u32(&header, 16) as usize;
    let subject_id = read_u32(&header, 20);
    let sample_rate_hz = f64::from_le_bytes(header[24..32].try_into().unwrap());
    if n_trials == 0 || n_channels == 0 || n_samples == 0 {
        return Err(Error::Format(format!(
            "header declares empty dimensions {n_trials}x{n_channels}x{n_samples}"
        )));
    }

    let n_values = n_trials * n_channels * n_samples;
    let expected_bytes = HEADER_LEN + 4 * n_values as u64;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != 4 * n_values {
        return Err(Error::Corrupt {
            expected_bytes,
            actual_bytes: HEADER_LEN + payload.len() as u64,
        });
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|chunk| f32::from_le_bytes(chunk.try_into().unwrap()) as f64)
        .collect();
    TrialTensor::new(
        subject_id,
        n_trials,
        n_channels,
        n_samples,
        sample_rate_hz,
        data,
    )
}

const RATINGS_HEADER: &str = "trial,valence,arousal";

/// Write ratings as `trial,valence,arousal` rows ordered by trial.
pub fn write_ratings(ratings: &Ratings, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{RATINGS_HEADER}")?;
    for (trial, (v, a)) in ratings.valence().iter().zip(ratings.arousal()).enumerate() {
        writeln!(out, "{trial},{v},{a}")?;
    }
    out.flush()?;
    Ok(())
}

/// Parse a ratings CSV. Trials must form the contiguous range 0..n and
/// ratings must sit within [1, 9]; violations name the offending row.
pub fn read_ratings(path: &Path) -> Result<Ratings> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == RATINGS_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Format(format!(
                "expected header {RATINGS_HEADER:?}, got {header:?}"
            )));
        }
        None => return Err(Error::Format("ratings file is empty".into())),
    }

    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Validation(format!(
                "row {}: expected 3 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let trial: usize = fields[0].trim().parse().map_err(|_| {
            Error::Validation(format!("row {}: bad trial index {:?}", lineno + 1, fields[0]))
        })?;
        let mut parsed = [0.0f64; 2];
        for (slot, (name, field)) in parsed
            .iter_mut()
            .zip([("valence", fields[1]), ("arousal", fields[2])])
        {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::Validation(format!("row {}: bad {name} value {field:?}", lineno + 1))
            })?;
            if !(1.0..=9.0).contains(&value) {
                return Err(Error::Validation(format!(
                    "row {}: {name} rating {value} outside [1, 9]",
                    lineno + 1
                )));
            }
            *slot = value;
        }
        rows.push((trial, parsed[0], parsed[1]));
    }
    if rows.is_empty() {
        return Err(Error::Validation("ratings file has no data rows".into()));
    }

    rows.sort_by_key(|(trial, _, _)| *trial);
    for (expected, (trial, _, _)) in rows.iter().enumerate() {
        if *trial != expected {
            return Err(Error::Validation(format!(
                "trial {expected} missing or duplicated (found trial {trial})"
            )));
        }
    }
    let valence = rows.iter().map(|(_, v, _)| *v).collect();
    let arousal = rows.iter().map(|(_, _, a)| *a).collect();
    Ratings::new(valence, arousal)
}
