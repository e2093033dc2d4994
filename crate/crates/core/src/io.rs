//! File formats: the binary matrix container, CSV matrix interchange,
//! P5 PGM images, trace CSV, and the selection JSON document. All writes
//! go through a temp-file rename so partially written outputs never
//! appear under the final name.

use crate::error::{Error, Result};
use crate::swap::{InitSpec, ObjectiveTrace};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Binary matrix container layout, little-endian throughout:
///
/// ```text
///   0  8  magic "SWSELMAT"
///   8  2  format version (1)
///  10  1  dtype tag (1 = f64 little-endian)
///  11  1  layout tag (0 = dense row-major)
///  12  8  rows (u64)
///  20  8  cols (u64)
///  28  .. rows * cols f64 values
/// ```
const MATRIX_MAGIC: &[u8; 8] = b"SWSELMAT";
const MATRIX_VERSION: u16 = 1;
const DTYPE_F64_LE: u8 = 1;
const LAYOUT_DENSE_ROW_MAJOR: u8 = 0;
const MATRIX_HEADER_LEN: usize = 28;

pub fn encode_matrix(rows: usize, cols: usize, values: &[f64]) -> Result<Vec<u8>> {
    if values.len() != rows * cols {
        return Err(Error::Dim(format!(
            "{rows}x{cols} matrix needs {} values, got {}",
            rows * cols,
            values.len()
        )));
    }
    let mut out = Vec::with_capacity(MATRIX_HEADER_LEN + values.len() * 8);
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    out.push(DTYPE_F64_LE);
    out.push(LAYOUT_DENSE_ROW_MAJOR);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    if bytes.len() < MATRIX_HEADER_LEN {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "matrix header needs {MATRIX_HEADER_LEN} bytes, file has {}",
                bytes.len()
            ),
        });
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(Error::Parse {
            offset: 0,
            message: format!(
                "bad matrix magic {:?}, want {:?}",
                &bytes[..8],
                MATRIX_MAGIC
            ),
        });
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != MATRIX_VERSION {
        return Err(Error::Parse {
            offset: 8,
            message: format!("unsupported matrix format version {version}"),
        });
    }
    if bytes[10] != DTYPE_F64_LE {
        return Err(Error::Parse {
            offset: 10,
            message: format!("unsupported dtype tag {}", bytes[10]),
        });
    }
    if bytes[11] != LAYOUT_DENSE_ROW_MAJOR {
        return Err(Error::Parse {
            offset: 11,
            message: format!("unsupported layout tag {}", bytes[11]),
        });
    }
    let rows = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
    let count = rows.checked_mul(cols).ok_or_else(|| Error::Parse {
        offset: 12,
        message: format!("matrix shape {rows}x{cols} overflows"),
    })?;
    let expected = MATRIX_HEADER_LEN + count * 8;
    if bytes.len() != expected {
        return Err(Error::Parse {
            offset: bytes.len().min(expected),
            message: format!(
                "matrix payload: expected {expected} bytes total, file has {}",
                bytes.len()
            ),
        });
    }
    let values: Vec<f64> = bytes[MATRIX_HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((rows, cols, values))
}

pub fn write_matrix_file(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    atomic_write(path, &encode_matrix(rows, cols, values)?)
}

pub fn read_matrix_file(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    decode_matrix(&std::fs::read(path)?)
}

/// CSV matrix: one row per line, comma separated. Values print with
/// Rust's shortest-roundtrip float formatting, so a write/read cycle
/// reproduces every value bit for bit.
pub fn encode_matrix_csv(rows: usize, cols: usize, values: &[f64]) -> Result<String> {
    if values.len() != rows * cols {
        return Err(Error::Dim(format!(
            "{rows}x{cols} matrix needs {} values, got {}",
            rows * cols,
            values.len()
        )));
    }
    let mut out = String::new();
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", values[r * cols + c]));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_matrix_csv(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let mut values = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    let mut offset = 0usize;
    for line in text.lines() {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let mut this_row = 0usize;
            for field in trimmed.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    offset,
                    message: format!("row {}: cannot parse '{}' as a number", rows + 1, field.trim()),
                })?;
                values.push(v);
                this_row += 1;
            }
            match cols {
                None => cols = Some(this_row),
                Some(c) if c != this_row => {
                    return Err(Error::Parse {
                        offset,
                        message: format!(
                            "row {} has {this_row} fields, previous rows have {c}",
                            rows + 1
                        ),
                    });
                }
                _ => {}
            }
            rows += 1;
        }
        offset += line.len() + 1;
    }
    if rows == 0 {
        return Err(Error::Parse {
            offset: 0,
            message: "CSV matrix has no rows".into(),
        });
    }
    Ok((rows, cols.unwrap_or(0), values))
}

pub fn write_matrix_csv(path: &Path, rows: usize, cols: usize, values: &[f64]) -> Result<()> {
    atomic_write(path, encode_matrix_csv(rows, cols, values)?.as_bytes())
}

pub fn read_matrix_csv(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    decode_matrix_csv(&text)
}

/// 8-bit binary PGM (P5).
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        return Err(Error::Dim(format!(
            "{width}x{height} image needs {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    atomic_write(path, &encode_pgm(width, height, pixels)?)
}

/// Round intensities (already in [0, 255]) to bytes for image output.
pub fn quantize_intensities(values: &[f64]) -> Vec<u8> {
    values
        .iter()
        .map(|&v| v.clamp(0.0, 255.0).round() as u8)
        .collect()
}

/// Mask image: selected positions (0-based, row-major) white on black.
pub fn selection_mask_pixels(indices: &[usize], rows: usize, cols: usize) -> Result<Vec<u8>> {
    let mut pixels = vec![0u8; rows * cols];
    for &i in indices {
        if i >= pixels.len() {
            return Err(Error::Dim(format!(
                "selected index {i} outside a {rows}x{cols} image"
            )));
        }
        pixels[i] = 255;
    }
    Ok(pixels)
}

/// Trace CSV: one line per sweep. J and the loss print with 17
/// significant digits so re-reading reproduces the f64 values exactly.
/// With `include_timing` off the seconds column is left empty, which
/// makes reruns byte-identical.
pub fn encode_trace_csv(trace: &ObjectiveTrace, include_timing: bool) -> String {
    let mut out = String::from("sweep,accepted,J,normalized_loss,seconds\n");
    for r in &trace.records {
        let loss = r
            .normalized_loss
            .map(|l| format!("{l:.16e}"))
            .unwrap_or_default();
        let seconds = if include_timing {
            format!("{:.6}", r.seconds)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{:.16e},{},{}\n",
            r.sweep, r.accepted, r.j, loss, seconds
        ));
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &ObjectiveTrace, include_timing: bool) -> Result<()> {
    atomic_write(path, encode_trace_csv(trace, include_timing).as_bytes())
}

/// The final selection as a JSON document: 1-based indices in ascending
/// order plus the objective and the search configuration that produced it.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SelectionDocument {
    pub indices: Vec<usize>,
    pub j: f64,
    pub normalized_loss: Option<f64>,
    pub n: usize,
    pub k: usize,
    pub init: String,
    pub eps_rel: f64,
    pub sweeps: usize,
    pub accepted_total: usize,
}

pub fn init_spec_string(init: InitSpec) -> String {
    match init {
        InitSpec::Identity => "identity".to_string(),
        InitSpec::Random { seed } => format!("random:{seed}"),
    }
}

pub fn parse_init_spec(text: &str) -> Result<InitSpec> {
    if text == "identity" {
        return Ok(InitSpec::Identity);
    }
    if let Some(seed) = text.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Config(format!("bad random seed '{seed}'")))?;
        return Ok(InitSpec::Random { seed });
    }
    Err(Error::Config(format!(
        "unknown init spec '{text}' (want 'identity' or 'random:SEED')"
    )))
}

pub fn write_selection_json(path: &Path, doc: &SelectionDocument) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn read_selection_json(path: &Path) -> Result<SelectionDocument> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        offset: 0,
        message: format!("selection document: {e}"),
    })
}

/// Write via a temp file in the same directory plus rename, so readers
/// never observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
