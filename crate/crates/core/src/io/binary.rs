//! The `TNSR` container shared by tensors and masks.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "TNSR"
//! 4       1           version: 0x01 tensor (f64 payload), 0x02 mask (u8 payload)
//! 5       4           ndim, u32 little-endian
//! 9       8 * ndim    extents, u64 little-endian
//! ...                 payload in storage order (first index fastest)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, ObservationMask};

pub const MAGIC: [u8; 4] = *b"TNSR";
pub const TENSOR_VERSION: u8 = 0x01;
pub const MASK_VERSION: u8 = 0x02;

fn header(version: u8, shape: &[usize], payload_len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + 8 * shape.len() + payload_len);
    out.extend_from_slice(&MAGIC);
    out.push(version);
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out
}

/// Validates the header and returns the shape and the payload offset.
fn parse_header(bytes: &[u8], version: u8) -> Result<(Vec<usize>, usize)> {
    if bytes.len() < 4 {
        return Err(Error::format(0, "truncated magic"));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"TNSR\""));
    }
    match bytes.get(4) {
        None => return Err(Error::format(4, "missing version byte")),
        Some(&v) if v != version => {
            return Err(Error::format(
                4,
                format!("unsupported version 0x{v:02x}, expected 0x{version:02x}"),
            ))
        }
        Some(_) => {}
    }
    let ndim_bytes: [u8; 4] = bytes
        .get(5..9)
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Error::format(5, "truncated ndim"))?;
    let ndim = u32::from_le_bytes(ndim_bytes) as usize;
    if ndim == 0 {
        return Err(Error::format(5, "ndim must be at least 1"));
    }
    if (bytes.len() - 9) / 8 < ndim {
        return Err(Error::format(9, format!("truncated extents: {ndim} declared")));
    }
    let mut shape = Vec::with_capacity(ndim);
    let mut total: usize = 1;
    for k in 0..ndim {
        let at = 9 + 8 * k;
        let raw = u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"));
        if raw == 0 {
            return Err(Error::format(at, format!("extent of mode {} is zero", k + 1)));
        }
        let extent = usize::try_from(raw).map_err(|_| Error::format(at, "extent overflows"))?;
        total = total
            .checked_mul(extent)
            .ok_or_else(|| Error::format(at, "element count overflows"))?;
        shape.push(extent);
    }
    Ok((shape, 9 + 8 * ndim))
}

fn check_payload(bytes: &[u8], start: usize, expected: Option<usize>) -> Result<()> {
    let expected = expected.ok_or_else(|| Error::format(start, "payload size overflows"))?;
    let got = bytes.len() - start;
    if got < expected {
        return Err(Error::format(
            bytes.len(),
            format!("truncated payload: {got} of {expected} bytes"),
        ));
    }
    if got > expected {
        return Err(Error::format(start + expected, "trailing bytes after payload"));
    }
    Ok(())
}

pub fn encode_tensor(t: &DenseTensor) -> Vec<u8> {
    let mut out = header(TENSOR_VERSION, t.shape(), 8 * t.len());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<DenseTensor> {
    let (shape, start) = parse_header(bytes, TENSOR_VERSION)?;
    let total: usize = shape.iter().product();
    check_payload(bytes, start, total.checked_mul(8))?;
    let data = bytes[start..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DenseTensor::new(shape, data)
}

pub fn encode_mask(mask: &ObservationMask) -> Vec<u8> {
    let mut out = header(MASK_VERSION, mask.shape(), mask.len());
    out.extend(mask.observed().iter().map(|&o| o as u8));
    out
}

pub fn decode_mask(bytes: &[u8]) -> Result<ObservationMask> {
    let (shape, start) = parse_header(bytes, MASK_VERSION)?;
    let total: usize = shape.iter().product();
    check_payload(bytes, start, Some(total))?;
    let observed = bytes[start..]
        .iter()
        .enumerate()
        .map(|(k, &b)| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::format(start + k, format!("mask byte 0x{other:02x} is not 0 or 1"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    ObservationMask::new(shape, observed)
}

/// Parses a text index list: one 1-based multi-index per line, comma
/// separated. Blank lines and `#` comments are skipped.
pub fn parse_index_list(text: &str, shape: &[usize]) -> Result<ObservationMask> {
    let mut observed = vec![false; ObservationMask::empty(shape)?.len()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != shape.len() {
            return Err(Error::parse(
                lineno,
                format!("expected {} indices, found {}", shape.len(), fields.len()),
            ));
        }
        let mut offset = 0usize;
        for (mode, field) in fields.iter().enumerate().rev() {
            let idx: usize = field
                .parse()
                .map_err(|_| Error::parse(lineno, format!("`{field}` is not an index")))?;
            if idx == 0 || idx > shape[mode] {
                return Err(Error::parse(
                    lineno,
                    format!("index {idx} out of range 1..={} for mode {}", shape[mode], mode + 1),
                ));
            }
            offset = offset * shape[mode] + (idx - 1);
        }
        observed[offset] = true;
    }
    ObservationMask::new(shape.to_vec(), observed)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    write_bytes(path.as_ref(), &encode_tensor(t))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode_tensor(&read_bytes(path.as_ref())?)
}

pub fn write_mask(path: impl AsRef<Path>, mask: &ObservationMask) -> Result<()> {
    write_bytes(path.as_ref(), &encode_mask(mask))
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<ObservationMask> {
    decode_mask(&read_bytes(path.as_ref())?)
}

pub fn read_mask_index_list(path: impl AsRef<Path>, shape: &[usize]) -> Result<ObservationMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_index_list(&text, shape)
}
