//! Minimal reader and writer for the numpy `.npy` format.
//!
//! Only what displacement fields need: little-endian `f4`/`f8` payloads in
//! C order. Versions 1.0 through 3.0 of the header are accepted on read;
//! writes always produce version 1.0.

use std::io::{Read, Write};

use crate::error::{Result, UrqaError};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const HEADER_ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }

    fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
        }
    }
}

/// A float array read from an `.npy` stream, widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub data: Vec<f64>,
}

fn bad(reason: impl Into<String>) -> UrqaError {
    UrqaError::unsupported(None, reason)
}

#[derive(Debug)]
struct HeaderDict {
    dtype: Dtype,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Returns the text following `'key':` in a python dict literal.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let needle_single = format!("'{key}'");
    let needle_double = format!("\"{key}\"");
    let start = header
        .find(&needle_single)
        .map(|i| i + needle_single.len())
        .or_else(|| header.find(&needle_double).map(|i| i + needle_double.len()))
        .ok_or_else(|| bad(format!("npy header lacks '{key}'")))?;
    let rest = header[start..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| bad(format!("malformed npy header near '{key}'")))?;
    Ok(rest.trim_start())
}

fn parse_header(header: &str) -> Result<HeaderDict> {
    let descr = dict_value(header, "descr")?;
    let quote = descr
        .chars()
        .next()
        .filter(|c| *c == '\'' || *c == '"')
        .ok_or_else(|| bad("npy descr is not a string"))?;
    let end = descr[1..]
        .find(quote)
        .ok_or_else(|| bad("unterminated npy descr"))?;
    let dtype = match &descr[1..1 + end] {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        other => {
            return Err(bad(format!(
                "dtype {other} not supported; expected <f4 or <f8"
            )))
        }
    };

    let fortran = dict_value(header, "fortran_order")?;
    let fortran_order = if fortran.starts_with("False") {
        false
    } else if fortran.starts_with("True") {
        true
    } else {
        return Err(bad("malformed fortran_order"));
    };

    let shape_text = dict_value(header, "shape")?;
    let shape_text = shape_text
        .strip_prefix('(')
        .ok_or_else(|| bad("npy shape is not a tuple"))?;
    let close = shape_text
        .find(')')
        .ok_or_else(|| bad("unterminated npy shape"))?;
    let shape = shape_text[..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim_end_matches('L')
                .parse::<usize>()
                .map_err(|_| bad(format!("bad npy dimension '{s}'")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(HeaderDict {
        dtype,
        fortran_order,
        shape,
    })
}

/// Reads a complete `.npy` array from `reader`.
pub fn read_npy<R: Read>(reader: &mut R) -> Result<NpyArray> {
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| bad("file too short for an npy header"))?;
    if &magic[..6] != MAGIC {
        return Err(bad("missing npy magic string"));
    }
    let header_len = match magic[6] {
        1 => {
            let mut len = [0u8; 2];
            reader
                .read_exact(&mut len)
                .map_err(|_| bad("truncated npy header"))?;
            u16::from_le_bytes(len) as usize
        }
        2 | 3 => {
            let mut len = [0u8; 4];
            reader
                .read_exact(&mut len)
                .map_err(|_| bad("truncated npy header"))?;
            u32::from_le_bytes(len) as usize
        }
        v => return Err(bad(format!("npy version {v}.{} not supported", magic[7]))),
    };
    let mut header = vec![0u8; header_len];
    reader
        .read_exact(&mut header)
        .map_err(|_| bad("truncated npy header"))?;
    let header = String::from_utf8(header).map_err(|_| bad("npy header is not text"))?;
    let dict = parse_header(&header)?;
    if dict.fortran_order {
        return Err(bad("Fortran-ordered npy arrays are not supported"));
    }

    let count = dict
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad("npy shape overflows"))?;
    let mut raw = vec![0u8; count * dict.dtype.size()];
    reader
        .read_exact(&mut raw)
        .map_err(|_| bad(format!("npy payload truncated; expected {count} values")))?;
    let data = match dict.dtype {
        Dtype::F4 => raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        Dtype::F8 => raw
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
            .collect(),
    };
    Ok(NpyArray {
        shape: dict.shape,
        dtype: dict.dtype,
        data,
    })
}

/// Writes `data` with the given C-order `shape` as a version 1.0 `<f8` array.
pub fn write_npy_f64<W: Write>(writer: &mut W, shape: &[usize], data: &[f64]) -> Result<()> {
    let count: usize = shape.iter().product();
    if count != data.len() {
        return Err(UrqaError::LengthMismatch(count, data.len()));
    }
    write_header(writer, Dtype::F8, shape)?;
    let mut buf = Vec::with_capacity(data.len() * 8);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

/// Writes `data` as a version 1.0 `<f4` array.
pub fn write_npy_f32<W: Write>(writer: &mut W, shape: &[usize], data: &[f32]) -> Result<()> {
    let count: usize = shape.iter().product();
    if count != data.len() {
        return Err(UrqaError::LengthMismatch(count, data.len()));
    }
    write_header(writer, Dtype::F4, shape)?;
    let mut buf = Vec::with_capacity(data.len() * 4);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&buf)?;
    Ok(())
}

fn write_header<W: Write>(writer: &mut W, dtype: Dtype, shape: &[usize]) -> Result<()> {
    let shape_text = match shape {
        [single] => format!("({single},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_text
    );
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (HEADER_ALIGN - unpadded % HEADER_ALIGN) % HEADER_ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');
    let header_len = u16::try_from(dict.len()).map_err(|_| bad("npy header too long"))?;

    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&header_len.to_le_bytes())?;
    writer.write_all(dict.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(shape: &[usize], data: &[f64]) -> NpyArray {
        let mut buf = Vec::new();
        write_npy_f64(&mut buf, shape, data).unwrap();
        assert_eq!((buf.len() - data.len() * 8) % HEADER_ALIGN, 0);
        read_npy(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn f8_roundtrip() {
        let data: Vec<f64> = (0..24).map(|i| i as f64 * 0.1 - 1.0).collect();
        let arr = roundtrip(&[3, 4, 2], &data);
        assert_eq!(arr.shape, vec![3, 4, 2]);
        assert_eq!(arr.dtype, Dtype::F8);
        assert_eq!(arr.data, data);
    }

    #[test]
    fn f4_payload_widens() {
        let mut buf = Vec::new();
        write_npy_f32(&mut buf, &[2, 2], &[0.5, -1.25, 3.0, 1e-3]).unwrap();
        let arr = read_npy(&mut buf.as_slice()).unwrap();
        assert_eq!(arr.dtype, Dtype::F4);
        assert_eq!(arr.data, vec![0.5, -1.25, 3.0, 1e-3f32 as f64]);
    }

    #[test]
    fn parses_numpy_written_header() {
        // header exactly as numpy 1.x emits it for np.zeros((4,4,2))
        let dict = "{'descr': '<f8', 'fortran_order': False, 'shape': (4, 4, 2), }";
        let mut header = dict.to_string();
        while !(10 + header.len() + 1).is_multiple_of(64) {
            header.push(' ');
        }
        header.push('\n');
        let mut buf = MAGIC.to_vec();
        buf.extend_from_slice(&[1, 0]);
        buf.extend_from_slice(&(header.len() as u16).to_le_bytes());
        buf.extend_from_slice(header.as_bytes());
        buf.extend(std::iter::repeat_n(0u8, 32 * 8));
        let arr = read_npy(&mut buf.as_slice()).unwrap();
        assert_eq!(arr.shape, vec![4, 4, 2]);
        assert!(arr.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_unsupported_dtypes_and_order() {
        for (descr, order) in [("<i4", "False"), (">f8", "False"), ("<f8", "True")] {
            let header =
                format!("{{'descr': '{descr}', 'fortran_order': {order}, 'shape': (1,), }}\n");
            let mut buf = MAGIC.to_vec();
            buf.extend_from_slice(&[1, 0]);
            buf.extend_from_slice(&(header.len() as u16).to_le_bytes());
            buf.extend_from_slice(header.as_bytes());
            buf.extend_from_slice(&[0u8; 8]);
            assert!(
                matches!(
                    read_npy(&mut buf.as_slice()),
                    Err(UrqaError::UnsupportedFormat { .. })
                ),
                "{descr} {order}"
            );
        }
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut buf = Vec::new();
        write_npy_f64(&mut buf, &[4, 4, 2], &[0.0; 32]).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(
            read_npy(&mut buf.as_slice()),
            Err(UrqaError::UnsupportedFormat { .. })
        ));
        assert!(read_npy(&mut &b"\x93NUM"[..]).is_err());
        assert!(read_npy(&mut &b"not an npy file at all"[..]).is_err());
    }

    #[test]
    fn one_dimensional_shape_text() {
        let arr = roundtrip(&[3], &[1.0, 2.0, 3.0]);
        assert_eq!(arr.shape, vec![3]);
    }
}
