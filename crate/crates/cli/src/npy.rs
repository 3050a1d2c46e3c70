//! NPY (format version 1.0) reading and writing for dense float matrices.
//!
//! Layout written: the magic `\x93NUMPY`, version bytes `01 00`, a
//! little-endian `u16` header length, then an ASCII dict such as
//! `{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }` padded with
//! spaces and a final newline so the whole preamble is a multiple of 64
//! bytes, followed by the row-major little-endian payload. Readers accept
//! `<f4` and `<f8` payloads with 1-D (loaded as N×1) or 2-D shapes.

use std::fs;
use std::path::Path;

use emms_core::Matrix;

use crate::error::IoError;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const PREAMBLE_ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
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
}

#[derive(Debug, PartialEq)]
struct Header {
    dtype: Dtype,
    rows: usize,
    cols: usize,
    data_offset: usize,
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<Matrix, IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_npy(&bytes, &path.display().to_string())
}

/// Decodes an in-memory NPY file; `name` labels errors.
pub fn decode_npy(bytes: &[u8], name: &str) -> Result<Matrix, IoError> {
    let header = parse_header(bytes, name)?;
    let count = header.rows * header.cols;
    let needed = count * header.dtype.size();
    let payload = &bytes[header.data_offset..];
    if payload.len() < needed {
        return Err(IoError::TruncatedPayload {
            file: name.to_string(),
            offset: bytes.len(),
            expected: header.data_offset + needed,
        });
    }
    let values: Vec<f64> = match header.dtype {
        Dtype::F8 => payload[..needed]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
        Dtype::F4 => payload[..needed]
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("chunk of 4"))))
            .collect(),
    };
    Matrix::new(header.rows, header.cols, values).map_err(|e| IoError::Matrix {
        file: name.to_string(),
        source: e,
    })
}

fn parse_header(bytes: &[u8], name: &str) -> Result<Header, IoError> {
    let bad = |offset: usize, reason: String| IoError::BadHeader {
        file: name.to_string(),
        offset,
        reason,
    };
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(IoError::BadMagic {
            file: name.to_string(),
            offset: 0,
        });
    }
    if bytes.len() < 10 {
        return Err(IoError::TruncatedPayload {
            file: name.to_string(),
            offset: bytes.len(),
            expected: 10,
        });
    }
    let (major, minor) = (bytes[6], bytes[7]);
    let (header_len, dict_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (
            u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
            12,
        ),
        _ => {
            return Err(bad(
                6,
                format!("unsupported format version {major}.{minor}"),
            ))
        }
    };
    let data_offset = dict_start + header_len;
    if bytes.len() < data_offset {
        return Err(IoError::TruncatedPayload {
            file: name.to_string(),
            offset: bytes.len(),
            expected: data_offset,
        });
    }
    let text = std::str::from_utf8(&bytes[dict_start..data_offset])
        .map_err(|_| bad(dict_start, "header is not valid text".into()))?;
    let dict = parse_dict(text).map_err(|(pos, reason)| bad(dict_start + pos, reason))?;

    let descr_offset = dict_start + text.find("descr").unwrap_or(0);
    let dtype = match dict.descr.as_str() {
        "<f8" => Dtype::F8,
        "<f4" => Dtype::F4,
        other => {
            return Err(IoError::UnsupportedDtype {
                file: name.to_string(),
                offset: descr_offset,
                descr: other.to_string(),
            })
        }
    };
    if dict.fortran_order {
        return Err(IoError::FortranOrderUnsupported {
            file: name.to_string(),
            offset: dict_start + text.find("fortran_order").unwrap_or(0),
        });
    }
    let (rows, cols) = match dict.shape.as_slice() {
        [n] => (*n, 1),
        [r, c] => (*r, *c),
        other => {
            return Err(bad(
                dict_start + text.find("shape").unwrap_or(0),
                format!("expected a 1-D or 2-D array, got {}-D", other.len()),
            ))
        }
    };
    Ok(Header {
        dtype,
        rows,
        cols,
        data_offset,
    })
}

#[derive(Debug, Default)]
struct Dict {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

/// Parses the Python-literal header dict. Errors carry a byte position
/// within `text`.
fn parse_dict(text: &str) -> Result<Dict, (usize, String)> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
    };
    let mut dict = Dict::default();
    let (mut has_descr, mut has_order, mut has_shape) = (false, false, false);
    p.expect(b'{')?;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string()?;
        p.skip_ws();
        p.expect(b':')?;
        p.skip_ws();
        match key.as_str() {
            "descr" => {
                dict.descr = p.string()?;
                has_descr = true;
            }
            "fortran_order" => {
                dict.fortran_order = p.boolean()?;
                has_order = true;
            }
            "shape" => {
                dict.shape = p.tuple()?;
                has_shape = true;
            }
            other => return Err((p.pos, format!("unexpected key '{other}'"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}')?;
            break;
        }
    }
    if !(has_descr && has_order && has_shape) {
        return Err((
            0,
            "header must define descr, fortran_order and shape".into(),
        ));
    }
    Ok(dict)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), (usize, String)> {
        if self.eat(c) {
            Ok(())
        } else {
            Err((self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn string(&mut self) -> Result<String, (usize, String)> {
        let quote = match self.s.get(self.pos) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err((self.pos, "expected a quoted string".into())),
        };
        let start = self.pos + 1;
        let end = self.s[start..]
            .iter()
            .position(|&c| c == quote)
            .map(|i| start + i)
            .ok_or((start, "unterminated string".to_string()))?;
        self.pos = end + 1;
        Ok(String::from_utf8_lossy(&self.s[start..end]).into_owned())
    }

    fn boolean(&mut self) -> Result<bool, (usize, String)> {
        if self.s[self.pos..].starts_with(b"True") {
            self.pos += 4;
            Ok(true)
        } else if self.s[self.pos..].starts_with(b"False") {
            self.pos += 5;
            Ok(false)
        } else {
            Err((self.pos, "expected True or False".into()))
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>, (usize, String)> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or_default();
            let dim = digits
                .parse::<usize>()
                .map_err(|_| (start, "expected a dimension".to_string()))?;
            dims.push(dim);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}

/// Encodes `m` as a version 1.0 `<f8` NPY file.
pub fn encode_npy(m: &Matrix) -> Vec<u8> {
    let dict = format!(
        "{{'descr': '<f8', 'fortran_order': False, 'shape': ({}, {}), }}",
        m.rows(),
        m.cols()
    );
    // magic + version + u16 length + dict + padding + '\n'
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let total = unpadded.div_ceil(PREAMBLE_ALIGN) * PREAMBLE_ALIGN;
    let header_len = total - (MAGIC.len() + 4);

    let mut out = Vec::with_capacity(total + m.as_slice().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.resize(total - 1, b' ');
    out.push(b'\n');
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_npy(path: impl AsRef<Path>, m: &Matrix) -> Result<(), IoError> {
    let path = path.as_ref();
    if m.rows() == 0 || m.cols() == 0 {
        return Err(IoError::EmptyMatrix {
            file: path.display().to_string(),
        });
    }
    fs::write(path, encode_npy(m)).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_header(dict: &str, payload: &[u8]) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        let mut d = dict.to_string();
        while !(10 + d.len() + 1).is_multiple_of(64) {
            d.push(' ');
        }
        d.push('\n');
        out.extend_from_slice(&(d.len() as u16).to_le_bytes());
        out.extend_from_slice(d.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    #[test]
    fn preamble_is_aligned() {
        for (r, c) in [(1, 1), (3, 5), (12345, 678)] {
            let bytes = encode_npy(&Matrix::zeros(r, c));
            let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
            assert_eq!((10 + header_len) % 64, 0);
            assert_eq!(bytes[10 + header_len - 1], b'\n');
            assert_eq!(bytes.len(), 10 + header_len + r * c * 8);
        }
    }

    #[test]
    fn one_dimensional_loads_as_column() {
        let payload: Vec<u8> = [1.5f64, -2.0, 3.25]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let bytes = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }",
            &payload,
        );
        let m = decode_npy(&bytes, "col").unwrap();
        assert_eq!(m.shape(), (3, 1));
        assert_eq!(m.as_slice(), &[1.5, -2.0, 3.25]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            decode_npy(b"\x93NUMPZ\x01\x00", "x"),
            Err(IoError::BadMagic { offset: 0, .. })
        ));
        let big = with_header(
            "{'descr': '>f8', 'fortran_order': False, 'shape': (1, 1), }",
            &[0; 8],
        );
        assert!(matches!(
            decode_npy(&big, "x"),
            Err(IoError::UnsupportedDtype { ref descr, .. }) if descr == ">f8"
        ));
        let ints = with_header(
            "{'descr': '<i8', 'fortran_order': False, 'shape': (1, 1), }",
            &[0; 8],
        );
        assert!(matches!(
            decode_npy(&ints, "x"),
            Err(IoError::UnsupportedDtype { .. })
        ));
        let short = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 2), }",
            &[0; 20],
        );
        assert!(matches!(
            decode_npy(&short, "x"),
            Err(IoError::TruncatedPayload { expected, .. }) if expected == short.len() - 20 + 32
        ));
        let cube = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1, 1), }",
            &[0; 8],
        );
        assert!(matches!(
            decode_npy(&cube, "x"),
            Err(IoError::BadHeader { .. })
        ));
        let garbled = with_header(
            "{'descr': '<f8', 'fortran_order': Maybe, 'shape': (1, 1), }",
            &[0; 8],
        );
        assert!(matches!(
            decode_npy(&garbled, "x"),
            Err(IoError::BadHeader { .. })
        ));
        let nan = with_header(
            "{'descr': '<f8', 'fortran_order': False, 'shape': (1, 1), }",
            &f64::NAN.to_le_bytes(),
        );
        assert!(matches!(decode_npy(&nan, "x"), Err(IoError::Matrix { .. })));
    }

    #[test]
    fn header_key_order_and_quotes_are_free() {
        let payload: Vec<u8> = [7.0f64, 8.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let bytes = with_header(
            "{\"shape\": (1, 2), \"fortran_order\": False, \"descr\": \"<f8\"}",
            &payload,
        );
        assert_eq!(decode_npy(&bytes, "x").unwrap().as_slice(), &[7.0, 8.0]);
    }
}
