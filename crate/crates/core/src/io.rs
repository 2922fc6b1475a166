//! Binary formats for spectra and field samples, plus CSV export.
//!
//! Spectrum file:
//!
//! ```text
//! "BSRMSPEC" | version u32 | header_len u32 | header (UTF-8) | f64 payload
//! header = "d=2;n=64,64;dkappa=0.0628,0.0628;signed=0"
//! ```
//!
//! Bispectrum file: same layout with magic `"BSRMBISP"`, header without
//! `signed`, payload of `(re, im)` pairs ordered `flat(i) * len + flat(j)`.
//!
//! Field file:
//!
//! ```text
//! "BSRMFLD0" | version u32 | d u32 | M_k u32 x d | dx_k f64 x d
//!            | seed u64 | sample_index u64 | method u8 | order u8 | f64 payload
//! ```
//!
//! All integers and floats are little-endian; payloads are row-major.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::simulator::{FieldSample, Method, Order, Provenance};
use crate::spectral_model::{BispectrumTable, SpectrumTable};

pub const SPECTRUM_MAGIC: &[u8; 8] = b"BSRMSPEC";
pub const BISPECTRUM_MAGIC: &[u8; 8] = b"BSRMBISP";
pub const FIELD_MAGIC: &[u8; 8] = b"BSRMFLD0";
pub const VERSION: u32 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let rest = self.buf.len() - self.pos;
        if rest != n * 8 {
            return Err(Error::Format(format!(
                "payload has {rest} bytes, expected {}",
                n * 8
            )));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn magic(&mut self, want: &[u8; 8]) -> Result<()> {
        let got = self.take(8)?;
        if got != want {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(want)
            )));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
}

fn join<T: std::fmt::Debug>(v: &[T]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

struct Header {
    d: usize,
    n: Vec<usize>,
    dkappa: Vec<f64>,
    signed: bool,
}

fn parse_header(text: &str) -> Result<Header> {
    let mut d = None;
    let mut n = None;
    let mut dkappa = None;
    let mut signed = false;
    let bad = |m: String| Error::Format(m);
    for field in text.split(';').filter(|f| !f.is_empty()) {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("header field `{field}`")))?;
        match k {
            "d" => d = Some(v.parse::<usize>().map_err(|e| bad(format!("d: {e}")))?),
            "n" => {
                n = Some(
                    v.split(',')
                        .map(|x| x.parse::<usize>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(format!("n: {e}")))?,
                )
            }
            "dkappa" => {
                dkappa = Some(
                    v.split(',')
                        .map(|x| x.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(format!("dkappa: {e}")))?,
                )
            }
            "signed" => signed = v == "1",
            _ => return Err(bad(format!("unknown header key `{k}`"))),
        }
    }
    let d = d.ok_or_else(|| bad("missing d".into()))?;
    let n = n.ok_or_else(|| bad("missing n".into()))?;
    let dkappa = dkappa.ok_or_else(|| bad("missing dkappa".into()))?;
    if n.len() != d || dkappa.len() != d {
        return Err(bad("header lengths disagree with d".into()));
    }
    Ok(Header {
        d,
        n,
        dkappa,
        signed,
    })
}

fn write_header(out: &mut Vec<u8>, magic: &[u8; 8], text: &str) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
}

fn read_header(r: &mut Reader<'_>, magic: &[u8; 8]) -> Result<Header> {
    r.magic(magic)?;
    let len = r.u32()? as usize;
    let text =
        std::str::from_utf8(r.take(len)?).map_err(|e| Error::Format(format!("header: {e}")))?;
    parse_header(text)
}

pub fn encode_spectrum(t: &SpectrumTable) -> Vec<u8> {
    let text = format!(
        "d={};n={};dkappa={};signed={}",
        t.n.len(),
        join(&t.n),
        join(&t.dkappa),
        t.signed as u8
    );
    let mut out = Vec::new();
    write_header(&mut out, SPECTRUM_MAGIC, &text);
    for v in &t.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_spectrum(buf: &[u8]) -> Result<SpectrumTable> {
    let mut r = Reader { buf, pos: 0 };
    let h = read_header(&mut r, SPECTRUM_MAGIC)?;
    let mut t = SpectrumTable {
        n: h.n,
        dkappa: h.dkappa,
        signed: h.signed,
        values: Vec::new(),
    };
    let _ = h.d;
    t.values = r.f64s(t.shape().len())?;
    Ok(t)
}

pub fn write_spectrum(path: &Path, t: &SpectrumTable) -> Result<()> {
    Ok(fs::write(path, encode_spectrum(t))?)
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumTable> {
    decode_spectrum(&fs::read(path)?)
}

pub fn encode_bispectrum(t: &BispectrumTable) -> Vec<u8> {
    let text = format!(
        "d={};n={};dkappa={}",
        t.n.len(),
        join(&t.n),
        join(&t.dkappa)
    );
    let mut out = Vec::new();
    write_header(&mut out, BISPECTRUM_MAGIC, &text);
    for v in &t.values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_bispectrum(buf: &[u8]) -> Result<BispectrumTable> {
    let mut r = Reader { buf, pos: 0 };
    let h = read_header(&mut r, BISPECTRUM_MAGIC)?;
    let len: usize = h.n.iter().map(|v| v + 1).product();
    let flat = r.f64s(2 * len * len)?;
    Ok(BispectrumTable {
        n: h.n,
        dkappa: h.dkappa,
        values: flat
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect(),
    })
}

pub fn write_bispectrum(path: &Path, t: &BispectrumTable) -> Result<()> {
    Ok(fs::write(path, encode_bispectrum(t))?)
}

pub fn read_bispectrum(path: &Path) -> Result<BispectrumTable> {
    decode_bispectrum(&fs::read(path)?)
}

pub fn encode_field(f: &FieldSample) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * f.values.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(f.m.len() as u32).to_le_bytes());
    for &m in &f.m {
        out.extend_from_slice(&(m as u32).to_le_bytes());
    }
    for &dx in &f.dx {
        out.extend_from_slice(&dx.to_le_bytes());
    }
    let p = &f.provenance;
    out.extend_from_slice(&p.seed.to_le_bytes());
    out.extend_from_slice(&p.sample_index.to_le_bytes());
    out.push(p.method.tag());
    out.push(p.order.as_int());
    for v in &f.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(buf: &[u8]) -> Result<FieldSample> {
    let mut r = Reader { buf, pos: 0 };
    r.magic(FIELD_MAGIC)?;
    let d = r.u32()? as usize;
    if d == 0 || d > crate::grid::MAX_DIM {
        return Err(Error::Format(format!("dimension {d}")));
    }
    let m = (0..d)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let dx = (0..d).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let seed = r.u64()?;
    let sample_index = r.u64()?;
    let method = Method::from_tag(r.u8()?)?;
    let order = Order::from_int(r.u8()?).map_err(|e| Error::Format(e.to_string()))?;
    let values = r.f64s(m.iter().product())?;
    Ok(FieldSample {
        values,
        m,
        dx,
        provenance: Provenance {
            seed,
            sample_index,
            method,
            order,
        },
    })
}

pub fn write_field(path: &Path, f: &FieldSample) -> Result<()> {
    Ok(fs::write(path, encode_field(f))?)
}

pub fn read_field(path: &Path) -> Result<FieldSample> {
    decode_field(&fs::read(path)?)
}

/// CSV export. 1D: header `x,value` and one row per point. 2D: an
/// `M_1 x M_2` matrix without header, rows along the first axis.
pub fn write_csv(path: &Path, f: &FieldSample) -> Result<()> {
    let mut out = Vec::new();
    match f.m.len() {
        1 => {
            writeln!(out, "x,value")?;
            for (i, v) in f.values.iter().enumerate() {
                writeln!(out, "{:?},{:?}", i as f64 * f.dx[0], v)?;
            }
        }
        2 => {
            for row in f.values.chunks_exact(f.m[1]) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        d => return Err(Error::Unsupported(format!("CSV export for d={d}"))),
    }
    Ok(fs::write(path, out)?)
}

/// Values from a file written by [`write_csv`], row-major.
pub fn read_csv_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().peekable();
    let one_d = lines.peek() == Some(&"x,value");
    if one_d {
        lines.next();
    }
    let mut out = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let cells = line.split(',');
        let cells: Vec<&str> = if one_d {
            cells.skip(1).collect()
        } else {
            cells.collect()
        };
        for c in cells {
            out.push(
                c.parse::<f64>()
                    .map_err(|e| Error::Format(format!("csv `{c}`: {e}")))?,
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_roundtrip() {
        let t = SpectrumTable {
            n: vec![2, 1],
            dkappa: vec![0.0628, 0.1],
            signed: true,
            values: (0..9).map(|v| v as f64 * 0.5).collect(),
        };
        assert_eq!(decode_spectrum(&encode_spectrum(&t)).unwrap(), t);
    }

    #[test]
    fn bispectrum_roundtrip() {
        let t = BispectrumTable {
            n: vec![2],
            dkappa: vec![0.25],
            values: (0..9)
                .map(|v| Complex64::new(v as f64, -(v as f64)))
                .collect(),
        };
        assert_eq!(decode_bispectrum(&encode_bispectrum(&t)).unwrap(), t);
    }

    #[test]
    fn field_roundtrip() {
        let f = FieldSample {
            values: vec![1.0, -2.5, 3.25, 0.0, 7.0, 8.0],
            m: vec![2, 3],
            dx: vec![0.5, 0.25],
            provenance: Provenance {
                seed: 42,
                sample_index: 7,
                method: Method::Fft,
                order: Order::Third,
            },
        };
        let bytes = encode_field(&f);
        assert_eq!(&bytes[..8], FIELD_MAGIC);
        assert_eq!(decode_field(&bytes).unwrap(), f);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_field(&bad).is_err());
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
    }
}
