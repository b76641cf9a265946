//! One-level slice-axis decomposition and its container format (`MCWD`).
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MCWD" | version u8 = 1 | method u8 | bit_depth u8 | rounding u8 | K u32 | M u32 | N u32
//! lowpass slices  (ceil(K/2) * M * N) i32
//! highpass slices (floor(K/2) * M * N) i32
//! per highpass slice i: u32 length + forward record (2i -> 2i+1),
//!                       u32 length + backward record (2i+2 -> 2i+1)
//! ```
//!
//! Method codes: 0 zero, 1 block, 2 block+fill, 3 mesh. The rounding byte is 0
//! for the plain floor update and 1 for the JPEG2000 `+2` offset. Motion records
//! are absent for the zero method.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::compensate::{Method, MotionRecord};
use crate::error::{Error, Result};
use crate::io::ByteReader;
use crate::volume::{check_shape, Slice};

pub const DECOMPOSITION_MAGIC: &[u8; 4] = b"MCWD";
pub const DECOMPOSITION_VERSION: u8 = 1;

/// Rounding of the lifting update step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rounding {
    /// `floor(sum / 4)`.
    #[default]
    Paper,
    /// `floor((sum + 2) / 4)`, the JPEG2000 reversible 5/3 convention.
    Jpeg2000,
}

impl Rounding {
    pub fn code(self) -> u8 {
        match self {
            Rounding::Paper => 0,
            Rounding::Jpeg2000 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Rounding::Paper),
            1 => Some(Rounding::Jpeg2000),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rounding::Paper => "paper",
            Rounding::Jpeg2000 => "jpeg2000",
        }
    }

    #[inline]
    pub(crate) fn update(self, sum: i32) -> i32 {
        match self {
            Rounding::Paper => sum >> 2,
            Rounding::Jpeg2000 => (sum + 2) >> 2,
        }
    }
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Rounding::Paper),
            "jpeg2000" => Ok(Rounding::Jpeg2000),
            other => Err(Error::Parameter(format!("unknown rounding mode {other:?}"))),
        }
    }
}

/// Motion records estimated for highpass slice `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionPair {
    /// Predicts slice `2i + 1` from slice `2i`.
    pub forward: MotionRecord,
    /// Predicts slice `2i + 1` from slice `2i + 2` (mirrored at the volume end).
    pub backward: MotionRecord,
}

static IDENTITY_PAIR: MotionPair = MotionPair {
    forward: MotionRecord::Identity,
    backward: MotionRecord::Identity,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub(crate) method: Method,
    pub(crate) rounding: Rounding,
    pub(crate) slices: usize,
    pub(crate) rows: usize,
    pub(crate) cols: usize,
    pub(crate) bit_depth: u8,
    pub(crate) lowpass: Vec<Slice>,
    pub(crate) highpass: Vec<Slice>,
    pub(crate) motion: Vec<MotionPair>,
}

impl Decomposition {
    pub fn method(&self) -> Method {
        self.method
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    /// Original `(K, M, N)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.slices, self.rows, self.cols)
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn lowpass(&self) -> &[Slice] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[Slice] {
        &self.highpass
    }

    /// Stored motion records; empty for the zero method.
    pub fn motion(&self) -> &[MotionPair] {
        &self.motion
    }

    pub(crate) fn motion_for(&self, i: usize) -> &MotionPair {
        if self.method == Method::Zero {
            &IDENTITY_PAIR
        } else {
            &self.motion[i]
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        check_shape(self.slices, self.rows, self.cols, self.bit_depth)?;
        let (nl, nh) = (self.slices.div_ceil(2), self.slices / 2);
        if self.lowpass.len() != nl || self.highpass.len() != nh {
            return Err(Error::Dimension(format!(
                "K = {} needs {nl} lowpass and {nh} highpass slices, have {} and {}",
                self.slices,
                self.lowpass.len(),
                self.highpass.len()
            )));
        }
        let expected_motion = if self.method == Method::Zero { 0 } else { nh };
        if self.motion.len() != expected_motion {
            return Err(Error::Dimension(format!(
                "{} method needs {expected_motion} motion pairs, have {}",
                self.method,
                self.motion.len()
            )));
        }
        for s in self.lowpass.iter().chain(&self.highpass) {
            if s.dims() != (self.rows, self.cols) {
                return Err(Error::Dimension(format!(
                    "coefficient slice {}x{} in a {}x{} decomposition",
                    s.rows(),
                    s.cols(),
                    self.rows,
                    self.cols
                )));
            }
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let plane = self.rows * self.cols;
        let mut out = Vec::with_capacity(24 + 4 * plane * self.slices);
        out.extend_from_slice(DECOMPOSITION_MAGIC);
        out.extend_from_slice(&[DECOMPOSITION_VERSION, self.method.code(), self.bit_depth, self.rounding.code()]);
        for d in [self.slices, self.rows, self.cols] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for s in self.lowpass.iter().chain(&self.highpass) {
            for &v in s.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut record = Vec::new();
        for pair in &self.motion {
            for rec in [&pair.forward, &pair.backward] {
                record.clear();
                rec.encode(&mut record);
                out.extend_from_slice(&(record.len() as u32).to_le_bytes());
                out.extend_from_slice(&record);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(DECOMPOSITION_MAGIC)?;
        let at = r.offset();
        let version = r.u8()?;
        if version != DECOMPOSITION_VERSION {
            return Err(Error::format(at, format!("unsupported version {version}")));
        }
        let at = r.offset();
        let method = Method::from_code(r.u8()?).ok_or_else(|| Error::format(at, "unknown method code"))?;
        let bit_depth = r.u8()?;
        let at = r.offset();
        let rounding = Rounding::from_code(r.u8()?).ok_or_else(|| Error::format(at, "unknown rounding code"))?;
        let dims_at = r.offset();
        let k = r.u32()? as usize;
        let m = r.u32()? as usize;
        let n = r.u32()? as usize;
        check_shape(k, m, n, bit_depth).map_err(|e| Error::format(dims_at, e.to_string()))?;
        let plane = m
            .checked_mul(n)
            .filter(|p| p.checked_mul(k).and_then(|v| v.checked_mul(4)).is_some())
            .ok_or_else(|| Error::format(dims_at, "dimensions overflow"))?;
        if r.remaining() < plane * k * 4 {
            return Err(Error::format(
                bytes.len(),
                format!("truncated coefficients: need {} bytes, have {}", plane * k * 4, r.remaining()),
            ));
        }
        let read_slices = |count: usize, r: &mut ByteReader<'_>| -> Result<Vec<Slice>> {
            (0..count)
                .map(|_| {
                    let data = (0..plane).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
                    Slice::from_vec(m, n, data)
                })
                .collect()
        };
        let lowpass = read_slices(k.div_ceil(2), &mut r)?;
        let highpass = read_slices(k / 2, &mut r)?;
        let mut motion = Vec::new();
        if method != Method::Zero {
            for _ in 0..k / 2 {
                let forward = read_record(&mut r, method, m, n)?;
                let backward = read_record(&mut r, method, m, n)?;
                motion.push(MotionPair { forward, backward });
            }
        }
        r.expect_end()?;
        let dec = Decomposition {
            method,
            rounding,
            slices: k,
            rows: m,
            cols: n,
            bit_depth,
            lowpass,
            highpass,
            motion,
        };
        dec.validate().map_err(|e| Error::format(0, e.to_string()))?;
        Ok(dec)
    }
}

fn read_record(r: &mut ByteReader<'_>, method: Method, rows: usize, cols: usize) -> Result<MotionRecord> {
    let len = r.u32()? as usize;
    let at = r.offset();
    let body = r.take(len)?;
    let mut inner = ByteReader::new(body);
    let rec = MotionRecord::decode(method, &mut inner, rows, cols).map_err(|e| shift_offset(e, at))?;
    inner.expect_end().map_err(|e| shift_offset(e, at))?;
    Ok(rec)
}

fn shift_offset(e: Error, base: usize) -> Error {
    match e {
        Error::Format { offset, reason } => Error::Format {
            offset: offset + base as u64,
            reason,
        },
        other => other,
    }
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<Decomposition> {
    Decomposition::decode(&fs::read(path)?)
}

pub fn save_decomposition(dec: &Decomposition, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, dec.encode())?;
    Ok(())
}
