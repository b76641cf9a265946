//! Binary volume container (`MCWV`).
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 4    | magic `"MCWV"`              |
//! | 4      | 1    | version, `1`                |
//! | 5      | 1    | bit depth `B` (8..=16)      |
//! | 6      | 2    | reserved, `0`               |
//! | 8      | 4    | `K` slices                  |
//! | 12     | 4    | `M` rows                    |
//! | 16     | 4    | `N` cols                    |
//! | 20     | 2·KMN| voxels as `u16`, slice-major, row-major |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{check_shape, max_intensity, Volume};

pub const VOLUME_MAGIC: &[u8; 4] = b"MCWV";
pub const VOLUME_VERSION: u8 = 1;
const VOLUME_HEADER_LEN: usize = 20;

pub fn load_volume(path: impl AsRef<Path>) -> Result<Volume> {
    decode_volume(&fs::read(path)?)
}

pub fn save_volume(volume: &Volume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_volume(volume))?;
    Ok(())
}

pub fn encode_volume(volume: &Volume) -> Vec<u8> {
    let mut out = Vec::with_capacity(VOLUME_HEADER_LEN + 2 * volume.voxels().len());
    out.extend_from_slice(VOLUME_MAGIC);
    out.push(VOLUME_VERSION);
    out.push(volume.bit_depth());
    out.extend_from_slice(&0u16.to_le_bytes());
    for dim in [volume.num_slices(), volume.rows(), volume.cols()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &v in volume.voxels() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_volume(bytes: &[u8]) -> Result<Volume> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(VOLUME_MAGIC)?;
    let version_at = r.offset();
    let version = r.u8()?;
    if version != VOLUME_VERSION {
        return Err(Error::format(version_at, format!("unsupported version {version}")));
    }
    let depth_at = r.offset();
    let bit_depth = r.u8()?;
    let reserved_at = r.offset();
    if r.u16()? != 0 {
        return Err(Error::format(reserved_at, "reserved field must be zero"));
    }
    let dims_at = r.offset();
    let k = r.u32()? as usize;
    let m = r.u32()? as usize;
    let n = r.u32()? as usize;
    check_shape(k, m, n, bit_depth).map_err(|e| {
        let at = if matches!(bit_depth, 8..=16) { dims_at } else { depth_at };
        Error::format(at, e.to_string())
    })?;
    let count = k
        .checked_mul(m)
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| Error::format(dims_at, "dimensions overflow"))?;
    let needed = count
        .checked_mul(2)
        .ok_or_else(|| Error::format(dims_at, "dimensions overflow"))?;
    if r.remaining() < needed {
        return Err(Error::format(
            r.offset() + r.remaining(),
            format!("truncated payload: need {needed} voxel bytes, have {}", r.remaining()),
        ));
    }
    let max = max_intensity(bit_depth);
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.offset();
        let v = r.u16()?;
        if u32::from(v) > max {
            return Err(Error::format(
                at,
                format!("voxel value {v} exceeds {max} for {bit_depth}-bit data"),
            ));
        }
        data.push(v);
    }
    r.expect_end()?;
    Volume::new(k, m, n, bit_depth, data)
}

/// Little-endian cursor that reports byte offsets in its errors.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn offset(&self) -> usize {
        self.pos
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.remaining() < len {
            return Err(Error::format(
                self.bytes.len(),
                format!("truncated: need {len} bytes at offset {}", self.pos),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn i8(&mut self) -> Result<i8> {
        Ok(self.take(1)?[0] as i8)
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn i32(&mut self) -> Result<i32> {
        let b = self.take(4)?;
        Ok(i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub(crate) fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let at = self.offset();
        let got = self.take(4).map_err(|_| Error::format(at, "file too short for magic"))?;
        if got != magic {
            return Err(Error::format(
                at,
                format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(got), String::from_utf8_lossy(magic)),
            ));
        }
        Ok(())
    }

    pub(crate) fn expect_end(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::format(
                self.pos,
                format!("{} trailing bytes", self.remaining()),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(k: u32, m: u32, n: u32, b: u8) -> Vec<u8> {
        let mut out = b"MCWV".to_vec();
        out.extend_from_slice(&[1, b, 0, 0]);
        for d in [k, m, n] {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out
    }

    #[test]
    fn smallest_well_formed_file() {
        let mut bytes = header(2, 1, 1, 8);
        bytes.extend_from_slice(&[3, 0, 7, 0]);
        let v = decode_volume(&bytes).unwrap();
        assert_eq!(v.voxels(), &[3, 7]);
        assert_eq!((v.num_slices(), v.rows(), v.cols(), v.bit_depth()), (2, 1, 1, 8));
        assert_eq!(encode_volume(&v), bytes);
    }

    #[test]
    fn voxel_above_bit_depth_names_offset() {
        let mut bytes = header(2, 1, 1, 12);
        bytes.extend_from_slice(&0u16.to_le_bytes());
        bytes.extend_from_slice(&4096u16.to_le_bytes());
        match decode_volume(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 22),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = header(2, 1, 1, 8);
        bytes[0] = b'X';
        bytes.extend_from_slice(&[0; 4]);
        assert!(matches!(decode_volume(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = header(2, 2, 2, 8);
        bytes.extend_from_slice(&[0; 15]);
        assert!(matches!(decode_volume(&bytes), Err(Error::Format { .. })));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = header(2, 1, 1, 8);
        bytes.extend_from_slice(&[0; 5]);
        assert!(matches!(decode_volume(&bytes), Err(Error::Format { offset: 24, .. })));
    }

    #[test]
    fn single_slice_rejected() {
        let mut bytes = header(1, 1, 1, 8);
        bytes.extend_from_slice(&[0; 2]);
        assert!(decode_volume(&bytes).is_err());
    }

    #[test]
    fn save_is_deterministic_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let v = Volume::new(3, 2, 2, 12, (0..12).map(|x| x * 300).collect()).unwrap();
        let a = dir.path().join("a.mcwv");
        let b = dir.path().join("b.mcwv");
        save_volume(&v, &a).unwrap();
        save_volume(&v, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(load_volume(&a).unwrap(), v);
    }
}
