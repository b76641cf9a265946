//! Volume and slice containers.
//!
//! A [`Volume`] holds `K` slices of `M x N` unsigned voxels, slice-major then
//! row-major. A [`Slice`] is the signed working representation used for
//! original slices as well as highpass and lowpass coefficients.

use crate::error::{Error, Result};

pub const MIN_BIT_DEPTH: u8 = 8;
pub const MAX_BIT_DEPTH: u8 = 16;

/// One 2-D plane of signed coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    rows: usize,
    cols: usize,
    data: Vec<i32>,
}

impl Slice {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "slice {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for m in 0..rows {
            for n in 0..cols {
                data.push(f(m, n));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i32 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: i32) {
        self.data[row * self.cols + col] = value;
    }

    /// Sample with coordinates clamped to the slice bounds.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> i32 {
        let r = row.clamp(0, self.rows as isize - 1) as usize;
        let c = col.clamp(0, self.cols as isize - 1) as usize;
        self.get(r, c)
    }

    pub fn data(&self) -> &[i32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [i32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<i32> {
        self.data
    }

    pub(crate) fn check_same_dims(&self, other: &Slice) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::Dimension(format!(
                "slice {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }
}

/// A stack of `K >= 2` slices of unsigned voxels with a declared bit depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Volume {
    slices: usize,
    rows: usize,
    cols: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

impl Volume {
    /// Builds a volume, checking the shape and that every voxel fits in `bit_depth` bits.
    pub fn new(slices: usize, rows: usize, cols: usize, bit_depth: u8, data: Vec<u16>) -> Result<Self> {
        check_shape(slices, rows, cols, bit_depth)?;
        if data.len() != slices * rows * cols {
            return Err(Error::Dimension(format!(
                "volume {slices}x{rows}x{cols} needs {} voxels, got {}",
                slices * rows * cols,
                data.len()
            )));
        }
        let max = max_intensity(bit_depth);
        if let Some(pos) = data.iter().position(|&v| u32::from(v) > max) {
            return Err(Error::Parameter(format!(
                "voxel {pos} has value {} above {max} for {bit_depth}-bit data",
                data[pos]
            )));
        }
        Ok(Self {
            slices,
            rows,
            cols,
            bit_depth,
            data,
        })
    }

    /// Builds a volume from signed slices; fails if any value is outside `[0, 2^B - 1]`.
    pub fn from_slices(bit_depth: u8, slices: &[Slice]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Parameter("volume needs at least two slices".into()))?;
        let (rows, cols) = first.dims();
        let max = max_intensity(bit_depth) as i32;
        let mut data = Vec::with_capacity(slices.len() * rows * cols);
        for (k, s) in slices.iter().enumerate() {
            first.check_same_dims(s).map_err(|e| e.at_slice(k))?;
            for &v in s.data() {
                if !(0..=max).contains(&v) {
                    return Err(Error::Parameter(format!(
                        "slice {k}: value {v} outside [0, {max}]"
                    )));
                }
                data.push(v as u16);
            }
        }
        Self::new(slices.len(), rows, cols, bit_depth, data)
    }

    #[inline]
    pub fn num_slices(&self) -> usize {
        self.slices
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// `I_max = 2^B - 1`.
    pub fn max_intensity(&self) -> u32 {
        max_intensity(self.bit_depth)
    }

    pub fn voxels(&self) -> &[u16] {
        &self.data
    }

    pub fn slice_voxels(&self, k: usize) -> &[u16] {
        let len = self.rows * self.cols;
        &self.data[k * len..(k + 1) * len]
    }

    #[inline]
    pub fn get(&self, k: usize, row: usize, col: usize) -> u16 {
        self.data[(k * self.rows + row) * self.cols + col]
    }

    /// Slice `k` widened to the signed working representation.
    pub fn slice(&self, k: usize) -> Slice {
        let data = self.slice_voxels(k).iter().map(|&v| i32::from(v)).collect();
        Slice {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn to_slices(&self) -> Vec<Slice> {
        (0..self.slices).map(|k| self.slice(k)).collect()
    }

    /// First voxel (slice, row, col) where two volumes of equal shape differ.
    pub fn first_mismatch(&self, other: &Volume) -> Option<(usize, usize, usize)> {
        if self.slices != other.slices || self.rows != other.rows || self.cols != other.cols {
            return Some((0, 0, 0));
        }
        let idx = self.data.iter().zip(&other.data).position(|(a, b)| a != b)?;
        let plane = self.rows * self.cols;
        Some((idx / plane, (idx % plane) / self.cols, idx % self.cols))
    }
}

pub fn max_intensity(bit_depth: u8) -> u32 {
    (1u32 << bit_depth) - 1
}

pub(crate) fn check_shape(slices: usize, rows: usize, cols: usize, bit_depth: u8) -> Result<()> {
    if !(MIN_BIT_DEPTH..=MAX_BIT_DEPTH).contains(&bit_depth) {
        return Err(Error::Parameter(format!(
            "bit depth {bit_depth} outside {MIN_BIT_DEPTH}..={MAX_BIT_DEPTH}"
        )));
    }
    if slices < 2 {
        return Err(Error::Parameter(format!("volume needs K >= 2 slices, got {slices}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Parameter(format!("empty slice {rows}x{cols}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_single_slice() {
        assert!(matches!(Volume::new(1, 2, 2, 8, vec![0; 4]), Err(Error::Parameter(_))));
    }

    #[test]
    fn rejects_voxel_above_bit_depth() {
        assert!(Volume::new(2, 1, 1, 12, vec![4095, 4096]).is_err());
        assert!(Volume::new(2, 1, 1, 12, vec![4095, 0]).is_ok());
    }

    #[test]
    fn rejects_bad_bit_depth() {
        assert!(Volume::new(2, 1, 1, 7, vec![0, 0]).is_err());
        assert!(Volume::new(2, 1, 1, 17, vec![0, 0]).is_err());
    }

    #[test]
    fn slice_access_is_row_major() {
        let v = Volume::new(2, 2, 3, 8, (0..12).collect()).unwrap();
        assert_eq!(v.get(1, 1, 2), 11);
        assert_eq!(v.slice(1).get(0, 1), 7);
        assert_eq!(v.slice_voxels(0), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn from_slices_checks_range() {
        let ok = Slice::from_vec(1, 2, vec![0, 255]).unwrap();
        let bad = Slice::from_vec(1, 2, vec![-1, 3]).unwrap();
        assert!(Volume::from_slices(8, &[ok.clone(), ok.clone()]).is_ok());
        assert!(Volume::from_slices(8, &[ok, bad]).is_err());
    }

    #[test]
    fn first_mismatch_locates_voxel() {
        let a = Volume::new(2, 2, 2, 8, vec![0; 8]).unwrap();
        let mut d = vec![0; 8];
        d[6] = 1;
        let b = Volume::new(2, 2, 2, 8, d).unwrap();
        assert_eq!(a.first_mismatch(&a), None);
        assert_eq!(a.first_mismatch(&b), Some((1, 1, 0)));
    }

    #[test]
    fn clamped_access() {
        let s = Slice::from_fn(2, 3, |m, n| (m * 3 + n) as i32);
        assert_eq!(s.get_clamped(-4, 1), 1);
        assert_eq!(s.get_clamped(5, 9), 5);
    }
}
