//! Block-based displacement compensation.
//!
//! Estimation is an exhaustive integer full search minimising the sum of
//! absolute differences. A vector `v` of a block means the predictor reads the
//! reference at `p + v` for every pixel `p` of that block.
//!
//! The inverse warp scatters each pixel `q` of its input to `q + v`. Output
//! pixels hit several times ("multiple connected") take the floor of the mean;
//! pixels never hit ("unconnected") are either zero or, with
//! [`FillMode::NearestNeighbor`], adopt the vector of the nearest connected
//! pixel and read the input at `q - v`.

use rayon::prelude::*;

use crate::compensate::{Compensator, Method, MotionRecord};
use crate::error::{Error, Result};
use crate::io::ByteReader;
use crate::volume::Slice;

/// Largest search range representable in the `i8` record encoding.
pub const MAX_SEARCH_RANGE: usize = i8::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MotionVector {
    pub dy: i32,
    pub dx: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dy: 0, dx: 0 };

    pub const fn new(dy: i32, dx: i32) -> Self {
        Self { dy, dx }
    }

    fn l1(self) -> u32 {
        self.dy.unsigned_abs() + self.dx.unsigned_abs()
    }

    /// Ordering key for equal-SAD candidates: zero-biased, then `dy`, then `dx`.
    fn tie_key(self) -> (u32, i32, i32) {
        (self.l1(), self.dy, self.dx)
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
}

impl Rect {
    fn shifted_inside(&self, v: MotionVector, rows: usize, cols: usize) -> bool {
        let top = self.top as i64 + i64::from(v.dy);
        let left = self.left as i64 + i64::from(v.dx);
        top >= 0
            && left >= 0
            && top + self.height as i64 <= rows as i64
            && left + self.width as i64 <= cols as i64
    }
}

/// Sum of absolute differences between `current` over `rect` and `reference`
/// over `rect` shifted by `v`. The shifted rectangle must lie inside `reference`.
pub fn sad(reference: &Slice, current: &Slice, rect: Rect, v: MotionVector) -> u64 {
    let mut total = 0u64;
    for m in rect.top..rect.top + rect.height {
        let rm = (m as i64 + i64::from(v.dy)) as usize;
        for n in rect.left..rect.left + rect.width {
            let rn = (n as i64 + i64::from(v.dx)) as usize;
            total += (i64::from(current.get(m, n)) - i64::from(reference.get(rm, rn))).unsigned_abs();
        }
    }
    total
}

/// Full search over `[-range, range]^2`, skipping candidates that leave the
/// reference. Returns the best vector and its SAD.
pub(crate) fn full_search(reference: &Slice, current: &Slice, rect: Rect, range: usize) -> (MotionVector, u64) {
    let (rows, cols) = reference.dims();
    let r = range as i32;
    let mut best = (MotionVector::ZERO, sad(reference, current, rect, MotionVector::ZERO));
    for dy in -r..=r {
        for dx in -r..=r {
            let v = MotionVector::new(dy, dx);
            if v == MotionVector::ZERO || !rect.shifted_inside(v, rows, cols) {
                continue;
            }
            let cost = sad(reference, current, rect, v);
            if cost < best.1 || (cost == best.1 && v.tie_key() < best.0.tie_key()) {
                best = (v, cost);
            }
        }
    }
    best
}

/// Per-block integer displacements on a `ceil(M/b) x ceil(N/b)` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotionVectorField {
    block_size: usize,
    search_range: usize,
    grid_rows: usize,
    grid_cols: usize,
    vectors: Vec<MotionVector>,
}

impl MotionVectorField {
    pub fn new(
        block_size: usize,
        search_range: usize,
        grid_rows: usize,
        grid_cols: usize,
        vectors: Vec<MotionVector>,
    ) -> Result<Self> {
        check_params(block_size, search_range)?;
        if vectors.len() != grid_rows * grid_cols {
            return Err(Error::Dimension(format!(
                "{grid_rows}x{grid_cols} block grid needs {} vectors, got {}",
                grid_rows * grid_cols,
                vectors.len()
            )));
        }
        let r = search_range as i32;
        if let Some(v) = vectors.iter().find(|v| v.dy.abs() > r || v.dx.abs() > r) {
            return Err(Error::Parameter(format!(
                "vector ({}, {}) exceeds search range {search_range}",
                v.dy, v.dx
            )));
        }
        Ok(Self {
            block_size,
            search_range,
            grid_rows,
            grid_cols,
            vectors,
        })
    }

    /// Field covering a `rows x cols` slice with the same vector in every block.
    pub fn uniform(rows: usize, cols: usize, block_size: usize, search_range: usize, v: MotionVector) -> Result<Self> {
        check_params(block_size, search_range)?;
        let (gr, gc) = (rows.div_ceil(block_size), cols.div_ceil(block_size));
        Self::new(block_size, search_range, gr, gc, vec![v; gr * gc])
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn search_range(&self) -> usize {
        self.search_range
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.grid_rows, self.grid_cols)
    }

    pub fn vectors(&self) -> &[MotionVector] {
        &self.vectors
    }

    pub fn block_vector(&self, block_row: usize, block_col: usize) -> MotionVector {
        self.vectors[block_row * self.grid_cols + block_col]
    }

    pub fn set_block_vector(&mut self, block_row: usize, block_col: usize, v: MotionVector) {
        self.vectors[block_row * self.grid_cols + block_col] = v;
    }

    #[inline]
    pub fn pixel_vector(&self, row: usize, col: usize) -> MotionVector {
        self.block_vector(row / self.block_size, col / self.block_size)
    }

    /// Pixel rectangle of a block, clipped to the slice.
    pub fn block_rect(&self, block_row: usize, block_col: usize, rows: usize, cols: usize) -> Rect {
        let top = block_row * self.block_size;
        let left = block_col * self.block_size;
        Rect {
            top,
            left,
            height: self.block_size.min(rows - top),
            width: self.block_size.min(cols - left),
        }
    }

    fn check_covers(&self, rows: usize, cols: usize) -> Result<()> {
        if (self.grid_rows, self.grid_cols) != (rows.div_ceil(self.block_size), cols.div_ceil(self.block_size)) {
            return Err(Error::Dimension(format!(
                "{}x{} block grid of size {} does not cover a {rows}x{cols} slice",
                self.grid_rows, self.grid_cols, self.block_size
            )));
        }
        Ok(())
    }

    /// `block_size u16, search_range u16, grid_rows u16, grid_cols u16`, then
    /// `(dy, dx)` as `i8` pairs, row-major.
    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        for v in [self.block_size, self.search_range, self.grid_rows, self.grid_cols] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        for v in &self.vectors {
            out.push(v.dy as i8 as u8);
            out.push(v.dx as i8 as u8);
        }
    }

    pub(crate) fn decode(r: &mut ByteReader<'_>, rows: usize, cols: usize) -> Result<Self> {
        let at = r.offset();
        let block_size = r.u16()? as usize;
        let search_range = r.u16()? as usize;
        let grid_rows = r.u16()? as usize;
        let grid_cols = r.u16()? as usize;
        let mut vectors = Vec::with_capacity(grid_rows * grid_cols);
        for _ in 0..grid_rows * grid_cols {
            let dy = r.i8()?;
            let dx = r.i8()?;
            vectors.push(MotionVector::new(i32::from(dy), i32::from(dx)));
        }
        let field = Self::new(block_size, search_range, grid_rows, grid_cols, vectors)
            .map_err(|e| Error::format(at, e.to_string()))?;
        field.check_covers(rows, cols).map_err(|e| Error::format(at, e.to_string()))?;
        Ok(field)
    }
}

fn check_params(block_size: usize, search_range: usize) -> Result<()> {
    if block_size == 0 || block_size > u16::MAX as usize {
        return Err(Error::Parameter(format!("block size {block_size} outside 1..=65535")));
    }
    if search_range > MAX_SEARCH_RANGE {
        return Err(Error::Parameter(format!(
            "search range {search_range} exceeds {MAX_SEARCH_RANGE}"
        )));
    }
    Ok(())
}

/// Full-search block motion estimation of `current` from `reference`.
pub fn estimate_mvf(reference: &Slice, current: &Slice, block_size: usize, search_range: usize) -> Result<MotionVectorField> {
    reference.check_same_dims(current)?;
    check_params(block_size, search_range)?;
    let (rows, cols) = current.dims();
    let (gr, gc) = (rows.div_ceil(block_size), cols.div_ceil(block_size));
    if gr > u16::MAX as usize || gc > u16::MAX as usize {
        return Err(Error::Parameter(format!("block grid {gr}x{gc} too large")));
    }
    let mut field = MotionVectorField::new(block_size, search_range, gr, gc, vec![MotionVector::ZERO; gr * gc])?;
    let vectors: Vec<MotionVector> = (0..gr * gc)
        .into_par_iter()
        .map(|b| {
            let rect = field.block_rect(b / gc, b % gc, rows, cols);
            full_search(reference, current, rect, search_range).0
        })
        .collect();
    field.vectors = vectors;
    Ok(field)
}

/// Backward-mapped predictor: output block at `p` is the reference block at `p + v`.
pub fn warp(reference: &Slice, mvf: &MotionVectorField) -> Result<Slice> {
    let (rows, cols) = reference.dims();
    mvf.check_covers(rows, cols)?;
    let mut out = Slice::zeros(rows, cols);
    for br in 0..mvf.grid_rows {
        for bc in 0..mvf.grid_cols {
            let rect = mvf.block_rect(br, bc, rows, cols);
            let v = mvf.block_vector(br, bc);
            if !rect.shifted_inside(v, rows, cols) {
                return Err(Error::Parameter(format!(
                    "block ({br}, {bc}) vector ({}, {}) points outside the reference",
                    v.dy, v.dx
                )));
            }
            for m in rect.top..rect.top + rect.height {
                let rm = (m as i32 + v.dy) as usize;
                for n in rect.left..rect.left + rect.width {
                    out.set(m, n, reference.get(rm, (n as i32 + v.dx) as usize));
                }
            }
        }
    }
    Ok(out)
}

/// How unconnected pixels are resolved by [`inverse_warp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillMode {
    /// Unconnected pixels become zero.
    #[default]
    None,
    /// Nearest-neighbour interpolation of the motion vector field.
    NearestNeighbor,
}

/// Per-pixel accumulation produced by scattering a slice through a field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseCoverage {
    rows: usize,
    cols: usize,
    sum: Vec<i64>,
    count: Vec<u32>,
    /// Vector of the first source (raster order) landing on each pixel.
    owner: Vec<Option<MotionVector>>,
}

impl InverseCoverage {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn sum(&self, row: usize, col: usize) -> i64 {
        self.sum[row * self.cols + col]
    }

    pub fn count(&self, row: usize, col: usize) -> u32 {
        self.count[row * self.cols + col]
    }

    pub fn sums(&self) -> &[i64] {
        &self.sum
    }

    pub fn counts(&self) -> &[u32] {
        &self.count
    }

    pub fn unconnected(&self) -> usize {
        self.count.iter().filter(|&&c| c == 0).count()
    }

    pub fn multiple_connected(&self) -> usize {
        self.count.iter().filter(|&&c| c >= 2).count()
    }
}

/// Scatters every pixel `q` of `slice` to `q + v(q)`, dropping targets outside the slice.
pub fn scatter(slice: &Slice, mvf: &MotionVectorField) -> Result<InverseCoverage> {
    let (rows, cols) = slice.dims();
    mvf.check_covers(rows, cols)?;
    let mut cov = InverseCoverage {
        rows,
        cols,
        sum: vec![0; rows * cols],
        count: vec![0; rows * cols],
        owner: vec![None; rows * cols],
    };
    for m in 0..rows {
        for n in 0..cols {
            let v = mvf.pixel_vector(m, n);
            let tm = m as i64 + i64::from(v.dy);
            let tn = n as i64 + i64::from(v.dx);
            if tm < 0 || tn < 0 || tm >= rows as i64 || tn >= cols as i64 {
                continue;
            }
            let t = tm as usize * cols + tn as usize;
            cov.sum[t] += i64::from(slice.get(m, n));
            cov.count[t] += 1;
            cov.owner[t].get_or_insert(v);
        }
    }
    Ok(cov)
}

/// Nearest connected pixel to `(row, col)` by Euclidean distance, ties broken
/// by raster order. Searches square rings of growing radius.
fn nearest_connected(cov: &InverseCoverage, row: usize, col: usize) -> Option<usize> {
    let (rows, cols) = (cov.rows as i64, cov.cols as i64);
    let (r0, c0) = (row as i64, col as i64);
    let max_radius = rows.max(cols);
    let mut best: Option<(i64, usize)> = None;
    for radius in 1..=max_radius {
        for dy in -radius..=radius {
            let m = r0 + dy;
            if m < 0 || m >= rows {
                continue;
            }
            let step = if dy.abs() == radius { 1 } else { 2 * radius };
            let mut dx = -radius;
            while dx <= radius {
                let n = c0 + dx;
                if n >= 0 && n < cols {
                    let idx = (m * cols + n) as usize;
                    if cov.count[idx] > 0 {
                        let d2 = dy * dy + dx * dx;
                        if best.is_none_or(|(bd, bi)| d2 < bd || (d2 == bd && idx < bi)) {
                            best = Some((d2, idx));
                        }
                    }
                }
                dx += step;
            }
        }
        // ring radius+1 only holds pixels at distance >= radius+1
        if let Some((d2, _)) = best {
            if d2 < (radius + 1) * (radius + 1) {
                break;
            }
        }
    }
    best.map(|(_, idx)| idx)
}

/// Inverse compensation of `slice` through `mvf`.
pub fn inverse_warp(slice: &Slice, mvf: &MotionVectorField, fill: FillMode) -> Result<Slice> {
    let cov = scatter(slice, mvf)?;
    Ok(resolve(slice, &cov, fill))
}

fn resolve(slice: &Slice, cov: &InverseCoverage, fill: FillMode) -> Slice {
    let (rows, cols) = slice.dims();
    let mut out = Slice::zeros(rows, cols);
    let mut holes = Vec::new();
    for (idx, (&sum, &count)) in cov.sum.iter().zip(&cov.count).enumerate() {
        if count > 0 {
            out.data_mut()[idx] = sum.div_euclid(i64::from(count)) as i32;
        } else {
            holes.push(idx);
        }
    }
    if fill == FillMode::NearestNeighbor && holes.len() < rows * cols {
        let filled: Vec<(usize, i32)> = holes
            .par_iter()
            .map(|&idx| {
                let (m, n) = (idx / cols, idx % cols);
                let source = nearest_connected(cov, m, n).expect("at least one connected pixel");
                let v = cov.owner[source].expect("connected pixel has an owner");
                let value = slice.get_clamped(m as isize - v.dy as isize, n as isize - v.dx as isize);
                (idx, value)
            })
            .collect();
        for (idx, value) in filled {
            out.data_mut()[idx] = value;
        }
    }
    out
}

/// Block compensation with an optional hole-filling inverse ("block" / "block+fill").
#[derive(Debug, Clone, Copy)]
pub struct BlockCompensator {
    block_size: usize,
    search_range: usize,
    fill: FillMode,
}

impl BlockCompensator {
    pub fn new(block_size: usize, search_range: usize, fill: FillMode) -> Result<Self> {
        check_params(block_size, search_range)?;
        Ok(Self {
            block_size,
            search_range,
            fill,
        })
    }
}

fn expect_block(record: &MotionRecord) -> Result<&MotionVectorField> {
    match record {
        MotionRecord::Block(mvf) => Ok(mvf),
        _ => Err(Error::Parameter("block compensator expects a motion vector field".into())),
    }
}

impl Compensator for BlockCompensator {
    fn method(&self) -> Method {
        match self.fill {
            FillMode::None => Method::Block,
            FillMode::NearestNeighbor => Method::BlockFill,
        }
    }

    fn estimate(&self, reference: &Slice, current: &Slice) -> Result<MotionRecord> {
        estimate_mvf(reference, current, self.block_size, self.search_range).map(MotionRecord::Block)
    }

    fn warp(&self, reference: &Slice, record: &MotionRecord) -> Result<Slice> {
        warp(reference, expect_block(record)?)
    }

    fn inverse_warp(&self, slice: &Slice, record: &MotionRecord) -> Result<Slice> {
        inverse_warp(slice, expect_block(record)?, self.fill)
    }
}
