//! Mesh-based (control-grid) displacement compensation.
//!
//! A regular vertex grid with spacing `g` is laid over the slice; vertex
//! positions are `i * g`, clamped to the last row/column, so the grid always
//! spans the whole slice. Each interior vertex gets an integer displacement
//! from a block search on the `w x w` window centred on it; border vertices
//! stay pinned at zero. The dense per-pixel field is the bilinear
//! interpolation of the vertex displacements inside each grid cell.
//!
//! The warp samples the reference at `p + d(p)` with bilinear intensity
//! interpolation; the inverse warp samples at `q - d(q)`. Both are gathers, so
//! neither can leave holes. Sample coordinates are clamped to the slice and
//! results are rounded half up.

use rayon::prelude::*;

use crate::block::{full_search, MotionVector, Rect, MAX_SEARCH_RANGE};
use crate::compensate::{Compensator, Method, MotionRecord};
use crate::error::{Error, Result};
use crate::io::ByteReader;
use crate::volume::Slice;

/// Vertex coordinates along one axis of length `len`.
pub fn vertex_positions(len: usize, spacing: usize) -> Vec<usize> {
    let count = (len - 1).div_ceil(spacing) + 1;
    (0..count).map(|i| (i * spacing).min(len - 1)).collect()
}

/// Regular vertex grid with one integer displacement per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeshDeformation {
    spacing: usize,
    vertex_rows: usize,
    vertex_cols: usize,
    displacements: Vec<MotionVector>,
}

impl MeshDeformation {
    /// All-zero deformation for a `rows x cols` slice.
    pub fn zero(spacing: usize, rows: usize, cols: usize) -> Result<Self> {
        check_spacing(spacing, rows, cols)?;
        let vr = vertex_positions(rows, spacing).len();
        let vc = vertex_positions(cols, spacing).len();
        Ok(Self {
            spacing,
            vertex_rows: vr,
            vertex_cols: vc,
            displacements: vec![MotionVector::ZERO; vr * vc],
        })
    }

    /// Builds a deformation, rejecting nonzero displacements on border vertices.
    pub fn new(spacing: usize, rows: usize, cols: usize, displacements: Vec<MotionVector>) -> Result<Self> {
        let mut def = Self::zero(spacing, rows, cols)?;
        if displacements.len() != def.displacements.len() {
            return Err(Error::Dimension(format!(
                "{}x{} vertex grid needs {} displacements, got {}",
                def.vertex_rows,
                def.vertex_cols,
                def.displacements.len(),
                displacements.len()
            )));
        }
        def.displacements = displacements;
        def.check_border()?;
        Ok(def)
    }

    /// Same as [`MeshDeformation::new`] without the border pin.
    #[cfg(test)]
    pub(crate) fn new_unpinned(spacing: usize, rows: usize, cols: usize, displacements: Vec<MotionVector>) -> Self {
        let mut def = Self::zero(spacing, rows, cols).unwrap();
        assert_eq!(displacements.len(), def.displacements.len());
        def.displacements = displacements;
        def
    }

    pub fn spacing(&self) -> usize {
        self.spacing
    }

    pub fn vertex_dims(&self) -> (usize, usize) {
        (self.vertex_rows, self.vertex_cols)
    }

    pub fn displacements(&self) -> &[MotionVector] {
        &self.displacements
    }

    pub fn vertex(&self, i: usize, j: usize) -> MotionVector {
        self.displacements[i * self.vertex_cols + j]
    }

    pub fn is_border(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.vertex_rows || j + 1 == self.vertex_cols
    }

    fn check_border(&self) -> Result<()> {
        for i in 0..self.vertex_rows {
            for j in 0..self.vertex_cols {
                if self.is_border(i, j) && self.vertex(i, j) != MotionVector::ZERO {
                    return Err(Error::Parameter(format!("border vertex ({i}, {j}) must not move")));
                }
            }
        }
        Ok(())
    }

    fn check_covers(&self, rows: usize, cols: usize) -> Result<()> {
        let expected = (
            vertex_positions(rows, self.spacing).len(),
            vertex_positions(cols, self.spacing).len(),
        );
        if expected != (self.vertex_rows, self.vertex_cols) {
            return Err(Error::Dimension(format!(
                "{}x{} vertex grid with spacing {} does not cover a {rows}x{cols} slice",
                self.vertex_rows, self.vertex_cols, self.spacing
            )));
        }
        Ok(())
    }

    /// `spacing u16, vertex_rows u16, vertex_cols u16`, then `(dy, dx)` as
    /// `i8` pairs, row-major.
    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        for v in [self.spacing, self.vertex_rows, self.vertex_cols] {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        for d in &self.displacements {
            out.push(d.dy as i8 as u8);
            out.push(d.dx as i8 as u8);
        }
    }

    pub(crate) fn decode(r: &mut ByteReader<'_>, rows: usize, cols: usize) -> Result<Self> {
        let at = r.offset();
        let spacing = r.u16()? as usize;
        let vr = r.u16()? as usize;
        let vc = r.u16()? as usize;
        let mut displacements = Vec::with_capacity(vr * vc);
        for _ in 0..vr * vc {
            let dy = r.i8()?;
            let dx = r.i8()?;
            displacements.push(MotionVector::new(i32::from(dy), i32::from(dx)));
        }
        let def = Self::zero(spacing, rows, cols).map_err(|e| Error::format(at, e.to_string()))?;
        if def.vertex_dims() != (vr, vc) {
            return Err(Error::format(
                at,
                format!("vertex grid {vr}x{vc} does not match a {rows}x{cols} slice"),
            ));
        }
        Self::new(spacing, rows, cols, displacements).map_err(|e| Error::format(at, e.to_string()))
    }
}

fn check_spacing(spacing: usize, rows: usize, cols: usize) -> Result<()> {
    if spacing == 0 || spacing > u16::MAX as usize {
        return Err(Error::Parameter(format!("grid spacing {spacing} outside 1..=65535")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("empty slice {rows}x{cols}")));
    }
    let vr = (rows - 1).div_ceil(spacing) + 1;
    let vc = (cols - 1).div_ceil(spacing) + 1;
    if vr > u16::MAX as usize || vc > u16::MAX as usize {
        return Err(Error::Parameter(format!("vertex grid {vr}x{vc} too large")));
    }
    Ok(())
}

/// Searches the displacement of every interior vertex; border vertices stay at zero.
pub fn estimate_mesh(
    reference: &Slice,
    current: &Slice,
    spacing: usize,
    vertex_block: usize,
    search_range: usize,
) -> Result<MeshDeformation> {
    reference.check_same_dims(current)?;
    let (rows, cols) = current.dims();
    check_search(vertex_block, search_range, rows, cols)?;
    let mut def = MeshDeformation::zero(spacing, rows, cols)?;
    let ys = vertex_positions(rows, spacing);
    let xs = vertex_positions(cols, spacing);
    let half = vertex_block / 2;
    let (vr, vc) = def.vertex_dims();
    def.displacements = (0..vr * vc)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / vc, idx % vc);
            if i == 0 || j == 0 || i + 1 == vr || j + 1 == vc {
                return MotionVector::ZERO;
            }
            let (py, px) = (ys[i], xs[j]);
            let top = py.saturating_sub(half);
            let left = px.saturating_sub(half);
            let rect = Rect {
                top,
                left,
                height: (py + half + 1).min(rows) - top,
                width: (px + half + 1).min(cols) - left,
            };
            full_search(reference, current, rect, search_range).0
        })
        .collect();
    Ok(def)
}

fn check_search(vertex_block: usize, search_range: usize, rows: usize, cols: usize) -> Result<()> {
    if vertex_block == 0 || vertex_block.is_multiple_of(2) {
        return Err(Error::Parameter(format!("vertex block {vertex_block} must be odd")));
    }
    if vertex_block > rows.min(cols) {
        return Err(Error::Parameter(format!(
            "vertex block {vertex_block} larger than slice {rows}x{cols}"
        )));
    }
    if search_range > MAX_SEARCH_RANGE {
        return Err(Error::Parameter(format!(
            "search range {search_range} exceeds {MAX_SEARCH_RANGE}"
        )));
    }
    Ok(())
}

/// Dense real-valued displacement field, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseField {
    rows: usize,
    cols: usize,
    dy: Vec<f64>,
    dx: Vec<f64>,
}

impl DenseField {
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// `(dy, dx)` at a pixel.
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let i = row * self.cols + col;
        (self.dy[i], self.dx[i])
    }
}

/// Cell lookup along one axis: lower vertex, upper vertex, fractional weight.
fn locate(positions: &[usize], p: usize) -> (usize, usize, f64) {
    if positions.len() == 1 {
        return (0, 0, 0.0);
    }
    let upper = positions.partition_point(|&v| v < p).clamp(1, positions.len() - 1);
    let (a, b) = (positions[upper - 1], positions[upper]);
    (upper - 1, upper, (p - a) as f64 / (b - a) as f64)
}

/// Bilinear interpolation of vertex displacements at every pixel.
pub fn dense_field(def: &MeshDeformation, rows: usize, cols: usize) -> Result<DenseField> {
    def.check_covers(rows, cols)?;
    let ys = vertex_positions(rows, def.spacing);
    let xs = vertex_positions(cols, def.spacing);
    let col_cells: Vec<_> = (0..cols).map(|n| locate(&xs, n)).collect();
    let mut dy = Vec::with_capacity(rows * cols);
    let mut dx = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        let (i0, i1, ty) = locate(&ys, m);
        for &(j0, j1, tx) in &col_cells {
            let corners = [
                (def.vertex(i0, j0), (1.0 - ty) * (1.0 - tx)),
                (def.vertex(i0, j1), (1.0 - ty) * tx),
                (def.vertex(i1, j0), ty * (1.0 - tx)),
                (def.vertex(i1, j1), ty * tx),
            ];
            let (mut sy, mut sx) = (0.0, 0.0);
            for (v, w) in corners {
                sy += w * f64::from(v.dy);
                sx += w * f64::from(v.dx);
            }
            dy.push(sy);
            dx.push(sx);
        }
    }
    Ok(DenseField { rows, cols, dy, dx })
}

/// Bilinear sample at a real position, clamped to the slice, rounded half up.
pub fn bilinear_sample(slice: &Slice, y: f64, x: f64) -> i32 {
    let (rows, cols) = slice.dims();
    let y = y.clamp(0.0, (rows - 1) as f64);
    let x = x.clamp(0.0, (cols - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(rows - 1), (x0 + 1).min(cols - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let top = (1.0 - fx) * f64::from(slice.get(y0, x0)) + fx * f64::from(slice.get(y0, x1));
    let bottom = (1.0 - fx) * f64::from(slice.get(y1, x0)) + fx * f64::from(slice.get(y1, x1));
    ((1.0 - fy) * top + fy * bottom + 0.5).floor() as i32
}

fn gather(slice: &Slice, field: &DenseField, sign: f64) -> Slice {
    let (rows, cols) = slice.dims();
    let data: Vec<i32> = (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (m, n) = (idx / cols, idx % cols);
            let (dy, dx) = (field.dy[idx], field.dx[idx]);
            if dy == 0.0 && dx == 0.0 {
                slice.get(m, n)
            } else {
                bilinear_sample(slice, m as f64 + sign * dy, n as f64 + sign * dx)
            }
        })
        .collect();
    Slice::from_vec(rows, cols, data).expect("gather preserves dims")
}

/// Predictor: `out(p) = ref(p + d(p))`.
pub fn warp(reference: &Slice, def: &MeshDeformation) -> Result<Slice> {
    let field = dense_field(def, reference.rows(), reference.cols())?;
    Ok(gather(reference, &field, 1.0))
}

/// Negated-field inverse: `out(q) = s(q - d(q))`.
pub fn inverse_warp(slice: &Slice, def: &MeshDeformation) -> Result<Slice> {
    let field = dense_field(def, slice.rows(), slice.cols())?;
    Ok(gather(slice, &field, -1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct MeshCompensator {
    spacing: usize,
    vertex_block: usize,
    search_range: usize,
}

impl MeshCompensator {
    pub fn new(spacing: usize, vertex_block: usize, search_range: usize) -> Result<Self> {
        if spacing == 0 || spacing > u16::MAX as usize {
            return Err(Error::Parameter(format!("grid spacing {spacing} outside 1..=65535")));
        }
        check_search(vertex_block, search_range, usize::MAX, usize::MAX)?;
        Ok(Self {
            spacing,
            vertex_block,
            search_range,
        })
    }
}

fn expect_mesh(record: &MotionRecord) -> Result<&MeshDeformation> {
    match record {
        MotionRecord::Mesh(def) => Ok(def),
        _ => Err(Error::Parameter("mesh compensator expects a mesh deformation".into())),
    }
}

impl Compensator for MeshCompensator {
    fn method(&self) -> Method {
        Method::Mesh
    }

    fn estimate(&self, reference: &Slice, current: &Slice) -> Result<MotionRecord> {
        estimate_mesh(reference, current, self.spacing, self.vertex_block, self.search_range).map(MotionRecord::Mesh)
    }

    fn warp(&self, reference: &Slice, record: &MotionRecord) -> Result<Slice> {
        warp(reference, expect_mesh(record)?)
    }

    fn inverse_warp(&self, slice: &Slice, record: &MotionRecord) -> Result<Slice> {
        inverse_warp(slice, expect_mesh(record)?)
    }
}
