//! The displacement-compensation capability plugged into the lifting steps.

use std::fmt;
use std::str::FromStr;

use crate::block::{BlockCompensator, FillMode, MotionVectorField};
use crate::error::{Error, Result};
use crate::io::ByteReader;
use crate::mesh::{MeshCompensator, MeshDeformation};
use crate::volume::Slice;

/// Displacement compensation method, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Zero,
    Mesh,
    Block,
    BlockFill,
}

impl Method {
    /// Report order: zero, mesh, block, block+fill.
    pub const ALL: [Method; 4] = [Method::Zero, Method::Mesh, Method::Block, Method::BlockFill];

    pub fn name(self) -> &'static str {
        match self {
            Method::Zero => "zero",
            Method::Mesh => "mesh",
            Method::Block => "block",
            Method::BlockFill => "block+fill",
        }
    }

    /// Method byte in the decomposition container.
    pub fn code(self) -> u8 {
        match self {
            Method::Zero => 0,
            Method::Block => 1,
            Method::BlockFill => 2,
            Method::Mesh => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Method::Zero),
            1 => Some(Method::Block),
            2 => Some(Method::BlockFill),
            3 => Some(Method::Mesh),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Method::Zero),
            "mesh" => Ok(Method::Mesh),
            "block" => Ok(Method::Block),
            "block-fill" | "block+fill" => Ok(Method::BlockFill),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Motion data estimated for one (reference, current) slice pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MotionRecord {
    /// No compensation; both warps are the identity.
    Identity,
    Block(MotionVectorField),
    Mesh(MeshDeformation),
}

impl MotionRecord {
    pub(crate) fn encode(&self, out: &mut Vec<u8>) {
        match self {
            MotionRecord::Identity => {}
            MotionRecord::Block(mvf) => mvf.encode(out),
            MotionRecord::Mesh(def) => def.encode(out),
        }
    }

    pub(crate) fn decode(method: Method, r: &mut ByteReader<'_>, rows: usize, cols: usize) -> Result<Self> {
        match method {
            Method::Zero => Ok(MotionRecord::Identity),
            Method::Block | Method::BlockFill => {
                MotionVectorField::decode(r, rows, cols).map(MotionRecord::Block)
            }
            Method::Mesh => MeshDeformation::decode(r, rows, cols).map(MotionRecord::Mesh),
        }
    }
}

/// A displacement compensator: estimation, the predictor warp `W_{ref->cur}`
/// and the inverse warp applied to highpass slices in the update step.
///
/// `warp` and `inverse_warp` must be deterministic functions of their inputs;
/// lifting reconstruction relies on nothing else.
pub trait Compensator: Send + Sync {
    fn method(&self) -> Method;

    fn estimate(&self, reference: &Slice, current: &Slice) -> Result<MotionRecord>;

    fn warp(&self, reference: &Slice, record: &MotionRecord) -> Result<Slice>;

    fn inverse_warp(&self, slice: &Slice, record: &MotionRecord) -> Result<Slice>;
}

/// Plain lifting without compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroCompensator;

impl Compensator for ZeroCompensator {
    fn method(&self) -> Method {
        Method::Zero
    }

    fn estimate(&self, reference: &Slice, current: &Slice) -> Result<MotionRecord> {
        reference.check_same_dims(current)?;
        Ok(MotionRecord::Identity)
    }

    fn warp(&self, reference: &Slice, record: &MotionRecord) -> Result<Slice> {
        expect_identity(record)?;
        Ok(reference.clone())
    }

    fn inverse_warp(&self, slice: &Slice, record: &MotionRecord) -> Result<Slice> {
        expect_identity(record)?;
        Ok(slice.clone())
    }
}

fn expect_identity(record: &MotionRecord) -> Result<()> {
    match record {
        MotionRecord::Identity => Ok(()),
        _ => Err(Error::Parameter("zero method expects no motion record".into())),
    }
}

pub const DEFAULT_BLOCK_SIZE: usize = 8;
pub const DEFAULT_SEARCH_RANGE: usize = 8;
pub const DEFAULT_GRID: usize = 8;
pub const DEFAULT_VERTEX_BLOCK: usize = 7;

/// Parameters for building any of the four compensators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompensationParams {
    pub block_size: usize,
    pub search_range: usize,
    pub grid: usize,
    pub vertex_block: usize,
    pub mesh_search_range: usize,
}

impl Default for CompensationParams {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            search_range: DEFAULT_SEARCH_RANGE,
            grid: DEFAULT_GRID,
            vertex_block: DEFAULT_VERTEX_BLOCK,
            mesh_search_range: DEFAULT_SEARCH_RANGE,
        }
    }
}

pub fn compensator(method: Method, params: &CompensationParams) -> Result<Box<dyn Compensator>> {
    Ok(match method {
        Method::Zero => Box::new(ZeroCompensator),
        Method::Block => Box::new(BlockCompensator::new(params.block_size, params.search_range, FillMode::None)?),
        Method::BlockFill => Box::new(BlockCompensator::new(
            params.block_size,
            params.search_range,
            FillMode::NearestNeighbor,
        )?),
        Method::Mesh => Box::new(MeshCompensator::new(
            params.grid,
            params.vertex_block,
            params.mesh_search_range,
        )?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_codes_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_code(m.code()), Some(m));
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("block-fill".parse::<Method>().unwrap(), Method::BlockFill);
        assert!(Method::from_code(4).is_none());
        assert!("warp".parse::<Method>().is_err());
    }

    #[test]
    fn zero_compensator_is_identity() {
        let s = Slice::from_fn(3, 4, |m, n| (m * 7 + n) as i32 - 5);
        let z = ZeroCompensator;
        let rec = z.estimate(&s, &s).unwrap();
        assert_eq!(z.warp(&s, &rec).unwrap(), s);
        assert_eq!(z.inverse_warp(&s, &rec).unwrap(), s);
    }

    #[test]
    fn defaults_match_experimental_setup() {
        let p = CompensationParams::default();
        assert_eq!((p.block_size, p.search_range, p.grid, p.vertex_block, p.mesh_search_range), (8, 8, 8, 7, 8));
    }
}
