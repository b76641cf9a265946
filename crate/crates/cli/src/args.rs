use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mclift::compensate::{DEFAULT_BLOCK_SIZE, DEFAULT_GRID, DEFAULT_SEARCH_RANGE, DEFAULT_VERTEX_BLOCK};
use mclift::{CompensationParams, Method, Rounding};

#[derive(Debug, Parser)]
#[command(name = "mclift", version, about = "Motion-compensated 5/3 lifting along the slice axis of volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic phantom volume.
    GenPhantom(GenPhantomArgs),
    /// Forward transform a volume into a decomposition file.
    Transform(TransformArgs),
    /// Reconstruct a volume from a decomposition file.
    Inverse(InverseArgs),
    /// Check bit-exact reconstruction (exit 1 on mismatch).
    Roundtrip(RoundtripArgs),
    /// Run all four methods on a volume and write comparison reports.
    Compare(CompareArgs),
    /// Analyse one decomposition against its source volume.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Zero,
    Block,
    BlockFill,
    Mesh,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Zero => Method::Zero,
            MethodArg::Block => Method::Block,
            MethodArg::BlockFill => Method::BlockFill,
            MethodArg::Mesh => Method::Mesh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoundingArg {
    Paper,
    Jpeg2000,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Paper => Rounding::Paper,
            RoundingArg::Jpeg2000 => Rounding::Jpeg2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Static,
    Translate,
    Elliptic,
    Noise,
}

/// Compensation parameters shared by the transform commands.
#[derive(Debug, Clone, Args)]
pub struct CompensationArgs {
    #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
    pub block_size: usize,
    /// Search range for block matching and mesh vertex search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_RANGE)]
    pub search_range: usize,
    /// Mesh grid spacing.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    pub grid: usize,
    /// Side of the block centred on each mesh vertex (odd).
    #[arg(long, default_value_t = DEFAULT_VERTEX_BLOCK)]
    pub vertex_block: usize,
    #[arg(long, value_enum, default_value_t = RoundingArg::Paper)]
    pub rounding: RoundingArg,
}

impl CompensationArgs {
    pub fn params(&self) -> CompensationParams {
        CompensationParams {
            block_size: self.block_size,
            search_range: self.search_range,
            grid: self.grid,
            vertex_block: self.vertex_block,
            mesh_search_range: self.search_range,
        }
    }
}

/// `KxMxN`, e.g. `8x64x64`.
pub fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        return Err(format!("expected KxMxN, got {s:?}"));
    }
    let num = |p: &str| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}"));
    Ok((num(parts[0])?, num(parts[1])?, num(parts[2])?))
}

/// `dy,dx`, e.g. `2,3`.
pub fn parse_shift(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected dy,dx, got {s:?}"))?;
    let num = |p: &str| p.trim().parse::<i32>().map_err(|e| format!("{p:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Args)]
pub struct GenPhantomArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Volume size as KxMxN.
    #[arg(long, value_parser = parse_dims)]
    pub dims: (usize, usize, usize),
    #[arg(long, default_value_t = 12)]
    pub bits: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-slice translation `dy,dx` for `--kind translate`.
    #[arg(long, value_parser = parse_shift, allow_hyphen_values = true, default_value = "2,3")]
    pub shift: (i32, i32),
    /// Boundary displacement amplitude in voxels for `--kind elliptic`.
    #[arg(long, default_value_t = 3)]
    pub amplitude: u32,
    /// Uniform noise half-width in intensity levels.
    #[arg(long, default_value_t = 0)]
    pub noise: u32,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Block)]
    pub method: MethodArg,
    #[command(flatten)]
    pub compensation: CompensationArgs,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Compare the reconstruction with this volume; exit 1 on mismatch.
    #[arg(long)]
    pub expect: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Volume to check. Not needed with `--seeds`.
    #[arg(short, long, required_unless_present = "seeds")]
    pub input: Option<PathBuf>,
    /// Reconstruct this decomposition instead of transforming in memory.
    #[arg(short, long, requires = "input")]
    pub decomposition: Option<PathBuf>,
    /// Method to check; all four when omitted.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Sweep this many seeded random volumes instead of reading a file.
    #[arg(long, conflicts_with = "input")]
    pub seeds: Option<u64>,
    /// Volume size for `--seeds` as KxMxN.
    #[arg(long, value_parser = parse_dims, default_value = "9x32x32")]
    pub dims: (usize, usize, usize),
    #[command(flatten)]
    pub compensation: CompensationArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output directory for the reports.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    #[command(flatten)]
    pub compensation: CompensationArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Source volume.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Decomposition of the source volume.
    #[arg(short, long)]
    pub decomposition: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
