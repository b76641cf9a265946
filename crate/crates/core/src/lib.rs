//! Reversible integer LeGall 5/3 wavelet lifting along the slice axis of 3-D
//! volumes, with block-based and mesh-based displacement compensation, plus
//! the statistics used to compare them (subband coding gain, lowpass
//! PSNR / MSE gain and L-infinity distance).
//!
//! ```
//! use mclift::{forward, inverse, generate_phantom, compensator, CompensationParams, Method, PhantomKind, PhantomSpec};
//!
//! let spec = PhantomSpec::new(PhantomKind::GlobalTranslation { dy: 1, dx: 2 }).with_seed(7);
//! let volume = generate_phantom(&spec, 6, 32, 32, 12).unwrap();
//! let block = compensator(Method::Block, &CompensationParams::default()).unwrap();
//! let dec = forward(&volume, block.as_ref()).unwrap();
//! assert_eq!(inverse(&dec, block.as_ref()).unwrap(), volume);
//! ```

pub mod block;
pub mod compensate;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod lifting;
pub mod mesh;
pub mod metrics;
pub mod phantom;
pub mod report;
pub mod volume;

pub use compensate::{
    compensator, CompensationParams, Compensator, Method, MotionRecord, ZeroCompensator,
};
pub use decomposition::{load_decomposition, save_decomposition, Decomposition, MotionPair, Rounding};
pub use error::{Error, Result, Subband};
pub use io::{load_volume, save_volume};
pub use lifting::{boundary_index, forward, forward_float_reference, forward_with, inverse, FloatSubbands};
pub use metrics::AnalysisReport;
pub use phantom::{generate_phantom, PhantomKind, PhantomSpec};
pub use report::{compare, Comparison};
pub use volume::{Slice, Volume};
