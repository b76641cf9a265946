//! Integer LeGall 5/3 lifting along the slice axis with displacement compensation.
//!
//! Prediction:
//!
//! ```text
//! H_i = f_{2i+1} - floor((W_{2i->2i+1}(f_{2i}) + W_{2i+2->2i+1}(f_{2i+2})) / 2)
//! ```
//!
//! Update, where `IMC` inverts the warp estimated for the same slice pair:
//!
//! ```text
//! L_i = f_{2i} + floor((IMC_{2i-1->2i}(H_{i-1}) + IMC_{2i+1->2i}(H_i)) / 4)
//! ```
//!
//! Volume ends use whole-sample symmetric extension: `f_K` is `f_{K-2}`,
//! `H_{-1}` is `H_0` (through the `0 <-> 1` record) and, for odd `K`, the
//! missing last highpass slice is the previous one.

use rayon::prelude::*;

use crate::compensate::Compensator;
use crate::decomposition::{Decomposition, MotionPair, Rounding};
use crate::error::{Error, Result};
use crate::volume::{Slice, Volume};

/// Mirror an index into `0..len` without repeating the edge sample.
pub fn boundary_index(i: isize, len: usize) -> usize {
    assert!(len >= 2, "symmetric extension needs at least two samples");
    let last = len as isize - 1;
    let period = 2 * last;
    let mut j = i.rem_euclid(period);
    if j > last {
        j = period - j;
    }
    j as usize
}

fn predict(current: &Slice, a: &Slice, b: &Slice, sign: i32) -> Slice {
    let data = current
        .data()
        .iter()
        .zip(a.data().iter().zip(b.data()))
        .map(|(&c, (&x, &y))| c + sign * ((x + y) >> 1))
        .collect();
    Slice::from_vec(current.rows(), current.cols(), data).expect("equal dims")
}

fn update(even: &Slice, a: &Slice, b: &Slice, sign: i32, rounding: Rounding) -> Slice {
    let data = even
        .data()
        .iter()
        .zip(a.data().iter().zip(b.data()))
        .map(|(&e, (&x, &y))| e + sign * rounding.update(x + y))
        .collect();
    Slice::from_vec(even.rows(), even.cols(), data).expect("equal dims")
}

/// Inverse-compensated highpass slices feeding lowpass slice `i` as `(left, right)`.
fn update_terms<'a>(
    i: usize,
    imc_forward: &'a [Slice],
    imc_backward: &'a [Slice],
) -> (&'a Slice, &'a Slice) {
    let nh = imc_forward.len();
    let left = if i == 0 { &imc_forward[0] } else { &imc_backward[i - 1] };
    let right = if i < nh { &imc_forward[i] } else { &imc_backward[nh - 1] };
    (left, right)
}

/// `IMC` of every highpass slice through its forward and backward records.
fn inverse_compensate<'a>(
    highpass: &[Slice],
    motion: impl Fn(usize) -> &'a MotionPair + Sync,
    compensator: &dyn Compensator,
) -> Result<(Vec<Slice>, Vec<Slice>)> {
    let pairs: Vec<(Slice, Slice)> = highpass
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let pair = motion(i);
            let f = compensator.inverse_warp(h, &pair.forward)?;
            let b = compensator.inverse_warp(h, &pair.backward)?;
            Ok((f, b))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Forward transform with the default (floor) update rounding.
pub fn forward(volume: &Volume, compensator: &dyn Compensator) -> Result<Decomposition> {
    forward_with(volume, compensator, Rounding::Paper)
}

pub fn forward_with(volume: &Volume, compensator: &dyn Compensator, rounding: Rounding) -> Result<Decomposition> {
    let k = volume.num_slices();
    let f = volume.to_slices();
    let nh = k / 2;
    let nl = k.div_ceil(2);

    let predicted: Vec<(Slice, MotionPair)> = (0..nh)
        .into_par_iter()
        .map(|i| {
            let odd = 2 * i + 1;
            let prev = &f[2 * i];
            let next = &f[boundary_index(2 * i as isize + 2, k)];
            let run = || -> Result<(Slice, MotionPair)> {
                let forward = compensator.estimate(prev, &f[odd])?;
                let backward = compensator.estimate(next, &f[odd])?;
                let a = compensator.warp(prev, &forward)?;
                let b = compensator.warp(next, &backward)?;
                Ok((predict(&f[odd], &a, &b, -1), MotionPair { forward, backward }))
            };
            run().map_err(|e| e.at_slice(odd))
        })
        .collect::<Result<_>>()?;
    let (highpass, motion): (Vec<Slice>, Vec<MotionPair>) = predicted.into_iter().unzip();

    let (imc_f, imc_b) = inverse_compensate(&highpass, |i| &motion[i], compensator)?;
    let lowpass: Vec<Slice> = (0..nl)
        .into_par_iter()
        .map(|i| {
            let (a, b) = update_terms(i, &imc_f, &imc_b);
            update(&f[2 * i], a, b, 1, rounding)
        })
        .collect();

    let method = compensator.method();
    let motion = if method == crate::Method::Zero { Vec::new() } else { motion };
    Ok(Decomposition {
        method,
        rounding,
        slices: k,
        rows: volume.rows(),
        cols: volume.cols(),
        bit_depth: volume.bit_depth(),
        lowpass,
        highpass,
        motion,
    })
}

/// Exact inverse: undo the update with the stored records, then the prediction.
pub fn inverse(dec: &Decomposition, compensator: &dyn Compensator) -> Result<Volume> {
    if dec.method != compensator.method() {
        return Err(Error::MethodMismatch {
            expected: compensator.method(),
            found: dec.method,
        });
    }
    dec.validate()?;
    let k = dec.slices;
    let nl = dec.lowpass.len();

    let (imc_f, imc_b) = inverse_compensate(&dec.highpass, |i| dec.motion_for(i), compensator)?;
    let even: Vec<Slice> = (0..nl)
        .into_par_iter()
        .map(|i| {
            let (a, b) = update_terms(i, &imc_f, &imc_b);
            update(&dec.lowpass[i], a, b, -1, dec.rounding)
        })
        .collect();

    let odd: Vec<Slice> = dec
        .highpass
        .par_iter()
        .enumerate()
        .map(|(i, h)| {
            let pair = dec.motion_for(i);
            let prev = &even[i];
            let next = &even[boundary_index(2 * i as isize + 2, k) / 2];
            let run = || -> Result<Slice> {
                let a = compensator.warp(prev, &pair.forward)?;
                let b = compensator.warp(next, &pair.backward)?;
                Ok(predict(h, &a, &b, 1))
            };
            run().map_err(|e| e.at_slice(2 * i + 1))
        })
        .collect::<Result<_>>()?;

    let mut slices = Vec::with_capacity(k);
    for idx in 0..k {
        slices.push(if idx % 2 == 0 { even[idx / 2].clone() } else { odd[idx / 2].clone() });
    }
    Volume::from_slices(dec.bit_depth, &slices)
}

/// Real-valued subbands of the uncompensated transform, one `M*N` plane per slice.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatSubbands {
    pub lowpass: Vec<Vec<f64>>,
    pub highpass: Vec<Vec<f64>>,
}

/// Lifting without rounding on a 1-D signal, same boundary handling as [`forward`].
pub fn lift_1d_float(signal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = signal.len();
    let high: Vec<f64> = (0..k / 2)
        .map(|i| signal[2 * i + 1] - 0.5 * (signal[2 * i] + signal[boundary_index(2 * i as isize + 2, k)]))
        .collect();
    let nh = high.len();
    let low = (0..k.div_ceil(2))
        .map(|i| {
            let left = if i == 0 { high[0] } else { high[i - 1] };
            let right = if i < nh { high[i] } else { high[nh - 1] };
            signal[2 * i] + 0.25 * (left + right)
        })
        .collect();
    (low, high)
}

/// Uncompensated transform without rounding, applied voxel column by voxel column.
pub fn forward_float_reference(volume: &Volume) -> FloatSubbands {
    let k = volume.num_slices();
    let plane = volume.rows() * volume.cols();
    let mut lowpass = vec![vec![0.0; plane]; k.div_ceil(2)];
    let mut highpass = vec![vec![0.0; plane]; k / 2];
    let mut column = vec![0.0; k];
    for p in 0..plane {
        for (s, c) in column.iter_mut().enumerate() {
            *c = f64::from(volume.voxels()[s * plane + p]);
        }
        let (low, high) = lift_1d_float(&column);
        for (i, v) in low.into_iter().enumerate() {
            lowpass[i][p] = v;
        }
        for (i, v) in high.into_iter().enumerate() {
            highpass[i][p] = v;
        }
    }
    FloatSubbands { lowpass, highpass }
}
