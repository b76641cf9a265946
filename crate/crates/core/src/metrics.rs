//! Transform statistics: subband coding gain, lowpass MSE / PSNR / gain and
//! the L-infinity distance between lowpass slices and their corresponding
//! (even) original slices.

use crate::decomposition::Decomposition;
use crate::error::{Error, Result, Subband};
use crate::volume::{max_intensity, Slice, Volume};

/// 5/3 analysis lowpass taps.
pub const LOWPASS_TAPS: [f64; 5] = [-1.0 / 8.0, 2.0 / 8.0, 6.0 / 8.0, 2.0 / 8.0, -1.0 / 8.0];
/// 5/3 analysis highpass taps.
pub const HIGHPASS_TAPS: [f64; 3] = [-0.5, 1.0, -0.5];

/// Squared l2 norm of the lowpass taps, `46/64`.
pub const LOWPASS_L2_SQ: f64 = 0.71875;
/// Squared l2 norm of the highpass taps.
pub const HIGHPASS_L2_SQ: f64 = 1.5;

pub fn squared_l2_norm(taps: &[f64]) -> f64 {
    taps.iter().map(|t| t * t).sum()
}

/// Population variance (divisor = count) by two passes.
fn variance_of(values: impl Iterator<Item = i64> + Clone) -> f64 {
    let (sum, count) = values.clone().fold((0i128, 0u64), |(s, c), v| (s + i128::from(v), c + 1));
    if count == 0 {
        return 0.0;
    }
    let mean = sum as f64 / count as f64;
    let ss: f64 = values.map(|v| {
        let d = v as f64 - mean;
        d * d
    }).sum();
    ss / count as f64
}

/// `sigma_f^2 = (1/MNK) * sum (f - mu)^2`.
pub fn volume_variance(volume: &Volume) -> f64 {
    variance_of(volume.voxels().iter().map(|&v| i64::from(v)))
}

/// Mean-removed variance over all coefficients of a set of slices.
pub fn subband_variance(slices: &[Slice]) -> f64 {
    variance_of(slices.iter().flat_map(|s| s.data().iter().map(|&v| i64::from(v))))
}

/// `G = sigma_f^2 / (sqrt(l_H^2 sigma_H^2) * sqrt(l_L^2 sigma_L^2))`.
pub fn coding_gain(sigma_f_sq: f64, sigma_h_sq: f64, sigma_l_sq: f64) -> Result<f64> {
    if sigma_h_sq <= 0.0 {
        return Err(Error::Degenerate(Subband::Highpass));
    }
    if sigma_l_sq <= 0.0 {
        return Err(Error::Degenerate(Subband::Lowpass));
    }
    Ok(sigma_f_sq / ((HIGHPASS_L2_SQ * sigma_h_sq).sqrt() * (LOWPASS_L2_SQ * sigma_l_sq).sqrt()))
}

/// Subband coding gain of a decomposition of `volume`.
pub fn subband_gain(dec: &Decomposition, volume: &Volume) -> Result<f64> {
    check_pair(dec, volume)?;
    coding_gain(
        volume_variance(volume),
        subband_variance(dec.highpass()),
        subband_variance(dec.lowpass()),
    )
}

fn check_pair(dec: &Decomposition, volume: &Volume) -> Result<()> {
    if dec.dims() != (volume.num_slices(), volume.rows(), volume.cols()) {
        return Err(Error::Dimension(format!(
            "decomposition {:?} vs volume {:?}",
            dec.dims(),
            (volume.num_slices(), volume.rows(), volume.cols())
        )));
    }
    Ok(())
}

fn check_lowpass(lowpass: &[Slice], volume: &Volume) -> Result<()> {
    if lowpass.len() != volume.num_slices().div_ceil(2)
        || lowpass.iter().any(|s| s.dims() != (volume.rows(), volume.cols()))
    {
        return Err(Error::Dimension(format!(
            "{} lowpass slices do not match a {}x{}x{} volume",
            lowpass.len(),
            volume.num_slices(),
            volume.rows(),
            volume.cols()
        )));
    }
    Ok(())
}

/// Lowpass MSE against the corresponding slices `f_{2i}`: `(global, per slice)`.
///
/// The global value divides by `M * N * K'` with `K' = ceil(K/2)` lowpass slices.
pub fn lowpass_mse(lowpass: &[Slice], volume: &Volume) -> Result<(f64, Vec<f64>)> {
    check_lowpass(lowpass, volume)?;
    let plane = volume.rows() * volume.cols();
    let mut total = 0u128;
    let per_slice = lowpass
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let sse: u128 = l
                .data()
                .iter()
                .zip(volume.slice_voxels(2 * i))
                .map(|(&a, &b)| {
                    let d = i64::from(a) - i64::from(b);
                    (d * d) as u128
                })
                .sum();
            total += sse;
            sse as f64 / plane as f64
        })
        .collect();
    Ok((total as f64 / (plane * lowpass.len()) as f64, per_slice))
}

/// `10 log10(I_max^2 / mse)`; `+inf` for `mse == 0`.
pub fn lowpass_psnr(mse: f64, bit_depth: u8) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    let imax = f64::from(max_intensity(bit_depth));
    10.0 * (imax * imax / mse).log10()
}

/// `10 log10(MSE_zero / MSE_dcm)` in dB.
///
/// `+inf` when only the compensated MSE is zero, `-inf` when only the
/// baseline MSE is zero, and `0` when both are.
pub fn lowpass_gain(mse_dcm: f64, mse_zero: f64) -> f64 {
    match (mse_dcm == 0.0, mse_zero == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => 10.0 * (mse_zero / mse_dcm).log10(),
    }
}

/// Maximum absolute lowpass deviation from `f_{2i}`: `(global, per slice)`.
pub fn linf_norm(lowpass: &[Slice], volume: &Volume) -> Result<(u32, Vec<u32>)> {
    check_lowpass(lowpass, volume)?;
    let per_slice: Vec<u32> = lowpass
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.data()
                .iter()
                .zip(volume.slice_voxels(2 * i))
                .map(|(&a, &b)| (i64::from(a) - i64::from(b)).unsigned_abs() as u32)
                .max()
                .unwrap_or(0)
        })
        .collect();
    Ok((per_slice.iter().copied().max().unwrap_or(0), per_slice))
}

/// Every statistic for one (volume, method) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub method: crate::Method,
    pub bit_depth: u8,
    pub sigma_f_sq: f64,
    pub sigma_h_sq: f64,
    pub sigma_l_sq: f64,
    /// `None` when a subband variance is zero.
    pub coding_gain: Option<f64>,
    pub mse: f64,
    pub psnr_db: f64,
    pub linf: u32,
    pub slice_mse: Vec<f64>,
    pub slice_psnr_db: Vec<f64>,
    pub slice_linf: Vec<u32>,
    /// Lowpass gain against [`AnalysisReport::baseline`], once set.
    pub lowpass_gain_db: Option<f64>,
    pub baseline: Option<crate::Method>,
}

impl AnalysisReport {
    pub fn analyze(dec: &Decomposition, volume: &Volume) -> Result<Self> {
        check_pair(dec, volume)?;
        let sigma_f_sq = volume_variance(volume);
        let sigma_h_sq = subband_variance(dec.highpass());
        let sigma_l_sq = subband_variance(dec.lowpass());
        let (mse, slice_mse) = lowpass_mse(dec.lowpass(), volume)?;
        let (linf, slice_linf) = linf_norm(dec.lowpass(), volume)?;
        let b = volume.bit_depth();
        Ok(Self {
            method: dec.method(),
            bit_depth: b,
            sigma_f_sq,
            sigma_h_sq,
            sigma_l_sq,
            coding_gain: coding_gain(sigma_f_sq, sigma_h_sq, sigma_l_sq).ok(),
            mse,
            psnr_db: lowpass_psnr(mse, b),
            linf,
            slice_psnr_db: slice_mse.iter().map(|&m| lowpass_psnr(m, b)).collect(),
            slice_mse,
            slice_linf,
            lowpass_gain_db: None,
            baseline: None,
        })
    }

    /// Sets the lowpass gain relative to `baseline` (normally the zero method).
    pub fn set_baseline(&mut self, baseline: &AnalysisReport) {
        self.lowpass_gain_db = Some(lowpass_gain(self.mse, baseline.mse));
        self.baseline = Some(baseline.method);
    }
}
