//! Synthetic CT-like test volumes.
//!
//! Every phantom starts from a base slice: a dim background, a body ellipse,
//! a few seeded inner ellipses ("organs") and a smooth sinusoidal texture
//! inside the body. The kind then decides how slices relate to each other:
//!
//! * `Static`: every slice is the base slice.
//! * `GlobalTranslation { dy, dx }`: slice `k` is the base translated by
//!   `k * (dy, dx)` with clamp-to-edge, i.e. `f_k[p] = base[clamp(p - k*(dy, dx))]`.
//! * `EllipticDeformation { amplitude }`: slice `k` is the base scaled about
//!   the centre so the body boundary moves by `amplitude * sin(2*pi*k/8)` voxels.
//! * `Noise`: the base slice repeated; meant to be used with `noise_amplitude`.
//!
//! Noise, when `noise_amplitude = a > 0`, is drawn per voxel in slice-major
//! order from [`XorShift64Star`] seeded with `splitmix64(seed)`: the draw is
//! `(next() >> 11) % (2a + 1) - a`, added and clamped to `[0, 2^B - 1]`.

use crate::error::{Error, Result};
use crate::volume::{check_shape, max_intensity, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    Static,
    GlobalTranslation { dy: i32, dx: i32 },
    EllipticDeformation { amplitude: u32 },
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Uniform noise half-width in intensity levels.
    pub noise_amplitude: u32,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind) -> Self {
        Self {
            kind,
            noise_amplitude: 0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, amplitude: u32) -> Self {
        self.noise_amplitude = amplitude;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Largest per-slice displacement this spec induces, in voxels.
    pub fn displacement_amplitude(&self) -> u32 {
        match self.kind {
            PhantomKind::GlobalTranslation { dy, dx } => dy.unsigned_abs().max(dx.unsigned_abs()),
            PhantomKind::EllipticDeformation { amplitude } => amplitude,
            PhantomKind::Static | PhantomKind::Noise => 0,
        }
    }
}

/// xorshift64* generator; the exact sequence is part of the phantom contract.
#[derive(Debug, Clone)]
pub struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub fn new(seed: u64) -> Self {
        let state = splitmix64(seed);
        Self {
            state: if state == 0 { 0x9E37_79B9_7F4A_7C15 } else { state },
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform-ish integer in `[-a, a]`.
    pub fn symmetric(&mut self, a: u32) -> i64 {
        let span = 2 * u64::from(a) + 1;
        ((self.next_u64() >> 11) % span) as i64 - i64::from(a)
    }

    /// Real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Ellipse {
    cy: f64,
    cx: f64,
    ry: f64,
    rx: f64,
    value: f64,
}

impl Ellipse {
    fn contains(&self, y: f64, x: f64) -> bool {
        let u = (y - self.cy) / self.ry;
        let v = (x - self.cx) / self.rx;
        u * u + v * v <= 1.0
    }
}

/// Base intensity image as reals, row-major `rows x cols`.
fn base_pattern(rows: usize, cols: usize, bit_depth: u8, seed: u64) -> Vec<f64> {
    let imax = f64::from(max_intensity(bit_depth));
    let mut rng = XorShift64Star::new(seed ^ 0x005E_ED0F_BA5E);
    let cy = (rows as f64 - 1.0) / 2.0;
    let cx = (cols as f64 - 1.0) / 2.0;
    let body = Ellipse {
        cy,
        cx,
        ry: 0.42 * rows as f64,
        rx: 0.45 * cols as f64,
        value: 0.35 * imax,
    };
    let organs: Vec<Ellipse> = (0..5)
        .map(|_| {
            let oy = cy + (rng.unit() - 0.5) * body.ry;
            let ox = cx + (rng.unit() - 0.5) * body.rx;
            Ellipse {
                cy: oy,
                cx: ox,
                ry: (0.08 + 0.12 * rng.unit()) * rows as f64,
                rx: (0.08 + 0.12 * rng.unit()) * cols as f64,
                value: (0.15 + 0.65 * rng.unit()) * imax,
            }
        })
        .collect();
    let phase_y = rng.unit() * std::f64::consts::TAU;
    let phase_x = rng.unit() * std::f64::consts::TAU;
    let background = 0.05 * imax;

    let mut out = Vec::with_capacity(rows * cols);
    for m in 0..rows {
        for n in 0..cols {
            let (y, x) = (m as f64, n as f64);
            let mut v = background;
            if body.contains(y, x) {
                v = body.value;
                if let Some(o) = organs.iter().rev().find(|o| o.contains(y, x)) {
                    v = o.value;
                }
                let texture = (std::f64::consts::TAU * y / 11.0 + phase_y).sin()
                    * (std::f64::consts::TAU * x / 7.0 + phase_x).cos();
                v += 0.06 * imax * texture;
            }
            out.push(v.round().clamp(0.0, imax));
        }
    }
    out
}

/// Generates a deterministic phantom volume of `slices x rows x cols` voxels.
pub fn generate_phantom(spec: &PhantomSpec, slices: usize, rows: usize, cols: usize, bit_depth: u8) -> Result<Volume> {
    check_shape(slices, rows, cols, bit_depth)?;
    let limit = rows.min(cols) / 2;
    if spec.displacement_amplitude() as usize > limit {
        return Err(Error::Parameter(format!(
            "displacement {} exceeds min(M, N)/2 = {limit}",
            spec.displacement_amplitude()
        )));
    }
    let imax = max_intensity(bit_depth);
    if spec.noise_amplitude > imax {
        return Err(Error::Parameter(format!(
            "noise amplitude {} exceeds maximum intensity {imax}",
            spec.noise_amplitude
        )));
    }
    let base = base_pattern(rows, cols, bit_depth, spec.seed);
    let base_at = |m: isize, n: isize| -> f64 {
        let m = m.clamp(0, rows as isize - 1) as usize;
        let n = n.clamp(0, cols as isize - 1) as usize;
        base[m * cols + n]
    };

    let mut data = Vec::with_capacity(slices * rows * cols);
    for k in 0..slices {
        for m in 0..rows {
            for n in 0..cols {
                let v = match spec.kind {
                    PhantomKind::Static | PhantomKind::Noise => base[m * cols + n],
                    PhantomKind::GlobalTranslation { dy, dx } => {
                        let k = k as isize;
                        base_at(m as isize - k * dy as isize, n as isize - k * dx as isize)
                    }
                    PhantomKind::EllipticDeformation { amplitude } => {
                        let radius = 0.45 * rows.max(cols) as f64;
                        let offset = f64::from(amplitude)
                            * (std::f64::consts::TAU * k as f64 / 8.0).sin();
                        let scale = 1.0 + offset / radius;
                        let cy = (rows as f64 - 1.0) / 2.0;
                        let cx = (cols as f64 - 1.0) / 2.0;
                        let sy = cy + (m as f64 - cy) / scale;
                        let sx = cx + (n as f64 - cx) / scale;
                        base_at(sy.round() as isize, sx.round() as isize)
                    }
                };
                data.push(v as i64);
            }
        }
    }

    if spec.noise_amplitude > 0 {
        let mut rng = XorShift64Star::new(spec.seed);
        for v in &mut data {
            *v = (*v + rng.symmetric(spec.noise_amplitude)).clamp(0, i64::from(imax));
        }
    }
    Volume::new(
        slices,
        rows,
        cols,
        bit_depth,
        data.into_iter().map(|v| v as u16).collect(),
    )
}
