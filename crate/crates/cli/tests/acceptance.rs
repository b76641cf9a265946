//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::fs;
use std::process::Command;
use std::time::Instant;

use mclift::block::{estimate_mvf, inverse_warp, scatter, FillMode, MotionVector, MotionVectorField};
use mclift::lifting::lift_1d_float;
use mclift::mesh::estimate_mesh;
use mclift::metrics::{lowpass_psnr, subband_gain, HIGHPASS_L2_SQ, LOWPASS_L2_SQ};
use mclift::phantom::XorShift64Star;
use mclift::{
    compare, compensator, forward, generate_phantom, inverse, save_volume, CompensationParams, Error, Method,
    PhantomKind, PhantomSpec, Rounding, Slice, Subband, Volume, ZeroCompensator,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_volume(rng: &mut XorShift64Star, seed: u64) -> Volume {
    let k = 2 + (rng.next_u64() % 16) as usize;
    let bits = if seed.is_multiple_of(2) { 8 } else { 12 };
    if seed.is_multiple_of(3) {
        let max = (1u64 << bits) - 1;
        let data = (0..k * 32 * 32).map(|_| (rng.next_u64() % (max + 1)) as u16).collect();
        return Volume::new(k, 32, 32, bits, data).unwrap();
    }
    let kind = match seed % 3 {
        1 => PhantomKind::GlobalTranslation {
            dy: rng.symmetric(3) as i32,
            dx: rng.symmetric(3) as i32,
        },
        _ => PhantomKind::EllipticDeformation { amplitude: 3 },
    };
    generate_phantom(&PhantomSpec::new(kind).with_noise(4).with_seed(seed), k, 32, 32, bits).unwrap()
}

fn perfect_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = XorShift64Star::new(2024);
    let params = CompensationParams::default();
    let mut runs = 0;
    for seed in 0..100u64 {
        let v = random_volume(&mut rng, seed);
        for method in Method::ALL {
            let c = compensator(method, &params).map_err(|e| e.to_string())?;
            let dec = forward(&v, c.as_ref()).map_err(|e| e.to_string())?;
            let back = inverse(&dec, c.as_ref()).map_err(|e| e.to_string())?;
            if let Some(at) = v.first_mismatch(&back) {
                return Err(format!("seed {seed} {method}: first mismatch at {at:?}"));
            }
            runs += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{runs} bit-exact reconstructions in {secs:.2} s"))
}

fn filter_bank_equivalence() -> Outcome {
    let mut rng = XorShift64Star::new(7);
    let mut worst = 0.0f64;
    let mut samples = 0;
    for len in 2..=64usize {
        for _ in 0..8 {
            let x: Vec<f64> = (0..len).map(|_| (rng.next_u64() % 4096) as f64).collect();
            let (low, high) = lift_1d_float(&x);
            for (i, h) in high.iter().enumerate() {
                let c = 2 * i + 1;
                if c + 1 < len {
                    worst = worst.max((h - (x[c] - 0.5 * x[c - 1] - 0.5 * x[c + 1])).abs());
                    samples += 1;
                }
            }
            for (i, l) in low.iter().enumerate() {
                let c = 2 * i;
                if c >= 2 && c + 2 < len {
                    let direct =
                        -0.125 * x[c - 2] + 0.25 * x[c - 1] + 0.75 * x[c] + 0.25 * x[c + 1] - 0.125 * x[c + 2];
                    worst = worst.max((l - direct).abs());
                    samples += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max abs error {worst:e}"))?;
    Ok(format!("{samples} interior samples, max abs error {worst:e}"))
}

fn brute_sad(
    reference: &Slice,
    current: &Slice,
    (top, left, h, w): (usize, usize, usize, usize),
    range: i32,
) -> u64 {
    let (rows, cols) = (reference.rows() as i32, reference.cols() as i32);
    let mut best = u64::MAX;
    for dy in -range..=range {
        for dx in -range..=range {
            let (t, l) = (top as i32 + dy, left as i32 + dx);
            if t < 0 || l < 0 || t + h as i32 > rows || l + w as i32 > cols {
                continue;
            }
            let mut s = 0u64;
            for y in 0..h {
                for x in 0..w {
                    s += (current.get(top + y, left + x) - reference.get(t as usize + y, l as usize + x))
                        .unsigned_abs() as u64;
                }
            }
            best = best.min(s);
        }
    }
    best
}

fn sad_of(reference: &Slice, current: &Slice, (top, left, h, w): (usize, usize, usize, usize), v: MotionVector) -> u64 {
    let mut s = 0u64;
    for y in top..top + h {
        for x in left..left + w {
            let r = reference.get((y as i32 + v.dy) as usize, (x as i32 + v.dx) as usize);
            s += (current.get(y, x) - r).unsigned_abs() as u64;
        }
    }
    s
}

fn motion_search_oracle() -> Outcome {
    let mut rng = XorShift64Star::new(99);
    let (b, g, w, r) = (8usize, 8usize, 7usize, 6i32);
    let mut windows = 0;
    for pair in 0..50 {
        let reference = Slice::from_fn(64, 64, |_, _| (rng.next_u64() % 256) as i32);
        let (sy, sx) = (rng.symmetric(4) as i32, rng.symmetric(4) as i32);
        let current = Slice::from_fn(64, 64, |m, n| {
            let y = (m as i32 + sy).clamp(0, 63) as usize;
            let x = (n as i32 + sx).clamp(0, 63) as usize;
            reference.get(y, x) + rng.symmetric(2) as i32
        });
        let field = estimate_mvf(&reference, &current, b, r as usize).map_err(|e| e.to_string())?;
        for i in 0..8 {
            for j in 0..8 {
                let rect = (i * b, j * b, b, b);
                let (got, want) = (sad_of(&reference, &current, rect, field.block_vector(i, j)), brute_sad(&reference, &current, rect, r));
                ensure(got == want, || format!("pair {pair} block ({i},{j}): SAD {got} vs {want}"))?;
                windows += 1;
            }
        }
        let mesh = estimate_mesh(&reference, &current, g, w, r as usize).map_err(|e| e.to_string())?;
        for i in 1..8 {
            for j in 1..8 {
                let (py, px) = (i * g, j * g);
                let rect = (py - w / 2, px - w / 2, w, w);
                let (got, want) = (sad_of(&reference, &current, rect, mesh.vertex(i, j)), brute_sad(&reference, &current, rect, r));
                ensure(got == want, || format!("pair {pair} vertex ({i},{j}): SAD {got} vs {want}"))?;
                windows += 1;
            }
        }
    }
    Ok(format!("50 pairs, {windows} windows match exhaustive SAD"))
}

fn translation_comparison() -> Result<mclift::Comparison, String> {
    let spec = PhantomSpec::new(PhantomKind::GlobalTranslation { dy: 2, dx: 3 }).with_noise(4).with_seed(0);
    let v = generate_phantom(&spec, 16, 128, 128, 12).map_err(|e| e.to_string())?;
    compare(&v, &CompensationParams::default(), Rounding::Paper).map_err(|e| e.to_string())
}

fn coding_gain_improvement(cmp: &mclift::Comparison) -> Outcome {
    let g = |m| cmp.report(m).and_then(|r| r.coding_gain).ok_or_else(|| format!("{m}: no coding gain"));
    let ratio = g(Method::Block)? / g(Method::Zero)?;
    ensure(ratio >= 2.0, || format!("G_block / G_zero = {ratio:.3}"))?;
    Ok(format!("G_block / G_zero = {ratio:.3}"))
}

fn lowpass_improvement(cmp: &mclift::Comparison) -> Outcome {
    let gain = cmp
        .report(Method::Block)
        .and_then(|r| r.lowpass_gain_db)
        .ok_or("block: no lowpass gain")?;
    ensure(gain >= 8.0, || format!("G_LP,MSE = {gain:.3} dB"))?;
    Ok(format!("G_LP,MSE(block) = {gain:.3} dB"))
}

fn degenerate_handling() -> Outcome {
    let constant = Volume::new(6, 16, 16, 12, vec![1234; 6 * 256]).unwrap();
    let dec = forward(&constant, &ZeroCompensator).map_err(|e| e.to_string())?;
    match subband_gain(&dec, &constant) {
        Err(Error::Degenerate(Subband::Input | Subband::Highpass | Subband::Lowpass)) => {}
        other => return Err(format!("constant volume gave {other:?}")),
    }
    let v = generate_phantom(&PhantomSpec::new(PhantomKind::Static).with_seed(5), 8, 64, 64, 12).unwrap();
    let cmp = compare(&v, &CompensationParams::default(), Rounding::Paper).map_err(|e| e.to_string())?;
    let mse = cmp.report(Method::Block).unwrap().mse;
    ensure(mse == 0.0, || format!("static phantom block MSE = {mse}"))?;
    Ok("degenerate error reported; static block MSE = 0".into())
}

fn metric_constants() -> Outcome {
    ensure(LOWPASS_L2_SQ == 0.71875 && HIGHPASS_L2_SQ == 1.5, || {
        format!("l_L^2 = {LOWPASS_L2_SQ}, l_H^2 = {HIGHPASS_L2_SQ}")
    })?;
    let psnr = lowpass_psnr(1.0, 12);
    ensure((psnr - 72.245).abs() <= 0.001, || format!("PSNR(mse=1, B=12) = {psnr}"))?;
    Ok(format!("l_L^2 = 0.71875, l_H^2 = 1.5, PSNR = {psnr:.4} dB"))
}

fn hole_accounting() -> Outcome {
    // 12x12 slice of 4x4 blocks; neighbouring blocks pushed toward and away
    // from each other so both overlaps and holes appear
    let vectors: Vec<MotionVector> = [(0, 2), (0, -2), (1, 0), (-1, 1), (0, 0), (2, -1), (0, 1), (-2, 0), (1, 1)]
        .iter()
        .map(|&(dy, dx)| MotionVector::new(dy, dx))
        .collect();
    let field = MotionVectorField::new(4, 2, 3, 3, vectors.clone()).map_err(|e| e.to_string())?;
    let s = Slice::from_fn(12, 12, |m, n| (m * 12 + n) as i32 * 3 - 100);
    let mut sum = vec![0i64; 144];
    let mut count = vec![0u32; 144];
    for m in 0..12i32 {
        for n in 0..12i32 {
            let v = vectors[(m / 4 * 3 + n / 4) as usize];
            let (tm, tn) = (m + v.dy, n + v.dx);
            if (0..12).contains(&tm) && (0..12).contains(&tn) {
                sum[(tm * 12 + tn) as usize] += i64::from(s.get(m as usize, n as usize));
                count[(tm * 12 + tn) as usize] += 1;
            }
        }
    }
    let cov = scatter(&s, &field).map_err(|e| e.to_string())?;
    ensure(cov.sums() == sum.as_slice() && cov.counts() == count.as_slice(), || "scatter differs from enumeration".into())?;
    let holes = count.iter().filter(|&&c| c == 0).count();
    let multi = count.iter().filter(|&&c| c > 1).count();
    ensure(holes > 0 && multi > 0, || format!("construction has {holes} holes, {multi} overlaps"))?;
    let plain = inverse_warp(&s, &field, FillMode::None).map_err(|e| e.to_string())?;
    for idx in 0..144 {
        let want = if count[idx] == 0 { 0 } else { sum[idx].div_euclid(i64::from(count[idx])) as i32 };
        ensure(plain.data()[idx] == want, || format!("pixel {idx}: {} vs {want}", plain.data()[idx]))?;
    }
    // every hole must be assigned from a connected neighbour: with a slice
    // of all-distinct positive values no output stays at the zero default
    let positive = Slice::from_fn(12, 12, |m, n| (m * 12 + n) as i32 + 1);
    let filled = inverse_warp(&positive, &field, FillMode::NearestNeighbor).map_err(|e| e.to_string())?;
    let left = filled.data().iter().filter(|&&x| x == 0).count();
    ensure(left == 0, || format!("{left} pixels left unconnected after fill"))?;
    Ok(format!("{holes} unconnected and {multi} multiple-connected pixels match; fill leaves 0 holes"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = PhantomSpec::new(PhantomKind::EllipticDeformation { amplitude: 3 }).with_noise(4).with_seed(8);
    let v = generate_phantom(&spec, 9, 48, 48, 12).unwrap();
    let input = dir.path().join("in.mcwv");
    save_volume(&v, &input).map_err(|e| e.to_string())?;
    let run = |out: &str, format: &str| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_mclift"))
            .args(["compare", "--format", format, "-i"])
            .arg(&input)
            .arg("-o")
            .arg(dir.path().join(out))
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())
    };
    let files = [("csv", vec!["coding_gain.csv", "lowpass.csv", "per_slice.csv"]), ("json", vec!["report.json"])];
    let mut compared = 0;
    for (format, names) in files {
        run(&format!("{format}_a"), format)?;
        run(&format!("{format}_b"), format)?;
        for name in names {
            let a = fs::read(dir.path().join(format!("{format}_a")).join(name)).map_err(|e| e.to_string())?;
            let b = fs::read(dir.path().join(format!("{format}_b")).join(name)).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{name} differs between runs"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} report files byte-identical across runs"))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("PASS {n} {name}: {detail}"),
        Err(detail) => {
            failed += 1;
            println!("FAIL {n} {name}: {detail}");
        }
    };
    report(1, "perfect reconstruction", perfect_reconstruction());
    report(2, "filter-bank equivalence", filter_bank_equivalence());
    report(3, "motion-search oracle", motion_search_oracle());
    match translation_comparison() {
        Ok(cmp) => {
            report(4, "coding-gain improvement", coding_gain_improvement(&cmp));
            report(5, "lowpass-quality improvement", lowpass_improvement(&cmp));
        }
        Err(e) => {
            report(4, "coding-gain improvement", Err(e.clone()));
            report(5, "lowpass-quality improvement", Err(e));
        }
    }
    report(6, "degenerate handling", degenerate_handling());
    report(7, "metric constants", metric_constants());
    report(8, "hole accounting", hole_accounting());
    report(9, "determinism", determinism());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
