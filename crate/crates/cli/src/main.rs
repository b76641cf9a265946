//! `mclift` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 format or I/O error.

mod args;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use mclift::phantom::XorShift64Star;
use mclift::{
    compare, compensator, forward_with, generate_phantom, inverse, load_decomposition, load_volume,
    save_decomposition, save_volume, AnalysisReport, Error, Method, PhantomKind, PhantomSpec, Volume,
};

use crate::args::{
    Cli, Command, CompareArgs, GenPhantomArgs, InverseArgs, KindArg, MetricsArgs, ReportFormat, RoundtripArgs,
    TransformArgs,
};

enum Failure {
    Verification(String),
    Usage(String),
    Format(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Format(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Usage(m) | Failure::Format(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Parameter(_) => Failure::Usage(msg),
            Error::Format { .. } | Error::Io(_) | Error::Dimension(_) | Error::MethodMismatch { .. } => {
                Failure::Format(msg)
            }
            Error::AtSlice { .. } if e.is_format() => Failure::Format(msg),
            _ => Failure::Verification(msg),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenPhantom(a) => gen_phantom(a),
        Command::Transform(a) => transform(a),
        Command::Inverse(a) => inverse_cmd(a),
        Command::Roundtrip(a) => roundtrip(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Metrics(a) => metrics(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn gen_phantom(a: GenPhantomArgs) -> CmdResult {
    let kind = match a.kind {
        KindArg::Static => PhantomKind::Static,
        KindArg::Translate => PhantomKind::GlobalTranslation {
            dy: a.shift.0,
            dx: a.shift.1,
        },
        KindArg::Elliptic => PhantomKind::EllipticDeformation { amplitude: a.amplitude },
        KindArg::Noise => PhantomKind::Noise,
    };
    let spec = PhantomSpec::new(kind).with_noise(a.noise).with_seed(a.seed);
    let (k, m, n) = a.dims;
    let volume = generate_phantom(&spec, k, m, n, a.bits)?;
    save_volume(&volume, &a.output)?;
    Ok(())
}

fn transform(a: TransformArgs) -> CmdResult {
    let volume = load_volume(&a.input)?;
    let c = compensator(a.method.into(), &a.compensation.params())?;
    let dec = forward_with(&volume, c.as_ref(), a.compensation.rounding.into())?;
    save_decomposition(&dec, &a.output)?;
    Ok(())
}

fn inverse_cmd(a: InverseArgs) -> CmdResult {
    let dec = load_decomposition(&a.input)?;
    let c = compensator(dec.method(), &Default::default())?;
    let volume = inverse(&dec, c.as_ref())?;
    if let Some(expect) = &a.expect {
        check_equal(&load_volume(expect)?, &volume, dec.method())?;
    }
    save_volume(&volume, &a.output)?;
    Ok(())
}

fn check_equal(original: &Volume, restored: &Volume, method: Method) -> CmdResult {
    match original.first_mismatch(restored) {
        None => {
            println!("PASS {method}");
            Ok(())
        }
        Some((k, m, n)) => {
            println!("FAIL {method}: first mismatch at slice {k}, row {m}, col {n}");
            Err(Failure::Verification(format!("{method} reconstruction differs from the original")))
        }
    }
}

/// Seeded volume for the sweep mode: cycles through static, translating,
/// deforming and heavy-noise phantoms.
fn sweep_volume(seed: u64, dims: (usize, usize, usize)) -> mclift::Result<Volume> {
    let (k, m, n) = dims;
    let mut rng = XorShift64Star::new(seed);
    let bits = if seed.is_multiple_of(2) { 8 } else { 12 };
    let limit = (m.min(n) / 2).min(3) as u32;
    let spec = match seed % 4 {
        0 => PhantomSpec::new(PhantomKind::Static).with_noise(2),
        1 => PhantomSpec::new(PhantomKind::GlobalTranslation {
            dy: rng.symmetric(limit) as i32,
            dx: rng.symmetric(limit) as i32,
        })
        .with_noise(2),
        2 => PhantomSpec::new(PhantomKind::EllipticDeformation { amplitude: limit }).with_noise(2),
        _ => PhantomSpec::new(PhantomKind::Noise).with_noise(1 << (bits - 1)),
    };
    generate_phantom(&spec.with_seed(seed), k, m, n, bits)
}

fn roundtrip(a: RoundtripArgs) -> CmdResult {
    let params = a.compensation.params();
    let rounding = a.compensation.rounding.into();
    let methods: Vec<Method> = match a.method {
        Some(m) => vec![m.into()],
        None => Method::ALL.to_vec(),
    };

    if let Some(count) = a.seeds {
        let mut failures = 0usize;
        for seed in 0..count {
            let volume = sweep_volume(seed, a.dims)?;
            for &method in &methods {
                let c = compensator(method, &params)?;
                let dec = forward_with(&volume, c.as_ref(), rounding)?;
                if inverse(&dec, c.as_ref())? != volume {
                    println!("FAIL seed {seed} {method}");
                    failures += 1;
                }
            }
        }
        let runs = count as usize * methods.len();
        return if failures == 0 {
            println!("PASS {runs}/{runs} reconstructions over {count} seeds");
            Ok(())
        } else {
            println!("FAIL {failures}/{runs} reconstructions");
            Err(Failure::Verification(format!("{failures} reconstructions differ")))
        };
    }

    let input = a.input.as_ref().expect("clap requires --input without --seeds");
    let volume = load_volume(input)?;
    if let Some(path) = &a.decomposition {
        let dec = load_decomposition(path)?;
        let c = compensator(dec.method(), &params)?;
        let restored = inverse(&dec, c.as_ref()).map_err(|e| match Failure::from(e) {
            Failure::Usage(m) => Failure::Verification(m),
            other => other,
        })?;
        return check_equal(&volume, &restored, dec.method());
    }

    let mut failed = false;
    for method in methods {
        let c = compensator(method, &params)?;
        let dec = forward_with(&volume, c.as_ref(), rounding)?;
        let restored = inverse(&dec, c.as_ref())?;
        failed |= check_equal(&volume, &restored, method).is_err();
    }
    if failed {
        Err(Failure::Verification("reconstruction mismatch".into()))
    } else {
        Ok(())
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::Format(format!("{}: {e}", path.display())))
}

fn compare_cmd(a: CompareArgs) -> CmdResult {
    let volume = load_volume(&a.input)?;
    let cmp = compare(&volume, &a.compensation.params(), a.compensation.rounding.into())?;
    fs::create_dir_all(&a.output).map_err(|e| Failure::Format(format!("{}: {e}", a.output.display())))?;
    match a.format {
        ReportFormat::Csv => {
            write(&a.output.join("coding_gain.csv"), cmp.coding_gain_csv())?;
            write(&a.output.join("lowpass.csv"), cmp.lowpass_csv())?;
            write(&a.output.join("per_slice.csv"), cmp.per_slice_csv())?;
        }
        ReportFormat::Json => {
            write(&a.output.join("report.json"), cmp.to_json_string())?;
        }
    }
    print!("{}", cmp.render_text());
    Ok(())
}

fn metrics(a: MetricsArgs) -> CmdResult {
    let volume = load_volume(&a.input)?;
    let dec = load_decomposition(&a.decomposition)?;
    let mut report = AnalysisReport::analyze(&dec, &volume)?;
    let zero = forward_with(&volume, &mclift::ZeroCompensator, dec.rounding())?;
    report.set_baseline(&AnalysisReport::analyze(&zero, &volume)?);
    let text = match a.format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json_string(),
    };
    match &a.output {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
