//! Method comparison and report serialisation.
//!
//! Non-finite values render as `inf` / `-inf`; a coding gain that cannot be
//! computed (zero subband variance) renders as `undef`. Finite reals are
//! written with six decimals in CSV and text, and as shortest round-trip
//! numbers in JSON.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::compensate::{compensator, CompensationParams, Method};
use crate::decomposition::Rounding;
use crate::error::Result;
use crate::lifting::forward_with;
use crate::metrics::AnalysisReport;
use crate::volume::Volume;

pub const UNDEF: &str = "undef";

pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        UNDEF.to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.6}")
    }
}

fn format_opt(x: Option<f64>) -> String {
    x.map_or_else(|| UNDEF.to_string(), format_real)
}

fn json_real(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format_real(x))
    }
}

fn json_opt(x: Option<f64>) -> Value {
    x.map_or_else(|| Value::String(UNDEF.into()), json_real)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

impl AnalysisReport {
    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        pretty(&self.to_json())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "method": self.method.name(),
            "bit_depth": self.bit_depth,
            "sigma_f_sq": json_real(self.sigma_f_sq),
            "sigma_h_sq": json_real(self.sigma_h_sq),
            "sigma_l_sq": json_real(self.sigma_l_sq),
            "coding_gain": json_opt(self.coding_gain),
            "mse": json_real(self.mse),
            "psnr_db": json_real(self.psnr_db),
            "linf": self.linf,
            "lowpass_gain_db": json_opt(self.lowpass_gain_db),
            "baseline": self.baseline.map(Method::name),
            "slices": (0..self.slice_mse.len()).map(|i| json!({
                "index": i,
                "mse": json_real(self.slice_mse[i]),
                "psnr_db": json_real(self.slice_psnr_db[i]),
                "linf": self.slice_linf[i],
            })).collect::<Vec<_>>(),
        })
    }

    /// Global `key,value` rows, a blank line, then one row per lowpass slice.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let globals = [
            ("method", self.method.name().to_string()),
            ("bit_depth", self.bit_depth.to_string()),
            ("sigma_f_sq", format_real(self.sigma_f_sq)),
            ("sigma_h_sq", format_real(self.sigma_h_sq)),
            ("sigma_l_sq", format_real(self.sigma_l_sq)),
            ("coding_gain", format_opt(self.coding_gain)),
            ("mse", format_real(self.mse)),
            ("psnr_db", format_real(self.psnr_db)),
            ("linf", self.linf.to_string()),
            ("lowpass_gain_db", format_opt(self.lowpass_gain_db)),
            ("baseline", self.baseline.map_or_else(String::new, |m| m.name().to_string())),
        ];
        out.push_str("key,value\n");
        for (k, v) in globals {
            let _ = writeln!(out, "{k},{v}");
        }
        out.push_str("\nslice,mse,psnr_db,linf\n");
        for i in 0..self.slice_mse.len() {
            let _ = writeln!(
                out,
                "{i},{},{},{}",
                format_real(self.slice_mse[i]),
                format_real(self.slice_psnr_db[i]),
                self.slice_linf[i]
            );
        }
        out
    }
}

/// Reports for all four methods on one volume, in [`Method::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reports: Vec<AnalysisReport>,
}

/// Runs every method on `volume` and analyses each decomposition against the zero baseline.
pub fn compare(volume: &Volume, params: &CompensationParams, rounding: Rounding) -> Result<Comparison> {
    let mut reports = Vec::with_capacity(Method::ALL.len());
    for method in Method::ALL {
        let c = compensator(method, params)?;
        let dec = forward_with(volume, c.as_ref(), rounding)?;
        reports.push(AnalysisReport::analyze(&dec, volume)?);
    }
    let baseline = reports[0].clone();
    for r in &mut reports {
        r.set_baseline(&baseline);
    }
    Ok(Comparison { reports })
}

impl Comparison {
    pub fn report(&self, method: Method) -> Option<&AnalysisReport> {
        self.reports.iter().find(|r| r.method == method)
    }

    fn header(&self, first: &str) -> String {
        let mut h = first.to_string();
        for r in &self.reports {
            h.push(',');
            h.push_str(r.method.name());
        }
        h.push('\n');
        h
    }

    fn row(&self, name: &str, cell: impl Fn(&AnalysisReport) -> String) -> String {
        let mut line = name.to_string();
        for r in &self.reports {
            line.push(',');
            line.push_str(&cell(r));
        }
        line.push('\n');
        line
    }

    /// Subband coding gain per method, with the subband variances behind it.
    pub fn coding_gain_csv(&self) -> String {
        let mut out = self.header("metric");
        out += &self.row("G_SUB", |r| format_opt(r.coding_gain));
        out += &self.row("sigma_f_sq", |r| format_real(r.sigma_f_sq));
        out += &self.row("sigma_H_sq", |r| format_real(r.sigma_h_sq));
        out += &self.row("sigma_L_sq", |r| format_real(r.sigma_l_sq));
        out
    }

    /// Lowpass PSNR, lowpass gain over the zero method, MSE and L-infinity per method.
    pub fn lowpass_csv(&self) -> String {
        let mut out = self.header("metric");
        out += &self.row("PSNR_dB", |r| format_real(r.psnr_db));
        out += &self.row("G_LP_MSE_dB", |r| format_opt(r.lowpass_gain_db));
        out += &self.row("MSE", |r| format_real(r.mse));
        out += &self.row("Linf", |r| r.linf.to_string());
        out
    }

    /// One row per lowpass slice: PSNR for every method, then L-infinity for every method.
    pub fn per_slice_csv(&self) -> String {
        let mut out = String::from("slice");
        for r in &self.reports {
            let _ = write!(out, ",psnr_db_{}", r.method.name());
        }
        for r in &self.reports {
            let _ = write!(out, ",linf_{}", r.method.name());
        }
        out.push('\n');
        let n = self.reports.first().map_or(0, |r| r.slice_mse.len());
        for i in 0..n {
            let _ = write!(out, "{i}");
            for r in &self.reports {
                let _ = write!(out, ",{}", format_real(r.slice_psnr_db[i]));
            }
            for r in &self.reports {
                let _ = write!(out, ",{}", r.slice_linf[i]);
            }
            out.push('\n');
        }
        out
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        pretty(&self.to_json())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "methods": self.reports.iter().map(|r| r.method.name()).collect::<Vec<_>>(),
            "reports": self.reports.iter().map(AnalysisReport::to_json).collect::<Vec<_>>(),
        })
    }

    /// Fixed-width tables for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.reports.iter().map(|r| r.method.name()).collect();
        let line = |out: &mut String, label: &str, cells: Vec<String>| {
            let _ = write!(out, "{label:<14}");
            for c in cells {
                let _ = write!(out, "{c:>14}");
            }
            out.push('\n');
        };
        out.push_str("subband coding gain\n");
        line(&mut out, "", names.iter().map(|s| s.to_string()).collect());
        line(&mut out, "G_SUB", self.reports.iter().map(|r| short(r.coding_gain)).collect());
        out.push_str("\nlowpass band\n");
        line(&mut out, "", names.iter().map(|s| s.to_string()).collect());
        line(&mut out, "PSNR [dB]", self.reports.iter().map(|r| short(Some(r.psnr_db))).collect());
        line(&mut out, "G_LP,MSE [dB]", self.reports.iter().map(|r| short(r.lowpass_gain_db)).collect());
        line(&mut out, "L_inf", self.reports.iter().map(|r| r.linf.to_string()).collect());
        out
    }
}

fn short(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.3}"),
        Some(v) => format_real(v),
        None => UNDEF.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{generate_phantom, PhantomKind, PhantomSpec};

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_real(f64::NAN), "undef");
        assert_eq!(format_real(1.5), "1.500000");
        assert_eq!(json_real(f64::INFINITY), json!("inf"));
        assert_eq!(json_opt(None), json!("undef"));
    }

    #[test]
    fn static_phantom_comparison() {
        let v = generate_phantom(&PhantomSpec::new(PhantomKind::Static).with_seed(1), 4, 24, 24, 12).unwrap();
        let cmp = compare(&v, &CompensationParams::default(), Rounding::Paper).unwrap();
        let names: Vec<_> = cmp.reports.iter().map(|r| r.method).collect();
        assert_eq!(names, Method::ALL);
        let block = cmp.report(Method::Block).unwrap();
        assert_eq!(block.mse, 0.0);
        assert_eq!(block.psnr_db, f64::INFINITY);
        assert_eq!(block.coding_gain, None);
        let csv = cmp.lowpass_csv();
        assert!(csv.starts_with("metric,zero,mesh,block,block+fill\n"));
        assert!(csv.contains("PSNR_dB,inf,inf,inf,inf\n"));
        assert!(cmp.coding_gain_csv().contains("G_SUB,undef,undef,undef,undef\n"));
        assert_eq!(cmp.per_slice_csv().lines().count(), 3);
        let json = cmp.to_json().to_string();
        assert!(json.contains("\"psnr_db\":\"inf\""));
    }

    #[test]
    fn single_report_csv_layout() {
        let v = generate_phantom(&PhantomSpec::new(PhantomKind::Noise).with_noise(3).with_seed(2), 5, 8, 8, 8).unwrap();
        let cmp = compare(&v, &CompensationParams::default(), Rounding::Paper).unwrap();
        let csv = cmp.reports[2].to_csv();
        assert!(csv.starts_with("key,value\nmethod,block\n"));
        assert!(csv.contains("\nslice,mse,psnr_db,linf\n0,"));
        assert!(csv.contains("baseline,zero\n"));
        assert_eq!(csv.lines().filter(|l| l.starts_with(char::is_numeric)).count(), 3);
    }
}
