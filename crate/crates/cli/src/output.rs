//! CSV and JSON artifacts.
//!
//! Numbers use C's `%.17g`, which round-trips every `f64`. Missing values are
//! empty CSV fields and omitted JSON keys. Files are written to a temporary
//! sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{Engine, Format};
use crate::error::Result;
use crate::experiment::{RatioReport, RateReport, RunOutput, SeriesRow};

/// `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= P {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}

/// Column names of a run's CSV, which depend on the engine and estimator.
pub fn series_columns(out: &RunOutput) -> Vec<&'static str> {
    let c = &out.config;
    let mut cols = vec!["r", "bound", "error", "residual"];
    if !c.omit_timing {
        cols.push("wall_ms");
        if c.engine.eigen() {
            cols.extend(["assemble_ms", "solve_ms"]);
        }
    }
    if c.engine == Engine::Both {
        cols.push("needle_bound");
    }
    if c.engine.needle() {
        cols.extend(["needle_h", "density_degree", "out_of_regime"]);
    }
    if c.estimator.is_some() {
        cols.push("estimator_bound");
    }
    cols
}

fn cell(row: &SeriesRow, col: &str) -> String {
    match col {
        "r" => row.r.to_string(),
        "bound" => opt(row.bound),
        "error" => opt(row.error),
        "residual" => opt(row.residual),
        "wall_ms" => fmt_g17(row.wall_ms),
        "assemble_ms" => opt(row.assemble_ms),
        "solve_ms" => opt(row.solve_ms),
        "needle_bound" => opt(row.needle_bound),
        "needle_h" => opt(row.needle_h),
        "density_degree" => row.density_degree.map(|d| d.to_string()).unwrap_or_default(),
        "out_of_regime" => row.out_of_regime.map(|b| b.to_string()).unwrap_or_default(),
        "estimator_bound" => opt(row.estimator_bound),
        other => unreachable!("unknown column {other}"),
    }
}

pub fn series_csv(out: &RunOutput) -> Result<String> {
    let cols = series_columns(out);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&cols)?;
    for row in &out.series {
        w.write_record(cols.iter().map(|c| cell(row, c)))?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}

#[derive(Serialize)]
struct JsonRun<'a> {
    config: &'a crate::config::ExperimentConfig,
    series: Vec<serde_json::Value>,
}

pub fn series_json(out: &RunOutput) -> Result<String> {
    let mut series = Vec::with_capacity(out.series.len());
    for row in &out.series {
        let mut v = serde_json::to_value(row)?;
        if out.config.omit_timing {
            if let Some(map) = v.as_object_mut() {
                for k in ["wall_ms", "assemble_ms", "solve_ms"] {
                    map.remove(k);
                }
            }
        }
        series.push(v);
    }
    let doc = JsonRun {
        config: &out.config,
        series,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

pub fn render_run(out: &RunOutput) -> Result<String> {
    match out.config.format {
        Format::Csv => series_csv(out),
        Format::Json => series_json(out),
    }
}

pub fn write_run(out: &RunOutput, path: &Path) -> Result<()> {
    write_atomic(path, &render_run(out)?)
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn ratio_csv(rep: &RatioReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["r", "error_a", "error_b", "ratio"])?;
    for row in &rep.rows {
        w.write_record([
            row.r.to_string(),
            opt(row.error_a),
            opt(row.error_b),
            row.ratio.map(fmt_g17).unwrap_or_else(|| "nan".into()),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}

pub fn rate_csv(reports: &[RateReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "r_lo", "r_hi", "slope", "stderr", "points", "ceiling", "status"])?;
    for rep in reports {
        let status = serde_json::to_value(rep.status)?;
        w.write_record([
            rep.label.clone(),
            rep.window.0.to_string(),
            rep.window.1.to_string(),
            opt(rep.slope),
            opt(rep.stderr),
            rep.points.to_string(),
            fmt_g17(rep.ceiling),
            status.as_str().unwrap_or_default().to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}

/// Renders rows of numbers (and pre-rendered strings) as CSV.
pub fn table_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
}
