//! CSV series and JSON reports.
//!
//! Numbers are written with 17 significant digits so a CSV reproduces the
//! recorded doubles exactly. Reports carry no wall-clock data; runtimes go to
//! a separate `*.timing.json` sidecar so that reruns of the same scenario give
//! byte-identical CSV and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::TimeSeries;

pub const CSV_HEADER: &str =
    "t,norm,x_mean,v_mean,p_total,force_full,force_partial,dg_violation,energy";

fn number(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

/// Renders the series as CSV text, header included.
pub fn series_csv(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(64 + series.len() * 9 * 24);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in series.records() {
        for (i, v) in [
            r.t,
            r.norm,
            r.x_mean,
            r.v_mean,
            r.p_total,
            r.force_full,
            r.force_partial,
            r.dg_violation,
        ]
        .into_iter()
        .enumerate()
        {
            if i > 0 {
                out.push(',');
            }
            number(&mut out, v);
        }
        out.push(',');
        if let Some(e) = r.energy {
            number(&mut out, e);
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit_series(series: &TimeSeries, path: &Path) -> Result<()> {
    write_file(path, series_csv(series).as_bytes())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

#[derive(Serialize)]
struct Timing<'a> {
    name: &'a str,
    runtime_seconds: f64,
}

/// Writes `<dir>/<name>.timing.json`.
pub fn write_timing(dir: &Path, name: &str, runtime: Duration) -> Result<PathBuf> {
    let path = dir.join(format!("{name}.timing.json"));
    write_json(
        &Timing {
            name,
            runtime_seconds: runtime.as_secs_f64(),
        },
        &path,
    )?;
    Ok(path)
}
