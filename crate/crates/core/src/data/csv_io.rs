//! CSV ingestion and export.
//!
//! Header: `t`, the target channels, `env_t,env_rh,env_p`, then one
//! `<channel>__stale` flag column per target. Blank cells are missing.

use std::io::{Read, Write};
use std::path::Path;

use crate::channels::{ENV_NAMES, N_ENV, N_TARGETS, TARGET_NAMES};
use crate::data::frame::SeriesFrame;
use crate::data::normalize::percentile_abs;
use crate::error::{Error, Result};

pub fn stale_column(name: &str) -> String {
    format!("{name}__stale")
}

pub fn header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(TARGET_NAMES.iter().map(|s| s.to_string()));
    h.extend(ENV_NAMES.iter().map(|s| s.to_string()));
    h.extend(TARGET_NAMES.iter().map(|s| stale_column(s)));
    h
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn write_csv_to<W: Write>(frame: &SeriesFrame, w: W) -> Result<()> {
    frame.validate()?;
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header()).map_err(csv_err)?;
    let mut row = Vec::with_capacity(1 + 2 * N_TARGETS + N_ENV);
    for t in 0..frame.len() {
        row.clear();
        row.push(fmt(frame.timestamps[t]));
        row.extend((0..N_TARGETS).map(|c| fmt(frame.targets[c][t])));
        row.extend((0..N_ENV).map(|e| fmt(frame.env[e][t])));
        row.extend((0..N_TARGETS).map(|c| if frame.stale[c][t] { "1" } else { "0" }.to_string()));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv(frame: &SeriesFrame, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv_to(frame, std::io::BufWriter::new(file))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<SeriesFrame> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv_from(std::io::BufReader::new(file))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("malformed CSV: {other:?}")),
    }
}

/// Parses a frame. Target cells that are blank or unparseable become
/// missing; timestamp gaps are filled with all-missing rows; blank
/// environmental cells are linearly interpolated. Channel scales are the 99th
/// percentile of the absolute observed values.
pub fn read_csv_from<R: Read>(r: R) -> Result<SeriesFrame> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let head = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| head.iter().position(|h| h == name);
    let wanted = header();
    let absent: Vec<&str> = wanted.iter().filter(|n| col(n).is_none()).map(String::as_str).collect();
    if !absent.is_empty() {
        return Err(Error::Schema(format!("missing required columns: {}", absent.join(", "))));
    }
    let t_col = col("t").unwrap();
    let target_cols: Vec<usize> = TARGET_NAMES.iter().map(|n| col(n).unwrap()).collect();
    let env_cols: Vec<usize> = ENV_NAMES.iter().map(|n| col(n).unwrap()).collect();
    let stale_cols: Vec<usize> = TARGET_NAMES.iter().map(|n| col(&stale_column(n)).unwrap()).collect();

    let mut frame = SeriesFrame::zeros(0);
    let mut prev_t: Option<f64> = None;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        // Header is line 1; data row i is line i + 2.
        let line = i + 2;
        let t: f64 = rec
            .get(t_col)
            .and_then(|s| s.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Format(format!("line {line}: unreadable timestamp")))?;
        if let Some(p) = prev_t {
            if !(t > p) {
                return Err(Error::Format(format!("timestamps not strictly increasing at line {line} ({p} then {t})")));
            }
            let gap = t - p;
            if gap.fract() != 0.0 {
                return Err(Error::Format(format!("line {line}: timestamp step {gap} is not a whole number of seconds")));
            }
            for k in 1..gap as usize {
                push_missing_row(&mut frame, p + k as f64);
            }
        }
        prev_t = Some(t);
        frame.timestamps.push(t);
        for (c, &ci) in target_cols.iter().enumerate() {
            let v = rec.get(ci).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
            frame.targets[c].push(v.unwrap_or(f64::NAN));
            frame.missing[c].push(v.is_none());
            let flag = rec.get(stale_cols[c]).unwrap_or("");
            frame.stale[c].push(matches!(flag, "1" | "true"));
        }
        for (e, &ei) in env_cols.iter().enumerate() {
            let v = rec.get(ei).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
            frame.env[e].push(v.unwrap_or(f64::NAN));
        }
    }
    for (e, series) in frame.env.iter_mut().enumerate() {
        if !series.is_empty() && series.iter().all(|v| v.is_nan()) {
            return Err(Error::Data(format!("environmental channel {} has no values", ENV_NAMES[e])));
        }
        fill_linear(series);
    }
    for c in 0..N_TARGETS {
        let p = percentile_abs(&frame.targets[c], 0.99);
        frame.meta[c].scale = if p > 0.0 { p } else { 1.0 };
    }
    frame.validate()?;
    Ok(frame)
}

fn push_missing_row(frame: &mut SeriesFrame, t: f64) {
    frame.timestamps.push(t);
    for c in 0..N_TARGETS {
        frame.targets[c].push(f64::NAN);
        frame.missing[c].push(true);
        frame.stale[c].push(false);
    }
    for e in 0..N_ENV {
        frame.env[e].push(f64::NAN);
    }
}

/// Replaces NaN runs by linear interpolation between the bracketing values,
/// holding the nearest value at the ends. All-NaN input is left untouched.
pub fn fill_linear(x: &mut [f64]) {
    let known: Vec<usize> = (0..x.len()).filter(|&i| !x[i].is_nan()).collect();
    let (Some(&first), Some(&last)) = (known.first(), known.last()) else { return };
    for i in 0..first {
        x[i] = x[first];
    }
    for i in last + 1..x.len() {
        x[i] = x[last];
    }
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let f = (i - a) as f64 / (b - a) as f64;
            x[i] = x[a] + f * (x[b] - x[a]);
        }
    }
}
