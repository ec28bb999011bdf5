//! `year,value` CSV files.
//!
//! UTF-8, comma separated, header exactly `year,value`, four-digit years and
//! decimal values. Lines starting with `#` are comments; a comment of the
//! form `# unit: <unit>` declares the unit and must agree with the caller's.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{AnnualSeries, SeriesKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Fill missing interior years by linear interpolation instead of failing.
    pub interpolate_gaps: bool,
}

fn csv_err(path: &Path, line: u64, kind: SeriesKind, message: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_owned(),
        line,
        message: format!("{kind} series: {message}"),
    }
}

fn declared_unit(text: &str) -> Option<(u64, &str)> {
    text.lines().enumerate().find_map(|(i, l)| {
        let body = l.trim().strip_prefix('#')?.trim();
        let unit = body.strip_prefix("unit:")?.trim();
        Some((i as u64 + 1, unit))
    })
}

/// Line of the first data-bearing line at or after `byte`. The reader
/// reports where it resumed, which may be a comment or blank line.
fn line_at(text: &str, byte: u64) -> u64 {
    let mut start = (byte as usize).min(text.len());
    while let Some(rest) = text.get(start..) {
        let line = rest.split_inclusive('\n').next().unwrap_or("");
        let body = line.trim();
        if line.is_empty() || !(body.is_empty() || body.starts_with('#')) {
            break;
        }
        start += line.len();
    }
    text[..start].bytes().filter(|&b| b == b'\n').count() as u64 + 1
}

fn parse_year(field: &str) -> Option<i32> {
    let f = field.trim();
    (f.len() == 4 && f.bytes().all(|b| b.is_ascii_digit())).then(|| f.parse().ok())?
}

/// Loads one series. The entity label is the file stem.
pub fn load_series(path: &Path, kind: SeriesKind, unit: &str) -> Result<AnnualSeries> {
    load_series_with(path, kind, unit, LoadOptions::default())
}

pub fn load_series_with(path: &Path, kind: SeriesKind, unit: &str, opts: LoadOptions) -> Result<AnnualSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entity = path.file_stem().map_or_else(|| "series".into(), |s| s.to_string_lossy().into_owned());
    parse_series(&text, path, &entity, kind, unit, opts)
}

/// Parses CSV text; `path` is only used in error messages.
pub fn parse_series(
    text: &str,
    path: &Path,
    entity: &str,
    kind: SeriesKind,
    unit: &str,
    opts: LoadOptions,
) -> Result<AnnualSeries> {
    if let Some((line, declared)) = declared_unit(text) {
        if declared != unit {
            return Err(csv_err(
                path,
                line,
                kind,
                format!("file declares unit '{declared}' but manifest says '{unit}'"),
            ));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| csv_err(path, 1, kind, e))?.clone();
    let header_line = line_at(text, headers.position().map_or(0, |p| p.byte()));
    if headers.iter().collect::<Vec<_>>() != ["year", "value"] {
        let line = header_line;
        return Err(csv_err(path, line, kind, "header must be exactly 'year,value'"));
    }

    let mut points: Vec<(i32, f64)> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| line_at(text, p.byte()));
            csv_err(path, line, kind, e)
        })?;
        let line = record.position().map_or(0, |p| line_at(text, p.byte()));
        let year = parse_year(&record[0])
            .ok_or_else(|| csv_err(path, line, kind, format!("year '{}' is not a 4-digit integer", &record[0])))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| csv_err(path, line, kind, format!("value '{}' is not a decimal number", &record[1])))?;
        if !value.is_finite() {
            return Err(csv_err(path, line, kind, format!("non-finite value in year {year}")));
        }
        if kind.requires_non_negative() && value < 0.0 {
            return Err(csv_err(path, line, kind, format!("negative value {value} in year {year}")));
        }
        if let Some(&(prev, _)) = points.last() {
            if year == prev {
                return Err(csv_err(path, line, kind, format!("duplicate year {year}")));
            }
            if year < prev {
                return Err(csv_err(path, line, kind, format!("year {year} out of order after {prev}")));
            }
        }
        points.push((year, value));
        lines.push(line);
    }

    if points.is_empty() {
        return Err(csv_err(path, header_line, kind, "no data rows after the header"));
    }
    let series = AnnualSeries::new(entity, kind, unit, points).map_err(|e| csv_err(path, 0, kind, e))?;

    let missing = series.missing_years();
    if !missing.is_empty() {
        if opts.interpolate_gaps {
            return Ok(series.interpolate_gaps());
        }
        let after = series.points().iter().position(|p| p.0 > missing[0]).unwrap_or(0);
        return Err(csv_err(
            path,
            lines.get(after).copied().unwrap_or(0),
            kind,
            format!("missing years {missing:?} (enable gap interpolation to fill them)"),
        ));
    }
    Ok(series)
}

/// Renders a series in the CSV schema with metadata comments. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn render_series(s: &AnnualSeries) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# entity: {}", s.entity());
    let _ = writeln!(out, "# kind: {}", s.kind());
    let _ = writeln!(out, "# unit: {}", s.unit());
    out.push_str("year,value\n");
    for (y, v) in s.points() {
        let _ = writeln!(out, "{y},{v}");
    }
    out
}

pub fn write_series(path: &Path, s: &AnnualSeries) -> Result<()> {
    fs::write(path, render_series(s)).map_err(|e| Error::io(path, e))
}
