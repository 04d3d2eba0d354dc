//! CSV iteration logs, quality reports and sweep summaries.
//!
//! Reals are written with 17 significant digits so they parse back to the
//! same bits.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::QualityReport;

pub const LOG_HEADER: [&str; 4] = ["iter", "objective", "y_rel_change", "elapsed_seconds"];
pub const REPORT_HEADER: [&str; 5] = ["slice", "psnr", "ssim", "ergas", "sam_degrees"];
pub const SUMMARY_HEADER: [&str; 5] = ["gamma", "mean_psnr", "mean_ssim", "rel_err", "iterations"];

/// Lossless decimal form of a real: 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLogRow {
    pub iter: usize,
    pub objective: f64,
    pub y_rel_change: f64,
    pub elapsed_seconds: f64,
}

impl RunLogRow {
    fn record(&self) -> [String; 4] {
        [
            self.iter.to_string(),
            format_real(self.objective),
            format_real(self.y_rel_change),
            format_real(self.elapsed_seconds),
        ]
    }
}

fn open_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Appends one row, writing the header first when the file is new or empty.
pub fn append_log(path: impl AsRef<Path>, row: &RunLogRow) -> Result<()> {
    let path = path.as_ref();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(open_err(path))?;
    let empty = file.metadata().map_err(open_err(path))?.len() == 0;
    let mut w = csv::Writer::from_writer(file);
    if empty {
        w.write_record(LOG_HEADER)?;
    }
    w.write_record(row.record())?;
    w.flush().map_err(open_err(path))?;
    Ok(())
}

/// Writes a complete log, replacing any existing file.
pub fn write_log(path: impl AsRef<Path>, rows: &[RunLogRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(File::create(path).map_err(open_err(path))?);
    w.write_record(LOG_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(open_err(path))?;
    Ok(())
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    let raw = record.get(idx).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(line, format!("column {}: cannot parse `{raw}`", idx + 1)))
}

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

pub fn parse_log(input: impl Read) -> Result<Vec<RunLogRow>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &LOG_HEADER)?;
    let mut rows: Vec<RunLogRow> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let row = RunLogRow {
            iter: field(&record, 0, line)?,
            objective: field(&record, 1, line)?,
            y_rel_change: field(&record, 2, line)?,
            elapsed_seconds: field(&record, 3, line)?,
        };
        if rows.last().is_some_and(|prev| prev.iter >= row.iter) {
            return Err(Error::parse(line, "iteration numbers must strictly increase"));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<RunLogRow>> {
    let path = path.as_ref();
    parse_log(File::open(path).map_err(open_err(path))?)
}

/// One row per frontal slice (1-based) with PSNR and SSIM, then a `mean`
/// row that also carries ERGAS and SAM.
pub fn write_report_to(out: impl Write, report: &QualityReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for (k, (p, s)) in report.per_slice_psnr.iter().zip(&report.per_slice_ssim).enumerate() {
        w.write_record([(k + 1).to_string(), format_real(*p), format_real(*s), String::new(), String::new()])?;
    }
    w.write_record([
        "mean".to_string(),
        format_real(report.mean_psnr),
        format_real(report.mean_ssim),
        format_real(report.ergas),
        format_real(report.sam_mean_degrees),
    ])?;
    w.flush().map_err(|e| Error::io("<report>", e))?;
    Ok(())
}

pub fn write_report(path: impl AsRef<Path>, report: &QualityReport) -> Result<()> {
    let path = path.as_ref();
    write_report_to(File::create(path).map_err(open_err(path))?, report)
}

pub fn parse_report(input: impl Read) -> Result<QualityReport> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &REPORT_HEADER)?;
    let mut psnr = Vec::new();
    let mut ssim = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        match record.get(0) {
            Some("mean") => {
                return Ok(QualityReport {
                    per_slice_psnr: psnr,
                    per_slice_ssim: ssim,
                    mean_psnr: field(&record, 1, line)?,
                    mean_ssim: field(&record, 2, line)?,
                    ergas: field(&record, 3, line)?,
                    sam_mean_degrees: field(&record, 4, line)?,
                });
            }
            _ => {
                let slice: usize = field(&record, 0, line)?;
                if slice != psnr.len() + 1 {
                    return Err(Error::parse(line, format!("expected slice {}, found {slice}", psnr.len() + 1)));
                }
                psnr.push(field(&record, 1, line)?);
                ssim.push(field(&record, 2, line)?);
            }
        }
    }
    Err(Error::parse(0, "report has no `mean` row"))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<QualityReport> {
    let path = path.as_ref();
    parse_report(File::open(path).map_err(open_err(path))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub rel_err: f64,
    pub iterations: usize,
}

pub fn write_sweep_summary(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(File::create(path).map_err(open_err(path))?);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            format_real(r.gamma),
            format_real(r.mean_psnr),
            format_real(r.mean_ssim),
            format_real(r.rel_err),
            r.iterations.to_string(),
        ])?;
    }
    w.flush().map_err(open_err(path))?;
    Ok(())
}

pub fn parse_sweep_summary(input: impl Read) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &SUMMARY_HEADER)?;
    reader
        .records()
        .map(|record| {
            let record = record?;
            let line = line_of(&record);
            Ok(SweepRow {
                gamma: field(&record, 0, line)?,
                mean_psnr: field(&record, 1, line)?,
                mean_ssim: field(&record, 2, line)?,
                rel_err: field(&record, 3, line)?,
                iterations: field(&record, 4, line)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_header_and_append() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        for k in 1..=3 {
            let row = RunLogRow {
                iter: k,
                objective: 1.0 / k as f64,
                y_rel_change: 0.1f64.powi(k as i32),
                elapsed_seconds: 0.25 * k as f64,
            };
            append_log(&path, &row).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "iter,objective,y_rel_change,elapsed_seconds");
        assert_eq!(text.lines().count(), 4);
        let rows = read_log(&path).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].objective, 1.0 / 3.0);
        assert_eq!(rows[1].y_rel_change, 0.1f64.powi(2));
    }

    #[test]
    fn log_rejects_bad_input() {
        let bad_header = "iter,obj,y_rel_change,elapsed_seconds\n1,0,0,0\n";
        assert!(matches!(parse_log(bad_header.as_bytes()), Err(Error::Parse { line: 1, .. })));
        let not_increasing = "iter,objective,y_rel_change,elapsed_seconds\n2,0,0,0\n2,0,0,0\n";
        assert!(matches!(parse_log(not_increasing.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let junk = "iter,objective,y_rel_change,elapsed_seconds\n1,abc,0,0\n";
        assert!(matches!(parse_log(junk.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn report_layout_and_roundtrip() {
        let report = QualityReport {
            per_slice_psnr: vec![30.5, f64::INFINITY, 28.25],
            per_slice_ssim: vec![0.9, 1.0, 0.875],
            mean_psnr: 29.375,
            mean_ssim: 0.925,
            ergas: 12.5,
            sam_mean_degrees: 3.75,
        };
        let mut buf = Vec::new();
        write_report_to(&mut buf, &report).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "slice,psnr,ssim,ergas,sam_degrees");
        assert_eq!(lines.len(), 1 + 3 + 1);
        assert!(lines[4].starts_with("mean,"));
        assert_eq!(parse_report(buf.as_slice()).unwrap(), report);
    }

    #[test]
    fn summary_roundtrip() {
        let rows = vec![
            SweepRow { gamma: 2.3, mean_psnr: 31.0, mean_ssim: 0.9, rel_err: 0.01, iterations: 40 },
            SweepRow { gamma: 2.5, mean_psnr: f64::NAN, mean_ssim: f64::NAN, rel_err: f64::NAN, iterations: 41 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        write_sweep_summary(&path, &rows).unwrap();
        let back = parse_sweep_summary(File::open(&path).unwrap()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], rows[0]);
        assert!(back[1].mean_psnr.is_nan());
    }

    proptest! {
        #[test]
        fn reals_roundtrip_through_text(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let back: f64 = format_real(x).parse().unwrap();
            prop_assert!(back.to_bits() == x.to_bits() || (x.is_nan() && back.is_nan()));
        }
    }
}
