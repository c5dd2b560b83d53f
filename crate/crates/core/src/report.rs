//! CSV, summary and image file emitters.
//!
//! Confidences in `records.csv` are printed with one decimal. Both they and
//! `changing_rate` are derived from the same integer tenths, so the printed
//! columns satisfy `changing_rate == orig_conf - rot_conf_true` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::attack::TracePoint;
use crate::experiment::{ExperimentRecord, Summary};
use crate::mnist::{Image, IMAGE_PIXELS, IMAGE_SIDE};
use crate::rotation::SweepRecord;
use crate::{Error, Result, NUM_CLASSES};

pub const RECORDS_HEADER: &str =
    "image_index,true_label,target_label,orig_conf,adv_conf_target,adv_conf_true,best_angle,rot_conf_true,changing_rate,recovered";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

/// Percentage rounded to integer tenths.
fn tenths(percent: f64) -> i64 {
    (percent * 10.0).round() as i64
}

fn fmt_tenths(t: i64) -> String {
    let sign = if t < 0 { "-" } else { "" };
    format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
}

pub fn records_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let orig = tenths(r.orig_conf);
        let rot = tenths(r.rot_conf_true);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.image_index,
            r.true_label,
            r.target_label,
            fmt_tenths(orig),
            fmt_tenths(tenths(r.adv_conf_target)),
            fmt_tenths(tenths(r.adv_conf_true)),
            r.best_angle,
            fmt_tenths(rot),
            fmt_tenths(orig - rot),
            r.recovered
        )
        .expect("writing to a String");
    }
    out
}

pub fn emit_records_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    write_file(path, records_csv(records))
}

fn field<T: std::str::FromStr>(line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::validation(format!("line {line}: bad {name} value {raw:?}")))
}

/// Parses a records CSV back into rows (confidences at 0.1 precision).
pub fn parse_records_csv(text: &str) -> Result<Vec<ExperimentRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORDS_HEADER) {
        return Err(Error::Format("records CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 10 {
                return Err(Error::Format(format!(
                    "line {n}: expected 10 columns, got {}",
                    cols.len()
                )));
            }
            Ok(ExperimentRecord {
                image_index: field(n, "image_index", cols[0])?,
                true_label: field(n, "true_label", cols[1])?,
                target_label: field(n, "target_label", cols[2])?,
                orig_conf: field(n, "orig_conf", cols[3])?,
                adv_conf_target: field(n, "adv_conf_target", cols[4])?,
                adv_conf_true: field(n, "adv_conf_true", cols[5])?,
                best_angle: field(n, "best_angle", cols[6])?,
                rot_conf_true: field(n, "rot_conf_true", cols[7])?,
                changing_rate: field(n, "changing_rate", cols[8])?,
                recovered: field(n, "recovered", cols[9])?,
            })
        })
        .collect()
}

/// Checks `changing_rate == orig_conf - rot_conf_true` on every parsed row,
/// in integer tenths. Returns the first offending row index.
pub fn check_changing_rate(records: &[ExperimentRecord]) -> std::result::Result<(), usize> {
    match records
        .iter()
        .position(|r| tenths(r.changing_rate) != tenths(r.orig_conf) - tenths(r.rot_conf_true))
    {
        Some(i) => Err(i),
        None => Ok(()),
    }
}

pub fn sweep_csv(record: &SweepRecord) -> String {
    let mut out = String::from("angle");
    for c in 0..NUM_CLASSES {
        write!(out, ",p{c}").expect("writing to a String");
    }
    out.push('\n');
    for (angle, probs) in record.angles.iter().zip(&record.curves) {
        write!(out, "{angle}").expect("writing to a String");
        for p in probs.probs() {
            write!(out, ",{p:.6}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn emit_sweep_csv(record: &SweepRecord, path: &Path) -> Result<()> {
    write_file(path, sweep_csv(record))
}

/// Parses a sweep CSV into `(angle, probabilities)` rows.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<(i32, [f64; NUM_CLASSES])>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("angle,p0,") {
        return Err(Error::Format("sweep CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != NUM_CLASSES + 1 {
                return Err(Error::Format(format!("line {n}: expected 11 columns")));
            }
            let mut probs = [0.0; NUM_CLASSES];
            for (p, raw) in probs.iter_mut().zip(&cols[1..]) {
                *p = field(n, "probability", raw)?;
            }
            Ok((field(n, "angle", cols[0])?, probs))
        })
        .collect()
}

pub fn summary_text(s: &Summary) -> String {
    format!(
        "samples = {}\n\
         attack_success_rate = {:.4}\n\
         recovery_rate = {:.4}\n\
         high_confidence_recoveries = {}\n\
         mean_best_angle = {:.2}\n\
         min_best_angle = {}\n\
         max_best_angle = {}\n\
         mean_changing_rate = {:.2}\n",
        s.samples,
        s.attack_success_rate,
        s.recovery_rate,
        s.high_confidence_recoveries,
        s.mean_best_angle,
        s.min_best_angle,
        s.max_best_angle,
        s.mean_changing_rate
    )
}

pub fn write_summary(s: &Summary, path: &Path) -> Result<()> {
    write_file(path, summary_text(s))
}

pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = String::from("iteration,target_conf,true_conf\n");
    for (i, t) in trace.iter().enumerate() {
        writeln!(out, "{},{:.6},{:.6}", i + 1, t.target_confidence, t.true_confidence).expect("writing to a String");
    }
    out
}

pub fn write_trace_csv(trace: &[TracePoint], path: &Path) -> Result<()> {
    write_file(path, trace_csv(trace))
}

/// Lossless text form: 28 lines of 28 comma-separated values.
pub fn image_csv(image: &Image) -> String {
    let mut out = String::new();
    for row in image.pixels().chunks_exact(IMAGE_SIDE) {
        let cells: Vec<String> = row.iter().map(|p| format!("{p:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_image_csv(text: &str) -> Result<Image> {
    let pixels = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| field(0, "pixel", s))
        .collect::<Result<Vec<f64>>>()?;
    Image::new(pixels)
}

/// 8-bit binary PGM (P5). Quantizes to 1/255.
pub fn pgm_bytes(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{IMAGE_SIDE} {IMAGE_SIDE}\n255\n").into_bytes();
    out.extend(image.to_bytes());
    out
}

pub fn parse_pgm(bytes: &[u8]) -> Result<Image> {
    // P5 header: magic, width, height, maxval separated by whitespace.
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("PGM header is incomplete".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Format(format!("unsupported PGM magic {:?}", fields[0])));
    }
    let (w, h, max): (usize, usize, u32) = (
        field(0, "width", &fields[1])?,
        field(0, "height", &fields[2])?,
        field(0, "maxval", &fields[3])?,
    );
    if w != IMAGE_SIDE || h != IMAGE_SIDE || max != 255 {
        return Err(Error::dim(format!(
            "expected a 28x28 8-bit PGM, got {w}x{h} maxval {max}"
        )));
    }
    let payload = bytes.get(pos..pos + IMAGE_PIXELS).ok_or(Error::Truncated {
        expected: pos + IMAGE_PIXELS,
        actual: bytes.len(),
    })?;
    Image::new(payload.iter().map(|&b| f64::from(b) / 255.0).collect())
}

/// Reads a `.pgm` or lossless `.csv` image, chosen by extension.
pub fn read_image(path: &Path) -> Result<Image> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => parse_pgm(&fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?),
        _ => parse_image_csv(&read_text(path)?),
    }
}

pub fn write_image_csv(image: &Image, path: &Path) -> Result<()> {
    write_file(path, image_csv(image))
}

pub fn write_pgm(image: &Image, path: &Path) -> Result<()> {
    write_file(path, pgm_bytes(image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ProbVector;
    use proptest::prelude::*;

    fn record(orig: f64, rot: f64) -> ExperimentRecord {
        ExperimentRecord {
            image_index: 6670,
            true_label: 1,
            target_label: 8,
            orig_conf: orig,
            adv_conf_target: 97.5,
            adv_conf_true: 0.22,
            best_angle: 35,
            rot_conf_true: rot,
            changing_rate: orig - rot,
            recovered: true,
        }
    }

    #[test]
    fn empty_records_is_header_only() {
        assert_eq!(records_csv(&[]), format!("{RECORDS_HEADER}\n"));
    }

    #[test]
    fn table_row_signed_changing_rate() {
        let csv = records_csv(&[record(99.9, 100.0)]);
        assert_eq!(csv.lines().nth(1).unwrap(), "6670,1,8,99.9,97.5,0.2,35,100.0,-0.1,true");
    }

    #[test]
    fn ten_records_eleven_lines() {
        let rows: Vec<_> = (0..10).map(|i| record(90.0 + f64::from(i), 80.0)).collect();
        assert_eq!(records_csv(&rows).lines().count(), 11);
    }

    #[test]
    fn header_mismatch_rejected() {
        assert!(parse_records_csv("a,b\n").is_err());
    }

    proptest! {
        #[test]
        fn records_round_trip(orig in 0.0f64..100.0, rot in 0.0f64..100.0, adv in 0.0f64..100.0, angle in 0i32..91) {
            let mut r = record(orig, rot);
            r.adv_conf_target = adv;
            r.best_angle = angle;
            let parsed = parse_records_csv(&records_csv(&[r.clone()])).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            let p = &parsed[0];
            prop_assert!((p.orig_conf - orig).abs() <= 0.05 + 1e-9);
            prop_assert!((p.rot_conf_true - rot).abs() <= 0.05 + 1e-9);
            prop_assert!((p.adv_conf_target - adv).abs() <= 0.05 + 1e-9);
            prop_assert_eq!(p.best_angle, angle);
            prop_assert!(check_changing_rate(&parsed).is_ok());
        }
    }

    #[test]
    fn sweep_csv_rows() {
        let probs = ProbVector::new([0.05, 0.5, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.1, 0.05]).unwrap();
        let rec = SweepRecord {
            true_class: 1,
            angles: (0..=90).collect(),
            curves: vec![probs; 91],
            best_angle: 0,
            best_confidence: 0.5,
            recovered: true,
        };
        let text = sweep_csv(&rec);
        assert!(text.starts_with("angle,p0,p1,p2,p3,p4,p5,p6,p7,p8,p9\n"));
        let rows = parse_sweep_csv(&text).unwrap();
        assert_eq!(rows.len(), 91);
        for (_, p) in rows {
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-5);
        }
    }

    #[test]
    fn image_formats() {
        let img = Image::new((0..784).map(|i| (i as f64 / 783.0).sqrt()).collect()).unwrap();
        assert_eq!(parse_image_csv(&image_csv(&img)).unwrap(), img);
        let q = parse_pgm(&pgm_bytes(&img)).unwrap();
        assert!(q
            .pixels()
            .iter()
            .zip(img.pixels())
            .all(|(a, b)| (a - b).abs() <= 0.5 / 255.0 + 1e-12));
        assert!(parse_pgm(b"P2\n28 28\n255\n").is_err());
        assert!(matches!(
            parse_pgm(b"P5\n28 28\n255\n\x00\x01"),
            Err(Error::Truncated { .. })
        ));
    }
}
