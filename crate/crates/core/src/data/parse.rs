//! Raw review ingestion: Amazon JSON-lines and headerless CSV.

use std::io::BufRead;

use serde::Deserialize;

use crate::error::{NrpaError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line with `reviewerID`, `asin`, `overall`, `reviewText`.
    AmazonJson,
    /// Headerless `user,item,rating,text`.
    Csv,
}

impl InputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "amazon-json" => Ok(InputFormat::AmazonJson),
            "csv" => Ok(InputFormat::Csv),
            other => Err(NrpaError::Input(format!(
                "unknown input format `{other}` (expected amazon-json or csv)"
            ))),
        }
    }
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ParseOutcome {
    pub records: Vec<RawRecord>,
    /// Lines that were malformed or carried a rating outside [1, 5].
    pub skipped: usize,
}

#[derive(Deserialize)]
struct AmazonLine {
    #[serde(rename = "reviewerID")]
    reviewer_id: String,
    asin: String,
    overall: f64,
    #[serde(rename = "reviewText", default)]
    review_text: String,
}

fn valid_rating(r: f64) -> bool {
    (1.0..=5.0).contains(&r)
}

/// Reads every record from `source`. Blank lines are ignored; malformed lines
/// and out-of-range ratings are skipped and counted. Only I/O failures are
/// errors.
pub fn parse_reviews<R: BufRead>(source: R, format: InputFormat) -> Result<ParseOutcome> {
    match format {
        InputFormat::AmazonJson => parse_amazon(source),
        InputFormat::Csv => parse_csv(source),
    }
}

fn parse_amazon<R: BufRead>(mut source: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut line = Vec::new();
    loop {
        line.clear();
        if source.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        if line.iter().all(|b| b.is_ascii_whitespace()) {
            continue;
        }
        match serde_json::from_slice::<AmazonLine>(&line) {
            Ok(rec) if valid_rating(rec.overall) => out.records.push(RawRecord {
                user: rec.reviewer_id,
                item: rec.asin,
                rating: rec.overall,
                text: rec.review_text,
            }),
            _ => out.skipped += 1,
        }
    }
    Ok(out)
}

fn parse_csv<R: BufRead>(source: R) -> Result<ParseOutcome> {
    let mut out = ParseOutcome::default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut record = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => match e.kind() {
                csv::ErrorKind::Io(_) => return Err(NrpaError::Io(std::io::Error::other(e.to_string()))),
                _ => {
                    out.skipped += 1;
                    continue;
                }
            },
        }
        if record.len() == 1 && record[0].iter().all(|b| b.is_ascii_whitespace()) {
            continue;
        }
        match csv_fields(&record) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn csv_fields(record: &csv::ByteRecord) -> Option<RawRecord> {
    if record.len() != 4 {
        return None;
    }
    let field = |i: usize| std::str::from_utf8(&record[i]).ok();
    let user = field(0)?.trim();
    let item = field(1)?.trim();
    let rating: f64 = field(2)?.trim().parse().ok()?;
    let text = field(3)?;
    if user.is_empty() || item.is_empty() || !valid_rating(rating) {
        return None;
    }
    Some(RawRecord {
        user: user.to_owned(),
        item: item.to_owned(),
        rating,
        text: text.to_owned(),
    })
}
