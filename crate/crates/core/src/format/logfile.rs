//! CSV logs (`user,resource,op,timestamp`) and summaries
//! (`user,resource,op,freq`). A header line is written and, when present,
//! skipped on input.

use std::collections::BTreeMap;

use crate::abac::UpTuple;
use crate::error::{Error, Result};
use crate::log::{LogEntry, LogSummary};

const LOG_HEADER: [&str; 4] = ["user", "resource", "op", "timestamp"];
const SUMMARY_HEADER: [&str; 4] = ["user", "resource", "op", "freq"];

fn records(src: &str, header: [&str; 4]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(src.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 1,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if i == 0 && rec.iter().eq(header.iter().copied()) {
            continue;
        }
        if rec.len() != 4 {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("expected 4 fields, found {}", rec.len()),
            });
        }
        if let Some(k) = (0..3).find(|&k| rec[k].is_empty()) {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("empty `{}` field", header[k]),
            });
        }
        out.push((line, rec));
    }
    Ok(out)
}

pub fn parse_log(src: &str) -> Result<Vec<LogEntry>> {
    Ok(records(src, LOG_HEADER)?
        .into_iter()
        .map(|(_, r)| LogEntry::new(&r[0], &r[1], &r[2], &r[3]))
        .collect())
}

pub fn parse_summary(src: &str) -> Result<LogSummary> {
    let mut entries = BTreeMap::new();
    for (line, r) in records(src, SUMMARY_HEADER)? {
        let f: f64 = r[3].parse().map_err(|_| Error::Parse {
            line,
            column: 1,
            message: format!("invalid frequency `{}`", &r[3]),
        })?;
        let t = UpTuple::new(&r[0], &r[1], &r[2]);
        if entries.insert(t.clone(), f).is_some() {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("duplicate tuple {t}"),
            });
        }
    }
    LogSummary::new(entries)
}

fn write_rows<'a>(header: [&str; 4], rows: impl Iterator<Item = [&'a str; 3]>, last: impl Fn(usize) -> String) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for (i, row) in rows.enumerate() {
        let tail = last(i);
        w.write_record([row[0], row[1], row[2], tail.as_str()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn print_log(log: &[LogEntry]) -> String {
    write_rows(
        LOG_HEADER,
        log.iter().map(|e| [e.user.as_str(), e.resource.as_str(), e.op.as_str()]),
        |i| log[i].timestamp.clone(),
    )
}

/// Frequencies are written with Rust's shortest round-trip formatting.
pub fn print_summary(s: &LogSummary) -> String {
    let items: Vec<(&UpTuple, f64)> = s.iter().collect();
    write_rows(
        SUMMARY_HEADER,
        items.iter().map(|(t, _)| [t.user.as_str(), t.resource.as_str(), t.op.as_str()]),
        |i| format!("{}", items[i].1),
    )
}
