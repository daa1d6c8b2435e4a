use std::io::Write;

use anyhow::{Context, Result};
use entangle_core::harness::{CheckRecord, Status};

use crate::{Common, Format};

/// Serializes records in the requested format. JSON is a pretty-printed array
/// with a trailing newline; CSV has one header row.
pub fn render(records: &[CheckRecord], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(records)?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                w.serialize(r)?;
            }
            if records.is_empty() {
                w.write_record(HEADER)?;
            }
            Ok(w.into_inner().context("flushing csv")?)
        }
    }
}

const HEADER: [&str; 10] = ["name", "lambda", "key", "lhs", "rhs", "slack", "tolerance", "pass", "status", "detail"];

pub fn emit(bytes: &[u8], common: &Common) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

/// One summary line on stderr; returns whether no conclusive check failed.
pub fn summarize(records: &[CheckRecord]) -> bool {
    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let (pass, fail, inc) = (count(Status::Pass), count(Status::Fail), count(Status::Inconclusive));
    eprintln!("{} records: {pass} pass, {fail} fail, {inc} inconclusive", records.len());
    for r in records.iter().filter(|r| r.is_failure()) {
        eprintln!(
            "FAIL {} lambda={} key={} lhs={:e} rhs={:e}",
            r.name,
            r.lambda.map_or("-".into(), |l| l.to_string()),
            r.key.as_deref().unwrap_or("-"),
            r.lhs,
            r.rhs
        );
    }
    fail == 0
}
