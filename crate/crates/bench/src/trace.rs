//! Trace CSV files: header `evals,level0_calls,seconds,best_cost`, one row
//! per record.

use std::fs;
use std::path::Path;

use partial_reinit::engine::record_trace;
use partial_reinit::TraceRecord;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const TRACE_HEADER: [&str; 4] = ["evals", "level0_calls", "seconds", "best_cost"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    evals: u64,
    level0_calls: u64,
    seconds: f64,
    best_cost: f64,
}

pub fn format_trace(records: &[TraceRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(Row {
            evals: r.cost_evaluations,
            level0_calls: r.level0_calls,
            seconds: r.wall_seconds,
            best_cost: r.best_cost,
        })
        .expect("writing to memory");
    }
    if records.is_empty() {
        w.write_record(TRACE_HEADER).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("CSV output is UTF-8")
}

/// Parses a trace and checks its ordering invariants. Line numbers in
/// errors count the header as line 1.
pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| BenchError::parse(1, e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(BenchError::parse(1, format!("expected header {}", TRACE_HEADER.join(","))));
    }
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| BenchError::parse(line, e.to_string()))?;
        if row.best_cost.is_nan() || !(row.seconds >= 0.0) {
            return Err(BenchError::parse(line, "cost is NaN or seconds negative"));
        }
        let record = TraceRecord {
            cost_evaluations: row.evals,
            level0_calls: row.level0_calls,
            wall_seconds: row.seconds,
            best_cost: row.best_cost,
        };
        record_trace(&mut records, record).map_err(|e| BenchError::parse(line, e.to_string()))?;
    }
    Ok(records)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_trace(&text).map_err(|e| match e {
        BenchError::Parse { line, message } => {
            BenchError::Parse { line, message: format!("{}: {message}", path.display()) }
        }
        other => other,
    })
}

/// `text` with the `seconds` column removed, for comparisons that must
/// ignore wall time.
pub fn strip_seconds(text: &str) -> String {
    text.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() == 4 {
                format!("{},{},{}\n", cols[0], cols[1], cols[3])
            } else {
                format!("{l}\n")
            }
        })
        .collect()
}
