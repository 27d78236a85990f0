use std::io::{self, BufRead, Write};

use crate::ccfomi::UnitRecord;

pub fn write_trace<W: Write>(mut w: W, records: &[UnitRecord]) -> io::Result<()> {
    for r in records {
        write_record(&mut w, r)?;
    }
    w.flush()
}

pub fn write_record<W: Write>(mut w: W, record: &UnitRecord) -> io::Result<()> {
    serde_json::to_writer(&mut w, record)?;
    w.write_all(b"\n")
}

/// Reads a JSONL trace; errors name the offending line.
pub fn read_trace<R: BufRead>(r: R) -> io::Result<Vec<UnitRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        out.push(record);
    }
    Ok(out)
}

/// The trace without wall-clock fields, for comparing runs.
pub fn strip_latency(records: &[UnitRecord]) -> Vec<UnitRecord> {
    records
        .iter()
        .map(|r| UnitRecord {
            latency_us: 0,
            ..r.clone()
        })
        .collect()
}
