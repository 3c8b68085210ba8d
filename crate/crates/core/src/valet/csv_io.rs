use std::io::{Read, Write};
use std::path::Path;

use super::{Mirror, Phase, TraceRecord};
use crate::error::{Result, TvaError};

pub const TRACE_CSV_HEADER: &str = "timestamp,mirror,phase,latency_seconds,energy_joules";

/// Writes records with LF line endings and 6-decimal reals.
pub fn write_trace_csv<W: Write>(mut w: W, records: &[TraceRecord]) -> std::io::Result<()> {
    writeln!(w, "{TRACE_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.6},{:.6}",
            r.timestamp,
            r.mirror.as_str(),
            r.phase.as_str(),
            r.latency_seconds,
            r.energy_joules
        )?;
    }
    Ok(())
}

/// Parses a trace CSV (LF or CRLF), validating every row.
pub fn read_trace_csv<R: Read>(r: R) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| TvaError::Malformed {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != TRACE_CSV_HEADER {
        return Err(TvaError::Malformed {
            line: 1,
            message: format!("expected header '{TRACE_CSV_HEADER}', found '{header}'"),
        });
    }

    let mut out: Vec<TraceRecord> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| TvaError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| TvaError::Malformed { line, message };
        if row.len() != 5 {
            return Err(bad(format!("expected 5 fields, found {}", row.len())));
        }
        let timestamp: i64 = row[0]
            .parse()
            .map_err(|_| bad(format!("invalid timestamp '{}'", &row[0])))?;
        let mirror = Mirror::parse(&row[1]).ok_or_else(|| bad(format!("unknown mirror '{}'", &row[1])))?;
        let phase = Phase::parse(&row[2]).ok_or_else(|| bad(format!("unknown phase '{}'", &row[2])))?;
        let real = |i: usize, name: &str| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("invalid {name} '{}'", &row[i])))
        };
        let record = TraceRecord {
            timestamp,
            mirror,
            phase,
            latency_seconds: real(3, "latency_seconds")?,
            energy_joules: real(4, "energy_joules")?,
        };
        record.validate().map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = out.last() {
            if record.timestamp <= prev.timestamp {
                return Err(bad(format!(
                    "timestamp {} does not increase (previous {})",
                    record.timestamp, prev.timestamp
                )));
            }
        }
        out.push(record);
    }
    Ok(out)
}

pub fn ingest_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| TvaError::Io(format!("{}: {e}", path.display())))?;
    read_trace_csv(std::io::BufReader::new(file))
}
