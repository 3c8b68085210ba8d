use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use tva_core::valet::{generate_trace, write_trace_csv, Phase, VolatilityConfig};

use crate::error::{CliError, CliResult};

pub fn run(minutes: u32, seed: u64, out: &Path) -> CliResult<()> {
    let trace = generate_trace(minutes, seed, &VolatilityConfig::default())?;
    let file = File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut w = BufWriter::new(file);
    write_trace_csv(&mut w, &trace)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(out, e))?;
    let downloads = trace.iter().filter(|r| r.phase == Phase::Downloading).count();
    println!("records={} downloads={} path={}", trace.len(), downloads, out.display());
    Ok(())
}
