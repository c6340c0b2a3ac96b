use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::protocol::SweepRow;

pub const SWEEP_HEADER: &str = "lambda,p_s,nu_minus,negativity,det_a,det_b,det_c,trace_term";

/// Writes the header and one line per row. Floats use the shortest decimal
/// form that reads back to the same value, so output is byte-stable.
pub fn write_sweep<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Usage("no sweep rows to write".into()));
    }
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.lambda, r.p_s, r.nu_minus, r.negativity, r.det_a, r.det_b, r.det_c, r.trace_term
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Usage("no sweep rows to write".into()));
    }
    let file = std::fs::File::create(path)?;
    write_sweep(rows, std::io::BufWriter::new(file))
}
