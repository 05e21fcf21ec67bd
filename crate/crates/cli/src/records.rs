//! Sweep CSV format.
//!
//! Columns, in order:
//! `grid_id,T,M,alpha,beta,model_kind,rep,seed,excess_risk,diverged,wall_ms`.
//! Reals are written with 17 significant digits (`{:.16e}`) so they parse
//! back bit-exactly; rows end in `\n`.

use std::io::{Read, Write};

use quadsgd_core::{ModelKind, SweepRecord};

use crate::error::CliError;

pub const HEADER: [&str; 11] = [
    "grid_id",
    "T",
    "M",
    "alpha",
    "beta",
    "model_kind",
    "rep",
    "seed",
    "excess_risk",
    "diverged",
    "wall_ms",
];

/// 17 significant digits, plain `.` decimal point.
pub fn fmt_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // NaN, inf, -inf all parse back through f64::from_str
        format!("{x}")
    }
}

pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([
            r.grid_id.to_string(),
            r.total_steps.to_string(),
            r.model_size.to_string(),
            fmt_real(r.alpha),
            fmt_real(r.beta),
            r.kind.as_str().to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            fmt_real(r.excess_risk),
            r.diverged.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(
    row: &csv::StringRecord,
    idx: usize,
    line: u64,
) -> Result<T, CliError> {
    let raw = row.get(idx).unwrap_or("");
    raw.parse().map_err(|_| {
        CliError::Csv(format!(
            "line {line}: cannot parse column {} from {raw:?}",
            HEADER[idx]
        ))
    })
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SweepRecord>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut rows = rdr.records();
    let header = rows
        .next()
        .ok_or_else(|| CliError::Csv("empty file".into()))??;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(CliError::Csv(format!(
            "missing or unexpected header: {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != HEADER.len() {
            return Err(CliError::Csv(format!(
                "line {line}: expected {} columns, got {}",
                HEADER.len(),
                row.len()
            )));
        }
        let kind: ModelKind = field::<String>(&row, 5, line)?
            .parse()
            .map_err(|_| CliError::Csv(format!("line {line}: bad model_kind")))?;
        out.push(SweepRecord {
            grid_id: field(&row, 0, line)?,
            total_steps: field(&row, 1, line)?,
            model_size: field(&row, 2, line)?,
            alpha: field(&row, 3, line)?,
            beta: field(&row, 4, line)?,
            kind,
            rep: field(&row, 6, line)?,
            seed: field(&row, 7, line)?,
            excess_risk: field(&row, 8, line)?,
            diverged: field(&row, 9, line)?,
            wall_ms: field(&row, 10, line)?,
        });
    }
    Ok(out)
}
