//! CSV import and export for datasets and query tables.
//!
//! Datasets are written one row per point with a header row: `x` for indexed
//! universes, `x0..x{d-1}` for bit vectors (0/1 columns) and real vectors.
//! Query tables are `index,value` rows. Floats use 17 significant digits.

use std::io::{Read, Write};

use super::{Dataset, DomainError, Points, Query, QueryId, Universe};

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// scientific notation outside `[1e-4, 1e17)`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn csv_err(e: impl std::fmt::Display) -> DomainError {
    DomainError::Csv(e.to_string())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<(), DomainError> {
    let mut w = writer(out);
    let universe = data.universe();
    let dim = universe.dim();
    match universe {
        Universe::Indexed { .. } => w.write_record(["x"]).map_err(csv_err)?,
        _ => w
            .write_record((0..dim).map(|i| format!("x{i}")))
            .map_err(csv_err)?,
    }
    match (universe, data.points()) {
        (Universe::Indexed { .. }, Points::Discrete(p)) => {
            for x in p {
                w.write_record([x.to_string()]).map_err(csv_err)?;
            }
        }
        (Universe::BitVectors { .. }, Points::Discrete(p)) => {
            for x in p {
                w.write_record((0..dim).map(|i| if x >> i & 1 == 1 { "1" } else { "0" }))
                    .map_err(csv_err)?;
            }
        }
        (_, Points::Real(v)) => {
            for row in v.chunks(dim) {
                w.write_record(row.iter().map(|&c| format_float(c)))
                    .map_err(csv_err)?;
            }
        }
        _ => unreachable!("dataset storage matches its universe"),
    }
    w.flush().map_err(csv_err)
}

pub fn read_dataset_csv<R: Read>(universe: Universe, input: R) -> Result<Dataset, DomainError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let dim = universe.dim();
    let mut discrete = Vec::new();
    let mut real = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != dim {
            return Err(DomainError::Csv(format!(
                "row {}: expected {dim} columns, found {}",
                row + 1,
                rec.len()
            )));
        }
        let bad =
            |field: &str| DomainError::Csv(format!("row {}: cannot parse {field:?}", row + 1));
        match universe {
            Universe::Indexed { .. } => {
                discrete.push(rec[0].trim().parse::<u64>().map_err(|_| bad(&rec[0]))?)
            }
            Universe::BitVectors { .. } => {
                let mut x = 0u64;
                for (i, f) in rec.iter().enumerate() {
                    match f.trim() {
                        "0" => {}
                        "1" => x |= 1 << i,
                        other => return Err(bad(other)),
                    }
                }
                discrete.push(x);
            }
            Universe::RealVectors { .. } => {
                for f in rec.iter() {
                    real.push(f.trim().parse::<f64>().map_err(|_| bad(f))?);
                }
            }
        }
    }
    if universe.is_discrete() {
        Dataset::discrete(universe, discrete)
    } else {
        Dataset::real(universe, real)
    }
}

/// Reads `index,value` rows (with header) into a tabulated query. Every
/// universe index must appear exactly once.
pub fn read_query_table_csv<R: Read>(
    id: QueryId,
    universe: Universe,
    input: R,
) -> Result<Query, DomainError> {
    let len = universe.tabulation_len()?;
    let mut values = vec![f64::NAN; len];
    let mut seen = vec![false; len];
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != 2 {
            return Err(DomainError::Csv(format!(
                "row {}: expected index,value",
                row + 1
            )));
        }
        let idx: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| DomainError::Csv(format!("row {}: bad index", row + 1)))?;
        let val: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| DomainError::Csv(format!("row {}: bad value", row + 1)))?;
        if idx >= len || seen[idx] {
            return Err(DomainError::Csv(format!(
                "row {}: index {idx} out of range or repeated",
                row + 1
            )));
        }
        seen[idx] = true;
        values[idx] = val;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(DomainError::Csv(format!(
            "index {missing} missing from query table"
        )));
    }
    Query::tabulated(id, universe, values)
}

pub fn write_query_table_csv<W: Write>(query: &Query, out: W) -> Result<(), DomainError> {
    let table = query.table()?;
    let mut w = writer(out);
    w.write_record(["index", "value"]).map_err(csv_err)?;
    for (i, v) in table.iter().enumerate() {
        w.write_record([i.to_string(), format_float(*v)])
            .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}
