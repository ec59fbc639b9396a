use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{CycleRecord, DatasetError, RawTable, Result, REQUIRED_COLUMNS};

/// Reads a telemetry CSV. Blank cells become masked `NaN`s; the two key
/// columns must always be present.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DatasetError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_csv(file)
}

/// Parses telemetry from any reader. Reported row numbers are file line numbers
/// (the header is line 1).
pub fn read_csv<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(reader);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].trim().is_empty()) => h.clone(),
        Ok(_) => return Err(DatasetError::EmptyInput),
        Err(e) => {
            return Err(DatasetError::Parse { row: 1, column: String::new(), message: e.to_string() })
        }
    };
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(DatasetError::DuplicateColumn(n.clone()));
        }
    }
    let mut source_index = Vec::with_capacity(names.len());
    for req in REQUIRED_COLUMNS {
        let idx = names
            .iter()
            .position(|n| n == req)
            .ok_or_else(|| DatasetError::MissingColumn(req.to_string()))?;
        source_index.push(idx);
    }
    let extras: Vec<usize> = (0..names.len()).filter(|i| !source_index.contains(i)).collect();
    source_index.extend(&extras);
    let columns: Vec<String> = source_index.iter().map(|&i| names[i].clone()).collect();

    let mut records = Vec::new();
    let mut mask = Vec::new();
    for (row_no, row) in rdr.records().enumerate() {
        let line = row_no + 2;
        let row = row.map_err(|e| DatasetError::Parse { row: line, column: String::new(), message: e.to_string() })?;
        let mut values = Vec::with_capacity(columns.len());
        let mut row_mask = Vec::with_capacity(columns.len());
        for (out_col, &src) in source_index.iter().enumerate() {
            let cell = row.get(src).unwrap_or("").trim();
            if cell.is_empty() {
                if out_col < 2 {
                    return Err(DatasetError::Parse {
                        row: line,
                        column: columns[out_col].clone(),
                        message: "key column value is missing".into(),
                    });
                }
                values.push(f64::NAN);
                row_mask.push(true);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DatasetError::Parse {
                row: line,
                column: columns[out_col].clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::Parse {
                    row: line,
                    column: columns[out_col].clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
            row_mask.push(false);
        }
        let cycle = values[0];
        if cycle.fract() != 0.0 || cycle < 1.0 || cycle > f64::from(u32::MAX) {
            return Err(DatasetError::Parse {
                row: line,
                column: columns[0].clone(),
                message: format!("cycle_number must be a positive integer, got {cycle}"),
            });
        }
        if values[1] < 0.0 {
            return Err(DatasetError::Parse {
                row: line,
                column: columns[1].clone(),
                message: "time_s must be non-negative".into(),
            });
        }
        records.push(CycleRecord {
            cycle_number: cycle as u32,
            time_s: values[1],
            voltage_v: values[2],
            current_a: values[3],
            temperature_c: values[4],
            extra: values[5..].to_vec(),
        });
        mask.push(row_mask);
    }
    if records.is_empty() {
        return Err(DatasetError::EmptyInput);
    }
    RawTable::with_columns(columns, records, Some(mask))
}

/// Serializes a table in canonical column order with shortest round-trip
/// float formatting. Masked cells are written empty.
pub fn table_to_csv_string(table: &RawTable) -> String {
    let mut out = String::new();
    out.push_str(&table.columns().join(","));
    out.push('\n');
    for (r, m) in table.records().iter().zip(table.missing_mask()) {
        let cells: Vec<String> = (0..table.columns().len())
            .map(|c| {
                if m[c] {
                    String::new()
                } else if c == 0 {
                    r.cycle_number.to_string()
                } else {
                    format!("{}", r.get(c))
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(table: &RawTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| DatasetError::Io { path: path.display().to_string(), message: e.to_string() };
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(table_to_csv_string(table).as_bytes()).map_err(io_err)
}
