use super::{Column, ColumnKind, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Skip rows with an empty or `NA` cell instead of failing.
    pub drop_incomplete: bool,
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

pub fn load_csv(path: &Path, schema: &[ColumnSchema], opts: LoadOptions) -> Result<MixedDataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, opts)
}

/// Parses a headed CSV. Header columns may appear in any order but must be
/// exactly the schema's names; the result follows schema order.
pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema], opts: LoadOptions) -> Result<MixedDataset> {
    super::validate_schema(schema)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != schema.len() {
        return Err(Error::Schema(format!(
            "header has {} columns, schema declares {}",
            header.len(),
            schema.len()
        )));
    }
    let mut positions = Vec::with_capacity(schema.len());
    for col in schema {
        let pos = header
            .iter()
            .position(|h| h.trim() == col.name)
            .ok_or_else(|| Error::Schema(format!("column '{}' not found in header", col.name)))?;
        positions.push(pos);
    }

    let mut cont: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
    let mut cat: Vec<Vec<u32>> = vec![Vec::new(); schema.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let fields: Vec<&str> = positions.iter().map(|&p| record.get(p).unwrap_or("")).collect();
        if let Some(j) = fields.iter().position(|f| is_missing(f)) {
            if opts.drop_incomplete {
                continue;
            }
            return Err(Error::Ingest {
                row,
                column: schema[j].name.clone(),
                message: "missing value".into(),
            });
        }
        for (j, (col, field)) in schema.iter().zip(&fields).enumerate() {
            let field = field.trim();
            match col.kind {
                ColumnKind::Continuous => {
                    let v: f64 = field.parse().map_err(|_| Error::Ingest {
                        row,
                        column: col.name.clone(),
                        message: format!("'{field}' is not a number"),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::Ingest {
                            row,
                            column: col.name.clone(),
                            message: format!("'{field}' is not finite"),
                        });
                    }
                    cont[j].push(v);
                }
                ColumnKind::Categorical => {
                    let code = col.category_index(field).ok_or_else(|| Error::Ingest {
                        row,
                        column: col.name.clone(),
                        message: format!("unknown category '{field}'"),
                    })?;
                    cat[j].push(code as u32);
                }
            }
        }
    }

    let columns = schema
        .iter()
        .enumerate()
        .map(|(j, col)| match col.kind {
            ColumnKind::Continuous => Column::Continuous(std::mem::take(&mut cont[j])),
            ColumnKind::Categorical => Column::Categorical(std::mem::take(&mut cat[j])),
        })
        .collect();
    MixedDataset::new(schema.to_vec(), columns)
}

/// Writes a header row and one line per record. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(ds: &MixedDataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(ds.schema().iter().map(|c| c.name.as_str()))?;
    let mut buf = Vec::with_capacity(ds.n_cols());
    for row in 0..ds.n_rows() {
        buf.clear();
        for col in 0..ds.n_cols() {
            buf.push(ds.label(row, col));
        }
        w.write_record(&buf)?;
    }
    w.flush()?;
    Ok(())
}
