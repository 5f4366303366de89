//! Mixed continuous/categorical tables.

mod csv_io;
mod discretize;

pub use csv_io::{load_csv, read_csv, write_csv, LoadOptions};
pub use discretize::{Closure, ThresholdDiscretizer};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

/// Declared type of one column. Categorical columns carry their ordered labels;
/// values are stored as indices into that list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            categories: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Checks per-column and cross-column schema invariants.
pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut seen = HashSet::new();
    for col in schema {
        if !seen.insert(col.name.as_str()) {
            return Err(Error::Schema(format!("duplicate column name '{}'", col.name)));
        }
        match col.kind {
            ColumnKind::Categorical => {
                if col.categories.len() < 2 {
                    return Err(Error::Schema(format!(
                        "categorical column '{}' needs at least 2 categories",
                        col.name
                    )));
                }
                let uniq: HashSet<_> = col.categories.iter().collect();
                if uniq.len() != col.categories.len() {
                    return Err(Error::Schema(format!(
                        "categorical column '{}' has duplicate categories",
                        col.name
                    )));
                }
            }
            ColumnKind::Continuous => {
                if !col.categories.is_empty() {
                    return Err(Error::Schema(format!(
                        "continuous column '{}' declares categories",
                        col.name
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Continuous(Vec<f64>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric view: continuous values, or category codes as reals.
    pub fn numeric(&self) -> Vec<f64> {
        match self {
            Column::Continuous(v) => v.clone(),
            Column::Categorical(v) => v.iter().map(|&c| c as f64).collect(),
        }
    }

    #[inline]
    pub fn value(&self, row: usize) -> f64 {
        match self {
            Column::Continuous(v) => v[row],
            Column::Categorical(v) => v[row] as f64,
        }
    }
}

/// Column-oriented table whose columns follow a declared schema.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataset {
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
}

impl MixedDataset {
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<Column>) -> Result<Self> {
        validate_schema(&schema)?;
        if schema.len() != columns.len() {
            return Err(Error::shape(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Column::len);
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != n {
                return Err(Error::shape(format!(
                    "column '{}' has {} rows, expected {n}",
                    s.name,
                    c.len()
                )));
            }
            match (s.kind, c) {
                (ColumnKind::Continuous, Column::Continuous(v)) => {
                    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                        return Err(Error::Ingest {
                            row,
                            column: s.name.clone(),
                            message: "non-finite value".into(),
                        });
                    }
                }
                (ColumnKind::Categorical, Column::Categorical(v)) => {
                    if let Some(row) = v.iter().position(|&x| x as usize >= s.categories.len()) {
                        return Err(Error::Ingest {
                            row,
                            column: s.name.clone(),
                            message: format!("category code {} out of range", v[row]),
                        });
                    }
                }
                _ => {
                    return Err(Error::Schema(format!(
                        "column '{}' storage does not match its declared kind",
                        s.name
                    )))
                }
            }
        }
        Ok(Self { schema, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::Schema(format!("no column named '{name}'")))
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        Ok(&self.columns[self.index_of(name)?])
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col].value(row)
    }

    /// Label of a cell as written in CSV output.
    pub fn label(&self, row: usize, col: usize) -> String {
        match &self.columns[col] {
            Column::Continuous(v) => format!("{}", v[row]),
            Column::Categorical(v) => self.schema[col].categories[v[row] as usize].clone(),
        }
    }

    /// Numeric row (category codes as reals), in schema order.
    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.value(row)).collect()
    }

    pub fn continuous_indices(&self) -> Vec<usize> {
        indices_of_kind(&self.schema, ColumnKind::Continuous)
    }

    pub fn categorical_indices(&self) -> Vec<usize> {
        indices_of_kind(&self.schema, ColumnKind::Categorical)
    }

    /// Rows in the given order (repetitions allowed).
    pub fn select_rows(&self, rows: &[usize]) -> MixedDataset {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Continuous(v) => Column::Continuous(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
            })
            .collect();
        MixedDataset {
            schema: self.schema.clone(),
            columns,
        }
    }

    /// Projection onto the named columns, in the given order.
    pub fn select_columns(&self, names: &[&str]) -> Result<MixedDataset> {
        let mut schema = Vec::with_capacity(names.len());
        let mut columns = Vec::with_capacity(names.len());
        for name in names {
            let i = self.index_of(name)?;
            schema.push(self.schema[i].clone());
            columns.push(self.columns[i].clone());
        }
        MixedDataset::new(schema, columns)
    }

    pub fn with_column(mut self, schema: ColumnSchema, column: Column) -> Result<MixedDataset> {
        self.schema.push(schema);
        self.columns.push(column);
        MixedDataset::new(self.schema, self.columns)
    }

    /// Category frequencies of a categorical column.
    pub fn category_proportions(&self, col: usize) -> Result<Vec<f64>> {
        match &self.columns[col] {
            Column::Categorical(v) => {
                let k = self.schema[col].categories.len();
                let mut counts = vec![0usize; k];
                for &c in v {
                    counts[c as usize] += 1;
                }
                let n = v.len().max(1) as f64;
                Ok(counts.into_iter().map(|c| c as f64 / n).collect())
            }
            Column::Continuous(_) => Err(Error::Schema(format!(
                "column '{}' is not categorical",
                self.schema[col].name
            ))),
        }
    }
}

fn indices_of_kind(schema: &[ColumnSchema], kind: ColumnKind) -> Vec<usize> {
    schema
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == kind)
        .map(|(i, _)| i)
        .collect()
}
