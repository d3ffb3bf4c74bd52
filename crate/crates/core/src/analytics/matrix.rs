//! Dense matrices and the two ways of building them from stored data:
//! column extraction (local access) and array gathering over a filtered
//! scan (random access).

use std::fmt::Write as _;

use crate::database::Database;
use crate::error::{Error, Result};
use crate::predicate::{ColumnRef, Expr, Layout, Predicate};
use crate::query::physical::QueryResult;
use crate::value::{resolve_path, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub row_labels: Option<Vec<String>>,
    pub col_labels: Option<Vec<String>>,
}

impl Matrix {
    /// Row-major matrix; rejects a wrong length and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::execution(format!(
                "non-finite entry {} at row {}, column {}",
                data[i],
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            data,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![0.0; rows * cols]).expect("zeros are finite")
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Contract(format!("ragged rows: {} and {}", cols, r.len())));
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Bytes held by the entries.
    pub fn size_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f64>()
    }

    pub fn with_col_labels(mut self, labels: Vec<String>) -> Self {
        self.col_labels = Some(labels);
        self
    }

    /// Keep only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let data = (0..self.rows)
            .flat_map(|i| cols.iter().map(move |&j| self.get(i, j)))
            .collect();
        Matrix {
            rows: self.rows,
            cols: cols.len(),
            data,
            row_labels: self.row_labels.clone(),
            col_labels: self
                .col_labels
                .as_ref()
                .map(|l| cols.iter().map(|&j| l[j].clone()).collect()),
        }
    }

    /// Columns scaled to zero mean and unit variance; constant columns
    /// are only centered.
    pub fn standardized(&self) -> Matrix {
        let mut out = self.clone();
        let n = self.rows as f64;
        for j in 0..self.cols {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
            let scale = if sd > 0.0 { sd } else { 1.0 };
            for i in 0..self.rows {
                out.data[i * self.cols + j] = (col[i] - mean) / scale;
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(labels) = &self.col_labels {
            out.push_str(&labels.join(","));
            out.push('\n');
        }
        for i in 0..self.rows {
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn numeric(v: &Value, what: impl Fn() -> String) -> Result<f64> {
    match v {
        Value::Null => Err(Error::execution(format!("null cell in {}", what()))),
        other => other
            .as_f64()
            .ok_or_else(|| Error::execution(format!("non-numeric {} value in {}", other.type_name(), what()))),
    }
}

/// Numeric columns of a collection as a matrix, one row per live record
/// in tid order; row labels are tids.
pub fn rel2matrix(db: &Database, collection: &str, columns: &[&str]) -> Result<Matrix> {
    let coll = db.collection_by_name(collection)?;
    let schema = coll.schema();
    let idx = columns
        .iter()
        .map(|c| {
            schema
                .columns
                .iter()
                .position(|d| d.name == *c)
                .ok_or_else(|| Error::schema(format!("no column {c} in {collection}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(coll.len() * idx.len());
    let mut labels = Vec::with_capacity(coll.len());
    for r in coll.iter_live() {
        for (&i, name) in idx.iter().zip(columns) {
            data.push(numeric(&r.values[i], || format!("{collection}.{name}"))?);
        }
        labels.push(r.tid.to_string());
    }
    coll.counters().rows_scanned(labels.len() as u64);
    let mut m = Matrix::new(labels.len(), idx.len(), data)?;
    m.row_labels = Some(labels);
    Ok(m.with_col_labels(columns.iter().map(|c| c.to_string()).collect()))
}

/// Named columns of a query result as a matrix, in row order.
pub fn result_matrix(result: &QueryResult, columns: &[&str]) -> Result<Matrix> {
    let idx = columns
        .iter()
        .map(|c| {
            result
                .columns
                .iter()
                .position(|d| d == c)
                .ok_or_else(|| Error::schema(format!("no output column {c}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut data = Vec::with_capacity(result.rows.len() * idx.len());
    for row in &result.rows {
        for (&i, name) in idx.iter().zip(columns) {
            data.push(numeric(&row[i], || format!("column {name}"))?);
        }
    }
    Ok(Matrix::new(result.rows.len(), idx.len(), data)?.with_col_labels(columns.iter().map(|c| c.to_string()).collect()))
}

/// One row per record of `collection` satisfying `filter`, taken from the
/// numeric array at `array`. Ragged arrays are an error unless `pad`, which
/// zero-extends to the longest.
pub fn gather_matrix(
    db: &Database,
    collection: &str,
    filter: Option<&Expr>,
    array: &ColumnRef,
    pad: bool,
) -> Result<Matrix> {
    let coll = db.collection_by_name(collection)?;
    let binding = array.qualifier.clone().unwrap_or_else(|| collection.to_string());
    let layout = Layout::of_schema(&binding, coll.schema());
    let pred = filter.map(|f| Predicate::bind(f, &layout, None)).transpose()?;
    let (col, path) = layout
        .resolve(array)?
        .ok_or_else(|| Error::schema(format!("no column {array} in {collection}")))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for r in coll.scan(pred.as_ref()) {
        let v = match &path {
            Some(p) => resolve_path(&r.values[col], p),
            None => &r.values[col],
        };
        rows.push(v.numeric_array()?);
        labels.push(r.tid.to_string());
    }
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        if !pad {
            return Err(Error::execution(format!(
                "ragged arrays: record {} has {} elements, expected {width}",
                labels[i],
                r.len()
            )));
        }
    }
    for r in &mut rows {
        r.resize(width, 0.0);
    }
    let mut m = Matrix::new(rows.len(), width, rows.concat())?;
    m.row_labels = Some(labels);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnDef, ColumnType};

    fn table(rows: Vec<Vec<Value>>) -> Database {
        let mut db = Database::in_memory();
        db.create_relation(
            "T",
            vec![
                ColumnDef::new("a", ColumnType::Int),
                ColumnDef::new("b", ColumnType::Float),
                ColumnDef::new("s", ColumnType::Text),
            ],
        )
        .unwrap();
        db.insert_by_name("T", rows).unwrap();
        db
    }

    fn row(a: i64, b: f64) -> Vec<Value> {
        vec![Value::Int(a), Value::Float(b), Value::from("x")]
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn rel2matrix_copies_columns_in_row_order() {
        let db = table(vec![row(1, 0.5), row(2, 1.5), row(3, 2.5)]);
        let m = rel2matrix(&db, "T", &["a", "b"]).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(m.data(), &[1.0, 0.5, 2.0, 1.5, 3.0, 2.5]);
        assert!(rel2matrix(&db, "T", &["s"]).is_err());
        let empty = table(vec![]);
        let m = rel2matrix(&empty, "T", &["a", "b"]).unwrap();
        assert_eq!((m.rows(), m.cols()), (0, 2));
    }

    #[test]
    fn rel2matrix_rejects_null() {
        let db = table(vec![vec![Value::Null, Value::Float(1.0), Value::from("x")]]);
        assert!(rel2matrix(&db, "T", &["a"]).is_err());
    }

    fn docs(items: &[serde_json::Value]) -> Database {
        let mut db = Database::in_memory();
        db.create_documents("D").unwrap();
        db.insert_by_name("D", items.iter().map(|j| vec![Value::from_json(j)]).collect()).unwrap();
        db
    }

    #[test]
    fn gather_filters_and_pads() {
        use serde_json::json;
        let db = docs(&[
            json!({"k": 1, "f": [1, 2]}),
            json!({"k": 2, "f": [3, 4]}),
            json!({"k": 3, "f": [5]}),
        ]);
        let f = ColumnRef::document_path("D", vec![crate::value::PathStep::Key("f".into())]);
        let k = ColumnRef::document_path("D", vec![crate::value::PathStep::Key("k".into())]);
        let le2 = Expr::compare(crate::predicate::CompareOp::Le, crate::predicate::Term::Column(k.clone()), crate::predicate::Term::literal(2));
        let m = gather_matrix(&db, "D", Some(&le2), &f, false).unwrap();
        assert_eq!(m, Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap().tap_labels(&m));
        let none = Expr::col_eq_lit(k, 99);
        let m = gather_matrix(&db, "D", Some(&none), &f, false).unwrap();
        assert_eq!((m.rows(), m.cols()), (0, 0));
        assert!(gather_matrix(&db, "D", None, &f, false).is_err());
        let m = gather_matrix(&db, "D", None, &f, true).unwrap();
        assert_eq!(m.row(2), &[5.0, 0.0]);
    }

    impl Matrix {
        fn tap_labels(mut self, other: &Matrix) -> Matrix {
            self.row_labels = other.row_labels.clone();
            self
        }
    }
}
