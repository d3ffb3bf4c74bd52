//! CSV and JSON Lines import/export.
//!
//! CSV files carry a header naming schema columns (vertex files start with
//! `vid`, edge files with `soid,svid,toid,tvid`). Document and array columns
//! hold JSON text. `\N` is Null; an empty cell is Null except in text
//! columns, where it is the empty string.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::schema::{ColumnType, Schema, DOCUMENT_COLUMN};
use crate::value::Value;

pub const NULL_MARKER: &str = "\\N";

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Vec<Vec<Value>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut positions = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        let name = h.trim();
        let idx = schema
            .column_index(name)
            .ok_or_else(|| Error::schema(format!("line 1: {} has no column {name}", schema.name)))?;
        if positions.contains(&idx) {
            return Err(Error::schema(format!("line 1: column {name} appears twice")));
        }
        positions.push(idx);
    }
    let mut rows = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Format(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values = vec![Value::Null; schema.arity()];
        for (cell, &idx) in record.iter().zip(&positions) {
            let col = &schema.columns[idx];
            values[idx] = parse_cell(cell, col.ty)
                .map_err(|m| Error::Format(format!("line {line}: column {}: {m}", col.name)))?;
        }
        schema
            .conform(&mut values)
            .map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        rows.push(values);
    }
    Ok(rows)
}

fn parse_cell(cell: &str, ty: ColumnType) -> std::result::Result<Value, String> {
    if cell == NULL_MARKER {
        return Ok(Value::Null);
    }
    if cell.is_empty() && ty != ColumnType::Text {
        return Ok(Value::Null);
    }
    match ty {
        ColumnType::Text => Ok(Value::Text(cell.to_string())),
        ColumnType::Int => cell
            .trim()
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("expected an integer, found {cell:?}")),
        ColumnType::Float => cell
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .map(Value::Float)
            .ok_or_else(|| format!("expected a finite number, found {cell:?}")),
        ColumnType::Bool => match cell.trim().to_ascii_lowercase().as_str() {
            "true" | "t" | "1" => Ok(Value::Bool(true)),
            "false" | "f" | "0" => Ok(Value::Bool(false)),
            _ => Err(format!("expected a boolean, found {cell:?}")),
        },
        ColumnType::Document | ColumnType::Array => {
            let json: serde_json::Value =
                serde_json::from_str(cell).map_err(|e| format!("invalid JSON: {e}"))?;
            let v = Value::from_json(&json);
            match (ty, &v) {
                (ColumnType::Document, Value::Document(_)) | (ColumnType::Array, Value::Array(_)) => Ok(v),
                _ => Err(format!("expected a JSON {}", if ty == ColumnType::Document { "object" } else { "array" })),
            }
        }
    }
}

fn format_cell(v: &Value) -> String {
    match v {
        Value::Null => NULL_MARKER.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format!("{x:?}"),
        Value::Text(s) => s.clone(),
        Value::Document(_) | Value::Array(_) => v.to_json().to_string(),
    }
}

pub fn write_csv<'a, W: Write>(
    writer: W,
    schema: &Schema,
    rows: impl IntoIterator<Item = &'a [Value]>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(schema.columns.iter().map(|c| c.name.as_str()))?;
    for row in rows {
        w.write_record(row.iter().map(format_cell))?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line; blank lines are skipped. Each document becomes
/// a single-column row.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<Vec<Value>>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let json: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        if !json.is_object() {
            return Err(Error::Format(format!("line {}: expected a JSON object", i + 1)));
        }
        rows.push(vec![Value::from_json(&json)]);
    }
    Ok(rows)
}

pub fn write_jsonl<'a, W: Write>(mut writer: W, rows: impl IntoIterator<Item = &'a [Value]>) -> Result<()> {
    for row in rows {
        let doc = row
            .first()
            .ok_or_else(|| Error::Contract("document row without a value".into()))?;
        serde_json::to_writer(&mut writer, &doc.to_json())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Whether `schema` is exported as JSON Lines rather than CSV.
pub fn uses_jsonl(schema: &Schema) -> bool {
    schema.columns.len() == 1 && schema.columns[0].name == DOCUMENT_COLUMN
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnDef, Oid};

    fn person() -> Schema {
        Schema::vertex_table(
            "Person",
            Oid(0),
            "Person",
            vec![
                ColumnDef::new("name", ColumnType::Text),
                ColumnDef::new("age", ColumnType::Float),
                ColumnDef::new("props", ColumnType::Document),
            ],
        )
    }

    #[test]
    fn vertex_csv_with_props() {
        let text = "vid,name,age,props\n0,Ann,31,\"{\"\"city\"\":\"\"Oslo\"\"}\"\n1,,\\N,\n";
        let rows = read_csv(text.as_bytes(), &person()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0][0], Value::Int(0));
        assert_eq!(rows[0][2], Value::Float(31.0));
        assert_eq!(rows[0][3].as_document().unwrap()["city"], Value::from("Oslo"));
        assert_eq!(rows[1][1], Value::from(""));
        assert_eq!(rows[1][2], Value::Null);
    }

    #[test]
    fn malformed_line_names_its_number() {
        let text = "vid,name,age,props\n0,Ann,31,\n1,Bob,old,\n";
        let err = read_csv(text.as_bytes(), &person()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let ragged = "vid,name,age,props\n0,Ann\n";
        let err = read_csv(ragged.as_bytes(), &person()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            vec![Value::Int(0), Value::from("a,\"b\""), Value::Float(0.1), Value::Null],
            vec![Value::Int(1), Value::from(""), Value::Null, Value::from_json(&serde_json::json!({"k": [1, 2.5]}))],
        ];
        let mut out = Vec::new();
        write_csv(&mut out, &person(), rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(read_csv(out.as_slice(), &person()).unwrap(), rows);
    }

    #[test]
    fn jsonl_round_trip() {
        let text = "{\"customer_id\": 7, \"product_id\": 2}\n\n{\"customer_id\": 1, \"x\": [1.5]}\n";
        let rows = read_jsonl(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        let mut out = Vec::new();
        write_jsonl(&mut out, rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(read_jsonl(out.as_slice()).unwrap(), rows);
        assert!(read_jsonl("{\"a\":1}\n[1]\n".as_bytes()).unwrap_err().to_string().contains("line 2"));
    }
}
