//! Rendering query results and matrices as aligned tables, CSV or JSON.

use std::fmt::Write as _;
use std::str::FromStr;

use gredo_core::analytics::Matrix;
use gredo_core::query::physical::QueryResult;
use gredo_core::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other} (expected table, csv or json)")),
        }
    }
}

fn cell(v: &Value) -> String {
    v.to_string()
}

fn table(columns: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = columns.iter().map(|c| c.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = String::new();
    out.push_str(&line(columns));
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    let n = rows.len();
    let _ = write!(out, "({n} row{})", if n == 1 { "" } else { "s" });
    out
}

fn csv_text(columns: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    let bytes = w.into_inner().expect("flushing to memory");
    String::from_utf8(bytes).expect("csv of utf-8 cells").trim_end().to_string()
}

pub fn render_result(result: &QueryResult, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = result
                .rows
                .iter()
                .map(|row| {
                    serde_json::Value::Object(
                        result.columns.iter().cloned().zip(row.iter().map(Value::to_json)).collect(),
                    )
                })
                .collect();
            serde_json::to_string_pretty(&rows).expect("json values serialize")
        }
        _ => {
            let rows: Vec<Vec<String>> = result.rows.iter().map(|r| r.iter().map(cell).collect()).collect();
            if format == OutputFormat::Csv {
                csv_text(&result.columns, &rows)
            } else {
                table(&result.columns, &rows)
            }
        }
    }
}

pub fn render_matrix(m: &Matrix, format: OutputFormat) -> String {
    let columns: Vec<String> = m
        .col_labels
        .clone()
        .unwrap_or_else(|| (0..m.cols()).map(|j| format!("c{j}")).collect());
    match format {
        OutputFormat::Json => {
            let rows: Vec<&[f64]> = (0..m.rows()).map(|i| m.row(i)).collect();
            serde_json::to_string_pretty(&serde_json::json!({ "columns": columns, "rows": rows }))
                .expect("finite floats serialize")
        }
        OutputFormat::Csv => m.to_csv().trim_end().to_string(),
        OutputFormat::Table => {
            let rows: Vec<Vec<String>> = (0..m.rows())
                .map(|i| m.row(i).iter().map(|x| format!("{x:.6}")).collect())
                .collect();
            table(&columns, &rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> QueryResult {
        QueryResult {
            columns: vec!["id".into(), "name".into()],
            rows: vec![vec![Value::Int(1), Value::from("Ann")], vec![Value::Int(22), Value::from("a,b")]],
        }
    }

    #[test]
    fn table_aligns_columns() {
        let text = render_result(&result(), OutputFormat::Table);
        assert_eq!(text, "id | name\n---+-----\n1  | Ann\n22 | a,b\n(2 rows)");
    }

    #[test]
    fn csv_quotes_and_json_keys() {
        assert_eq!(render_result(&result(), OutputFormat::Csv), "id,name\n1,Ann\n22,\"a,b\"");
        let json: serde_json::Value = serde_json::from_str(&render_result(&result(), OutputFormat::Json)).unwrap();
        assert_eq!(json[1]["name"], "a,b");
    }
}
