//! Per-collection column statistics and selectivity estimates.

use std::collections::{BTreeMap, HashSet};

use crate::predicate::{CompareOp, Operand, Predicate, Side};
use crate::value::{PathStep, Value};

/// Selectivity used for comparisons the uniformity model cannot price
/// (non-numeric ranges, column-to-column comparisons).
pub const DEFAULT_RANGE_SELECTIVITY: f64 = 1.0 / 3.0;

/// A column, or one top-level key inside a document column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldKey {
    pub column: usize,
    pub key: Option<String>,
}

impl FieldKey {
    pub fn column(column: usize) -> Self {
        FieldKey { column, key: None }
    }

    pub fn nested(column: usize, key: impl Into<String>) -> Self {
        FieldKey {
            column,
            key: Some(key.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldStats {
    pub null_count: u64,
    pub min: Option<Value>,
    pub max: Option<Value>,
    pub ndv: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ColumnStats {
    pub row_count: u64,
    pub fields: BTreeMap<FieldKey, FieldStats>,
}

#[derive(Default)]
struct FieldAccumulator {
    nulls: u64,
    min: Option<Value>,
    max: Option<Value>,
    distinct: HashSet<Value>,
}

impl FieldAccumulator {
    fn add(&mut self, v: &Value) {
        if v.is_null() {
            self.nulls += 1;
            return;
        }
        if self.min.as_ref().is_none_or(|m| v.total_cmp(m).is_lt()) {
            self.min = Some(v.clone());
        }
        if self.max.as_ref().is_none_or(|m| v.total_cmp(m).is_gt()) {
            self.max = Some(v.clone());
        }
        if !self.distinct.contains(v) {
            self.distinct.insert(v.clone());
        }
    }

    fn finish(self) -> FieldStats {
        FieldStats {
            null_count: self.nulls,
            min: self.min,
            max: self.max,
            ndv: self.distinct.len() as u64,
        }
    }
}

/// One pass over `rows`; exact counts, min/max and NDV. Top-level keys of
/// document columns get their own entries (absent key counts as Null).
pub fn collect_stats<'a>(rows: impl IntoIterator<Item = &'a [Value]>) -> ColumnStats {
    let mut row_count = 0u64;
    let mut columns: Vec<FieldAccumulator> = Vec::new();
    let mut nested: BTreeMap<FieldKey, FieldAccumulator> = BTreeMap::new();
    let mut nested_seen: BTreeMap<FieldKey, u64> = BTreeMap::new();
    for row in rows {
        row_count += 1;
        if columns.len() < row.len() {
            columns.resize_with(row.len(), FieldAccumulator::default);
        }
        for (i, v) in row.iter().enumerate() {
            columns[i].add(v);
            if let Value::Document(doc) = v {
                for (k, inner) in doc {
                    let key = FieldKey::nested(i, k.clone());
                    nested.entry(key.clone()).or_default().add(inner);
                    *nested_seen.entry(key).or_default() += 1;
                }
            }
        }
    }
    let mut fields: BTreeMap<FieldKey, FieldStats> = columns
        .into_iter()
        .enumerate()
        .map(|(i, acc)| (FieldKey::column(i), acc.finish()))
        .collect();
    for (key, acc) in nested {
        let seen = nested_seen[&key];
        let mut s = acc.finish();
        s.null_count += row_count - seen;
        fields.insert(key, s);
    }
    ColumnStats { row_count, fields }
}

impl ColumnStats {
    pub fn field(&self, key: &FieldKey) -> Option<&FieldStats> {
        self.fields.get(key)
    }
}

/// Estimated fraction of rows satisfying a unary predicate, in `[0, 1]`.
pub fn estimate_selectivity(pred: &Predicate, stats: Option<&ColumnStats>) -> f64 {
    let s = match pred {
        Predicate::Const(b) => f64::from(u8::from(*b)),
        Predicate::And(ps) => ps.iter().map(|p| estimate_selectivity(p, stats)).product(),
        Predicate::Or(ps) => ps.iter().fold(0.0, |acc, p| {
            let s = estimate_selectivity(p, stats);
            acc + s - acc * s
        }),
        Predicate::Not(p) => 1.0 - estimate_selectivity(p, stats),
        Predicate::Compare { op, lhs, rhs } => match stats {
            None => 1.0,
            Some(stats) => compare_selectivity(*op, lhs, rhs, stats),
        },
    };
    s.clamp(0.0, 1.0)
}

fn field_key(op: &Operand) -> Option<FieldKey> {
    match op {
        Operand::Field(f) if f.side == Side::Left => match &f.path {
            None => Some(FieldKey::column(f.index)),
            Some(path) => match path.steps() {
                [PathStep::Key(k)] => Some(FieldKey::nested(f.index, k.clone())),
                _ => None,
            },
        },
        _ => None,
    }
}

fn compare_selectivity(op: CompareOp, lhs: &Operand, rhs: &Operand, stats: &ColumnStats) -> f64 {
    let (field, literal, op) = match (lhs, rhs) {
        (Operand::Field(_), Operand::Literal(v)) => (lhs, v, op),
        (Operand::Literal(v), Operand::Field(_)) => (rhs, v, op.flip()),
        _ => return DEFAULT_RANGE_SELECTIVITY,
    };
    let Some(fs) = field_key(field).and_then(|k| stats.field(&k)) else {
        return 1.0;
    };
    if literal.is_null() {
        return 0.0;
    }
    let eq = if fs.ndv == 0 { 0.0 } else { 1.0 / fs.ndv as f64 };
    match op {
        CompareOp::Eq => eq,
        CompareOp::Ne => {
            if fs.ndv == 0 {
                0.0
            } else {
                1.0 - eq
            }
        }
        _ => range_selectivity(op, literal, fs),
    }
}

fn range_selectivity(op: CompareOp, literal: &Value, fs: &FieldStats) -> f64 {
    let (Some(lo), Some(hi), Some(k)) = (
        fs.min.as_ref().and_then(Value::as_f64),
        fs.max.as_ref().and_then(Value::as_f64),
        literal.as_f64(),
    ) else {
        return if fs.ndv == 0 { 0.0 } else { DEFAULT_RANGE_SELECTIVITY };
    };
    if hi <= lo {
        // Single distinct value: the comparison is either always or never true.
        return match lo.partial_cmp(&k) {
            Some(ord) => f64::from(u8::from(op.holds(ord))),
            None => 0.0,
        };
    }
    let span = hi - lo;
    let s = match op {
        CompareOp::Lt | CompareOp::Le => (k - lo) / span,
        CompareOp::Gt | CompareOp::Ge => (hi - k) / span,
        _ => unreachable!("range_selectivity called with {op:?}"),
    };
    s.clamp(0.0, 1.0)
}
