//! The unified NF² value: atomic scalars, nested documents and arrays.
//!
//! Tuples, documents, vertex and edge records all store their fields as
//! [`Value`]s. Comparisons used by predicates go through [`Value::compare`],
//! which promotes `Int` to `Float` and never fails; structural equality and
//! the total order used for sorting are separate (`Eq`, [`Value::total_cmp`]).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered key → value map. Keys are unique by construction.
pub type Document = IndexMap<String, Value>;

#[derive(Debug, Clone, Default)]
pub enum Value {
    #[default]
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Document(Document),
    Array(Vec<Value>),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "text",
            Value::Document(_) => "document",
            Value::Array(_) => "array",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(f) => Some(f),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_document(&self) -> Option<&Document> {
        match self {
            Value::Document(d) => Some(d),
            _ => None,
        }
    }

    /// Predicate comparison. `None` means "not comparable": any Null
    /// operand, mismatched types, or ordering between composite values.
    /// Composite values compare only for (structural) equality.
    pub fn compare(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => None,
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Float(a), Value::Float(b)) => a.partial_cmp(b),
            (Value::Int(a), Value::Float(b)) => cmp_int_float(*a, *b),
            (Value::Float(a), Value::Int(b)) => cmp_int_float(*b, *a).map(Ordering::reverse),
            (Value::Text(a), Value::Text(b)) => Some(a.as_str().cmp(b.as_str())),
            (Value::Document(_), Value::Document(_)) | (Value::Array(_), Value::Array(_)) => {
                (self == other).then_some(Ordering::Equal)
            }
            _ => None,
        }
    }

    /// Total order over all values, used for deterministic sorting and
    /// multiset comparison. Ranks: null < bool < number < text < array < document.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        fn rank(v: &Value) -> u8 {
            match v {
                Value::Null => 0,
                Value::Bool(_) => 1,
                Value::Int(_) | Value::Float(_) => 2,
                Value::Text(_) => 3,
                Value::Array(_) => 4,
                Value::Document(_) => 5,
            }
        }
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Int(a), Value::Float(b)) => {
                cmp_int_float(*a, *b).unwrap_or(Ordering::Less).then(Ordering::Less)
            }
            (Value::Float(a), Value::Int(b)) => cmp_int_float(*b, *a)
                .map(Ordering::reverse)
                .unwrap_or(Ordering::Greater)
                .then(Ordering::Greater),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Array(a), Value::Array(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (Value::Document(a), Value::Document(b)) => {
                let ka = sorted_entries(a);
                let kb = sorted_entries(b);
                for ((k1, v1), (k2, v2)) in ka.iter().zip(&kb) {
                    let o = k1.cmp(k2).then_with(|| v1.total_cmp(v2));
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                ka.len().cmp(&kb.len())
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Hashable key for equality joins, consistent with `compare == Equal`
    /// on scalars: integral floats hash like the matching integer.
    /// Returns `None` for Null (which never joins).
    pub fn join_key(&self) -> Option<JoinKey> {
        Some(match self {
            Value::Null => return None,
            Value::Bool(b) => JoinKey::Bool(*b),
            Value::Int(i) => JoinKey::Int(*i),
            Value::Float(f) => match float_as_exact_int(*f) {
                Some(i) => JoinKey::Int(i),
                None if f.is_nan() => return None,
                None => JoinKey::Float(f.to_bits()),
            },
            Value::Text(s) => JoinKey::Text(s.clone()),
            Value::Document(_) | Value::Array(_) => JoinKey::Composite(self.to_json().to_string()),
        })
    }

    pub fn from_json(json: &serde_json::Value) -> Value {
        match json {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Array(items) => {
                Value::Array(items.iter().map(Value::from_json).collect())
            }
            serde_json::Value::Object(map) => Value::Document(
                map.iter()
                    .map(|(k, v)| (k.clone(), Value::from_json(v)))
                    .collect(),
            ),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Float(f) => serde_json::Number::from_f64(*f)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Value::Text(s) => serde_json::Value::String(s.clone()),
            Value::Array(items) => {
                serde_json::Value::Array(items.iter().map(Value::to_json).collect())
            }
            Value::Document(doc) => serde_json::Value::Object(
                doc.iter().map(|(k, v)| (k.clone(), v.to_json())).collect(),
            ),
        }
    }

    /// Numeric array extraction. Non-numeric elements are rejected.
    pub fn numeric_array(&self) -> Result<Vec<f64>> {
        match self {
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_f64().ok_or_else(|| {
                        Error::execution(format!(
                            "non-numeric array element of type {}",
                            v.type_name()
                        ))
                    })
                })
                .collect(),
            other => Err(Error::execution(format!(
                "expected a numeric array, found {}",
                other.type_name()
            ))),
        }
    }
}

fn sorted_entries(doc: &Document) -> Vec<(&String, &Value)> {
    let mut entries: Vec<_> = doc.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    entries
}

fn float_as_exact_int(f: f64) -> Option<i64> {
    // 2^63 is exactly representable; anything at or beyond it is out of range.
    if f.is_finite() && f.fract() == 0.0 && (-9.223_372_036_854_776e18..9.223_372_036_854_776e18).contains(&f) {
        Some(f as i64)
    } else {
        None
    }
}

/// Exact comparison of an integer with a float (no rounding of large ints).
fn cmp_int_float(i: i64, f: f64) -> Option<Ordering> {
    if f.is_nan() {
        return None;
    }
    match float_as_exact_int(f) {
        Some(fi) => Some(i.cmp(&fi)),
        None if f.is_infinite() => Some(if f > 0.0 { Ordering::Less } else { Ordering::Greater }),
        None if f >= 9.2e18 => Some(Ordering::Less),
        None if f <= -9.2e18 => Some(Ordering::Greater),
        // Non-integral and small in magnitude: i as f64 is exact enough to order.
        None => (i as f64).partial_cmp(&f),
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            (Value::Array(a), Value::Array(b)) => a == b,
            (Value::Document(a), Value::Document(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Null => {}
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Float(f) => f.to_bits().hash(state),
            Value::Text(s) => s.hash(state),
            Value::Array(items) => items.hash(state),
            Value::Document(doc) => {
                for (k, v) in sorted_entries(doc) {
                    k.hash(state);
                    v.hash(state);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum JoinKey {
    Bool(bool),
    Int(i64),
    Float(u64),
    Text(String),
    Composite(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Text(s) => f.write_str(s),
            Value::Document(_) | Value::Array(_) => write!(f, "{}", self.to_json()),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = serde_json::Value::deserialize(deserializer)?;
        Ok(Value::from_json(&json))
    }
}

/// One step of a document path: an object key or an array index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PathStep {
    Key(String),
    Index(usize),
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathStep::Key(k) => write!(f, "'{}'", k.replace('\'', "''")),
            PathStep::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Non-empty sequence of [`PathStep`]s, e.g. `O->>'customer_id'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathExpr(Vec<PathStep>);

impl PathExpr {
    pub fn new(steps: Vec<PathStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::schema("document path must have at least one step"));
        }
        Ok(PathExpr(steps))
    }

    pub fn key(key: impl Into<String>) -> Self {
        PathExpr(vec![PathStep::Key(key.into())])
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.0
    }
}

/// Walk `path` from `doc`. Missing keys, out-of-range indices and steps
/// applied to the wrong kind of value all yield `Null`.
pub fn resolve_path<'a>(doc: &'a Value, path: &PathExpr) -> &'a Value {
    const NULL: &Value = &Value::Null;
    let mut current = doc;
    for step in path.steps() {
        current = match (current, step) {
            (Value::Document(map), PathStep::Key(k)) => match map.get(k) {
                Some(v) => v,
                None => return NULL,
            },
            (Value::Array(items), PathStep::Index(i)) => match items.get(*i) {
                Some(v) => v,
                None => return NULL,
            },
            _ => return NULL,
        };
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc(json: serde_json::Value) -> Value {
        Value::from_json(&json)
    }

    #[test]
    fn resolve_top_level_key() {
        let d = doc(json!({"customer_id": 7}));
        assert_eq!(resolve_path(&d, &PathExpr::key("customer_id")), &Value::Int(7));
    }

    #[test]
    fn resolve_nested_index() {
        let d = doc(json!({"a": {"b": [10, 20]}}));
        let path = PathExpr::new(vec![
            PathStep::Key("a".into()),
            PathStep::Key("b".into()),
            PathStep::Index(1),
        ])
        .unwrap();
        assert_eq!(resolve_path(&d, &path), &Value::Int(20));
    }

    #[test]
    fn resolve_missing_is_null() {
        let d = doc(json!({"a": 1}));
        assert!(resolve_path(&d, &PathExpr::key("z")).is_null());
        let through_scalar =
            PathExpr::new(vec![PathStep::Key("a".into()), PathStep::Key("b".into())]).unwrap();
        assert!(resolve_path(&d, &through_scalar).is_null());
    }

    #[test]
    fn empty_path_rejected() {
        assert!(PathExpr::new(vec![]).is_err());
    }

    #[test]
    fn int_float_promotion() {
        assert_eq!(Value::Int(3).compare(&Value::Float(3.0)), Some(Ordering::Equal));
        assert_eq!(Value::Int(3).compare(&Value::Float(3.5)), Some(Ordering::Less));
        assert_eq!(Value::Float(2.5).compare(&Value::Int(2)), Some(Ordering::Greater));
        // exact beyond 2^53
        let big = (1i64 << 53) + 1;
        assert_eq!(
            Value::Int(big).compare(&Value::Float((1i64 << 53) as f64)),
            Some(Ordering::Greater)
        );
    }

    #[test]
    fn null_and_mismatch_not_comparable() {
        assert_eq!(Value::Null.compare(&Value::Null), None);
        assert_eq!(Value::Int(1).compare(&Value::Text("1".into())), None);
        assert_eq!(Value::Array(vec![]).compare(&Value::Array(vec![Value::Int(1)])), None);
    }

    #[test]
    fn join_key_matches_promoted_equality() {
        assert_eq!(Value::Int(4).join_key(), Value::Float(4.0).join_key());
        assert_ne!(Value::Int(4).join_key(), Value::Float(4.5).join_key());
        assert_eq!(Value::Null.join_key(), None);
    }

    #[test]
    fn json_round_trip_keeps_int_float_apart() {
        let v = doc(json!({"a": 1, "b": 1.0, "c": [true, null, "x"]}));
        let back = Value::from_json(&serde_json::from_str(&v.to_json().to_string()).unwrap());
        assert_eq!(v, back);
    }

    #[test]
    fn text_orders_by_code_point() {
        assert_eq!(Value::from("B").compare(&Value::from("a")), Some(Ordering::Less));
    }
}
