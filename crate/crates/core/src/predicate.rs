//! Predicates: name-based expressions ([`Expr`]) as written in queries, and
//! bound predicates ([`Predicate`]) resolved against one or two row layouts.
//!
//! Binding happens once at plan time, so an unresolvable column or path is
//! a schema error there and evaluation itself is total: type mismatches and
//! Null operands make a comparison false.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Schema, DOCUMENT_COLUMN};
use crate::value::{resolve_path, PathExpr, PathStep, Value};

/// Column properties of vertex/edge tables without a dedicated column are
/// looked up inside this document column.
pub const PROPS_COLUMN: &str = "props";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ne => ord != Ordering::Equal,
            CompareOp::Lt => ord == Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Ge => ord != Ordering::Less,
        }
    }

    /// The operator with operands swapped (`a < b` ⇔ `b > a`).
    pub fn flip(self) -> CompareOp {
        match self {
            CompareOp::Lt => CompareOp::Gt,
            CompareOp::Le => CompareOp::Ge,
            CompareOp::Gt => CompareOp::Lt,
            CompareOp::Ge => CompareOp::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }

    pub fn is_range(self) -> bool {
        matches!(self, CompareOp::Lt | CompareOp::Le | CompareOp::Gt | CompareOp::Ge)
    }
}

/// A possibly qualified column reference with an optional document path:
/// `col`, `v.col`, `v->>'k'`, `v.col->>'a'->>0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub qualifier: Option<String>,
    pub column: Option<String>,
    pub path: Vec<PathStep>,
}

impl ColumnRef {
    pub fn qualified(qualifier: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            qualifier: Some(qualifier.into()),
            column: Some(column.into()),
            path: Vec::new(),
        }
    }

    /// `binding->>'k'->>...`: a path into the binding's document column.
    pub fn document_path(qualifier: impl Into<String>, path: Vec<PathStep>) -> Self {
        ColumnRef {
            qualifier: Some(qualifier.into()),
            column: None,
            path,
        }
    }

    pub fn with_path(mut self, path: Vec<PathStep>) -> Self {
        self.path = path;
        self
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.qualifier, &self.column) {
            (Some(q), Some(c)) => write!(f, "{q}.{c}")?,
            (Some(q), None) => write!(f, "{q}")?,
            (None, Some(c)) => write!(f, "{c}")?,
            (None, None) => f.write_str("?")?,
        }
        for step in &self.path {
            write!(f, "->>{step}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Column(ColumnRef),
    Literal(LiteralValue),
}

/// Literal wrapper with a total order so expressions can be canonicalised.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LiteralValue(pub Value);

impl PartialOrd for LiteralValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LiteralValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Term {
    pub fn literal(v: impl Into<Value>) -> Self {
        Term::Literal(LiteralValue(v.into()))
    }

    pub fn column(c: ColumnRef) -> Self {
        Term::Column(c)
    }

    pub fn as_column(&self) -> Option<&ColumnRef> {
        match self {
            Term::Column(c) => Some(c),
            Term::Literal(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Column(c) => write!(f, "{c}"),
            Term::Literal(LiteralValue(v)) => fmt_literal(v, f),
        }
    }
}

pub(crate) fn fmt_literal(v: &Value, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match v {
        Value::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        Value::Null => f.write_str("NULL"),
        Value::Bool(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
        Value::Float(x) => write!(f, "{x:?}"),
        other => write!(f, "{other}"),
    }
}

/// Name-based boolean expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(bool),
    Compare { op: CompareOpOrd, lhs: Term, rhs: Term },
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

/// [`CompareOp`] with a fixed order, for canonical sorting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompareOpOrd(pub u8);

impl From<CompareOp> for CompareOpOrd {
    fn from(op: CompareOp) -> Self {
        CompareOpOrd(op as u8)
    }
}

impl CompareOpOrd {
    pub fn op(self) -> CompareOp {
        match self.0 {
            0 => CompareOp::Eq,
            1 => CompareOp::Ne,
            2 => CompareOp::Lt,
            3 => CompareOp::Le,
            4 => CompareOp::Gt,
            _ => CompareOp::Ge,
        }
    }
}

impl Expr {
    pub fn compare(op: CompareOp, lhs: Term, rhs: Term) -> Expr {
        Expr::Compare {
            op: op.into(),
            lhs,
            rhs,
        }
    }

    pub fn col_eq_lit(col: ColumnRef, v: impl Into<Value>) -> Expr {
        Expr::compare(CompareOp::Eq, Term::Column(col), Term::literal(v))
    }

    /// AND of `parts`, flattening nested conjunctions; empty → `TRUE`.
    pub fn and_all(parts: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Expr::And(inner) => flat.extend(inner),
                Expr::Const(true) => {}
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Expr::Const(true),
            1 => flat.pop().unwrap(),
            _ => Expr::And(flat),
        }
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<Expr> {
        match self {
            Expr::And(parts) => parts.iter().flat_map(Expr::conjuncts).collect(),
            Expr::Const(true) => Vec::new(),
            other => vec![other.clone()],
        }
    }

    pub fn column_refs(&self) -> Vec<&ColumnRef> {
        let mut out = Vec::new();
        self.visit_columns(&mut |c| out.push(c));
        out
    }

    fn visit_columns<'a>(&'a self, f: &mut impl FnMut(&'a ColumnRef)) {
        match self {
            Expr::Const(_) => {}
            Expr::Compare { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::Column(c) = t {
                        f(c);
                    }
                }
            }
            Expr::And(parts) | Expr::Or(parts) => parts.iter().for_each(|p| p.visit_columns(f)),
            Expr::Not(inner) => inner.visit_columns(f),
        }
    }

    pub fn map_columns(&self, f: &mut impl FnMut(&ColumnRef) -> ColumnRef) -> Expr {
        match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Compare { op, lhs, rhs } => {
                let map = |t: &Term, f: &mut dyn FnMut(&ColumnRef) -> ColumnRef| match t {
                    Term::Column(c) => Term::Column(f(c)),
                    lit => lit.clone(),
                };
                Expr::Compare {
                    op: *op,
                    lhs: map(lhs, f),
                    rhs: map(rhs, f),
                }
            }
            Expr::And(parts) => Expr::And(parts.iter().map(|p| p.map_columns(f)).collect()),
            Expr::Or(parts) => Expr::Or(parts.iter().map(|p| p.map_columns(f)).collect()),
            Expr::Not(inner) => Expr::Not(Box::new(inner.map_columns(f))),
        }
    }

    /// Qualifiers referenced by the expression (refs must be qualified).
    pub fn qualifiers(&self) -> BTreeSet<String> {
        self.column_refs()
            .into_iter()
            .filter_map(|c| c.qualifier.clone())
            .collect()
    }

    /// `Some((left, right))` when this is an equality between two columns.
    pub fn as_column_equality(&self) -> Option<(&ColumnRef, &ColumnRef)> {
        match self {
            Expr::Compare {
                op,
                lhs: Term::Column(a),
                rhs: Term::Column(b),
            } if op.op() == CompareOp::Eq => Some((a, b)),
            _ => None,
        }
    }

    /// Canonical form: nested conjunctions flattened and sorted, comparisons
    /// oriented column-first.
    pub fn canonical(&self) -> Expr {
        match self {
            Expr::And(parts) => {
                let mut c: Vec<Expr> = Expr::and_all(parts.iter().map(Expr::canonical)).conjuncts();
                c.sort();
                c.dedup();
                Expr::and_all(c)
            }
            Expr::Or(parts) => {
                let mut c: Vec<Expr> = parts.iter().map(Expr::canonical).collect();
                c.sort();
                Expr::Or(c)
            }
            Expr::Not(inner) => Expr::Not(Box::new(inner.canonical())),
            Expr::Compare { op, lhs, rhs } => {
                let swap = match (lhs, rhs) {
                    (Term::Literal(_), Term::Column(_)) => true,
                    (Term::Column(a), Term::Column(b)) => {
                        matches!(op.op(), CompareOp::Eq | CompareOp::Ne) && b < a
                    }
                    _ => false,
                };
                if swap {
                    Expr::compare(op.op().flip(), rhs.clone(), lhs.clone())
                } else {
                    self.clone()
                }
            }
            Expr::Const(b) => Expr::Const(*b),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            Expr::Compare { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.op().symbol()),
            Expr::And(parts) => write_joined(f, parts, " AND "),
            Expr::Or(parts) => write_joined(f, parts, " OR "),
            Expr::Not(inner) => write!(f, "NOT ({inner})"),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, parts: &[Expr], sep: &str) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        match p {
            Expr::And(_) | Expr::Or(_) => write!(f, "({p})")?,
            _ => write!(f, "{p}")?,
        }
    }
    Ok(())
}

/// Identifies one column of a row: the binding (alias or pattern variable)
/// that produced it and the column name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnId {
    pub binding: String,
    pub name: String,
}

impl ColumnId {
    pub fn new(binding: impl Into<String>, name: impl Into<String>) -> Self {
        ColumnId {
            binding: binding.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.binding, self.name)
    }
}

/// Column layout of a row stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Layout {
    pub columns: Vec<ColumnId>,
}

impl Layout {
    pub fn new(columns: Vec<ColumnId>) -> Self {
        Layout { columns }
    }

    pub fn of_schema(binding: &str, schema: &Schema) -> Self {
        Layout {
            columns: schema
                .columns
                .iter()
                .map(|c| ColumnId::new(binding, c.name.clone()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn concat(&self, other: &Layout) -> Layout {
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Layout { columns }
    }

    pub fn index_of(&self, id: &ColumnId) -> Option<usize> {
        self.columns.iter().position(|c| c == id)
    }

    pub fn has_binding(&self, binding: &str) -> bool {
        self.columns.iter().any(|c| c.binding == binding)
    }

    pub fn bindings(&self) -> BTreeSet<String> {
        self.columns.iter().map(|c| c.binding.clone()).collect()
    }

    /// Resolve a column reference to `(index, path)`. `Ok(None)` when the
    /// reference is not in this layout at all.
    pub fn resolve(&self, c: &ColumnRef) -> Result<Option<(usize, Option<PathExpr>)>> {
        let with_prefix = |prefix: Vec<PathStep>| -> Result<Option<PathExpr>> {
            let steps: Vec<PathStep> = prefix.into_iter().chain(c.path.iter().cloned()).collect();
            if steps.is_empty() {
                Ok(None)
            } else {
                PathExpr::new(steps).map(Some)
            }
        };
        match (&c.qualifier, &c.column) {
            (Some(q), Some(name)) => {
                if let Some(i) = self.index_of(&ColumnId::new(q.clone(), name.clone())) {
                    return Ok(Some((i, with_prefix(vec![])?)));
                }
                // Property stored inside a document column.
                for doc_col in [PROPS_COLUMN, DOCUMENT_COLUMN] {
                    if let Some(i) = self.index_of(&ColumnId::new(q.clone(), doc_col)) {
                        return Ok(Some((i, with_prefix(vec![PathStep::Key(name.clone())])?)));
                    }
                }
                Ok(None)
            }
            (Some(q), None) => {
                if c.path.is_empty() {
                    return Err(Error::schema(format!(
                        "{q} names a whole record; a column or path is required here"
                    )));
                }
                for doc_col in [DOCUMENT_COLUMN, PROPS_COLUMN] {
                    if let Some(i) = self.index_of(&ColumnId::new(q.clone(), doc_col)) {
                        return Ok(Some((i, with_prefix(vec![])?)));
                    }
                }
                Ok(None)
            }
            (None, Some(name)) => {
                let hits: Vec<usize> = self
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|(_, id)| &id.name == name)
                    .map(|(i, _)| i)
                    .collect();
                match hits.as_slice() {
                    [] => Ok(None),
                    [i] => Ok(Some((*i, with_prefix(vec![])?))),
                    _ => Err(Error::schema(format!("column reference {name} is ambiguous"))),
                }
            }
            (None, None) => Err(Error::schema("empty column reference")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRef {
    pub side: Side,
    pub index: usize,
    pub path: Option<PathExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Field(FieldRef),
    Literal(Value),
}

/// A predicate resolved against a left (and optionally right) layout.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Const(bool),
    Compare { op: CompareOp, lhs: Operand, rhs: Operand },
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
    Not(Box<Predicate>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Unary,
    Binary,
}

impl Predicate {
    /// Bind `expr` against `left` and, for join predicates, `right`.
    pub fn bind(expr: &Expr, left: &Layout, right: Option<&Layout>) -> Result<Predicate> {
        Ok(match expr {
            Expr::Const(b) => Predicate::Const(*b),
            Expr::Compare { op, lhs, rhs } => Predicate::Compare {
                op: op.op(),
                lhs: bind_term(lhs, left, right)?,
                rhs: bind_term(rhs, left, right)?,
            },
            Expr::And(parts) => Predicate::And(
                parts
                    .iter()
                    .map(|p| Predicate::bind(p, left, right))
                    .collect::<Result<_>>()?,
            ),
            Expr::Or(parts) => Predicate::Or(
                parts
                    .iter()
                    .map(|p| Predicate::bind(p, left, right))
                    .collect::<Result<_>>()?,
            ),
            Expr::Not(inner) => Predicate::Not(Box::new(Predicate::bind(inner, left, right)?)),
        })
    }

    pub fn arity(&self) -> Arity {
        fn any_right(p: &Predicate) -> bool {
            match p {
                Predicate::Const(_) => false,
                Predicate::Compare { lhs, rhs, .. } => [lhs, rhs]
                    .iter()
                    .any(|o| matches!(o, Operand::Field(f) if f.side == Side::Right)),
                Predicate::And(ps) | Predicate::Or(ps) => ps.iter().any(any_right),
                Predicate::Not(p) => any_right(p),
            }
        }
        if any_right(self) {
            Arity::Binary
        } else {
            Arity::Unary
        }
    }

    pub fn eval(&self, left: &[Value], right: Option<&[Value]>) -> bool {
        match self {
            Predicate::Const(b) => *b,
            Predicate::Compare { op, lhs, rhs } => {
                match (operand_value(lhs, left, right), operand_value(rhs, left, right)) {
                    (Some(a), Some(b)) => a.compare(b).is_some_and(|o| op.holds(o)),
                    _ => false,
                }
            }
            Predicate::And(ps) => ps.iter().all(|p| p.eval(left, right)),
            Predicate::Or(ps) => ps.iter().any(|p| p.eval(left, right)),
            Predicate::Not(p) => !p.eval(left, right),
        }
    }
}

fn bind_term(t: &Term, left: &Layout, right: Option<&Layout>) -> Result<Operand> {
    match t {
        Term::Literal(LiteralValue(v)) => Ok(Operand::Literal(v.clone())),
        Term::Column(c) => {
            let l = left.resolve(c)?;
            let r = match right {
                Some(layout) => layout.resolve(c)?,
                None => None,
            };
            match (l, r) {
                (Some(_), Some(_)) => Err(Error::schema(format!(
                    "column reference {c} is ambiguous between join inputs"
                ))),
                (Some((index, path)), None) => Ok(Operand::Field(FieldRef {
                    side: Side::Left,
                    index,
                    path,
                })),
                (None, Some((index, path))) => Ok(Operand::Field(FieldRef {
                    side: Side::Right,
                    index,
                    path,
                })),
                (None, None) => Err(Error::schema(format!("unresolved column reference {c}"))),
            }
        }
    }
}

fn operand_value<'a>(o: &'a Operand, left: &'a [Value], right: Option<&'a [Value]>) -> Option<&'a Value> {
    match o {
        Operand::Literal(v) => Some(v),
        Operand::Field(f) => {
            let row = match f.side {
                Side::Left => left,
                Side::Right => right?,
            };
            let v = row.get(f.index)?;
            Some(match &f.path {
                Some(p) => resolve_path(v, p),
                None => v,
            })
        }
    }
}

/// Evaluate a bound predicate; `right` must be present iff the predicate is binary.
pub fn eval_predicate(pred: &Predicate, left: &[Value], right: Option<&[Value]>) -> Result<bool> {
    match (pred.arity(), right.is_some()) {
        (Arity::Binary, false) => Err(Error::Contract(
            "binary predicate evaluated without a right record".into(),
        )),
        _ => Ok(pred.eval(left, right)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnDef, ColumnType, Oid};

    fn layout(binding: &str, cols: &[&str]) -> Layout {
        Layout::new(cols.iter().map(|c| ColumnId::new(binding, *c)).collect())
    }

    fn col(q: &str, c: &str) -> ColumnRef {
        ColumnRef::qualified(q, c)
    }

    #[test]
    fn equality_on_identical_values() {
        let l = layout("t", &["price"]);
        let p = Predicate::bind(&Expr::col_eq_lit(col("t", "price"), 5i64), &l, None).unwrap();
        assert!(eval_predicate(&p, &[Value::Int(5)], None).unwrap());
    }

    #[test]
    fn title_equals_yogurt() {
        let l = layout("P", &["id", "title"]);
        let p = Predicate::bind(&Expr::col_eq_lit(col("P", "title"), "Yogurt"), &l, None).unwrap();
        assert!(p.eval(&[Value::Int(1), Value::from("Yogurt")], None));
        assert!(!p.eval(&[Value::Int(1), Value::from("Milk")], None));
    }

    #[test]
    fn null_comparison_is_false() {
        let l = layout("t", &["x"]);
        let lt = Expr::compare(CompareOp::Lt, Term::Column(col("t", "x")), Term::literal(3i64));
        let p = Predicate::bind(&lt, &l, None).unwrap();
        assert!(!p.eval(&[Value::Null], None));
        let ne = Expr::compare(CompareOp::Ne, Term::Column(col("t", "x")), Term::literal(3i64));
        assert!(!Predicate::bind(&ne, &l, None).unwrap().eval(&[Value::Null], None));
    }

    #[test]
    fn type_mismatch_is_false_not_error() {
        let l = layout("t", &["x"]);
        let p = Predicate::bind(&Expr::col_eq_lit(col("t", "x"), "5"), &l, None).unwrap();
        assert!(!p.eval(&[Value::Int(5)], None));
    }

    #[test]
    fn unresolvable_reference_is_plan_time_schema_error() {
        let l = layout("t", &["x"]);
        let err = Predicate::bind(&Expr::col_eq_lit(col("t", "nope"), 1i64), &l, None).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn binary_join_predicate() {
        let c = layout("C", &["id"]);
        let o = layout("O", &["doc"]);
        let e = Expr::compare(
            CompareOp::Eq,
            Term::Column(ColumnRef::document_path("O", vec![PathStep::Key("customer_id".into())])),
            Term::Column(col("C", "id")),
        );
        let p = Predicate::bind(&e, &o, Some(&c)).unwrap();
        assert_eq!(p.arity(), Arity::Binary);
        let doc = Value::from_json(&serde_json::json!({"customer_id": 7}));
        assert!(eval_predicate(&p, std::slice::from_ref(&doc), Some(&[Value::Int(7)])).unwrap());
        assert!(!p.eval(std::slice::from_ref(&doc), Some(&[Value::Int(8)])));
        assert!(eval_predicate(&p, &[doc], None).is_err());
    }

    #[test]
    fn props_fallback_resolves_into_document() {
        let s = Schema::vertex_table(
            "Tag",
            Oid(1),
            "Tag",
            vec![ColumnDef::new("props", ColumnType::Document)],
        );
        let l = Layout::of_schema("t", &s);
        let p = Predicate::bind(&Expr::col_eq_lit(col("t", "content"), "food"), &l, None).unwrap();
        let props = Value::from_json(&serde_json::json!({"content": "food"}));
        assert!(p.eval(&[Value::Int(0), props], None));
    }

    #[test]
    fn not_and_or() {
        let l = layout("t", &["x"]);
        let x = |op, v: i64| Expr::compare(op, Term::Column(col("t", "x")), Term::literal(v));
        let e = Expr::Or(vec![
            x(CompareOp::Lt, 0),
            Expr::Not(Box::new(x(CompareOp::Le, 10))),
        ]);
        let p = Predicate::bind(&e, &l, None).unwrap();
        assert!(p.eval(&[Value::Int(-1)], None));
        assert!(!p.eval(&[Value::Int(5)], None));
        assert!(p.eval(&[Value::Int(11)], None));
    }

    #[test]
    fn canonical_orders_conjuncts_and_orients_comparisons() {
        let a = Expr::compare(CompareOp::Lt, Term::literal(3i64), Term::Column(col("t", "x")));
        let b = Expr::col_eq_lit(col("s", "y"), 1i64);
        let e1 = Expr::and_all([a.clone(), b.clone()]).canonical();
        let e2 = Expr::and_all([b, a]).canonical();
        assert_eq!(e1, e2);
        assert_eq!(e1.to_string(), "s.y = 1 AND t.x > 3");
    }
}
