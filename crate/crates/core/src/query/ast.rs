//! Syntax tree of the query language and its printer. Printing and
//! re-parsing a tree yields an equal tree.

use std::fmt;

use crate::graph::EdgeOrientation;
use crate::predicate::{fmt_literal, ColumnRef, Expr, LiteralValue, Term};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Query(Query),
    Explain(Query),
    Analyze(Analyze),
}

/// `SELECT <items> FROM <sources> [MATCH <pattern>] [WHERE <expr>]`
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub select: Vec<SelectItem>,
    pub from: Vec<Source>,
    pub pattern: Option<PatternAst>,
    pub filter: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Star,
    Term { term: Term, alias: Option<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub name: String,
    pub alias: Option<String>,
}

impl Source {
    /// Name the source is referred to by in the rest of the query.
    pub fn binding(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternAst {
    pub vertices: Vec<VertexAst>,
    pub edges: Vec<EdgeAst>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexAst {
    pub var: Option<String>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAst {
    pub var: Option<String>,
    pub label: Option<String>,
    pub orientation: EdgeOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnalyzeOp {
    Multiply,
    Similarity,
    Regression,
}

impl AnalyzeOp {
    pub fn parse(word: &str) -> Option<AnalyzeOp> {
        match word.to_ascii_uppercase().as_str() {
            "MULTIPLY" => Some(AnalyzeOp::Multiply),
            "SIMILARITY" => Some(AnalyzeOp::Similarity),
            "REGRESSION" => Some(AnalyzeOp::Regression),
            _ => None,
        }
    }

    /// Number of query inputs the operator takes.
    pub fn arity(self) -> usize {
        match self {
            AnalyzeOp::Regression => 1,
            AnalyzeOp::Multiply | AnalyzeOp::Similarity => 2,
        }
    }
}

impl fmt::Display for AnalyzeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalyzeOp::Multiply => "MULTIPLY",
            AnalyzeOp::Similarity => "SIMILARITY",
            AnalyzeOp::Regression => "REGRESSION",
        })
    }
}

/// `ANALYZE <op> USING (<query>) [AND (<query>)] [WITH (key = value, ...)]`
#[derive(Debug, Clone, PartialEq)]
pub struct Analyze {
    pub op: AnalyzeOp,
    pub inputs: Vec<Query>,
    pub options: Vec<(String, Value)>,
}

impl Analyze {
    pub fn option(&self, key: &str) -> Option<&Value> {
        self.options
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|(_, v)| v)
    }
}

pub const KEYWORDS: [&str; 16] = [
    "SELECT", "FROM", "MATCH", "WHERE", "AND", "OR", "NOT", "AS", "NULL", "TRUE", "FALSE", "EXPLAIN", "ANALYZE",
    "USING", "WITH", "IS",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(word))
}

pub fn is_plain_ident(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Identifier as it must be written: quoted when it is a keyword or not a
/// plain word.
pub struct Ident<'a>(pub &'a str);

impl fmt::Display for Ident<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_plain_ident(self.0) && !is_keyword(self.0) {
            f.write_str(self.0)
        } else {
            write!(f, "\"{}\"", self.0.replace('"', "\"\""))
        }
    }
}

struct ColumnText<'a>(&'a ColumnRef);

impl fmt::Display for ColumnText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        match (&c.qualifier, &c.column) {
            (Some(q), Some(n)) => write!(f, "{}.{}", Ident(q), Ident(n))?,
            (Some(q), None) | (None, Some(q)) => write!(f, "{}", Ident(q))?,
            (None, None) => {}
        }
        for step in &c.path {
            write!(f, "->>{step}")?;
        }
        Ok(())
    }
}

pub struct TermText<'a>(pub &'a Term);

impl fmt::Display for TermText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Term::Column(c) => write!(f, "{}", ColumnText(c)),
            Term::Literal(LiteralValue(v)) => fmt_literal(v, f),
        }
    }
}

/// Expression printed in query syntax (identifiers quoted as needed).
pub struct ExprText<'a>(pub &'a Expr);

impl fmt::Display for ExprText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Expr::Const(b) => f.write_str(if *b { "TRUE" } else { "FALSE" }),
            Expr::Compare { op, lhs, rhs } => {
                write!(f, "{} {} {}", TermText(lhs), op.op().symbol(), TermText(rhs))
            }
            Expr::And(parts) => joined(f, parts, " AND "),
            Expr::Or(parts) => joined(f, parts, " OR "),
            Expr::Not(inner) => write!(f, "NOT ({})", ExprText(inner)),
        }
    }
}

fn joined(f: &mut fmt::Formatter<'_>, parts: &[Expr], sep: &str) -> fmt::Result {
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        match p {
            Expr::And(_) | Expr::Or(_) => write!(f, "({})", ExprText(p))?,
            _ => write!(f, "{}", ExprText(p))?,
        }
    }
    Ok(())
}

fn write_label(f: &mut fmt::Formatter<'_>, label: &Option<String>) -> fmt::Result {
    if let Some(l) = label {
        f.write_str(":")?;
        for (i, word) in l.split(' ').enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", Ident(word))?;
        }
    }
    Ok(())
}

fn write_var(f: &mut fmt::Formatter<'_>, var: &Option<String>) -> fmt::Result {
    match var {
        Some(v) => write!(f, "{}", Ident(v)),
        None => Ok(()),
    }
}

impl fmt::Display for PatternAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            f.write_str("(")?;
            write_var(f, &v.var)?;
            write_label(f, &v.label)?;
            f.write_str(")")?;
            if let Some(e) = self.edges.get(i) {
                f.write_str(match e.orientation {
                    EdgeOrientation::Out => "-[",
                    EdgeOrientation::In => "<-[",
                })?;
                write_var(f, &e.var)?;
                write_label(f, &e.label)?;
                f.write_str(match e.orientation {
                    EdgeOrientation::Out => "]->",
                    EdgeOrientation::In => "]-",
                })?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, item) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match item {
                SelectItem::Star => f.write_str("*")?,
                SelectItem::Term { term, alias } => {
                    write!(f, "{}", TermText(term))?;
                    if let Some(a) = alias {
                        write!(f, " AS {}", Ident(a))?;
                    }
                }
            }
        }
        f.write_str(" FROM ")?;
        for (i, s) in self.from.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", Ident(&s.name))?;
            if let Some(a) = &s.alias {
                write!(f, " {}", Ident(a))?;
            }
        }
        if let Some(p) = &self.pattern {
            write!(f, " MATCH {p}")?;
        }
        if let Some(w) = &self.filter {
            write!(f, " WHERE {}", ExprText(w))?;
        }
        Ok(())
    }
}

impl fmt::Display for Analyze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ANALYZE {} USING ", self.op)?;
        for (i, q) in self.inputs.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            write!(f, "({q})")?;
        }
        if !self.options.is_empty() {
            f.write_str(" WITH (")?;
            for (i, (k, v)) in self.options.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{} = ", Ident(k))?;
                fmt_literal(v, f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Query(q) => write!(f, "{q}"),
            Statement::Explain(q) => write!(f, "EXPLAIN {q}"),
            Statement::Analyze(a) => write!(f, "{a}"),
        }
    }
}
