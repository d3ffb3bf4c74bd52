//! Physical operators and their pull-based execution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};

use crate::cost::{Estimate, JoinPlacement};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{match_by_joins, match_pattern, Element, MatchPlan, MatchRow, Pattern, Restrictions};
use crate::predicate::{ColumnId, Expr, Layout, Predicate, Term};
use crate::schema::Oid;
use crate::value::{resolve_path, Value};

use super::ast::ExprText;
use super::join::{cross_model_join, GraphJoin, JoinCondition, JoinOperand, JoinOutput};
use super::logical::OutputColumn;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinMethod {
    Hash,
    NestedLoop,
}

impl fmt::Display for JoinMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinMethod::Hash => "hash",
            JoinMethod::NestedLoop => "nested-loop",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhysicalOp {
    TableScan {
        name: String,
        binding: String,
        oid: Oid,
        filter: Vec<Expr>,
    },
    /// Scan of one vertex or edge table standing in for a match, keeping
    /// `columns` of the table.
    GraphScan {
        name: String,
        var: String,
        oid: Oid,
        filter: Vec<Expr>,
        columns: Vec<ColumnId>,
    },
    /// Pattern match emitting `columns`; with a child, the child's rows are
    /// first joined into the element `pushed_join` touches.
    PatternMatch {
        pattern: Pattern,
        plan: MatchPlan,
        columns: Vec<ColumnId>,
        pushed_join: Vec<Expr>,
        emulated: bool,
    },
    CrossJoin {
        predicate: Vec<Expr>,
        method: JoinMethod,
        placement: JoinPlacement,
    },
    Filter {
        predicate: Vec<Expr>,
    },
    Project {
        output: Vec<OutputColumn>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalNode {
    pub op: PhysicalOp,
    pub children: Vec<PhysicalNode>,
    pub layout: Layout,
    /// Bindings whose rows this node's output is built from.
    pub bindings: BTreeSet<String>,
    pub estimate: Estimate,
}

impl PhysicalNode {
    pub fn is_scan(&self) -> bool {
        matches!(self.op, PhysicalOp::TableScan { .. } | PhysicalOp::GraphScan { .. })
    }

    /// All nodes, pre-order.
    pub fn walk(&self) -> Vec<&PhysicalNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    fn line(&self) -> String {
        let exprs = |es: &[Expr]| es.iter().map(|e| ExprText(e).to_string()).collect::<Vec<_>>().join(" AND ");
        let head = match &self.op {
            PhysicalOp::TableScan {
                name, binding, filter, ..
            } => {
                let mut s = format!("TableScan {name}");
                if name != binding {
                    s.push_str(&format!(" AS {binding}"));
                }
                if !filter.is_empty() {
                    s.push_str(&format!(" filter=[{}]", exprs(filter)));
                }
                s
            }
            PhysicalOp::GraphScan {
                name,
                var,
                filter,
                columns,
                ..
            } => {
                let cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
                let mut s = format!("GraphScan {name} AS {var}");
                if !filter.is_empty() {
                    s.push_str(&format!(" filter=[{}]", exprs(filter)));
                }
                s.push_str(&format!(" columns=[{}]", cols.join(", ")));
                s
            }
            PhysicalOp::PatternMatch {
                pattern,
                plan,
                columns,
                pushed_join,
                emulated,
            } => {
                let preds: Vec<String> = plan
                    .pushed
                    .iter()
                    .filter_map(|e| pattern.predicates.get(e))
                    .map(|e| ExprText(e).to_string())
                    .collect();
                let cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
                let mut s = format!(
                    "PatternMatch {pattern} {} predicates=[{}] columns=[{}]",
                    plan.describe(pattern),
                    preds.join(" AND "),
                    cols.join(", ")
                );
                if !pushed_join.is_empty() {
                    s.push_str(&format!(" join=[{}]", exprs(pushed_join)));
                }
                if *emulated {
                    s.push_str(" via=joins");
                }
                s
            }
            PhysicalOp::CrossJoin {
                predicate,
                method,
                placement,
            } => format!("CrossJoin {method} [{}] placement={placement}", exprs(predicate)),
            PhysicalOp::Filter { predicate } => format!("Filter [{}]", exprs(predicate)),
            PhysicalOp::Project { output } => {
                let names: Vec<&str> = output.iter().map(|o| o.name.as_str()).collect();
                format!("Project [{}]", names.join(", "))
            }
        };
        format!("{head} (cost={:.1} rows={:.1})", self.estimate.cost, self.estimate.rows)
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{}{}", "  ".repeat(depth), self.line())?;
        for c in &self.children {
            c.write(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for PhysicalNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

/// Column names and rows of a query result.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl QueryResult {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Hex SHA-256 over the column names and the sorted rows; equal for
    /// equal result multisets.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.columns {
            h.update(c.as_bytes());
            h.update([0]);
        }
        for row in self.sorted_rows() {
            let json = serde_json::Value::Array(row.iter().map(Value::to_json).collect());
            h.update(json.to_string().as_bytes());
            h.update(*b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Rows in a canonical order, for multiset comparison.
    pub fn sorted_rows(&self) -> Vec<Vec<Value>> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        rows
    }
}

pub type RowStream<'a> = Box<dyn Iterator<Item = Result<Vec<Value>>> + 'a>;

fn conjunction(layout: &Layout, exprs: &[Expr]) -> Result<Option<Predicate>> {
    if exprs.is_empty() {
        Ok(None)
    } else {
        Predicate::bind(&Expr::and_all(exprs.iter().cloned()), layout, None).map(Some)
    }
}

/// Open `node` as a row iterator.
pub fn open<'a>(db: &'a Database, node: &'a PhysicalNode) -> Result<RowStream<'a>> {
    Ok(match &node.op {
        PhysicalOp::TableScan { oid, filter, .. } => {
            let pred = conjunction(&node.layout, filter)?;
            Box::new(
                db.collection(*oid)?
                    .scan(None)
                    .filter(move |r| pred.as_ref().is_none_or(|p| p.eval(r.values, None)))
                    .map(|r| Ok(r.values.to_vec())),
            )
        }
        PhysicalOp::GraphScan {
            var,
            oid,
            filter,
            columns,
            ..
        } => {
            let schema = db.schema(*oid)?;
            let full = Layout::of_schema(var, schema);
            let pred = conjunction(&full, filter)?;
            let idx = columns
                .iter()
                .map(|c| {
                    full.index_of(c)
                        .ok_or_else(|| Error::schema(format!("graph scan column {c} not in {}", schema.name)))
                })
                .collect::<Result<Vec<usize>>>()?;
            Box::new(
                db.collection(*oid)?
                    .scan(None)
                    .filter(move |r| pred.as_ref().is_none_or(|p| p.eval(r.values, None)))
                    .map(move |r| Ok(idx.iter().map(|&i| r.values[i].clone()).collect())),
            )
        }
        PhysicalOp::PatternMatch {
            pattern,
            plan,
            columns,
            pushed_join,
            emulated,
        } => Box::new(run_match(db, node, pattern, plan, columns, pushed_join, *emulated)?.into_iter().map(Ok)),
        PhysicalOp::CrossJoin { predicate, .. } => {
            let (l, r) = (&node.children[0], &node.children[1]);
            let left: Vec<Vec<Value>> = open(db, l)?.collect::<Result<_>>()?;
            let right: Vec<Vec<Value>> = open(db, r)?.collect::<Result<_>>()?;
            let cond = JoinCondition::bind(predicate, &l.layout, &r.layout)?;
            let pairs = cond.pairs(&left, &right);
            Box::new(pairs.into_iter().map(move |(i, j)| {
                let mut row = left[i].clone();
                row.extend(right[j].iter().cloned());
                Ok(row)
            }))
        }
        PhysicalOp::Filter { predicate } => {
            let child = &node.children[0];
            let pred = conjunction(&child.layout, predicate)?;
            Box::new(open(db, child)?.filter(move |row| match (row, &pred) {
                (Ok(r), Some(p)) => p.eval(r, None),
                _ => true,
            }))
        }
        PhysicalOp::Project { output } => {
            let child = &node.children[0];
            enum Source {
                Field(usize, Option<crate::value::PathExpr>),
                Literal(Value),
            }
            let sources = output
                .iter()
                .map(|o| match &o.term {
                    Term::Literal(l) => Ok(Source::Literal(l.0.clone())),
                    Term::Column(c) => match child.layout.resolve(c)? {
                        Some((i, path)) => Ok(Source::Field(i, path)),
                        None => Err(Error::schema(format!("projected column {c} is not available"))),
                    },
                })
                .collect::<Result<Vec<_>>>()?;
            Box::new(open(db, child)?.map(move |row| {
                let row = row?;
                Ok(sources
                    .iter()
                    .map(|s| match s {
                        Source::Literal(v) => v.clone(),
                        Source::Field(i, None) => row[*i].clone(),
                        Source::Field(i, Some(p)) => resolve_path(&row[*i], p).clone(),
                    })
                    .collect())
            }))
        }
    })
}

fn run_match(
    db: &Database,
    node: &PhysicalNode,
    pattern: &Pattern,
    plan: &MatchPlan,
    columns: &[ColumnId],
    pushed_join: &[Expr],
    emulated: bool,
) -> Result<Vec<Vec<Value>>> {
    let extract: Vec<(Element, usize)> = columns
        .iter()
        .map(|c| {
            let e = pattern
                .element_of(&c.binding)
                .ok_or_else(|| Error::schema(format!("{} is not a pattern variable", c.binding)))?;
            let i = db
                .schema(pattern.table(db, e)?)?
                .column_index(&c.name)
                .ok_or_else(|| Error::schema(format!("unknown column {c}")))?;
            Ok((e, i))
        })
        .collect::<Result<_>>()?;
    let project = |m: &MatchRow<'_>| -> Result<Vec<Value>> {
        extract
            .iter()
            .map(|(e, i)| match m.record(*e) {
                Some(r) => Ok(r.values[*i].clone()),
                None => Err(Error::Consistency(format!("record of {} was not fetched", pattern.var(*e)))),
            })
            .collect()
    };
    let key_of = |m: &MatchRow<'_>, e: Element| -> Result<u64> {
        match e {
            Element::Vertex(i) => Ok(m.nids[i]),
            Element::Edge(_) => m
                .record(e)
                .map(|r| r.tid.0)
                .ok_or_else(|| Error::Consistency("restricted edge record was not fetched".into())),
        }
    };

    let Some(child) = node.children.first() else {
        let rel = if emulated {
            match_by_joins(db, pattern)?
        } else {
            match_pattern(db, pattern, plan, &Restrictions::new())?.0
        };
        return rel.rows.iter().map(project).collect();
    };
    let rows: Vec<Vec<Value>> = open(db, child)?.collect::<Result<_>>()?;
    let JoinOutput::Graph(GraphJoin {
        element: Some(element),
        restriction,
        extensions,
    }) = cross_model_join(
        db,
        JoinOperand::Rows {
            layout: &child.layout,
            rows: &rows,
        },
        JoinOperand::Graph { pattern },
        pushed_join,
    )?
    else {
        return Err(Error::Consistency("pushed join did not produce a graph".into()));
    };
    let matched = if emulated {
        let mut rel = match_by_joins(db, pattern)?;
        let mut keep = Vec::with_capacity(rel.rows.len());
        for m in rel.rows.drain(..) {
            if restriction.contains(&key_of(&m, element)?) {
                keep.push(m);
            }
        }
        keep
    } else {
        let restrictions: Restrictions = BTreeMap::from([(element, restriction)]);
        match_pattern(db, pattern, plan, &restrictions)?.0.rows
    };
    let mut out = Vec::new();
    for m in &matched {
        let tail = project(m)?;
        for &i in extensions.get(&key_of(m, element)?).map(Vec::as_slice).unwrap_or(&[]) {
            let mut row = rows[i].clone();
            row.extend(tail.iter().cloned());
            out.push(row);
        }
    }
    Ok(out)
}

/// Run a physical plan to completion.
pub fn execute(db: &Database, root: &PhysicalNode) -> Result<QueryResult> {
    let columns = match &root.op {
        PhysicalOp::Project { output } => output.iter().map(|o| o.name.clone()).collect(),
        _ => root.layout.columns.iter().map(|c| c.to_string()).collect(),
    };
    let rows = open(db, root)?.collect::<Result<Vec<_>>>()?;
    Ok(QueryResult { columns, rows })
}
