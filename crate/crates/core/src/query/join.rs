//! Cross-model joins: relation/document rows with each other, or rows
//! linked into the vertex or edge set of a graph pattern.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{Element, Pattern};
use crate::predicate::{Expr, FieldRef, Layout, Operand, Predicate, Side};
use crate::schema::vertex_key_of;
use crate::value::{resolve_path, JoinKey, Value};

fn field_value<'v>(f: &FieldRef, row: &'v [Value]) -> &'v Value {
    let v = &row[f.index];
    match &f.path {
        Some(p) => resolve_path(v, p),
        None => v,
    }
}

/// A join predicate bound against two layouts: an optional equality used
/// as hash key plus the remaining conjuncts.
#[derive(Debug, Clone)]
pub struct JoinCondition {
    key: Option<(FieldRef, FieldRef)>,
    residual: Option<Predicate>,
}

impl JoinCondition {
    pub fn bind(conjuncts: &[Expr], left: &Layout, right: &Layout) -> Result<Self> {
        let mut key = None;
        let mut rest = Vec::new();
        for c in conjuncts {
            if key.is_none() && c.as_column_equality().is_some() {
                if let Predicate::Compare {
                    lhs: Operand::Field(a),
                    rhs: Operand::Field(b),
                    ..
                } = Predicate::bind(c, left, Some(right))?
                {
                    match (a.side, b.side) {
                        (Side::Left, Side::Right) => {
                            key = Some((a, b));
                            continue;
                        }
                        (Side::Right, Side::Left) => {
                            key = Some((b, a));
                            continue;
                        }
                        _ => {}
                    }
                }
            }
            rest.push(c.clone());
        }
        let residual = if rest.is_empty() {
            None
        } else {
            Some(Predicate::bind(&Expr::and_all(rest), left, Some(right))?)
        };
        Ok(JoinCondition { key, residual })
    }

    pub fn is_hash(&self) -> bool {
        self.key.is_some()
    }

    fn residual_holds(&self, l: &[Value], r: &[Value]) -> bool {
        self.residual.as_ref().is_none_or(|p| p.eval(l, Some(r)))
    }

    /// Matching `(left, right)` index pairs, left-major, right ascending.
    pub fn pairs<L: AsRef<[Value]>, R: AsRef<[Value]>>(&self, left: &[L], right: &[R]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        match &self.key {
            Some((lk, rk)) => {
                let mut table: HashMap<JoinKey, Vec<usize>> = HashMap::new();
                for (j, r) in right.iter().enumerate() {
                    if let Some(k) = field_value(rk, r.as_ref()).join_key() {
                        table.entry(k).or_default().push(j);
                    }
                }
                for (i, l) in left.iter().enumerate() {
                    let Some(k) = field_value(lk, l.as_ref()).join_key() else { continue };
                    if let Some(js) = table.get(&k) {
                        for &j in js {
                            if self.residual_holds(l.as_ref(), right[j].as_ref()) {
                                out.push((i, j));
                            }
                        }
                    }
                }
            }
            None => {
                for (i, l) in left.iter().enumerate() {
                    for (j, r) in right.iter().enumerate() {
                        if self.residual_holds(l.as_ref(), r.as_ref()) {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
        out
    }
}

pub enum JoinOperand<'a> {
    Rows { layout: &'a Layout, rows: &'a [Vec<Value>] },
    Graph { pattern: &'a Pattern },
}

/// Rows linked into one element of a pattern: the element only matches
/// keys in `restriction` (nids for vertices, tids for edges), and each
/// key carries the indices of the rows it joined with.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphJoin {
    pub element: Option<Element>,
    pub restriction: HashSet<u64>,
    pub extensions: HashMap<u64, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JoinOutput {
    /// Linked `(left, right)` row pairs.
    Pairs(Vec<(usize, usize)>),
    Graph(GraphJoin),
}

/// Pattern element the predicate touches; `Vertex(0)` when it touches none.
pub fn touched_element(pattern: &Pattern, predicate: &[Expr]) -> Result<Element> {
    let touched: BTreeSet<Element> = predicate
        .iter()
        .flat_map(|e| e.qualifiers())
        .filter_map(|q| pattern.element_of(&q))
        .collect();
    match touched.len() {
        0 => Ok(Element::Vertex(0)),
        1 => Ok(*touched.iter().next().unwrap()),
        _ => Err(Error::Unsupported(
            "a cross-model join predicate may touch only one vertex or edge of the pattern".into(),
        )),
    }
}

pub fn cross_model_join(db: &Database, left: JoinOperand<'_>, right: JoinOperand<'_>, predicate: &[Expr]) -> Result<JoinOutput> {
    match (left, right) {
        (JoinOperand::Rows { layout: ll, rows: lr }, JoinOperand::Rows { layout: rl, rows: rr }) => {
            Ok(JoinOutput::Pairs(JoinCondition::bind(predicate, ll, rl)?.pairs(lr, rr)))
        }
        (JoinOperand::Rows { layout, rows }, JoinOperand::Graph { pattern })
        | (JoinOperand::Graph { pattern }, JoinOperand::Rows { layout, rows }) => {
            Ok(JoinOutput::Graph(join_into_graph(db, layout, rows, pattern, predicate)?))
        }
        (JoinOperand::Graph { .. }, JoinOperand::Graph { .. }) => {
            Err(Error::Unsupported("joins between two graphs are not supported".into()))
        }
    }
}

fn join_into_graph(db: &Database, layout: &Layout, rows: &[Vec<Value>], pattern: &Pattern, predicate: &[Expr]) -> Result<GraphJoin> {
    let element = touched_element(pattern, predicate)?;
    let oid = pattern.table(db, element)?;
    let schema = db.schema(oid)?;
    let records: Vec<_> = db.collection(oid)?.scan(None).collect();
    let values: Vec<&[Value]> = records.iter().map(|r| r.values).collect();
    let cond = JoinCondition::bind(predicate, layout, &pattern.layout(db, element)?)?;
    let topo = db.topology(&pattern.graph)?;
    let mut out = GraphJoin {
        element: Some(element),
        ..GraphJoin::default()
    };
    for (i, j) in cond.pairs(rows, &values) {
        let key = match element {
            Element::Vertex(_) => topo.mappers.nid_of(vertex_key_of(schema, values[j])?)?,
            Element::Edge(_) => records[j].tid.0,
        };
        out.restriction.insert(key);
        out.extensions.entry(key).or_default().push(i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::yogurt;
    use crate::graph::{EdgeOrientation, PatternEdge, PatternVertex};
    use crate::predicate::{ColumnId, ColumnRef, CompareOp, Term};

    fn persons_pattern(db: &Database) -> Pattern {
        Pattern::new(
            "Interested_in",
            vec![
                PatternVertex {
                    var: "p".into(),
                    table: db.oid_of("Persons").unwrap(),
                },
                PatternVertex {
                    var: "t".into(),
                    table: db.oid_of("Tags").unwrap(),
                },
            ],
            vec![PatternEdge {
                var: "e".into(),
                orientation: EdgeOrientation::Out,
            }],
        )
        .unwrap()
    }

    fn customer_rows(db: &Database) -> (Layout, Vec<Vec<Value>>) {
        let c = db.collection_by_name("Customers").unwrap();
        let layout = Layout::of_schema("C", c.schema());
        (layout, c.iter_live().map(|r| r.values.to_vec()).collect())
    }

    fn eq(a: ColumnRef, b: ColumnRef) -> Expr {
        Expr::compare(CompareOp::Eq, Term::Column(a), Term::Column(b))
    }

    #[test]
    fn customers_link_into_person_vertices() {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        let pattern = persons_pattern(&db);
        let (layout, rows) = customer_rows(&db);
        let pred = [eq(ColumnRef::qualified("C", "id"), ColumnRef::qualified("p", "id"))];
        let out = cross_model_join(&db, JoinOperand::Rows { layout: &layout, rows: &rows }, JoinOperand::Graph { pattern: &pattern }, &pred)
            .unwrap();
        let JoinOutput::Graph(g) = out else { panic!() };
        assert_eq!(g.element, Some(Element::Vertex(0)));
        assert_eq!(g.restriction.len(), 4);
        for (nid, ext) in &g.extensions {
            let (_, tid) = db.topology("Interested_in").unwrap().mappers.vertex_of(*nid).unwrap();
            let person = db.collection_by_name("Persons").unwrap().peek(tid).unwrap();
            assert_eq!(ext.len(), 1);
            assert_eq!(rows[ext[0]][0], person.values[1]);
        }
    }

    #[test]
    fn false_predicate_gives_empty_vertex_set() {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        let pattern = persons_pattern(&db);
        let (layout, rows) = customer_rows(&db);
        let out = cross_model_join(&db, JoinOperand::Rows { layout: &layout, rows: &rows }, JoinOperand::Graph { pattern: &pattern }, &[Expr::Const(false)])
            .unwrap();
        let JoinOutput::Graph(g) = out else { panic!() };
        assert!(g.restriction.is_empty());
    }

    #[test]
    fn graph_with_graph_and_multi_element_predicates_are_rejected() {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        let pattern = persons_pattern(&db);
        let err = cross_model_join(&db, JoinOperand::Graph { pattern: &pattern }, JoinOperand::Graph { pattern: &pattern }, &[]);
        assert!(matches!(err, Err(Error::Unsupported(_))));
        let (layout, rows) = customer_rows(&db);
        let pred = [
            eq(ColumnRef::qualified("C", "id"), ColumnRef::qualified("p", "id")),
            eq(ColumnRef::qualified("C", "loyal"), ColumnRef::qualified("e", "weight")),
        ];
        let err = cross_model_join(&db, JoinOperand::Rows { layout: &layout, rows: &rows }, JoinOperand::Graph { pattern: &pattern }, &pred);
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }

    #[test]
    fn row_joins_match_nested_loop_oracle() {
        use rand::Rng;
        let mut r = crate::fixtures::rng(3);
        let left_layout = Layout::new(vec![ColumnId::new("a", "k"), ColumnId::new("a", "x")]);
        let right_layout = Layout::new(vec![ColumnId::new("b", "doc")]);
        for _ in 0..20 {
            let left: Vec<Vec<Value>> = (0..r.gen_range(0..15))
                .map(|_| vec![Value::Int(r.gen_range(0..5)), Value::Int(r.gen_range(0..10))])
                .collect();
            let right: Vec<Vec<Value>> = (0..r.gen_range(0..15))
                .map(|_| {
                    let k = if r.gen_bool(0.1) { serde_json::Value::Null } else { r.gen_range(0..5).into() };
                    vec![Value::from_json(&serde_json::json!({"k": k, "y": r.gen_range(0..10)}))]
                })
                .collect();
            let pred = [
                eq(ColumnRef::qualified("a", "k"), ColumnRef::document_path("b", vec![crate::value::PathStep::Key("k".into())])),
                Expr::compare(
                    CompareOp::Lt,
                    Term::Column(ColumnRef::qualified("a", "x")),
                    Term::Column(ColumnRef::document_path("b", vec![crate::value::PathStep::Key("y".into())])),
                ),
            ];
            let JoinOutput::Pairs(got) = cross_model_join(
                &Database::in_memory(),
                JoinOperand::Rows { layout: &left_layout, rows: &left },
                JoinOperand::Rows { layout: &right_layout, rows: &right },
                &pred,
            )
            .unwrap() else {
                panic!()
            };
            let whole = Predicate::bind(&Expr::and_all(pred.clone()), &left_layout, Some(&right_layout)).unwrap();
            let mut want = Vec::new();
            for (i, l) in left.iter().enumerate() {
                for (j, rr) in right.iter().enumerate() {
                    if whole.eval(l, Some(rr)) {
                        want.push((i, j));
                    }
                }
            }
            assert_eq!(got, want);
        }
    }
}
