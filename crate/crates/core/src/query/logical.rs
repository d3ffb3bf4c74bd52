//! Name resolution and the logical form of a query.
//!
//! A resolved query ([`Gcdi`]) keeps the parts the optimizer rewrites:
//! output terms, the relational collections, the graph with its pattern
//! and graph projection, selection conjuncts and cross-model join
//! conjuncts. [`Gcdi::to_plan`] renders it as an operator tree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{Element, Pattern, PatternEdge, PatternVertex};
use crate::predicate::{ColumnId, ColumnRef, Expr, Layout, Term};
use crate::schema::Oid;

use super::ast::{ExprText, Query, SelectItem, TermText};

#[derive(Debug, Clone, PartialEq)]
pub struct RelationRef {
    pub name: String,
    pub binding: String,
    pub oid: Oid,
}

/// A match clause replaced by a plain scan of one vertex or edge table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmedScan {
    pub var: String,
    pub oid: Oid,
    pub filter: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPart {
    pub name: String,
    pub binding: String,
    pub pattern: Pattern,
    /// Pattern-variable columns the match hands to the rest of the query.
    pub projection: BTreeSet<ColumnId>,
    pub trimmed: Option<TrimmedScan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputColumn {
    pub name: String,
    pub term: Term,
}

/// Resolved query: every column reference is qualified by its binding.
#[derive(Debug, Clone, PartialEq)]
pub struct Gcdi {
    pub output: Vec<OutputColumn>,
    pub relations: Vec<RelationRef>,
    pub graph: Option<GraphPart>,
    /// Selection conjuncts over zero or one binding, or over pattern
    /// variables only.
    pub selection: Vec<Expr>,
    /// Join conjuncts linking a relation to another binding.
    pub joins: Vec<Expr>,
}

impl Gcdi {
    pub fn is_pattern_var(&self, binding: &str) -> bool {
        self.graph.as_ref().is_some_and(|g| g.pattern.element_of(binding).is_some())
    }

    pub fn relation(&self, binding: &str) -> Option<&RelationRef> {
        self.relations.iter().find(|r| r.binding == binding)
    }

    /// Collection a binding reads from.
    pub fn binding_oid(&self, db: &Database, binding: &str) -> Result<Oid> {
        if let Some(r) = self.relation(binding) {
            return Ok(r.oid);
        }
        if let Some(g) = &self.graph {
            if let Some(e) = g.pattern.element_of(binding) {
                return g.pattern.table(db, e);
            }
        }
        Err(Error::schema(format!("unknown binding {binding}")))
    }

    /// Full column layout of a binding's collection.
    pub fn binding_layout(&self, db: &Database, binding: &str) -> Result<Layout> {
        Ok(Layout::of_schema(binding, db.schema(self.binding_oid(db, binding)?)?))
    }

    pub fn bindings(&self) -> Vec<String> {
        let mut out: Vec<String> = self.relations.iter().map(|r| r.binding.clone()).collect();
        if let Some(g) = &self.graph {
            out.extend(g.pattern.elements().into_iter().map(|e| g.pattern.var(e).to_string()));
        }
        out
    }

    /// Columns a reference reads, as stored columns of its binding.
    pub fn column_of(&self, db: &Database, c: &ColumnRef) -> Result<ColumnId> {
        let binding = c
            .qualifier
            .as_deref()
            .ok_or_else(|| Error::schema(format!("unqualified column reference {c}")))?;
        let layout = self.binding_layout(db, binding)?;
        match layout.resolve(c)? {
            Some((i, _)) => Ok(layout.columns[i].clone()),
            None => Err(Error::schema(format!("unresolved column reference {c}"))),
        }
    }

    /// Every column referenced by the output, the selection and the joins.
    pub fn referenced_columns(&self, db: &Database) -> Result<BTreeSet<ColumnId>> {
        let mut out = BTreeSet::new();
        for o in &self.output {
            if let Term::Column(c) = &o.term {
                out.insert(self.column_of(db, c)?);
            }
        }
        for e in self.selection.iter().chain(&self.joins) {
            for c in e.column_refs() {
                out.insert(self.column_of(db, c)?);
            }
        }
        Ok(out)
    }

    /// Operator tree: projection over selection over cross-model joins.
    /// Relations joined directly to the graph are joined into the graph
    /// relation first, the other relations among themselves, then both.
    pub fn to_plan(&self) -> LogicalPlan {
        let mut pending: Vec<Expr> = self.joins.clone();
        let mut root: Option<(LogicalPlan, BTreeSet<String>)> = None;
        let mut rest: Vec<&RelationRef> = self.relations.iter().collect();
        if let Some(g) = &self.graph {
            let vars: BTreeSet<String> = g
                .pattern
                .elements()
                .into_iter()
                .map(|e| g.pattern.var(e).to_string())
                .collect();
            let node = LogicalPlan::GraphProjection {
                columns: g.projection.iter().cloned().collect(),
                input: Box::new(LogicalPlan::Match {
                    pattern: g.pattern.clone(),
                    input: Box::new(LogicalPlan::CollectionRef {
                        name: g.name.clone(),
                        binding: g.binding.clone(),
                    }),
                }),
            };
            let mut bound = vars.clone();
            let mut tree = node;
            let direct: Vec<&RelationRef> = rest
                .iter()
                .copied()
                .filter(|r| {
                    self.joins.iter().any(|j| {
                        let q = j.qualifiers();
                        q.contains(&r.binding) && q.iter().any(|b| vars.contains(b))
                    })
                })
                .collect();
            rest.retain(|r| !direct.iter().any(|d| d.binding == r.binding));
            for r in direct {
                bound.insert(r.binding.clone());
                tree = join_node(tree, collection(r), &bound, &mut pending);
            }
            root = Some((tree, bound));
        }
        let mut others: Option<(LogicalPlan, BTreeSet<String>)> = None;
        for r in greedy_order(&rest, &self.joins) {
            others = Some(match others {
                None => {
                    let b = BTreeSet::from([r.binding.clone()]);
                    (collection(r), b)
                }
                Some((tree, mut b)) => {
                    b.insert(r.binding.clone());
                    (join_node(tree, collection(r), &b, &mut pending), b)
                }
            });
        }
        let (mut tree, _) = match (root, others) {
            (Some((l, mut lb)), Some((r, rb))) => {
                lb.extend(rb);
                (join_node(l, r, &lb, &mut pending), lb)
            }
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => (
                LogicalPlan::CollectionRef {
                    name: String::new(),
                    binding: String::new(),
                },
                BTreeSet::new(),
            ),
        };
        let mut selection = self.selection.clone();
        selection.extend(pending);
        if !selection.is_empty() {
            tree = LogicalPlan::Selection {
                predicate: selection,
                input: Box::new(tree),
            };
        }
        LogicalPlan::Projection {
            columns: self.output.clone(),
            input: Box::new(tree),
        }
    }

    /// Text identifying the query up to binding names and conjunct order.
    pub fn canonical_text(&self, db: &Database) -> Result<String> {
        let mut rename: BTreeMap<String, String> = BTreeMap::new();
        let mut rels: Vec<(usize, &RelationRef)> = self.relations.iter().enumerate().collect();
        rels.sort_by(|a, b| (&a.1.name, a.0).cmp(&(&b.1.name, b.0)));
        let mut parts = Vec::new();
        for (i, (_, r)) in rels.iter().enumerate() {
            rename.insert(r.binding.clone(), format!("r{i}"));
            parts.push(format!("r{i}={}", r.name));
        }
        if let Some(g) = &self.graph {
            for e in g.pattern.elements() {
                let name = match e {
                    Element::Vertex(i) => format!("v{i}"),
                    Element::Edge(i) => format!("e{i}"),
                };
                rename.insert(g.pattern.var(e).to_string(), name);
            }
            let mut shape = format!("graph={}:", g.name);
            for (i, v) in g.pattern.vertices.iter().enumerate() {
                shape.push_str(&format!("(v{i}:{})", db.schema(v.table)?.name));
                if let Some(e) = g.pattern.edges.get(i) {
                    shape.push_str(&format!("{:?}", e.orientation));
                }
            }
            parts.push(shape);
        }
        let map = |c: &ColumnRef| {
            let mut c = c.clone();
            if let Some(q) = &c.qualifier {
                if let Some(n) = rename.get(q) {
                    c.qualifier = Some(n.clone());
                }
            }
            c
        };
        let out: Vec<String> = self
            .output
            .iter()
            .map(|o| match &o.term {
                Term::Column(c) => map(c).to_string(),
                lit => TermText(lit).to_string(),
            })
            .collect();
        parts.push(format!("out={}", out.join(",")));
        let mut conjuncts: Vec<String> = self
            .selection
            .iter()
            .chain(&self.joins)
            .chain(self.graph.iter().flat_map(|g| g.pattern.predicates.values()))
            .flat_map(|e| e.conjuncts())
            .map(|e| e.map_columns(&mut |c| map(c)).canonical().to_string())
            .collect();
        conjuncts.sort();
        conjuncts.dedup();
        parts.push(format!("where={}", conjuncts.join(" AND ")));
        Ok(parts.join(";"))
    }
}

fn collection(r: &RelationRef) -> LogicalPlan {
    LogicalPlan::CollectionRef {
        name: r.name.clone(),
        binding: r.binding.clone(),
    }
}

fn join_node(left: LogicalPlan, right: LogicalPlan, bound: &BTreeSet<String>, pending: &mut Vec<Expr>) -> LogicalPlan {
    let (here, later): (Vec<Expr>, Vec<Expr>) = pending.drain(..).partition(|j| j.qualifiers().is_subset(bound));
    *pending = later;
    LogicalPlan::CrossModelJoin {
        predicate: here,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Relations in join order: each next relation is the first (in FROM
/// order) connected to those already placed, else the first remaining.
fn greedy_order<'r>(relations: &[&'r RelationRef], joins: &[Expr]) -> Vec<&'r RelationRef> {
    let mut rest: Vec<&RelationRef> = relations.to_vec();
    let mut placed: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let pick = rest
            .iter()
            .position(|r| {
                joins.iter().any(|j| {
                    let q = j.qualifiers();
                    q.contains(&r.binding) && q.iter().any(|b| placed.contains(b))
                })
            })
            .unwrap_or(0);
        let r = rest.remove(pick);
        placed.insert(r.binding.clone());
        out.push(r);
    }
    out
}

/// Logical operator tree.
#[derive(Debug, Clone, PartialEq)]
pub enum LogicalPlan {
    CollectionRef {
        name: String,
        binding: String,
    },
    Match {
        pattern: Pattern,
        input: Box<LogicalPlan>,
    },
    GraphProjection {
        columns: Vec<ColumnId>,
        input: Box<LogicalPlan>,
    },
    CrossModelJoin {
        predicate: Vec<Expr>,
        left: Box<LogicalPlan>,
        right: Box<LogicalPlan>,
    },
    Selection {
        predicate: Vec<Expr>,
        input: Box<LogicalPlan>,
    },
    Projection {
        columns: Vec<OutputColumn>,
        input: Box<LogicalPlan>,
    },
}

impl LogicalPlan {
    pub fn children(&self) -> Vec<&LogicalPlan> {
        match self {
            LogicalPlan::CollectionRef { .. } => vec![],
            LogicalPlan::Match { input, .. }
            | LogicalPlan::GraphProjection { input, .. }
            | LogicalPlan::Selection { input, .. }
            | LogicalPlan::Projection { input, .. } => vec![input],
            LogicalPlan::CrossModelJoin { left, right, .. } => vec![left, right],
        }
    }

    pub fn count_matches(&self) -> usize {
        usize::from(matches!(self, LogicalPlan::Match { .. }))
            + self.children().iter().map(|c| c.count_matches()).sum::<usize>()
    }

    /// Leaves are collection references and every match reads a graph
    /// reference directly.
    pub fn check_invariants(&self) -> Result<()> {
        match self {
            LogicalPlan::Match { input, .. } if !matches!(**input, LogicalPlan::CollectionRef { .. }) => {
                return Err(Error::Consistency("match input must be a graph reference".into()));
            }
            _ => {}
        }
        for c in self.children() {
            c.check_invariants()?;
        }
        Ok(())
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        let exprs = |es: &[Expr]| es.iter().map(|e| ExprText(e).to_string()).collect::<Vec<_>>().join(" AND ");
        match self {
            LogicalPlan::CollectionRef { name, binding } if name == binding => writeln!(f, "{pad}Collection {name}")?,
            LogicalPlan::CollectionRef { name, binding } => writeln!(f, "{pad}Collection {name} AS {binding}")?,
            LogicalPlan::Match { pattern, .. } => {
                let preds: Vec<String> = pattern.predicates.values().map(|e| ExprText(e).to_string()).collect();
                writeln!(f, "{pad}Match {pattern} [{}]", preds.join(" AND "))?
            }
            LogicalPlan::GraphProjection { columns, .. } => {
                let cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
                writeln!(f, "{pad}GraphProjection [{}]", cols.join(", "))?
            }
            LogicalPlan::CrossModelJoin { predicate, .. } => writeln!(f, "{pad}CrossModelJoin [{}]", exprs(predicate))?,
            LogicalPlan::Selection { predicate, .. } => writeln!(f, "{pad}Selection [{}]", exprs(predicate))?,
            LogicalPlan::Projection { columns, .. } => {
                let cols: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
                writeln!(f, "{pad}Projection [{}]", cols.join(", "))?
            }
        }
        for c in self.children() {
            c.write(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for LogicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

/// Resolve names and split the WHERE clause.
pub fn build_logical_plan(query: &Query, db: &Database) -> Result<Gcdi> {
    let mut relations = Vec::new();
    let mut graph_source = None;
    let mut seen = BTreeSet::new();
    for s in &query.from {
        let binding = s.binding().to_string();
        if !seen.insert(binding.clone()) {
            return Err(Error::schema(format!("{binding} appears twice in FROM")));
        }
        if db.catalog().graph(&s.name).is_some() {
            if graph_source.is_some() {
                return Err(Error::Unsupported("a query reads at most one graph".into()));
            }
            graph_source = Some((s.name.clone(), binding));
        } else {
            let oid = db.oid_of(&s.name)?;
            relations.push(RelationRef {
                name: s.name.clone(),
                binding,
                oid,
            });
        }
    }
    let graph = match (&query.pattern, graph_source) {
        (None, None) => None,
        (Some(_), None) => return Err(Error::schema("MATCH needs a graph in FROM")),
        (None, Some((name, _))) => return Err(Error::schema(format!("graph {name} is read without a MATCH clause"))),
        (Some(p), Some((name, binding))) => {
            let def = db.graph_def(&name)?;
            let mut vertices = Vec::new();
            for (i, v) in p.vertices.iter().enumerate() {
                vertices.push(PatternVertex {
                    var: v.var.clone().unwrap_or_else(|| format!("_v{i}")),
                    table: Pattern::resolve_label(db, &name, v.label.as_deref())?,
                });
            }
            let mut edges = Vec::new();
            for (i, e) in p.edges.iter().enumerate() {
                if let Some(l) = &e.label {
                    if *l != def.edge_label {
                        return Err(Error::schema(format!("graph {name} has no edge label {l}")));
                    }
                }
                edges.push(PatternEdge {
                    var: e.var.clone().unwrap_or_else(|| format!("_e{i}")),
                    orientation: e.orientation,
                });
            }
            let pattern = Pattern::new(name.clone(), vertices, edges)?;
            for e in pattern.elements() {
                let var = pattern.var(e);
                if var == binding || relations.iter().any(|r: &RelationRef| r.binding == var) {
                    return Err(Error::schema(format!("{var} is bound twice")));
                }
            }
            Some(GraphPart {
                name,
                binding,
                pattern,
                projection: BTreeSet::new(),
                trimmed: None,
            })
        }
    };
    let mut g = Gcdi {
        output: Vec::new(),
        relations,
        graph,
        selection: Vec::new(),
        joins: Vec::new(),
    };
    let bindings = g.bindings();
    let mut layouts = BTreeMap::new();
    for b in &bindings {
        layouts.insert(b.clone(), g.binding_layout(db, b)?);
    }
    let graph_binding = g.graph.as_ref().map(|gp| gp.binding.clone());
    let resolver = Resolver {
        layouts: &layouts,
        order: &bindings,
        graph_binding: graph_binding.as_deref(),
    };

    for item in &query.select {
        match item {
            SelectItem::Star => {
                for b in &bindings {
                    for id in &layouts[b].columns {
                        g.output.push(OutputColumn {
                            name: id.to_string(),
                            term: Term::Column(ColumnRef::qualified(id.binding.clone(), id.name.clone())),
                        });
                    }
                }
            }
            SelectItem::Term { term: Term::Literal(l), alias } => g.output.push(OutputColumn {
                name: alias.clone().unwrap_or_else(|| TermText(&Term::Literal(l.clone())).to_string()),
                term: Term::Literal(l.clone()),
            }),
            SelectItem::Term {
                term: Term::Column(c),
                alias,
            } => match resolver.whole_record(c) {
                Some(b) => {
                    for id in &layouts[b].columns {
                        let name = match alias {
                            Some(a) => format!("{a}.{}", id.name),
                            None => id.to_string(),
                        };
                        g.output.push(OutputColumn {
                            name,
                            term: Term::Column(ColumnRef::qualified(id.binding.clone(), id.name.clone())),
                        });
                    }
                }
                None => {
                    let resolved = resolver.resolve(c)?;
                    g.output.push(OutputColumn {
                        name: alias.clone().unwrap_or_else(|| resolved.to_string()),
                        term: Term::Column(resolved),
                    });
                }
            },
        }
    }

    let pure_graph = g.relations.is_empty();
    if let Some(filter) = &query.filter {
        let mut resolve_err = None;
        let resolved = filter.map_columns(&mut |c| match resolver.resolve(c) {
            Ok(r) => r,
            Err(e) => {
                resolve_err.get_or_insert(e);
                c.clone()
            }
        });
        if let Some(e) = resolve_err {
            return Err(e);
        }
        for conjunct in resolved.conjuncts() {
            let q = conjunct.qualifiers();
            let relational = q.iter().filter(|b| g.relation(b).is_some()).count();
            if pure_graph && q.len() == 1 {
                let var = q.iter().next().unwrap();
                let gp = g.graph.as_mut().expect("pure graph query has a graph");
                let e = gp.pattern.element_of(var).expect("resolved qualifier is a pattern variable");
                gp.pattern.add_predicate(e, conjunct);
            } else if q.len() >= 2 && relational >= 1 {
                g.joins.push(conjunct);
            } else {
                g.selection.push(conjunct);
            }
        }
    }
    if let Some(gp) = &mut g.graph {
        let mut all = BTreeSet::new();
        for e in gp.pattern.elements() {
            all.extend(layouts[gp.pattern.var(e)].columns.iter().cloned());
        }
        gp.projection = all;
    }
    Ok(g)
}

struct Resolver<'a> {
    layouts: &'a BTreeMap<String, Layout>,
    order: &'a [String],
    graph_binding: Option<&'a str>,
}

impl Resolver<'_> {
    /// `Some(binding)` when `c` names a whole record (`SELECT e`).
    fn whole_record(&self, c: &ColumnRef) -> Option<&String> {
        match (&c.qualifier, &c.column) {
            (None, Some(name)) if c.path.is_empty() => self.order.iter().find(|b| *b == name),
            _ => None,
        }
    }

    fn check(&self, binding: &str, c: &ColumnRef) -> Result<ColumnRef> {
        let layout = self.layouts.get(binding).ok_or_else(|| {
            if Some(binding) == self.graph_binding {
                Error::schema(format!("{binding} is a graph; refer to its pattern variables instead"))
            } else {
                Error::schema(format!("unknown variable {binding} in {c}"))
            }
        })?;
        match layout.resolve(c)? {
            Some(_) => Ok(c.clone()),
            None => Err(Error::schema(format!("{binding} has no column for {c}"))),
        }
    }

    fn resolve(&self, c: &ColumnRef) -> Result<ColumnRef> {
        match (&c.qualifier, &c.column) {
            (Some(q), _) => self.check(q, c),
            (None, Some(name)) => {
                if self.layouts.contains_key(name) {
                    if c.path.is_empty() {
                        return Err(Error::schema(format!("{name} names a whole record; a column is required here")));
                    }
                    return self.check(name, &ColumnRef::document_path(name.clone(), c.path.clone()));
                }
                let hits: Vec<&String> = self
                    .order
                    .iter()
                    .filter(|b| self.layouts[*b].columns.iter().any(|id| &id.name == name))
                    .collect();
                match hits.as_slice() {
                    [b] => self.check(b, &ColumnRef::qualified((*b).clone(), name.clone()).with_path(c.path.clone())),
                    [] => Err(Error::schema(format!("unknown column {name}"))),
                    _ => Err(Error::schema(format!("column {name} is ambiguous"))),
                }
            }
            (None, None) => Err(Error::schema("empty column reference")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{yogurt, YOGURT_QUERY};
    use crate::query::parse_query;

    fn yogurt_db() -> Database {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        db
    }

    #[test]
    fn yogurt_splits_joins_and_selection() {
        let db = yogurt_db();
        let g = build_logical_plan(&parse_query(YOGURT_QUERY).unwrap(), &db).unwrap();
        assert_eq!(g.joins.len(), 3);
        assert_eq!(g.selection.len(), 1);
        assert_eq!(g.output.len(), 2);
        let plan = g.to_plan();
        plan.check_invariants().unwrap();
        assert_eq!(plan.count_matches(), 1);
        let text = plan.to_string();
        // Customers joins the graph relation; Products and Orders join each
        // other; the two results are joined last.
        let expected = [
            "Projection [C.id, t.id]",
            "  Selection [P.title = 'Yogurt']",
            "    CrossModelJoin [O->>'customer_id' = C.id]",
            "      CrossModelJoin [C.id = p.id]",
            "        GraphProjection",
            "          Match (p)-[e]->(t) []",
            "            Collection Interested_in",
            "        Collection Customers AS C",
            "      CrossModelJoin [P.id = O->>'product_id']",
            "        Collection Products AS P",
            "        Collection Orders AS O",
        ];
        for (line, want) in text.lines().zip(expected) {
            assert!(line.starts_with(want), "{line:?} vs {want:?}\n{text}");
        }
    }

    #[test]
    fn query_without_match_has_no_match_node() {
        let db = yogurt_db();
        let g = build_logical_plan(&parse_query("SELECT name FROM Customers WHERE age > 3").unwrap(), &db).unwrap();
        assert_eq!(g.to_plan().count_matches(), 0);
        assert_eq!(g.output[0].term, Term::Column(ColumnRef::qualified("Customers", "name")));
    }

    #[test]
    fn unknown_variables_are_rejected() {
        let db = yogurt_db();
        for q in [
            "SELECT x.id FROM Interested_in MATCH (p:Persons)-[e]->(t:Tags)",
            "SELECT p.id FROM Interested_in MATCH (p:Persons)-[e]->(t:Tags) WHERE q.id = 1",
            "SELECT p.nope FROM Interested_in MATCH (p:Persons)-[e]->(t:Tags)",
            "SELECT p.id FROM Interested_in MATCH (p:Nobody)",
        ] {
            assert!(matches!(build_logical_plan(&parse_query(q).unwrap(), &db), Err(Error::Schema(_))), "{q}");
        }
    }

    #[test]
    fn pure_graph_where_goes_into_pattern() {
        let db = yogurt_db();
        let g = build_logical_plan(
            &parse_query("SELECT t FROM Interested_in MATCH (p:Persons)-[e:Interested in]->(t:Tags) WHERE t.name = 'dairy' AND p.id < t.id")
                .unwrap(),
            &db,
        )
        .unwrap();
        let gp = g.graph.as_ref().unwrap();
        assert_eq!(gp.pattern.predicates.len(), 1);
        assert!(gp.pattern.predicates.contains_key(&Element::Vertex(1)));
        assert_eq!(g.selection.len(), 1);
        assert_eq!(g.output.len(), 3);
    }

    #[test]
    fn canonical_text_ignores_names_and_order() {
        let db = yogurt_db();
        let a = build_logical_plan(&parse_query(YOGURT_QUERY).unwrap(), &db).unwrap();
        let b = build_logical_plan(
            &parse_query(
                "SELECT K.id, x.id FROM Orders Q, Products R, Customers K, Interested_in \
                 MATCH (y:Persons)-[f:Interested in]->(x:Tags) \
                 WHERE R.title = 'Yogurt' AND Q->>'customer_id' = K.id AND y.id = K.id AND R.id = Q->>'product_id'",
            )
            .unwrap(),
            &db,
        )
        .unwrap();
        assert_eq!(a.canonical_text(&db).unwrap(), b.canonical_text(&db).unwrap());
    }
}
