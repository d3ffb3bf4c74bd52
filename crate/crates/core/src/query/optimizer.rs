//! Rewrite rules, join-placement enumeration and cost-based choice of the
//! physical plan.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cost::{choose_placement, cost_hash_join, cost_join, CostConstants, Estimate};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{estimate_plan, plan_pattern, Element, EdgeOrientation, PlanOptions};
use crate::predicate::{ColumnId, ColumnRef, CompareOp, Expr, Layout, Predicate, Term};
use crate::stats::{estimate_selectivity, FieldKey};
use crate::value::PathStep;

use super::join::{touched_element, JoinCondition};
use super::logical::{build_logical_plan, Gcdi, TrimmedScan};
use super::parser::parse_query;
use super::physical::{execute, JoinMethod, PhysicalNode, PhysicalOp, QueryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    PredicatePushdown,
    MatchTrimming,
    ProjectionTrimming,
    TraversalPruning,
}

impl Rule {
    pub const ALL: [Rule; 4] = [
        Rule::PredicatePushdown,
        Rule::MatchTrimming,
        Rule::ProjectionTrimming,
        Rule::TraversalPruning,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::PredicatePushdown => "predicate-pushdown",
            Rule::MatchTrimming => "match-trimming",
            Rule::ProjectionTrimming => "projection-trimming",
            Rule::TraversalPruning => "traversal-pruning",
        }
    }

    pub fn parse(name: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where cross-model joins touching the graph run relative to the match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinShape {
    /// Match first, then join the graph relation with the collections.
    MatchFirst,
    /// Join the first directly connected collection into the graph, then
    /// match, then join the rest.
    PushFirst,
    /// Join all collections among themselves, then into the graph.
    JoinsFirst,
}

impl JoinShape {
    pub const ALL: [JoinShape; 3] = [JoinShape::MatchFirst, JoinShape::PushFirst, JoinShape::JoinsFirst];
}

impl fmt::Display for JoinShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinShape::MatchFirst => "match-first",
            JoinShape::PushFirst => "push-first",
            JoinShape::JoinsFirst => "joins-first",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOptions {
    pub rules: BTreeSet<Rule>,
    /// Push pattern predicates into candidate construction.
    pub match_pushdown: bool,
    pub costs: CostConstants,
    /// Use this join shape instead of the cheapest legal one.
    pub shape: Option<JoinShape>,
    /// Match patterns with hash joins over the vertex and edge tables.
    pub join_emulation: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            rules: Rule::ALL.into_iter().collect(),
            match_pushdown: true,
            costs: CostConstants::default(),
            shape: None,
            join_emulation: false,
        }
    }
}

impl QueryOptions {
    /// No rewrite rules, no predicate pushdown into matching, match first.
    pub fn unoptimized() -> Self {
        QueryOptions {
            rules: BTreeSet::new(),
            match_pushdown: false,
            shape: Some(JoinShape::MatchFirst),
            ..QueryOptions::default()
        }
    }

    pub fn enabled(&self, r: Rule) -> bool {
        self.rules.contains(&r)
    }

    pub fn set_rule(&mut self, r: Rule, on: bool) {
        if on {
            self.rules.insert(r);
        } else {
            self.rules.remove(&r);
        }
    }
}

/// `Some((column, op, literal))` for `column op literal` in either order.
fn column_literal(e: &Expr) -> Option<(&ColumnRef, CompareOp, &Term)> {
    match e {
        Expr::Compare {
            op,
            lhs: Term::Column(c),
            rhs: lit @ Term::Literal(_),
        } => Some((c, op.op(), lit)),
        Expr::Compare {
            op,
            lhs: lit @ Term::Literal(_),
            rhs: Term::Column(c),
        } => Some((c, op.op().flip(), lit)),
        _ => None,
    }
}

/// Moves selection conjuncts over a single pattern variable into the
/// pattern, and copies `X.a op literal` onto `v.b` when the joins equate
/// `X.a` with pattern column `v.b` (the original stays in place).
pub fn rule_graph_predicate_pushdown(g: &mut Gcdi) -> bool {
    let Some(gp) = g.graph.as_mut() else { return false };
    if gp.trimmed.is_some() {
        return false;
    }
    let mut fired = false;
    let mut kept = Vec::new();
    for c in std::mem::take(&mut g.selection) {
        let q = c.qualifiers();
        let element = match q.iter().next() {
            Some(b) if q.len() == 1 => gp.pattern.element_of(b),
            _ => None,
        };
        match element {
            Some(e) => {
                gp.pattern.add_predicate(e, c);
                fired = true;
            }
            None => kept.push(c),
        }
    }
    g.selection = kept;
    for s in &g.selection {
        let Some((col, op, lit)) = column_literal(s) else { continue };
        for j in &g.joins {
            let Some((a, b)) = j.as_column_equality() else { continue };
            let other = if a == col {
                b
            } else if b == col {
                a
            } else {
                continue;
            };
            let Some(e) = other.qualifier.as_deref().and_then(|q| gp.pattern.element_of(q)) else { continue };
            let copy = Expr::compare(op, Term::Column(other.clone()), lit.clone());
            let present = gp.pattern.predicates.get(&e).is_some_and(|p| p.conjuncts().contains(&copy));
            if !present {
                gp.pattern.add_predicate(e, copy);
                fired = true;
            }
        }
    }
    fired
}

/// Replaces a match with a plain scan when topology adds nothing: a
/// single-vertex pattern, or vertex-edge-vertex where only the edge is
/// constrained or referenced.
pub fn rule_match_trimming(g: &mut Gcdi, db: &Database) -> Result<bool> {
    let referenced: BTreeSet<String> = g
        .output
        .iter()
        .filter_map(|o| o.term.as_column().and_then(|c| c.qualifier.clone()))
        .chain(g.selection.iter().chain(&g.joins).flat_map(|e| e.qualifiers()))
        .collect();
    let Some(gp) = g.graph.as_mut() else { return Ok(false) };
    if gp.trimmed.is_some() {
        return Ok(false);
    }
    let p = &gp.pattern;
    let conjuncts = |e: Element| p.predicates.get(&e).map(Expr::conjuncts).unwrap_or_default();
    let trimmed = if p.vertices.len() == 1 {
        Some(TrimmedScan {
            var: p.vertices[0].var.clone(),
            oid: p.vertices[0].table,
            filter: conjuncts(Element::Vertex(0)),
        })
    } else if p.vertices.len() == 2
        && !p.predicates.contains_key(&Element::Vertex(0))
        && !p.predicates.contains_key(&Element::Vertex(1))
        && !p.vertices.iter().any(|v| referenced.contains(&v.var))
    {
        let def = db.graph_def(&p.graph)?;
        let var = p.edges[0].var.clone();
        let mut filter = conjuncts(Element::Edge(0));
        if def.vertex_oids.len() > 1 {
            let (s, t) = match p.edges[0].orientation {
                EdgeOrientation::Out => (p.vertices[0].table, p.vertices[1].table),
                EdgeOrientation::In => (p.vertices[1].table, p.vertices[0].table),
            };
            filter.push(Expr::col_eq_lit(ColumnRef::qualified(var.clone(), "soid"), s.0 as i64));
            filter.push(Expr::col_eq_lit(ColumnRef::qualified(var.clone(), "toid"), t.0 as i64));
        }
        Some(TrimmedScan {
            var,
            oid: def.edge_oid,
            filter,
        })
    } else {
        None
    };
    let fired = trimmed.is_some();
    gp.trimmed = trimmed;
    Ok(fired)
}

/// Drops graph-projection columns nothing downstream reads.
pub fn rule_projection_trimming(g: &mut Gcdi, db: &Database) -> Result<bool> {
    let referenced = g.referenced_columns(db)?;
    let Some(gp) = g.graph.as_mut() else { return Ok(false) };
    let before = gp.projection.len();
    gp.projection.retain(|c| referenced.contains(c));
    Ok(gp.projection.len() < before)
}

/// Elements whose record fetch can be skipped: nothing projected from
/// them, no predicate on them, and not the target of a pushed join.
pub fn prunable_elements(g: &Gcdi, restricted: Option<Element>) -> BTreeSet<Element> {
    let Some(gp) = &g.graph else { return BTreeSet::new() };
    gp.pattern
        .elements()
        .into_iter()
        .filter(|e| {
            let var = gp.pattern.var(*e);
            Some(*e) != restricted
                && !gp.pattern.predicates.contains_key(e)
                && !gp.projection.iter().any(|c| c.binding == var)
        })
        .collect()
}

fn pattern_vars(g: &Gcdi) -> BTreeSet<String> {
    g.graph
        .as_ref()
        .map(|gp| gp.pattern.elements().into_iter().map(|e| gp.pattern.var(e).to_string()).collect())
        .unwrap_or_default()
}

fn touches_graph(e: &Expr, vars: &BTreeSet<String>) -> bool {
    e.qualifiers().iter().any(|q| vars.contains(q))
}

/// Relation joined into the graph by the push-first shape, with the
/// conjuncts pushed along.
fn push_first_target(g: &Gcdi) -> Option<(usize, Vec<Expr>)> {
    let gp = g.graph.as_ref().filter(|gp| gp.trimmed.is_none())?;
    let vars = pattern_vars(g);
    for (i, r) in g.relations.iter().enumerate() {
        let pushed: Vec<Expr> = g
            .joins
            .iter()
            .filter(|j| {
                let q = j.qualifiers();
                q.contains(&r.binding) && touches_graph(j, &vars) && q.iter().all(|b| *b == r.binding || vars.contains(b))
            })
            .cloned()
            .collect();
        if !pushed.is_empty() && touched_element(&gp.pattern, &pushed).is_ok() {
            return Some((i, pushed));
        }
    }
    None
}

/// Conjuncts the joins-first shape pushes into the graph.
fn joins_first_pushed(g: &Gcdi) -> Option<Vec<Expr>> {
    let gp = g.graph.as_ref().filter(|gp| gp.trimmed.is_none())?;
    if g.relations.len() < 2 {
        return None;
    }
    let vars = pattern_vars(g);
    let pushed: Vec<Expr> = g.joins.iter().filter(|j| touches_graph(j, &vars)).cloned().collect();
    if pushed.is_empty() || touched_element(&gp.pattern, &pushed).is_err() {
        return None;
    }
    Some(pushed)
}

/// Legal join shapes for the query, match-first always included.
pub fn rule_join_pushdown(g: &Gcdi) -> Vec<JoinShape> {
    let mut shapes = vec![JoinShape::MatchFirst];
    if push_first_target(g).is_some() {
        shapes.push(JoinShape::PushFirst);
    }
    if joins_first_pushed(g).is_some() {
        shapes.push(JoinShape::JoinsFirst);
    }
    shapes
}

struct Planner<'a> {
    db: &'a Database,
    g: &'a Gcdi,
    opts: &'a QueryOptions,
}

impl Planner<'_> {
    fn c(&self) -> &CostConstants {
        &self.opts.costs
    }

    fn base_layout(&self, binding: &str) -> Result<Layout> {
        self.g.binding_layout(self.db, binding)
    }

    fn ndv(&self, c: &ColumnRef) -> Option<f64> {
        let binding = c.qualifier.as_deref()?;
        let oid = self.g.binding_oid(self.db, binding).ok()?;
        let (i, path) = self.base_layout(binding).ok()?.resolve(c).ok()??;
        let key = match path.as_ref().map(|p| p.steps()) {
            None => FieldKey::column(i),
            Some([PathStep::Key(k)]) => FieldKey::nested(i, k.clone()),
            Some(_) => return None,
        };
        let stats = self.db.stats(oid).ok()?;
        stats.field(&key).map(|f| f.ndv.max(1) as f64)
    }

    fn selectivity(&self, e: &Expr) -> f64 {
        let q = e.qualifiers();
        if q.len() <= 1 {
            let (layout, stats) = match q.iter().next() {
                Some(b) => match (self.base_layout(b), self.g.binding_oid(self.db, b).and_then(|o| self.db.stats(o))) {
                    (Ok(l), Ok(s)) => (l, Some(s)),
                    _ => return 1.0 / 3.0,
                },
                None => (Layout::default(), None),
            };
            return match Predicate::bind(e, &layout, None) {
                Ok(p) if q.is_empty() => f64::from(u8::from(p.eval(&[], None))),
                Ok(p) => estimate_selectivity(&p, stats.as_deref()),
                Err(_) => 1.0 / 3.0,
            };
        }
        if let Some((a, b)) = e.as_column_equality() {
            if let (Some(x), Some(y)) = (self.ndv(a), self.ndv(b)) {
                return 1.0 / x.max(y);
            }
        }
        1.0 / 3.0
    }

    fn selectivity_all(&self, es: &[Expr]) -> f64 {
        es.iter().map(|e| self.selectivity(e)).product()
    }

    fn table_scan(&self, idx: usize, filter: Vec<Expr>) -> Result<PhysicalNode> {
        let r = &self.g.relations[idx];
        let n = self.db.collection(r.oid)?.len() as f64;
        let c = self.c();
        Ok(PhysicalNode {
            estimate: Estimate::new(n * (c.io + c.cpu), n * self.selectivity_all(&filter)),
            layout: self.base_layout(&r.binding)?,
            bindings: BTreeSet::from([r.binding.clone()]),
            op: PhysicalOp::TableScan {
                name: r.name.clone(),
                binding: r.binding.clone(),
                oid: r.oid,
                filter,
            },
            children: vec![],
        })
    }

    fn graph_scan(&self, t: &TrimmedScan) -> Result<PhysicalNode> {
        let gp = self.g.graph.as_ref().expect("trimmed scans come from a graph");
        let schema = self.db.schema(t.oid)?;
        let columns: Vec<ColumnId> = Layout::of_schema(&t.var, schema)
            .columns
            .into_iter()
            .filter(|c| gp.projection.contains(c))
            .collect();
        let n = self.db.collection(t.oid)?.len() as f64;
        let c = self.c();
        Ok(PhysicalNode {
            estimate: Estimate::new(n * (c.io + c.cpu), n * self.selectivity_all(&t.filter)),
            layout: Layout::new(columns.clone()),
            bindings: pattern_vars(self.g),
            op: PhysicalOp::GraphScan {
                name: schema.name.clone(),
                var: t.var.clone(),
                oid: t.oid,
                filter: t.filter.clone(),
                columns,
            },
            children: vec![],
        })
    }

    fn pattern_match(&self, pushed: Option<(PhysicalNode, Vec<Expr>)>) -> Result<PhysicalNode> {
        let gp = self.g.graph.as_ref().expect("pattern match needs a graph");
        let pattern = &gp.pattern;
        let mut columns = Vec::new();
        for e in pattern.elements() {
            for c in pattern.layout(self.db, e)?.columns {
                if gp.projection.contains(&c) {
                    columns.push(c);
                }
            }
        }
        let mut layout = Layout::new(columns.clone());
        let mut bindings = pattern_vars(self.g);
        let c = *self.c();
        let mut opts = PlanOptions {
            pushdown: self.opts.match_pushdown,
            costs: c,
            ..PlanOptions::default()
        };
        let (restricted, extra_cost, fanout, children) = match &pushed {
            None => (None, 0.0, 1.0, vec![]),
            Some((child, preds)) => {
                let el = touched_element(pattern, preds)?;
                let n_el = self.db.collection(pattern.table(self.db, el)?)?.len() as f64;
                let join_rows = child.estimate.rows * n_el * self.selectivity_all(preds);
                let keys = join_rows.min(n_el);
                opts.restricted.insert(el, keys);
                let cond = JoinCondition::bind(preds, &child.layout, &pattern.layout(self.db, el)?)?;
                let placement = choose_placement(child.estimate.rows, n_el, false, &c);
                let join = if cond.is_hash() {
                    cost_hash_join(child.estimate.rows, n_el, placement, &c)
                } else {
                    cost_join(child.estimate.rows, n_el, placement, &c)
                };
                let extra = child.estimate.cost + n_el * (c.io + c.cpu) + join;
                layout = child.layout.concat(&layout);
                bindings.extend(child.bindings.iter().cloned());
                let fanout = if keys > 0.0 { join_rows / keys } else { 0.0 };
                (Some(el), extra, fanout, vec![child.clone()])
            }
        };
        let mut plan = plan_pattern(self.db, pattern, &opts)?;
        if self.opts.enabled(Rule::TraversalPruning) {
            plan.pruned = prunable_elements(self.g, restricted);
            plan.estimate = estimate_plan(self.db, pattern, &plan, &c)?;
        }
        let estimate = Estimate::new(plan.estimate.cost + extra_cost, plan.estimate.rows * fanout);
        Ok(PhysicalNode {
            op: PhysicalOp::PatternMatch {
                pattern: pattern.clone(),
                plan,
                columns,
                pushed_join: pushed.map(|(_, p)| p).unwrap_or_default(),
                emulated: self.opts.join_emulation,
            },
            children,
            layout,
            bindings,
            estimate,
        })
    }

    fn cross_join(&self, left: PhysicalNode, right: PhysicalNode, predicate: Vec<Expr>) -> Result<PhysicalNode> {
        let c = self.c();
        let (nl, nr) = (left.estimate.rows, right.estimate.rows);
        let placement = choose_placement(nl, nr, !left.is_scan() && !right.is_scan(), c);
        let cond = JoinCondition::bind(&predicate, &left.layout, &right.layout)?;
        let (method, join) = if cond.is_hash() {
            (JoinMethod::Hash, cost_hash_join(nl, nr, placement, c))
        } else {
            (JoinMethod::NestedLoop, cost_join(nl, nr, placement, c))
        };
        let estimate = Estimate::new(
            left.estimate.cost + right.estimate.cost + join,
            nl * nr * self.selectivity_all(&predicate),
        );
        let mut bindings = left.bindings.clone();
        bindings.extend(right.bindings.iter().cloned());
        Ok(PhysicalNode {
            layout: left.layout.concat(&right.layout),
            bindings,
            estimate,
            op: PhysicalOp::CrossJoin {
                predicate,
                method,
                placement,
            },
            children: vec![left, right],
        })
    }

    /// Left-deep join of `inputs`; each next input is the first connected
    /// to what is already joined, else the first remaining.
    fn join_greedy(&self, mut inputs: Vec<PhysicalNode>, pending: &mut Vec<Expr>) -> Result<PhysicalNode> {
        let mut acc = inputs.remove(0);
        while !inputs.is_empty() {
            let connected = |n: &PhysicalNode| {
                pending.iter().any(|j| {
                    let q = j.qualifiers();
                    q.iter().any(|b| n.bindings.contains(b)) && q.iter().any(|b| acc.bindings.contains(b))
                })
            };
            let pick = inputs.iter().position(connected).unwrap_or(0);
            let next = inputs.remove(pick);
            let mut bound = acc.bindings.clone();
            bound.extend(next.bindings.iter().cloned());
            let (here, later): (Vec<Expr>, Vec<Expr>) =
                pending.drain(..).partition(|j| j.qualifiers().iter().all(|b| bound.contains(b)));
            *pending = later;
            acc = self.cross_join(acc, next, here)?;
        }
        Ok(acc)
    }

    fn build(&self, shape: JoinShape) -> Result<PhysicalNode> {
        let g = self.g;
        let mut top: Vec<Expr> = Vec::new();
        let mut scan_filters: BTreeMap<String, Vec<Expr>> = BTreeMap::new();
        for s in &g.selection {
            let q = s.qualifiers();
            match q.iter().next() {
                Some(b) if q.len() == 1 && g.relation(b).is_some() => {
                    scan_filters.entry(b.clone()).or_default().push(s.clone())
                }
                _ => top.push(s.clone()),
            }
        }
        let scan = |i: usize| self.table_scan(i, scan_filters.get(&g.relations[i].binding).cloned().unwrap_or_default());
        let mut pending = g.joins.clone();
        let mut inputs = Vec::new();
        let mut remaining: Vec<usize> = (0..g.relations.len()).collect();
        if let Some(gp) = &g.graph {
            let node = match (&gp.trimmed, shape) {
                (Some(t), JoinShape::MatchFirst) => self.graph_scan(t)?,
                (Some(_), _) => return Err(Error::Unsupported(format!("join shape {shape} needs an untrimmed match"))),
                (None, JoinShape::MatchFirst) => self.pattern_match(None)?,
                (None, JoinShape::PushFirst) => {
                    let (i, preds) = push_first_target(g)
                        .ok_or_else(|| Error::Unsupported("no collection joins directly into the graph".into()))?;
                    pending.retain(|j| !preds.contains(j));
                    remaining.retain(|r| *r != i);
                    self.pattern_match(Some((scan(i)?, preds)))?
                }
                (None, JoinShape::JoinsFirst) => {
                    let preds = joins_first_pushed(g)
                        .ok_or_else(|| Error::Unsupported("joins-first needs two collections joined to one pattern element".into()))?;
                    pending.retain(|j| !preds.contains(j));
                    let scans = remaining.iter().map(|&i| scan(i)).collect::<Result<Vec<_>>>()?;
                    remaining.clear();
                    let child = self.join_greedy(scans, &mut pending)?;
                    self.pattern_match(Some((child, preds)))?
                }
            };
            inputs.push(node);
        } else if shape != JoinShape::MatchFirst {
            return Err(Error::Unsupported(format!("join shape {shape} needs a graph")));
        }
        for i in remaining {
            inputs.push(scan(i)?);
        }
        if inputs.is_empty() {
            return Err(Error::schema("query reads no collection"));
        }
        let mut root = self.join_greedy(inputs, &mut pending)?;
        top.extend(pending);
        let c = self.c();
        if !top.is_empty() {
            let rows = root.estimate.rows;
            root = PhysicalNode {
                estimate: Estimate::new(root.estimate.cost + rows * c.cpu, rows * self.selectivity_all(&top)),
                layout: root.layout.clone(),
                bindings: root.bindings.clone(),
                op: PhysicalOp::Filter { predicate: top },
                children: vec![root],
            };
        }
        let rows = root.estimate.rows;
        Ok(PhysicalNode {
            estimate: Estimate::new(root.estimate.cost + rows * c.cpu, rows),
            layout: Layout::new(
                g.output
                    .iter()
                    .map(|o| ColumnId::new("", o.name.clone()))
                    .collect(),
            ),
            bindings: root.bindings.clone(),
            op: PhysicalOp::Project { output: g.output.clone() },
            children: vec![root],
        })
    }
}

/// Result of optimization: the rewritten query, the chosen plan and the
/// costed alternatives.
#[derive(Debug, Clone)]
pub struct OptimizedPlan {
    pub query: Gcdi,
    pub physical: PhysicalNode,
    pub shape: JoinShape,
    pub candidates: Vec<(JoinShape, Estimate)>,
    pub rules: Vec<String>,
}

impl OptimizedPlan {
    pub fn explain(&self) -> String {
        format!("{}rules: {}", self.physical, self.rules.join(", "))
    }
}

/// Apply the enabled rules, cost every legal join shape and keep the
/// cheapest (or the forced one).
pub fn optimize(db: &Database, mut g: Gcdi, opts: &QueryOptions) -> Result<OptimizedPlan> {
    opts.costs.validate()?;
    let mut rules = Vec::new();
    if opts.enabled(Rule::PredicatePushdown) && rule_graph_predicate_pushdown(&mut g) {
        rules.push(Rule::PredicatePushdown.to_string());
    }
    if opts.enabled(Rule::MatchTrimming) && rule_match_trimming(&mut g, db)? {
        rules.push(Rule::MatchTrimming.to_string());
    }
    if opts.enabled(Rule::ProjectionTrimming) && rule_projection_trimming(&mut g, db)? {
        rules.push(Rule::ProjectionTrimming.to_string());
    }
    let shapes = match opts.shape {
        Some(s) => vec![s],
        None => rule_join_pushdown(&g),
    };
    let planner = Planner { db, g: &g, opts };
    let mut best: Option<(JoinShape, PhysicalNode)> = None;
    let mut candidates = Vec::new();
    for shape in shapes.iter().copied() {
        let node = planner.build(shape)?;
        candidates.push((shape, node.estimate));
        if best.as_ref().is_none_or(|(_, b)| node.estimate.cost < b.estimate.cost) {
            best = Some((shape, node));
        }
    }
    let (shape, physical) = best.expect("at least one join shape");
    let pruned = physical.walk().iter().any(|n| {
        matches!(&n.op, PhysicalOp::PatternMatch { plan, .. } if !plan.pruned.is_empty())
    });
    if pruned {
        rules.push(Rule::TraversalPruning.to_string());
    }
    if shapes.len() > 1 {
        rules.push(format!("join-pushdown({shape})"));
    }
    Ok(OptimizedPlan {
        query: g,
        physical,
        shape,
        candidates,
        rules,
    })
}

/// Parse, plan, optimize and execute one SELECT.
pub fn run_query(db: &Database, text: &str, opts: &QueryOptions) -> Result<(OptimizedPlan, QueryResult)> {
    let g = build_logical_plan(&parse_query(text)?, db)?;
    let plan = optimize(db, g, opts)?;
    let result = execute(db, &plan.physical)?;
    Ok((plan, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{yogurt, YOGURT_QUERY};
    use crate::value::Value;

    fn yogurt_db() -> Database {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        db
    }

    fn ints(rows: &[(i64, i64)]) -> Vec<Vec<Value>> {
        rows.iter().map(|(a, b)| vec![Value::Int(*a), Value::Int(*b)]).collect()
    }

    #[test]
    fn yogurt_answers_match_under_every_configuration() {
        let db = yogurt_db();
        let expected = ints(&[(1, 10), (1, 20), (2, 20)]);
        let mut configs = vec![QueryOptions::default(), QueryOptions::unoptimized()];
        for shape in JoinShape::ALL {
            configs.push(QueryOptions { shape: Some(shape), ..QueryOptions::default() });
            configs.push(QueryOptions { shape: Some(shape), join_emulation: true, ..QueryOptions::default() });
        }
        for opts in configs {
            let (plan, result) = run_query(&db, YOGURT_QUERY, &opts).unwrap();
            assert_eq!(result.sorted_rows(), expected, "{opts:?}\n{}", plan.explain());
        }
    }

    #[test]
    fn yogurt_offers_all_three_shapes() {
        let db = yogurt_db();
        let (plan, _) = run_query(&db, YOGURT_QUERY, &QueryOptions::default()).unwrap();
        let shapes: Vec<JoinShape> = plan.candidates.iter().map(|(s, _)| *s).collect();
        assert_eq!(shapes, JoinShape::ALL.to_vec());
        let best = plan.candidates.iter().map(|(_, e)| e.cost).fold(f64::INFINITY, f64::min);
        assert_eq!(plan.physical.estimate.cost, best);
    }

    #[test]
    fn unoptimized_explain_has_empty_rules_line() {
        let db = yogurt_db();
        let (plan, _) = run_query(&db, YOGURT_QUERY, &QueryOptions::unoptimized()).unwrap();
        let text = plan.explain();
        assert!(text.ends_with("rules: "), "{text}");
        assert!(text.lines().next().unwrap().starts_with("Project"));
        for line in text.lines().filter(|l| !l.starts_with("rules:")) {
            assert!(line.contains("cost=") && line.contains("rows="), "{line}");
        }
    }

    #[test]
    fn pushdown_copies_literal_through_join_equality() {
        let db = yogurt_db();
        let q = "SELECT C.name FROM Customers C, Interested_in MATCH (p:Persons)-[e:Interested in]->(t:Tags) \
                 WHERE C.id = p.id AND C.id = 1 AND t.name = 'dairy'";
        let mut g = build_logical_plan(&parse_query(q).unwrap(), &db).unwrap();
        assert!(rule_graph_predicate_pushdown(&mut g));
        let preds = &g.graph.as_ref().unwrap().pattern.predicates;
        assert_eq!(preds[&Element::Vertex(0)].to_string(), "p.id = 1");
        assert!(preds.contains_key(&Element::Vertex(1)));
        // the collection-side original is kept
        assert_eq!(g.selection.len(), 1);
        let (_, r) = run_query(&db, q, &QueryOptions::default()).unwrap();
        assert_eq!(r.rows, vec![vec![Value::from("Ann")]]);
    }

    #[test]
    fn single_vertex_match_becomes_scan() {
        let db = yogurt_db();
        let q = "SELECT p.name FROM Interested_in MATCH (p:Persons) WHERE p.id > 2";
        let (plan, r) = run_query(&db, q, &QueryOptions::default()).unwrap();
        assert!(plan.rules.contains(&"match-trimming".to_string()));
        assert!(plan.physical.walk().iter().any(|n| matches!(n.op, PhysicalOp::GraphScan { .. })));
        assert_eq!(r.sorted_rows(), vec![vec![Value::from("Cai")], vec![Value::from("Dee")]]);
    }

    #[test]
    fn edge_only_match_scans_edge_table_with_endpoint_filters() {
        let db = yogurt_db();
        let q = "SELECT e.weight FROM Interested_in MATCH (p:Persons)-[e:Interested in]->(t:Tags) WHERE e.weight >= 2";
        let mut g = build_logical_plan(&parse_query(q).unwrap(), &db).unwrap();
        rule_graph_predicate_pushdown(&mut g);
        assert!(rule_match_trimming(&mut g, &db).unwrap());
        let t = g.graph.as_ref().unwrap().trimmed.as_ref().unwrap();
        let filter: Vec<String> = t.filter.iter().map(|e| e.to_string()).collect();
        assert!(filter.iter().any(|f| f.starts_with("e.soid")), "{filter:?}");
        assert!(filter.iter().any(|f| f.starts_with("e.toid")), "{filter:?}");
        let (_, r) = run_query(&db, q, &QueryOptions::default()).unwrap();
        let (_, base) = run_query(&db, q, &QueryOptions::unoptimized()).unwrap();
        assert_eq!(r.sorted_rows(), base.sorted_rows());
        assert_eq!(r.row_count(), 3);
    }

    #[test]
    fn projection_trimming_and_pruning_drop_unread_elements() {
        let db = yogurt_db();
        let q = "SELECT t.name FROM Interested_in MATCH (p:Persons)-[e:Interested in]->(t:Tags) WHERE p.id = 1";
        let (plan, r) = run_query(&db, q, &QueryOptions::default()).unwrap();
        let gp = plan.query.graph.as_ref().unwrap();
        assert!(gp.projection.iter().all(|c| c.binding == "t"));
        assert!(plan.rules.contains(&"projection-trimming".to_string()));
        assert!(plan.rules.contains(&"traversal-pruning".to_string()));
        assert_eq!(r.sorted_rows(), vec![vec![Value::from("dairy")], vec![Value::from("organic")]]);
    }
}
