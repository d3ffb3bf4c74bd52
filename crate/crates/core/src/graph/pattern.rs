//! Chain patterns: annotation (start side, pushed and deferred predicates)
//! and the stack-based matcher that runs a sequence of hybrid traversals.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::cost::{cost_match, cost_traverse, CostConstants, Estimate, TraversalCase};
use crate::database::Database;
use crate::error::{Error, Result};
use crate::predicate::{CompareOp, Expr, Layout, Predicate, Term};
use crate::schema::{vertex_key_of, CollectionKind, Oid, Tid};
use crate::stats::estimate_selectivity;
use crate::storage::{Direction, Nid, RecordRef, Topology};

/// Stored direction of a pattern edge relative to chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOrientation {
    /// `(v_i)-[e]->(v_i+1)`
    Out,
    /// `(v_i)<-[e]-(v_i+1)`
    In,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternVertex {
    pub var: String,
    pub table: Oid,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternEdge {
    pub var: String,
    pub orientation: EdgeOrientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Vertex(usize),
    /// Edge `i` joins vertices `i` and `i + 1`.
    Edge(usize),
}

/// A chain pattern over one graph with per-element predicates (each over
/// the element's own columns, qualified by its variable).
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub graph: String,
    pub vertices: Vec<PatternVertex>,
    pub edges: Vec<PatternEdge>,
    pub predicates: BTreeMap<Element, Expr>,
}

impl Pattern {
    pub fn new(graph: impl Into<String>, vertices: Vec<PatternVertex>, edges: Vec<PatternEdge>) -> Result<Self> {
        if vertices.is_empty() || edges.len() + 1 != vertices.len() {
            return Err(Error::schema("a pattern is a chain: n vertices joined by n - 1 edges"));
        }
        let mut seen = HashSet::new();
        for var in vertices.iter().map(|v| &v.var).chain(edges.iter().map(|e| &e.var)) {
            if !seen.insert(var.as_str()) {
                return Err(Error::schema(format!("pattern variable {var} bound twice")));
            }
        }
        Ok(Pattern {
            graph: graph.into(),
            vertices,
            edges,
            predicates: BTreeMap::new(),
        })
    }

    /// Vertex table of `graph` carrying `label`; unlabeled vertices need a
    /// graph with a single vertex table.
    pub fn resolve_label(db: &Database, graph: &str, label: Option<&str>) -> Result<Oid> {
        let def = db.graph_def(graph)?;
        let candidates: Vec<Oid> = match label {
            None => def.vertex_oids.clone(),
            Some(l) => def
                .vertex_oids
                .iter()
                .copied()
                .filter(|o| db.schema(*o).is_ok_and(|s| s.label.as_deref() == Some(l)))
                .collect(),
        };
        match candidates.as_slice() {
            [oid] => Ok(*oid),
            [] => Err(Error::schema(format!(
                "graph {graph} has no vertex table labelled {}",
                label.unwrap_or("")
            ))),
            _ => Err(Error::schema(format!(
                "vertex label {} is ambiguous in graph {graph}",
                label.unwrap_or("(none)")
            ))),
        }
    }

    /// AND `expr` into the element's predicate.
    pub fn add_predicate(&mut self, element: Element, expr: Expr) {
        let merged = match self.predicates.remove(&element) {
            Some(old) => Expr::and_all([old, expr]),
            None => expr,
        };
        self.predicates.insert(element, merged);
    }

    /// Elements in chain order: v0, e0, v1, e1, ...
    pub fn elements(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.vertices.len() * 2);
        for i in 0..self.vertices.len() {
            out.push(Element::Vertex(i));
            if i < self.edges.len() {
                out.push(Element::Edge(i));
            }
        }
        out
    }

    pub fn var(&self, e: Element) -> &str {
        match e {
            Element::Vertex(i) => &self.vertices[i].var,
            Element::Edge(i) => &self.edges[i].var,
        }
    }

    pub fn element_of(&self, var: &str) -> Option<Element> {
        self.elements().into_iter().find(|e| self.var(*e) == var)
    }

    pub fn table(&self, db: &Database, e: Element) -> Result<Oid> {
        Ok(match e {
            Element::Vertex(i) => self.vertices[i].table,
            Element::Edge(_) => db.graph_def(&self.graph)?.edge_oid,
        })
    }

    pub fn layout(&self, db: &Database, e: Element) -> Result<Layout> {
        Ok(Layout::of_schema(self.var(e), db.schema(self.table(db, e)?)?))
    }

    fn bound_predicate(&self, db: &Database, e: Element) -> Result<Option<Predicate>> {
        match self.predicates.get(&e) {
            None => Ok(None),
            Some(expr) => Ok(Some(Predicate::bind(expr, &self.layout(db, e)?, None)?)),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            write!(f, "({})", v.var)?;
            if let Some(e) = self.edges.get(i) {
                match e.orientation {
                    EdgeOrientation::Out => write!(f, "-[{}]->", e.var)?,
                    EdgeOrientation::In => write!(f, "<-[{}]-", e.var)?,
                }
            }
        }
        Ok(())
    }
}

/// How a predicate behaves for pushdown decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateClass {
    Equality,
    Inequality,
    Range,
}

impl PredicateClass {
    pub fn of(expr: &Expr) -> PredicateClass {
        let conjuncts = expr.conjuncts();
        let op_of = |c: &Expr| match c {
            Expr::Compare { op, lhs, rhs }
                if matches!((lhs, rhs), (Term::Column(_), Term::Literal(_)) | (Term::Literal(_), Term::Column(_))) =>
            {
                Some(op.op())
            }
            _ => None,
        };
        if conjuncts.iter().any(|c| op_of(c) == Some(CompareOp::Eq)) {
            PredicateClass::Equality
        } else if !conjuncts.is_empty() && conjuncts.iter().all(|c| op_of(c) == Some(CompareOp::Ne)) {
            PredicateClass::Inequality
        } else {
            PredicateClass::Range
        }
    }
}

/// Which chain end the matcher starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraversalOrder {
    /// Start at the first vertex.
    Forward,
    /// Start at the last vertex.
    Reverse,
}

impl fmt::Display for TraversalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraversalOrder::Forward => "forward",
            TraversalOrder::Reverse => "reverse",
        })
    }
}

/// Allowed nids (vertices) or edge tids per element, from joins pushed
/// into the match.
pub type Restrictions = BTreeMap<Element, HashSet<u64>>;

#[derive(Debug, Clone)]
pub struct PlanOptions {
    /// Off: forward order, every predicate deferred.
    pub pushdown: bool,
    pub elide_membership: bool,
    pub costs: CostConstants,
    /// Estimated sizes of the restriction sets that will be supplied.
    pub restricted: BTreeMap<Element, f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            pushdown: true,
            elide_membership: true,
            costs: CostConstants::default(),
            restricted: BTreeMap::new(),
        }
    }
}

/// One hybrid traversal in the step sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    pub case: TraversalCase,
    pub element: Element,
}

/// An annotated pattern: start side, predicate placement and pruned
/// record-fetch steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPlan {
    pub order: TraversalOrder,
    pub pushed: BTreeSet<Element>,
    pub deferred: BTreeSet<Element>,
    /// Elements whose record-fetch step is removed.
    pub pruned: BTreeSet<Element>,
    pub elide_membership: bool,
    pub restricted: BTreeMap<Element, f64>,
    pub estimate: Estimate,
}

struct Hop {
    from: usize,
    to: usize,
    edge: usize,
    adjacency: Direction,
}

fn vertex_order(n: usize, order: TraversalOrder) -> Vec<usize> {
    match order {
        TraversalOrder::Forward => (0..n).collect(),
        TraversalOrder::Reverse => (0..n).rev().collect(),
    }
}

fn hops(pattern: &Pattern, order: TraversalOrder) -> Vec<Hop> {
    let ord = vertex_order(pattern.vertices.len(), order);
    ord.windows(2)
        .map(|w| {
            let (from, to) = (w[0], w[1]);
            let edge = from.min(to);
            let along = (to > from) == (pattern.edges[edge].orientation == EdgeOrientation::Out);
            Hop {
                from,
                to,
                edge,
                adjacency: if along { Direction::Forward } else { Direction::Reverse },
            }
        })
        .collect()
}

impl MatchPlan {
    pub fn start_vertex(&self, pattern: &Pattern) -> usize {
        match self.order {
            TraversalOrder::Forward => 0,
            TraversalOrder::Reverse => pattern.vertices.len() - 1,
        }
    }

    /// The step sequence after pruning.
    pub fn steps(&self, pattern: &Pattern) -> Vec<Step> {
        let start = self.start_vertex(pattern);
        let mut steps = Vec::new();
        let sv = Element::Vertex(start);
        if self.pushed.contains(&sv) {
            steps.push(Step {
                case: TraversalCase::VertexToNid,
                element: sv,
            });
        } else if !self.pruned.contains(&sv) {
            steps.push(Step {
                case: TraversalCase::NidToVertex,
                element: sv,
            });
        }
        for hop in hops(pattern, self.order) {
            let e = Element::Edge(hop.edge);
            let v = Element::Vertex(hop.to);
            steps.push(Step {
                case: TraversalCase::NidToNid,
                element: v,
            });
            if !self.pruned.contains(&e) {
                steps.push(Step {
                    case: TraversalCase::NidToEdge,
                    element: e,
                });
            }
            if !self.pruned.contains(&v) {
                steps.push(Step {
                    case: TraversalCase::NidToVertex,
                    element: v,
                });
            }
        }
        steps
    }

    /// One-line summary used by EXPLAIN.
    pub fn describe(&self, pattern: &Pattern) -> String {
        let names = |set: &BTreeSet<Element>| set.iter().map(|e| pattern.var(*e)).collect::<Vec<_>>().join(",");
        let steps: Vec<String> = self
            .steps(pattern)
            .iter()
            .map(|s| format!("{}({})", s.case, pattern.var(s.element)))
            .collect();
        format!(
            "order={} pushed=[{}] deferred=[{}] pruned=[{}] steps=[{}]",
            self.order,
            names(&self.pushed),
            names(&self.deferred),
            names(&self.pruned),
            steps.join(" ")
        )
    }
}

struct ElementInfo {
    size: f64,
    selectivity: f64,
    class: Option<PredicateClass>,
}

struct PatternInputs {
    vertices: Vec<ElementInfo>,
    edges: Vec<ElementInfo>,
    graph_vertices: f64,
    avg_degree: f64,
    single_table: bool,
}

fn element_info(db: &Database, pattern: &Pattern, e: Element) -> Result<ElementInfo> {
    let oid = pattern.table(db, e)?;
    let size = db.collection(oid)?.len() as f64;
    let (selectivity, class) = match pattern.bound_predicate(db, e)? {
        None => (1.0, None),
        Some(p) => {
            let stats = db.stats(oid)?;
            (
                estimate_selectivity(&p, Some(&stats)),
                Some(PredicateClass::of(&pattern.predicates[&e])),
            )
        }
    };
    Ok(ElementInfo {
        size,
        selectivity,
        class,
    })
}

fn gather_inputs(db: &Database, pattern: &Pattern) -> Result<PatternInputs> {
    let topo = db.topology(&pattern.graph)?;
    let def = db.graph_def(&pattern.graph)?;
    let vertices = (0..pattern.vertices.len())
        .map(|i| element_info(db, pattern, Element::Vertex(i)))
        .collect::<Result<_>>()?;
    let edges = (0..pattern.edges.len())
        .map(|i| element_info(db, pattern, Element::Edge(i)))
        .collect::<Result<_>>()?;
    let graph_vertices = topo.live_vertex_count() as f64;
    let avg_degree = if graph_vertices > 0.0 {
        topo.edge_count() as f64 / graph_vertices
    } else {
        0.0
    };
    Ok(PatternInputs {
        vertices,
        edges,
        graph_vertices,
        avg_degree,
        single_table: def.vertex_oids.len() == 1,
    })
}

fn estimate_with(inputs: &PatternInputs, pattern: &Pattern, plan: &MatchPlan, c: &CostConstants) -> Estimate {
    let restrict_frac = |e: Element| {
        let size = match e {
            Element::Vertex(i) => inputs.vertices[i].size,
            Element::Edge(i) => inputs.edges[i].size,
        };
        plan.restricted.get(&e).map_or(1.0, |r| (r / size.max(1.0)).min(1.0))
    };
    let start = plan.start_vertex(pattern);
    let sv = Element::Vertex(start);
    let mut traversal = 0.0;
    let start_size = inputs.vertices[start].size;
    let mut rows = start_size * restrict_frac(sv);
    if plan.pushed.contains(&sv) {
        rows *= inputs.vertices[start].selectivity;
        traversal += cost_traverse(TraversalCase::VertexToNid, rows, 0.0, c);
    } else {
        traversal += rows * c.cpu;
        if !plan.pruned.contains(&sv) {
            traversal += cost_traverse(TraversalCase::NidToVertex, rows, 0.0, c);
        }
    }
    let d = inputs.avg_degree;
    for hop in hops(pattern, plan.order) {
        let (e, v) = (Element::Edge(hop.edge), Element::Vertex(hop.to));
        traversal += cost_traverse(TraversalCase::NidToNid, rows, d, c);
        let label_frac = if inputs.single_table || inputs.graph_vertices == 0.0 {
            1.0
        } else {
            inputs.vertices[hop.to].size / inputs.graph_vertices
        };
        let mut vertex_frac = label_frac * restrict_frac(v);
        if plan.pushed.contains(&v) {
            vertex_frac *= inputs.vertices[hop.to].selectivity;
        }
        let sources = rows * vertex_frac;
        rows = sources * d;
        if !plan.pruned.contains(&e) {
            traversal += cost_traverse(TraversalCase::NidToEdge, sources, d, c);
        }
        if plan.pushed.contains(&e) {
            rows *= inputs.edges[hop.edge].selectivity;
        }
        rows *= restrict_frac(e);
        if !plan.pruned.contains(&v) {
            traversal += cost_traverse(TraversalCase::NidToVertex, rows, 0.0, c);
        }
    }
    let mut pushed_vertex_rows = 0.0;
    let mut pushed_edge_rows = 0.0;
    for e in &plan.pushed {
        match e {
            Element::Vertex(i) => pushed_vertex_rows += inputs.vertices[*i].size,
            Element::Edge(i) => pushed_edge_rows += inputs.edges[*i].size,
        }
    }
    let prop = if plan.deferred.is_empty() { 0.0 } else { rows };
    let cost = cost_match(1.0, pushed_vertex_rows, 1.0, pushed_edge_rows, traversal, prop, c);
    for e in &plan.deferred {
        rows *= match e {
            Element::Vertex(i) => inputs.vertices[*i].selectivity,
            Element::Edge(i) => inputs.edges[*i].selectivity,
        };
    }
    Estimate::new(cost, rows)
}

/// Recompute a plan's estimate (after pruning changed its step sequence).
pub fn estimate_plan(db: &Database, pattern: &Pattern, plan: &MatchPlan, c: &CostConstants) -> Result<Estimate> {
    let inputs = gather_inputs(db, pattern)?;
    Ok(estimate_with(&inputs, pattern, plan, c))
}

/// Choose the start side and predicate placement.
///
/// A one-sided predicate (or restriction) makes its end the start; with
/// both ends constrained the end with fewer estimated candidates wins.
/// The start predicate is always pushed. Elsewhere equalities are pushed,
/// pure inequalities deferred, and ranges placed by estimated cost.
pub fn plan_pattern(db: &Database, pattern: &Pattern, opts: &PlanOptions) -> Result<MatchPlan> {
    opts.costs.validate()?;
    let inputs = gather_inputs(db, pattern)?;
    let all: BTreeSet<Element> = pattern.predicates.keys().copied().collect();
    let mut plan = MatchPlan {
        order: TraversalOrder::Forward,
        pushed: BTreeSet::new(),
        deferred: BTreeSet::new(),
        pruned: BTreeSet::new(),
        elide_membership: opts.elide_membership,
        restricted: opts.restricted.clone(),
        estimate: Estimate::default(),
    };
    if !opts.pushdown {
        plan.deferred = all;
        plan.estimate = estimate_with(&inputs, pattern, &plan, &opts.costs);
        return Ok(plan);
    }
    let last = pattern.vertices.len() - 1;
    let constrained = |i: usize| {
        pattern.predicates.contains_key(&Element::Vertex(i)) || opts.restricted.contains_key(&Element::Vertex(i))
    };
    let candidates = |i: usize| {
        let info = &inputs.vertices[i];
        let mut n = opts.restricted.get(&Element::Vertex(i)).copied().unwrap_or(info.size);
        if pattern.predicates.contains_key(&Element::Vertex(i)) {
            n *= info.selectivity;
        }
        n
    };
    plan.order = match (constrained(0), constrained(last)) {
        (false, true) if last > 0 => TraversalOrder::Reverse,
        (true, true) if last > 0 && candidates(last) < candidates(0) => TraversalOrder::Reverse,
        _ => TraversalOrder::Forward,
    };
    let start = Element::Vertex(plan.start_vertex(pattern));
    plan.deferred = all.clone();
    if plan.deferred.remove(&start) {
        plan.pushed.insert(start);
    }
    for e in pattern.elements() {
        if e == start || !all.contains(&e) {
            continue;
        }
        let class = match e {
            Element::Vertex(i) => inputs.vertices[i].class,
            Element::Edge(i) => inputs.edges[i].class,
        };
        match class {
            Some(PredicateClass::Equality) => {
                plan.deferred.remove(&e);
                plan.pushed.insert(e);
            }
            Some(PredicateClass::Inequality) | None => {}
            Some(PredicateClass::Range) => {
                let keep = estimate_with(&inputs, pattern, &plan, &opts.costs).cost;
                let mut trial = plan.clone();
                trial.deferred.remove(&e);
                trial.pushed.insert(e);
                if estimate_with(&inputs, pattern, &trial, &opts.costs).cost < keep {
                    plan = trial;
                }
            }
        }
    }
    plan.estimate = estimate_with(&inputs, pattern, &plan, &opts.costs);
    Ok(plan)
}

/// One match: nid per pattern vertex, records per element (absent when
/// the element's fetch step was pruned).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRow<'a> {
    pub nids: Vec<Nid>,
    pub vertices: Vec<Option<RecordRef<'a>>>,
    pub edges: Vec<Option<RecordRef<'a>>>,
}

impl<'a> MatchRow<'a> {
    pub fn record(&self, e: Element) -> Option<RecordRef<'a>> {
        match e {
            Element::Vertex(i) => self.vertices[i],
            Element::Edge(i) => self.edges[i],
        }
    }
}

/// Materialized result of a match: one row per pattern embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphRelation<'a> {
    pub rows: Vec<MatchRow<'a>>,
}

/// Per-step emission counts of one execution, in step order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchStats {
    pub steps: Vec<(Step, u64)>,
}

enum Membership {
    Any,
    Table(Oid),
    Set(HashSet<Nid>),
}

impl Membership {
    fn admits(&self, nid: Nid, topo: &Topology) -> bool {
        match self {
            Membership::Any => true,
            Membership::Table(oid) => topo.mappers.vertex_map[nid as usize].is_some_and(|s| s.oid == *oid),
            Membership::Set(s) => s.contains(&nid),
        }
    }
}

struct HopSteps {
    nid: usize,
    edge: Option<usize>,
    vertex: Option<usize>,
}

struct Matcher<'a, 'p> {
    db: &'a Database,
    topo: &'a Topology,
    hops: Vec<Hop>,
    hop_steps: Vec<HopSteps>,
    vmember: Vec<Membership>,
    emember: Vec<Option<HashSet<Tid>>>,
    deferred: Vec<(Element, Predicate)>,
    counts: Vec<u64>,
    out: Vec<MatchRow<'a>>,
    _pattern: &'p Pattern,
}

impl<'a> Matcher<'a, '_> {
    fn extend(&mut self, k: usize, row: &mut MatchRow<'a>) -> Result<()> {
        if k == self.hops.len() {
            let keep = self.deferred.iter().all(|(e, p)| {
                row.record(*e).is_some_and(|r| p.eval(r.values, None))
            });
            if keep {
                self.out.push(row.clone());
            }
            return Ok(());
        }
        let (from, to, edge, adjacency) = {
            let h = &self.hops[k];
            (h.from, h.to, h.edge, h.adjacency)
        };
        let cur = row.nids[from];
        let topo = self.topo;
        for &next in topo.neighbors(cur, adjacency) {
            if !self.vmember[to].admits(next, topo) {
                continue;
            }
            self.counts[self.hop_steps[k].nid] += 1;
            let stored = match adjacency {
                Direction::Forward => (cur, next),
                Direction::Reverse => (next, cur),
            };
            if let Some(step) = self.hop_steps[k].edge {
                let (oid, tid) = topo.mappers.edge_of(stored.0, stored.1)?;
                let rec = self.db.collection(oid)?.fetch(tid)?;
                if self.emember[edge].as_ref().is_some_and(|s| !s.contains(&tid)) {
                    continue;
                }
                self.counts[step] += 1;
                row.edges[edge] = Some(rec);
            } else if let Some(set) = &self.emember[edge] {
                let (_, tid) = topo.mappers.edge_of(stored.0, stored.1)?;
                if !set.contains(&tid) {
                    continue;
                }
            }
            if let Some(step) = self.hop_steps[k].vertex {
                let (oid, tid) = topo.mappers.vertex_of(next)?;
                row.vertices[to] = Some(self.db.collection(oid)?.fetch(tid)?);
                self.counts[step] += 1;
            }
            row.nids[to] = next;
            self.extend(k + 1, row)?;
        }
        Ok(())
    }
}

fn scan_nids<'a>(
    db: &'a Database,
    topo: &Topology,
    oid: Oid,
    pred: &Predicate,
) -> Result<Vec<(Nid, RecordRef<'a>)>> {
    let schema = db.schema(oid)?;
    db.collection(oid)?
        .scan(Some(pred))
        .map(|r| Ok((topo.mappers.nid_of(vertex_key_of(schema, r.values)?)?, r)))
        .collect()
}

/// Run an annotated pattern. Restricted vertices only match nids in their
/// set. Rows come out in depth-first order seeded by start-record tid.
pub fn match_pattern<'a>(
    db: &'a Database,
    pattern: &Pattern,
    plan: &MatchPlan,
    restrictions: &Restrictions,
) -> Result<(GraphRelation<'a>, MatchStats)> {
    let topo = db.topology(&pattern.graph)?;
    let def = db.graph_def(&pattern.graph)?;
    for v in &pattern.vertices {
        let schema = db.schema(v.table)?;
        if schema.kind != CollectionKind::VertexTable || !def.vertex_oids.contains(&v.table) {
            return Err(Error::schema(format!("pattern vertex {} is not a vertex of graph {}", v.var, def.name)));
        }
    }
    for e in restrictions.keys() {
        if plan.pruned.contains(e) {
            return Err(Error::Contract(format!("restricted element {} cannot be pruned", pattern.var(*e))));
        }
    }
    for e in pattern.predicates.keys() {
        if plan.pushed.contains(e) == plan.deferred.contains(e) {
            return Err(Error::Contract(format!(
                "predicate on {} must be either pushed or deferred",
                pattern.var(*e)
            )));
        }
        if plan.pruned.contains(e) {
            return Err(Error::Contract(format!("{} has a predicate and cannot be pruned", pattern.var(*e))));
        }
    }

    let steps = plan.steps(pattern);
    let start = plan.start_vertex(pattern);
    let start_el = Element::Vertex(start);
    let mut cursor = 0;
    let start_step = match steps.first() {
        Some(s) if s.element == start_el => {
            cursor = 1;
            Some(0)
        }
        _ => None,
    };
    let hop_list = hops(pattern, plan.order);
    let mut hop_steps = Vec::with_capacity(hop_list.len());
    for hop in &hop_list {
        let nid = cursor;
        cursor += 1;
        let mut take = |case: TraversalCase, el: Element| {
            if steps.get(cursor).is_some_and(|s| s.case == case && s.element == el) {
                cursor += 1;
                Some(cursor - 1)
            } else {
                None
            }
        };
        let edge = take(TraversalCase::NidToEdge, Element::Edge(hop.edge));
        let vertex = take(TraversalCase::NidToVertex, Element::Vertex(hop.to));
        hop_steps.push(HopSteps { nid, edge, vertex });
    }

    // Candidate sets for pushed predicates.
    let mut vmember = Vec::with_capacity(pattern.vertices.len());
    let mut start_candidates: Vec<(Nid, Option<RecordRef<'a>>)> = Vec::new();
    for (i, v) in pattern.vertices.iter().enumerate() {
        let el = Element::Vertex(i);
        let restriction = restrictions.get(&el);
        let scanned = if plan.pushed.contains(&el) {
            let pred = pattern.bound_predicate(db, el)?.expect("pushed element has a predicate");
            let mut hits = scan_nids(db, topo, v.table, &pred)?;
            if let Some(r) = restriction {
                hits.retain(|(n, _)| r.contains(n));
            }
            Some(hits)
        } else {
            None
        };
        if i == start {
            start_candidates = match (scanned, restriction) {
                (Some(hits), _) => hits.into_iter().map(|(n, r)| (n, Some(r))).collect(),
                (None, Some(r)) => {
                    let mut nids: Vec<(Tid, Nid)> = r
                        .iter()
                        .filter(|n| Membership::Table(v.table).admits(**n, topo))
                        .map(|&n| Ok((topo.mappers.vertex_of(n)?.1, n)))
                        .collect::<Result<_>>()?;
                    nids.sort_unstable();
                    nids.into_iter().map(|(_, n)| (n, None)).collect()
                }
                (None, None) => {
                    let mut nids: Vec<(Tid, Nid)> = topo
                        .mappers
                        .vertex_map
                        .iter()
                        .enumerate()
                        .filter_map(|(n, s)| s.filter(|s| s.oid == v.table).map(|s| (s.tid, n as Nid)))
                        .collect();
                    nids.sort_unstable();
                    nids.into_iter().map(|(_, n)| (n, None)).collect()
                }
            };
            vmember.push(Membership::Any);
            continue;
        }
        vmember.push(match (scanned, restriction) {
            (Some(hits), _) => Membership::Set(hits.into_iter().map(|(n, _)| n).collect()),
            (None, Some(r)) => Membership::Set(r.clone()),
            (None, None) if plan.elide_membership && def.vertex_oids.len() == 1 => Membership::Any,
            (None, None) => Membership::Table(v.table),
        });
    }
    let mut emember = Vec::with_capacity(pattern.edges.len());
    for i in 0..pattern.edges.len() {
        let el = Element::Edge(i);
        let mut member: Option<HashSet<Tid>> = if plan.pushed.contains(&el) {
            let pred = pattern.bound_predicate(db, el)?.expect("pushed element has a predicate");
            Some(db.collection(def.edge_oid)?.scan(Some(&pred)).map(|r| r.tid).collect())
        } else {
            None
        };
        if let Some(r) = restrictions.get(&el) {
            member = Some(match member {
                Some(m) => m.into_iter().filter(|t| r.contains(&t.0)).collect(),
                None => r.iter().map(|t| Tid(*t)).collect(),
            });
        }
        emember.push(member);
    }
    let mut deferred = Vec::new();
    for e in &plan.deferred {
        deferred.push((*e, pattern.bound_predicate(db, *e)?.expect("deferred element has a predicate")));
    }

    let mut m = Matcher {
        db,
        topo,
        hops: hop_list,
        hop_steps,
        vmember,
        emember,
        deferred,
        counts: vec![0; steps.len()],
        out: Vec::new(),
        _pattern: pattern,
    };
    let mut row = MatchRow {
        nids: vec![0; pattern.vertices.len()],
        vertices: vec![None; pattern.vertices.len()],
        edges: vec![None; pattern.edges.len()],
    };
    for (nid, rec) in start_candidates {
        row.nids[start] = nid;
        row.vertices[start] = match (rec, start_step) {
            (Some(r), Some(step)) => {
                m.counts[step] += 1;
                Some(r)
            }
            (None, Some(step)) => {
                let (oid, tid) = topo.mappers.vertex_of(nid)?;
                m.counts[step] += 1;
                Some(db.collection(oid)?.fetch(tid)?)
            }
            (_, None) => None,
        };
        m.extend(0, &mut row)?;
    }
    let stats = MatchStats {
        steps: steps.into_iter().zip(m.counts).collect(),
    };
    Ok((GraphRelation { rows: m.out }, stats))
}
