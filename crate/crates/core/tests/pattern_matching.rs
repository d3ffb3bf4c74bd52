use std::collections::BTreeMap;

use gredo_core::database::Database;
use gredo_core::fixtures::{random_graph, rng, GraphShape};
use gredo_core::graph::{
    match_by_joins, match_pattern, plan_pattern, EdgeOrientation, Element, GraphRelation, MatchPlan, Pattern,
    PatternEdge, PatternVertex, PlanOptions, Restrictions, TraversalOrder,
};
use gredo_core::predicate::{ColumnRef, CompareOp, Expr, Layout, Predicate, Term};
use gredo_core::schema::{edge_key_of, vertex_key_of, Tid, VertexKey};
use gredo_core::storage::RecordRef;
use gredo_core::value::Value;
use rand::Rng;

type Embedding = (Vec<VertexKey>, Vec<Tid>);

fn canonical(db: &Database, pattern: &Pattern, rel: &GraphRelation<'_>) -> Vec<Embedding> {
    let topo = db.topology(&pattern.graph).unwrap();
    let mut out: Vec<Embedding> = rel
        .rows
        .iter()
        .map(|row| {
            let keys = row
                .nids
                .iter()
                .map(|n| {
                    let s = topo.mappers.vertex_map[*n as usize].unwrap();
                    VertexKey { oid: s.oid, vid: s.vid }
                })
                .collect();
            let edges = (0..pattern.edges.len())
                .map(|i| {
                    let (a, b) = (row.nids[i], row.nids[i + 1]);
                    let stored = match pattern.edges[i].orientation {
                        EdgeOrientation::Out => (a, b),
                        EdgeOrientation::In => (b, a),
                    };
                    topo.mappers.edge_of(stored.0, stored.1).unwrap().1
                })
                .collect();
            (keys, edges)
        })
        .collect();
    out.sort();
    out
}

/// Enumerate embeddings straight from the stored records.
fn oracle(db: &Database, pattern: &Pattern) -> Vec<Embedding> {
    let bind = |e: Element| {
        pattern.predicates.get(&e).map(|expr| {
            let oid = pattern.table(db, e).unwrap();
            Predicate::bind(expr, &Layout::of_schema(pattern.var(e), db.schema(oid).unwrap()), None).unwrap()
        })
    };
    let passes = |e: Element, values: &[Value]| bind(e).is_none_or(|p| p.eval(values, None));
    let edge_oid = db.graph_def(&pattern.graph).unwrap().edge_oid;
    let edge_schema = db.schema(edge_oid).unwrap();
    let edges: Vec<(RecordRef<'_>, VertexKey, VertexKey)> = db
        .collection(edge_oid)
        .unwrap()
        .iter_live()
        .map(|r| {
            let k = edge_key_of(edge_schema, r.values).unwrap();
            (r, k.source, k.target)
        })
        .collect();
    let mut vertices: BTreeMap<VertexKey, RecordRef<'_>> = BTreeMap::new();
    for v in &pattern.vertices {
        let schema = db.schema(v.table).unwrap();
        for r in db.collection(v.table).unwrap().iter_live() {
            vertices.insert(vertex_key_of(schema, r.values).unwrap(), r);
        }
    }
    let mut partial: Vec<Embedding> = vertices
        .iter()
        .filter(|(k, r)| k.oid == pattern.vertices[0].table && passes(Element::Vertex(0), r.values))
        .map(|(k, _)| (vec![*k], vec![]))
        .collect();
    for (i, pe) in pattern.edges.iter().enumerate() {
        let mut next = Vec::new();
        for (keys, tids) in &partial {
            let near = *keys.last().unwrap();
            for (rec, s, t) in &edges {
                let (a, b) = match pe.orientation {
                    EdgeOrientation::Out => (*s, *t),
                    EdgeOrientation::In => (*t, *s),
                };
                if a != near || b.oid != pattern.vertices[i + 1].table || !passes(Element::Edge(i), rec.values) {
                    continue;
                }
                let Some(far) = vertices.get(&b) else { continue };
                if !passes(Element::Vertex(i + 1), far.values) {
                    continue;
                }
                let mut k = keys.clone();
                k.push(b);
                let mut t = tids.clone();
                t.push(rec.tid);
                next.push((k, t));
            }
        }
        partial = next;
    }
    partial.sort();
    partial
}

fn random_predicate(r: &mut impl Rng, var: &str, is_edge: bool) -> Option<Expr> {
    if r.gen_bool(0.45) {
        return None;
    }
    let col = |c: &str| Term::Column(ColumnRef::qualified(var, c));
    let one = |r: &mut dyn rand::RngCore| -> Expr {
        if is_edge {
            let op = [CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Ge][r.gen_range(0..4)];
            return Expr::compare(op, col("w"), Term::literal(Value::Int(r.gen_range(0..10))));
        }
        match r.gen_range(0..5) {
            0 => Expr::compare(CompareOp::Eq, col("x"), Term::literal(Value::Int(r.gen_range(0..6)))),
            1 => Expr::compare(CompareOp::Ne, col("x"), Term::literal(Value::Int(r.gen_range(0..6)))),
            2 => Expr::compare(CompareOp::Lt, col("x"), Term::literal(Value::Int(r.gen_range(0..6)))),
            3 => Expr::compare(
                CompareOp::Eq,
                col("tag"),
                Term::literal(Value::from(["red", "green", "blue"][r.gen_range(0..3)])),
            ),
            _ => Expr::compare(CompareOp::Gt, col("score"), Term::literal(Value::Float(r.gen_range(0.0..10.0)))),
        }
    };
    let first = one(r);
    Some(if r.gen_bool(0.25) { Expr::and_all([first, one(r)]) } else { first })
}

fn random_pattern(db: &Database, graph: &str, r: &mut impl Rng) -> Pattern {
    let def = db.graph_def(graph).unwrap();
    let n = r.gen_range(1..=4);
    let vertices = (0..n)
        .map(|i| PatternVertex {
            var: format!("v{i}"),
            table: def.vertex_oids[r.gen_range(0..def.vertex_oids.len())],
        })
        .collect();
    let edges = (0..n - 1)
        .map(|i| PatternEdge {
            var: format!("e{i}"),
            orientation: if r.gen_bool(0.7) { EdgeOrientation::Out } else { EdgeOrientation::In },
        })
        .collect();
    let mut p = Pattern::new(graph, vertices, edges).unwrap();
    for e in p.elements() {
        if let Some(expr) = random_predicate(r, p.var(e), matches!(e, Element::Edge(_))) {
            p.add_predicate(e, expr);
        }
    }
    p
}

fn run(db: &Database, p: &Pattern, plan: &MatchPlan) -> Vec<Embedding> {
    let (rel, _) = match_pattern(db, p, plan, &Restrictions::new()).unwrap();
    canonical(db, p, &rel)
}

#[test]
fn all_plan_variants_agree_with_enumeration() {
    let mut r = rng(11);
    for g in 0..12 {
        let mut db = Database::in_memory();
        let shape = GraphShape {
            vertices: r.gen_range(3..15),
            edges: r.gen_range(0..60),
            vertex_tables: r.gen_range(1..=2),
            value_range: 6,
        };
        random_graph(&mut db, "g", shape, 100 + g).unwrap();
        for _ in 0..8 {
            let p = random_pattern(&db, "g", &mut r);
            let expected = oracle(&db, &p);
            let plan = plan_pattern(&db, &p, &PlanOptions::default()).unwrap();
            assert_eq!(run(&db, &p, &plan), expected, "planned {p}: {}", plan.describe(&p));

            let off = plan_pattern(&db, &p, &PlanOptions { pushdown: false, ..Default::default() }).unwrap();
            assert_eq!(off.order, TraversalOrder::Forward);
            assert_eq!(run(&db, &p, &off), expected, "pushdown off {p}");

            let no_elide = plan_pattern(&db, &p, &PlanOptions { elide_membership: false, ..Default::default() }).unwrap();
            assert_eq!(run(&db, &p, &no_elide), expected, "no elision {p}");

            let mut flipped = plan.clone();
            flipped.order = match plan.order {
                TraversalOrder::Forward => TraversalOrder::Reverse,
                TraversalOrder::Reverse => TraversalOrder::Forward,
            };
            // The new start predicate must be pushed or deferred; defer all.
            flipped.deferred.extend(flipped.pushed.iter().copied());
            flipped.pushed.clear();
            assert_eq!(run(&db, &p, &flipped), expected, "flipped {p}");

            let mut joined = canonical(&db, &p, &match_by_joins(&db, &p).unwrap());
            joined.sort();
            assert_eq!(joined, expected, "join emulation {p}");
        }
    }
}

#[test]
fn pruning_drops_exactly_the_pruned_step_fetches() {
    let mut r = rng(12);
    let mut checked = 0;
    for g in 0..6 {
        let mut db = Database::in_memory();
        let shape = GraphShape {
            vertices: 12,
            edges: 50,
            vertex_tables: 1,
            value_range: 6,
        };
        random_graph(&mut db, "g", shape, 200 + g).unwrap();
        for _ in 0..10 {
            let p = random_pattern(&db, "g", &mut r);
            let plan = plan_pattern(&db, &p, &PlanOptions::default()).unwrap();
            let mut pruned = plan.clone();
            pruned.pruned = p
                .elements()
                .into_iter()
                .filter(|e| !p.predicates.contains_key(e) && r.gen_bool(0.6))
                .collect();
            if pruned.pruned.is_empty() {
                continue;
            }
            db.reset_counters();
            let (full_rel, full_stats) = match_pattern(&db, &p, &plan, &Restrictions::new()).unwrap();
            let full_fetches = db.access_stats().tid_fetches;
            db.reset_counters();
            let (pruned_rel, _) = match_pattern(&db, &p, &pruned, &Restrictions::new()).unwrap();
            let pruned_fetches = db.access_stats().tid_fetches;
            let expected_drop: u64 = full_stats
                .steps
                .iter()
                .filter(|(s, _)| pruned.pruned.contains(&s.element) && s.case != gredo_core::cost::TraversalCase::NidToNid)
                .map(|(_, n)| *n)
                .sum();
            assert_eq!(full_fetches - pruned_fetches, expected_drop, "{p}");
            assert_eq!(canonical(&db, &p, &full_rel), canonical(&db, &p, &pruned_rel));
            checked += 1;
        }
    }
    assert!(checked > 20);
}

#[test]
fn one_sided_predicates_pick_their_start_side() {
    let mut db = Database::in_memory();
    random_graph(
        &mut db,
        "g",
        GraphShape {
            vertices: 30,
            edges: 90,
            vertex_tables: 1,
            value_range: 6,
        },
        3,
    )
    .unwrap();
    let table = db.graph_def("g").unwrap().vertex_oids[0];
    let make = |pred_on: Option<usize>| {
        let mut p = Pattern::new(
            "g",
            vec![
                PatternVertex { var: "s".into(), table },
                PatternVertex { var: "t".into(), table },
            ],
            vec![PatternEdge {
                var: "e".into(),
                orientation: EdgeOrientation::Out,
            }],
        )
        .unwrap();
        if let Some(i) = pred_on {
            let var = if i == 0 { "s" } else { "t" };
            p.add_predicate(Element::Vertex(i), Expr::col_eq_lit(ColumnRef::qualified(var, "x"), Value::Int(2)));
        }
        p
    };
    let plan = plan_pattern(&db, &make(Some(1)), &PlanOptions::default()).unwrap();
    assert_eq!(plan.order, TraversalOrder::Reverse);
    assert!(plan.pushed.contains(&Element::Vertex(1)));
    let plan = plan_pattern(&db, &make(Some(0)), &PlanOptions::default()).unwrap();
    assert_eq!(plan.order, TraversalOrder::Forward);
    let plan = plan_pattern(&db, &make(None), &PlanOptions::default()).unwrap();
    assert_eq!(plan.order, TraversalOrder::Forward);
    assert!(plan.pushed.is_empty() && plan.deferred.is_empty());
}

#[test]
fn inequality_on_far_end_is_deferred_equality_pushed() {
    let mut db = Database::in_memory();
    random_graph(
        &mut db,
        "g",
        GraphShape {
            vertices: 30,
            edges: 90,
            vertex_tables: 1,
            value_range: 6,
        },
        4,
    )
    .unwrap();
    let table = db.graph_def("g").unwrap().vertex_oids[0];
    let mut p = Pattern::new(
        "g",
        vec![
            PatternVertex { var: "s".into(), table },
            PatternVertex { var: "t".into(), table },
        ],
        vec![PatternEdge {
            var: "e".into(),
            orientation: EdgeOrientation::Out,
        }],
    )
    .unwrap();
    p.add_predicate(Element::Vertex(0), Expr::col_eq_lit(ColumnRef::qualified("s", "x"), Value::Int(1)));
    p.add_predicate(
        Element::Vertex(1),
        Expr::compare(CompareOp::Ne, Term::Column(ColumnRef::qualified("t", "x")), Term::literal(Value::Int(3))),
    );
    let plan = plan_pattern(&db, &p, &PlanOptions::default()).unwrap();
    assert_eq!(plan.order, TraversalOrder::Forward);
    assert!(plan.deferred.contains(&Element::Vertex(1)));
    p.predicates.insert(Element::Vertex(1), Expr::col_eq_lit(ColumnRef::qualified("t", "tag"), "red"));
    let plan = plan_pattern(&db, &p, &PlanOptions::default()).unwrap();
    assert_eq!(plan.pushed.len(), 2);
}

#[test]
fn restrictions_limit_vertices() {
    let mut db = Database::in_memory();
    random_graph(
        &mut db,
        "g",
        GraphShape {
            vertices: 10,
            edges: 40,
            vertex_tables: 1,
            value_range: 6,
        },
        5,
    )
    .unwrap();
    let table = db.graph_def("g").unwrap().vertex_oids[0];
    let p = Pattern::new(
        "g",
        vec![
            PatternVertex { var: "s".into(), table },
            PatternVertex { var: "t".into(), table },
        ],
        vec![PatternEdge {
            var: "e".into(),
            orientation: EdgeOrientation::Out,
        }],
    )
    .unwrap();
    let allowed: std::collections::HashSet<u64> = [1, 4, 7].into();
    for side in [0usize, 1] {
        let mut restrictions = Restrictions::new();
        restrictions.insert(Element::Vertex(side), allowed.clone());
        let opts = PlanOptions {
            restricted: [(Element::Vertex(side), 3.0)].into(),
            ..Default::default()
        };
        let plan = plan_pattern(&db, &p, &opts).unwrap();
        let (rel, _) = match_pattern(&db, &p, &plan, &restrictions).unwrap();
        let (all, _) = match_pattern(&db, &p, &plan_pattern(&db, &p, &PlanOptions::default()).unwrap(), &Restrictions::new()).unwrap();
        let mut got: Vec<_> = rel.rows.iter().map(|r| r.nids.clone()).collect();
        let mut want: Vec<_> = all.rows.iter().filter(|r| allowed.contains(&r.nids[side])).map(|r| r.nids.clone()).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }
}
