//! Pattern matching as a chain of relational hash joins over the vertex
//! and edge tables, without touching adjacency. Used as the join-emulation
//! baseline; it reads every table the pattern mentions in full.

use std::collections::HashMap;

use crate::database::Database;
use crate::error::Result;
use crate::graph::pattern::{EdgeOrientation, Element, GraphRelation, MatchRow, Pattern};
use crate::predicate::{Layout, Predicate};
use crate::schema::{edge_key_of, VertexKey};
use crate::storage::RecordRef;

fn scan_filtered<'a>(db: &'a Database, pattern: &Pattern, e: Element) -> Result<Vec<RecordRef<'a>>> {
    let oid = pattern.table(db, e)?;
    let pred = match pattern.predicates.get(&e) {
        Some(expr) => Some(Predicate::bind(expr, &Layout::of_schema(pattern.var(e), db.schema(oid)?), None)?),
        None => None,
    };
    Ok(db.collection(oid)?.scan(pred.as_ref()).collect())
}

/// Every embedding of `pattern` with all element predicates applied; rows
/// carry every record. Row order is not meaningful.
pub fn match_by_joins<'a>(db: &'a Database, pattern: &Pattern) -> Result<GraphRelation<'a>> {
    let topo = db.topology(&pattern.graph)?;
    let edge_oid = db.graph_def(&pattern.graph)?.edge_oid;
    let edge_schema = db.schema(edge_oid)?;

    let mut vertex_tables: Vec<HashMap<u64, RecordRef<'a>>> = Vec::new();
    for i in 0..pattern.vertices.len() {
        let rows = scan_filtered(db, pattern, Element::Vertex(i))?;
        let mut by_vid = HashMap::with_capacity(rows.len());
        for r in rows {
            let vid = r.values[0].as_i64().unwrap_or_default() as u64;
            by_vid.insert(vid, r);
        }
        vertex_tables.push(by_vid);
    }

    let start = &vertex_tables[0];
    let mut firsts: Vec<&RecordRef<'a>> = start.values().collect();
    firsts.sort_by_key(|r| r.tid);
    let key0 = |vid: u64| VertexKey { oid: pattern.vertices[0].table, vid };
    let mut rows: Vec<MatchRow<'a>> = firsts
        .into_iter()
        .map(|r| {
            let vid = r.values[0].as_i64().unwrap_or_default() as u64;
            Ok(MatchRow {
                nids: {
                    let mut n = vec![0; pattern.vertices.len()];
                    n[0] = topo.mappers.nid_of(key0(vid))?;
                    n
                },
                vertices: {
                    let mut v = vec![None; pattern.vertices.len()];
                    v[0] = Some(*r);
                    v
                },
                edges: vec![None; pattern.edges.len()],
            })
        })
        .collect::<Result<_>>()?;

    for (i, edge) in pattern.edges.iter().enumerate() {
        let edges = scan_filtered(db, pattern, Element::Edge(i))?;
        let (near_table, far_table) = (pattern.vertices[i].table, pattern.vertices[i + 1].table);
        let mut by_near: HashMap<u64, Vec<(u64, RecordRef<'a>)>> = HashMap::new();
        for r in edges {
            let key = edge_key_of(edge_schema, r.values)?;
            let (near, far) = match edge.orientation {
                EdgeOrientation::Out => (key.source, key.target),
                EdgeOrientation::In => (key.target, key.source),
            };
            if near.oid == near_table && far.oid == far_table {
                by_near.entry(near.vid).or_default().push((far.vid, r));
            }
        }
        let far_rows = &vertex_tables[i + 1];
        let mut next = Vec::new();
        for row in rows {
            let near_vid = row.vertices[i].expect("joined vertex").values[0].as_i64().unwrap_or_default() as u64;
            for (far_vid, e) in by_near.get(&near_vid).map(Vec::as_slice).unwrap_or(&[]) {
                if let Some(far) = far_rows.get(far_vid) {
                    let mut r = row.clone();
                    r.edges[i] = Some(*e);
                    r.vertices[i + 1] = Some(*far);
                    r.nids[i + 1] = topo.mappers.nid_of(VertexKey {
                        oid: far_table,
                        vid: *far_vid,
                    })?;
                    next.push(r);
                }
            }
        }
        rows = next;
    }
    Ok(GraphRelation { rows })
}
