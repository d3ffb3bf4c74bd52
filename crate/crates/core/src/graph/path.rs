//! Unweighted shortest paths over forward adjacency.

use std::collections::{HashMap, VecDeque};

use crate::database::Database;
use crate::error::Result;
use crate::schema::VertexKey;
use crate::storage::{Direction, Nid};

/// Shortest path from `src` to `dst` as vertex keys, or `None` when `dst`
/// is unreachable. Neighbors are expanded smallest nid first, so ties go to
/// the lexicographically smallest nid sequence.
pub fn shortest_path(db: &Database, graph: &str, src: VertexKey, dst: VertexKey) -> Result<Option<Vec<VertexKey>>> {
    let topo = db.topology(graph)?;
    let s = topo.mappers.nid_of(src)?;
    let t = topo.mappers.nid_of(dst)?;
    let mut parent: HashMap<Nid, Nid> = HashMap::from([(s, s)]);
    let mut queue = VecDeque::from([s]);
    let mut buf = Vec::new();
    while let Some(cur) = queue.pop_front() {
        if cur == t {
            break;
        }
        buf.clear();
        buf.extend_from_slice(topo.neighbors(cur, Direction::Forward));
        buf.sort_unstable();
        for &n in &buf {
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(n) {
                e.insert(cur);
                queue.push_back(n);
            }
        }
    }
    if !parent.contains_key(&t) {
        return Ok(None);
    }
    let mut nids = vec![t];
    while *nids.last().unwrap() != s {
        nids.push(parent[nids.last().unwrap()]);
    }
    nids.reverse();
    let keys = nids
        .into_iter()
        .map(|n| {
            let slot = topo.mappers.vertex_map[n as usize].expect("path visits live nids");
            VertexKey { oid: slot.oid, vid: slot.vid }
        })
        .collect();
    Ok(Some(keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnDef, ColumnType};
    use crate::value::Value;

    #[test]
    fn bfs_prefers_smaller_nids() {
        let mut db = Database::in_memory();
        db.create_vertex_table("P", "P", vec![ColumnDef::new("x", ColumnType::Int)]).unwrap();
        db.create_edge_table("K", "k", vec![]).unwrap();
        db.create_graph("G", &["P"], "K").unwrap();
        let p = db.oid_of("P").unwrap().0;
        db.insert_by_name("P", (0..6).map(|i| vec![Value::Int(i), Value::Int(i)]).collect()).unwrap();
        let e = |s: i64, t: i64| vec![Value::Int(p as i64), Value::Int(s), Value::Int(p as i64), Value::Int(t)];
        // 0 -> 2 -> 4 and 0 -> 1 -> 4; 1 was inserted later but is smaller.
        db.insert_by_name("K", vec![e(0, 2), e(2, 4), e(0, 1), e(1, 4), e(4, 5)]).unwrap();
        let k = |v| VertexKey::new(p, v);
        let path = shortest_path(&db, "G", k(0), k(5)).unwrap().unwrap();
        assert_eq!(path, vec![k(0), k(1), k(4), k(5)]);
        assert_eq!(shortest_path(&db, "G", k(5), k(0)).unwrap(), None);
        assert_eq!(shortest_path(&db, "G", k(3), k(3)).unwrap(), Some(vec![k(3)]));
    }
}
