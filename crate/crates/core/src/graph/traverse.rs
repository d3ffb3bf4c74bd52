//! Hybrid traversal: one step between record sets and topology nid sets.

use std::collections::{HashSet, VecDeque};

use crate::cost::TraversalCase;
use crate::database::Database;
use crate::error::{Error, Result};
use crate::schema::{vertex_key_of, Oid, Tid};
use crate::storage::{Direction, Nid, RecordRef};

/// Operand of a traversal: vertex records, topology nids or edge records.
#[derive(Debug, Clone)]
pub enum OperandSet<'a> {
    Vertices(Vec<(Oid, RecordRef<'a>)>),
    Nids(Vec<Nid>),
    Edges(Vec<(Oid, RecordRef<'a>)>),
}

impl OperandSet<'_> {
    fn kind(&self) -> char {
        match self {
            OperandSet::Vertices(_) => 'V',
            OperandSet::Nids(_) => 'I',
            OperandSet::Edges(_) => 'E',
        }
    }

    fn record_index(&self) -> HashSet<(Oid, Tid)> {
        match self {
            OperandSet::Vertices(rs) | OperandSet::Edges(rs) => rs.iter().map(|(o, r)| (*o, r.tid)).collect(),
            OperandSet::Nids(_) => HashSet::new(),
        }
    }

    fn nid_index(&self) -> HashSet<Nid> {
        match self {
            OperandSet::Nids(ns) => ns.iter().copied().collect(),
            _ => HashSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Item<'a> {
    Vertex(Oid, RecordRef<'a>),
    Nid(Nid),
    Edge(Oid, RecordRef<'a>),
}

/// FIFO of traversal results; `emit` pops the oldest pair.
#[derive(Debug, Default)]
pub struct TraversalQueue<'a> {
    pairs: VecDeque<(Item<'a>, Item<'a>)>,
}

impl<'a> TraversalQueue<'a> {
    pub fn emit(&mut self) -> Option<(Item<'a>, Item<'a>)> {
        self.pairs.pop_front()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl<'a> Iterator for TraversalQueue<'a> {
    type Item = (Item<'a>, Item<'a>);

    fn next(&mut self) -> Option<Self::Item> {
        self.emit()
    }
}

/// Which case an operand pair selects, or a contract error.
pub fn traversal_case(o1: &OperandSet<'_>, o2: &OperandSet<'_>) -> Result<TraversalCase> {
    match (o1.kind(), o2.kind()) {
        ('V', 'I') => Ok(TraversalCase::VertexToNid),
        ('I', 'V') => Ok(TraversalCase::NidToVertex),
        ('I', 'I') => Ok(TraversalCase::NidToNid),
        ('I', 'E') => Ok(TraversalCase::NidToEdge),
        (a, b) => Err(Error::Contract(format!("no traversal from {a} to {b} operands"))),
    }
}

/// Traverse from `o1` to `o2` over `graph`, keeping only results that are
/// members of `o2`. Adjacency cases follow `direction`; edge records are
/// looked up in stored orientation either way.
pub fn hybrid_traverse<'a>(
    db: &'a Database,
    graph: &str,
    o1: &OperandSet<'a>,
    o2: &OperandSet<'a>,
    direction: Direction,
) -> Result<TraversalQueue<'a>> {
    let case = traversal_case(o1, o2)?;
    let topo = db.topology(graph)?;
    let mut out = TraversalQueue::default();
    match (case, o1) {
        (TraversalCase::VertexToNid, OperandSet::Vertices(records)) => {
            let members = o2.nid_index();
            for &(oid, rec) in records {
                let key = vertex_key_of(db.schema(oid)?, rec.values)?;
                let nid = topo.mappers.nid_of(key)?;
                if members.contains(&nid) {
                    out.pairs.push_back((Item::Vertex(oid, rec), Item::Nid(nid)));
                }
            }
        }
        (TraversalCase::NidToVertex, OperandSet::Nids(nids)) => {
            let members = o2.record_index();
            for &nid in nids {
                let (oid, tid) = topo.mappers.vertex_of(nid)?;
                if !members.contains(&(oid, tid)) {
                    continue;
                }
                let rec = db.collection(oid)?.fetch(tid)?;
                out.pairs.push_back((Item::Nid(nid), Item::Vertex(oid, rec)));
            }
        }
        (TraversalCase::NidToNid, OperandSet::Nids(nids)) => {
            let members = o2.nid_index();
            for &s in nids {
                for &t in topo.neighbors(s, direction) {
                    if members.contains(&t) {
                        out.pairs.push_back((Item::Nid(s), Item::Nid(t)));
                    }
                }
            }
        }
        (TraversalCase::NidToEdge, OperandSet::Nids(nids)) => {
            let members = o2.record_index();
            for &s in nids {
                for &t in topo.neighbors(s, direction) {
                    let stored = match direction {
                        Direction::Forward => (s, t),
                        Direction::Reverse => (t, s),
                    };
                    let (oid, tid) = topo.mappers.edge_of(stored.0, stored.1)?;
                    let rec = db.collection(oid)?.fetch(tid)?;
                    if members.contains(&(oid, tid)) {
                        out.pairs.push_back((Item::Nid(s), Item::Edge(oid, rec)));
                    }
                }
            }
        }
        _ => unreachable!("case derived from operand kinds"),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ColumnDef, ColumnType};
    use crate::value::Value;

    fn db() -> Database {
        let mut db = Database::in_memory();
        db.create_vertex_table("P", "P", vec![ColumnDef::new("name", ColumnType::Text)]).unwrap();
        db.create_edge_table("K", "knows", vec![]).unwrap();
        db.create_graph("G", &["P"], "K").unwrap();
        let p = db.oid_of("P").unwrap().0 as i64;
        let rows = (0..4).map(|i| vec![Value::Int(i), Value::from(format!("n{i}"))]).collect();
        db.insert_by_name("P", rows).unwrap();
        let e = |s: i64, t: i64| vec![Value::Int(p), Value::Int(s), Value::Int(p), Value::Int(t)];
        db.insert_by_name("K", vec![e(0, 1), e(0, 2), e(1, 2), e(2, 2)]).unwrap();
        db
    }

    #[test]
    fn nid_to_nid_respects_membership_and_direction() {
        let db = db();
        let all = OperandSet::Nids(vec![0, 1, 2, 3]);
        let pairs: Vec<_> = hybrid_traverse(&db, "G", &OperandSet::Nids(vec![0]), &all, Direction::Forward)
            .unwrap()
            .collect();
        assert_eq!(pairs, vec![(Item::Nid(0), Item::Nid(1)), (Item::Nid(0), Item::Nid(2))]);
        let rev: Vec<_> = hybrid_traverse(&db, "G", &OperandSet::Nids(vec![2]), &OperandSet::Nids(vec![0, 2]), Direction::Reverse)
            .unwrap()
            .collect();
        assert_eq!(rev, vec![(Item::Nid(2), Item::Nid(0)), (Item::Nid(2), Item::Nid(2))]);
    }

    #[test]
    fn record_cases_fetch_by_tid() {
        let db = db();
        let p = db.oid_of("P").unwrap();
        let coll = db.collection(p).unwrap();
        let v: Vec<_> = coll.iter_live().map(|r| (p, r)).collect();
        let nids: Vec<_> = hybrid_traverse(&db, "G", &OperandSet::Vertices(v.clone()), &OperandSet::Nids(vec![1, 3]), Direction::Forward)
            .unwrap()
            .map(|(_, n)| n)
            .collect();
        assert_eq!(nids, vec![Item::Nid(1), Item::Nid(3)]);

        db.reset_counters();
        let back: Vec<_> = hybrid_traverse(&db, "G", &OperandSet::Nids(vec![3, 1]), &OperandSet::Vertices(v), Direction::Forward)
            .unwrap()
            .collect();
        assert_eq!(back.len(), 2);
        assert_eq!(db.access_stats().tid_fetches, 2);
        assert!(matches!(back[0].1, Item::Vertex(_, r) if r.values[1] == Value::from("n3")));

        let k = db.oid_of("K").unwrap();
        let edges: Vec<_> = db.collection(k).unwrap().iter_live().map(|r| (k, r)).collect();
        let out: Vec<_> = hybrid_traverse(&db, "G", &OperandSet::Nids(vec![2]), &OperandSet::Edges(edges), Direction::Reverse)
            .unwrap()
            .collect();
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn unsupported_operand_pair_is_a_contract_error() {
        let db = db();
        let err = hybrid_traverse(&db, "G", &OperandSet::Edges(vec![]), &OperandSet::Nids(vec![]), Direction::Forward)
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }
}
