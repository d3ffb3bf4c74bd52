//! In-memory cache of materialized matrices keyed by query fingerprint.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use crate::database::Database;
use crate::error::Result;
use crate::query::logical::Gcdi;
use crate::schema::Oid;

/// Hex SHA-256 of the canonical query text plus `extra` (e.g. the column
/// selection used to build the matrix).
pub fn fingerprint(db: &Database, query: &Gcdi, extra: &str) -> Result<String> {
    let mut h = Sha256::new();
    h.update(query.canonical_text(db)?.as_bytes());
    h.update([0]);
    h.update(extra.as_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// Collections a query reads: its relations and its graph's tables.
pub fn source_collections(db: &Database, query: &Gcdi) -> Result<Vec<Oid>> {
    let mut out: Vec<Oid> = query.relations.iter().map(|r| r.oid).collect();
    if let Some(g) = &query.graph {
        let def = db.graph_def(&g.name)?;
        out.extend(def.vertex_oids.iter().copied());
        out.push(def.edge_oid);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Current version counter of each collection.
pub fn versions_of(db: &Database, oids: &[Oid]) -> Result<Vec<(Oid, u64)>> {
    oids.iter().map(|&o| Ok((o, db.version(o)?))).collect()
}

struct Entry {
    matrix: Arc<super::Matrix>,
    versions: Vec<(Oid, u64)>,
    last_use: u64,
}

#[derive(Default)]
struct Inner {
    entries: HashMap<String, Entry>,
    bytes: usize,
    clock: u64,
    hits: u64,
    misses: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BufferStats {
    pub entries: usize,
    pub bytes: usize,
    pub hits: u64,
    pub misses: u64,
}

/// Fingerprint-keyed matrices under a byte budget, least recently used
/// evicted first. An entry only hits while its source versions are
/// current.
pub struct InterBuffer {
    budget: usize,
    inner: Mutex<Inner>,
}

impl InterBuffer {
    pub fn new(budget_bytes: usize) -> Self {
        InterBuffer {
            budget: budget_bytes,
            inner: Mutex::new(Inner::default()),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn lookup(&self, db: &Database, fingerprint: &str) -> Option<Arc<super::Matrix>> {
        let mut inner = self.inner.lock().unwrap();
        inner.clock += 1;
        let clock = inner.clock;
        let fresh = inner.entries.get(fingerprint).map(|e| {
            e.versions
                .iter()
                .all(|&(oid, v)| db.version(oid).is_ok_and(|cur| cur == v))
        });
        match fresh {
            Some(true) => {
                inner.hits += 1;
                let e = inner.entries.get_mut(fingerprint).unwrap();
                e.last_use = clock;
                Some(e.matrix.clone())
            }
            Some(false) => {
                let e = inner.entries.remove(fingerprint).unwrap();
                inner.bytes -= e.matrix.size_bytes();
                inner.misses += 1;
                None
            }
            None => {
                inner.misses += 1;
                None
            }
        }
    }

    /// Store `matrix` built from sources at `versions`. A matrix larger
    /// than the whole budget is not kept.
    pub fn put(&self, fingerprint: String, matrix: Arc<super::Matrix>, versions: Vec<(Oid, u64)>) {
        let size = matrix.size_bytes();
        let mut inner = self.inner.lock().unwrap();
        if let Some(old) = inner.entries.remove(&fingerprint) {
            inner.bytes -= old.matrix.size_bytes();
        }
        if size > self.budget {
            return;
        }
        while inner.bytes + size > self.budget {
            let victim = inner
                .entries
                .iter()
                .min_by_key(|(_, e)| e.last_use)
                .map(|(k, _)| k.clone())
                .expect("over budget implies an entry");
            let e = inner.entries.remove(&victim).unwrap();
            inner.bytes -= e.matrix.size_bytes();
        }
        inner.clock += 1;
        let last_use = inner.clock;
        inner.bytes += size;
        inner.entries.insert(
            fingerprint,
            Entry {
                matrix,
                versions,
                last_use,
            },
        );
    }

    pub fn contains(&self, fingerprint: &str) -> bool {
        self.inner.lock().unwrap().entries.contains_key(fingerprint)
    }

    pub fn stats(&self) -> BufferStats {
        let inner = self.inner.lock().unwrap();
        BufferStats {
            entries: inner.entries.len(),
            bytes: inner.bytes,
            hits: inner.hits,
            misses: inner.misses,
        }
    }

    pub fn clear(&self) {
        let mut inner = self.inner.lock().unwrap();
        inner.entries.clear();
        inner.bytes = 0;
    }
}

impl Default for InterBuffer {
    fn default() -> Self {
        InterBuffer::new(256 << 20)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::Matrix;
    use crate::fixtures::yogurt;
    use crate::query::{build_logical_plan, parse_query};

    fn plan(db: &Database, text: &str) -> Gcdi {
        build_logical_plan(&parse_query(text).unwrap(), db).unwrap()
    }

    #[test]
    fn hit_invalidate_and_whitespace() {
        let mut db = Database::in_memory();
        yogurt(&mut db).unwrap();
        let buf = InterBuffer::default();
        let a = plan(&db, "SELECT C.age FROM Customers C WHERE C.loyal = 1 AND C.id > 0");
        let b = plan(&db, "SELECT   X.age\nFROM Customers X\nWHERE X.id > 0 AND X.loyal = 1");
        let fa = fingerprint(&db, &a, "age").unwrap();
        assert_eq!(fa, fingerprint(&db, &b, "age").unwrap());
        let sources = source_collections(&db, &a).unwrap();
        buf.put(fa.clone(), Arc::new(Matrix::identity(2)), versions_of(&db, &sources).unwrap());
        assert!(buf.lookup(&db, &fa).is_some());
        db.insert_by_name(
            "Customers",
            vec![vec![5.into(), "Eve".into(), crate::value::Value::Float(1.0), 1.into()]],
        )
        .unwrap();
        assert!(buf.lookup(&db, &fa).is_none());
        assert_eq!(buf.stats().hits, 1);
    }

    #[test]
    fn evicts_least_recently_used() {
        let db = Database::in_memory();
        let buf = InterBuffer::new(3 * 8 * 4);
        for k in ["a", "b", "c"] {
            buf.put(k.into(), Arc::new(Matrix::identity(2)), vec![]);
        }
        assert_eq!(buf.stats().entries, 3);
        assert!(buf.lookup(&db, "a").is_some());
        buf.put("d".into(), Arc::new(Matrix::identity(2)), vec![]);
        assert!(buf.contains("a") && buf.contains("c") && buf.contains("d"));
        assert!(!buf.contains("b"));
        assert!(buf.stats().bytes <= buf.budget());
        buf.put("big".into(), Arc::new(Matrix::identity(10)), vec![]);
        assert!(!buf.contains("big"));
    }
}
