//! The database handle: catalog, collections, key indexes, graph cache and
//! the dual-store mutation protocol.
//!
//! Reads take `&Database`, mutations `&mut Database`, so the reader-writer
//! contract is enforced by the borrow checker.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use once_cell::sync::OnceCell;

use crate::error::{Error, Result};
use crate::schema::{
    edge_key_of, vertex_key_of, Catalog, CollectionKind, ColumnDef, EdgeKey, GraphDef, Oid, Schema, Tid,
    VertexKey,
};
use crate::stats::{collect_stats, ColumnStats};
use crate::storage::topology::{deserialize, deserialize_nodes, serialize, serialize_nodes};
use crate::storage::{io, AccessStats, Collection, Direction, Nid, Topology};
use crate::value::Value;

const CATALOG_FILE: &str = "catalog.json";

/// Graph name → topology, deserialized or built on first use.
#[derive(Debug, Default)]
pub struct GraphCache {
    entries: HashMap<String, OnceCell<Topology>>,
}

impl GraphCache {
    fn key(name: &str) -> String {
        name.to_ascii_lowercase()
    }

    fn register(&mut self, name: &str) {
        self.entries.entry(Self::key(name)).or_default();
    }

    fn cell(&self, name: &str) -> Result<&OnceCell<Topology>> {
        self.entries
            .get(&Self::key(name))
            .ok_or_else(|| Error::not_found(format!("graph {name}")))
    }

    fn get_mut(&mut self, name: &str) -> Option<&mut Topology> {
        self.entries.get_mut(&Self::key(name)).and_then(OnceCell::get_mut)
    }

    pub fn is_loaded(&self, name: &str) -> bool {
        self.entries
            .get(&Self::key(name))
            .is_some_and(|c| c.get().is_some())
    }

    /// Drop the cached instance; the next use reloads it.
    pub fn evict(&mut self, name: &str) {
        if let Some(c) = self.entries.get_mut(&Self::key(name)) {
            c.take();
        }
    }
}

/// Result of the four-clause consistency audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub graph: String,
    pub vertices: usize,
    pub edges: u64,
    pub problems: Vec<String>,
}

impl AuditReport {
    pub fn is_consistent(&self) -> bool {
        self.problems.is_empty()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_consistent() {
            write!(
                f,
                "{}: consistent ({} vertices, {} edges)",
                self.graph, self.vertices, self.edges
            )
        } else {
            write!(f, "{}: INCONSISTENT ({} problems)", self.graph, self.problems.len())?;
            for p in &self.problems {
                write!(f, "\n  {p}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Default)]
pub struct Database {
    dir: Option<PathBuf>,
    catalog: Catalog,
    collections: BTreeMap<Oid, Collection>,
    vertex_index: HashMap<Oid, HashMap<u64, Tid>>,
    edge_index: HashMap<Oid, HashMap<EdgeKey, Tid>>,
    graphs: GraphCache,
    stats_cache: Mutex<HashMap<Oid, (u64, Arc<ColumnStats>)>>,
}

impl Database {
    pub fn in_memory() -> Self {
        Database::default()
    }

    /// Open or create a database directory, replaying collection logs.
    /// Topologies load lazily on first use.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let catalog_path = dir.join(CATALOG_FILE);
        let catalog = if catalog_path.exists() {
            Catalog::load(&catalog_path)?
        } else {
            Catalog::new()
        };
        let mut db = Database {
            dir: Some(dir),
            ..Database::default()
        };
        for schema in &catalog.schemas {
            let path = db.log_path(schema.oid).expect("directory set");
            let coll = Collection::open(schema.clone(), &path)?;
            db.collections.insert(schema.oid, coll);
            db.rebuild_key_index(schema.oid)?;
        }
        for g in &catalog.graphs {
            db.graphs.register(&g.name);
        }
        db.catalog = catalog;
        Ok(db)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn log_path(&self, oid: Oid) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("coll_{}.log", oid.0)))
    }

    fn topo_path(&self, graph: &str, suffix: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{graph}.{suffix}")))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn save_catalog(&self) -> Result<()> {
        if let Some(d) = &self.dir {
            self.catalog.save(&d.join(CATALOG_FILE))?;
        }
        Ok(())
    }

    // ---- DDL ------------------------------------------------------------

    fn add_collection(&mut self, schema: Schema) -> Result<Oid> {
        let oid = schema.oid;
        let mut probe = self.catalog.clone();
        probe.add_schema(schema.clone())?;
        let coll = match self.log_path(oid) {
            Some(p) => {
                if p.exists() {
                    fs::remove_file(&p)?;
                }
                Collection::open(schema, &p)?
            }
            None => Collection::new(schema),
        };
        self.catalog = probe;
        self.collections.insert(oid, coll);
        self.rebuild_key_index(oid)?;
        self.save_catalog()?;
        Ok(oid)
    }

    pub fn create_relation(&mut self, name: &str, columns: Vec<ColumnDef>) -> Result<Oid> {
        let oid = self.catalog.allocate_oid();
        self.add_collection(Schema::relation(name, oid, columns))
    }

    pub fn create_documents(&mut self, name: &str) -> Result<Oid> {
        let oid = self.catalog.allocate_oid();
        self.add_collection(Schema::documents(name, oid))
    }

    pub fn create_vertex_table(&mut self, name: &str, label: &str, props: Vec<ColumnDef>) -> Result<Oid> {
        let oid = self.catalog.allocate_oid();
        self.add_collection(Schema::vertex_table(name, oid, label, props))
    }

    pub fn create_edge_table(&mut self, name: &str, label: &str, props: Vec<ColumnDef>) -> Result<Oid> {
        let oid = self.catalog.allocate_oid();
        self.add_collection(Schema::edge_table(name, oid, label, props))
    }

    /// Define a graph over existing vertex tables and one edge table. The
    /// topology is built immediately, so dangling or parallel edges fail here.
    pub fn create_graph(&mut self, name: &str, vertex_tables: &[&str], edge_table: &str) -> Result<()> {
        let mut vertex_oids = Vec::new();
        for t in vertex_tables {
            let oid = self.oid_of(t)?;
            if vertex_oids.contains(&oid) {
                return Err(Error::schema(format!("vertex table {t} listed twice")));
            }
            vertex_oids.push(oid);
        }
        let edge_oid = self.oid_of(edge_table)?;
        if self.catalog.graph_with_edge_table(edge_oid).is_some() {
            return Err(Error::schema(format!("edge table {edge_table} already belongs to a graph")));
        }
        let edge_schema = self.catalog.schema(edge_oid)?;
        let edge_label = edge_schema.label.clone().unwrap_or_default();
        let def = GraphDef {
            name: name.to_string(),
            vertex_oids,
            edge_oid,
            edge_label,
        };
        let mut probe = self.catalog.clone();
        probe.add_graph(def.clone())?;
        let topo = self.build_topology(&def)?;
        self.catalog = probe;
        self.graphs.register(name);
        self.graphs.cell(name)?.set(topo).ok();
        self.save_catalog()?;
        self.write_topology(name)?;
        Ok(())
    }

    // ---- lookup ---------------------------------------------------------

    pub fn oid_of(&self, name: &str) -> Result<Oid> {
        self.catalog
            .schema_by_name(name)
            .map(|s| s.oid)
            .ok_or_else(|| Error::schema(format!("unknown collection {name}")))
    }

    pub fn schema(&self, oid: Oid) -> Result<&Schema> {
        self.catalog.schema(oid)
    }

    pub fn collection(&self, oid: Oid) -> Result<&Collection> {
        self.collections
            .get(&oid)
            .ok_or_else(|| Error::not_found(format!("collection oid {oid}")))
    }

    pub fn collection_by_name(&self, name: &str) -> Result<&Collection> {
        self.collection(self.oid_of(name)?)
    }

    fn collection_mut(&mut self, oid: Oid) -> Result<&mut Collection> {
        self.collections
            .get_mut(&oid)
            .ok_or_else(|| Error::not_found(format!("collection oid {oid}")))
    }

    pub fn graph_def(&self, name: &str) -> Result<&GraphDef> {
        self.catalog
            .graph(name)
            .ok_or_else(|| Error::schema(format!("unknown graph {name}")))
    }

    pub fn vertex_tid(&self, key: VertexKey) -> Result<Tid> {
        self.vertex_index
            .get(&key.oid)
            .and_then(|m| m.get(&key.vid))
            .copied()
            .ok_or_else(|| Error::not_found(format!("vertex {key}")))
    }

    pub fn edge_tid(&self, key: &EdgeKey) -> Result<Tid> {
        self.edge_index
            .get(&key.oid)
            .and_then(|m| m.get(key))
            .copied()
            .ok_or_else(|| Error::not_found(format!("edge {key}")))
    }

    /// Topology of `graph`, loaded into the cache on first use.
    pub fn topology(&self, graph: &str) -> Result<&Topology> {
        let def = self.graph_def(graph)?;
        self.graphs.cell(&def.name)?.get_or_try_init(|| self.load_topology(def))
    }

    pub fn graph_cache(&self) -> &GraphCache {
        &self.graphs
    }

    /// Drop a graph's cached topology (next use reloads it from disk or
    /// rebuilds it from records).
    pub fn evict_topology(&mut self, graph: &str) {
        self.graphs.evict(graph);
    }

    // ---- counters and statistics ---------------------------------------

    pub fn access_stats(&self) -> AccessStats {
        self.collections
            .values()
            .map(|c| c.counters().snapshot())
            .fold(AccessStats::default(), |a, b| a + b)
    }

    pub fn reset_counters(&self) {
        for c in self.collections.values() {
            c.counters().reset();
        }
    }

    /// Column statistics, recomputed when the collection changed since the
    /// last call. Collection is uncounted.
    pub fn stats(&self, oid: Oid) -> Result<Arc<ColumnStats>> {
        let coll = self.collection(oid)?;
        let mut cache = self.stats_cache.lock().expect("stats cache poisoned");
        if let Some((v, s)) = cache.get(&oid) {
            if *v == coll.version() {
                return Ok(Arc::clone(s));
            }
        }
        let s = Arc::new(collect_stats(coll.iter_live().map(|r| r.values)));
        cache.insert(oid, (coll.version(), Arc::clone(&s)));
        Ok(s)
    }

    pub fn version(&self, oid: Oid) -> Result<u64> {
        Ok(self.collection(oid)?.version())
    }

    // ---- topology build / persistence ------------------------------------

    fn stamp(&self, def: &GraphDef) -> Vec<u64> {
        def.vertex_oids
            .iter()
            .chain(std::iter::once(&def.edge_oid))
            .flat_map(|oid| match self.collections.get(oid) {
                Some(c) => [oid.0 as u64, c.version(), c.next_tid().0],
                None => [oid.0 as u64, u64::MAX, u64::MAX],
            })
            .collect()
    }

    fn build_topology(&self, def: &GraphDef) -> Result<Topology> {
        let mut topo = Topology::new();
        for oid in &def.vertex_oids {
            let coll = self.collection(*oid)?;
            for r in coll.iter_live() {
                let key = vertex_key_of(coll.schema(), r.values)?;
                topo.add_vertex(key, r.tid)?;
            }
        }
        let edges = self.collection(def.edge_oid)?;
        for r in edges.iter_live() {
            let key = edge_key_of(edges.schema(), r.values)?;
            let s = topo
                .mappers
                .nid_of(key.source)
                .map_err(|_| Error::Consistency(format!("edge {key} has a dangling source")))?;
            let t = topo
                .mappers
                .nid_of(key.target)
                .map_err(|_| Error::Consistency(format!("edge {key} has a dangling target")))?;
            topo.add_edge(s, t, def.edge_oid, r.tid).map_err(|e| match e {
                Error::Duplicate(_) => Error::Duplicate(format!(
                    "graph {} would contain parallel edges between {} and {}",
                    def.name, key.source, key.target
                )),
                other => other,
            })?;
        }
        Ok(topo)
    }

    fn load_topology(&self, def: &GraphDef) -> Result<Topology> {
        let paths = (
            self.topo_path(&def.name, "fwd.topo"),
            self.topo_path(&def.name, "rev.topo"),
            self.topo_path(&def.name, "nodes"),
        );
        if let (Some(f), Some(r), Some(n)) = paths {
            if f.exists() && r.exists() && n.exists() {
                let (slots, stamp) = deserialize_nodes(&fs::read(&n)?)?;
                if stamp == self.stamp(def) {
                    return Topology::from_parts(deserialize(&fs::read(&f)?)?, deserialize(&fs::read(&r)?)?, slots);
                }
            }
        }
        self.build_topology(def)
    }

    fn write_topology(&self, graph: &str) -> Result<()> {
        if self.dir.is_none() || !self.graphs.is_loaded(graph) {
            return Ok(());
        }
        let def = self.graph_def(graph)?;
        let topo = self.topology(graph)?;
        let name = &def.name;
        for dir in [Direction::Forward, Direction::Reverse] {
            let path = self.topo_path(name, &format!("{}.topo", dir.file_suffix())).unwrap();
            fs::write(path, serialize(topo.adjacency(dir), &topo.mappers.edge_map))?;
        }
        let path = self.topo_path(name, "nodes").unwrap();
        fs::write(path, serialize_nodes(&topo.mappers, &self.stamp(def)))?;
        Ok(())
    }

    /// Write catalog and every cached topology to the database directory.
    pub fn checkpoint(&self) -> Result<()> {
        self.save_catalog()?;
        for g in &self.catalog.graphs {
            self.write_topology(&g.name)?;
        }
        Ok(())
    }

    fn ensure_loaded(&mut self, graph: &str) -> Result<()> {
        self.topology(graph).map(|_| ())
    }

    fn rebuild_key_index(&mut self, oid: Oid) -> Result<()> {
        let coll = self.collection(oid)?;
        match coll.schema().kind {
            CollectionKind::VertexTable => {
                let mut m = HashMap::new();
                for r in coll.iter_live() {
                    let key = vertex_key_of(coll.schema(), r.values)?;
                    if m.insert(key.vid, r.tid).is_some() {
                        return Err(Error::Duplicate(format!("vertex {key}")));
                    }
                }
                self.vertex_index.insert(oid, m);
            }
            CollectionKind::EdgeTable => {
                let mut m = HashMap::new();
                for r in coll.iter_live() {
                    let key = edge_key_of(coll.schema(), r.values)?;
                    if m.insert(key, r.tid).is_some() {
                        return Err(Error::Duplicate(format!("edge {key}")));
                    }
                }
                self.edge_index.insert(oid, m);
            }
            _ => {}
        }
        Ok(())
    }

    // ---- mutations --------------------------------------------------------

    /// Insert rows into any collection. Vertex and edge rows go through the
    /// staged protocol: validate everything, write records, then extend
    /// topology and mappers of every affected graph.
    pub fn insert(&mut self, oid: Oid, mut rows: Vec<Vec<Value>>) -> Result<Vec<Tid>> {
        let kind = self.schema(oid)?.kind;
        self.collection(oid)?.conform_batch(&mut rows)?;
        match kind {
            CollectionKind::VertexTable => self.insert_vertices(oid, rows),
            CollectionKind::EdgeTable => self.insert_edges(oid, rows),
            _ => self.collection_mut(oid)?.insert(rows),
        }
    }

    pub fn insert_by_name(&mut self, name: &str, rows: Vec<Vec<Value>>) -> Result<Vec<Tid>> {
        let oid = self.oid_of(name)?;
        self.insert(oid, rows)
    }

    fn graphs_of_vertex_table(&self, oid: Oid) -> Vec<String> {
        self.catalog
            .graphs_with_vertex_table(oid)
            .map(|g| g.name.clone())
            .collect()
    }

    fn insert_vertices(&mut self, oid: Oid, rows: Vec<Vec<Value>>) -> Result<Vec<Tid>> {
        let schema = self.schema(oid)?.clone();
        let existing = self.vertex_index.get(&oid).cloned().unwrap_or_default();
        let mut keys = Vec::with_capacity(rows.len());
        let mut seen = HashSet::new();
        for row in &rows {
            let key = vertex_key_of(&schema, row)?;
            if existing.contains_key(&key.vid) || !seen.insert(key.vid) {
                return Err(Error::Duplicate(format!("vertex {key}")));
            }
            keys.push(key);
        }
        let graphs = self.graphs_of_vertex_table(oid);
        for g in &graphs {
            self.ensure_loaded(g)?;
        }
        let tids = self.collection_mut(oid)?.insert(rows)?;
        let index = self.vertex_index.entry(oid).or_default();
        for (key, tid) in keys.iter().zip(&tids) {
            index.insert(key.vid, *tid);
        }
        for g in &graphs {
            let topo = self.graphs.get_mut(g).expect("loaded above");
            for (key, tid) in keys.iter().zip(&tids) {
                topo.add_vertex(*key, *tid)?;
            }
        }
        Ok(tids)
    }

    fn insert_edges(&mut self, oid: Oid, rows: Vec<Vec<Value>>) -> Result<Vec<Tid>> {
        let schema = self.schema(oid)?.clone();
        let graph = self.catalog.graph_with_edge_table(oid).map(|g| g.name.clone());
        if let Some(g) = &graph {
            self.ensure_loaded(g)?;
        }
        let mut keys = Vec::with_capacity(rows.len());
        let mut pairs: Vec<(Nid, Nid)> = Vec::new();
        let mut seen_keys = HashSet::new();
        let mut seen_pairs = HashSet::new();
        for row in &rows {
            let key = edge_key_of(&schema, row)?;
            if self.edge_tid(&key).is_ok() || !seen_keys.insert(key) {
                return Err(Error::Duplicate(format!("edge {key}")));
            }
            for end in [key.source, key.target] {
                if self.vertex_tid(end).is_err() {
                    return Err(Error::not_found(format!("edge {key} references missing vertex {end}")));
                }
            }
            if let Some(g) = &graph {
                let topo = self.topology(g)?;
                let s = topo.mappers.nid_of(key.source).map_err(|_| {
                    Error::not_found(format!("edge {key}: vertex {} is not in graph {g}", key.source))
                })?;
                let t = topo.mappers.nid_of(key.target).map_err(|_| {
                    Error::not_found(format!("edge {key}: vertex {} is not in graph {g}", key.target))
                })?;
                topo.check_new_edge(s, t)?;
                if !seen_pairs.insert((s, t)) {
                    return Err(Error::Duplicate(format!(
                        "batch repeats the edge between {} and {}",
                        key.source, key.target
                    )));
                }
                pairs.push((s, t));
            }
            keys.push(key);
        }
        let tids = self.collection_mut(oid)?.insert(rows)?;
        let index = self.edge_index.entry(oid).or_default();
        for (key, tid) in keys.iter().zip(&tids) {
            index.insert(*key, *tid);
        }
        if let Some(g) = &graph {
            let topo = self.graphs.get_mut(g).expect("loaded above");
            for ((s, t), tid) in pairs.iter().zip(&tids) {
                topo.add_edge(*s, *t, oid, *tid)?;
            }
        }
        Ok(tids)
    }

    /// Replace a record's values in place. Topology is untouched, so key
    /// columns of vertex and edge rows may not change.
    pub fn update(&mut self, oid: Oid, tid: Tid, mut values: Vec<Value>) -> Result<()> {
        let coll = self.collection(oid)?;
        let schema = coll.schema().clone();
        schema.conform(&mut values)?;
        let old = coll.peek(tid)?;
        match schema.kind {
            CollectionKind::VertexTable => {
                if vertex_key_of(&schema, old.values)? != vertex_key_of(&schema, &values)? {
                    return Err(Error::schema("update may not change a vertex key"));
                }
            }
            CollectionKind::EdgeTable
                if edge_key_of(&schema, old.values)? != edge_key_of(&schema, &values)? => {
                    return Err(Error::schema("update may not change an edge key"));
                }
            _ => {}
        }
        self.collection_mut(oid)?.update(tid, values)
    }

    /// Delete any record. Vertex deletion cascades to incident edges.
    pub fn delete(&mut self, oid: Oid, tid: Tid) -> Result<()> {
        let coll = self.collection(oid)?;
        let schema = coll.schema().clone();
        let values = coll.peek(tid)?.values;
        match schema.kind {
            CollectionKind::VertexTable => {
                let key = vertex_key_of(&schema, values)?;
                self.delete_vertex(key)
            }
            CollectionKind::EdgeTable => {
                let key = edge_key_of(&schema, values)?;
                self.delete_edge(&key)
            }
            _ => self.collection_mut(oid)?.delete(tid).map(|_| ()),
        }
    }

    /// Remove topology and mapper entries first, then tombstone the records.
    pub fn delete_vertex(&mut self, key: VertexKey) -> Result<()> {
        let tid = self.vertex_tid(key)?;
        let graphs = self.graphs_of_vertex_table(key.oid);
        let mut doomed: Vec<(Oid, Tid)> = Vec::new();
        for g in &graphs {
            self.ensure_loaded(g)?;
            let topo = self.graphs.get_mut(g).expect("loaded above");
            let nid = topo.mappers.nid_of(key)?;
            for (s, t) in topo.incident_edges(nid) {
                doomed.push(topo.remove_edge(s, t)?);
            }
            topo.remove_vertex(key)?;
        }
        // Edge tables outside any graph still must not dangle.
        let loose: Vec<Oid> = self
            .edge_index
            .keys()
            .copied()
            .filter(|oid| self.catalog.graph_with_edge_table(*oid).is_none())
            .collect();
        for eoid in loose {
            for (ek, etid) in &self.edge_index[&eoid] {
                if ek.source == key || ek.target == key {
                    doomed.push((eoid, *etid));
                }
            }
        }
        for (eoid, etid) in doomed {
            let values = self.collection_mut(eoid)?.delete(etid)?;
            let ek = edge_key_of(self.schema(eoid)?, &values)?;
            if let Some(m) = self.edge_index.get_mut(&eoid) {
                m.remove(&ek);
            }
        }
        self.collection_mut(key.oid)?.delete(tid)?;
        if let Some(m) = self.vertex_index.get_mut(&key.oid) {
            m.remove(&key.vid);
        }
        Ok(())
    }

    pub fn delete_edge(&mut self, key: &EdgeKey) -> Result<()> {
        let tid = self.edge_tid(key)?;
        if let Some(g) = self.catalog.graph_with_edge_table(key.oid).map(|g| g.name.clone()) {
            self.ensure_loaded(&g)?;
            let topo = self.graphs.get_mut(&g).expect("loaded above");
            let s = topo.mappers.nid_of(key.source)?;
            let t = topo.mappers.nid_of(key.target)?;
            topo.remove_edge(s, t)?;
        }
        self.collection_mut(key.oid)?.delete(tid)?;
        if let Some(m) = self.edge_index.get_mut(&key.oid) {
            m.remove(key);
        }
        Ok(())
    }

    // ---- audit --------------------------------------------------------------

    /// Check the four dual-store consistency clauses for `graph`.
    pub fn audit(&self, graph: &str) -> Result<AuditReport> {
        let def = self.graph_def(graph)?;
        let topo = self.topology(graph)?;
        let mut problems = topo.audit_structure();
        let m = &topo.mappers;
        // vertexMap ∘ nidMap is the identity on live vertex keys.
        for (key, &nid) in &m.nid_map {
            match m.vertex_of(nid) {
                Ok((oid, tid)) => match self.collection(oid).and_then(|c| Ok((c.schema(), c.peek(tid)?))) {
                    Ok((schema, rec)) => {
                        if vertex_key_of(schema, rec.values).ok() != Some(*key) {
                            problems.push(format!("nid {nid} maps to a record whose key is not {key}"));
                        }
                    }
                    Err(_) => problems.push(format!("nid {nid} maps to a missing record ({oid}, {tid})")),
                },
                Err(_) => problems.push(format!("vertex {key} has no vertexMap entry")),
            }
        }
        for oid in &def.vertex_oids {
            let coll = self.collection(*oid)?;
            for r in coll.iter_live() {
                let key = vertex_key_of(coll.schema(), r.values)?;
                if !m.nid_map.contains_key(&key) {
                    problems.push(format!("live vertex {key} has no nid"));
                }
            }
        }
        let edges = self.collection(def.edge_oid)?;
        for (&(s, t), &(oid, tid)) in &m.edge_map {
            let rec = match self.collection(oid).and_then(|c| c.peek(tid)) {
                Ok(r) => r,
                Err(_) => {
                    problems.push(format!("edgeMap ({s}, {t}) points to a missing record ({oid}, {tid})"));
                    continue;
                }
            };
            let key = edge_key_of(edges.schema(), rec.values)?;
            if m.nid_map.get(&key.source) != Some(&s) || m.nid_map.get(&key.target) != Some(&t) {
                problems.push(format!("edgeMap ({s}, {t}) points to edge {key} with other endpoints"));
            }
        }
        if edges.len() != m.edge_map.len() {
            problems.push(format!(
                "edge table holds {} live edges but edgeMap has {}",
                edges.len(),
                m.edge_map.len()
            ));
        }
        Ok(AuditReport {
            graph: def.name.clone(),
            vertices: topo.live_vertex_count(),
            edges: topo.edge_count(),
            problems,
        })
    }

    // ---- import / export ------------------------------------------------------

    /// Import a CSV file (JSON Lines for document collections) into `name`.
    pub fn import_file(&mut self, name: &str, path: &Path) -> Result<usize> {
        let oid = self.oid_of(name)?;
        let schema = self.schema(oid)?.clone();
        let file = fs::File::open(path)?;
        let rows = if schema.kind == CollectionKind::DocumentCollection {
            io::read_jsonl(std::io::BufReader::new(file))?
        } else {
            io::read_csv(file, &schema)?
        };
        Ok(self.insert(oid, rows)?.len())
    }

    pub fn export_file(&self, name: &str, path: &Path) -> Result<usize> {
        let coll = self.collection_by_name(name)?;
        let file = std::io::BufWriter::new(fs::File::create(path)?);
        let rows = coll.iter_live().map(|r| r.values);
        if coll.schema().kind == CollectionKind::DocumentCollection {
            io::write_jsonl(file, rows)?;
        } else {
            io::write_csv(file, coll.schema(), rows)?;
        }
        Ok(coll.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::ColumnType;

    fn people_graph(db: &mut Database) {
        db.create_vertex_table("Persons", "Persons", vec![ColumnDef::new("name", ColumnType::Text)])
            .unwrap();
        db.create_vertex_table("Tags", "Tags", vec![ColumnDef::new("content", ColumnType::Text)])
            .unwrap();
        db.create_edge_table("Interest", "Interested in", vec![ColumnDef::new("weight", ColumnType::Float)])
            .unwrap();
        let p = |vid: i64, n: &str| vec![Value::Int(vid), Value::from(n)];
        db.insert_by_name("Persons", vec![p(0, "ann"), p(1, "bob"), p(2, "cy")]).unwrap();
        db.insert_by_name("Tags", vec![p(0, "food"), p(1, "art")]).unwrap();
        db.create_graph("Interested_in", &["Persons", "Tags"], "Interest").unwrap();
    }

    fn edge(s: i64, t: i64) -> Vec<Value> {
        vec![Value::Int(0), Value::Int(s), Value::Int(1), Value::Int(t), Value::Float(0.5)]
    }

    #[test]
    fn first_vertex_maps_to_nid_zero_and_back() {
        let mut db = Database::in_memory();
        people_graph(&mut db);
        let topo = db.topology("Interested_in").unwrap();
        let nid = topo.mappers.nid_of(VertexKey::new(0, 0)).unwrap();
        assert_eq!(topo.mappers.vertex_of(nid).unwrap(), (Oid(0), Tid(0)));
        assert!(topo.mappers.nid_of(VertexKey::new(0, 99)).is_err());
        let mut nids: Vec<Nid> = topo.mappers.nid_map.values().copied().collect();
        nids.sort();
        assert_eq!(nids, (0..5).collect::<Vec<_>>());
    }

    #[test]
    fn edge_insert_and_cascade_delete() {
        let mut db = Database::in_memory();
        people_graph(&mut db);
        db.insert_by_name("Interest", vec![edge(0, 0), edge(0, 1), edge(1, 0)]).unwrap();
        let topo = db.topology("Interested_in").unwrap();
        assert_eq!(topo.edge_count(), 3);
        assert_eq!(topo.neighbors(0, Direction::Forward), &[3, 4]);
        assert!(db.audit("Interested_in").unwrap().is_consistent());

        let dup = db.insert_by_name("Interest", vec![edge(0, 0)]).unwrap_err();
        assert!(matches!(dup, Error::Duplicate(_)));
        let dangling = db.insert_by_name("Interest", vec![edge(7, 0)]).unwrap_err();
        assert!(matches!(dangling, Error::NotFound(_)));

        db.delete_vertex(VertexKey::new(1, 0)).unwrap();
        let topo = db.topology("Interested_in").unwrap();
        assert_eq!(topo.edge_count(), 1);
        assert_eq!(db.collection_by_name("Interest").unwrap().len(), 1);
        assert!(db.audit("Interested_in").unwrap().is_consistent());
    }

    #[test]
    fn update_leaves_topology_unchanged() {
        let mut db = Database::in_memory();
        people_graph(&mut db);
        db.insert_by_name("Interest", vec![edge(0, 1)]).unwrap();
        let before = db.topology("Interested_in").unwrap().checksum();
        db.update(Oid(0), Tid(1), vec![Value::Int(1), Value::from("robert")]).unwrap();
        assert_eq!(db.topology("Interested_in").unwrap().checksum(), before);
        let err = db.update(Oid(0), Tid(1), vec![Value::Int(9), Value::from("x")]).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn duplicate_vertex_rejected() {
        let mut db = Database::in_memory();
        people_graph(&mut db);
        let err = db.insert_by_name("Persons", vec![vec![Value::Int(1), Value::from("again")]]).unwrap_err();
        assert!(matches!(err, Error::Duplicate(_)));
        let before = db.topology("Interested_in").unwrap().node_count();
        db.insert_by_name("Persons", vec![vec![Value::Int(5), Value::from("new")]]).unwrap();
        let topo = db.topology("Interested_in").unwrap();
        assert_eq!(topo.node_count(), before + 1);
        assert_eq!(topo.edge_count(), 0);
    }

    #[test]
    fn reopen_uses_topology_files_and_detects_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let checksum = {
            let mut db = Database::open(dir.path()).unwrap();
            people_graph(&mut db);
            db.insert_by_name("Interest", vec![edge(0, 1), edge(2, 0)]).unwrap();
            db.checkpoint().unwrap();
            db.topology("Interested_in").unwrap().checksum()
        };
        assert!(dir.path().join("Interested_in.fwd.topo").exists());
        let db = Database::open(dir.path()).unwrap();
        assert!(!db.graph_cache().is_loaded("Interested_in"));
        assert_eq!(db.topology("Interested_in").unwrap().checksum(), checksum);
        drop(db);
        {
            // Mutate without checkpointing: files go stale.
            let mut db = Database::open(dir.path()).unwrap();
            db.delete_edge(&EdgeKey {
                oid: Oid(2),
                source: VertexKey::new(0, 0),
                target: VertexKey::new(1, 1),
            })
            .unwrap();
        }
        let db = Database::open(dir.path()).unwrap();
        assert_eq!(db.topology("Interested_in").unwrap().edge_count(), 1);
        assert!(db.audit("Interested_in").unwrap().is_consistent());
    }
}
