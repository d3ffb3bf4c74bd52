//! Catalog types: collection schemas, graph definitions and record keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::Value;

/// Collection identifier, unique across the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Oid(pub u32);

/// Store-assigned record identifier; monotone per collection, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tid(pub u64);

impl fmt::Display for Oid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Tid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub tid: Tid,
    pub values: Vec<Value>,
}

impl Record {
    pub fn new(tid: Tid, values: Vec<Value>) -> Self {
        Record { tid, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColumnType {
    Int,
    Float,
    Text,
    Bool,
    Document,
    Array,
}

impl ColumnType {
    pub fn parse(name: &str) -> Option<ColumnType> {
        Some(match name.to_ascii_uppercase().as_str() {
            "INT" | "INTEGER" | "BIGINT" => ColumnType::Int,
            "FLOAT" | "DOUBLE" | "REAL" => ColumnType::Float,
            "TEXT" | "STRING" | "VARCHAR" => ColumnType::Text,
            "BOOL" | "BOOLEAN" => ColumnType::Bool,
            "DOCUMENT" | "JSON" | "JSONB" => ColumnType::Document,
            "ARRAY" => ColumnType::Array,
            _ => return None,
        })
    }

    /// Whether `value` can be stored in a column of this type. Null always can.
    pub fn admits(self, value: &Value) -> bool {
        matches!(
            (self, value),
            (_, Value::Null)
                | (ColumnType::Int, Value::Int(_))
                | (ColumnType::Float, Value::Float(_) | Value::Int(_))
                | (ColumnType::Text, Value::Text(_))
                | (ColumnType::Bool, Value::Bool(_))
                | (ColumnType::Document, Value::Document(_))
                | (ColumnType::Array, Value::Array(_))
        )
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnType::Int => "INT",
            ColumnType::Float => "FLOAT",
            ColumnType::Text => "TEXT",
            ColumnType::Bool => "BOOL",
            ColumnType::Document => "DOCUMENT",
            ColumnType::Array => "ARRAY",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, ty: ColumnType) -> Self {
        ColumnDef {
            name: name.into(),
            ty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CollectionKind {
    Relation,
    DocumentCollection,
    VertexTable,
    EdgeTable,
}

/// Reserved leading columns of vertex tables.
pub const VERTEX_KEY_COLUMNS: [&str; 1] = ["vid"];
/// Reserved leading columns of edge tables.
pub const EDGE_KEY_COLUMNS: [&str; 4] = ["soid", "svid", "toid", "tvid"];
/// Single column of a document collection.
pub const DOCUMENT_COLUMN: &str = "doc";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub oid: Oid,
    pub kind: CollectionKind,
    pub columns: Vec<ColumnDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Schema {
    pub fn relation(name: impl Into<String>, oid: Oid, columns: Vec<ColumnDef>) -> Self {
        Schema {
            name: name.into(),
            oid,
            kind: CollectionKind::Relation,
            columns,
            label: None,
        }
    }

    pub fn documents(name: impl Into<String>, oid: Oid) -> Self {
        Schema {
            name: name.into(),
            oid,
            kind: CollectionKind::DocumentCollection,
            columns: vec![ColumnDef::new(DOCUMENT_COLUMN, ColumnType::Document)],
            label: None,
        }
    }

    /// Vertex table; the reserved `vid` column is prepended to `props`.
    pub fn vertex_table(
        name: impl Into<String>,
        oid: Oid,
        label: impl Into<String>,
        props: Vec<ColumnDef>,
    ) -> Self {
        let mut columns = vec![ColumnDef::new("vid", ColumnType::Int)];
        columns.extend(props);
        Schema {
            name: name.into(),
            oid,
            kind: CollectionKind::VertexTable,
            columns,
            label: Some(label.into()),
        }
    }

    /// Edge table; reserved `soid, svid, toid, tvid` columns are prepended.
    pub fn edge_table(
        name: impl Into<String>,
        oid: Oid,
        label: impl Into<String>,
        props: Vec<ColumnDef>,
    ) -> Self {
        let mut columns: Vec<ColumnDef> = EDGE_KEY_COLUMNS
            .iter()
            .map(|c| ColumnDef::new(*c, ColumnType::Int))
            .collect();
        columns.extend(props);
        Schema {
            name: name.into(),
            oid,
            kind: CollectionKind::EdgeTable,
            columns,
            label: Some(label.into()),
        }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Check arity and declared types; integer values stored into float
    /// columns are widened in place.
    pub fn conform(&self, values: &mut [Value]) -> Result<()> {
        if values.len() != self.arity() {
            return Err(Error::schema(format!(
                "{} expects {} values, got {}",
                self.name,
                self.arity(),
                values.len()
            )));
        }
        for (col, value) in self.columns.iter().zip(values.iter_mut()) {
            if !col.ty.admits(value) {
                return Err(Error::schema(format!(
                    "column {}.{} of type {} cannot hold a {} value",
                    self.name,
                    col.name,
                    col.ty,
                    value.type_name()
                )));
            }
            if let (ColumnType::Float, Value::Int(i)) = (col.ty, &*value) {
                *value = Value::Float(*i as f64);
            }
        }
        match self.kind {
            CollectionKind::VertexTable => {
                key_component(&values[0], "vid")?;
            }
            CollectionKind::EdgeTable => {
                for (i, name) in EDGE_KEY_COLUMNS.iter().enumerate() {
                    key_component(&values[i], name)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn key_component(value: &Value, name: &str) -> Result<u64> {
    match value {
        Value::Int(i) if *i >= 0 => Ok(*i as u64),
        other => Err(Error::schema(format!(
            "key column {name} must be a non-negative integer, found {other}"
        ))),
    }
}

/// `(oid, vid)`: identifies a vertex row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexKey {
    pub oid: Oid,
    pub vid: u64,
}

impl VertexKey {
    pub fn new(oid: u32, vid: u64) -> Self {
        VertexKey { oid: Oid(oid), vid }
    }
}

impl fmt::Display for VertexKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.oid, self.vid)
    }
}

/// `(oid, soid, svid, toid, tvid)`: identifies an edge row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub oid: Oid,
    pub source: VertexKey,
    pub target: VertexKey,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.oid, self.source.oid, self.source.vid, self.target.oid, self.target.vid
        )
    }
}

pub fn get_vertex_key(record: &Record, schema: &Schema) -> Result<VertexKey> {
    if schema.kind != CollectionKind::VertexTable {
        return Err(Error::schema(format!("{} is not a vertex table", schema.name)));
    }
    vertex_key_of(schema, &record.values)
}

/// Vertex key of a row of `schema` (assumed to be a vertex table).
pub fn vertex_key_of(schema: &Schema, values: &[Value]) -> Result<VertexKey> {
    let vid = key_component(values.first().unwrap_or(&Value::Null), "vid")?;
    Ok(VertexKey { oid: schema.oid, vid })
}

pub fn get_edge_key(record: &Record, schema: &Schema) -> Result<EdgeKey> {
    if schema.kind != CollectionKind::EdgeTable {
        return Err(Error::schema(format!("{} is not an edge table", schema.name)));
    }
    edge_key_of(schema, &record.values)
}

/// Edge key of a row of `schema` (assumed to be an edge table).
pub fn edge_key_of(schema: &Schema, values: &[Value]) -> Result<EdgeKey> {
    let part = |i: usize| key_component(values.get(i).unwrap_or(&Value::Null), EDGE_KEY_COLUMNS[i]);
    let soid = u32::try_from(part(0)?).map_err(|_| Error::schema("soid out of range"))?;
    let toid = u32::try_from(part(2)?).map_err(|_| Error::schema("toid out of range"))?;
    Ok(EdgeKey {
        oid: schema.oid,
        source: VertexKey {
            oid: Oid(soid),
            vid: part(1)?,
        },
        target: VertexKey {
            oid: Oid(toid),
            vid: part(3)?,
        },
    })
}

/// A property graph: vertex tables, one edge table, one uniform edge label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDef {
    pub name: String,
    pub vertex_oids: Vec<Oid>,
    pub edge_oid: Oid,
    pub edge_label: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Catalog {
    pub schemas: Vec<Schema>,
    pub graphs: Vec<GraphDef>,
    next_oid: u32,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    pub fn allocate_oid(&mut self) -> Oid {
        let oid = Oid(self.next_oid);
        self.next_oid += 1;
        oid
    }

    pub fn add_schema(&mut self, schema: Schema) -> Result<()> {
        if self.lookup_name(&schema.name) {
            return Err(Error::Duplicate(format!("collection {} already exists", schema.name)));
        }
        if self.schemas.iter().any(|s| s.oid == schema.oid) {
            return Err(Error::Duplicate(format!("oid {} already in use", schema.oid)));
        }
        let mut names = std::collections::HashSet::new();
        for c in &schema.columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::schema(format!("duplicate column {} in {}", c.name, schema.name)));
            }
        }
        self.next_oid = self.next_oid.max(schema.oid.0 + 1);
        self.schemas.push(schema);
        Ok(())
    }

    pub fn add_graph(&mut self, graph: GraphDef) -> Result<()> {
        if self.lookup_name(&graph.name) {
            return Err(Error::Duplicate(format!("name {} already exists", graph.name)));
        }
        for oid in &graph.vertex_oids {
            let s = self.schema(*oid)?;
            if s.kind != CollectionKind::VertexTable {
                return Err(Error::schema(format!("{} is not a vertex table", s.name)));
            }
        }
        let e = self.schema(graph.edge_oid)?;
        if e.kind != CollectionKind::EdgeTable {
            return Err(Error::schema(format!("{} is not an edge table", e.name)));
        }
        if e.label.as_deref() != Some(graph.edge_label.as_str()) {
            return Err(Error::schema(format!(
                "edge table {} carries label {:?}, graph requires {:?}",
                e.name, e.label, graph.edge_label
            )));
        }
        self.graphs.push(graph);
        Ok(())
    }

    fn lookup_name(&self, name: &str) -> bool {
        self.schemas.iter().any(|s| s.name.eq_ignore_ascii_case(name))
            || self.graphs.iter().any(|g| g.name.eq_ignore_ascii_case(name))
    }

    pub fn schema(&self, oid: Oid) -> Result<&Schema> {
        self.schemas
            .iter()
            .find(|s| s.oid == oid)
            .ok_or_else(|| Error::not_found(format!("collection oid {oid}")))
    }

    pub fn schema_by_name(&self, name: &str) -> Option<&Schema> {
        self.schemas.iter().find(|s| s.name.eq_ignore_ascii_case(name))
    }

    pub fn graph(&self, name: &str) -> Option<&GraphDef> {
        self.graphs.iter().find(|g| g.name.eq_ignore_ascii_case(name))
    }

    /// Graphs whose vertex set includes the given vertex table.
    pub fn graphs_with_vertex_table(&self, oid: Oid) -> impl Iterator<Item = &GraphDef> {
        self.graphs.iter().filter(move |g| g.vertex_oids.contains(&oid))
    }

    pub fn graph_with_edge_table(&self, oid: Oid) -> Option<&GraphDef> {
        self.graphs.iter().find(|g| g.edge_oid == oid)
    }

    /// Vertex tables of `graph` carrying `label`.
    pub fn vertex_tables_with_label<'a>(
        &'a self,
        graph: &'a GraphDef,
        label: &'a str,
    ) -> impl Iterator<Item = &'a Schema> + 'a {
        graph
            .vertex_oids
            .iter()
            .filter_map(|oid| self.schema(*oid).ok())
            .filter(move |s| s.label.as_deref() == Some(label))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Catalog> {
        let text = std::fs::read_to_string(path)?;
        let catalog: Catalog = serde_json::from_str(&text)?;
        Ok(catalog)
    }

    /// Name → oid for every collection, sorted by name.
    pub fn oids_by_name(&self) -> BTreeMap<String, Oid> {
        self.schemas.iter().map(|s| (s.name.clone(), s.oid)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn person() -> Schema {
        Schema::vertex_table("Person", Oid(0), "Person", vec![ColumnDef::new("name", ColumnType::Text)])
    }

    fn interested() -> Schema {
        Schema::edge_table("interested", Oid(2), "Interested in", vec![])
    }

    #[test]
    fn vertex_key_of_first_vertex() {
        let r = Record::new(Tid(0), vec![Value::Int(0), Value::from("v1")]);
        assert_eq!(get_vertex_key(&r, &person()).unwrap(), VertexKey::new(0, 0));
    }

    #[test]
    fn vertex_key_field_extraction() {
        let s = Schema::vertex_table("T", Oid(3), "T", vec![]);
        let r = Record::new(Tid(9), vec![Value::Int(5)]);
        assert_eq!(get_vertex_key(&r, &s).unwrap(), VertexKey::new(3, 5));
    }

    #[test]
    fn vertex_key_rejects_edge_table() {
        let r = Record::new(Tid(0), vec![Value::Int(0); 4]);
        assert!(matches!(get_vertex_key(&r, &interested()), Err(Error::Schema(_))));
    }

    #[test]
    fn edge_key_extraction_and_kind_check() {
        let r = Record::new(
            Tid(0),
            vec![Value::Int(0), Value::Int(0), Value::Int(1), Value::Int(4)],
        );
        let key = get_edge_key(&r, &interested()).unwrap();
        assert_eq!(
            key,
            EdgeKey {
                oid: Oid(2),
                source: VertexKey::new(0, 0),
                target: VertexKey::new(1, 4)
            }
        );
        let vr = Record::new(Tid(0), vec![Value::Int(0), Value::from("x")]);
        assert!(get_edge_key(&vr, &person()).is_err());
    }

    #[test]
    fn conform_checks_arity_types_and_widens() {
        let s = Schema::relation(
            "P",
            Oid(1),
            vec![ColumnDef::new("id", ColumnType::Int), ColumnDef::new("price", ColumnType::Float)],
        );
        let mut ok = vec![Value::Int(1), Value::Int(5)];
        s.conform(&mut ok).unwrap();
        assert_eq!(ok[1], Value::Float(5.0));
        assert!(s.conform(&mut [Value::Int(1)]).is_err());
        assert!(s.conform(&mut [Value::from("x"), Value::Null]).is_err());
    }

    #[test]
    fn catalog_rejects_duplicate_oid_and_name() {
        let mut c = Catalog::new();
        c.add_schema(person()).unwrap();
        assert!(c.add_schema(person()).is_err());
        let mut other = interested();
        other.oid = Oid(0);
        assert!(c.add_schema(other).is_err());
    }

    #[test]
    fn catalog_json_round_trip() {
        let mut c = Catalog::new();
        c.add_schema(person()).unwrap();
        c.add_schema(interested()).unwrap();
        c.add_graph(GraphDef {
            name: "Interested_in".into(),
            vertex_oids: vec![Oid(0)],
            edge_oid: Oid(2),
            edge_label: "Interested in".into(),
        })
        .unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: Catalog = serde_json::from_str(&text).unwrap();
        assert_eq!(back.schemas, c.schemas);
        assert_eq!(back.graphs, c.graphs);
        assert_eq!(back.allocate_oid_preview(), Oid(3));
    }

    impl Catalog {
        fn allocate_oid_preview(&self) -> Oid {
            Oid(self.next_oid)
        }
    }
}
