//! Adjacency-graph topology, record↔topology mappers and the binary
//! topology file format.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::schema::{Oid, Tid, VertexKey};

/// Topology node identifier: dense per graph, never reused.
pub type Nid = u64;

pub type EdgeMap = HashMap<(Nid, Nid), (Oid, Tid)>;

const MAGIC: &[u8; 4] = b"GRDO";
const FORMAT_VERSION: u32 = 1;
const NODES_MAGIC: &[u8; 4] = b"GRDN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    fn to_byte(self) -> u8 {
        match self {
            Direction::Forward => 0,
            Direction::Reverse => 1,
        }
    }

    fn from_byte(b: u8) -> Result<Direction> {
        match b {
            0 => Ok(Direction::Forward),
            1 => Ok(Direction::Reverse),
            other => Err(Error::Format(format!("invalid direction byte {other}"))),
        }
    }

    pub fn file_suffix(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Reverse => "rev",
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        }
    }
}

/// Per-source neighbor sequences in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    direction: Direction,
    adjacency: Vec<Vec<Nid>>,
    edge_count: u64,
}

impl AdjacencyGraph {
    pub fn new(direction: Direction) -> Self {
        AdjacencyGraph {
            direction,
            adjacency: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// |V|, including retired nids.
    pub fn node_count(&self) -> u64 {
        self.adjacency.len() as u64
    }

    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn add_node(&mut self) -> Nid {
        self.adjacency.push(Vec::new());
        self.adjacency.len() as Nid - 1
    }

    pub fn neighbors(&self, nid: Nid) -> &[Nid] {
        self.adjacency.get(nid as usize).map_or(&[], Vec::as_slice)
    }

    pub fn contains_edge(&self, s: Nid, t: Nid) -> bool {
        self.neighbors(s).contains(&t)
    }

    pub fn add_edge(&mut self, s: Nid, t: Nid) -> Result<()> {
        let n = self.node_count();
        if s >= n || t >= n {
            return Err(Error::not_found(format!("nid pair ({s}, {t}) outside 0..{n}")));
        }
        self.adjacency[s as usize].push(t);
        self.edge_count += 1;
        Ok(())
    }

    /// Remove one `(s, t)` entry, keeping the order of the rest.
    pub fn remove_edge(&mut self, s: Nid, t: Nid) -> bool {
        let Some(list) = self.adjacency.get_mut(s as usize) else {
            return false;
        };
        match list.iter().position(|&x| x == t) {
            Some(i) => {
                list.remove(i);
                self.edge_count -= 1;
                true
            }
            None => false,
        }
    }

    /// All `(s, t)` pairs in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (Nid, Nid)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |&t| (s as Nid, t)))
    }

    pub fn average_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            0.0
        } else {
            self.edge_count as f64 / self.adjacency.len() as f64
        }
    }
}

/// The three record↔topology mappers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Mappers {
    pub nid_map: HashMap<VertexKey, Nid>,
    /// Indexed by nid; `None` marks a retired nid.
    pub vertex_map: Vec<Option<VertexSlot>>,
    pub edge_map: EdgeMap,
}

/// Location of a vertex record plus its vid, so nidMap can be rebuilt from
/// the node file alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VertexSlot {
    pub oid: Oid,
    pub tid: Tid,
    pub vid: u64,
}

impl Mappers {
    pub fn nid_of(&self, key: VertexKey) -> Result<Nid> {
        self.nid_map
            .get(&key)
            .copied()
            .ok_or_else(|| Error::not_found(format!("vertex {key}")))
    }

    pub fn vertex_of(&self, nid: Nid) -> Result<(Oid, Tid)> {
        match self.vertex_map.get(nid as usize) {
            Some(Some(slot)) => Ok((slot.oid, slot.tid)),
            _ => Err(Error::not_found(format!("nid {nid}"))),
        }
    }

    pub fn edge_of(&self, s: Nid, t: Nid) -> Result<(Oid, Tid)> {
        self.edge_map
            .get(&(s, t))
            .copied()
            .ok_or_else(|| Error::not_found(format!("edge between nids {s} and {t}")))
    }

    pub fn is_live(&self, nid: Nid) -> bool {
        matches!(self.vertex_map.get(nid as usize), Some(Some(_)))
    }
}

/// Forward and reverse adjacency plus mappers for one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub forward: AdjacencyGraph,
    pub reverse: AdjacencyGraph,
    pub mappers: Mappers,
}

impl Default for Topology {
    fn default() -> Self {
        Topology::new()
    }
}

impl Topology {
    pub fn new() -> Self {
        Topology {
            forward: AdjacencyGraph::new(Direction::Forward),
            reverse: AdjacencyGraph::new(Direction::Reverse),
            mappers: Mappers::default(),
        }
    }

    pub fn adjacency(&self, direction: Direction) -> &AdjacencyGraph {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Reverse => &self.reverse,
        }
    }

    pub fn neighbors(&self, nid: Nid, direction: Direction) -> &[Nid] {
        self.adjacency(direction).neighbors(nid)
    }

    pub fn node_count(&self) -> u64 {
        self.forward.node_count()
    }

    pub fn live_vertex_count(&self) -> usize {
        self.mappers.nid_map.len()
    }

    pub fn edge_count(&self) -> u64 {
        self.forward.edge_count()
    }

    /// Allocate a fresh nid for a vertex record.
    pub fn add_vertex(&mut self, key: VertexKey, tid: Tid) -> Result<Nid> {
        if self.mappers.nid_map.contains_key(&key) {
            return Err(Error::Duplicate(format!("vertex {key}")));
        }
        let nid = self.forward.add_node();
        let rnid = self.reverse.add_node();
        debug_assert_eq!(nid, rnid);
        self.mappers.nid_map.insert(key, nid);
        self.mappers.vertex_map.push(Some(VertexSlot {
            oid: key.oid,
            tid,
            vid: key.vid,
        }));
        Ok(nid)
    }

    /// Validate a prospective edge without changing anything.
    pub fn check_new_edge(&self, s: Nid, t: Nid) -> Result<()> {
        if !self.mappers.is_live(s) || !self.mappers.is_live(t) {
            return Err(Error::not_found(format!("endpoint nid of ({s}, {t})")));
        }
        if self.mappers.edge_map.contains_key(&(s, t)) {
            return Err(Error::Duplicate(format!(
                "an edge between nids {s} and {t} already exists"
            )));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, s: Nid, t: Nid, oid: Oid, tid: Tid) -> Result<()> {
        self.check_new_edge(s, t)?;
        self.forward.add_edge(s, t)?;
        self.reverse.add_edge(t, s)?;
        self.mappers.edge_map.insert((s, t), (oid, tid));
        Ok(())
    }

    /// Remove the `(s, t)` edge from both directions and edgeMap; returns the
    /// record location it mapped to.
    pub fn remove_edge(&mut self, s: Nid, t: Nid) -> Result<(Oid, Tid)> {
        let loc = self.mappers.edge_of(s, t)?;
        self.forward.remove_edge(s, t);
        self.reverse.remove_edge(t, s);
        self.mappers.edge_map.remove(&(s, t));
        Ok(loc)
    }

    /// Pairs of every edge incident to `nid`, each listed once.
    pub fn incident_edges(&self, nid: Nid) -> Vec<(Nid, Nid)> {
        let mut out: Vec<(Nid, Nid)> = self.forward.neighbors(nid).iter().map(|&t| (nid, t)).collect();
        out.extend(
            self.reverse
                .neighbors(nid)
                .iter()
                .filter(|&&s| s != nid)
                .map(|&s| (s, nid)),
        );
        out
    }

    /// Retire a vertex. Incident edges must already be gone.
    pub fn remove_vertex(&mut self, key: VertexKey) -> Result<Nid> {
        let nid = self.mappers.nid_of(key)?;
        if !self.forward.neighbors(nid).is_empty() || !self.reverse.neighbors(nid).is_empty() {
            return Err(Error::Consistency(format!("vertex {key} still has incident edges")));
        }
        self.mappers.nid_map.remove(&key);
        self.mappers.vertex_map[nid as usize] = None;
        Ok(nid)
    }

    /// Order-sensitive hash of adjacency and mappers.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for g in [&self.forward, &self.reverse] {
            g.adjacency.hash(&mut h);
        }
        self.mappers.vertex_map.hash(&mut h);
        let edges: BTreeMap<_, _> = self.mappers.edge_map.iter().collect();
        edges.hash(&mut h);
        h.finish()
    }

    /// Structural clauses of the consistency audit that need no record
    /// access: transpose, edgeMap domain and counts, nidMap/vertexMap inverse.
    pub fn audit_structure(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let m = &self.mappers;
        for (key, &nid) in &m.nid_map {
            match m.vertex_map.get(nid as usize) {
                Some(Some(slot)) if slot.oid == key.oid && slot.vid == key.vid => {}
                _ => problems.push(format!("nidMap {key} -> {nid} not inverted by vertexMap")),
            }
        }
        let live_slots = m.vertex_map.iter().filter(|s| s.is_some()).count();
        if live_slots != m.nid_map.len() {
            problems.push(format!(
                "vertexMap has {live_slots} live nids but nidMap has {} keys",
                m.nid_map.len()
            ));
        }
        let mut fwd: Vec<(Nid, Nid)> = self.forward.pairs().collect();
        let mut rev: Vec<(Nid, Nid)> = self.reverse.pairs().map(|(t, s)| (s, t)).collect();
        fwd.sort_unstable();
        rev.sort_unstable();
        if fwd != rev {
            problems.push("reverse adjacency is not the transpose of forward adjacency".into());
        }
        for &(s, t) in &fwd {
            if !m.edge_map.contains_key(&(s, t)) {
                problems.push(format!("forward pair ({s}, {t}) has no edgeMap entry"));
            }
            if !m.is_live(s) || !m.is_live(t) {
                problems.push(format!("forward pair ({s}, {t}) touches a retired nid"));
            }
        }
        let mut dedup = fwd.clone();
        dedup.dedup();
        if dedup.len() != fwd.len() {
            problems.push("forward adjacency contains parallel pairs".into());
        }
        for pair in m.edge_map.keys() {
            if fwd.binary_search(pair).is_err() {
                problems.push(format!("edgeMap entry {pair:?} has no forward pair"));
            }
        }
        let e = self.forward.edge_count();
        let listed = fwd.len() as u64;
        if m.edge_map.len() as u64 != e || listed != e || self.reverse.edge_count() != e {
            problems.push(format!(
                "edge counts disagree: |edgeMap|={}, |E|={e}, forward entries={listed}, reverse |E|={}",
                m.edge_map.len(),
                self.reverse.edge_count()
            ));
        }
        problems
    }
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

/// Serialize one direction: header, CSR offsets/targets, then edgeMap
/// entries in adjacency order keyed by forward orientation.
pub fn serialize(graph: &AdjacencyGraph, edge_map: &EdgeMap) -> Vec<u8> {
    let v = graph.node_count();
    let e = graph.edge_count();
    let mut out = Vec::with_capacity(4 + 4 + 1 + 16 + 8 * (v as usize + 1) + 36 * e as usize);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    out.push(graph.direction.to_byte());
    put_u64(&mut out, v);
    put_u64(&mut out, e);
    let mut offset = 0u64;
    put_u64(&mut out, 0);
    for list in &graph.adjacency {
        offset += list.len() as u64;
        put_u64(&mut out, offset);
    }
    for list in &graph.adjacency {
        for &t in list {
            put_u64(&mut out, t);
        }
    }
    for (s, t) in graph.pairs() {
        let key = match graph.direction {
            Direction::Forward => (s, t),
            Direction::Reverse => (t, s),
        };
        let (oid, tid) = edge_map.get(&key).copied().unwrap_or((Oid(u32::MAX), Tid(u64::MAX)));
        put_u64(&mut out, key.0);
        put_u64(&mut out, key.1);
        put_u32(&mut out, oid.0);
        put_u64(&mut out, tid.0);
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated topology data at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<(AdjacencyGraph, EdgeMap)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad topology magic".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported topology version {version}")));
    }
    let direction = Direction::from_byte(c.u8()?)?;
    let v = c.u64()?;
    let e = c.u64()?;
    // Reject absurd counts before allocating.
    let need = (v as u128 + 1) * 8 + e as u128 * (8 + 28);
    if need != c.remaining() as u128 {
        return Err(Error::Format(format!(
            "topology body is {} bytes, header implies {need}",
            c.remaining()
        )));
    }
    let mut offsets = Vec::with_capacity(v as usize + 1);
    for _ in 0..=v {
        offsets.push(c.u64()?);
    }
    if offsets[0] != 0 || offsets[v as usize] != e || offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Format("invalid topology offsets".into()));
    }
    let mut adjacency = Vec::with_capacity(v as usize);
    for w in offsets.windows(2) {
        let mut list = Vec::with_capacity((w[1] - w[0]) as usize);
        for _ in w[0]..w[1] {
            let t = c.u64()?;
            if t >= v {
                return Err(Error::Format(format!("target nid {t} out of range")));
            }
            list.push(t);
        }
        adjacency.push(list);
    }
    let mut edge_map = EdgeMap::with_capacity(e as usize);
    for _ in 0..e {
        let s = c.u64()?;
        let t = c.u64()?;
        let oid = c.u32()?;
        let tid = c.u64()?;
        if edge_map.insert((s, t), (Oid(oid), Tid(tid))).is_some() {
            return Err(Error::Format(format!("duplicate edgeMap entry ({s}, {t})")));
        }
    }
    Ok((
        AdjacencyGraph {
            direction,
            adjacency,
            edge_count: e,
        },
        edge_map,
    ))
}

/// Node file: vertexMap entries (live flag, oid, tid, vid) plus a caller
/// supplied freshness stamp.
pub fn serialize_nodes(mappers: &Mappers, stamp: &[u64]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(NODES_MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u64(&mut out, stamp.len() as u64);
    for &s in stamp {
        put_u64(&mut out, s);
    }
    put_u64(&mut out, mappers.vertex_map.len() as u64);
    for slot in &mappers.vertex_map {
        match slot {
            Some(s) => {
                out.push(1);
                put_u32(&mut out, s.oid.0);
                put_u64(&mut out, s.tid.0);
                put_u64(&mut out, s.vid);
            }
            None => {
                out.push(0);
                put_u32(&mut out, 0);
                put_u64(&mut out, 0);
                put_u64(&mut out, 0);
            }
        }
    }
    out
}

pub fn deserialize_nodes(bytes: &[u8]) -> Result<(Vec<Option<VertexSlot>>, Vec<u64>)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != NODES_MAGIC {
        return Err(Error::Format("bad node file magic".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported node file version {version}")));
    }
    let n_stamp = c.u64()?;
    if n_stamp as u128 * 8 > c.remaining() as u128 {
        return Err(Error::Format("truncated node file".into()));
    }
    let stamp = (0..n_stamp).map(|_| c.u64()).collect::<Result<Vec<_>>>()?;
    let n = c.u64()?;
    if n as u128 * 21 != c.remaining() as u128 {
        return Err(Error::Format("node file length mismatch".into()));
    }
    let mut slots = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let live = c.u8()?;
        let oid = c.u32()?;
        let tid = c.u64()?;
        let vid = c.u64()?;
        slots.push(match live {
            1 => Some(VertexSlot {
                oid: Oid(oid),
                tid: Tid(tid),
                vid,
            }),
            0 => None,
            other => return Err(Error::Format(format!("invalid live flag {other}"))),
        });
    }
    Ok((slots, stamp))
}

impl Topology {
    /// Reassemble from the three files' contents.
    pub fn from_parts(
        forward: (AdjacencyGraph, EdgeMap),
        reverse: (AdjacencyGraph, EdgeMap),
        vertex_map: Vec<Option<VertexSlot>>,
    ) -> Result<Topology> {
        let (fwd, edge_map) = forward;
        let (rev, rev_map) = reverse;
        if fwd.direction != Direction::Forward || rev.direction != Direction::Reverse {
            return Err(Error::Format("topology files have swapped directions".into()));
        }
        if fwd.node_count() != rev.node_count() || fwd.node_count() != vertex_map.len() as u64 {
            return Err(Error::Format("topology files disagree on |V|".into()));
        }
        if edge_map != rev_map {
            return Err(Error::Format("forward and reverse edge maps differ".into()));
        }
        let nid_map = vertex_map
            .iter()
            .enumerate()
            .filter_map(|(nid, s)| s.map(|s| (VertexKey { oid: s.oid, vid: s.vid }, nid as Nid)))
            .collect();
        Ok(Topology {
            forward: fwd,
            reverse: rev,
            mappers: Mappers {
                nid_map,
                vertex_map,
                edge_map,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(n: u64) -> Topology {
        let mut t = Topology::new();
        for vid in 0..n {
            t.add_vertex(VertexKey::new(0, vid), Tid(vid)).unwrap();
        }
        for i in 1..n {
            t.add_edge(0, i, Oid(1), Tid(i - 1)).unwrap();
        }
        t
    }

    #[test]
    fn insertion_order_neighbors() {
        let mut t = Topology::new();
        for vid in 0..3 {
            t.add_vertex(VertexKey::new(0, vid), Tid(vid)).unwrap();
        }
        t.add_edge(0, 1, Oid(1), Tid(0)).unwrap();
        t.add_edge(0, 2, Oid(1), Tid(1)).unwrap();
        assert_eq!(t.neighbors(0, Direction::Forward), &[1, 2]);
        assert_eq!(t.neighbors(2, Direction::Reverse), &[0]);
        assert!(t.neighbors(1, Direction::Forward).is_empty());
    }

    #[test]
    fn parallel_edges_rejected_self_loops_allowed() {
        let mut t = star(3);
        assert!(matches!(t.add_edge(0, 1, Oid(1), Tid(9)), Err(Error::Duplicate(_))));
        t.add_edge(2, 2, Oid(1), Tid(10)).unwrap();
        assert_eq!(t.incident_edges(2), vec![(2, 2), (0, 2)]);
        assert!(t.audit_structure().is_empty());
    }

    #[test]
    fn remove_edge_and_vertex() {
        let mut t = star(4);
        assert_eq!(t.remove_edge(0, 2).unwrap(), (Oid(1), Tid(1)));
        assert!(!t.forward.contains_edge(0, 2));
        assert!(t.mappers.edge_of(0, 2).is_err());
        assert!(t.remove_vertex(VertexKey::new(0, 0)).is_err(), "edges still attached");
        for (s, d) in t.incident_edges(0) {
            t.remove_edge(s, d).unwrap();
        }
        let nid = t.remove_vertex(VertexKey::new(0, 0)).unwrap();
        assert_eq!(nid, 0);
        assert!(t.mappers.vertex_of(0).is_err());
        assert_eq!(t.node_count(), 4, "retired nids leave holes");
        assert!(t.audit_structure().is_empty());
    }

    #[test]
    fn serialization_round_trip() {
        for t in [Topology::new(), star(1), star(2), star(6)] {
            for g in [&t.forward, &t.reverse] {
                let bytes = serialize(g, &t.mappers.edge_map);
                let (back, map) = deserialize(&bytes).unwrap();
                assert_eq!(&back, g);
                assert_eq!(map, t.mappers.edge_map);
            }
            let nodes = serialize_nodes(&t.mappers, &[7, 8]);
            let (slots, stamp) = deserialize_nodes(&nodes).unwrap();
            assert_eq!(stamp, vec![7, 8]);
            let rebuilt = Topology::from_parts(
                deserialize(&serialize(&t.forward, &t.mappers.edge_map)).unwrap(),
                deserialize(&serialize(&t.reverse, &t.mappers.edge_map)).unwrap(),
                slots,
            )
            .unwrap();
            assert_eq!(rebuilt, t);
        }
    }

    #[test]
    fn header_layout() {
        let t = star(2);
        let bytes = serialize(&t.forward, &t.mappers.edge_map);
        assert_eq!(&bytes[..4], b"GRDO");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(bytes[8], 0);
        assert_eq!(u64::from_le_bytes(bytes[9..17].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[17..25].try_into().unwrap()), 1);
    }

    #[test]
    fn corrupt_input_is_format_error() {
        let t = star(3);
        let bytes = serialize(&t.forward, &t.mappers.edge_map);
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(matches!(deserialize(&bytes[..cut]), Err(Error::Format(_))));
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
    }
}
