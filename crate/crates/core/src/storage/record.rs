//! Tid-indexed record collections with tombstones and an append-only log.

use std::collections::VecDeque;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicate::Predicate;
use crate::schema::{Record, Schema, Tid};
use crate::storage::AccessCounters;
use crate::value::Value;

pub const DEFAULT_ROW_BUFFER: usize = 4096;

/// Borrowed view of a live record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRef<'a> {
    pub tid: Tid,
    pub values: &'a [Value],
}

impl RecordRef<'_> {
    pub fn to_record(&self) -> Record {
        Record::new(self.tid, self.values.to_vec())
    }
}

#[derive(Debug, Serialize, Deserialize)]
enum LogEntry {
    #[serde(rename = "i")]
    Insert(u64, Vec<Value>),
    #[serde(rename = "u")]
    Update(u64, Vec<Value>),
    #[serde(rename = "d")]
    Delete(u64),
}

/// One collection: schema, tid-indexed rows (`None` = tombstone) and the
/// optional log it is persisted to.
#[derive(Debug)]
pub struct Collection {
    schema: Schema,
    rows: Vec<Option<Vec<Value>>>,
    live: usize,
    version: u64,
    counters: AccessCounters,
    row_buffer: usize,
    log: Option<BufWriter<File>>,
    log_path: Option<PathBuf>,
}

impl Collection {
    pub fn new(schema: Schema) -> Self {
        Collection {
            schema,
            rows: Vec::new(),
            live: 0,
            version: 0,
            counters: AccessCounters::default(),
            row_buffer: DEFAULT_ROW_BUFFER,
            log: None,
            log_path: None,
        }
    }

    /// Open (or create) the collection persisted at `path`, replaying its log.
    pub fn open(schema: Schema, path: &Path) -> Result<Self> {
        let mut coll = Collection::new(schema);
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: LogEntry = serde_json::from_str(&line).map_err(|e| {
                    Error::Format(format!("{}: log line {}: {e}", path.display(), i + 1))
                })?;
                coll.apply(entry)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        coll.log = Some(BufWriter::new(file));
        coll.log_path = Some(path.to_path_buf());
        Ok(coll)
    }

    fn apply(&mut self, entry: LogEntry) -> Result<()> {
        match entry {
            LogEntry::Insert(tid, values) => {
                if tid as usize != self.rows.len() {
                    return Err(Error::Format(format!(
                        "log inserts tid {tid} but next tid is {}",
                        self.rows.len()
                    )));
                }
                self.rows.push(Some(values));
                self.live += 1;
            }
            LogEntry::Update(tid, values) => {
                *self.slot_mut(Tid(tid))? = values;
            }
            LogEntry::Delete(tid) => {
                self.slot_mut(Tid(tid))?;
                self.rows[tid as usize] = None;
                self.live -= 1;
            }
        }
        self.version += 1;
        Ok(())
    }

    fn append_log(&mut self, entries: &[LogEntry]) -> Result<()> {
        if let Some(log) = self.log.as_mut() {
            for e in entries {
                serde_json::to_writer(&mut *log, e)?;
                log.write_all(b"\n")?;
            }
            log.flush()?;
        }
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn log_path(&self) -> Option<&Path> {
        self.log_path.as_deref()
    }

    /// Number of live records.
    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// The tid the next insert will receive.
    pub fn next_tid(&self) -> Tid {
        Tid(self.rows.len() as u64)
    }

    /// Incremented by every mutation; used to detect stale derived data.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn counters(&self) -> &AccessCounters {
        &self.counters
    }

    pub fn set_row_buffer(&mut self, capacity: usize) {
        self.row_buffer = capacity.max(1);
    }

    /// Scan-based access: live records satisfying `pred`, in tid order.
    pub fn scan<'a, 'p>(&'a self, pred: Option<&'p Predicate>) -> Scan<'a, 'p> {
        self.counters.scan_started();
        Scan {
            coll: self,
            pred,
            cursor: 0,
            buffer: RowBuffer::new(self.row_buffer),
        }
    }

    /// Tid-based access, O(1).
    pub fn fetch(&self, tid: Tid) -> Result<RecordRef<'_>> {
        self.counters.tid_fetched();
        self.peek(tid)
    }

    /// Like [`Collection::fetch`] but not counted; for maintenance paths.
    pub fn peek(&self, tid: Tid) -> Result<RecordRef<'_>> {
        match self.rows.get(tid.0 as usize) {
            Some(Some(values)) => Ok(RecordRef { tid, values }),
            _ => Err(Error::not_found(format!("tid {tid} in {}", self.schema.name))),
        }
    }

    pub fn is_live(&self, tid: Tid) -> bool {
        matches!(self.rows.get(tid.0 as usize), Some(Some(_)))
    }

    /// Uncounted iteration over live records, for maintenance paths.
    pub fn iter_live(&self) -> impl Iterator<Item = RecordRef<'_>> {
        self.rows.iter().enumerate().filter_map(|(i, r)| {
            r.as_ref().map(|values| RecordRef {
                tid: Tid(i as u64),
                values,
            })
        })
    }

    /// Validate and widen every row before anything is written, so a batch
    /// either fully succeeds or leaves the collection untouched.
    pub fn conform_batch(&self, rows: &mut [Vec<Value>]) -> Result<()> {
        for row in rows.iter_mut() {
            self.schema.conform(row)?;
        }
        Ok(())
    }

    pub fn insert(&mut self, mut rows: Vec<Vec<Value>>) -> Result<Vec<Tid>> {
        self.conform_batch(&mut rows)?;
        let first = self.rows.len() as u64;
        let entries: Vec<LogEntry> = rows
            .into_iter()
            .enumerate()
            .map(|(i, v)| LogEntry::Insert(first + i as u64, v))
            .collect();
        self.append_log(&entries)?;
        let mut tids = Vec::with_capacity(entries.len());
        for e in entries {
            if let LogEntry::Insert(tid, _) = &e {
                tids.push(Tid(*tid));
            }
            self.apply(e)?;
        }
        Ok(tids)
    }

    pub fn update(&mut self, tid: Tid, mut values: Vec<Value>) -> Result<()> {
        self.slot_mut(tid)?;
        self.schema.conform(&mut values)?;
        let entry = LogEntry::Update(tid.0, values);
        self.append_log(std::slice::from_ref(&entry))?;
        self.apply(entry)
    }

    /// Tombstone `tid`; returns the removed values.
    pub fn delete(&mut self, tid: Tid) -> Result<Vec<Value>> {
        let old = self.slot_mut(tid)?.clone();
        let entry = LogEntry::Delete(tid.0);
        self.append_log(std::slice::from_ref(&entry))?;
        self.apply(entry)?;
        Ok(old)
    }

    fn slot_mut(&mut self, tid: Tid) -> Result<&mut Vec<Value>> {
        let name = &self.schema.name;
        match self.rows.get_mut(tid.0 as usize) {
            Some(Some(values)) => Ok(values),
            _ => Err(Error::not_found(format!("tid {tid} in {name}"))),
        }
    }
}

/// Bounded staging area between storage and the consuming operator. Every
/// buffered record already satisfies the scan predicate.
#[derive(Debug)]
pub struct RowBuffer<'a> {
    capacity: usize,
    rows: VecDeque<RecordRef<'a>>,
}

impl<'a> RowBuffer<'a> {
    pub fn new(capacity: usize) -> Self {
        RowBuffer {
            capacity: capacity.max(1),
            rows: VecDeque::with_capacity(capacity.clamp(1, DEFAULT_ROW_BUFFER)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    fn is_full(&self) -> bool {
        self.rows.len() >= self.capacity
    }
}

/// Stream returned by [`Collection::scan`]; holds a shared borrow of the
/// collection for its lifetime.
pub struct Scan<'a, 'p> {
    coll: &'a Collection,
    pred: Option<&'p Predicate>,
    cursor: usize,
    buffer: RowBuffer<'a>,
}

impl<'a> Scan<'a, '_> {
    fn refill(&mut self) {
        let rows = &self.coll.rows;
        let mut examined = 0u64;
        while self.cursor < rows.len() && !self.buffer.is_full() {
            let tid = self.cursor;
            self.cursor += 1;
            if let Some(values) = &rows[tid] {
                examined += 1;
                if self.pred.is_none_or(|p| p.eval(values, None)) {
                    self.buffer.rows.push_back(RecordRef {
                        tid: Tid(tid as u64),
                        values,
                    });
                }
            }
        }
        self.coll.counters.rows_scanned(examined);
    }
}

impl<'a> Iterator for Scan<'a, '_> {
    type Item = RecordRef<'a>;

    fn next(&mut self) -> Option<RecordRef<'a>> {
        if self.buffer.rows.is_empty() {
            self.refill();
        }
        self.buffer.rows.pop_front()
    }
}
