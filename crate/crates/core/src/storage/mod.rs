//! Record storage, topology storage and their file formats.

pub mod io;
pub mod record;
pub mod topology;

use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};

pub use record::{Collection, RecordRef, RowBuffer, DEFAULT_ROW_BUFFER};
pub use topology::{AdjacencyGraph, Direction, EdgeMap, Mappers, Nid, Topology};

/// Instrumented access counters, shared by readers.
#[derive(Debug, Default)]
pub struct AccessCounters {
    scans: AtomicU64,
    rows_scanned: AtomicU64,
    tid_fetches: AtomicU64,
}

impl AccessCounters {
    pub fn scan_started(&self) {
        self.scans.fetch_add(1, Ordering::Relaxed);
    }

    pub fn rows_scanned(&self, n: u64) {
        self.rows_scanned.fetch_add(n, Ordering::Relaxed);
    }

    pub fn tid_fetched(&self) {
        self.tid_fetches.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> AccessStats {
        AccessStats {
            scans: self.scans.load(Ordering::Relaxed),
            rows_scanned: self.rows_scanned.load(Ordering::Relaxed),
            tid_fetches: self.tid_fetches.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.scans.store(0, Ordering::Relaxed);
        self.rows_scanned.store(0, Ordering::Relaxed);
        self.tid_fetches.store(0, Ordering::Relaxed);
    }
}

/// A point-in-time copy of [`AccessCounters`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccessStats {
    pub scans: u64,
    pub rows_scanned: u64,
    pub tid_fetches: u64,
}

impl AccessStats {
    /// Records read from storage by either access method.
    pub fn record_fetches(&self) -> u64 {
        self.rows_scanned + self.tid_fetches
    }
}

impl std::ops::Add for AccessStats {
    type Output = AccessStats;

    fn add(self, rhs: AccessStats) -> AccessStats {
        AccessStats {
            scans: self.scans + rhs.scans,
            rows_scanned: self.rows_scanned + rhs.rows_scanned,
            tid_fetches: self.tid_fetches + rhs.tid_fetches,
        }
    }
}

impl Sub for AccessStats {
    type Output = AccessStats;

    fn sub(self, rhs: AccessStats) -> AccessStats {
        AccessStats {
            scans: self.scans.saturating_sub(rhs.scans),
            rows_scanned: self.rows_scanned.saturating_sub(rhs.rows_scanned),
            tid_fetches: self.tid_fetches.saturating_sub(rhs.tid_fetches),
        }
    }
}
